//! Dirac brackets, strong elimination through the second-class set, gauge
//! fixing of first-class constraints, and Darboux construction of canonical
//! pairs.

use std::collections::BTreeMap;

use crate::dirac::ConstraintClosure;
use crate::error::{Error, Result};
use crate::expr::{
    poisson_bracket, Admission, AffineForm, Expression, PhaseSpaceChart, PivotPolicy,
    ReductionSurface, Variable,
};
use crate::legendre::{Constraint, ConstraintClass, Generation};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// A gauge condition paired with the first-class constraint it fixes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaugeCondition<S: Scalar> {
    pub body: AffineForm<S>,
    pub fixes: String,
}

/// The second-class structure: constraints, inverted bracket matrix, the
/// variables surviving elimination, and their mutual Dirac brackets.
#[derive(Debug, Clone)]
pub struct DiracStructure<S: Scalar> {
    chart: PhaseSpaceChart,
    /// Second-class set (gauge pairs included once fixed).
    scc: Vec<Constraint<S>>,
    /// Exact inverse of the second-class bracket matrix.
    inverse: Matrix<S>,
    /// Brackets of each chart variable with each second-class constraint.
    var_brackets: BTreeMap<Variable, Vec<S>>,
    /// Elimination surface over the full constraint span (plus gauges).
    surface: ReductionSurface<S>,
    /// Variables kept by the elimination.
    kept: Vec<Variable>,
    /// Pairwise Dirac brackets of the kept variables.
    omega: Matrix<S>,
}

impl<S: Scalar> DiracStructure<S> {
    /// Builds the structure from a classified closure. When `keep` is absent
    /// the eliminated variables are the elimination pivots of the
    /// second-class system under the default policy.
    pub fn new(
        closure: &ConstraintClosure<S>,
        chart: &PhaseSpaceChart,
        keep: Option<&[Variable]>,
    ) -> Result<Self> {
        Self::assemble(
            closure.scc_constraints(),
            closure.bodies(),
            chart,
            keep,
        )
    }

    fn assemble(
        scc: Vec<Constraint<S>>,
        full_span: Vec<AffineForm<S>>,
        chart: &PhaseSpaceChart,
        keep: Option<&[Variable]>,
    ) -> Result<Self> {
        // Solve the second-class system for the eliminated variables first;
        // the surviving variables define the chart of the reduced theory.
        let mut elim = ReductionSurface::new(PivotPolicy::MaxCoefficient);
        for cst in &scc {
            let allowed = keep.map(|kept| move |v: &Variable| !kept.contains(v));
            let admission = match &allowed {
                Some(f) => elim.admit(&cst.body, Some(f))?,
                None => elim.admit(&cst.body, None)?,
            };
            match admission {
                Admission::Inserted(_) => {}
                Admission::Implied => {
                    return Err(Error::DependentConstraintSet(cst.body.to_string()))
                }
                Admission::NoPivot(_) => {
                    let suggestion = Self::default_kept(&scc, chart)?;
                    return Err(Error::UnsolvableEliminationChoice {
                        keepable: suggestion
                            .iter()
                            .map(|v| v.name().to_string())
                            .collect::<Vec<_>>()
                            .join(", "),
                    });
                }
            }
        }
        let kept: Vec<Variable> = chart
            .all_variables()
            .filter(|v| !elim.is_pivot(v))
            .cloned()
            .collect();

        // Normal forms modulo the full span, preferring to express results in
        // the kept variables. A span direction supported entirely on kept
        // variables (an unfixed first-class relation) falls back to an
        // unrestricted pivot.
        let mut span_surface = elim.clone();
        for f in &full_span {
            let allowed = |v: &Variable| !kept.contains(v);
            if let Admission::NoPivot(_) = span_surface.admit(f, Some(&allowed))? {
                span_surface.admit(f, None)?;
            }
        }

        let m = scc.len();
        let mut c = Matrix::zeros(m, m);
        for k in 0..m {
            for l in k + 1..m {
                let pb = poisson_bracket(&scc[k].expression(), &scc[l].expression(), chart);
                let value = span_surface
                    .reduce(&pb)?
                    .as_constant()
                    .ok_or_else(|| Error::NonConstantBracketMatrix {
                        a: scc[k].label.clone(),
                        b: scc[l].label.clone(),
                        value: pb.to_string(),
                    })?;
                c[(k, l)] = value.clone();
                c[(l, k)] = -value;
            }
        }
        let inverse = c
            .inverse()
            .ok_or_else(|| Error::Internal("singular second-class bracket matrix".into()))?;
        if c.mul(&inverse) != Matrix::identity(m) {
            return Err(Error::Internal("inverse verification failed".into()));
        }

        let var_brackets: BTreeMap<Variable, Vec<S>> = chart
            .all_variables()
            .map(|v| {
                let row = scc
                    .iter()
                    .map(|cst| {
                        poisson_bracket(&Expression::var(v), &cst.expression(), chart)
                            .as_constant()
                            .expect("bracket of a variable with an affine form is constant")
                    })
                    .collect();
                (v.clone(), row)
            })
            .collect();

        let mut structure = DiracStructure {
            chart: chart.clone(),
            scc,
            inverse,
            var_brackets,
            surface: span_surface,
            kept,
            omega: Matrix::zeros(0, 0),
        };
        let n = structure.kept.len();
        let mut omega = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let value = structure
                    .variable_bracket(&structure.kept[i], &structure.kept[j])?;
                omega[(i, j)] = value.clone();
                omega[(j, i)] = -value;
            }
        }
        structure.omega = omega;
        Ok(structure)
    }

    fn default_kept(scc: &[Constraint<S>], chart: &PhaseSpaceChart) -> Result<Vec<Variable>> {
        let mut elim = ReductionSurface::new(PivotPolicy::MaxCoefficient);
        for cst in scc {
            elim.admit(&cst.body, None)?;
        }
        Ok(chart
            .all_variables()
            .filter(|v| !elim.is_pivot(v))
            .cloned()
            .collect())
    }

    pub fn chart(&self) -> &PhaseSpaceChart {
        &self.chart
    }

    pub fn second_class(&self) -> &[Constraint<S>] {
        &self.scc
    }

    pub fn inverse_matrix(&self) -> &Matrix<S> {
        &self.inverse
    }

    pub fn kept_variables(&self) -> &[Variable] {
        &self.kept
    }

    pub fn omega(&self) -> &Matrix<S> {
        &self.omega
    }

    /// pivot -> replacement map solving the second-class (and gauge) system
    /// for the eliminated variables.
    pub fn substitution_map(&self) -> BTreeMap<Variable, AffineForm<S>> {
        let mut elim = ReductionSurface::new(PivotPolicy::MaxCoefficient);
        let keep = &self.kept;
        for cst in &self.scc {
            let allowed = |v: &Variable| !keep.contains(v);
            elim.admit(&cst.body, Some(&allowed)).expect("system already solved once");
        }
        elim.substitution_map()
    }

    /// The Dirac bracket `{a, b} - {a, chi_r} Cinv[r][s] {chi_s, b}`, reduced
    /// modulo the full constraint surface.
    pub fn dirac_bracket(&self, a: &Expression<S>, b: &Expression<S>) -> Result<Expression<S>> {
        let mut out = poisson_bracket(a, b, &self.chart);
        for (r, chi_r) in self.scc.iter().enumerate() {
            let left = poisson_bracket(a, &chi_r.expression(), &self.chart);
            if left.is_zero() {
                continue;
            }
            for (s, chi_s) in self.scc.iter().enumerate() {
                let w = self.inverse[(r, s)].clone();
                if w.is_zero() {
                    continue;
                }
                let right = poisson_bracket(&chi_s.expression(), b, &self.chart);
                if right.is_zero() {
                    continue;
                }
                out = out.sub(&left.mul(&right).scale(&w));
            }
        }
        self.surface.reduce(&out)
    }

    /// Dirac bracket of two chart variables, always a constant.
    pub fn variable_bracket(&self, a: &Variable, b: &Variable) -> Result<S> {
        let canonical = match (a.kind(), b.kind()) {
            _ if self.chart.conjugate(a) == Some(b) && !a.is_momentum() => S::one(),
            _ if self.chart.conjugate(a) == Some(b) && a.is_momentum() => -S::one(),
            _ => S::zero(),
        };
        let ra = self.var_brackets.get(a).ok_or_else(|| {
            Error::UnboundVariable(a.name().to_string())
        })?;
        let rb = self.var_brackets.get(b).ok_or_else(|| {
            Error::UnboundVariable(b.name().to_string())
        })?;
        let mut correction = S::zero();
        for r in 0..self.scc.len() {
            if ra[r].is_zero() {
                continue;
            }
            for s in 0..self.scc.len() {
                // {chi_s, b} = -{b, chi_s}
                correction = correction
                    + ra[r].clone() * self.inverse[(r, s)].clone() * (-rb[s].clone());
            }
        }
        Ok(canonical - correction)
    }

    /// Strong elimination: substitutes the solved variables into `h` and
    /// returns the reduced expression with the substitution map.
    pub fn eliminate(
        &self,
        h: &Expression<S>,
    ) -> Result<(Expression<S>, BTreeMap<Variable, AffineForm<S>>)> {
        let map = self.substitution_map();
        Ok((h.substitute(&map)?, map))
    }
}

/// Checks admissibility and appends each (first-class, gauge) pair to the
/// second-class set, rebuilding the bracket structure.
pub fn gauge_fix<S: Scalar>(
    d: &DiracStructure<S>,
    closure: &ConstraintClosure<S>,
    gauges: &[AffineForm<S>],
    keep: Option<&[Variable]>,
) -> Result<DiracStructure<S>> {
    let fccs = &closure.fcc;
    if gauges.len() != fccs.len() {
        return Err(Error::GaugeCountMismatch { expected: fccs.len(), got: gauges.len() });
    }
    if fccs.is_empty() {
        return Ok(d.clone());
    }
    // Extended bracket matrix over (first-class set, gauges) must be
    // nonsingular; brackets are taken modulo the existing surface.
    let f = fccs.len();
    let mut ext = Matrix::zeros(2 * f, 2 * f);
    let entry = |a: &Expression<S>, b: &Expression<S>| -> Result<S> {
        d.surface
            .reduce(&poisson_bracket(a, b, &d.chart))?
            .as_constant()
            .ok_or_else(|| Error::Internal("non-constant gauge bracket".into()))
    };
    let exprs: Vec<Expression<S>> = fccs
        .iter()
        .map(|fc| fc.constraint.expression())
        .chain(gauges.iter().map(AffineForm::to_expression))
        .collect();
    for i in 0..2 * f {
        for j in i + 1..2 * f {
            let v = entry(&exprs[i], &exprs[j])?;
            ext[(i, j)] = v.clone();
            ext[(j, i)] = -v;
        }
    }
    if ext.det().is_zero() {
        return Err(Error::InadmissibleGauge(
            "extended bracket matrix over (first-class, gauge) pairs is singular".into(),
        ));
    }

    let mut scc = d.scc.clone();
    // The full span contains every closure constraint (first-class bodies
    // included) plus the gauge conditions.
    let mut span: Vec<AffineForm<S>> = closure.bodies();
    for (i, fc) in fccs.iter().enumerate() {
        let mut fixed = fc.constraint.clone();
        fixed.class = ConstraintClass::Second;
        scc.push(fixed);
        let label = format!("theta{}", i + 1);
        let mut gauge = Constraint::new(label, gauges[i].clone(), Generation::Secondary);
        gauge.class = ConstraintClass::Second;
        scc.push(gauge);
        span.push(gauges[i].clone());
    }
    DiracStructure::assemble(scc, span, &d.chart, keep)
}

/// One canonical pair of the reduced theory.
#[derive(Debug, Clone)]
pub struct CanonicalPair<S: Scalar> {
    pub q: Expression<S>,
    pub p: Expression<S>,
}

/// Darboux chart: canonical pairs plus central (Casimir) directions.
#[derive(Debug, Clone)]
pub struct CanonicalChart<S: Scalar> {
    pub pairs: Vec<CanonicalPair<S>>,
    pub casimirs: Vec<Expression<S>>,
}

/// Symplectic Gram-Schmidt over the kept variables: repeatedly take the
/// first direction with a partner, normalize the partner, and project the
/// rest; what remains central becomes a Casimir.
pub fn darboux<S: Scalar>(d: &DiracStructure<S>) -> CanonicalChart<S> {
    darboux_from_omega(d.omega(), d.kept_variables())
}

/// The Gram-Schmidt core, usable on any antisymmetric bracket matrix over
/// named directions.
pub fn darboux_from_omega<S: Scalar>(omega: &Matrix<S>, vars: &[Variable]) -> CanonicalChart<S> {
    let n = vars.len();
    let bracket = |u: &Vec<S>, v: &Vec<S>| -> S {
        let mut acc = S::zero();
        for i in 0..n {
            if u[i].is_zero() {
                continue;
            }
            for j in 0..n {
                acc = acc + u[i].clone() * omega[(i, j)].clone() * v[j].clone();
            }
        }
        acc
    };
    let mut remaining: Vec<Vec<S>> = (0..n)
        .map(|i| {
            let mut v = vec![S::zero(); n];
            v[i] = S::one();
            v
        })
        .collect();
    let mut pairs = Vec::new();
    let mut casimirs = Vec::new();
    while let Some(u) = remaining.first().cloned() {
        remaining.remove(0);
        let partner = remaining.iter().position(|v| !bracket(&u, v).is_zero());
        let Some(pi) = partner else {
            casimirs.push(u);
            continue;
        };
        let v = remaining.remove(pi);
        let scale = S::one() / bracket(&u, &v);
        let p: Vec<S> = v.iter().map(|c| c.clone() * scale.clone()).collect();
        // Project the remainder onto the symplectic complement of (u, p).
        for w in remaining.iter_mut() {
            let a = bracket(w, &p);
            let b = bracket(w, &u);
            for i in 0..n {
                let adj = w[i].clone() - a.clone() * u[i].clone() + b.clone() * p[i].clone();
                w[i] = adj;
            }
        }
        pairs.push((u, p));
    }
    let to_expr = |v: &Vec<S>| -> Expression<S> {
        let mut e = Expression::zero();
        for (i, c) in v.iter().enumerate() {
            if !c.is_zero() {
                e = e.add(&Expression::var(&vars[i]).scale(c));
            }
        }
        e
    };
    CanonicalChart {
        pairs: pairs
            .iter()
            .map(|(q, p)| CanonicalPair { q: to_expr(q), p: to_expr(p) })
            .collect(),
        casimirs: casimirs.iter().map(to_expr).collect(),
    }
}

impl<S: Scalar> CanonicalChart<S> {
    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }
}

impl<S: Scalar> DiracStructure<S> {
    /// Re-expresses `h` in the variables of a canonical chart, inverting the
    /// chart map exactly. The chart expressions are first reduced to the kept
    /// variables; central directions are not supported.
    pub fn express_in_chart(
        &self,
        h: &Expression<S>,
        chart: &CanonicalChart<S>,
    ) -> Result<(Expression<S>, PhaseSpaceChart)> {
        if !chart.casimirs.is_empty() {
            return Err(Error::Internal(
                "expressing through a chart with central directions is not supported".into(),
            ));
        }
        let names: Vec<String> = (1..=chart.pairs.len()).map(|i| format!("Q{i}")).collect();
        let fresh = PhaseSpaceChart::new(&names)?;
        let rows: Vec<AffineForm<S>> = chart
            .pairs
            .iter()
            .flat_map(|p| [&p.q, &p.p])
            .map(|e| {
                self.surface.reduce(e)?.as_affine().ok_or_else(|| {
                    Error::Internal(format!("chart entry is not affine: {e}"))
                })
            })
            .collect::<Result<_>>()?;
        let kept = &self.kept;
        let n = kept.len();
        if rows.len() != n {
            return Err(Error::Internal(format!(
                "chart dimension {} does not match kept variables {}",
                rows.len(),
                n
            )));
        }
        let offsets: Vec<S> = rows.iter().map(|f| f.constant_part().clone()).collect();
        let a = Matrix::from_fn(n, n, |i, j| rows[i].coeff(&kept[j]));
        let inv = a
            .inverse()
            .ok_or_else(|| Error::Internal("chart map is not invertible".into()))?;
        // kept_j = sum_i inv[j][i] * (chartvar_i - offset_i)
        let chart_vars: Vec<Variable> = (0..chart.pairs.len())
            .flat_map(|i| [fresh.coordinates()[i].clone(), fresh.momenta()[i].clone()])
            .collect();
        let reduced_h = self.surface.reduce(h)?;
        let mut map = BTreeMap::new();
        for (j, v) in kept.iter().enumerate() {
            let mut form = AffineForm::zero();
            for (i, cv) in chart_vars.iter().enumerate() {
                form.add_term(cv, inv[(j, i)].clone());
                form = form
                    .add(&AffineForm::constant(-(inv[(j, i)].clone() * offsets[i].clone())));
            }
            map.insert(v.clone(), form);
        }
        Ok((reduced_h.substitute(&map)?, fresh))
    }
}
