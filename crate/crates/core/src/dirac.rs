//! Constraint-set closure under time persistence, multiplier determination,
//! first/second-class splitting, and degree-of-freedom counting.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::solve::solve_with_expression_rhs;
use crate::expr::{
    poisson_bracket, AffineForm, Expression, PhaseSpaceChart, PivotPolicy, ReductionSurface,
};
use crate::legendre::{Constraint, ConstraintClass, Generation};
use crate::linalg::{first_nonsingular_principal_subset, Matrix};
use crate::parser::StructuredLagrangian;
use crate::scalar::Scalar;

/// A first-class direction: an explicit linear combination of the closure's
/// constraints that commutes weakly with all of them.
#[derive(Debug, Clone)]
pub struct FirstClassConstraint<S: Scalar> {
    pub label: String,
    /// Coefficients over the closure's constraint list.
    pub combo: Vec<S>,
    pub constraint: Constraint<S>,
}

/// The closed constraint set with its bracket matrix and multiplier solution.
#[derive(Debug, Clone)]
pub struct ConstraintClosure<S: Scalar> {
    /// Primaries first, then secondaries in order of discovery.
    pub constraints: Vec<Constraint<S>>,
    /// Solved multipliers (undetermined ones set to zero), keyed `alphaK`
    /// matching constraint `chiK`.
    pub determined_multipliers: BTreeMap<String, Expression<S>>,
    /// Null directions of the bracket matrix: multiplier combinations left
    /// free by the dynamics, one per first-class constraint.
    pub free_multiplier_directions: Vec<Vec<S>>,
    /// `C[k][l] = {chi_k, chi_l}` reduced modulo the surface.
    pub c_matrix: Matrix<S>,
    /// Indices (into `constraints`) of the chosen second-class complement.
    pub scc_indices: Vec<usize>,
    /// First-class basis of the left null space of `C`.
    pub fcc: Vec<FirstClassConstraint<S>>,
}

impl<S: Scalar> ConstraintClosure<S> {
    pub fn bodies(&self) -> Vec<AffineForm<S>> {
        self.constraints.iter().map(|c| c.body.clone()).collect()
    }

    pub fn scc_constraints(&self) -> Vec<Constraint<S>> {
        self.scc_indices.iter().map(|&i| self.constraints[i].clone()).collect()
    }

    /// Elimination surface spanned by the whole closure.
    pub fn surface(&self) -> Result<ReductionSurface<S>> {
        let mut surface = ReductionSurface::new(PivotPolicy::MaxCoefficient);
        for c in &self.constraints {
            surface.admit(&c.body, None)?;
        }
        Ok(surface)
    }
}

/// Iterates time persistence `{chi_k, H + sum(alpha_l chi_l)} ~ 0`: each round
/// solves for the determinable multipliers and admits every independent
/// undeterminable residue as a new secondary constraint, until the set closes.
pub fn stabilize<S: Scalar>(
    h: &Expression<S>,
    primaries: &[Constraint<S>],
    chart: &PhaseSpaceChart,
) -> Result<ConstraintClosure<S>> {
    let mut constraints: Vec<Constraint<S>> = primaries.to_vec();
    let bound = 2 * chart.phase_dim().max(1);

    for _round in 0..bound {
        if constraints.is_empty() {
            return Ok(ConstraintClosure {
                constraints,
                determined_multipliers: BTreeMap::new(),
                free_multiplier_directions: Vec::new(),
                c_matrix: Matrix::zeros(0, 0),
                scc_indices: Vec::new(),
                fcc: Vec::new(),
            });
        }
        let mut surface = ReductionSurface::new(PivotPolicy::MaxCoefficient);
        for c in &constraints {
            surface.admit(&c.body, None)?;
        }
        let m = constraints.len();
        let c_matrix = bracket_matrix(&constraints, &surface, chart)?;
        // One persistence equation per constraint: sum_l C[k][l] alpha_l = b_k.
        let b: Vec<Expression<S>> = constraints
            .iter()
            .map(|c| {
                surface
                    .reduce(&poisson_bracket(&c.expression(), h, chart))
                    .map(|e| e.neg())
            })
            .collect::<Result<_>>()?;
        let solution = solve_with_expression_rhs(&c_matrix, &b);

        let mut grew = false;
        for residual in &solution.residuals {
            if residual.is_zero() {
                continue;
            }
            let Some(form) = residual.as_affine() else {
                return Err(Error::NonAffineSecondaryConstraint(residual.to_string()));
            };
            match surface.admit(&form, None)? {
                crate::expr::Admission::Inserted(reduced) => {
                    let pivot = surface.pivots().last().cloned().expect("row just added");
                    constraints.push(Constraint::new(
                        format!("chi{}", constraints.len() + 1),
                        reduced.normalized_signed_by(&pivot),
                        Generation::Secondary,
                    ));
                    grew = true;
                }
                crate::expr::Admission::Implied => {}
                crate::expr::Admission::NoPivot(_) => unreachable!("unrestricted pivot"),
            }
        }

        if !grew {
            let mut determined = BTreeMap::new();
            for p in &solution.pivots {
                let label = format!("alpha{}", p.column + 1);
                // Free multipliers are set to zero; what is left is forced.
                determined.insert(label, p.value.clone());
            }
            let free_multiplier_directions = solution
                .free_columns
                .iter()
                .map(|&f| {
                    let mut v = vec![S::zero(); m];
                    v[f] = S::one();
                    for p in &solution.pivots {
                        if let Some((_, coeff)) =
                            p.free_coeffs.iter().find(|(c, _)| *c == f)
                        {
                            v[p.column] = -coeff.clone();
                        }
                    }
                    v
                })
                .collect();
            return Ok(ConstraintClosure {
                constraints,
                determined_multipliers: determined,
                free_multiplier_directions,
                c_matrix,
                scc_indices: Vec::new(),
                fcc: Vec::new(),
            });
        }
    }
    Err(Error::NonTerminating { bound })
}

/// Pairwise bracket matrix reduced modulo the surface; entries must reduce to
/// constants (guaranteed for affine constraints).
fn bracket_matrix<S: Scalar>(
    constraints: &[Constraint<S>],
    surface: &ReductionSurface<S>,
    chart: &PhaseSpaceChart,
) -> Result<Matrix<S>> {
    let m = constraints.len();
    let mut c = Matrix::zeros(m, m);
    for k in 0..m {
        for l in k + 1..m {
            let pb = poisson_bracket(
                &constraints[k].expression(),
                &constraints[l].expression(),
                chart,
            );
            let reduced = surface.reduce(&pb)?;
            let Some(value) = reduced.as_constant() else {
                return Err(Error::NonConstantBracketMatrix {
                    a: constraints[k].label.clone(),
                    b: constraints[l].label.clone(),
                    value: reduced.to_string(),
                });
            };
            c[(k, l)] = value.clone();
            c[(l, k)] = -value;
        }
    }
    Ok(c)
}

/// Splits the closure: first-class directions are the reduced left null space
/// of the bracket matrix; the second-class complement is the lowest-index
/// constraint subset with nonsingular mutual brackets (overridable by label).
pub fn classify<S: Scalar>(
    mut closure: ConstraintClosure<S>,
    scc_choice: Option<&[String]>,
) -> Result<ConstraintClosure<S>> {
    let m = closure.constraints.len();
    let c = &closure.c_matrix;
    let null_combos = c.left_null_space();
    let scc_count = m - null_combos.len();
    if !scc_count.is_multiple_of(2) {
        return Err(Error::Internal(format!(
            "odd second-class count {scc_count}; antisymmetric rank must be even"
        )));
    }

    let scc_indices = match scc_choice {
        Some(labels) => {
            let mut idx = Vec::new();
            for lab in labels {
                let Some(i) =
                    closure.constraints.iter().position(|cst| &cst.label == lab)
                else {
                    return Err(Error::InvalidSccChoice(format!("unknown constraint `{lab}`")));
                };
                if idx.contains(&i) {
                    return Err(Error::InvalidSccChoice(format!("duplicate `{lab}`")));
                }
                idx.push(i);
            }
            idx.sort_unstable();
            if idx.len() != scc_count {
                return Err(Error::InvalidSccChoice(format!(
                    "need {scc_count} second-class constraints, got {}",
                    idx.len()
                )));
            }
            if c.principal_submatrix(&idx).det().is_zero() {
                return Err(Error::InvalidSccChoice(
                    "chosen subset has a singular bracket matrix".into(),
                ));
            }
            idx
        }
        None => first_nonsingular_principal_subset(c, scc_count).ok_or_else(|| {
            Error::Internal("no nonsingular second-class complement found".into())
        })?,
    };

    for (i, cst) in closure.constraints.iter_mut().enumerate() {
        cst.class = if scc_indices.contains(&i) {
            ConstraintClass::Second
        } else {
            // Equivalent to a first-class combination once the second-class
            // set is imposed strongly.
            ConstraintClass::First
        };
    }

    let fcc = null_combos
        .into_iter()
        .enumerate()
        .map(|(i, combo)| {
            let mut body = AffineForm::zero();
            let mut generation = Generation::Primary;
            for (k, coeff) in combo.iter().enumerate() {
                if coeff.is_zero() {
                    continue;
                }
                body = body.add(&closure.constraints[k].body.scale(coeff));
                if closure.constraints[k].generation == Generation::Secondary {
                    generation = Generation::Secondary;
                }
            }
            let label = format!("psi{}", i + 1);
            let mut constraint = Constraint::new(label.clone(), body, generation);
            constraint.class = ConstraintClass::First;
            FirstClassConstraint { label, combo, constraint }
        })
        .collect();

    closure.scc_indices = scc_indices;
    closure.fcc = fcc;
    Ok(closure)
}

/// Physical degree-of-freedom count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofCount<S> {
    pub phase: i64,
    pub config: S,
    /// An odd phase-space count signals a misclassification upstream.
    pub odd_warning: bool,
}

pub fn dof_count<S: Scalar>(
    closure: &ConstraintClosure<S>,
    chart: &PhaseSpaceChart,
) -> DofCount<S> {
    let phase =
        chart.phase_dim() as i64 - 2 * closure.fcc.len() as i64 - closure.scc_indices.len() as i64;
    DofCount {
        phase,
        config: S::ratio(phase, 2),
        odd_warning: phase.rem_euclid(2) == 1,
    }
}

/// Rank diagnostics for the kinetic and bracket matrices, with the caveat
/// that the classification holds only at the exact parameter values used.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DiagnosticReport {
    pub kinetic_rank: usize,
    pub kinetic_nullity: usize,
    pub bracket_rank: usize,
    pub n_constraints: usize,
    pub n_primary: usize,
    pub n_secondary: usize,
    pub n_first_class: usize,
    pub n_second_class: usize,
    /// Hard anomalies; empty on a healthy analysis.
    pub flags: Vec<String>,
    /// Standing caveats about interpreting the result.
    pub notes: Vec<String>,
}

pub fn singularity_scan<S: Scalar>(
    sl: &StructuredLagrangian<S>,
    closure: &ConstraintClosure<S>,
) -> DiagnosticReport {
    let kinetic_rank = sl.kinetic.rank();
    let bracket_rank = closure.c_matrix.rank();
    let n_scc = closure.scc_indices.len();
    let mut flags = Vec::new();
    if !bracket_rank.is_multiple_of(2) {
        flags.push(format!("bracket matrix rank {bracket_rank} is odd"));
    }
    if !closure.scc_indices.is_empty() && bracket_rank != n_scc {
        flags.push(format!(
            "bracket rank {bracket_rank} disagrees with second-class count {n_scc}"
        ));
    }
    let notes = vec![
        "classification is valid only for the exact parameter values bound in this analysis; \
         parameter limits (e.g. a capacitance going to zero) can change constraint classes and \
         require a fresh analysis, not extrapolation"
            .to_string(),
    ];
    DiagnosticReport {
        kinetic_rank,
        kinetic_nullity: sl.chart.len() - kinetic_rank,
        bracket_rank,
        n_constraints: closure.constraints.len(),
        n_primary: closure
            .constraints
            .iter()
            .filter(|c| c.generation == Generation::Primary)
            .count(),
        n_secondary: closure
            .constraints
            .iter()
            .filter(|c| c.generation == Generation::Secondary)
            .count(),
        n_first_class: closure.fcc.len(),
        n_second_class: n_scc,
        flags,
        notes,
    }
}

#[cfg(test)]
mod tests;
