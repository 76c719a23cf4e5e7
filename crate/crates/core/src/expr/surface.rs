//! Affine constraint surfaces and normal forms modulo a surface.
//!
//! A surface is a mutually reduced set of affine forms, each solved for one
//! pivot variable. Reducing an expression substitutes every pivot at once;
//! because rows are kept mutually reduced the substitution is idempotent.

use std::collections::BTreeMap;

use super::{AffineForm, Expression, VarKind, Variable};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// How the pivot variable of a new row is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotPolicy {
    /// Largest absolute coefficient; ties prefer coordinates over momenta,
    /// then the lower-ordered variable. This is the elimination default: it
    /// solves a constraint for its dominant variable.
    MaxCoefficient,
    /// First momentum in chart order, else first coordinate. Produces the
    /// echelon form used to present constraint sets.
    MomentumFirst,
    /// First coordinate in chart order, else first momentum. Produces the
    /// substitutions that rewrite coordinates trapped inside trigonometric
    /// arguments in terms of momenta.
    CoordinateFirst,
}

impl PivotPolicy {
    fn pick<'a, S: Scalar>(
        &self,
        form: &'a AffineForm<S>,
        allowed: Option<&dyn Fn(&Variable) -> bool>,
    ) -> Option<&'a Variable> {
        let candidates = form
            .coeffs()
            .filter(|(v, _)| allowed.is_none_or(|ok| ok(v)));
        match self {
            PivotPolicy::MaxCoefficient => {
                let mut best: Option<(&Variable, S)> = None;
                for (v, c) in candidates {
                    let mag = c.abs();
                    match &best {
                        Some((bv, bm)) if mag < *bm || (mag == *bm && *bv < v) => {}
                        _ => best = Some((v, mag)),
                    }
                }
                best.map(|(v, _)| v)
            }
            PivotPolicy::MomentumFirst => candidates
                .map(|(v, _)| v)
                .min_by_key(|v| (v.kind() != VarKind::Momentum, v.index())),
            PivotPolicy::CoordinateFirst => candidates
                .map(|(v, _)| v)
                .min_by_key(|v| (v.kind() != VarKind::Coordinate, v.index())),
        }
    }
}

/// Result of offering a form to a surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Admission<S: Scalar> {
    /// The form enlarged the surface; the reduced, admitted row is returned.
    Inserted(AffineForm<S>),
    /// The form already vanishes on the surface.
    Implied,
    /// No admissible pivot variable was available in the reduced form.
    NoPivot(AffineForm<S>),
}

#[derive(Debug, Clone)]
struct Row<S> {
    pivot: Variable,
    /// Replacement for the pivot; contains no pivot of any row.
    rhs: AffineForm<S>,
}

#[derive(Debug, Clone)]
pub struct ReductionSurface<S: Scalar> {
    policy: PivotPolicy,
    rows: Vec<Row<S>>,
}

impl<S: Scalar> ReductionSurface<S> {
    pub fn new(policy: PivotPolicy) -> Self {
        ReductionSurface { policy, rows: Vec::new() }
    }

    /// Builds a surface from forms required to be linearly independent.
    pub fn with_forms(policy: PivotPolicy, forms: &[AffineForm<S>]) -> Result<Self> {
        let mut surface = ReductionSurface::new(policy);
        for f in forms {
            match surface.admit(f, None)? {
                Admission::Inserted(_) => {}
                Admission::Implied => {
                    return Err(Error::DependentConstraintSet(format!("{f}")));
                }
                Admission::NoPivot(_) => unreachable!("unrestricted pivot"),
            }
        }
        Ok(surface)
    }

    /// Reduces `form`, then either records it (solved for a pivot chosen by
    /// the policy among `allowed` variables) or reports why not.
    pub fn admit(
        &mut self,
        form: &AffineForm<S>,
        allowed: Option<&dyn Fn(&Variable) -> bool>,
    ) -> Result<Admission<S>> {
        let reduced = self.reduce_form(form);
        if reduced.is_zero() {
            return Ok(Admission::Implied);
        }
        if reduced.is_constant() {
            return Err(Error::InconsistentConstraints(format!("{form}")));
        }
        let Some(pivot) = self.policy.pick(&reduced, allowed) else {
            return Ok(Admission::NoPivot(reduced));
        };
        let pivot = pivot.clone();
        let c = reduced.coeff(&pivot);
        // pivot := -(reduced - c * pivot) / c
        let mut rest = reduced.clone();
        rest.add_term(&pivot, -c.clone());
        let rhs = rest.scale(&(-S::one() / c));
        for row in &mut self.rows {
            row.rhs = row.rhs.substitute(&pivot, &rhs);
        }
        self.rows.push(Row { pivot, rhs });
        Ok(Admission::Inserted(reduced))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn pivots(&self) -> impl Iterator<Item = &Variable> {
        self.rows.iter().map(|r| &r.pivot)
    }

    pub fn is_pivot(&self, v: &Variable) -> bool {
        self.rows.iter().any(|r| &r.pivot == v)
    }

    /// pivot -> replacement, fully reduced.
    pub fn substitution_map(&self) -> BTreeMap<Variable, AffineForm<S>> {
        self.rows
            .iter()
            .map(|r| (r.pivot.clone(), r.rhs.clone()))
            .collect()
    }

    /// Normal form of an affine function on the surface.
    pub fn reduce_form(&self, f: &AffineForm<S>) -> AffineForm<S> {
        let mut out = f.clone();
        for row in &self.rows {
            out = out.substitute(&row.pivot, &row.rhs);
        }
        out
    }

    /// Normal form of an expression on the surface; idempotent.
    pub fn reduce(&self, e: &Expression<S>) -> Result<Expression<S>> {
        e.substitute(&self.substitution_map())
    }

    /// The rows as affine forms `pivot - rhs` (vanishing on the surface),
    /// in insertion order.
    pub fn row_forms(&self) -> Vec<AffineForm<S>> {
        self.rows
            .iter()
            .map(|r| AffineForm::var(&r.pivot).sub(&r.rhs))
            .collect()
    }
}

/// Normal form of `a` on the surface `forms = 0`.
///
/// The set must be linearly independent; each echelonized element is solved
/// for its dominant variable and substituted.
pub fn reduce_modulo<S: Scalar>(
    a: &Expression<S>,
    forms: &[AffineForm<S>],
) -> Result<Expression<S>> {
    ReductionSurface::with_forms(PivotPolicy::MaxCoefficient, forms)?.reduce(a)
}
