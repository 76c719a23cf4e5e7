//! Legendre stage: canonical momenta, primary constraints from the singular
//! kinetic matrix, and the base Hamiltonian with expressible velocities
//! eliminated.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::Result;
use crate::expr::solve::solve_with_expression_rhs;
use crate::expr::{AffineForm, Expression, PivotPolicy, ReductionSurface, VarKind, Variable};
use crate::parser::StructuredLagrangian;
use crate::scalar::Scalar;

/// Whether a constraint arose from the Legendre transform or from time
/// persistence of an earlier constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Generation {
    Primary,
    Secondary,
}

/// First-class constraints commute weakly with the whole set; second-class
/// ones carry an invertible mutual bracket matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintClass {
    Unclassified,
    First,
    Second,
}

/// An affine phase-space constraint, weakly zero on the physical surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint<S: Scalar> {
    pub label: String,
    pub body: AffineForm<S>,
    pub generation: Generation,
    pub class: ConstraintClass,
}

impl<S: Scalar> Constraint<S> {
    pub fn new(label: impl Into<String>, body: AffineForm<S>, generation: Generation) -> Self {
        Constraint {
            label: label.into(),
            body,
            generation,
            class: ConstraintClass::Unclassified,
        }
    }

    pub fn expression(&self) -> Expression<S> {
        self.body.to_expression()
    }
}

impl<S: Scalar> fmt::Display for Constraint<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.label, self.body)
    }
}

/// Definition of one canonical momentum, `p = (M q')_i + (B q + c)_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentumDefinition<S: Scalar> {
    pub momentum: Variable,
    /// Row of the kinetic matrix: coefficients of the velocities.
    pub velocity_part: Vec<S>,
    /// The velocity-free remainder `(B q + c)_i`.
    pub coordinate_part: AffineForm<S>,
}

impl<S: Scalar> fmt::Display for MomentumDefinition<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} =", self.momentum.name())?;
        let mut wrote = false;
        for (j, c) in self.velocity_part.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sep = if wrote { " + " } else { " " };
            write!(f, "{sep}{c}*q'{j}")?;
            wrote = true;
        }
        if !wrote || !self.coordinate_part.is_zero() {
            write!(f, "{}{}", if wrote { " + " } else { " " }, self.coordinate_part)?;
        }
        Ok(())
    }
}

/// Canonical momenta as functions of velocities and coordinates.
pub fn momenta<S: Scalar>(sl: &StructuredLagrangian<S>) -> Vec<MomentumDefinition<S>> {
    let n = sl.chart.len();
    (0..n)
        .map(|i| {
            let mut coordinate_part = AffineForm::constant(sl.linear[i].clone());
            for (j, q) in sl.chart.coordinates().iter().enumerate() {
                coordinate_part.add_term(q, sl.coupling[(i, j)].clone());
            }
            MomentumDefinition {
                momentum: sl.chart.momenta()[i].clone(),
                velocity_part: (0..n).map(|j| sl.kinetic[(i, j)].clone()).collect(),
                coordinate_part,
            }
        })
        .collect()
}

/// Primary constraints: one per null direction of the kinetic matrix,
/// echelonized with momentum variables as leading pivots. Empty exactly when
/// the kinetic matrix is nonsingular.
pub fn primary_constraints<S: Scalar>(
    sl: &StructuredLagrangian<S>,
) -> Result<Vec<Constraint<S>>> {
    let defs = momenta(sl);
    let null_basis = sl.kinetic.null_space();
    let mut surface = ReductionSurface::new(PivotPolicy::MomentumFirst);
    for v in &null_basis {
        // v^T (p - B q - c)
        let mut body = AffineForm::zero();
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            body.add_term(&defs[i].momentum, vi.clone());
            body = body.sub(&defs[i].coordinate_part.scale(vi));
        }
        surface.admit(&body, None)?;
    }
    let pivots: Vec<Variable> = surface.pivots().cloned().collect();
    Ok(surface
        .row_forms()
        .into_iter()
        .zip(pivots)
        .enumerate()
        .map(|(k, (form, pivot))| {
            Constraint::new(
                format!("chi{}", k + 1),
                form.normalized_signed_by(&pivot),
                Generation::Primary,
            )
        })
        .collect())
}

/// The Hamiltonian `p^T q' - L` with every velocity expressible on the range
/// of the kinetic matrix eliminated by exact pivoting. For a vanishing
/// kinetic matrix this is just the potential, with momenta entering only
/// through the constraints.
///
/// Trigonometric arguments are rewritten through momentum-solving primary
/// constraints (a coordinate locked inside a cosine is replaced by the
/// momentum expression it weakly equals), so the result stays in the closed
/// class once that coordinate is later eliminated.
pub fn base_hamiltonian<S: Scalar>(sl: &StructuredLagrangian<S>) -> Result<Expression<S>> {
    let defs = momenta(sl);
    // w_i = p_i - (B q + c)_i
    let w: Vec<Expression<S>> = defs
        .iter()
        .map(|d| Expression::var(&d.momentum).sub(&d.coordinate_part.to_expression()))
        .collect();
    let solve = solve_with_expression_rhs(&sl.kinetic, &w);
    let velocities = solve.particular(sl.chart.len());
    let mut h = sl.potential.clone();
    for (qdot, wi) in velocities.iter().zip(&w) {
        h = h.add(&qdot.mul(wi).scale(&S::ratio(1, 2)));
    }

    // Coordinate-priority echelon of the primary constraints yields the
    // coordinate -> momentum substitutions admissible inside trig arguments.
    let primaries = primary_constraints(sl)?;
    let mut surface = ReductionSurface::new(PivotPolicy::CoordinateFirst);
    for c in &primaries {
        surface.admit(&c.body, None)?;
    }
    let trig_map: BTreeMap<Variable, AffineForm<S>> = surface
        .substitution_map()
        .into_iter()
        .filter(|(v, _)| v.kind() == VarKind::Coordinate)
        .collect();
    h.substitute_in_trig(&trig_map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{canonicalize, parse, parse_expression};
    use crate::Rat;
    use num_traits::Zero;
    use std::collections::BTreeMap;

    fn island() -> StructuredLagrangian<Rat> {
        canonicalize(
            &parse(
                "var x1 x2 x3 X\nparam E=5 L1=1 L2=2 k=3\nlagrangian:\n  \
                 X*(d(x3) - d(x1)) + E*cos(k*X) - 1/(2*L1)*(x1-x2)^2 - 1/(2*L2)*(x2-x3)^2\n",
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn velocity_coupled() -> StructuredLagrangian<Rat> {
        canonicalize(
            &parse(
                "var x1 x2 x3 X\nparam E=5 L1=1 L2=2 k=3 lam1=1 lam2=5 lam3=2\nlagrangian:\n  \
                 X*(d(x3) - d(x1)) + E*cos(k*X) - 1/(2*L1)*(x1-x2)^2 - 1/(2*L2)*(x2-x3)^2\n  \
                 + lam1*d(x1)*x3 + lam2*d(x1)*x2 + lam3*d(x2)*x3\n",
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn form(text: &str, sl: &StructuredLagrangian<Rat>) -> crate::Affine {
        parse_expression(text, &sl.chart, &BTreeMap::new())
            .unwrap()
            .as_affine()
            .unwrap()
    }

    #[test]
    fn island_momenta() {
        let sl = island();
        let defs = momenta(&sl);
        // P1 = -X, P2 = 0, P3 = X, PX = 0
        assert!(defs[0].velocity_part.iter().all(|c| c.is_zero()));
        assert_eq!(defs[0].coordinate_part, form("-X", &sl));
        assert!(defs[1].coordinate_part.is_zero());
        assert_eq!(defs[2].coordinate_part, form("X", &sl));
        assert!(defs[3].coordinate_part.is_zero());
    }

    #[test]
    fn island_primaries() {
        let sl = island();
        let cs = primary_constraints(&sl).unwrap();
        let bodies: Vec<String> = cs.iter().map(|c| c.body.to_string()).collect();
        assert_eq!(bodies, vec!["X + Px1", "Px2", "-X + Px3", "PX"]);
        assert!(cs.iter().all(|c| c.generation == Generation::Primary));
    }

    #[test]
    fn velocity_coupled_momenta_and_primaries() {
        let sl = velocity_coupled();
        let defs = momenta(&sl);
        // P1 = -X + x3 + 5 x2, P2 = 2 x3, P3 = X, PX = 0
        assert_eq!(defs[0].coordinate_part, form("-X + x3 + 5*x2", &sl));
        assert_eq!(defs[1].coordinate_part, form("2*x3", &sl));
        assert_eq!(defs[2].coordinate_part, form("X", &sl));
        let cs = primary_constraints(&sl).unwrap();
        let expected = [
            form("Px1 + X - x3 - 5*x2", &sl),
            form("Px2 - 2*x3", &sl),
            form("Px3 - X", &sl),
            form("PX", &sl),
        ];
        for (c, e) in cs.iter().zip(&expected) {
            assert_eq!(c.body.normalized(), e.normalized());
        }
    }

    #[test]
    fn nonsingular_has_no_primaries() {
        let sl = canonicalize(
            &parse::<Rat>("var x\nlagrangian: 1/2*d(x)^2 - 1/2*x^2\n").unwrap(),
        )
        .unwrap();
        assert!(primary_constraints(&sl).unwrap().is_empty());
        let h = base_hamiltonian(&sl).unwrap();
        let expected =
            parse_expression("1/2*Px^2 + 1/2*x^2", &sl.chart, &BTreeMap::new()).unwrap();
        assert_eq!(h, expected);
    }

    #[test]
    fn island_hamiltonian_rewrites_trig() {
        let sl = island();
        let h = base_hamiltonian(&sl).unwrap();
        let expected = parse_expression(
            "-5*cos(3*Px3) + 1/2*(x1-x2)^2 + 1/4*(x2-x3)^2",
            &sl.chart,
            &BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(h, expected);
    }

    #[test]
    fn primary_count_is_kinetic_nullity() {
        let sl = velocity_coupled();
        let n = sl.chart.len();
        let nullity = n - sl.kinetic.rank();
        assert_eq!(primary_constraints(&sl).unwrap().len(), nullity);
    }

    #[test]
    fn hamiltonian_ignores_null_velocities() {
        // For a rank-1 kinetic matrix in two variables, shifting the solved
        // velocities along the null direction leaves 1/2 v^T M v unchanged.
        let sl = canonicalize(
            &parse::<Rat>(
                "var u v\nlagrangian: 1/2*d(u)^2 + d(u)*d(v) + 1/2*d(v)^2 - u*v\n",
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(sl.kinetic.rank(), 1);
        let defs = momenta(&sl);
        let w: Vec<crate::Expr> = defs
            .iter()
            .map(|d| Expression::var(&d.momentum).sub(&d.coordinate_part.to_expression()))
            .collect();
        let solve = solve_with_expression_rhs(&sl.kinetic, &w);
        let vel = solve.particular(2);
        // Null direction of M = [[1,1],[1,1]] is (1, -1); parametrize the
        // shift by an auxiliary variable t.
        let aux = crate::expr::PhaseSpaceChart::new(&["t"]).unwrap();
        let t = Expression::var(&aux.coordinates()[0]);
        let shifted: Vec<crate::Expr> = vec![vel[0].add(&t), vel[1].sub(&t)];
        let half = Rat::ratio(1, 2);
        let quad = |vels: &[crate::Expr]| -> crate::Expr {
            let mut acc = Expression::zero();
            for i in 0..2 {
                for j in 0..2 {
                    acc = acc.add(
                        &vels[i]
                            .mul(&vels[j])
                            .scale(&(sl.kinetic[(i, j)].clone() * half.clone())),
                    );
                }
            }
            acc
        };
        assert_eq!(quad(&vel), quad(&shifted));
    }
}
