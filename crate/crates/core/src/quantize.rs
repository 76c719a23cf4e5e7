//! Promotion of Dirac brackets to quantum commutators, and the linear
//! rescaling that brings the commutator table to canonical form.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{Expression, Variable};
use crate::linalg::Matrix;
use crate::reduce::{CanonicalChart, DiracStructure};
use crate::scalar::Scalar;

/// One commutator `[a, b] = i hbar * value`. `hbar` stays a symbolic tag;
/// nothing here is ever numeric in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutatorEntry<S: Scalar> {
    pub a: Variable,
    pub b: Variable,
    pub value: S,
}

impl<S: Scalar> fmt::Display for CommutatorEntry<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}] = i*hbar*({})", self.a.name(), self.b.name(), self.value)
    }
}

/// The quantum commutator table over a set of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantumTable<S: Scalar> {
    /// One entry per unordered pair with a nonzero bracket, `a < b`.
    pub entries: Vec<CommutatorEntry<S>>,
}

impl<S: Scalar> QuantumTable<S> {
    pub fn value(&self, a: &Variable, b: &Variable) -> S {
        for e in &self.entries {
            if &e.a == a && &e.b == b {
                return e.value.clone();
            }
            if &e.a == b && &e.b == a {
                return -e.value.clone();
            }
        }
        S::zero()
    }
}

/// Builds the table by promoting each pairwise Dirac bracket. Brackets that
/// fail to be constants would require operator ordering decisions and are
/// rejected.
pub fn commutator_table<S: Scalar>(
    d: &DiracStructure<S>,
    variables: &[Variable],
) -> Result<QuantumTable<S>> {
    let mut entries = Vec::new();
    for (i, a) in variables.iter().enumerate() {
        for b in &variables[i + 1..] {
            let bracket = d.dirac_bracket(&Expression::var(a), &Expression::var(b))?;
            let Some(value) = bracket.as_constant() else {
                return Err(Error::OperatorOrderingUnsupported {
                    a: a.name().to_string(),
                    b: b.name().to_string(),
                    value: bracket.to_string(),
                });
            };
            if !value.is_zero() {
                entries.push(CommutatorEntry { a: a.clone(), b: b.clone(), value });
            }
        }
    }
    Ok(QuantumTable { entries })
}

/// The invertible linear map from the kept variables to Darboux pairs (and
/// central directions), under which the commutator table becomes canonical.
#[derive(Debug, Clone)]
pub struct CanonicalRescaling<S: Scalar> {
    /// Domain: the kept variables, in order.
    pub variables: Vec<Variable>,
    /// Target names paired with their expressions over the domain,
    /// interleaved `Q1, P1, Q2, P2, ..., C1, ...`.
    pub targets: Vec<(String, Expression<S>)>,
    /// Row i = coefficients of target i over `variables`.
    pub matrix: Matrix<S>,
    /// Inverse map: row j = coefficients of variable j over the targets.
    pub inverse: Matrix<S>,
}

/// Reads the rescaling off a canonical chart. Purely a report artifact: the
/// chart rows are already linear in the kept variables.
pub fn canonical_rescaling<S: Scalar>(
    d: &DiracStructure<S>,
    chart: &CanonicalChart<S>,
) -> Result<CanonicalRescaling<S>> {
    let variables = d.kept_variables().to_vec();
    let n = variables.len();
    let mut targets: Vec<(String, Expression<S>)> = Vec::new();
    for (i, pair) in chart.pairs.iter().enumerate() {
        targets.push((format!("Q{}", i + 1), pair.q.clone()));
        targets.push((format!("P{}", i + 1), pair.p.clone()));
    }
    for (i, c) in chart.casimirs.iter().enumerate() {
        targets.push((format!("C{}", i + 1), c.clone()));
    }
    if targets.len() != n {
        return Err(Error::Internal(format!(
            "chart provides {} directions for {} kept variables",
            targets.len(),
            n
        )));
    }
    let matrix = Matrix::from_fn(n, n, |i, j| {
        targets[i]
            .1
            .as_affine()
            .map(|f| f.coeff(&variables[j]))
            .unwrap_or_else(S::zero)
    });
    let inverse = matrix
        .inverse()
        .ok_or_else(|| Error::Internal("chart map is not invertible".into()))?;
    Ok(CanonicalRescaling { variables, targets, matrix, inverse })
}

impl<S: Scalar> CanonicalRescaling<S> {
    /// Checks that the mapped bracket matrix `T omega T^T` is exactly the
    /// canonical block form implied by the target names.
    pub fn maps_to_canonical(&self, omega: &Matrix<S>) -> bool {
        let mapped = self.matrix.mul(&omega.mul(&self.matrix.transpose()));
        let n = self.targets.len();
        let n_pairs = self.targets.iter().filter(|(name, _)| name.starts_with('Q')).count();
        let expected = Matrix::from_fn(n, n, |i, j| {
            // Pairs occupy slots (2k, 2k+1).
            if i / 2 == j / 2 && i / 2 < n_pairs {
                if i % 2 == 0 && j % 2 == 1 {
                    S::one()
                } else if i % 2 == 1 && j % 2 == 0 {
                    -S::one()
                } else {
                    S::zero()
                }
            } else {
                S::zero()
            }
        });
        mapped == expected
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirac::{classify, stabilize};
    use crate::legendre::{base_hamiltonian, primary_constraints};
    use crate::parser::{canonicalize, parse};
    use crate::reduce::{darboux, gauge_fix};
    use crate::scalar::Scalar as _;
    use crate::Rat;

    fn structure(text: &str, keep: Option<&[&str]>) -> DiracStructure<Rat> {
        let sl = canonicalize(&parse::<Rat>(text).unwrap()).unwrap();
        let h = base_hamiltonian(&sl).unwrap();
        let closure = classify(
            stabilize(&h, &primary_constraints(&sl).unwrap(), &sl.chart).unwrap(),
            None,
        )
        .unwrap();
        let keep_vars: Option<Vec<_>> =
            keep.map(|names| names.iter().map(|n| sl.chart.var(n).unwrap().clone()).collect());
        DiracStructure::new(&closure, &sl.chart, keep_vars.as_deref()).unwrap()
    }

    #[test]
    fn canonical_pair_commutator() {
        let d = structure("var x\nlagrangian: 1/2*d(x)^2 - 1/2*x^2\n", None);
        let chart = d.chart().clone();
        let table =
            commutator_table(&d, &chart.all_variables().cloned().collect::<Vec<_>>()).unwrap();
        assert_eq!(table.entries.len(), 1);
        assert_eq!(table.entries[0].value, Rat::int(1));
        assert_eq!(
            table.entries[0].to_string(),
            "[x, Px] = i*hbar*(1)"
        );
    }

    #[test]
    fn noncommuting_coordinates() {
        let text = "var x1 x2 x3 X\nparam E=5 L1=1 L2=2 k=3 lam1=1 lam2=5 lam3=2\n\
            lagrangian:\n  X*(d(x3) - d(x1)) + E*cos(k*X) - 1/(2*L1)*(x1-x2)^2 - 1/(2*L2)*(x2-x3)^2\n  \
            + lam1*d(x1)*x3 + lam2*d(x1)*x2 + lam3*d(x2)*x3\n";
        let d = structure(text, None);
        let chart = d.chart().clone();
        let x1 = chart.var("x1").unwrap();
        let x2 = chart.var("x2").unwrap();
        let table =
            commutator_table(&d, &chart.all_variables().cloned().collect::<Vec<_>>()).unwrap();
        assert_eq!(table.value(x1, x2), Rat::ratio(1, 3));
        assert_eq!(table.value(x2, x1), Rat::ratio(-1, 3));
        // Antisymmetry across the whole table.
        for e in &table.entries {
            assert_eq!(table.value(&e.b, &e.a), -e.value.clone());
        }
    }

    #[test]
    fn island_gauge_family_entry() {
        let text = "var x1 x2 x3 X\nparam E=5 L1=1 L2=2 k=3\nlagrangian:\n  \
            X*(d(x3) - d(x1)) + E*cos(k*X) - 1/(2*L1)*(x1-x2)^2 - 1/(2*L2)*(x2-x3)^2\n";
        let sl = canonicalize(&parse::<Rat>(text).unwrap()).unwrap();
        let h = base_hamiltonian(&sl).unwrap();
        let closure = classify(
            stabilize(&h, &primary_constraints(&sl).unwrap(), &sl.chart).unwrap(),
            None,
        )
        .unwrap();
        let d = DiracStructure::new(&closure, &sl.chart, None).unwrap();
        let gauge = crate::parser::parse_expression(
            "2*x1 + 3*x3",
            &sl.chart,
            &std::collections::BTreeMap::new(),
        )
        .unwrap()
        .as_affine()
        .unwrap();
        let fixed = gauge_fix(&d, &closure, &[gauge], None).unwrap();
        let table = commutator_table(
            &fixed,
            &sl.chart.all_variables().cloned().collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(
            table.value(sl.chart.var("x1").unwrap(), sl.chart.var("Px1").unwrap()),
            Rat::ratio(3, 5)
        );
    }

    #[test]
    fn identity_chart_gives_identity_map() {
        let d = structure("var x\nlagrangian: 1/2*d(x)^2 - 1/2*x^2\n", None);
        let chart = darboux(&d);
        let r = canonical_rescaling(&d, &chart).unwrap();
        assert_eq!(r.matrix, Matrix::identity(2));
        assert_eq!(r.inverse, Matrix::identity(2));
        assert!(r.maps_to_canonical(d.omega()));
    }

    #[test]
    fn effective_single_mode_rescaling() {
        // L = (a+b)/a * d(x3) * y + E cos(k y) + ((a+b)/a)^2/(2(L1+L2)) x3^2
        // at (a, b) = (2, 3): the (x3, y) bracket is a/(a+b) = 2/5 and the
        // rescaling puts (a+b)/a = 5/2 into P.
        let text = "var x3 y\nparam E=5 k=3 c=5/2 w=25/24\nlagrangian:\n  \
            c*d(x3)*y + E*cos(k*y) + w*x3^2\n";
        let d = structure(text, Some(&["x3", "y"]));
        let chart = d.chart().clone();
        assert_eq!(
            d.variable_bracket(chart.var("x3").unwrap(), chart.var("y").unwrap())
                .unwrap(),
            Rat::ratio(2, 5)
        );
        let dchart = darboux(&d);
        assert_eq!(dchart.pairs.len(), 1);
        let r = canonical_rescaling(&d, &dchart).unwrap();
        // Q = x3, P = 5/2 y; inverse carries the a/(a+b) factor.
        assert_eq!(r.matrix[(0, 0)], Rat::int(1));
        assert_eq!(r.matrix[(1, 1)], Rat::ratio(5, 2));
        assert_eq!(r.inverse[(1, 1)], Rat::ratio(2, 5));
        assert!(r.maps_to_canonical(d.omega()));
    }

    #[test]
    fn velocity_coupled_rescaling_is_canonical() {
        let text = "var x1 x2 x3 X\nparam E=5 L1=1 L2=2 k=3 lam1=1 lam2=5 lam3=2\n\
            lagrangian:\n  X*(d(x3) - d(x1)) + E*cos(k*X) - 1/(2*L1)*(x1-x2)^2 - 1/(2*L2)*(x2-x3)^2\n  \
            + lam1*d(x1)*x3 + lam2*d(x1)*x2 + lam3*d(x2)*x3\n";
        let d = structure(text, None);
        let chart = darboux(&d);
        let r = canonical_rescaling(&d, &chart).unwrap();
        assert!(r.maps_to_canonical(d.omega()));
        // Map coefficients read off the chart expressions.
        for (i, (_, target)) in r.targets.iter().enumerate() {
            let form = target.as_affine().unwrap();
            for (j, v) in r.variables.iter().enumerate() {
                assert_eq!(form.coeff(v), r.matrix[(i, j)]);
            }
        }
    }
}
