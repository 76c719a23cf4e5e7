//! The canonical Poisson bracket on the closed expression class.

use super::{Expression, PhaseSpaceChart};
use crate::scalar::Scalar;

/// `{A, B} = sum_i dA/dq_i dB/dp_i - dA/dp_i dB/dq_i`, exactly.
///
/// Variables outside the chart behave as constants. The class is closed under
/// differentiation and multiplication, so no approximation is involved.
pub fn poisson_bracket<S: Scalar>(
    a: &Expression<S>,
    b: &Expression<S>,
    chart: &PhaseSpaceChart,
) -> Expression<S> {
    let mut out = Expression::zero();
    for (q, p) in chart.pairs() {
        let a_has_q = a.contains(q);
        let a_has_p = a.contains(p);
        let b_has_q = b.contains(q);
        let b_has_p = b.contains(p);
        if a_has_q && b_has_p {
            out = out.add(&a.derivative(q).mul(&b.derivative(p)));
        }
        if a_has_p && b_has_q {
            out = out.sub(&a.derivative(p).mul(&b.derivative(q)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::AffineForm;
    use crate::Rat;

    fn chart() -> PhaseSpaceChart {
        PhaseSpaceChart::new(&["x1", "x2", "x3"]).unwrap()
    }

    #[test]
    fn canonical_pair() {
        let c = chart();
        let x1 = Expression::<Rat>::var(&c.coordinates()[0]);
        let p1 = Expression::<Rat>::var(&c.momenta()[0]);
        assert_eq!(poisson_bracket(&x1, &p1, &c), Expression::one());
        assert_eq!(poisson_bracket(&p1, &x1, &c), Expression::one().neg());
    }

    #[test]
    fn cross_pair_cancellation() {
        // {P1 + P3, x1 - x3} = -1 + 1 = 0
        let c = chart();
        let a = Expression::<Rat>::var(&c.momenta()[0]).add(&Expression::var(&c.momenta()[2]));
        let b = Expression::<Rat>::var(&c.coordinates()[0])
            .sub(&Expression::var(&c.coordinates()[2]));
        assert!(poisson_bracket(&a, &b, &c).is_zero());
    }

    #[test]
    fn chain_rule_on_trig() {
        // {x3, cos(3 P3)} = -3 sin(3 P3)
        let c = chart();
        let x3 = Expression::<Rat>::var(&c.coordinates()[2]);
        let arg = AffineForm::var(&c.momenta()[2]).scale(&Rat::int(3));
        let b = Expression::cos_of(arg.clone()).unwrap();
        let expected = Expression::sin_of(arg).unwrap().scale(&Rat::int(-3));
        assert_eq!(poisson_bracket(&x3, &b, &c), expected);
    }

    #[test]
    fn leibniz_exact() {
        let c = chart();
        let a = Expression::<Rat>::var(&c.momenta()[0]).pow(2);
        let b = Expression::<Rat>::var(&c.coordinates()[0]);
        let d = Expression::<Rat>::cos_of(AffineForm::var(&c.coordinates()[0])).unwrap();
        let lhs = poisson_bracket(&a, &b.mul(&d), &c);
        let rhs = poisson_bracket(&a, &b, &c)
            .mul(&d)
            .add(&b.mul(&poisson_bracket(&a, &d, &c)));
        assert_eq!(lhs, rhs);
    }
}
