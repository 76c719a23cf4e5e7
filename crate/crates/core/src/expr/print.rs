//! Canonical text form. The printer emits exactly the grammar the DSL parser
//! accepts, so `parse(print(e)) == e`.

use std::fmt;

use super::{AffineForm, Expression, TermKey, TrigKind};
use crate::scalar::Scalar;

impl<S: Scalar> fmt::Display for AffineForm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (v, c) in self.coeffs() {
            write_signed_factor(f, c, &mut first)?;
            if !c.abs().is_one() {
                write!(f, "*")?;
            }
            write!(f, "{}", v.name())?;
        }
        let c = self.constant_part();
        if !c.is_zero() {
            write_signed_constant(f, c, &mut first)?;
        }
        Ok(())
    }
}

impl<S: Scalar> fmt::Display for Expression<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (key, coeff) in self.terms() {
            let bare = key.monomial.is_empty() && key.trig.is_empty();
            if bare {
                write_signed_constant(f, coeff, &mut first)?;
                continue;
            }
            write_signed_factor(f, coeff, &mut first)?;
            write_term_body(f, key, !coeff.abs().is_one())?;
        }
        Ok(())
    }
}

fn write_term_body<S: Scalar>(
    f: &mut fmt::Formatter<'_>,
    key: &TermKey<S>,
    mut need_star: bool,
) -> fmt::Result {
    for (v, &e) in &key.monomial {
        if need_star {
            write!(f, "*")?;
        }
        write!(f, "{}", v.name())?;
        if e > 1 {
            write!(f, "^{e}")?;
        }
        need_star = true;
    }
    for t in &key.trig {
        if need_star {
            write!(f, "*")?;
        }
        let name = match t.kind() {
            TrigKind::Sin => "sin",
            TrigKind::Cos => "cos",
        };
        write!(f, "{name}({})", t.argument())?;
        need_star = true;
    }
    Ok(())
}

/// Writes the sign separator and, when not one, the absolute coefficient.
fn write_signed_factor<S: Scalar>(
    f: &mut fmt::Formatter<'_>,
    c: &S,
    first: &mut bool,
) -> fmt::Result {
    write_sign(f, c, first)?;
    let a = c.abs();
    if !a.is_one() {
        write!(f, "{a}")?;
    }
    Ok(())
}

fn write_signed_constant<S: Scalar>(
    f: &mut fmt::Formatter<'_>,
    c: &S,
    first: &mut bool,
) -> fmt::Result {
    write_sign(f, c, first)?;
    write!(f, "{}", c.abs())
}

fn write_sign<S: Scalar>(f: &mut fmt::Formatter<'_>, c: &S, first: &mut bool) -> fmt::Result {
    if *first {
        if c.is_negative() {
            write!(f, "-")?;
        }
        *first = false;
    } else if c.is_negative() {
        write!(f, " - ")?;
    } else {
        write!(f, " + ")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use crate::expr::{AffineForm, Expression, PhaseSpaceChart};
    use crate::scalar::Scalar as _;
    use crate::Rat;

    #[test]
    fn canonical_term_order_and_signs() {
        let c = PhaseSpaceChart::new(&["x1", "x3"]).unwrap();
        let x1 = Expression::<Rat>::var(&c.coordinates()[0]);
        let x3 = Expression::<Rat>::var(&c.coordinates()[1]);
        let p3 = &c.momenta()[1];
        let h = x1
            .sub(&x3)
            .pow(2)
            .scale(&Rat::ratio(1, 6))
            .sub(
                &Expression::cos_of(AffineForm::var(p3).scale(&Rat::int(3)))
                    .unwrap()
                    .scale(&Rat::int(5)),
            );
        assert_eq!(
            h.to_string(),
            "1/6*x1^2 - 1/3*x1*x3 + 1/6*x3^2 - 5*cos(3*Px3)"
        );
    }

    #[test]
    fn affine_with_constant() {
        let c = PhaseSpaceChart::new(&["x1", "x2"]).unwrap();
        let f = AffineForm::from_terms(
            [
                (c.coordinates()[0].clone(), Rat::int(2)),
                (c.coordinates()[1].clone(), Rat::int(-3)),
            ],
            Rat::ratio(1, 2),
        );
        assert_eq!(f.to_string(), "2*x1 - 3*x2 + 1/2");
    }

    #[test]
    fn zero_prints() {
        assert_eq!(Expression::<Rat>::zero().to_string(), "0");
    }
}
