//! Deterministic sample data for property tests: small random expressions
//! drawn from the closed class, driven by a self-contained splitmix PRNG so
//! callers get reproducibility without extra dependencies.

use super::{AffineForm, Expression, PhaseSpaceChart};
use crate::scalar::Scalar;

/// Tiny deterministic PRNG (splitmix64).
#[derive(Debug, Clone)]
pub struct Sampler {
    state: u64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `0..n`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n.max(1)
    }

    /// Small nonzero rational with numerator in ±1..=4 and denominator 1..=3.
    pub fn scalar<S: Scalar>(&mut self) -> S {
        let num = 1 + self.below(4) as i64;
        let den = 1 + self.below(3) as i64;
        let sign = if self.below(2) == 0 { 1 } else { -1 };
        S::ratio(sign * num, den)
    }

    /// Non-constant affine form over at most two of the given variables.
    pub fn affine_over<S: Scalar>(&mut self, vars: &[super::Variable]) -> AffineForm<S> {
        let mut f = AffineForm::zero();
        let n_vars = 1 + self.below(2) as usize;
        for _ in 0..n_vars {
            let v = &vars[self.below(vars.len() as u64) as usize];
            f.add_term(v, self.scalar());
        }
        if f.is_constant() {
            // Collisions can cancel; retry deterministically.
            return self.affine_over(vars);
        }
        if self.below(3) == 0 {
            f = f.add(&AffineForm::constant(self.scalar()));
        }
        f
    }

    /// Non-constant affine form over at most two chart variables.
    pub fn affine<S: Scalar>(&mut self, chart: &PhaseSpaceChart) -> AffineForm<S> {
        let vars: Vec<_> = chart.all_variables().cloned().collect();
        self.affine_over(&vars)
    }

    /// Random expression over the given variables: up to `max_terms` terms of
    /// degree <= 2 with at most two trig factors each.
    pub fn expression_over<S: Scalar>(
        &mut self,
        vars: &[super::Variable],
        max_terms: usize,
    ) -> Expression<S> {
        let mut out = Expression::zero();
        let n_terms = 1 + self.below(max_terms.max(1) as u64) as usize;
        for _ in 0..n_terms {
            let mut term = Expression::constant(self.scalar::<S>());
            let degree = self.below(3);
            for _ in 0..degree {
                let v = &vars[self.below(vars.len() as u64) as usize];
                term = term.mul(&Expression::var(v));
            }
            let n_trig = self.below(3);
            for _ in 0..n_trig {
                let arg = self.affine_over(vars);
                let factor = if self.below(2) == 0 {
                    Expression::sin_of(arg)
                } else {
                    Expression::cos_of(arg)
                }
                .expect("sampled arguments are non-constant");
                term = term.mul(&factor);
            }
            out = out.add(&term);
        }
        out
    }

    /// Random expression over every chart variable.
    pub fn expression<S: Scalar>(
        &mut self,
        chart: &PhaseSpaceChart,
        max_terms: usize,
    ) -> Expression<S> {
        let vars: Vec<_> = chart.all_variables().cloned().collect();
        self.expression_over(&vars, max_terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    #[test]
    fn deterministic_for_fixed_seed() {
        let chart = PhaseSpaceChart::new(&["x1", "x2"]).unwrap();
        let a: Expression<Rat> = Sampler::new(7).expression(&chart, 4);
        let b: Expression<Rat> = Sampler::new(7).expression(&chart, 4);
        assert_eq!(a, b);
    }

    #[test]
    fn spread_over_seeds() {
        let chart = PhaseSpaceChart::new(&["x1", "x2"]).unwrap();
        let mut distinct = std::collections::BTreeSet::new();
        for seed in 0..50 {
            let e: Expression<Rat> = Sampler::new(seed).expression(&chart, 4);
            distinct.insert(e.to_string());
        }
        assert!(distinct.len() > 35, "sampler should vary: {}", distinct.len());
    }
}
