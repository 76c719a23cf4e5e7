//! Shared fixtures and independent oracles for the integration suites.

#![allow(dead_code)]

use std::collections::BTreeMap;

use dca_core::dynamics::{EquationsOfMotion, Trajectory};
use dca_core::expr::sampling::Sampler;
use dca_core::expr::{Expression, PhaseSpaceChart, Variable};
use dca_core::linalg::Matrix;
use dca_core::parser::StructuredLagrangian;
use dca_core::scalar::Scalar as _;
use dca_core::{Expr, Rat};

pub const ISLAND: &str = include_str!("../../../../circuits/island.lagr");
pub const NONCOMMUTATIVE: &str = include_str!("../../../../circuits/noncommutative.lagr");
pub const NONCOMMUTATIVE_SIMPLE: &str =
    include_str!("../../../../circuits/noncommutative_simple.lagr");
pub const HARMONIC: &str = include_str!("../../../../circuits/harmonic.lagr");

/// Random structured Lagrangian with a nonsingular kinetic matrix: symmetric
/// `M`, arbitrary `B`, `c`, and a quadratic polynomial potential.
pub fn random_nonsingular_lagrangian(
    sampler: &mut Sampler,
    n: usize,
) -> StructuredLagrangian<Rat> {
    let names: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
    let chart = PhaseSpaceChart::new(&names).unwrap();
    loop {
        let mut kinetic: Matrix<Rat> = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: Rat = sampler.scalar();
                kinetic[(i, j)] = v.clone();
                kinetic[(j, i)] = v;
            }
        }
        if kinetic.det() == Rat::int(0) {
            continue;
        }
        let coupling = Matrix::from_fn(n, n, |_, _| {
            if sampler.below(2) == 0 {
                sampler.scalar()
            } else {
                Rat::int(0)
            }
        });
        let linear: Vec<Rat> = (0..n)
            .map(|_| if sampler.below(2) == 0 { sampler.scalar() } else { Rat::int(0) })
            .collect();
        let mut potential: Expr = Expression::zero();
        for i in 0..n {
            for j in i..n {
                if sampler.below(2) == 0 {
                    let qi = Expression::var(&chart.coordinates()[i]);
                    let qj = Expression::var(&chart.coordinates()[j]);
                    potential = potential.add(&qi.mul(&qj).scale(&sampler.scalar()));
                }
            }
        }
        return StructuredLagrangian {
            chart: chart.clone(),
            kinetic,
            coupling,
            linear,
            potential,
            parameters: BTreeMap::new(),
        };
    }
}

/// Numeric Lagrangian value `L(q, qdot)` straight from the structure.
pub fn lagrangian_value(sl: &StructuredLagrangian<Rat>, q: &[f64], qdot: &[f64]) -> f64 {
    let n = sl.chart.len();
    let mut value = 0.0;
    for i in 0..n {
        for j in 0..n {
            value += 0.5 * sl.kinetic[(i, j)].to_f64() * qdot[i] * qdot[j];
            value += sl.coupling[(i, j)].to_f64() * qdot[i] * q[j];
        }
        value += sl.linear[i].to_f64() * qdot[i];
    }
    let assignment: BTreeMap<Variable, f64> = sl
        .chart
        .coordinates()
        .iter()
        .cloned()
        .zip(q.iter().copied())
        .collect();
    value - sl.potential.evaluate(&assignment).unwrap()
}

/// Brute-force Legendre transform at a sampled velocity: momenta from central
/// differences of `L` (exact for quadratic velocity dependence), then
/// `H = p . qdot - L`.
pub fn brute_force_hamiltonian(
    sl: &StructuredLagrangian<Rat>,
    q: &[f64],
    qdot: &[f64],
) -> (Vec<f64>, f64) {
    let n = sl.chart.len();
    let eps = 0.5;
    let mut p = vec![0.0; n];
    for i in 0..n {
        let mut plus = qdot.to_vec();
        let mut minus = qdot.to_vec();
        plus[i] += eps;
        minus[i] -= eps;
        p[i] = (lagrangian_value(sl, q, &plus) - lagrangian_value(sl, q, &minus)) / (2.0 * eps);
    }
    let h = p.iter().zip(qdot).map(|(pi, vi)| pi * vi).sum::<f64>()
        - lagrangian_value(sl, q, qdot);
    (p, h)
}

pub trait RatToF64 {
    fn to_f64(&self) -> f64;
}

impl RatToF64 for Rat {
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap()
    }
}

/// Uniform float in [-1, 1) from the deterministic sampler.
pub fn uniform(sampler: &mut Sampler) -> f64 {
    (sampler.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

/// Dominant oscillation frequency from zero crossings of a signal.
pub fn crossing_frequency(times: &[f64], values: &[f64]) -> f64 {
    let mut crossings = Vec::new();
    for i in 1..values.len() {
        if values[i - 1] == 0.0 {
            continue;
        }
        if values[i - 1].signum() != values[i].signum() {
            // Linear interpolation of the crossing time.
            let frac = values[i - 1] / (values[i - 1] - values[i]);
            crossings.push(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    assert!(crossings.len() >= 3, "too few crossings: {}", crossings.len());
    let first = crossings[0];
    let last = *crossings.last().unwrap();
    let half_periods = (crossings.len() - 1) as f64;
    std::f64::consts::PI * half_periods / (last - first)
}

/// Finite-difference Jacobian of the flow at a point; the independent cross
/// check against the engine's exact linearization.
pub fn finite_difference_jacobian(
    eom: &EquationsOfMotion<Rat>,
    point: &BTreeMap<Variable, f64>,
    step: f64,
) -> Vec<Vec<f64>> {
    let n = eom.variables.len();
    let eval = |assign: &BTreeMap<Variable, f64>| -> Vec<f64> {
        eom.rhs.iter().map(|e| e.evaluate(assign).unwrap()).collect()
    };
    let mut j = vec![vec![0.0; n]; n];
    for (col, v) in eom.variables.iter().enumerate() {
        let mut plus = point.clone();
        let mut minus = point.clone();
        *plus.get_mut(v).unwrap() += step;
        *minus.get_mut(v).unwrap() -= step;
        let fp = eval(&plus);
        let fm = eval(&minus);
        for row in 0..n {
            j[row][col] = (fp[row] - fm[row]) / (2.0 * step);
        }
    }
    j
}

/// Energy drift of a trajectory relative to its initial energy.
pub fn relative_energy_drift(h: &Expr, traj: &Trajectory<f64>) -> f64 {
    let eval = |row: &Vec<f64>| -> f64 {
        let assign: BTreeMap<Variable, f64> = traj
            .variables
            .iter()
            .cloned()
            .zip(row.iter().copied())
            .collect();
        h.evaluate(&assign).unwrap()
    };
    let e0 = eval(&traj.states[0]);
    let scale = e0.abs().max(1e-12);
    traj.states
        .iter()
        .map(|row| (eval(row) - e0).abs() / scale)
        .fold(0.0, f64::max)
}
