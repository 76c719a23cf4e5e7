//! Equations of motion under Dirac brackets and their numerical integration.
//!
//! Evolution runs in the post-reduction chart only; eliminated variables are
//! reconstructed for output through the stored substitution map.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::{AffineForm, Expression, Variable};
use crate::linalg::Matrix;
use crate::reduce::DiracStructure;
use crate::scalar::{Real, Scalar};

/// First-order system `v' = {v, H}_DB` over the kept variables.
#[derive(Debug, Clone)]
pub struct EquationsOfMotion<S: Scalar> {
    pub variables: Vec<Variable>,
    pub rhs: Vec<Expression<S>>,
}

pub fn equations_of_motion<S: Scalar>(
    h: &Expression<S>,
    d: &DiracStructure<S>,
) -> Result<EquationsOfMotion<S>> {
    let variables = d.kept_variables().to_vec();
    let rhs = variables
        .iter()
        .map(|v| d.dirac_bracket(&Expression::var(v), h))
        .collect::<Result<_>>()?;
    Ok(EquationsOfMotion { variables, rhs })
}

impl<S: Scalar> EquationsOfMotion<S> {
    /// Symbolic second time derivative of an observable (a function of the
    /// kept variables): differentiates along the flow twice.
    pub fn second_derivative(
        &self,
        observable: &Expression<S>,
        d: &DiracStructure<S>,
        h: &Expression<S>,
    ) -> Result<Expression<S>> {
        let first = d.dirac_bracket(observable, h)?;
        d.dirac_bracket(&first, h)
    }
}

/// A fixed-step integration result. States are row-per-time, column-per
/// variable, all finite.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Trajectory<R> {
    pub integrator: String,
    pub dt: R,
    #[serde(skip)]
    pub variables: Vec<Variable>,
    pub variable_names: Vec<String>,
    pub times: Vec<R>,
    pub states: Vec<Vec<R>>,
}

impl<R: Real> Trajectory<R> {
    pub fn column(&self, v: &Variable) -> Option<Vec<R>> {
        let idx = self.variables.iter().position(|u| u == v)?;
        Some(self.states.iter().map(|row| row[idx]).collect())
    }

    /// Appends reconstructed columns for eliminated variables.
    pub fn with_reconstructed<S: Scalar>(
        mut self,
        substitution: &BTreeMap<Variable, AffineForm<S>>,
    ) -> Result<Self> {
        for (v, form) in substitution {
            let mut column = Vec::with_capacity(self.states.len());
            for row in &self.states {
                let assignment: BTreeMap<Variable, R> = self
                    .variables
                    .iter()
                    .cloned()
                    .zip(row.iter().copied())
                    .collect();
                column.push(form.evaluate(&assignment)?);
            }
            self.variables.push(v.clone());
            self.variable_names.push(v.name().to_string());
            for (row, value) in self.states.iter_mut().zip(column) {
                row.push(value);
            }
        }
        Ok(self)
    }

    /// CSV with a time column followed by one column per variable.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for name in &self.variable_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t}"));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Classical fixed-step fourth-order Runge-Kutta. Deterministic for fixed
/// inputs; aborts on the first non-finite state.
pub fn integrate<S: Scalar, R: Real>(
    eom: &EquationsOfMotion<S>,
    initial: &BTreeMap<Variable, R>,
    dt: R,
    t_end: R,
) -> Result<Trajectory<R>> {
    if dt <= R::zero() {
        return Err(Error::InvalidFlag("dt must be positive".into()));
    }
    if t_end < dt {
        return Err(Error::InvalidFlag("t-end must be at least dt".into()));
    }
    let mut state: Vec<R> = Vec::with_capacity(eom.variables.len());
    for v in &eom.variables {
        let val = initial
            .get(v)
            .ok_or_else(|| Error::MissingInitialValue(v.name().to_string()))?;
        state.push(*val);
    }
    let n = eom.variables.len();
    let eval = |state: &[R]| -> Result<Vec<R>> {
        let assignment: BTreeMap<Variable, R> =
            eom.variables.iter().cloned().zip(state.iter().copied()).collect();
        eom.rhs.iter().map(|e| e.evaluate(&assignment)).collect()
    };

    // Whole steps of size dt, plus one shortened step to land exactly on
    // t_end when the grid does not divide it.
    let ratio = t_end / dt;
    let eps = R::from_f64(1e-9).unwrap();
    let full_steps = (ratio + eps)
        .floor()
        .to_usize()
        .ok_or_else(|| Error::InvalidFlag("t-end/dt out of range".into()))?;
    let remainder = t_end - dt * R::from_usize(full_steps).unwrap();
    let tail = if remainder > dt * eps { Some(remainder) } else { None };

    let half = R::from_f64(0.5).unwrap();
    let sixth = R::from_f64(6.0).unwrap();
    let two = R::from_f64(2.0).unwrap();
    let mut times = Vec::with_capacity(full_steps + 2);
    let mut states = Vec::with_capacity(full_steps + 2);
    times.push(R::zero());
    states.push(state.clone());
    let total = full_steps + tail.map_or(0, |_| 1);
    for step in 0..total {
        let h = if step < full_steps { dt } else { tail.unwrap() };
        let k1 = eval(&state)?;
        let mid1: Vec<R> = (0..n).map(|i| state[i] + h * half * k1[i]).collect();
        let k2 = eval(&mid1)?;
        let mid2: Vec<R> = (0..n).map(|i| state[i] + h * half * k2[i]).collect();
        let k3 = eval(&mid2)?;
        let end: Vec<R> = (0..n).map(|i| state[i] + h * k3[i]).collect();
        let k4 = eval(&end)?;
        for i in 0..n {
            state[i] = state[i] + h / sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        let t = if step < full_steps {
            dt * R::from_usize(step + 1).unwrap()
        } else {
            t_end
        };
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                step: step + 1,
                time: t.to_f64().unwrap_or(f64::NAN),
            });
        }
        times.push(t);
        states.push(state.clone());
    }
    Ok(Trajectory {
        integrator: "rk4".into(),
        dt,
        variable_names: eom.variables.iter().map(|v| v.name().to_string()).collect(),
        variables: eom.variables.clone(),
        times,
        states,
    })
}

/// Translates initial data given on arbitrary chart variables (kept or
/// eliminated) into a full initial state for the kept variables.
pub fn solve_initial_state<S: Scalar, R: Real>(
    kept: &[Variable],
    substitution: &BTreeMap<Variable, AffineForm<S>>,
    given: &BTreeMap<Variable, R>,
) -> Result<BTreeMap<Variable, R>> {
    let n = kept.len();
    let mut rows: Vec<(Vec<R>, R)> = Vec::new();
    for (v, &value) in given {
        if let Some(j) = kept.iter().position(|u| u == v) {
            let mut row = vec![R::zero(); n];
            row[j] = R::one();
            rows.push((row, value));
        } else if let Some(form) = substitution.get(v) {
            let mut row = vec![R::zero(); n];
            for (u, c) in form.coeffs() {
                let j = kept.iter().position(|k| k == u).ok_or_else(|| {
                    Error::Internal(format!("substitution target {} not kept", u.name()))
                })?;
                row[j] = R::from_scalar(c);
            }
            rows.push((row, value - R::from_scalar(form.constant_part())));
        } else {
            return Err(Error::UnboundVariable(v.name().to_string()));
        }
    }
    // Gaussian elimination with partial pivoting.
    let mut solved = vec![None::<usize>; rows.len()];
    let mut pivot_cols = Vec::new();
    for col in 0..n {
        let mut best: Option<(usize, R)> = None;
        for (r, (row, _)) in rows.iter().enumerate() {
            if solved[r].is_some() {
                continue;
            }
            let mag = row[col].abs();
            if mag > R::from_f64(1e-12).unwrap()
                && best.is_none_or(|(_, m)| mag > m)
            {
                best = Some((r, mag));
            }
        }
        let Some((r, _)) = best else { continue };
        solved[r] = Some(col);
        pivot_cols.push((col, r));
        let inv = R::one() / rows[r].0[col];
        for v in rows[r].0.iter_mut() {
            *v = *v * inv;
        }
        rows[r].1 = rows[r].1 * inv;
        let pivot_row = rows[r].clone();
        for (r2, (row, rhs)) in rows.iter_mut().enumerate() {
            if r2 != r && row[col].abs() > R::zero() {
                let f = row[col];
                for (a, b) in row.iter_mut().zip(&pivot_row.0) {
                    *a = *a - f * *b;
                }
                *rhs = *rhs - f * pivot_row.1;
            }
        }
    }
    if pivot_cols.len() < n {
        let missing: Vec<&str> = (0..n)
            .filter(|c| !pivot_cols.iter().any(|(pc, _)| pc == c))
            .map(|c| kept[c].name())
            .collect();
        return Err(Error::AmbiguousInitialState(format!(
            "initial data leaves {{{}}} undetermined",
            missing.join(", ")
        )));
    }
    for (r, (_, rhs)) in rows.iter().enumerate() {
        if solved[r].is_none() && rhs.abs() > R::from_f64(1e-9).unwrap() {
            return Err(Error::AmbiguousInitialState(
                "initial data is inconsistent with the constraint surface".into(),
            ));
        }
    }
    let mut out = BTreeMap::new();
    for (col, r) in pivot_cols {
        out.insert(kept[col].clone(), rows[r].1);
    }
    Ok(out)
}

/// Largest pointwise deviation between two trajectories on the given
/// variables, relative to the larger amplitude seen on either side.
pub fn max_relative_deviation<R: Real>(
    a: &Trajectory<R>,
    b: &Trajectory<R>,
    variables: &[Variable],
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for v in variables {
        let ca = a
            .column(v)
            .ok_or_else(|| Error::UnboundVariable(v.name().to_string()))?;
        let cb = b
            .column(v)
            .ok_or_else(|| Error::UnboundVariable(v.name().to_string()))?;
        if ca.len() != cb.len() {
            return Err(Error::InvalidFlag("trajectories have different lengths".into()));
        }
        let amp = ca
            .iter()
            .chain(cb.iter())
            .fold(0.0_f64, |m, x| m.max(x.to_f64().unwrap_or(0.0).abs()));
        if amp == 0.0 {
            continue;
        }
        for (x, y) in ca.iter().zip(&cb) {
            let d = (x.to_f64().unwrap_or(0.0) - y.to_f64().unwrap_or(0.0)).abs() / amp;
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Exact Jacobian of the flow at a stationary point. Every trigonometric
/// argument must vanish there so the entries stay rational.
pub fn linearize<S: Scalar>(
    eom: &EquationsOfMotion<S>,
    point: &BTreeMap<Variable, S>,
) -> Result<Matrix<S>> {
    let n = eom.variables.len();
    let mut j = Matrix::zeros(n, n);
    for (i, rhs) in eom.rhs.iter().enumerate() {
        for (col, v) in eom.variables.iter().enumerate() {
            j[(i, col)] = rhs.derivative(v).evaluate_exact(point)?;
        }
    }
    Ok(j)
}

/// Monic characteristic polynomial coefficients `[c0, c1, ..., c_{n-1}, 1]`
/// computed exactly by trace recursion.
pub fn characteristic_polynomial<S: Scalar>(a: &Matrix<S>) -> Vec<S> {
    let n = a.nrows();
    let mut coeffs = vec![S::zero(); n + 1];
    coeffs[n] = S::one();
    // M_0 = 0 and M_k = A (M_{k-1} + c_{n-k+1} I) gives M_1 = A.
    let mut m = Matrix::<S>::zeros(n, n);
    for k in 1..=n {
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] = shifted[(i, i)].clone() + coeffs[n - k + 1].clone();
        }
        m = a.mul(&shifted);
        let trace = (0..n).fold(S::zero(), |acc, i| acc + m[(i, i)].clone());
        coeffs[n - k] = -trace / S::int(k as i64);
    }
    coeffs
}

/// All complex roots of a monic polynomial (ascending coefficients) by
/// Durand-Kerner iteration; zero roots are stripped exactly first.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut coeffs: Vec<f64> = coeffs.to_vec();
    let mut roots = Vec::new();
    while coeffs.len() > 1 && coeffs[0] == 0.0 {
        roots.push(Complex64::new(0.0, 0.0));
        coeffs.remove(0);
    }
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return roots;
    }
    let lead = coeffs[degree];
    let poly: Vec<Complex64> = coeffs.iter().map(|c| Complex64::new(c / lead, 0.0)).collect();
    let eval = |z: Complex64| -> Complex64 {
        poly.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    };
    let seed = Complex64::new(0.4, 0.9);
    let mut zs: Vec<Complex64> = (0..degree).map(|i| seed.powu(i as u32 + 1)).collect();
    for _ in 0..200 {
        let mut moved = 0.0_f64;
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..degree {
                if j != i {
                    denom *= zs[i] - zs[j];
                }
            }
            let delta = eval(zs[i]) / denom;
            zs[i] -= delta;
            moved = moved.max(delta.norm());
        }
        if moved < 1e-13 {
            break;
        }
    }
    roots.extend(zs);
    roots
}

/// Oscillation frequencies of the linearized flow: positive imaginary parts
/// of the Jacobian spectrum, deduplicated.
pub fn oscillation_frequencies<S: Scalar>(jacobian: &Matrix<S>) -> Vec<f64> {
    let coeffs: Vec<f64> = characteristic_polynomial(jacobian)
        .iter()
        .map(|c| c.to_f64().unwrap_or(f64::NAN))
        .collect();
    let mut freqs: Vec<f64> = polynomial_roots(&coeffs)
        .into_iter()
        .filter(|z| z.im > 1e-9)
        .map(|z| z.im)
        .collect();
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    freqs.dedup_by(|a, b| (*a - *b).abs() < 1e-6 * (1.0 + b.abs()));
    freqs
}

#[cfg(test)]
mod tests;
