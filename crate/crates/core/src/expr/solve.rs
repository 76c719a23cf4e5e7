//! Exact Gauss-Jordan elimination for systems `A x = b` whose right-hand
//! sides are expressions. Used to solve for velocities on the range of the
//! kinetic matrix and for Lagrange multipliers during stabilization.

use super::Expression;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// One solved unknown: `x[column] = value - sum(coeff * x[free])`.
#[derive(Debug, Clone)]
pub struct PivotSolution<S: Scalar> {
    pub column: usize,
    pub value: Expression<S>,
    pub free_coeffs: Vec<(usize, S)>,
}

#[derive(Debug, Clone)]
pub struct LinearSolveOutcome<S: Scalar> {
    pub pivots: Vec<PivotSolution<S>>,
    pub free_columns: Vec<usize>,
    /// Right-hand sides left on rows that eliminated to zero. Each is a
    /// consistency requirement `residual = 0`.
    pub residuals: Vec<Expression<S>>,
}

impl<S: Scalar> LinearSolveOutcome<S> {
    /// The solution with all free unknowns set to zero.
    pub fn particular(&self, n: usize) -> Vec<Expression<S>> {
        let mut x = vec![Expression::zero(); n];
        for p in &self.pivots {
            x[p.column] = p.value.clone();
        }
        x
    }
}

/// Jordan-eliminates `A x = b` exactly. Rows that vanish return their
/// right-hand side as a residual; the caller decides what a nonzero residual
/// means (an inconsistency, or a new constraint).
pub fn solve_with_expression_rhs<S: Scalar>(
    a: &Matrix<S>,
    rhs: &[Expression<S>],
) -> LinearSolveOutcome<S> {
    assert_eq!(a.nrows(), rhs.len(), "dimension mismatch");
    let mut rows = a.rows_vec();
    let mut b: Vec<Expression<S>> = rhs.to_vec();
    let n_rows = rows.len();
    let n_cols = a.ncols();

    let mut pivot_of_row: Vec<Option<usize>> = vec![None; n_rows];
    let mut used = vec![false; n_rows];
    for col in 0..n_cols {
        let Some(r) = (0..n_rows).find(|&r| !used[r] && !rows[r][col].is_zero()) else {
            continue;
        };
        used[r] = true;
        pivot_of_row[r] = Some(col);
        let inv = S::one() / rows[r][col].clone();
        for v in rows[r].iter_mut() {
            *v = v.clone() * inv.clone();
        }
        b[r] = b[r].scale(&inv);
        for i in 0..n_rows {
            if i != r && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                for j in 0..n_cols {
                    let v = rows[i][j].clone() - f.clone() * rows[r][j].clone();
                    rows[i][j] = v;
                }
                b[i] = b[i].sub(&b[r].scale(&f));
            }
        }
    }

    let free_columns: Vec<usize> =
        (0..n_cols).filter(|c| !pivot_of_row.iter().any(|p| p == &Some(*c))).collect();
    let mut pivots = Vec::new();
    let mut residuals = Vec::new();
    for r in 0..n_rows {
        match pivot_of_row[r] {
            Some(col) => {
                let free_coeffs: Vec<(usize, S)> = free_columns
                    .iter()
                    .filter(|&&c| !rows[r][c].is_zero())
                    .map(|&c| (c, rows[r][c].clone()))
                    .collect();
                pivots.push(PivotSolution { column: col, value: b[r].clone(), free_coeffs });
            }
            None => residuals.push(b[r].clone()),
        }
    }
    pivots.sort_by_key(|p| p.column);
    LinearSolveOutcome { pivots, free_columns, residuals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::PhaseSpaceChart;
    use crate::Rat;

    #[test]
    fn unique_solution() {
        let chart = PhaseSpaceChart::new(&["q"]).unwrap();
        let q = Expression::<Rat>::var(&chart.coordinates()[0]);
        let a = Matrix::from_rows(vec![
            vec![Rat::int(2), Rat::int(0)],
            vec![Rat::int(1), Rat::int(1)],
        ]);
        // 2x = 2q ; x + y = 3q  =>  x = q, y = 2q
        let out = solve_with_expression_rhs(&a, &[q.scale(&Rat::int(2)), q.scale(&Rat::int(3))]);
        assert!(out.residuals.is_empty());
        let x = out.particular(2);
        assert_eq!(x[0], q);
        assert_eq!(x[1], q.scale(&Rat::int(2)));
    }

    #[test]
    fn residual_and_free_column() {
        let chart = PhaseSpaceChart::new(&["q"]).unwrap();
        let q = Expression::<Rat>::var(&chart.coordinates()[0]);
        let a = Matrix::from_rows(vec![
            vec![Rat::int(1), Rat::int(1)],
            vec![Rat::int(2), Rat::int(2)],
        ]);
        // x + y = q ; 2x + 2y = 0  =>  residual -2q, pivot x = q - y (free y)
        let out = solve_with_expression_rhs(&a, &[q.clone(), Expression::zero()]);
        assert_eq!(out.free_columns, vec![1]);
        assert_eq!(out.residuals.len(), 1);
        assert_eq!(out.residuals[0], q.scale(&Rat::int(-2)));
        assert_eq!(out.pivots[0].free_coeffs, vec![(1, Rat::int(1))]);
    }
}
