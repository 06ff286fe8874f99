//! Revised simplex for programs with few variables and many inequality rows.
//!
//! The primal problem is `maximize c.x` subject to `A x <= b` with free
//! variables. We solve its dual, `minimize b.y` subject to `A^T y = c`,
//! `y >= 0`, whose basis has one column per primal variable; the constraint
//! matrix is only ever streamed row-wise during pricing. The primal optimum
//! and the active-row certificate fall out of the final dual basis.

const REDUCED_COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-7;
const DEGENERATE_RATIO_TOL: f64 = 1e-10;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_THRESHOLD: usize = 200;
const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub enum SimplexStatus {
    Optimal,
    /// The primal is unbounded (the dual system `A^T y = c, y >= 0` is
    /// infeasible while the primal is feasible at the origin).
    Unbounded,
    NumericFailure,
}

#[derive(Clone, Debug)]
pub struct SimplexOutcome {
    pub status: SimplexStatus,
    /// Primal objective value when optimal.
    pub objective: f64,
    /// Primal solution when optimal.
    pub solution: Vec<f64>,
    /// Rows active at the optimum within the activity tolerance (1e-6).
    pub tight_rows: Vec<usize>,
}

/// One inequality `sum coeffs * x <= rhs` in sparse form.
#[derive(Clone, Debug)]
pub struct SparseRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

pub fn maximize(num_vars: usize, rows: &[SparseRow], objective: &[f64]) -> SimplexOutcome {
    Solver::new(num_vars, rows, objective).run()
}

struct Solver<'a> {
    nv: usize,
    rows: &'a [SparseRow],
    /// Objective with equality rows sign-normalized to rhs >= 0.
    signs: Vec<f64>,
    c: Vec<f64>,
    /// Basis: column index per equality; columns `0..m` are rows, `m..m+nv`
    /// are artificials.
    basis: Vec<usize>,
    degenerate_streak: usize,
}

impl<'a> Solver<'a> {
    fn new(nv: usize, rows: &'a [SparseRow], objective: &[f64]) -> Solver<'a> {
        let signs: Vec<f64> = objective
            .iter()
            .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
            .collect();
        let c: Vec<f64> = objective
            .iter()
            .zip(&signs)
            .map(|(&v, &s)| v * s)
            .collect();
        let m = rows.len();
        Solver {
            nv,
            rows,
            signs,
            c,
            basis: (m..m + nv).collect(),
            degenerate_streak: 0,
        }
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let m = self.rows.len();
        if j < m {
            for &(slot, coeff) in &self.rows[j].coeffs {
                out[slot] = coeff * self.signs[slot];
            }
        } else {
            out[j - m] = 1.0;
        }
    }

    fn phase_cost(&self, j: usize, phase_one: bool) -> f64 {
        let m = self.rows.len();
        if phase_one {
            if j < m {
                0.0
            } else {
                1.0
            }
        } else if j < m {
            self.rows[j].rhs
        } else {
            0.0
        }
    }

    fn basis_matrix(&self) -> Vec<Vec<f64>> {
        let mut cols = vec![vec![0.0; self.nv]; self.nv];
        for (k, &j) in self.basis.iter().enumerate() {
            self.column(j, &mut cols[k]);
        }
        cols
    }

    fn run(mut self) -> SimplexOutcome {
        match self.optimize(true) {
            Err(status) => self.failure(status),
            Ok(phase1_obj) => {
                if phase1_obj > FEASIBILITY_TOL {
                    return self.failure(SimplexStatus::Unbounded);
                }
                self.evict_artificials();
                self.degenerate_streak = 0;
                match self.optimize(false) {
                    Err(status) => self.failure(status),
                    Ok(_) => self.finish(),
                }
            }
        }
    }

    fn failure(&self, status: SimplexStatus) -> SimplexOutcome {
        SimplexOutcome {
            status,
            objective: f64::NAN,
            solution: Vec::new(),
            tight_rows: Vec::new(),
        }
    }

    /// Run the simplex loop for one phase; returns the phase objective.
    fn optimize(&mut self, phase_one: bool) -> Result<f64, SimplexStatus> {
        let m = self.rows.len();
        let mut col = vec![0.0; self.nv];
        for _ in 0..MAX_PIVOTS {
            let lu = match Lu::factor(self.basis_matrix()) {
                Some(lu) => lu,
                None => return Err(SimplexStatus::NumericFailure),
            };
            let y_basic = lu.solve(&self.c);
            let cost_basic: Vec<f64> = self
                .basis
                .iter()
                .map(|&j| self.phase_cost(j, phase_one))
                .collect();
            let lambda = lu.solve_transposed(&cost_basic);

            // Pricing over all real columns (artificials never re-enter).
            let bland = self.degenerate_streak >= BLAND_THRESHOLD;
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..m {
                if self.basis.contains(&j) {
                    continue;
                }
                self.column(j, &mut col);
                let rc = self.phase_cost(j, phase_one)
                    - lambda.iter().zip(&col).map(|(l, a)| l * a).sum::<f64>();
                if rc < -REDUCED_COST_TOL {
                    if bland {
                        entering = Some((j, rc));
                        break;
                    }
                    match entering {
                        Some((_, best)) if rc >= best => {}
                        _ => entering = Some((j, rc)),
                    }
                }
            }
            let (enter, _) = match entering {
                Some(e) => e,
                None => {
                    let obj = cost_basic
                        .iter()
                        .zip(&y_basic)
                        .map(|(c, y)| c * y)
                        .sum::<f64>();
                    return Ok(obj);
                }
            };

            self.column(enter, &mut col);
            let direction = lu.solve(&col);
            let mut leave: Option<(usize, f64)> = None;
            for (k, &d) in direction.iter().enumerate() {
                if d > PIVOT_TOL {
                    let ratio = (y_basic[k].max(0.0)) / d;
                    match leave {
                        Some((best_k, best_ratio)) => {
                            if ratio < best_ratio - DEGENERATE_RATIO_TOL
                                || (ratio <= best_ratio + DEGENERATE_RATIO_TOL
                                    && self.basis[k] < self.basis[best_k])
                            {
                                leave = Some((k, ratio.min(best_ratio)));
                            }
                        }
                        None => leave = Some((k, ratio)),
                    }
                }
            }
            let (leave_pos, ratio) = match leave {
                Some(l) => l,
                None => {
                    // Dual unbounded. In phase one the objective is bounded
                    // below by zero, so this is numeric trouble either way.
                    return Err(SimplexStatus::NumericFailure);
                }
            };
            self.degenerate_streak = if ratio <= DEGENERATE_RATIO_TOL {
                self.degenerate_streak + 1
            } else {
                0
            };
            self.basis[leave_pos] = enter;
        }
        Err(SimplexStatus::NumericFailure)
    }

    /// Pivot zero-valued artificials out of the basis where possible; a
    /// position with no eligible real column is a dependent equality whose
    /// artificial can never move, so it may stay.
    fn evict_artificials(&mut self) {
        let m = self.rows.len();
        for pos in 0..self.nv {
            if self.basis[pos] < m {
                continue;
            }
            let lu = match Lu::factor(self.basis_matrix()) {
                Some(lu) => lu,
                None => return,
            };
            let mut unit = vec![0.0; self.nv];
            unit[pos] = 1.0;
            let row = lu.solve_transposed(&unit);
            let mut col = vec![0.0; self.nv];
            for j in 0..m {
                if self.basis.contains(&j) {
                    continue;
                }
                self.column(j, &mut col);
                let alpha: f64 = row.iter().zip(&col).map(|(r, a)| r * a).sum();
                if alpha.abs() > 1e-7 {
                    self.basis[pos] = j;
                    break;
                }
            }
        }
    }

    fn finish(&self) -> SimplexOutcome {
        let lu = match Lu::factor(self.basis_matrix()) {
            Some(lu) => lu,
            None => return self.failure(SimplexStatus::NumericFailure),
        };
        let cost_basic: Vec<f64> = self
            .basis
            .iter()
            .map(|&j| self.phase_cost(j, false))
            .collect();
        let lambda = lu.solve_transposed(&cost_basic);
        // Undo the sign normalization to recover the primal point.
        let solution: Vec<f64> = lambda
            .iter()
            .zip(&self.signs)
            .map(|(&l, &s)| l * s)
            .collect();
        let objective: f64 = self
            .c
            .iter()
            .zip(&lambda)
            .map(|(c, l)| c * l)
            .sum();
        let tight_rows: Vec<usize> = self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, row)| {
                let activity: f64 = row
                    .coeffs
                    .iter()
                    .map(|&(slot, coeff)| coeff * solution[slot])
                    .sum();
                (activity - row.rhs).abs() <= 1e-6
            })
            .map(|(i, _)| i)
            .collect();
        SimplexOutcome {
            status: SimplexStatus::Optimal,
            objective,
            solution,
            tight_rows,
        }
    }
}

/// Dense LU with partial pivoting; sized for bases of at most a few dozen
/// columns, refactorized every pivot.
struct Lu {
    n: usize,
    /// Column-major factors.
    cols: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut cols: Vec<Vec<f64>>) -> Option<Lu> {
        let n = cols.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot_abs) = (k..n)
                .map(|r| (r, cols[k][r].abs()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .unwrap();
            if pivot_abs < 1e-12 {
                return None;
            }
            if pivot_row != k {
                for col in cols.iter_mut() {
                    col.swap(k, pivot_row);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = cols[k][k];
            for r in (k + 1)..n {
                let factor = cols[k][r] / pivot;
                cols[k][r] = factor;
                if factor != 0.0 {
                    for col in cols.iter_mut().skip(k + 1) {
                        col[r] -= factor * col[k];
                    }
                }
            }
        }
        Some(Lu { n, cols, perm })
    }

    /// Solve `M x = b` where `M` is the factored matrix.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for k in 0..n {
            for r in (k + 1)..n {
                x[r] -= self.cols[k][r] * x[k];
            }
        }
        for k in (0..n).rev() {
            for j in (k + 1)..n {
                x[k] -= self.cols[j][k] * x[j];
            }
            x[k] /= self.cols[k][k];
        }
        x
    }

    /// Solve `M^T x = b`.
    fn solve_transposed(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        // U^T forward solve.
        for k in 0..n {
            for j in 0..k {
                x[k] -= self.cols[k][j] * x[j];
            }
            x[k] /= self.cols[k][k];
        }
        // L^T backward solve.
        for k in (0..n).rev() {
            for r in (k + 1)..n {
                x[k] -= self.cols[k][r] * x[r];
            }
        }
        let mut out = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            out[p] = x[k];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[(usize, f64)], rhs: f64) -> SparseRow {
        SparseRow {
            coeffs: coeffs.to_vec(),
            rhs,
        }
    }

    #[test]
    fn one_variable_bound() {
        let out = maximize(1, &[row(&[(0, 1.0)], 2f64.ln())], &[1.0]);
        assert_eq!(out.status, SimplexStatus::Optimal);
        assert!((out.objective - 2f64.ln()).abs() < 1e-10);
        assert_eq!(out.tight_rows, vec![0]);
    }

    #[test]
    fn two_variable_lp() {
        // max x0 + x1 s.t. x0 + 2 x1 <= 4, 3 x0 + x1 <= 6, x0 <= 10, x1 <= 10
        let rows = vec![
            row(&[(0, 1.0), (1, 2.0)], 4.0),
            row(&[(0, 3.0), (1, 1.0)], 6.0),
            row(&[(0, 1.0)], 10.0),
            row(&[(1, 1.0)], 10.0),
        ];
        let out = maximize(2, &rows, &[1.0, 1.0]);
        assert_eq!(out.status, SimplexStatus::Optimal);
        // Intersection of the first two rows: x = (8/5, 6/5).
        assert!((out.objective - 14.0 / 5.0).abs() < 1e-9);
        assert!((out.solution[0] - 1.6).abs() < 1e-9);
        assert!((out.solution[1] - 1.2).abs() < 1e-9);
        assert_eq!(out.tight_rows, vec![0, 1]);
    }

    #[test]
    fn detects_unbounded() {
        let rows = vec![row(&[(0, 1.0), (1, -1.0)], 1.0)];
        let out = maximize(2, &rows, &[1.0, 0.0]);
        assert_eq!(out.status, SimplexStatus::Unbounded);
    }

    #[test]
    fn negative_objective_direction() {
        // max -x0 s.t. -x0 <= 3 -> optimum 3 at x0 = -3.
        let out = maximize(1, &[row(&[(0, -1.0)], 3.0)], &[-1.0]);
        assert_eq!(out.status, SimplexStatus::Optimal);
        assert!((out.objective - 3.0).abs() < 1e-9);
        assert!((out.solution[0] + 3.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_rows_are_harmless() {
        let rows = vec![
            row(&[(0, 1.0)], 5.0),
            row(&[(0, 1.0)], 5.0),
            row(&[(0, 2.0)], 10.0),
        ];
        let out = maximize(1, &rows, &[1.0]);
        assert_eq!(out.status, SimplexStatus::Optimal);
        assert!((out.objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_across_runs() {
        let rows = vec![
            row(&[(0, 1.0), (1, 2.0), (2, 1.0)], 7.0),
            row(&[(0, 2.0), (1, 1.0)], 5.0),
            row(&[(1, 1.0), (2, 3.0)], 9.0),
            row(&[(0, 1.0)], 3.0),
            row(&[(1, 1.0)], 3.0),
            row(&[(2, 1.0)], 3.0),
        ];
        let a = maximize(3, &rows, &[1.0, 1.0, 1.0]);
        let b = maximize(3, &rows, &[1.0, 1.0, 1.0]);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.solution, b.solution);
    }
}
