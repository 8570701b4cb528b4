//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Small problems only: every variable is nonnegative, and each row is an
//! inequality or equality against a constant.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LinearProgram {
    /// Minimized objective, one entry per variable.
    pub cost: Vec<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        value: f64,
        /// Row multipliers; Σ rhs·dual reproduces `value` at an optimum.
        dual: Vec<f64>,
    },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// rows × (cols + 1); the last column is the right-hand side.
    t: Vec<Vec<f64>>,
    /// Reduced costs, with the negated objective value in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.cols;
        self.obj = vec![0.0; w + 1];
        self.obj[..cost.len()].copy_from_slice(cost);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = self.obj[b];
            if cb != 0.0 {
                for k in 0..=w {
                    self.obj[k] -= cb * self.t[r][k];
                }
            }
        }
    }

    /// Runs Bland's rule to optimality over the allowed columns. Returns
    /// false if the objective is unbounded below.
    fn optimize(&mut self, allowed: &[bool], iterations: &mut usize, limit: usize) -> Result<bool> {
        let w = self.cols;
        loop {
            let Some(enter) = (0..w).find(|&c| allowed[c] && self.obj[c] < -PIVOT_TOL) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.t.len() {
                let a = self.t[r][enter];
                if a > PIVOT_TOL {
                    let ratio = self.t[r][w] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, best)) => {
                            ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            *iterations += 1;
            if *iterations > limit {
                return Err(Error::IterationLimit { limit });
            }
            self.pivot(r, enter);
        }
    }
}

/// Minimizes `cost · x` subject to the rows and x ≥ 0.
pub(crate) fn simplex(lp: &LinearProgram, limit: usize) -> Result<LpOutcome> {
    let n = lp.cost.len();
    let m = lp.rows.len();
    let slacks = lp.rows.iter().filter(|r| r.relation != Relation::Eq).count();
    // Columns: originals, slacks/surpluses, then one artificial per row that
    // lacks a usable identity column.
    let mut sign = vec![1.0; m];
    let mut slack_col = vec![None; m];
    let mut next = n;
    for (i, row) in lp.rows.iter().enumerate() {
        if row.relation != Relation::Eq {
            slack_col[i] = Some(next);
            next += 1;
        }
        if row.rhs < 0.0 {
            sign[i] = -1.0;
        }
    }
    debug_assert_eq!(next, n + slacks);
    let mut identity = vec![usize::MAX; m];
    let mut artificial = Vec::new();
    for i in 0..m {
        let slack_coef = match lp.rows[i].relation {
            Relation::Le => 1.0,
            Relation::Ge => -1.0,
            Relation::Eq => 0.0,
        } * sign[i];
        if slack_coef > 0.0 {
            identity[i] = slack_col[i].unwrap();
        } else {
            identity[i] = next + artificial.len();
            artificial.push(i);
        }
    }
    let cols = next + artificial.len();
    let mut t = vec![vec![0.0; cols + 1]; m];
    for (i, row) in lp.rows.iter().enumerate() {
        for (k, &a) in row.coeffs.iter().enumerate() {
            t[i][k] = sign[i] * a;
        }
        if let Some(s) = slack_col[i] {
            t[i][s] = sign[i] * if row.relation == Relation::Le { 1.0 } else { -1.0 };
        }
        t[i][cols] = sign[i] * row.rhs;
    }
    for (a, &i) in artificial.iter().enumerate() {
        t[i][next + a] = 1.0;
    }
    let mut tab = Tableau {
        t,
        obj: Vec::new(),
        basis: identity.clone(),
        cols,
    };
    let mut iterations = 0;
    let mut allowed = vec![true; cols];

    if !artificial.is_empty() {
        let mut phase_one = vec![0.0; cols];
        for a in 0..artificial.len() {
            phase_one[next + a] = 1.0;
        }
        tab.set_objective(&phase_one);
        tab.optimize(&allowed, &mut iterations, limit)?;
        let scale = 1.0 + lp.rows.iter().fold(0.0f64, |m, r| m.max(r.rhs.abs()));
        if -tab.obj[cols] > 1e-9 * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive zero-valued artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= next {
                if let Some(c) = (0..next).find(|&c| tab.t[r][c].abs() > PIVOT_TOL) {
                    tab.pivot(r, c);
                }
            }
        }
        for c in next..cols {
            allowed[c] = false;
        }
    }
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&lp.cost);
    tab.set_objective(&cost);
    if !tab.optimize(&allowed, &mut iterations, limit)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0; n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.t[r][cols];
        }
    }
    let value = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    // y = c_B B⁻¹; column `identity[i]` started as e_i, so it now holds B⁻¹e_i.
    let dual = (0..m)
        .map(|i| {
            let y: f64 = tab
                .basis
                .iter()
                .enumerate()
                .map(|(r, &b)| cost[b] * tab.t[r][identity[i]])
                .sum();
            sign[i] * y
        })
        .collect();
    Ok(LpOutcome::Optimal { x, value, dual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[f64], relation: Relation, rhs: f64) -> Row {
        Row {
            coeffs: coeffs.to_vec(),
            relation,
            rhs,
        }
    }

    fn solve(cost: &[f64], rows: Vec<Row>) -> LpOutcome {
        simplex(
            &LinearProgram {
                cost: cost.to_vec(),
                rows,
            },
            10_000,
        )
        .unwrap()
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18
        let out = solve(
            &[-3.0, -5.0],
            vec![
                row(&[1.0, 0.0], Relation::Le, 4.0),
                row(&[0.0, 2.0], Relation::Le, 12.0),
                row(&[3.0, 2.0], Relation::Le, 18.0),
            ],
        );
        let LpOutcome::Optimal { x, value, dual } = out else { panic!("{out:?}") };
        assert!((value + 36.0).abs() < 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
        let dual_value: f64 = [4.0, 12.0, 18.0].iter().zip(&dual).map(|(b, y)| b * y).sum();
        assert!((dual_value - value).abs() < 1e-12);
    }

    #[test]
    fn ge_and_eq_rows_need_phase_one() {
        // min x + y s.t. x + y ≥ 2, x − y = 1
        let out = solve(
            &[1.0, 1.0],
            vec![row(&[1.0, 1.0], Relation::Ge, 2.0), row(&[1.0, -1.0], Relation::Eq, 1.0)],
        );
        let LpOutcome::Optimal { x, value, dual } = out else { panic!("{out:?}") };
        assert!((value - 2.0).abs() < 1e-12);
        assert!((x[0] - 1.5).abs() < 1e-12);
        assert!((2.0 * dual[0] + dual[1] - value).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let out = solve(&[1.0], vec![row(&[1.0], Relation::Ge, 2.0), row(&[1.0], Relation::Le, 1.0)]);
        assert_eq!(out, LpOutcome::Infeasible);
        let out = solve(&[-1.0], vec![row(&[1.0], Relation::Ge, 2.0)]);
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Several constraints through the optimum at the origin.
        let out = solve(
            &[-1.0, -1.0],
            vec![
                row(&[1.0, 1.0], Relation::Le, 0.0),
                row(&[1.0, -1.0], Relation::Le, 0.0),
                row(&[-1.0, 1.0], Relation::Le, 0.0),
                row(&[2.0, 1.0], Relation::Le, 0.0),
            ],
        );
        let LpOutcome::Optimal { value, .. } = out else { panic!("{out:?}") };
        assert_eq!(value, 0.0);
    }

    #[test]
    fn redundant_equalities() {
        let out = solve(
            &[1.0, 2.0],
            vec![row(&[1.0, 1.0], Relation::Eq, 1.0), row(&[2.0, 2.0], Relation::Eq, 2.0)],
        );
        let LpOutcome::Optimal { x, value, .. } = out else { panic!("{out:?}") };
        assert!((value - 1.0).abs() < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let err = simplex(
            &LinearProgram {
                cost: vec![-1.0, -1.0],
                rows: vec![row(&[1.0, 0.0], Relation::Le, 1.0), row(&[0.0, 1.0], Relation::Le, 1.0)],
            },
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::IterationLimit { limit: 1 }));
    }
}
