//! The convex program behind one other-class prototype: the q-distance from
//! the query to the cell where that prototype beats every own-class one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::l2_halfspace;
use crate::model::PrototypeModel;
use crate::norm::{dot, Norm};

use super::lp::{simplex, LinearProgram, LpOutcome, Relation, Row};

/// Hard cap on solver iterations (sweeps for the QP, pivots for the LP).
pub const ITERATION_LIMIT: usize = 100_000;

/// min ‖x − z‖_q over ⟨x, normal⟩ + offset ≥ 0 for every row, optionally
/// inside [0,1]^d.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSubproblem {
    pub q: Norm,
    pub z: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
    pub boxed: bool,
    /// A point known to satisfy every row (and the box), used to turn
    /// slightly infeasible iterates into feasible ones.
    pub anchor: Option<Vec<f64>>,
}

impl ConvexSubproblem {
    pub fn new(q: Norm, z: Vec<f64>, rows: Vec<(Vec<f64>, f64)>, boxed: bool) -> Self {
        ConvexSubproblem {
            q,
            z,
            rows,
            boxed,
            anchor: None,
        }
    }

    /// Rows ⟨x, w_j − w_i⟩ + (‖w_i‖² − ‖w_j‖²)/2 ≥ 0 for every prototype i of
    /// class `y`; `other` is the index of w_j.
    pub fn for_prototype(model: &PrototypeModel, z: &[f64], y: usize, other: usize, q: Norm, boxed: bool) -> Self {
        let wj = model.prototype(other);
        let rows = model
            .class_members(y)
            .iter()
            .map(|&i| l2_halfspace(model.prototype(i), wj))
            .collect();
        let anchor = (!boxed || wj.iter().all(|v| (0.0..=1.0).contains(v))).then(|| wj.to_vec());
        ConvexSubproblem {
            q,
            z: z.to_vec(),
            rows,
            boxed,
            anchor,
        }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn row_value(&self, i: usize, x: &[f64]) -> f64 {
        dot(&self.rows[i].0, x) + self.rows[i].1
    }

    /// Absolute slack accepted when checking a row at `x`.
    pub(crate) fn row_tolerance(&self, i: usize, x: &[f64]) -> f64 {
        let (a, b) = &self.rows[i];
        let reach = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        1e-11 * (b.abs() + Norm::L1.norm(a) * reach)
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        (!self.boxed || x.iter().all(|v| (0.0..=1.0).contains(v)))
            && (0..self.rows.len()).all(|i| self.row_value(i, x) >= -self.row_tolerance(i, x))
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let d = self.dim();
        if let Some((a, _)) = self.rows.iter().find(|(a, _)| a.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: a.len(),
            });
        }
        if let Some(a) = &self.anchor {
            if a.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: a.len(),
                });
            }
        }
        if self.boxed {
            crate::geometry::check_in_box(&self.z)?;
        }
        Ok(())
    }

    /// Point maximizing the smallest row value (capped at 1), or `None` when
    /// the rows and box have no common point.
    pub(crate) fn deepest_point(&self) -> Result<Option<Vec<f64>>> {
        // Variables: x⁺, x⁻ (or x alone in the box), s⁺, s⁻.
        let d = self.dim();
        let split = !self.boxed;
        let nx = if split { 2 * d } else { d };
        let n = nx + 2;
        let mut rows = Vec::new();
        for (a, b) in &self.rows {
            // ⟨a, x⟩ − s ≥ −b
            let mut coeffs = vec![0.0; n];
            for k in 0..d {
                coeffs[k] = a[k];
                if split {
                    coeffs[d + k] = -a[k];
                }
            }
            coeffs[nx] = -1.0;
            coeffs[nx + 1] = 1.0;
            rows.push(Row {
                coeffs,
                relation: Relation::Ge,
                rhs: -b,
            });
        }
        let mut cap = vec![0.0; n];
        cap[nx] = 1.0;
        cap[nx + 1] = -1.0;
        rows.push(Row {
            coeffs: cap,
            relation: Relation::Le,
            rhs: 1.0,
        });
        if self.boxed {
            for k in 0..d {
                let mut coeffs = vec![0.0; n];
                coeffs[k] = 1.0;
                rows.push(Row {
                    coeffs,
                    relation: Relation::Le,
                    rhs: 1.0,
                });
            }
        }
        let mut cost = vec![0.0; n];
        cost[nx] = -1.0;
        cost[nx + 1] = 1.0;
        match simplex(&LinearProgram { cost, rows }, ITERATION_LIMIT)? {
            LpOutcome::Optimal { x, .. } => {
                let point: Vec<f64> = (0..d)
                    .map(|k| {
                        let v = if split { x[k] - x[d + k] } else { x[k] };
                        if self.boxed {
                            v.clamp(0.0, 1.0)
                        } else {
                            v
                        }
                    })
                    .collect();
                Ok(self.is_feasible(&point).then_some(point))
            }
            LpOutcome::Infeasible => Ok(None),
            LpOutcome::Unbounded => Err(Error::InvariantViolation("slack capped at 1 cannot be unbounded".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Primal and dual agree within tolerance.
    Optimal,
    /// The dual value exceeded the caller's incumbent; only `dual_lower` is
    /// meaningful.
    EarlyTerminated,
    /// The rows and the box have no common point.
    Infeasible,
    /// The iteration cap was hit; `dual_lower` is still a valid bound.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    /// Distance of the best feasible point found (+∞ when none).
    pub primal_value: f64,
    /// Weak-duality lower bound on the optimal distance.
    pub dual_lower: f64,
    pub x: Option<Vec<f64>>,
    pub status: SolveStatus,
}

impl SolveOutcome {
    pub(crate) fn infeasible() -> Self {
        SolveOutcome {
            primal_value: f64::INFINITY,
            dual_lower: f64::INFINITY,
            x: None,
            status: SolveStatus::Infeasible,
        }
    }

    pub(crate) fn at_query(z: &[f64]) -> Self {
        SolveOutcome {
            primal_value: 0.0,
            dual_lower: 0.0,
            x: Some(z.to_vec()),
            status: SolveStatus::Optimal,
        }
    }
}

/// Solves the subproblem for q ∈ {1, ∞} as an epigraph LP.
///
/// Writes x = z + p − n with p, n ≥ 0. For q = 1 the objective is Σ(p + n);
/// for q = ∞ it is t with p_k + n_k ≤ t.
pub fn solve_r_l2_lp(sub: &ConvexSubproblem) -> Result<SolveOutcome> {
    if sub.q == Norm::L2 {
        return Err(Error::PreconditionViolated("the LP handles q = l1 or linf".into()));
    }
    sub.validate()?;
    let d = sub.dim();
    let z = &sub.z;
    if sub.is_feasible(z) {
        return Ok(SolveOutcome::at_query(z));
    }
    let linf = sub.q == Norm::Linf;
    let n = 2 * d + usize::from(linf);
    let mut rows = Vec::new();
    for (a, b) in &sub.rows {
        let mut coeffs = vec![0.0; n];
        for k in 0..d {
            coeffs[k] = a[k];
            coeffs[d + k] = -a[k];
        }
        rows.push(Row {
            coeffs,
            relation: Relation::Ge,
            rhs: -(dot(a, z) + b),
        });
    }
    if linf {
        for k in 0..d {
            let mut coeffs = vec![0.0; n];
            coeffs[k] = 1.0;
            coeffs[d + k] = 1.0;
            coeffs[2 * d] = -1.0;
            rows.push(Row {
                coeffs,
                relation: Relation::Le,
                rhs: 0.0,
            });
        }
    }
    if sub.boxed {
        for k in 0..d {
            // 0 ≤ z_k + p_k − n_k ≤ 1; each direction only ever needs one side.
            let mut up = vec![0.0; n];
            up[k] = 1.0;
            rows.push(Row {
                coeffs: up,
                relation: Relation::Le,
                rhs: 1.0 - z[k],
            });
            let mut down = vec![0.0; n];
            down[d + k] = 1.0;
            rows.push(Row {
                coeffs: down,
                relation: Relation::Le,
                rhs: z[k],
            });
        }
    }
    let mut cost = vec![0.0; n];
    if linf {
        cost[2 * d] = 1.0;
    } else {
        cost.iter_mut().for_each(|c| *c = 1.0);
    }
    let lp = LinearProgram { cost, rows };
    match simplex(&lp, ITERATION_LIMIT) {
        Ok(LpOutcome::Optimal { x: vars, value, dual }) => {
            let x: Vec<f64> = (0..d)
                .map(|k| {
                    let v = z[k] + vars[k] - vars[d + k];
                    if sub.boxed {
                        v.clamp(0.0, 1.0)
                    } else {
                        v
                    }
                })
                .collect();
            let dual_value: f64 = lp.rows.iter().zip(&dual).map(|(r, y)| r.rhs * y).sum();
            Ok(SolveOutcome {
                primal_value: sub.q.dist(&x, z).max(value),
                dual_lower: dual_value.min(value).max(0.0),
                x: Some(x),
                status: SolveStatus::Optimal,
            })
        }
        Ok(LpOutcome::Infeasible) => Ok(SolveOutcome::infeasible()),
        Ok(LpOutcome::Unbounded) => Err(Error::InvariantViolation("distance LP cannot be unbounded".into())),
        Err(Error::IterationLimit { .. }) => Ok(SolveOutcome {
            primal_value: f64::INFINITY,
            dual_lower: 0.0,
            x: None,
            status: SolveStatus::IterationLimit,
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blocker(q: Norm, boxed: bool) -> ConvexSubproblem {
        let own = [[0.0, 1.0], [0.0, -1.0]];
        let rows = own.iter().map(|w| l2_halfspace(w, &[2.0, 0.0])).collect();
        ConvexSubproblem::new(q, vec![0.0, 0.0], rows, boxed)
    }

    #[test]
    fn two_blocker_lp_values() {
        for q in [Norm::Linf, Norm::L1] {
            let out = solve_r_l2_lp(&two_blocker(q, false)).unwrap();
            assert_eq!(out.status, SolveStatus::Optimal);
            assert!((out.primal_value - 0.75).abs() < 1e-9, "q={q} {out:?}");
            assert!((out.dual_lower - 0.75).abs() < 1e-9);
            let x = out.x.unwrap();
            assert!((x[0] - 0.75).abs() < 1e-9 && x[1].abs() < 1e-9);
        }
    }

    #[test]
    fn single_row_l1() {
        let sub = ConvexSubproblem::new(Norm::L1, vec![0.0, 0.0], vec![(vec![1.0, 0.0], -2.0)], false);
        let out = solve_r_l2_lp(&sub).unwrap();
        assert!((out.primal_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lp_box_infeasible() {
        let sub = ConvexSubproblem::new(Norm::Linf, vec![0.5, 0.5], vec![(vec![1.0, 0.0], -2.0)], true);
        assert_eq!(solve_r_l2_lp(&sub).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn lp_box_pushes_mass_elsewhere() {
        // x₁ + x₂ ≥ 1.6 from (0.9, 0.2): x₁ saturates at 1, the rest goes to x₂.
        let sub = ConvexSubproblem::new(Norm::L1, vec![0.9, 0.2], vec![(vec![1.0, 1.0], -1.6)], true);
        let out = solve_r_l2_lp(&sub).unwrap();
        assert!((out.primal_value - 0.5).abs() < 1e-12, "{out:?}");
        let sub = ConvexSubproblem { q: Norm::Linf, ..sub };
        let out = solve_r_l2_lp(&sub).unwrap();
        assert!((out.primal_value - 0.4).abs() < 1e-12, "{out:?}");
    }

    #[test]
    fn deepest_point_detects_empty_box_cell() {
        let rows = vec![(vec![1.0, 0.0], -0.8), (vec![-1.0, 0.0], 0.5)];
        let sub = ConvexSubproblem::new(Norm::L2, vec![0.5, 0.5], rows, true);
        assert!(sub.deepest_point().unwrap().is_none());
        let rows = vec![(vec![1.0, 0.0], -0.3), (vec![-1.0, 0.0], 0.5)];
        let sub = ConvexSubproblem::new(Norm::L2, vec![0.5, 0.5], rows, true);
        let p = sub.deepest_point().unwrap().unwrap();
        assert!(sub.is_feasible(&p));
    }
}
