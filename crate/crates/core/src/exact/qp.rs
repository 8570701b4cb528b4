//! Euclidean projection onto a polytope (optionally inside the unit box) by
//! dual coordinate ascent.
//!
//! For multipliers λ ≥ 0 the Lagrangian minimizer is x(λ) = clamp(z + Aᵀλ)
//! and the dual function is g(λ) = ½‖x(λ) − z‖² − Σ λ_i (⟨a_i, x(λ)⟩ + b_i).
//! Maximizing g over one λ_i is exactly a single-row projection, so each
//! sweep cycles through the rows. Every few sweeps the active set is solved
//! directly (a Newton step), which usually finishes the job.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::box_multiplier;
use crate::norm::{dot, sq_dist, sq_norm, Norm};

use super::subproblem::{ConvexSubproblem, SolveOutcome, SolveStatus, ITERATION_LIMIT};

const POLISH_EVERY: usize = 4;
/// Sweeps before falling back to an LP for a strictly feasible point.
const ANCHOR_AFTER: usize = 50;

struct Dual<'a> {
    sub: &'a ConvexSubproblem,
    lambda: Vec<f64>,
    /// z + Aᵀλ before clamping.
    u: Vec<f64>,
}

impl Dual<'_> {
    fn point(&self, u: &[f64]) -> Vec<f64> {
        if self.sub.boxed {
            u.iter().map(|v| v.clamp(0.0, 1.0)).collect()
        } else {
            u.to_vec()
        }
    }

    fn value_at(&self, lambda: &[f64], u: &[f64]) -> f64 {
        let x = self.point(u);
        let penalty: f64 = lambda
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != 0.0)
            .map(|(i, &l)| l * self.sub.row_value(i, &x))
            .sum();
        0.5 * sq_dist(&x, &self.sub.z) - penalty
    }

    fn sweep(&mut self) -> Result<bool> {
        for i in 0..self.sub.rows.len() {
            let (a, b) = &self.sub.rows[i];
            let old = self.lambda[i];
            if old != 0.0 {
                self.u.iter_mut().zip(a).for_each(|(u, ak)| *u -= old * ak);
            }
            let new = if self.sub.boxed {
                match box_multiplier(&self.u, a, *b) {
                    Some(l) => l,
                    None => return Ok(false),
                }
            } else {
                let na = sq_norm(a);
                if na == 0.0 {
                    if *b < 0.0 {
                        return Ok(false);
                    }
                    0.0
                } else {
                    (-(dot(&self.u, a) + b) / na).max(0.0)
                }
            };
            if new != 0.0 {
                self.u.iter_mut().zip(a).for_each(|(u, ak)| *u += new * ak);
            }
            self.lambda[i] = new;
        }
        Ok(true)
    }

    /// Solves the stationarity system on the current active set: rows with
    /// λ_i > 0 held at equality, coordinates strictly inside the box free.
    fn polish(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let sub = self.sub;
        let active: Vec<usize> = (0..sub.rows.len()).filter(|&i| self.lambda[i] > 0.0).collect();
        if active.is_empty() {
            return None;
        }
        let d = sub.dim();
        let free: Vec<bool> = (0..d).map(|k| !sub.boxed || (self.u[k] > 0.0 && self.u[k] < 1.0)).collect();
        let fixed: Vec<f64> = (0..d).map(|k| self.u[k].clamp(0.0, 1.0)).collect();
        let s = active.len();
        let mut m = DMatrix::<f64>::zeros(s, s);
        let mut r = DVector::<f64>::zeros(s);
        for (p, &i) in active.iter().enumerate() {
            let (ai, bi) = &sub.rows[i];
            let mut rhs = -bi;
            for k in 0..d {
                rhs -= ai[k] * if free[k] { sub.z[k] } else { fixed[k] };
            }
            r[p] = rhs;
            for (q, &l) in active.iter().enumerate().skip(p) {
                let al = &sub.rows[l].0;
                let v: f64 = (0..d).filter(|&k| free[k]).map(|k| ai[k] * al[k]).sum();
                m[(p, q)] = v;
                m[(q, p)] = v;
            }
        }
        let sol = match m.clone().cholesky() {
            Some(c) => c.solve(&r),
            None => m.svd(true, true).solve(&r, 1e-13).ok()?,
        };
        let mut lambda = vec![0.0; sub.rows.len()];
        let mut u = sub.z.clone();
        for (p, &i) in active.iter().enumerate() {
            let l = sol[p].max(0.0);
            if !l.is_finite() {
                return None;
            }
            lambda[i] = l;
            u.iter_mut().zip(&sub.rows[i].0).for_each(|(uk, ak)| *uk += l * ak);
        }
        Some((lambda, u))
    }
}

/// Moves `x` toward `anchor` just far enough to satisfy every row.
fn repair(sub: &ConvexSubproblem, x: &[f64], anchor: &[f64]) -> Vec<f64> {
    let mut t: f64 = 0.0;
    for i in 0..sub.rows.len() {
        let v = sub.row_value(i, x);
        if v < 0.0 {
            let s = sub.row_value(i, anchor);
            t = t.max(if s > v { v / (v - s) } else { 1.0 });
        }
    }
    let t = t.min(1.0);
    x.iter().zip(anchor).map(|(a, b)| a + t * (b - a)).collect()
}

/// Solves the q = 2 subproblem. With an `incumbent`, stops as soon as the
/// dual bound proves the optimum exceeds it.
pub fn solve_r_l2(sub: &ConvexSubproblem, incumbent: Option<f64>) -> Result<SolveOutcome> {
    solve_with_limit(sub, incumbent, ITERATION_LIMIT)
}

pub(crate) fn solve_with_limit(sub: &ConvexSubproblem, incumbent: Option<f64>, limit: usize) -> Result<SolveOutcome> {
    if sub.q != Norm::L2 {
        return Err(Error::PreconditionViolated("the QP handles q = l2 only".into()));
    }
    sub.validate()?;
    let z = &sub.z;
    if sub.is_feasible(z) {
        return Ok(SolveOutcome::at_query(z));
    }
    if sub.boxed {
        // A row no box point can satisfy.
        let hopeless = sub
            .rows
            .iter()
            .any(|(a, b)| b + a.iter().map(|v| v.max(0.0)).sum::<f64>() < 0.0);
        if hopeless {
            return Ok(SolveOutcome::infeasible());
        }
    }
    let mut dual = Dual {
        sub,
        lambda: vec![0.0; sub.rows.len()],
        u: z.clone(),
    };
    let mut anchor = sub.anchor.clone();
    let mut best_dual = 0.0f64;
    let mut best_primal: Option<(f64, Vec<f64>)> = None;
    let consider = |x: Vec<f64>, best: &mut Option<(f64, Vec<f64>)>| {
        if sub.is_feasible(&x) {
            let v = Norm::L2.dist(&x, z);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                *best = Some((v, x));
            }
        }
    };

    for sweep in 1..=limit {
        if !dual.sweep()? {
            return Ok(SolveOutcome::infeasible());
        }
        let g = dual.value_at(&dual.lambda, &dual.u);
        best_dual = best_dual.max((2.0 * g.max(0.0)).sqrt());

        if sweep % POLISH_EVERY == 1 {
            if let Some((lambda, u)) = dual.polish() {
                let g = dual.value_at(&lambda, &u);
                let bound = (2.0 * g.max(0.0)).sqrt();
                best_dual = best_dual.max(bound);
                consider(dual.point(&u), &mut best_primal);
                if bound >= (2.0 * dual.value_at(&dual.lambda, &dual.u).max(0.0)).sqrt() {
                    dual.lambda = lambda;
                    dual.u = u;
                }
            }
        }
        consider(dual.point(&dual.u), &mut best_primal);
        if sweep == ANCHOR_AFTER && anchor.is_none() {
            match sub.deepest_point()? {
                Some(p) => anchor = Some(p),
                None => return Ok(SolveOutcome::infeasible()),
            }
        }
        if let Some(a) = &anchor {
            consider(repair(sub, &dual.point(&dual.u), a), &mut best_primal);
        }

        if let Some(limit) = incumbent {
            if best_dual > limit {
                return Ok(SolveOutcome {
                    primal_value: best_primal.as_ref().map_or(f64::INFINITY, |(v, _)| *v),
                    dual_lower: best_dual,
                    x: best_primal.map(|(_, x)| x),
                    status: SolveStatus::EarlyTerminated,
                });
            }
        }
        if let Some((v, _)) = &best_primal {
            if v - best_dual <= 1e-8 * (1.0 + v) {
                let (v, x) = best_primal.unwrap();
                return Ok(SolveOutcome {
                    primal_value: v,
                    dual_lower: best_dual.min(v),
                    x: Some(x),
                    status: SolveStatus::Optimal,
                });
            }
        }
    }
    Ok(SolveOutcome {
        primal_value: best_primal.as_ref().map_or(f64::INFINITY, |(v, _)| *v),
        dual_lower: best_dual,
        x: best_primal.map(|(_, x)| x),
        status: SolveStatus::IterationLimit,
    })
}
