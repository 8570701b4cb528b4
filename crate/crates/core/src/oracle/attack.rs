//! Ray attacks: sound upper bounds on ε from explicit misclassified points.

use crate::geometry::{rho, PairwiseProblem};
use crate::model::{PrototypeModel, ThreatSpec};
use crate::norm::sign;

const SCAN_STEPS: usize = 32;
const BISECTION_STEPS: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct Attack {
    /// ‖point − z‖_q
    pub radius: f64,
    /// A point classified differently from the label.
    pub point: Vec<f64>,
}

struct Budget(usize);

impl Budget {
    fn wrong(&mut self, model: &PrototypeModel, x: &[f64], y: usize) -> Option<bool> {
        if self.0 == 0 {
            return None;
        }
        self.0 -= 1;
        Some(model.is_adversarial(x, y))
    }
}

/// Searches segments from `z` toward every other-class prototype, toward
/// each pairwise minimizer (extended past it), and for q = ∞ along the sign
/// direction of each pair. Every segment is scanned for the first
/// misclassified sample and bisected back toward the last correct one.
///
/// `budget` caps the number of classifier evaluations. Returns `None` when
/// nothing adversarial was found; a returned point is always misclassified.
pub fn attack_upper_bound(
    model: &PrototypeModel,
    z: &[f64],
    y: usize,
    threat: &ThreatSpec,
    budget: usize,
) -> Option<Attack> {
    let mut budget = Budget(budget);
    if budget.wrong(model, z, y)? {
        return Some(Attack {
            radius: 0.0,
            point: z.to_vec(),
        });
    }
    let q = threat.q.norm();
    let boxed = threat.domain.is_box();
    let p = model.metric().norm();
    let nb = model.neighbors(z, y).ok()?;
    let own = model.prototype(nb.own_index);
    let fit = |x: Vec<f64>| -> Vec<f64> {
        if boxed {
            x.into_iter().map(|v| v.clamp(0.0, 1.0)).collect()
        } else {
            x
        }
    };

    // (priority, segment end) pairs; cheaper pairwise values first.
    let mut targets: Vec<(f64, Vec<f64>)> = Vec::new();
    for j in model.other_members(y) {
        let other = model.prototype(j);
        let pb = PairwiseProblem::new(z, own, other, p, q, threat.domain);
        if let Ok(r) = rho(&pb) {
            if let Some(x) = r.minimizer {
                let end: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a + 2.0 * (b - a)).collect();
                targets.push((r.value, fit(end)));
            }
        }
        if q == crate::norm::Norm::Linf {
            let reach = 2.0 * q.dist(other, z);
            let end = (0..z.len())
                .map(|k| z[k] + reach * sign(other[k] - own[k]))
                .collect();
            targets.push((reach / 2.0, fit(end)));
        }
        targets.push((f64::INFINITY, fit(other.to_vec())));
    }
    targets.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<Attack> = None;
    'targets: for (_, end) in targets {
        let point_at = |t: f64| -> Vec<f64> { z.iter().zip(&end).map(|(a, b)| a + t * (b - a)).collect() };
        let mut prev = 0.0;
        for s in 1..=SCAN_STEPS {
            let t = s as f64 / SCAN_STEPS as f64;
            let x = point_at(t);
            if best.as_ref().is_some_and(|b| q.dist(&x, z) >= b.radius) {
                continue 'targets;
            }
            let Some(wrong) = budget.wrong(model, &x, y) else {
                break 'targets;
            };
            if wrong {
                let (mut lo, mut hi) = (prev, t);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    match budget.wrong(model, &point_at(mid), y) {
                        Some(true) => hi = mid,
                        Some(false) => lo = mid,
                        None => break,
                    }
                }
                let point = point_at(hi);
                let radius = q.dist(&point, z);
                if best.as_ref().is_none_or(|b| radius < b.radius) {
                    best = Some(Attack { radius, point });
                }
                continue 'targets;
            }
            prev = t;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Domain, Metric};
    use crate::norm::Norm;

    fn e1() -> PrototypeModel {
        PrototypeModel::new(
            2,
            2,
            vec![vec![1.0, 0.0], vec![3.0, 0.0]],
            vec![0, 1],
            Metric::L2,
            Domain::Unbounded,
        )
        .unwrap()
    }

    #[test]
    fn e1_attack_is_tight_and_sound() {
        let m = e1();
        let a = attack_upper_bound(&m, &[0.0, 0.0], 0, &ThreatSpec::new(Norm::L2, Domain::Unbounded), 10_000).unwrap();
        assert!(a.radius <= 2.0 + 1e-6);
        assert!(a.radius >= 2.0);
        assert!(m.is_adversarial(&a.point, 0));
    }

    #[test]
    fn misclassified_is_zero() {
        let a = attack_upper_bound(&e1(), &[3.0, 0.0], 0, &ThreatSpec::new(Norm::L2, Domain::Unbounded), 10).unwrap();
        assert_eq!(a.radius, 0.0);
    }

    #[test]
    fn zero_budget_finds_nothing() {
        assert!(attack_upper_bound(&e1(), &[0.0, 0.0], 0, &ThreatSpec::new(Norm::L2, Domain::Unbounded), 0).is_none());
    }
}
