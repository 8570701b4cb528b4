//! Exact minimal perturbations and the staged certification pipeline.
//!
//! For a correctly classified query with label y the minimal perturbation
//! is ε = min over other-class prototypes j of r_j, the distance to the
//! region where w_j beats every own-class prototype. Certification runs in
//! stages, each cheaper than the next:
//!
//! 1. pairwise values against the nearest own-class prototype (closed forms,
//!    unbounded domain); if the best minimizer is already in r_j's region
//!    the bound is exact;
//! 2. box-constrained pairwise values, recomputed only where they can still
//!    lower the bound;
//! 3. the convex program for each j whose lower bound is below the best
//!    exact value found so far, stopped early once its dual passes it.

mod lp;
mod qp;
mod subproblem;

pub use qp::solve_r_l2;
pub use subproblem::{solve_r_l2_lp, ConvexSubproblem, SolveOutcome, SolveStatus, ITERATION_LIMIT};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{check_in_box, rho, rho_l1_linf, trivial_semimetric_bound, PairwiseProblem, PairwiseResult};
use crate::model::{Domain, PrototypeModel, ThreatNorm, ThreatSpec};
use crate::norm::Norm;
use crate::support::{self, Exactness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyMode {
    #[default]
    LowerBound,
    Exact,
}

impl FromStr for CertifyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lower" | "lower_bound" | "lower-bound" => Ok(CertifyMode::LowerBound),
            "exact" => Ok(CertifyMode::Exact),
            other => Err(Error::InvalidConfig(format!("unknown mode '{other}' (expected lower or exact)"))),
        }
    }
}

impl fmt::Display for CertifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CertifyMode::LowerBound => "lower",
            CertifyMode::Exact => "exact",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CertifyOptions {
    /// Skip prototypes whose lower bound cannot beat the current best.
    pub prune: bool,
    /// Stop a convex solve once its dual exceeds the incumbent.
    pub early_termination: bool,
    /// Run the ray attack with this many classifier evaluations.
    pub attack_budget: Option<usize>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            prune: true,
            early_termination: true,
            attack_budget: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    pub shortcut_hit: bool,
    pub subproblems_solved: usize,
    pub pruned: usize,
    /// Seconds.
    pub wall_time: f64,
}

/// Every bound computed on the way to the certificate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BoundBreakdown {
    /// Half the gap between the nearest other-class and own-class distances.
    pub trivial: f64,
    pub minmax_unbounded: Option<f64>,
    pub minmax_box: Option<f64>,
    pub sphere_dual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub label: usize,
    pub label_predicted: usize,
    pub correct: bool,
    pub lower_bound: f64,
    pub exact: Option<f64>,
    pub upper_bound: Option<f64>,
    pub bounds: BoundBreakdown,
    pub diagnostics: Diagnostics,
}

impl Certificate {
    pub(crate) fn misclassified(label: usize, predicted: usize) -> Self {
        Certificate {
            label,
            label_predicted: predicted,
            correct: false,
            lower_bound: 0.0,
            exact: Some(0.0),
            upper_bound: Some(0.0),
            bounds: BoundBreakdown::default(),
            diagnostics: Diagnostics::default(),
        }
    }

    /// The exact radius when known, otherwise the lower bound.
    pub fn certified_radius(&self) -> f64 {
        self.exact.unwrap_or(self.lower_bound)
    }

    /// Robust at `radius` under the closed-ball convention.
    pub fn is_robust_at(&self, radius: f64) -> bool {
        self.correct && self.certified_radius() >= radius
    }
}

/// Result of the min-max bound with the nearest own-class prototype fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxBound {
    pub value: f64,
    /// Other-class prototype attaining the minimum (none when misclassified).
    pub other_index: Option<usize>,
    pub minimizer: Option<Vec<f64>>,
    /// The minimizer is closer to `other_index` than to every own-class
    /// prototype, so `value` is the exact minimal perturbation.
    pub tight: bool,
}

/// Whether `x` lies in the closed region where prototype `j` is at least as
/// close as every prototype of class `y` (and inside the box if `boxed`).
fn in_region(model: &PrototypeModel, x: &[f64], y: usize, j: usize, boxed: bool) -> bool {
    if boxed && x.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return false;
    }
    let dj = model.distance(x, j);
    let tol = 1e-9 * (1.0 + dj);
    model.class_members(y).iter().all(|&i| model.distance(x, i) >= dj - tol)
}

struct Pairwise {
    other: usize,
    result: PairwiseResult,
}

fn pairwise_against_nearest(
    model: &PrototypeModel,
    z: &[f64],
    y: usize,
    own: usize,
    q: Norm,
    domain: Domain,
    only: Option<&[usize]>,
) -> Result<Vec<Pairwise>> {
    let p = model.metric().norm();
    let wi = model.prototype(own);
    let others: Vec<usize> = match only {
        Some(js) => js.to_vec(),
        None => model.other_members(y).collect(),
    };
    others
        .into_iter()
        .map(|j| {
            let result = rho(&PairwiseProblem::new(z, wi, model.prototype(j), p, q, domain))?;
            Ok(Pairwise { other: j, result })
        })
        .collect()
}

fn argmin(values: &[Pairwise]) -> Option<&Pairwise> {
    values
        .iter()
        .fold(None, |best: Option<&Pairwise>, v| match best {
            Some(b) if b.result.value <= v.result.value => Some(b),
            _ => Some(v),
        })
}

/// min over other-class j of ρ(z)_{i*, j} with i* the nearest own-class
/// prototype, plus the tightness test on its minimizer.
pub fn minmax_lower_bound(model: &PrototypeModel, z: &[f64], y: usize, q: Norm, domain: Domain) -> Result<MinMaxBound> {
    let nb = model.neighbors(z, y)?;
    if model.classify(z)?.class != y {
        return Ok(MinMaxBound {
            value: 0.0,
            other_index: None,
            minimizer: Some(z.to_vec()),
            tight: true,
        });
    }
    support::require(model.metric().norm(), q, Exactness::Pairwise, domain)?;
    let values = pairwise_against_nearest(model, z, y, nb.own_index, q, domain, None)?;
    let best = argmin(&values).expect("other classes exist");
    let tight = best.result.value.is_finite()
        && best
            .result
            .minimizer
            .as_deref()
            .is_some_and(|x| in_region(model, x, y, best.other, domain.is_box()));
    Ok(MinMaxBound {
        value: best.result.value,
        other_index: Some(best.other),
        minimizer: best.result.minimizer.clone(),
        tight,
    })
}

/// r_j for an ℓ1 model under an ℓ∞ threat: the largest pairwise value over
/// the own-class prototypes. The snap-toward-w_j point is the worst case for
/// every own-class prototype at once, so the pairwise maximum is exact.
pub fn exact_r_l1_linf(model: &PrototypeModel, z: &[f64], y: usize, other: usize, domain: Domain) -> Result<f64> {
    if model.metric().norm() != Norm::L1 {
        return Err(Error::unsupported(format!(
            "{} (exact r for l1 models only)",
            support::cell_name(model.metric().norm(), Norm::Linf, Exactness::Exact)
        )));
    }
    if model.classify(z)?.class != y {
        return Ok(0.0);
    }
    if model.label(other) == y {
        return Err(Error::PreconditionViolated(format!("prototype {other} belongs to class {y}")));
    }
    let wj = model.prototype(other);
    let mut r = 0.0f64;
    for &i in model.class_members(y) {
        r = r.max(rho_l1_linf(z, model.prototype(i), wj, domain)?.value);
    }
    Ok(r)
}

/// Certifies one labeled point.
pub fn certify(
    model: &PrototypeModel,
    z: &[f64],
    y: usize,
    threat: &ThreatSpec,
    mode: CertifyMode,
    options: &CertifyOptions,
) -> Result<Certificate> {
    let start = Instant::now();
    let mut cert = certify_inner(model, z, y, threat, mode, options)?;
    cert.diagnostics.wall_time = start.elapsed().as_secs_f64();
    Ok(cert)
}

fn certify_inner(
    model: &PrototypeModel,
    z: &[f64],
    y: usize,
    threat: &ThreatSpec,
    mode: CertifyMode,
    options: &CertifyOptions,
) -> Result<Certificate> {
    let nb = model.neighbors(z, y)?;
    let predicted = model.classify(z)?.class;
    if predicted != y {
        return Ok(Certificate::misclassified(y, predicted));
    }
    if threat.q == ThreatNorm::EmbeddedL2 || threat.domain == Domain::SphereProduct {
        return crate::sphere::certify_embedded(model, z, y);
    }
    let p = model.metric().norm();
    let q = threat.q.norm();
    let domain = threat.domain;
    let entry = match mode {
        CertifyMode::Exact => {
            support::require(p, q, Exactness::Exact, domain)?;
            support::require(p, q, Exactness::Pairwise, domain)?
        }
        CertifyMode::LowerBound => support::require(p, q, Exactness::Pairwise, domain)?,
    };
    let boxed = domain.is_box();
    if boxed {
        check_in_box(z)?;
    }

    let mut cert = Certificate {
        label: y,
        label_predicted: predicted,
        correct: true,
        lower_bound: 0.0,
        exact: None,
        upper_bound: None,
        bounds: BoundBreakdown {
            trivial: trivial_semimetric_bound(nb.own_dist, nb.other_dist) * q.equivalence(p, z.len()),
            ..BoundBreakdown::default()
        },
        diagnostics: Diagnostics::default(),
    };
    let finish = |mut cert: Certificate| -> Certificate {
        if let Some(budget) = options.attack_budget {
            if let Some(a) = crate::oracle::attack_upper_bound(model, z, y, threat, budget) {
                cert.upper_bound = Some(cert.upper_bound.map_or(a.radius, |u: f64| u.min(a.radius)));
            }
        }
        if let Some(e) = cert.exact {
            cert.lower_bound = cert.lower_bound.min(e);
        }
        cert
    };

    // Stage 1: unbounded pairwise values against the nearest own prototype.
    let mut values = pairwise_against_nearest(model, z, y, nb.own_index, q, Domain::Unbounded, None)?;
    let best = argmin(&values).expect("other classes exist");
    cert.bounds.minmax_unbounded = Some(best.result.value);
    cert.lower_bound = best.result.value;
    if let Some(x) = &best.result.minimizer {
        if in_region(model, x, y, best.other, boxed) {
            cert.exact = Some(best.result.value);
            cert.upper_bound = Some(best.result.value);
            cert.diagnostics.shortcut_hit = true;
            return Ok(finish(cert));
        }
    }
    if threat.radius_cap.is_some_and(|cap| cert.lower_bound >= cap) {
        return Ok(finish(cert));
    }

    // Stage 2: box values, only where they can still lower the minimum.
    if boxed && !entry.domain_relaxed {
        values.sort_by(|a, b| a.result.value.total_cmp(&b.result.value));
        let mut best_box = f64::INFINITY;
        let mut best_point: Option<(usize, Vec<f64>)> = None;
        for v in values.iter_mut() {
            if options.prune && v.result.value >= best_box {
                cert.diagnostics.pruned += 1;
                continue;
            }
            let wi = model.prototype(nb.own_index);
            v.result = rho(&PairwiseProblem::new(z, wi, model.prototype(v.other), p, q, domain))?;
            if v.result.value < best_box {
                best_box = v.result.value;
                best_point = v.result.minimizer.clone().map(|x| (v.other, x));
            }
        }
        cert.bounds.minmax_box = Some(best_box);
        cert.lower_bound = cert.lower_bound.max(best_box);
        if let Some((j, x)) = best_point {
            if in_region(model, &x, y, j, true) {
                cert.exact = Some(best_box);
                cert.upper_bound = Some(best_box);
                cert.diagnostics.shortcut_hit = true;
                return Ok(finish(cert));
            }
        }
        if threat.radius_cap.is_some_and(|cap| cert.lower_bound >= cap) {
            return Ok(finish(cert));
        }
    }
    if mode == CertifyMode::LowerBound {
        return Ok(finish(cert));
    }

    // Stage 3: exact r_j in order of their lower bounds.
    values.sort_by(|a, b| a.result.value.total_cmp(&b.result.value));
    let mut incumbent = f64::INFINITY;
    let mut unresolved = f64::INFINITY;
    let mut upper = f64::INFINITY;
    for v in &values {
        if options.prune && v.result.value >= incumbent {
            cert.diagnostics.pruned += 1;
            continue;
        }
        cert.diagnostics.subproblems_solved += 1;
        if p == Norm::L1 {
            let r = exact_r_l1_linf(model, z, y, v.other, domain)?;
            incumbent = incumbent.min(r);
            upper = upper.min(r);
            continue;
        }
        let sub = ConvexSubproblem::for_prototype(model, z, y, v.other, q, boxed);
        let out = match q {
            Norm::L2 => {
                let limit = (options.early_termination && incumbent.is_finite()).then_some(incumbent);
                solve_r_l2(&sub, limit)?
            }
            _ => solve_r_l2_lp(&sub)?,
        };
        upper = upper.min(out.primal_value);
        match out.status {
            SolveStatus::Optimal => incumbent = incumbent.min(out.primal_value),
            SolveStatus::EarlyTerminated | SolveStatus::Infeasible => {}
            SolveStatus::IterationLimit => unresolved = unresolved.min(out.dual_lower.max(v.result.value)),
        }
    }
    if upper.is_finite() {
        cert.upper_bound = Some(upper);
    }
    if unresolved.is_finite() {
        cert.lower_bound = cert.lower_bound.max(incumbent.min(unresolved));
    } else {
        cert.exact = Some(incumbent);
    }
    Ok(finish(cert))
}

/// Bound valid for any semi-metric: half the gap between the nearest
/// other-class and own-class distances. Never exact.
pub fn certify_semimetric<F>(distance: F, prototypes: &[Vec<f64>], labels: &[usize], z: &[f64], y: usize) -> Result<Certificate>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    if prototypes.len() != labels.len() || prototypes.is_empty() {
        return Err(Error::InvariantViolation(format!(
            "{} prototypes with {} labels",
            prototypes.len(),
            labels.len()
        )));
    }
    if cfg!(debug_assertions) {
        for w in prototypes.iter().take(4) {
            let (a, b) = (distance(z, w), distance(w, z));
            debug_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "distance callback is not symmetric");
        }
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1).max(y + 1);
    let mut best = vec![f64::INFINITY; classes];
    for (w, &l) in prototypes.iter().zip(labels) {
        best[l] = best[l].min(distance(z, w));
    }
    let predicted = (0..classes).fold(0, |c, k| if best[k] < best[c] { k } else { c });
    if predicted != y {
        return Ok(Certificate::misclassified(y, predicted));
    }
    let other = (0..classes).filter(|&k| k != y).fold(f64::INFINITY, |m, k| m.min(best[k]));
    let trivial = trivial_semimetric_bound(best[y], other);
    Ok(Certificate {
        label: y,
        label_predicted: predicted,
        correct: true,
        lower_bound: trivial,
        exact: None,
        upper_bound: None,
        bounds: BoundBreakdown {
            trivial,
            ..BoundBreakdown::default()
        },
        diagnostics: Diagnostics::default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub label: usize,
    /// The certificate, or the error message when this point failed.
    pub outcome: std::result::Result<Certificate, String>,
}

/// Certified robust accuracy of a dataset at a list of radii.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub radii: Vec<f64>,
    /// Fraction of all points that are correct with certified radius ≥ r.
    pub robust_accuracy: Vec<f64>,
    pub clean_accuracy: f64,
    pub failures: usize,
    pub records: Vec<PointRecord>,
}

impl BoundReport {
    pub fn from_records(records: Vec<PointRecord>, radii: &[f64]) -> Self {
        let n = records.len().max(1) as f64;
        let certs: Vec<&Certificate> = records.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
        let correct = certs.iter().filter(|c| c.correct).count();
        let robust_accuracy = radii
            .iter()
            .map(|&r| certs.iter().filter(|c| c.is_robust_at(r)).count() as f64 / n)
            .collect();
        BoundReport {
            radii: radii.to_vec(),
            robust_accuracy,
            clean_accuracy: if records.is_empty() { 0.0 } else { correct as f64 / n },
            failures: records.len() - certs.len(),
            records,
        }
    }
}

/// Certifies every point (in parallel on the current rayon pool); a failing
/// point becomes a failure record instead of aborting the batch.
pub fn certify_dataset(
    model: &PrototypeModel,
    points: &[Vec<f64>],
    labels: &[usize],
    threat: &ThreatSpec,
    mode: CertifyMode,
    options: &CertifyOptions,
    radii: &[f64],
) -> Result<BoundReport> {
    if points.len() != labels.len() {
        return Err(Error::InvariantViolation(format!(
            "{} points with {} labels",
            points.len(),
            labels.len()
        )));
    }
    let records = points
        .par_iter()
        .zip(labels.par_iter())
        .enumerate()
        .map(|(index, (z, &y))| PointRecord {
            index,
            label: y,
            outcome: certify(model, z, y, threat, mode, options).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(BoundReport::from_records(records, radii))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Metric;

    fn model(rows: Vec<Vec<f64>>, labels: Vec<usize>, metric: Metric) -> PrototypeModel {
        let d = rows[0].len();
        let k = labels.iter().max().unwrap() + 1;
        PrototypeModel::new(d, k, rows, labels, metric, Domain::Unbounded).unwrap()
    }

    fn e1() -> PrototypeModel {
        model(vec![vec![1.0, 0.0], vec![3.0, 0.0]], vec![0, 1], Metric::L2)
    }

    fn two_blocker() -> PrototypeModel {
        model(vec![vec![0.0, 1.0], vec![0.0, -1.0], vec![2.0, 0.0]], vec![0, 0, 1], Metric::L2)
    }

    fn exact(m: &PrototypeModel, z: &[f64], q: Norm) -> Certificate {
        certify(
            m,
            z,
            0,
            &ThreatSpec::new(q, Domain::Unbounded),
            CertifyMode::Exact,
            &CertifyOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn minmax_on_e1_is_tight() {
        let b = minmax_lower_bound(&e1(), &[0.0, 0.0], 0, Norm::L2, Domain::Unbounded).unwrap();
        assert_eq!(b.value, 2.0);
        assert!(b.tight);
    }

    #[test]
    fn minmax_on_two_blocker_is_loose() {
        let b = minmax_lower_bound(&two_blocker(), &[0.0, 0.0], 0, Norm::L2, Domain::Unbounded).unwrap();
        assert!((b.value - 3.0 / 20f64.sqrt()).abs() < 1e-12);
        assert!(!b.tight);
        let x = b.minimizer.unwrap();
        assert!((x[0] - 0.6).abs() < 1e-12 && (x[1] + 0.3).abs() < 1e-12);
    }

    #[test]
    fn minmax_misclassified() {
        let b = minmax_lower_bound(&e1(), &[3.0, 0.0], 0, Norm::L2, Domain::Unbounded).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.tight);
    }

    #[test]
    fn certify_two_blocker() {
        let c = exact(&two_blocker(), &[0.0, 0.0], Norm::L2);
        assert!((c.exact.unwrap() - 0.75).abs() < 1e-8);
        assert!((c.lower_bound - 0.6708203932499369).abs() < 1e-12);
        assert!(!c.diagnostics.shortcut_hit);
        assert_eq!(c.diagnostics.subproblems_solved, 1);
        for q in [Norm::L1, Norm::Linf] {
            assert!((exact(&two_blocker(), &[0.0, 0.0], q).exact.unwrap() - 0.75).abs() < 1e-9);
        }
    }

    #[test]
    fn certify_e1_uses_shortcut() {
        let c = exact(&e1(), &[0.0, 0.0], Norm::L2);
        assert_eq!(c.exact, Some(2.0));
        assert!(c.diagnostics.shortcut_hit);
        assert_eq!(c.diagnostics.subproblems_solved, 0);
    }

    #[test]
    fn linf_exact_is_refused_but_lower_works() {
        let m = model(vec![vec![1.0, 0.0], vec![3.0, 0.0]], vec![0, 1], Metric::Linf);
        let threat = ThreatSpec::new(Norm::Linf, Domain::Unbounded);
        let err = certify(&m, &[0.0, 0.0], 0, &threat, CertifyMode::Exact, &CertifyOptions::default()).unwrap_err();
        assert!(err.to_string().contains("Table 2: NP-hard"), "{err}");
        let c = certify(&m, &[0.0, 0.0], 0, &threat, CertifyMode::LowerBound, &CertifyOptions::default()).unwrap();
        assert_eq!(c.lower_bound, 1.5);
    }

    #[test]
    fn l1_exact_takes_largest_own_value() {
        // Two own prototypes; the farther one constrains x₂ as well.
        let m = model(
            vec![vec![1.0, 0.0], vec![1.0, 2.0], vec![3.0, 0.0]],
            vec![0, 0, 1],
            Metric::L1,
        );
        let z = [0.0, 0.0];
        let a = rho_l1_linf(&z, &[1.0, 0.0], &[3.0, 0.0], Domain::Unbounded).unwrap().value;
        let b = rho_l1_linf(&z, &[1.0, 2.0], &[3.0, 0.0], Domain::Unbounded).unwrap().value;
        let r = exact_r_l1_linf(&m, &z, 0, 2, Domain::Unbounded).unwrap();
        assert_eq!(r, a.max(b));
        assert_eq!(exact_r_l1_linf(&m, &[3.0, 0.0], 0, 2, Domain::Unbounded).unwrap(), 0.0);
        let c = exact(&m, &z, Norm::Linf);
        assert_eq!(c.exact, Some(r));
    }

    #[test]
    fn misclassified_point_is_zero() {
        let c = exact(&e1(), &[2.5, 0.0], Norm::L2);
        assert!(!c.correct);
        assert_eq!(c.lower_bound, 0.0);
        assert_eq!(c.exact, Some(0.0));
    }

    #[test]
    fn semimetric_bounds() {
        let protos = vec![vec![1.0, 0.0], vec![3.0, 0.0]];
        let l2 = |a: &[f64], b: &[f64]| Norm::L2.dist(a, b);
        let c = certify_semimetric(l2, &protos, &[0, 1], &[0.0, 0.0], 0).unwrap();
        assert_eq!(c.lower_bound, 1.0);
        assert_eq!(c.exact, None);
        let c = certify_semimetric(|_: &[f64], _: &[f64]| 1.0, &protos, &[0, 1], &[0.0, 0.0], 0).unwrap();
        assert_eq!(c.lower_bound, 0.0);
        let c = certify_semimetric(l2, &protos, &[0, 1], &[3.0, 0.0], 0).unwrap();
        assert!(!c.correct);
        assert_eq!(c.lower_bound, 0.0);
    }

    #[test]
    fn dataset_report() {
        let threat = ThreatSpec::new(Norm::L2, Domain::Unbounded);
        let opts = CertifyOptions::default();
        let r = certify_dataset(&e1(), &[vec![0.0, 0.0]], &[0], &threat, CertifyMode::Exact, &opts, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.robust_accuracy, vec![1.0, 1.0, 0.0]);
        assert_eq!(r.clean_accuracy, 1.0);
        let r = certify_dataset(&e1(), &[vec![0.0, 0.0]], &[0], &threat, CertifyMode::Exact, &opts, &[]).unwrap();
        assert!(r.robust_accuracy.is_empty());
        assert_eq!(r.clean_accuracy, 1.0);
        let r = certify_dataset(&e1(), &[vec![0.0]], &[0], &threat, CertifyMode::Exact, &opts, &[1.0]).unwrap();
        assert_eq!(r.failures, 1);
    }

    #[test]
    fn box_domain_enlarges_bound() {
        let m = model(vec![vec![0.5, 0.5], vec![1.5, 1.5]], vec![0, 1], Metric::L2);
        let z = [0.8, 1.0];
        let opts = CertifyOptions::default();
        let free = certify(&m, &z, 0, &ThreatSpec::new(Norm::L2, Domain::Unbounded), CertifyMode::Exact, &opts).unwrap();
        let boxed = certify(&m, &z, 0, &ThreatSpec::new(Norm::L2, Domain::UnitBox), CertifyMode::Exact, &opts).unwrap();
        assert!((free.exact.unwrap() - 0.02f64.sqrt()).abs() < 1e-12);
        assert!((boxed.exact.unwrap() - 0.2).abs() < 1e-9);
        assert!((boxed.lower_bound - 0.2).abs() < 1e-9);
    }
}
