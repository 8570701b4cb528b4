//! ℓ∞ prototypes, plus the ℓ∞-ball decision procedure shared with p ∈ {1, 2}.

use crate::error::Result;
use crate::model::Domain;
use crate::norm::{sign, Norm};

use super::{check_in_box, check_pair, Method, PairwiseResult};

const BISECTION_STEPS: usize = 200;

fn is_pairwise_wrong(x: &[f64], own: &[f64], other: &[f64]) -> bool {
    Norm::Linf.dist(x, own) >= Norm::Linf.dist(x, other)
}

/// Exact closed form on ℝ^d.
///
/// With s = sign(other − own), coordinates where s ≠ 0 are pushed by ρ along
/// s. Coordinates where both prototypes agree are pushed away from them,
/// which raises both distances equally and can only help the attacker.
pub fn rho_linf_linf(z: &[f64], own: &[f64], other: &[f64]) -> Result<PairwiseResult> {
    check_pair(z, own, other)?;
    if is_pairwise_wrong(z, own, other) {
        return Ok(PairwiseResult::at_query(z));
    }
    let mut own_gap = f64::NEG_INFINITY;
    let mut other_low = f64::INFINITY;
    // (value, index) of the largest |z − own| among tied coordinates.
    let mut tied: Option<(f64, usize)> = None;
    for l in 0..z.len() {
        let s = sign(other[l] - own[l]);
        if s == 0.0 {
            let g = (z[l] - own[l]).abs();
            if tied.is_none_or(|(t, _)| g > t) {
                tied = Some((g, l));
            }
        } else {
            own_gap = own_gap.max(s * (z[l] - own[l]));
            other_low = other_low.min(s * (z[l] - other[l]));
        }
    }
    let tied_gap = tied.map_or(f64::NEG_INFINITY, |(g, _)| g);
    let value = (0.5 * (-other_low - own_gap.max(tied_gap))).max(0.0);
    let mut x: Vec<f64> = (0..z.len())
        .map(|l| z[l] + value * sign(other[l] - own[l]))
        .collect();
    if let Some((g, l)) = tied {
        if g >= own_gap {
            let away = if z[l] >= own[l] { 1.0 } else { -1.0 };
            x[l] = z[l] + value * away;
        }
    }
    Ok(PairwiseResult {
        value,
        minimizer: Some(x),
        method: Method::ClosedForm,
    })
}

fn ball_interval(zl: f64, eps: f64, boxed: bool) -> (f64, f64) {
    let (lo, hi) = (zl - eps, zl + eps);
    if boxed {
        (lo.max(0.0), hi.min(1.0))
    } else {
        (lo, hi)
    }
}

/// Point of the ℓ∞ ball (∩ box) with ‖x − own‖_∞ ≥ ‖x − other‖_∞, if any.
///
/// Such a point exists iff for some coordinate k the own-distance of x_k
/// can reach the other-distance of every coordinate. All coordinates other
/// than k are therefore moved as close to `other` as the ball allows.
fn linf_witness(z: &[f64], own: &[f64], other: &[f64], eps: f64, boxed: bool) -> Option<Vec<f64>> {
    let d = z.len();
    let snapped: Vec<f64> = (0..d)
        .map(|l| {
            let (lo, hi) = ball_interval(z[l], eps, boxed);
            other[l].clamp(lo, hi)
        })
        .collect();
    let reach: Vec<f64> = (0..d).map(|l| (snapped[l] - other[l]).abs()).collect();
    let top = top_two(&reach);
    for k in 0..d {
        let others_max = top.excluding(k);
        let (mut lo, mut hi) = ball_interval(z[k], eps, boxed);
        // Restrict to the half-line where x_k is at least as far from own.
        let mid = 0.5 * (own[k] + other[k]);
        if other[k] > own[k] {
            lo = lo.max(mid);
        } else if other[k] < own[k] {
            hi = hi.min(mid);
        }
        if lo > hi {
            continue;
        }
        let t = if (lo - own[k]).abs() >= (hi - own[k]).abs() { lo } else { hi };
        if (t - own[k]).abs() >= others_max {
            let mut x = snapped.clone();
            x[k] = t;
            return Some(x);
        }
    }
    None
}

/// Decides whether every x in the ℓ∞ ball of radius `eps` around `z` (∩ box
/// under `UnitBox`) keeps ‖x − own‖_p < ‖x − other‖_p.
///
/// For p = 1 each coordinate is snapped toward `other`; for p = 2 the
/// attacker moves along sign(other − own); for p = ∞ the exact per-coordinate
/// witness search above is used.
pub fn linf_threat_certified(
    z: &[f64],
    own: &[f64],
    other: &[f64],
    p: Norm,
    eps: f64,
    domain: Domain,
) -> bool {
    let boxed = domain.is_box();
    match p {
        Norm::L1 => l1_gap(z, own, other, eps, boxed) < 0.0,
        Norm::L2 => {
            let x: Vec<f64> = (0..z.len())
                .map(|l| {
                    let (lo, hi) = ball_interval(z[l], eps, boxed);
                    (z[l] + eps * sign(other[l] - own[l])).clamp(lo, hi)
                })
                .collect();
            crate::norm::sq_dist(&x, own) < crate::norm::sq_dist(&x, other)
        }
        Norm::Linf => linf_witness(z, own, other, eps, boxed).is_none(),
    }
}

/// Σ_l |x_l − own_l| − |x_l − other_l| at the p = 1 worst-case point.
pub(crate) fn l1_gap(z: &[f64], own: &[f64], other: &[f64], eps: f64, boxed: bool) -> f64 {
    (0..z.len())
        .map(|l| {
            let (lo, hi) = ball_interval(z[l], eps, boxed);
            let x = other[l].clamp(lo, hi);
            (x - own[l]).abs() - (x - other[l]).abs()
        })
        .sum()
}

/// Unit-box version: bisection on ε with the exact witness search, started
/// from the unbounded value. The reported value is the certified end of the
/// final bracket; the minimizer is the witness at the other end.
pub fn rho_linf_linf_box(z: &[f64], own: &[f64], other: &[f64]) -> Result<PairwiseResult> {
    check_pair(z, own, other)?;
    check_in_box(z)?;
    if is_pairwise_wrong(z, own, other) {
        return Ok(PairwiseResult::at_query(z));
    }
    let unbounded = rho_linf_linf(z, own, other)?;
    if let Some(x) = unbounded.minimizer.as_ref() {
        if x.iter().all(|v| (0.0..=1.0).contains(v)) && is_pairwise_wrong(x, own, other) {
            return Ok(unbounded);
        }
    }
    let Some(mut witness) = linf_witness(z, own, other, 1.0, true) else {
        return Ok(PairwiseResult::infeasible(Method::Bisection));
    };
    let (mut lo, mut hi) = (unbounded.value.min(1.0), 1.0);
    for _ in 0..BISECTION_STEPS {
        if hi - lo <= 1e-14 * (1.0 + hi) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match linf_witness(z, own, other, mid, true) {
            Some(x) => {
                hi = mid;
                witness = x;
            }
            None => lo = mid,
        }
    }
    Ok(PairwiseResult {
        value: lo,
        minimizer: Some(witness),
        method: Method::Bisection,
    })
}

/// q = 1: an optimal perturbation changes a single coordinate. For each k
/// the feasible values of x_k form a union of intervals whose endpoints are
/// among a few candidates built from the largest distances over l ≠ k.
pub fn rho_linf_l1(z: &[f64], own: &[f64], other: &[f64]) -> Result<PairwiseResult> {
    check_pair(z, own, other)?;
    if is_pairwise_wrong(z, own, other) {
        return Ok(PairwiseResult::at_query(z));
    }
    let own_d: Vec<f64> = z.iter().zip(own).map(|(a, b)| (a - b).abs()).collect();
    let other_d: Vec<f64> = z.iter().zip(other).map(|(a, b)| (a - b).abs()).collect();
    let own_top = top_two(&own_d);
    let other_top = top_two(&other_d);
    let scale = 1.0 + Norm::Linf.norm(z) + Norm::Linf.norm(own) + Norm::Linf.norm(other);
    let tol = 1e-12 * scale;
    let mut best: Option<(f64, usize, f64)> = None;
    for k in 0..z.len() {
        let a_rest = own_top.excluding(k);
        let b_rest = other_top.excluding(k);
        let (a, b) = (own[k], other[k]);
        let feasible = |t: f64| (t - a).abs().max(a_rest) + tol >= (t - b).abs().max(b_rest);
        let candidates = [
            a - b_rest,
            a + b_rest,
            b - a_rest,
            b + a_rest,
            0.5 * (a + b),
        ];
        for t in candidates {
            if !t.is_finite() || !feasible(t) {
                continue;
            }
            let cost = (t - z[k]).abs();
            if best.is_none_or(|(c, _, _)| cost < c) {
                best = Some((cost, k, t));
            }
        }
    }
    let (value, k, t) = best.expect("moving a coordinate onto the midpoint of a differing pair is feasible");
    let mut x = z.to_vec();
    x[k] = t;
    Ok(PairwiseResult {
        value,
        minimizer: Some(x),
        method: Method::CoordinateScan,
    })
}

/// Largest and second-largest entries, for "max over l ≠ k" in O(1).
struct TopTwo {
    first: f64,
    arg: usize,
    second: f64,
}

impl TopTwo {
    fn excluding(&self, k: usize) -> f64 {
        if k == self.arg {
            self.second
        } else {
            self.first
        }
    }
}

fn top_two(v: &[f64]) -> TopTwo {
    let mut t = TopTwo {
        first: f64::NEG_INFINITY,
        arg: usize::MAX,
        second: f64::NEG_INFINITY,
    };
    for (l, &x) in v.iter().enumerate() {
        if x > t.first {
            t.second = t.first;
            t.first = x;
            t.arg = l;
        } else if x > t.second {
            t.second = x;
        }
    }
    t
}

/// q = 2 by a level-set reformulation. A point is pairwise wrong iff there
/// is a coordinate k and a level D with |x_k − own_k| ≥ D ≥ ‖x − other‖_∞.
/// For fixed k the squared cost separates over coordinates and is convex in
/// D, so D is found by bisection on the derivative; the sorted distances
/// |z_l − other_l| with suffix sums make each evaluation O(log d).
pub fn rho_linf_l2(z: &[f64], own: &[f64], other: &[f64]) -> Result<PairwiseResult> {
    check_pair(z, own, other)?;
    if is_pairwise_wrong(z, own, other) {
        return Ok(PairwiseResult::at_query(z));
    }
    let d = z.len();
    let gaps: Vec<f64> = (0..d).map(|l| (z[l] - other[l]).abs()).collect();
    let levels = Levels::new(&gaps);
    let mut best: Option<(f64, usize, f64)> = None;
    for k in 0..d {
        let coord = Coordinate::new(z[k], own[k], other[k]);
        let cost = |level: f64| levels.cost(level) - levels.term(gaps[k], level) + coord.cost(level);
        let slope = |level: f64| levels.slope(level) - levels.term_slope(gaps[k], level) + coord.slope(level);
        let upper = levels.max().max(coord.span()) + 1.0;
        let level = if slope(0.0) >= 0.0 {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, upper);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        };
        let c = cost(level).max(0.0);
        if best.is_none_or(|(b, _, _)| c < b) {
            best = Some((c, k, level));
        }
    }
    let (_, k, level) = best.expect("d ≥ 1");
    let mut x: Vec<f64> = (0..d)
        .map(|l| z[l].clamp(other[l] - level, other[l] + level))
        .collect();
    x[k] = Coordinate::new(z[k], own[k], other[k]).nearest(level);
    let value = Norm::L2.dist(&x, z);
    Ok(PairwiseResult {
        value,
        minimizer: Some(x),
        method: Method::LevelSearch,
    })
}

/// Σ_l (g_l − D)₊² over sorted gaps, with suffix sums.
struct Levels {
    sorted: Vec<f64>,
    suffix: Vec<f64>,
    suffix_sq: Vec<f64>,
}

impl Levels {
    fn new(gaps: &[f64]) -> Self {
        let mut sorted = gaps.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut suffix = vec![0.0; n + 1];
        let mut suffix_sq = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + sorted[i];
            suffix_sq[i] = suffix_sq[i + 1] + sorted[i] * sorted[i];
        }
        Levels {
            sorted,
            suffix,
            suffix_sq,
        }
    }

    fn max(&self) -> f64 {
        self.sorted.last().copied().unwrap_or(0.0)
    }

    fn above(&self, level: f64) -> (f64, f64, f64) {
        let i = self.sorted.partition_point(|&g| g <= level);
        ((self.sorted.len() - i) as f64, self.suffix[i], self.suffix_sq[i])
    }

    fn cost(&self, level: f64) -> f64 {
        let (n, s, s2) = self.above(level);
        s2 - 2.0 * level * s + n * level * level
    }

    fn slope(&self, level: f64) -> f64 {
        let (n, s, _) = self.above(level);
        -2.0 * (s - n * level)
    }

    fn term(&self, gap: f64, level: f64) -> f64 {
        let r = (gap - level).max(0.0);
        r * r
    }

    fn term_slope(&self, gap: f64, level: f64) -> f64 {
        if gap > level {
            -2.0 * (gap - level)
        } else {
            0.0
        }
    }
}

/// The distinguished coordinate, mirrored so that other ≥ own. Its feasible
/// set at level D is {t : |t − own| ≥ D, |t − other| ≤ D}.
struct Coordinate {
    z: f64,
    own: f64,
    other: f64,
    flip: f64,
}

impl Coordinate {
    fn new(z: f64, own: f64, other: f64) -> Self {
        let flip = if other < own { -1.0 } else { 1.0 };
        Coordinate {
            z: flip * z,
            own: flip * own,
            other: flip * other,
            flip,
        }
    }

    fn span(&self) -> f64 {
        (self.z - self.own).abs().max(self.other - self.own)
    }

    /// Lower end of the feasible interval and whether it is rising in D.
    fn lower(&self, level: f64) -> (f64, bool) {
        let falling = self.other - level;
        let rising = self.own + level;
        if falling > rising {
            (falling, false)
        } else {
            (rising, true)
        }
    }

    fn cost(&self, level: f64) -> f64 {
        if self.other == self.own {
            let r = (self.z - self.other).abs() - level;
            return r * r;
        }
        let (lo, _) = self.lower(level);
        let hi = self.other + level;
        let r = if self.z < lo {
            lo - self.z
        } else if self.z > hi {
            self.z - hi
        } else {
            0.0
        };
        r * r
    }

    fn slope(&self, level: f64) -> f64 {
        if self.other == self.own {
            return 2.0 * (level - (self.z - self.other).abs());
        }
        let (lo, rising) = self.lower(level);
        let hi = self.other + level;
        if self.z < lo {
            2.0 * (lo - self.z) * if rising { 1.0 } else { -1.0 }
        } else if self.z > hi {
            -2.0 * (self.z - hi)
        } else {
            0.0
        }
    }

    fn nearest(&self, level: f64) -> f64 {
        let t = if self.other == self.own {
            if self.z >= self.other {
                self.other + level
            } else {
                self.other - level
            }
        } else {
            let (lo, _) = self.lower(level);
            self.z.clamp(lo, self.other + level)
        };
        self.flip * t
    }
}
