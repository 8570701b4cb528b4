//! Angle scan over a single quarter circle.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::l2_halfspace;
use crate::model::SphereEmbedding;
use crate::norm::{dot, Norm};

const BISECTION_STEPS: usize = 60;

/// Minimal Euclidean distance from `z` to the points of the nonnegative
/// quarter circle that are at least as close to `other` as to `own`. The
/// embedding must be a single block with one position and two channels.
/// Returns +∞ when no point of the arc qualifies.
pub fn sphere_brute(z: &[f64], own: &[f64], other: &[f64], embedding: &SphereEmbedding, resolution: usize) -> Result<f64> {
    let block = match embedding.blocks.as_slice() {
        [b] if b.channels == 2 && b.positions == 1 => *b,
        _ => {
            return Err(Error::UnsupportedBlockShape(
                "the angle scan needs one block with a single 2-channel position".into(),
            ))
        }
    };
    for v in [z, own, other] {
        if v.len() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: v.len() });
        }
    }
    let (a, b) = l2_halfspace(own, other);
    if dot(z, &a) + b >= 0.0 {
        return Ok(0.0);
    }
    let r = block.radius;
    let point = |theta: f64| {
        if theta >= FRAC_PI_2 {
            [0.0, r]
        } else {
            [r * theta.cos(), r * theta.sin()]
        }
    };
    let slack = 1e-12 * (1.0 + b.abs() + r * Norm::L2.norm(&a));
    let feasible = |theta: f64| {
        let x = point(theta);
        dot(&x, &a) + b >= -slack
    };
    let dist = |theta: f64| Norm::L2.dist(&point(theta), z);

    let n = resolution.max(2);
    let angle = |s: usize| FRAC_PI_2 * s as f64 / n as f64;
    let mut best = f64::INFINITY;
    let nearest = z[1].atan2(z[0]).clamp(0.0, FRAC_PI_2);
    if feasible(nearest) {
        best = dist(nearest);
    }
    let mut was = feasible(0.0);
    if was {
        best = best.min(dist(0.0));
    }
    for s in 1..=n {
        let now = feasible(angle(s));
        if now {
            best = best.min(dist(angle(s)));
        }
        if now != was {
            // Bisect onto the arc endpoint, keeping the feasible side.
            let (mut good, mut bad) = if now { (angle(s), angle(s - 1)) } else { (angle(s - 1), angle(s)) };
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (good + bad);
                if feasible(mid) {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            best = best.min(dist(good));
        }
        was = now;
    }
    Ok(best)
}
