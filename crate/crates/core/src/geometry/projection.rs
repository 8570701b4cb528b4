//! Euclidean projection onto {x ∈ [0,1]^d : ⟨x, w⟩ + b ≥ 0}.
//!
//! The optimum has the form x(λ) = clamp(z + λ w, 0, 1) for a multiplier
//! λ ≥ 0. The constraint value h(λ) = ⟨x(λ), w⟩ + b is continuous,
//! piecewise linear and nondecreasing, so λ is found by sweeping the sorted
//! breakpoints where coordinates enter or leave the interior of the box.

use crate::error::{Error, Result};
use crate::norm::dot;

use super::check_in_box;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    pub distance: f64,
    /// Multiplier with `point = clamp(z + lambda * w, 0, 1)`.
    pub lambda: f64,
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Smallest λ ≥ 0 with ⟨clamp(z + λw), w⟩ + b ≥ 0, or `None` if no λ works.
/// `z` may lie outside the box; this is the one-row update of the box QP.
pub fn box_multiplier(z: &[f64], w: &[f64], b: f64) -> Option<f64> {
    // Each coordinate with w_k ≠ 0 is interior (moving) for λ in [start, end).
    struct Event {
        at: f64,
        k: usize,
        enter: bool,
    }
    let mut constant = b;
    let mut slope = 0.0;
    let mut events = Vec::with_capacity(2 * z.len());
    for (k, (&zk, &wk)) in z.iter().zip(w).enumerate() {
        if wk == 0.0 {
            continue;
        }
        let t0 = (0.0 - zk) / wk;
        let t1 = (1.0 - zk) / wk;
        let (start, end) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
        if end <= 0.0 {
            // Already saturated at the far bound for every λ ≥ 0.
            constant += if wk > 0.0 { wk } else { 0.0 };
            continue;
        }
        if start <= 0.0 {
            constant += wk * zk;
            slope += wk * wk;
        } else {
            constant += wk * clamp01(zk);
            events.push(Event { at: start, k, enter: true });
        }
        events.push(Event { at: end, k, enter: false });
    }
    let h0 = constant;
    if h0 >= 0.0 {
        return Some(0.0);
    }
    events.sort_by(|a, b| a.at.total_cmp(&b.at).then(a.k.cmp(&b.k)));
    // h(λ) = constant + slope·λ between events.
    let mut prev = 0.0;
    for e in &events {
        let h_at = constant + slope * e.at;
        if h_at >= 0.0 && slope > 0.0 {
            let lambda = -constant / slope;
            return Some(lambda.clamp(prev, e.at));
        }
        let (zk, wk) = (z[e.k], w[e.k]);
        if e.enter {
            // Leaves its starting bound clamp(z_k) and becomes z_k + λ w_k.
            constant += wk * zk - wk * clamp01(zk);
            slope += wk * wk;
        } else {
            // Saturates at the bound it was moving toward.
            let bound = if wk > 0.0 { 1.0 } else { 0.0 };
            constant += wk * bound - wk * zk;
            slope -= wk * wk;
        }
        prev = e.at;
    }
    if constant >= 0.0 {
        Some(prev)
    } else {
        None
    }
}

/// Projects `z ∈ [0,1]^d` onto the box intersected with ⟨x, w⟩ + b ≥ 0.
pub fn project_hyperplane_box(z: &[f64], w: &[f64], b: f64) -> Result<Projection> {
    if z.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            got: w.len(),
        });
    }
    check_in_box(z)?;
    if dot(z, w) + b >= 0.0 {
        return Ok(Projection {
            point: z.to_vec(),
            distance: 0.0,
            lambda: 0.0,
        });
    }
    let lambda = box_multiplier(z, w, b).ok_or(Error::Infeasible)?;
    let point: Vec<f64> = z
        .iter()
        .zip(w)
        .map(|(zk, wk)| clamp01(zk + lambda * wk))
        .collect();
    let distance = crate::norm::sq_dist(&point, z).sqrt();
    Ok(Projection {
        point,
        distance,
        lambda,
    })
}
