//! ℓ1 prototypes under an ℓ∞ threat.

use crate::error::Result;
use crate::model::Domain;

use super::linf::l1_gap;
use super::{check_in_box, check_pair, Method, PairwiseResult};

/// Exact ρ for p = 1, q = ∞.
///
/// The attacker's best point in the ε-ball moves every coordinate toward
/// `other` as far as it can, so the gap ‖x − own‖₁ − ‖x − other‖₁ is a
/// nondecreasing piecewise-linear function of ε. Its kinks sit at the
/// per-coordinate distances to both prototypes and (in the box) to the
/// faces; the root is bracketed by binary search over those kinks and then
/// interpolated.
pub fn rho_l1_linf(z: &[f64], own: &[f64], other: &[f64], domain: Domain) -> Result<PairwiseResult> {
    check_pair(z, own, other)?;
    let boxed = domain.is_box();
    if boxed {
        check_in_box(z)?;
    }
    let gap = |eps: f64| l1_gap(z, own, other, eps, boxed);
    if gap(0.0) >= 0.0 {
        return Ok(PairwiseResult::at_query(z));
    }
    let mut kinks: Vec<f64> = Vec::with_capacity(4 * z.len() + 1);
    kinks.push(0.0);
    for l in 0..z.len() {
        kinks.push((z[l] - own[l]).abs());
        kinks.push((z[l] - other[l]).abs());
        if boxed {
            kinks.push(z[l]);
            kinks.push(1.0 - z[l]);
        }
    }
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    let last = kinks.len() - 1;
    if gap(kinks[last]) < 0.0 {
        // Every coordinate has reached `other` or a face.
        return Ok(PairwiseResult::infeasible(Method::BreakpointSearch));
    }
    // First kink with a nonnegative gap; kinks[0] = 0 has a negative one.
    let (mut lo, mut hi) = (0, last);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if gap(kinks[mid]) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (e0, e1) = (kinks[lo], kinks[hi]);
    let (g0, g1) = (gap(e0), gap(e1));
    let value = (e0 + (e1 - e0) * (-g0) / (g1 - g0)).clamp(e0, e1);
    let minimizer = worst_case_point(z, other, value, boxed);
    Ok(PairwiseResult {
        value,
        minimizer: Some(minimizer),
        method: Method::BreakpointSearch,
    })
}

fn worst_case_point(z: &[f64], other: &[f64], eps: f64, boxed: bool) -> Vec<f64> {
    z.iter()
        .zip(other)
        .map(|(&zl, &ol)| {
            let (mut lo, mut hi) = (zl - eps, zl + eps);
            if boxed {
                lo = lo.max(0.0);
                hi = hi.min(1.0);
            }
            ol.clamp(lo, hi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::Norm;
    use approx::assert_relative_eq;

    fn l1_wrong(x: &[f64], own: &[f64], other: &[f64]) -> bool {
        Norm::L1.dist(x, own) >= Norm::L1.dist(x, other)
    }

    #[test]
    fn running_example() {
        let r = rho_l1_linf(&[0.0, 0.0], &[1.0, 0.0], &[3.0, 0.0], Domain::Unbounded).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-12);
        let x = r.minimizer.unwrap();
        assert!(l1_wrong(&x, &[1.0, 0.0], &[3.0, 0.0]));
    }

    #[test]
    fn misclassified_is_zero() {
        let r = rho_l1_linf(&[3.0, 0.0], &[1.0, 0.0], &[3.0, 0.0], Domain::Unbounded).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn gap_is_monotone_between_kinks() {
        let z = [0.1, 0.7, 0.4];
        let own = [0.0, 0.9, 0.5];
        let other = [0.8, 0.2, 0.9];
        let r = rho_l1_linf(&z, &own, &other, Domain::UnitBox).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let g = l1_gap(&z, &own, &other, i as f64 / 1000.0, true);
            assert!(g >= prev - 1e-12);
            prev = g;
        }
        assert!(l1_gap(&z, &own, &other, r.value - 1e-9, true) < 0.0);
        assert!(l1_gap(&z, &own, &other, r.value + 1e-9, true) >= 0.0);
    }

    #[test]
    fn box_infeasible_when_other_is_far() {
        let r = rho_l1_linf(&[0.5, 0.5], &[0.5, 0.5], &[9.0, 9.0], Domain::UnitBox).unwrap();
        assert!(r.is_infeasible());
    }
}
