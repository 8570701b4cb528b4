//! ℓ2 prototypes: the pairwise boundary is the bisecting hyperplane.

use crate::error::Result;
use crate::norm::{sign, sq_dist, Norm};

use super::projection::project_hyperplane_box;
use super::{check_in_box, check_pair, l2_halfspace, Method, PairwiseResult};

/// Required increase of ⟨x, other − own⟩ to reach the bisector from `z`.
fn shortfall(z: &[f64], own: &[f64], other: &[f64]) -> f64 {
    0.5 * (sq_dist(z, other) - sq_dist(z, own))
}

/// Unit q-norm direction u with ⟨u, a⟩ = ‖a‖_{q*}.
fn steepest_direction(a: &[f64], q: Norm) -> Vec<f64> {
    match q {
        Norm::L2 => {
            let n = Norm::L2.norm(a);
            a.iter().map(|v| v / n).collect()
        }
        Norm::Linf => a.iter().map(|&v| sign(v)).collect(),
        Norm::L1 => {
            let mut k = 0;
            for (l, v) in a.iter().enumerate() {
                if v.abs() > a[k].abs() {
                    k = l;
                }
            }
            let mut u = vec![0.0; a.len()];
            u[k] = sign(a[k]);
            u
        }
    }
}

/// Closed form (‖z−other‖² − ‖z−own‖²) / (2‖other − own‖_{q*}).
pub fn rho_l2(z: &[f64], own: &[f64], other: &[f64], q: Norm) -> Result<PairwiseResult> {
    check_pair(z, own, other)?;
    let need = shortfall(z, own, other);
    if need <= 0.0 {
        return Ok(PairwiseResult::at_query(z));
    }
    let (a, _) = l2_halfspace(own, other);
    let value = need / q.dual().norm(&a);
    let u = steepest_direction(&a, q);
    let minimizer = z.iter().zip(&u).map(|(zk, uk)| zk + value * uk).collect();
    Ok(PairwiseResult {
        value,
        minimizer: Some(minimizer),
        method: Method::ClosedForm,
    })
}

/// Same problem restricted to the unit box. q = 2 uses the hyperplane∩box
/// projection; q ∈ {1, ∞} are solved greedily over coordinates sorted by
/// their gain |a_k|, which is exact for a single linear constraint.
pub fn rho_l2_box(z: &[f64], own: &[f64], other: &[f64], q: Norm) -> Result<PairwiseResult> {
    check_pair(z, own, other)?;
    check_in_box(z)?;
    let need = shortfall(z, own, other);
    if need <= 0.0 {
        return Ok(PairwiseResult::at_query(z));
    }
    let (a, b) = l2_halfspace(own, other);
    match q {
        Norm::L2 => match project_hyperplane_box(z, &a, b) {
            Ok(p) => Ok(PairwiseResult {
                value: p.distance,
                minimizer: Some(p.point),
                method: Method::HyperplaneBoxProjection,
            }),
            Err(crate::error::Error::Infeasible) => {
                Ok(PairwiseResult::infeasible(Method::HyperplaneBoxProjection))
            }
            Err(e) => Err(e),
        },
        Norm::L1 => Ok(greedy_l1(z, &a, need)),
        Norm::Linf => Ok(greedy_linf(z, &a, need)),
    }
}

/// Room to move coordinate k in the direction that increases ⟨x, a⟩.
fn capacity(zk: f64, ak: f64) -> f64 {
    if ak > 0.0 {
        1.0 - zk
    } else {
        zk
    }
}

fn by_gain(a: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..a.len()).filter(|&k| a[k] != 0.0).collect();
    order.sort_by(|&i, &j| a[j].abs().total_cmp(&a[i].abs()).then(i.cmp(&j)));
    order
}

fn greedy_l1(z: &[f64], a: &[f64], need: f64) -> PairwiseResult {
    let mut x = z.to_vec();
    let mut left = need;
    let mut spent = 0.0;
    for k in by_gain(a) {
        let gain = a[k].abs();
        let step = capacity(z[k], a[k]).min(left / gain);
        x[k] += sign(a[k]) * step;
        spent += step;
        left -= step * gain;
        if left <= need * 1e-15 {
            return PairwiseResult {
                value: spent,
                minimizer: Some(x),
                method: Method::GreedyBox,
            };
        }
    }
    PairwiseResult::infeasible(Method::GreedyBox)
}

/// Smallest t with Σ_k |a_k| min(t, cap_k) ≥ need.
fn greedy_linf(z: &[f64], a: &[f64], need: f64) -> PairwiseResult {
    let mut order: Vec<usize> = (0..a.len()).filter(|&k| a[k] != 0.0).collect();
    order.sort_by(|&i, &j| capacity(z[i], a[i]).total_cmp(&capacity(z[j], a[j])));
    // Coordinates still moving contribute `slope` per unit of t.
    let mut slope: f64 = order.iter().map(|&k| a[k].abs()).sum();
    let mut gained = 0.0;
    let mut t_prev = 0.0;
    let mut t = None;
    for &k in &order {
        let cap = capacity(z[k], a[k]);
        let reach = gained + slope * (cap - t_prev);
        if reach >= need {
            t = Some(t_prev + (need - gained) / slope);
            break;
        }
        gained = reach;
        t_prev = cap;
        slope -= a[k].abs();
    }
    match t {
        Some(t) => {
            let x = z
                .iter()
                .zip(a)
                .map(|(&zk, &ak)| zk + sign(ak) * t.min(capacity(zk, ak)))
                .collect();
            PairwiseResult {
                value: t,
                minimizer: Some(x),
                method: Method::GreedyBox,
            }
        }
        None => PairwiseResult::infeasible(Method::GreedyBox),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn collinear_midpoint() {
        let r = rho_l2(&[0.0, 0.0], &[1.0, 0.0], &[3.0, 0.0], Norm::L2).unwrap();
        assert_relative_eq!(r.value, 2.0);
        assert_eq!(r.minimizer.unwrap(), vec![2.0, 0.0]);
    }

    #[test]
    fn diagonal_pair_in_each_threat_norm() {
        let z = [0.0, 0.0];
        let (own, other) = ([1.0, 1.0], [3.0, 3.0]);
        let r2 = rho_l2(&z, &own, &other, Norm::L2).unwrap();
        assert_relative_eq!(r2.value, 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        let rinf = rho_l2(&z, &own, &other, Norm::Linf).unwrap();
        assert_relative_eq!(rinf.value, 2.0);
        let x = rinf.minimizer.unwrap();
        assert_eq!(x, vec![2.0, 2.0]);
        assert_relative_eq!(Norm::L2.dist(&x, &own), Norm::L2.dist(&x, &other));
        let r1 = rho_l2(&z, &own, &other, Norm::L1).unwrap();
        assert_relative_eq!(r1.value, 4.0);
        assert_relative_eq!(Norm::L1.dist(&r1.minimizer.unwrap(), &z), 4.0);
    }

    #[test]
    fn misclassified_query_is_zero() {
        let r = rho_l2(&[3.0, 0.0], &[1.0, 0.0], &[3.0, 0.0], Norm::L2).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.minimizer.unwrap(), vec![3.0, 0.0]);
    }

    #[test]
    fn box_projection_example() {
        let z = [0.8, 1.0];
        let (own, other) = ([0.5, 0.5], [1.5, 1.5]);
        let unb = rho_l2(&z, &own, &other, Norm::L2).unwrap();
        assert_relative_eq!(unb.value, 0.1 * 2f64.sqrt(), epsilon = 1e-12);
        let r = rho_l2_box(&z, &own, &other, Norm::L2).unwrap();
        assert_relative_eq!(r.value, 0.2, epsilon = 1e-12);
        let x = r.minimizer.unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn equidistant_query_in_box() {
        let r = rho_l2_box(&[0.5, 0.5], &[0.4, 0.5], &[0.6, 0.5], Norm::L2).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn unreachable_halfspace_is_infeasible() {
        // Bisector x₁ = 2.
        for q in Norm::ALL {
            let r = rho_l2_box(&[0.5, 0.5], &[0.0, 0.5], &[4.0, 0.5], q).unwrap();
            assert!(r.is_infeasible(), "q={q}");
        }
    }

    #[test]
    fn greedy_box_solvers_use_capacity() {
        // ⟨x, (2,1)⟩ must grow by 0.7 and x₁ can only move 0.2.
        let z = [0.8, 0.2];
        let own = [0.0, 0.0];
        let other = [2.0, 1.0];
        let r1 = rho_l2_box(&z, &own, &other, Norm::L1).unwrap();
        assert_relative_eq!(r1.value, 0.5, epsilon = 1e-12);
        let x = r1.minimizer.unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 0.5, epsilon = 1e-12);
        let rinf = rho_l2_box(&z, &own, &other, Norm::Linf).unwrap();
        assert_relative_eq!(rinf.value, 0.3, epsilon = 1e-12);
        let unb = rho_l2(&z, &own, &other, Norm::Linf).unwrap();
        assert!(rinf.value >= unb.value);
    }
}
