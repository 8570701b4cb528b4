//! Slow, independent verification tools: grid minimizers, exact vertex
//! enumeration over polyhedral regions, ray attacks, and an angle scan for
//! single-sphere embeddings. None of these are used by the certification
//! paths; they exist to check them.

mod attack;
mod polyhedral;
mod sphere;

pub use attack::{attack_upper_bound, Attack};
pub use polyhedral::{exact_brute_force, pairwise_polyhedra, polyhedral_min, HalfSpace, Polyhedron};
pub use sphere::sphere_brute;

use crate::error::{Error, Result};
use crate::geometry::{check_pair, PairwiseProblem};
use crate::norm::Norm;

/// Largest dimension the grid oracles accept.
pub const MAX_GRID_DIM: usize = 4;

const SEEDS: usize = 8;
const PATTERN_HALF_WIDTH: i32 = 1;
const BISECTION_STEPS: usize = 60;

/// Axis-aligned search region.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SearchBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        SearchBox { lo, hi }
    }

    /// z ± ‖other − z‖_q, which contains the minimizer because `other`
    /// itself is feasible. Under `UnitBox` the region is cut to [0,1]^d.
    pub fn around(problem: &PairwiseProblem<'_>) -> Self {
        let z = problem.z;
        let boxed = problem.domain.is_box();
        let other_inside = problem.other.iter().all(|v| (0.0..=1.0).contains(v));
        let radius = if boxed && !other_inside {
            f64::INFINITY
        } else {
            problem.q.dist(problem.other, z) * (1.0 + 1e-9) + 1e-12
        };
        let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = z.iter().map(|&v| (v - radius, v + radius)).unzip();
        if boxed {
            lo.iter_mut().for_each(|v| *v = v.max(0.0));
            hi.iter_mut().for_each(|v| *v = v.min(1.0));
        }
        SearchBox { lo, hi }
    }
}

/// Grid estimate of ρ for one prototype pair: the distance of a verified
/// feasible point, so never below the true value. Returns +∞ when no grid
/// point of the search box is feasible.
pub fn grid_min_rho(problem: &PairwiseProblem<'_>, resolution: usize, search: &SearchBox) -> Result<f64> {
    check_pair(problem.z, problem.own, problem.other)?;
    if problem.z.len() > MAX_GRID_DIM {
        return Err(Error::DimensionTooLarge(problem.z.len()));
    }
    if problem.is_feasible(problem.z) {
        return Ok(0.0);
    }
    Ok(grid_min(problem.z, problem.q, search, resolution, |x| problem.is_feasible(x))
        .map_or(f64::INFINITY, |(v, _)| v))
}

/// Minimizes ‖x − z‖_q over grid points satisfying `feasible`, then refines
/// the best few by searching over ray directions from `z`, each ray being
/// bisected onto the boundary of the feasible set. The returned point is
/// always one for which `feasible` returned true.
pub fn grid_min<F>(z: &[f64], q: Norm, search: &SearchBox, resolution: usize, feasible: F) -> Option<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> bool,
{
    let d = z.len();
    let n = resolution.max(1);
    let side = n + 1;
    let spacing: Vec<f64> = (0..d).map(|k| (search.hi[k] - search.lo[k]) / n as f64).collect();
    let to_point = |idx: &[usize]| -> Vec<f64> {
        (0..d).map(|k| search.lo[k] + spacing[k] * idx[k] as f64).collect()
    };
    let decode = |mut code: usize| -> Vec<usize> {
        (0..d)
            .map(|_| {
                let c = code % side;
                code /= side;
                c
            })
            .collect()
    };
    // Distance of every grid point, +∞ where infeasible.
    let total = side.pow(d as u32);
    let dist: Vec<f64> = (0..total)
        .map(|code| {
            let x = to_point(&decode(code));
            if feasible(&x) {
                q.dist(&x, z)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    // Feasible points no worse than any stencil neighbour.
    let stride: Vec<usize> = (0..d).map(|k| side.pow(k as u32)).collect();
    let mut minima: Vec<(f64, Vec<usize>)> = Vec::new();
    for code in 0..total {
        let v = dist[code];
        if !v.is_finite() {
            continue;
        }
        let idx = decode(code);
        let local = (1..3usize.pow(d as u32)).all(|mut off| {
            let mut neighbour = 0usize;
            for k in 0..d {
                let step = off % 3;
                off /= 3;
                let c = idx[k] as isize + step as isize - 1;
                if c < 0 || c >= side as isize {
                    return true;
                }
                neighbour += c as usize * stride[k];
            }
            dist[neighbour] >= v
        });
        if local {
            minima.push((v, idx));
        }
    }
    if minima.is_empty() {
        return None;
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    let kept = minima;
    let step = spacing.iter().cloned().fold(0.0, f64::max);
    // Distances are heavily tied on a grid, so seeds are spread over the
    // near-best local minima by farthest-point sampling.
    let cutoff = kept[0].0 + q.norm(&spacing);
    let near: Vec<&Vec<usize>> = kept.iter().filter(|(v, _)| *v <= cutoff).map(|(_, i)| i).collect();
    let gap = |a: &[usize], b: &[usize]| a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0);
    let mut seeds: Vec<&Vec<usize>> = vec![near[0]];
    while seeds.len() < SEEDS {
        let far = near
            .iter()
            .map(|c| (seeds.iter().map(|s| gap(s, c)).min().unwrap_or(0), *c))
            .max_by_key(|(g, _)| *g);
        match far {
            Some((g, c)) if g >= 2 => seeds.push(c),
            _ => break,
        }
    }
    for (_, idx) in &kept {
        if seeds.len() >= SEEDS {
            break;
        }
        if seeds.iter().all(|s| gap(s, idx) >= 2) {
            seeds.push(idx);
        }
    }
    let mut best = (kept[0].0, to_point(&kept[0].1));
    for seed in seeds {
        if let Some((v, x)) = refine_along_rays(z, q, to_point(seed), step, &feasible) {
            if v < best.0 {
                best = (v, x);
            }
        }
    }
    Some(best)
}

fn unit(v: &[f64], q: Norm) -> Option<Vec<f64>> {
    let n = q.norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|x| x / n).collect())
}

fn along(z: &[f64], u: &[f64], t: f64) -> Vec<f64> {
    z.iter().zip(u).map(|(a, b)| a + t * b).collect()
}

/// Boundary crossing along the ray z + t·u closest to `t_ref`, approached
/// from a feasible point; returns its parameter t.
fn crossing<F: Fn(&[f64]) -> bool>(z: &[f64], u: &[f64], t_ref: f64, feasible: &F) -> Option<f64> {
    let hi = [0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.5]
        .iter()
        .map(|s| t_ref * (1.0 + s))
        .find(|&t| feasible(&along(z, u, t)))?;
    let lo = [1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0]
        .iter()
        .map(|s| hi * (1.0 - s))
        .find(|&t| !feasible(&along(z, u, t)));
    let Some(mut lo) = lo else {
        // Feasible all the way back to z; z itself is the answer.
        return Some(0.0);
    };
    let mut hi = hi;
    for _ in 0..BISECTION_STEPS {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible(&along(z, u, mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Directions on the flat parts of the unit ball reachable from `dir`: for
/// ℓ∞ every choice of coordinates pushed to ±1, for ℓ1 the vertices. The
/// pattern alone cannot cross plateaus that end on these.
fn ball_faces(dir: &[f64], q: Norm) -> Vec<Vec<f64>> {
    let d = dir.len();
    match q {
        Norm::Linf => (1..3usize.pow(d as u32))
            .map(|mut code| {
                dir.iter()
                    .map(|&v| {
                        let c = code % 3;
                        code /= 3;
                        [v, 1.0, -1.0][c]
                    })
                    .collect()
            })
            .collect(),
        Norm::L1 => (0..2 * d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                e
            })
            .collect(),
        Norm::L2 => Vec::new(),
    }
}

/// Pattern search over ray directions around the seed's direction.
fn refine_along_rays<F: Fn(&[f64]) -> bool>(
    z: &[f64],
    q: Norm,
    seed: Vec<f64>,
    grid_step: f64,
    feasible: &F,
) -> Option<(f64, Vec<f64>)> {
    let d = z.len();
    let offset: Vec<f64> = seed.iter().zip(z).map(|(a, b)| a - b).collect();
    let mut dir = unit(&offset, q)?;
    let mut best_t = crossing(z, &dir, q.norm(&offset), feasible)?;
    let m = PATTERN_HALF_WIDTH;
    let pattern: Vec<Vec<f64>> = {
        let side = (2 * m + 1) as usize;
        let total = side.pow(d as u32);
        (0..total)
            .filter_map(|mut code| {
                let e: Vec<f64> = (0..d)
                    .map(|_| {
                        let c = (code % side) as i32 - m;
                        code /= side;
                        c as f64 / m as f64
                    })
                    .collect();
                e.iter().any(|&c| c != 0.0).then_some(e)
            })
            .collect()
    };
    // Angular step relative to a unit direction.
    let mut h = (2.0 * grid_step / best_t.max(1e-12)).min(1.0);
    let mut rounds = 0;
    while h > 1e-6 && rounds < 400 {
        rounds += 1;
        let mut improved: Option<(f64, Vec<f64>)> = None;
        for e in &pattern {
            let cand: Vec<f64> = dir.iter().zip(e).map(|(a, b)| a + h * b).collect();
            let Some(u) = unit(&cand, q) else { continue };
            if let Some(t) = crossing(z, &u, best_t, feasible) {
                if t < improved.as_ref().map_or(best_t, |(b, _)| *b) * (1.0 - 1e-15) {
                    improved = Some((t, u));
                }
            }
        }
        if improved.is_none() {
            for cand in ball_faces(&dir, q) {
                let Some(u) = unit(&cand, q) else { continue };
                if let Some(t) = crossing(z, &u, best_t, feasible) {
                    if t < improved.as_ref().map_or(best_t, |(b, _)| *b) * (1.0 - 1e-15) {
                        improved = Some((t, u));
                    }
                }
            }
        }
        match improved {
            Some((t, u)) => {
                best_t = t;
                dir = u;
            }
            None => h *= 0.5,
        }
    }
    let x = along(z, &dir, best_t);
    debug_assert!(feasible(&x));
    Some((q.dist(&x, z), x))
}
