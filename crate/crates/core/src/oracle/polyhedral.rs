//! Exact minimization of ‖x − z‖_q over small polyhedra by enumerating
//! candidate vertices. Every adversarial region of an ℓ2 classifier is a
//! finite union of polyhedra, and so is the pairwise region for p ∈ {1, ∞};
//! in dimension ≤ 4 the enumeration is cheap and needs no solver.

use crate::error::{Error, Result};
use crate::geometry::{l2_halfspace, PairwiseProblem};
use crate::model::{Domain, Metric, PrototypeModel};
use crate::norm::{dot, Norm};

use super::MAX_GRID_DIM;

/// ⟨normal, x⟩ + offset ≥ 0
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        HalfSpace { normal, offset }
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) + self.offset
    }

    fn holds(&self, x: &[f64]) -> bool {
        let scale = 1.0
            + self.offset.abs()
            + self.normal.iter().zip(x).map(|(a, b)| (a * b).abs()).sum::<f64>();
        self.value(x) >= -1e-9 * scale
    }

    fn is_trivial(&self) -> bool {
        self.normal.iter().all(|&a| a == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polyhedron {
    pub rows: Vec<HalfSpace>,
}

impl Polyhedron {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.rows.iter().all(|r| r.holds(x))
    }

    fn push_unit_box(&mut self, d: usize) {
        for k in 0..d {
            let mut e = vec![0.0; d];
            e[k] = 1.0;
            self.rows.push(HalfSpace::new(e.clone(), 0.0));
            e[k] = -1.0;
            self.rows.push(HalfSpace::new(e, 1.0));
        }
    }
}

/// Solves the square system `m x = rhs` by Gaussian elimination with
/// partial pivoting; `None` when (numerically) singular.
fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return (n == 0).then(Vec::new);
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-11 * scale {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..n {
                    m[r][c] -= f * m[col][c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Some(x)
}

fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    go(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Exact min of ‖x − z‖_q over a polyhedron, with a minimizer; `None` when
/// the polyhedron is empty.
///
/// q = 2: the projection lies in the relative interior of some face and is
/// the projection onto that face's affine hull, so all active sets of size
/// ≤ d are tried. q ∈ {1, ∞}: the objective is linear on each cell of the
/// arrangement of x_k = z_k (and x_k − z_k = ±(x_l − z_l) for ∞), so the
/// minimum sits at a vertex built from d of those hyperplanes and the rows.
pub fn polyhedral_min(z: &[f64], q: Norm, poly: &Polyhedron) -> Option<(f64, Vec<f64>)> {
    let d = z.len();
    let rows: Vec<&HalfSpace> = poly.rows.iter().filter(|r| !r.is_trivial()).collect();
    if poly.rows.iter().any(|r| r.is_trivial() && !r.holds(z)) {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut offer = |x: Vec<f64>| {
        if poly.contains(&x) {
            let v = q.dist(&x, z);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, x));
            }
        }
    };
    match q {
        Norm::L2 => {
            for size in 0..=d.min(rows.len()) {
                for_each_subset(rows.len(), size, &mut |s: &[usize]| {
                    let gram: Vec<Vec<f64>> = s
                        .iter()
                        .map(|&a| s.iter().map(|&b| dot(&rows[a].normal, &rows[b].normal)).collect())
                        .collect();
                    let rhs: Vec<f64> = s.iter().map(|&a| rows[a].value(z)).collect();
                    if let Some(mu) = solve(gram, rhs) {
                        let mut x = z.to_vec();
                        for (m, &a) in mu.iter().zip(s) {
                            for k in 0..d {
                                x[k] -= m * rows[a].normal[k];
                            }
                        }
                        offer(x);
                    }
                });
            }
        }
        Norm::L1 | Norm::Linf => {
            let mut planes: Vec<HalfSpace> = rows.iter().map(|r| (*r).clone()).collect();
            for k in 0..d {
                let mut e = vec![0.0; d];
                e[k] = 1.0;
                planes.push(HalfSpace::new(e, -z[k]));
            }
            if q == Norm::Linf {
                for k in 0..d {
                    for l in k + 1..d {
                        for s in [1.0, -1.0] {
                            let mut e = vec![0.0; d];
                            e[k] = 1.0;
                            e[l] = -s;
                            planes.push(HalfSpace::new(e, -(z[k] - s * z[l])));
                        }
                    }
                }
            }
            for_each_subset(planes.len(), d, &mut |s: &[usize]| {
                let m: Vec<Vec<f64>> = s.iter().map(|&a| planes[a].normal.clone()).collect();
                let rhs: Vec<f64> = s.iter().map(|&a| -planes[a].offset).collect();
                if let Some(x) = solve(m, rhs) {
                    offer(x);
                }
            });
        }
    }
    best
}

/// The pairwise region {‖x − own‖_p ≥ ‖x − other‖_p} (∩ box) as a union of
/// polyhedra.
pub fn pairwise_polyhedra(problem: &PairwiseProblem<'_>) -> Vec<Polyhedron> {
    let PairwiseProblem { own, other, p, .. } = *problem;
    let d = own.len();
    let mut out = match p {
        Norm::L2 => {
            let (a, b) = l2_halfspace(own, other);
            vec![Polyhedron {
                rows: vec![HalfSpace::new(a, b)],
            }]
        }
        Norm::Linf => {
            let mut out = Vec::new();
            for k in 0..d {
                for sigma in [1.0, -1.0] {
                    // σ(x_k − own_k) ≥ ±(x_l − other_l) for every l.
                    let mut rows = Vec::new();
                    for l in 0..d {
                        for s in [1.0, -1.0] {
                            let mut n = vec![0.0; d];
                            n[k] += sigma;
                            n[l] -= s;
                            rows.push(HalfSpace::new(n, -sigma * own[k] + s * other[l]));
                        }
                    }
                    out.push(Polyhedron { rows });
                }
            }
            out
        }
        Norm::L1 => {
            // Cells of the arrangement x_l ∈ {own_l, other_l}, on which the
            // gap Σ|x_l − own_l| − |x_l − other_l| is linear.
            let mut out = vec![(Polyhedron::default(), vec![0.0; d], 0.0)];
            for l in 0..d {
                let (lo, hi) = (own[l].min(other[l]), own[l].max(other[l]));
                if lo == hi {
                    continue;
                }
                let mut next = Vec::with_capacity(out.len() * 3);
                for (poly, slope, constant) in &out {
                    for (probe, bounds) in [
                        (lo - 1.0, vec![(-1.0, lo)]),
                        (0.5 * (lo + hi), vec![(1.0, -lo), (-1.0, hi)]),
                        (hi + 1.0, vec![(1.0, -hi)]),
                    ] {
                        let sa = crate::norm::sign(probe - own[l]);
                        let sb = crate::norm::sign(probe - other[l]);
                        let mut poly = poly.clone();
                        for (c, off) in bounds {
                            let mut n = vec![0.0; d];
                            n[l] = c;
                            poly.rows.push(HalfSpace::new(n, off));
                        }
                        let mut slope = slope.clone();
                        slope[l] += sa - sb;
                        next.push((poly, slope, constant - sa * own[l] + sb * other[l]));
                    }
                }
                out = next;
            }
            out.into_iter()
                .map(|(mut poly, slope, constant)| {
                    poly.rows.push(HalfSpace::new(slope, constant));
                    poly
                })
                .collect()
        }
    };
    if problem.domain.is_box() {
        out.iter_mut().for_each(|p| p.push_unit_box(d));
    }
    out
}

/// Exact ε for an ℓ2 classifier by vertex enumeration over the regions
/// {x : x is at least as close to w_j as to every own-class prototype}.
/// Ties count as adversarial, matching the closure of the wrong region.
pub fn exact_brute_force(model: &PrototypeModel, z: &[f64], y: usize, q: Norm, domain: Domain) -> Result<f64> {
    if !matches!(model.metric(), Metric::L2 | Metric::EmbeddedL2(_)) {
        return Err(Error::unsupported(format!(
            "brute-force oracle needs an l2 metric, got {}",
            model.metric().name()
        )));
    }
    if z.len() > MAX_GRID_DIM {
        return Err(Error::DimensionTooLarge(z.len()));
    }
    if model.classify(z)?.class != y {
        return Ok(0.0);
    }
    let mut best = f64::INFINITY;
    for j in model.other_members(y) {
        let mut poly = Polyhedron::default();
        for &i in model.class_members(y) {
            let (a, b) = l2_halfspace(model.prototype(i), model.prototype(j));
            poly.rows.push(HalfSpace::new(a, b));
        }
        if domain.is_box() {
            poly.push_unit_box(z.len());
        }
        if let Some((v, _)) = polyhedral_min(z, q, &poly) {
            best = best.min(v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_row_projection() {
        // x₁ ≥ 2
        let poly = Polyhedron {
            rows: vec![HalfSpace::new(vec![1.0, 0.0], -2.0)],
        };
        for q in Norm::ALL {
            let (v, x) = polyhedral_min(&[0.0, 0.0], q, &poly).unwrap();
            assert!((v - 2.0).abs() < 1e-12, "q={q}");
            assert!((x[0] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_blocker_values() {
        let model = PrototypeModel::new(
            2,
            2,
            vec![vec![0.0, 1.0], vec![0.0, -1.0], vec![2.0, 0.0]],
            vec![0, 0, 1],
            Metric::L2,
            Domain::Unbounded,
        )
        .unwrap();
        for q in Norm::ALL {
            let v = exact_brute_force(&model, &[0.0, 0.0], 0, q, Domain::Unbounded).unwrap();
            assert!((v - 0.75).abs() < 1e-12, "q={q}: {v}");
        }
    }

    #[test]
    fn empty_polyhedron() {
        let mut poly = Polyhedron {
            rows: vec![HalfSpace::new(vec![1.0, 0.0], -2.0)],
        };
        poly.push_unit_box(2);
        for q in Norm::ALL {
            assert!(polyhedral_min(&[0.5, 0.5], q, &poly).is_none());
        }
    }

    #[test]
    fn pairwise_unions_describe_the_region() {
        let own = [0.2, -0.1, 0.4];
        let other = [0.9, 0.3, -0.2];
        let z = [0.0, 0.0, 0.0];
        for p in Norm::ALL {
            let pb = PairwiseProblem::new(&z, &own, &other, p, Norm::L2, Domain::Unbounded);
            let polys = pairwise_polyhedra(&pb);
            let mut rng = ChaCha8Rng::seed_from_u64(12345);
            for _ in 0..2000 {
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let gap = p.dist(&x, &own) - p.dist(&x, &other);
                if gap.abs() < 1e-6 {
                    continue;
                }
                assert_eq!(pb.is_feasible(&x), polys.iter().any(|poly| poly.contains(&x)), "p={p} x={x:?}");
            }
        }
    }
}
