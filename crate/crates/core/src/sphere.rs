//! Certification in a sphere-product embedding.
//!
//! Every slice of an embedded point is nonnegative and lies on a sphere of
//! known radius. Dropping the sphere constraints gives the plain Euclidean
//! bound; keeping them gives a Lagrangian dual in one multiplier:
//!
//! q(λ) = −Σ_slices r_s ‖(z_s + λ v_s)⁺‖₂ − λ b,   λ ≥ 0,
//!
//! with v = w_j − w_i and b = (‖w_i‖² − ‖w_j‖²)/2, and the bound
//! √max(0, 2 Σ n_l r_l² + 2 max q).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{BoundBreakdown, Certificate, Diagnostics};
use crate::geometry::{l2_halfspace, rho_l2};
use crate::model::{PrototypeModel, SphereEmbedding};
use crate::norm::{dot, Norm};

const LAMBDA_CAP: f64 = 1e6;
const LAMBDA_TOL: f64 = 1e-10;
const GOLDEN_STEPS: usize = 200;

/// Acceptance rules for an embedded point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereTolerance {
    /// Radius deviation accepted as is.
    pub radius: f64,
    /// Larger deviations up to this are fixed by rescaling the slice.
    pub renormalize: f64,
    /// Entries down to −negative are clamped to 0.
    pub negative: f64,
}

impl Default for SphereTolerance {
    fn default() -> Self {
        SphereTolerance {
            radius: 1e-6,
            renormalize: 1e-4,
            negative: 1e-9,
        }
    }
}

/// A point checked against its embedding's sphere and sign constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedQuery {
    pub point: Vec<f64>,
    pub embedding: SphereEmbedding,
}

/// Checks (and within tolerance repairs) an embedded point. `NotOnSphere`
/// reports the slice index in embedding order.
pub fn validate_embedding(z: &[f64], embedding: &SphereEmbedding, tol: &SphereTolerance) -> Result<EmbeddedQuery> {
    if z.len() != embedding.dim() {
        return Err(Error::DimensionMismatch {
            expected: embedding.dim(),
            got: z.len(),
        });
    }
    let mut point = z.to_vec();
    for (index, v) in point.iter_mut().enumerate() {
        if !v.is_finite() || *v < -tol.negative {
            return Err(Error::NegativeEntry { index });
        }
        *v = v.max(0.0);
    }
    for (s, (_, offset, channels, radius)) in embedding.slices().enumerate() {
        let slice = &mut point[offset..offset + channels];
        let norm = Norm::L2.norm(slice);
        let deviation = (norm - radius).abs();
        if deviation <= tol.radius {
            continue;
        }
        if deviation <= tol.renormalize && norm > 0.0 {
            slice.iter_mut().for_each(|v| *v *= radius / norm);
            continue;
        }
        return Err(Error::NotOnSphere { block: s, deviation });
    }
    Ok(EmbeddedQuery {
        point,
        embedding: embedding.clone(),
    })
}

/// q(λ) for one prototype pair.
pub fn dual_objective(z: &[f64], own: &[f64], other: &[f64], embedding: &SphereEmbedding, lambda: f64) -> f64 {
    let (v, b) = l2_halfspace(own, other);
    objective(z, &v, b, embedding, lambda)
}

fn objective(z: &[f64], v: &[f64], b: f64, embedding: &SphereEmbedding, lambda: f64) -> f64 {
    let mut total = -lambda * b;
    for (_, offset, channels, radius) in embedding.slices() {
        let sq: f64 = (offset..offset + channels)
            .map(|k| (z[k] + lambda * v[k]).max(0.0).powi(2))
            .sum();
        total -= radius * sq.sqrt();
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualBound {
    pub bound: f64,
    pub lambda: f64,
}

/// Lower bound on the distance from `z` to sphere-product points that are
/// at least as close to `other` as to `own`.
pub fn sphere_dual_bound(query: &EmbeddedQuery, own: &[f64], other: &[f64]) -> Result<DualBound> {
    let z = &query.point;
    crate::geometry::check_pair(z, own, other)?;
    let (v, b) = l2_halfspace(own, other);
    if dot(z, &v) + b >= 0.0 {
        return Err(Error::PreconditionViolated(
            "query is not strictly closer to the own-class prototype".into(),
        ));
    }
    let emb = &query.embedding;
    let q = |l: f64| objective(z, &v, b, emb, l);
    // q is concave: grow the bracket while it still increases.
    let mut hi = 1.0;
    while hi < LAMBDA_CAP && q(2.0 * hi) > q(hi) {
        hi *= 2.0;
    }
    let (mut lo, mut hi) = (0.0, (2.0 * hi).min(LAMBDA_CAP));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut c = lo + ratio * (hi - lo);
    let (mut qa, mut qc) = (q(a), q(c));
    // Relative stop: near the cap the float spacing exceeds any absolute tolerance.
    let mut steps = 0;
    while hi - lo > LAMBDA_TOL * (1.0 + hi) && steps < GOLDEN_STEPS {
        steps += 1;
        if qa >= qc {
            hi = c;
            c = a;
            qc = qa;
            a = hi - ratio * (hi - lo);
            qa = q(a);
        } else {
            lo = a;
            a = c;
            qa = qc;
            c = lo + ratio * (hi - lo);
            qc = q(c);
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    let mut best = q(lambda);
    if q(0.0) >= best {
        lambda = 0.0;
        best = q(0.0);
    }
    let bound = (2.0 * emb.total_sq_radius() + 2.0 * best).max(0.0).sqrt();
    Ok(DualBound { bound, lambda })
}

/// Lower bound for an embedded-metric model: for every other-class
/// prototype the larger of the plain Euclidean and the sphere dual bound,
/// against the nearest own-class prototype. Never exact.
pub fn certify_embedded(model: &PrototypeModel, z: &[f64], y: usize) -> Result<Certificate> {
    let embedding = model
        .metric()
        .embedding()
        .ok_or_else(|| Error::PreconditionViolated("sphere certification needs an embedded_l2 model".into()))?;
    let query = validate_embedding(z, embedding, &SphereTolerance::default())?;
    let z = &query.point;
    let nb = model.neighbors(z, y)?;
    let predicted = model.classify(z)?.class;
    if predicted != y {
        return Ok(Certificate::misclassified(y, predicted));
    }
    let own = model.prototype(nb.own_index);
    let mut plain_min = f64::INFINITY;
    let mut combined_min = f64::INFINITY;
    for j in model.other_members(y) {
        let other = model.prototype(j);
        let plain = rho_l2(z, own, other, Norm::L2)?.value;
        let dual = if plain > 0.0 {
            sphere_dual_bound(&query, own, other)?.bound
        } else {
            0.0
        };
        plain_min = plain_min.min(plain);
        combined_min = combined_min.min(plain.max(dual));
    }
    Ok(Certificate {
        label: y,
        label_predicted: predicted,
        correct: true,
        lower_bound: combined_min,
        exact: None,
        upper_bound: None,
        bounds: BoundBreakdown {
            trivial: crate::geometry::trivial_semimetric_bound(nb.own_dist, nb.other_dist),
            minmax_unbounded: Some(plain_min),
            minmax_box: None,
            sphere_dual: Some(combined_min),
        },
        diagnostics: Diagnostics::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Domain, Metric, SphereBlock};

    fn circle() -> SphereEmbedding {
        SphereEmbedding::new(vec![SphereBlock {
            radius: 1.0,
            channels: 2,
            positions: 1,
        }])
        .unwrap()
    }

    fn query(z: &[f64]) -> EmbeddedQuery {
        validate_embedding(z, &circle(), &SphereTolerance::default()).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(validate_embedding(&[0.6, 0.8], &circle(), &SphereTolerance::default()).is_ok());
        let err = validate_embedding(&[0.6, 0.9], &circle(), &SphereTolerance::default()).unwrap_err();
        let Error::NotOnSphere { block: 0, deviation } = err else { panic!("{err}") };
        assert!((deviation - (0.6f64.hypot(0.9) - 1.0)).abs() < 1e-12);
        let tol = SphereTolerance {
            negative: 1e-2,
            ..SphereTolerance::default()
        };
        let q = validate_embedding(&[1.0, -0.001], &circle(), &tol).unwrap();
        assert_eq!(q.point, vec![1.0, 0.0]);
        assert!(matches!(
            validate_embedding(&[1.0, -0.001], &circle(), &SphereTolerance::default()),
            Err(Error::NegativeEntry { index: 1 })
        ));
    }

    #[test]
    fn renormalizes_small_deviation() {
        let q = validate_embedding(&[0.6, 0.80005], &circle(), &SphereTolerance::default()).unwrap();
        assert!((Norm::L2.norm(&q.point) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quarter_circle_fixture() {
        let b = sphere_dual_bound(&query(&[0.0, 1.0]), &[0.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((b.bound - (2.0 - 2f64.sqrt()).sqrt()).abs() < 1e-9, "{b:?}");
        assert!((b.lambda - 0.5).abs() < 1e-6);
    }

    #[test]
    fn antipodal_fixture() {
        let b = sphere_dual_bound(&query(&[1.0, 0.0]), &[1.0, 0.0], &[-1.0, 0.0]).unwrap();
        assert!((b.bound - 2f64.sqrt()).abs() < 1e-9, "{b:?}");
    }

    #[test]
    fn unbounded_growth_terminates() {
        // Empty arc: the objective rises linearly up to the multiplier cap.
        let b = sphere_dual_bound(&query(&[1.0, 0.0]), &[1.0, 0.0], &[-1.0, -1.0]).unwrap();
        assert!(b.bound > 1e2, "{b:?}");
    }

    #[test]
    fn zero_multiplier_is_vacuous() {
        let e = circle();
        let q0 = dual_objective(&[0.6, 0.8], &[0.6, 0.8], &[0.8, 0.6], &e, 0.0);
        assert!((q0 + e.total_sq_radius()).abs() < 1e-12);
    }

    #[test]
    fn wrong_side_is_a_precondition_error() {
        assert!(matches!(
            sphere_dual_bound(&query(&[1.0, 0.0]), &[0.0, 1.0], &[1.0, 0.0]),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn embedded_certificate_beats_plain() {
        let m = PrototypeModel::new(
            2,
            2,
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0, 1],
            Metric::EmbeddedL2(circle()),
            Domain::SphereProduct,
        )
        .unwrap();
        let c = certify_embedded(&m, &[0.0, 1.0], 0).unwrap();
        assert!((c.lower_bound - 0.7653668647301796).abs() < 1e-9);
        assert!((c.bounds.minmax_unbounded.unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(c.exact, None);
        let c = certify_embedded(&m, &[1.0, 0.0], 0).unwrap();
        assert!(!c.correct);
        assert_eq!(c.lower_bound, 0.0);
    }
}
