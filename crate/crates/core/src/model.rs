//! The prototype classifier and its threat-model descriptors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::Norm;

/// One layer of a sphere-product embedding: `positions` slices of
/// `channels` entries, each slice lying on the sphere of radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereBlock {
    #[serde(rename = "r")]
    pub radius: f64,
    pub channels: usize,
    pub positions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereEmbedding {
    pub blocks: Vec<SphereBlock>,
}

impl SphereEmbedding {
    pub fn new(blocks: Vec<SphereBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvariantViolation("embedding has no blocks".into()));
        }
        for (l, b) in blocks.iter().enumerate() {
            if !(b.radius > 0.0 && b.radius.is_finite()) || b.channels == 0 || b.positions == 0 {
                return Err(Error::InvariantViolation(format!(
                    "embedding block {l} needs positive radius, channels and positions"
                )));
            }
        }
        Ok(SphereEmbedding { blocks })
    }

    /// Total embedding dimension Σ n_l c_l.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.channels * b.positions).sum()
    }

    /// Σ n_l r_l², the squared norm of every point on the sphere product.
    pub fn total_sq_radius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.positions as f64 * b.radius * b.radius)
            .sum()
    }

    /// Iterates over every sphere slice as `(block index, offset, channels, radius)`.
    pub fn slices(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        let mut offset = 0;
        self.blocks.iter().enumerate().flat_map(move |(l, b)| {
            let start = offset;
            offset += b.channels * b.positions;
            (0..b.positions).map(move |p| (l, start + p * b.channels, b.channels, b.radius))
        })
    }
}

/// Distance used by the classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    L1,
    L2,
    Linf,
    EmbeddedL2(SphereEmbedding),
}

impl Metric {
    /// The ℓp norm underlying the metric. The embedded metric is Euclidean.
    pub fn norm(&self) -> Norm {
        match self {
            Metric::L1 => Norm::L1,
            Metric::L2 | Metric::EmbeddedL2(_) => Norm::L2,
            Metric::Linf => Norm::Linf,
        }
    }

    pub fn embedding(&self) -> Option<&SphereEmbedding> {
        match self {
            Metric::EmbeddedL2(e) => Some(e),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Linf => "linf",
            Metric::EmbeddedL2(_) => "embedded_l2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// ℝ^d
    #[default]
    Unbounded,
    /// [0,1]^d
    UnitBox,
    /// Nonnegative orthant ∩ product of spheres; only with the embedded metric.
    SphereProduct,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Unbounded => "unbounded",
            Domain::UnitBox => "unit_box",
            Domain::SphereProduct => "sphere_product",
        }
    }

    pub fn is_box(self) -> bool {
        self == Domain::UnitBox
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "unbounded" | "rd" => Ok(Domain::Unbounded),
            "unit_box" | "box" => Ok(Domain::UnitBox),
            "sphere_product" | "sphere" => Ok(Domain::SphereProduct),
            other => Err(Error::InvalidConfig(format!("unknown domain '{other}'"))),
        }
    }
}

/// Norm measuring the size of a perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreatNorm {
    L1,
    L2,
    Linf,
    /// Euclidean distance in a sphere-product embedding space.
    EmbeddedL2,
}

impl ThreatNorm {
    pub fn norm(self) -> Norm {
        match self {
            ThreatNorm::L1 => Norm::L1,
            ThreatNorm::L2 | ThreatNorm::EmbeddedL2 => Norm::L2,
            ThreatNorm::Linf => Norm::Linf,
        }
    }
}

impl From<Norm> for ThreatNorm {
    fn from(n: Norm) -> Self {
        match n {
            Norm::L1 => ThreatNorm::L1,
            Norm::L2 => ThreatNorm::L2,
            Norm::Linf => ThreatNorm::Linf,
        }
    }
}

impl FromStr for ThreatNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "embedded_l2" | "embedded" | "lpips" => Ok(ThreatNorm::EmbeddedL2),
            other => other.parse::<Norm>().map(ThreatNorm::from),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreatSpec {
    pub q: ThreatNorm,
    pub domain: Domain,
    /// Refinement stops once the lower bound reaches this radius.
    pub radius_cap: Option<f64>,
}

impl ThreatSpec {
    pub fn new(q: impl Into<ThreatNorm>, domain: Domain) -> Self {
        ThreatSpec {
            q: q.into(),
            domain,
            radius_cap: None,
        }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.radius_cap = Some(cap);
        self
    }
}

/// Result of classifying a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub class: usize,
    /// Distance to the nearest prototype of the predicted class.
    pub d_own: f64,
    /// Distance to the nearest prototype of any other class.
    pub d_other: f64,
}

/// Nearest prototypes relative to a reference label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelNeighbors {
    pub own_index: usize,
    pub own_dist: f64,
    pub other_index: usize,
    pub other_dist: f64,
}

/// A nearest prototype classifier. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeModel {
    dim: usize,
    num_classes: usize,
    prototypes: Vec<f64>,
    labels: Vec<usize>,
    metric: Metric,
    domain: Domain,
    members: Vec<Vec<usize>>,
}

impl PrototypeModel {
    pub fn new(
        dim: usize,
        num_classes: usize,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        metric: Metric,
        domain: Domain,
    ) -> Result<Self> {
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvariantViolation(format!(
                    "prototype {r} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(dim, num_classes, flat, labels, metric, domain)
    }

    pub fn from_flat(
        dim: usize,
        num_classes: usize,
        prototypes: Vec<f64>,
        labels: Vec<usize>,
        metric: Metric,
        domain: Domain,
    ) -> Result<Self> {
        if dim == 0 || num_classes == 0 {
            return Err(Error::InvariantViolation(
                "dim and num_classes must be positive".into(),
            ));
        }
        if prototypes.len() != labels.len() * dim {
            return Err(Error::InvariantViolation(format!(
                "{} prototype values do not match {} labels of dimension {dim}",
                prototypes.len(),
                labels.len()
            )));
        }
        if let Some(i) = prototypes.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvariantViolation(format!(
                "prototype {} has a non-finite entry",
                i / dim
            )));
        }
        let mut members = vec![Vec::new(); num_classes];
        for (i, &y) in labels.iter().enumerate() {
            if y >= num_classes {
                return Err(Error::InvariantViolation(format!(
                    "prototype {i} has label {y} outside [0, {num_classes})"
                )));
            }
            members[y].push(i);
        }
        if let Some(c) = members.iter().position(Vec::is_empty) {
            return Err(Error::InvariantViolation(format!(
                "class {c} has no prototypes"
            )));
        }
        if let Metric::EmbeddedL2(e) = &metric {
            if e.dim() != dim {
                return Err(Error::InvariantViolation(format!(
                    "embedding dimension {} differs from model dimension {dim}",
                    e.dim()
                )));
            }
        }
        if domain == Domain::SphereProduct && metric.embedding().is_none() {
            return Err(Error::InvariantViolation(
                "sphere_product domain requires the embedded_l2 metric".into(),
            ));
        }
        Ok(PrototypeModel {
            dim,
            num_classes,
            prototypes,
            labels,
            metric,
            domain,
            members,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_prototypes(&self) -> usize {
        self.labels.len()
    }

    pub fn prototype(&self, i: usize) -> &[f64] {
        &self.prototypes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn prototypes_flat(&self) -> &[f64] {
        &self.prototypes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Prototype indices of class `y`.
    pub fn class_members(&self, y: usize) -> &[usize] {
        &self.members[y]
    }

    /// Prototype indices of every class other than `y`.
    pub fn other_members(&self, y: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l != y)
            .map(|(i, _)| i)
    }

    /// Same model with its prototypes replaced (used by training).
    pub fn with_prototypes(&self, prototypes: Vec<f64>) -> Result<Self> {
        Self::from_flat(
            self.dim,
            self.num_classes,
            prototypes,
            self.labels.clone(),
            self.metric.clone(),
            self.domain,
        )
    }

    pub fn with_domain(&self, domain: Domain) -> Result<Self> {
        Self::from_flat(
            self.dim,
            self.num_classes,
            self.prototypes.clone(),
            self.labels.clone(),
            self.metric.clone(),
            domain,
        )
    }

    pub fn distance(&self, z: &[f64], i: usize) -> f64 {
        self.metric.norm().dist(z, self.prototype(i))
    }

    pub(crate) fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::PreconditionViolated(format!(
                "query has a non-finite entry at {i}"
            )));
        }
        Ok(())
    }

    /// Predicts the class of `z`. Equal distances resolve toward the smaller
    /// class index.
    pub fn classify(&self, z: &[f64]) -> Result<Classification> {
        self.check_point(z)?;
        let mut best = vec![f64::INFINITY; self.num_classes];
        for (i, &y) in self.labels.iter().enumerate() {
            let d = self.distance(z, i);
            if d < best[y] {
                best[y] = d;
            }
        }
        let mut class = 0;
        for y in 1..self.num_classes {
            if best[y] < best[class] {
                class = y;
            }
        }
        let d_other = best
            .iter()
            .enumerate()
            .filter(|&(y, _)| y != class)
            .fold(f64::INFINITY, |m, (_, &d)| m.min(d));
        Ok(Classification {
            class,
            d_own: best[class],
            d_other,
        })
    }

    /// Nearest own-class and other-class prototypes for label `y`; ties go to
    /// the smaller prototype index.
    pub fn neighbors(&self, z: &[f64], y: usize) -> Result<LabelNeighbors> {
        self.check_point(z)?;
        if y >= self.num_classes {
            return Err(Error::PreconditionViolated(format!(
                "label {y} outside [0, {})",
                self.num_classes
            )));
        }
        let mut own = (usize::MAX, f64::INFINITY);
        let mut other = (usize::MAX, f64::INFINITY);
        for (i, &l) in self.labels.iter().enumerate() {
            let d = self.distance(z, i);
            let slot = if l == y { &mut own } else { &mut other };
            if d < slot.1 {
                *slot = (i, d);
            }
        }
        if other.0 == usize::MAX {
            return Err(Error::PreconditionViolated(
                "model has a single class; no adversarial region exists".into(),
            ));
        }
        Ok(LabelNeighbors {
            own_index: own.0,
            own_dist: own.1,
            other_index: other.0,
            other_dist: other.1,
        })
    }

    /// Whether `x` is classified as something other than `y`.
    pub fn is_adversarial(&self, x: &[f64], y: usize) -> bool {
        self.classify(x).map(|c| c.class != y).unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> PrototypeModel {
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
    fn classify_nearest_point() {
        let m = toy();
        let c = m.classify(&[0.0, 0.0]).unwrap();
        assert_eq!(c.class, 0);
        assert_eq!(c.d_own, 1.0);
        assert_eq!(c.d_other, 3.0);
    }

    #[test]
    fn classify_exact_hit() {
        let c = toy().classify(&[3.0, 0.0]).unwrap();
        assert_eq!(c.class, 1);
        assert_eq!(c.d_own, 0.0);
    }

    #[test]
    fn tie_goes_to_smaller_class() {
        let c = toy().classify(&[2.0, 0.0]).unwrap();
        assert_eq!(c.class, 0);
        assert_eq!(c.d_own, c.d_other);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        assert!(matches!(
            toy().classify(&[0.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn empty_class_is_rejected() {
        let err = PrototypeModel::new(
            1,
            3,
            vec![vec![0.0], vec![1.0]],
            vec![0, 1],
            Metric::L2,
            Domain::Unbounded,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)));
    }

    #[test]
    fn sphere_domain_needs_embedding() {
        let err = PrototypeModel::new(
            1,
            2,
            vec![vec![0.0], vec![1.0]],
            vec![0, 1],
            Metric::L2,
            Domain::SphereProduct,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)));
    }

    #[test]
    fn embedding_slices_cover_dimension() {
        let e = SphereEmbedding::new(vec![
            SphereBlock { radius: 0.5, channels: 2, positions: 4 },
            SphereBlock { radius: 1.0, channels: 3, positions: 1 },
        ])
        .unwrap();
        assert_eq!(e.dim(), 11);
        let s: Vec<_> = e.slices().collect();
        assert_eq!(s.len(), 5);
        assert_eq!(s[4], (1, 8, 3, 1.0));
        assert!((e.total_sq_radius() - 2.0).abs() < 1e-15);
    }
}
