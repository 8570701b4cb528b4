//! Certified training: gradient ascent on the mean capped signed margin.
//!
//! For a correctly classified point the margin is min over other-class j of
//! the pairwise value against the nearest own-class prototype, capped at R.
//! A misclassified point contributes minus the pairwise value from its
//! nearest wrong prototype back to its nearest own prototype, uncapped.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::check_pair;
use crate::io::Dataset;
use crate::model::{Domain, Metric, PrototypeModel};
use crate::norm::{sign, sq_dist, Norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    #[default]
    KMeans,
    RandomSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    #[default]
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub prototypes_per_class: usize,
    /// Margin cap R.
    pub cap: f64,
    pub metric: Norm,
    pub threat: Norm,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_decay: f64,
    pub init: Init,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            prototypes_per_class: 1,
            cap: 1.0,
            metric: Norm::L2,
            threat: Norm::L2,
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 128,
            lr_decay: 0.95,
            init: Init::KMeans,
            seed: 0,
            optimizer: Optimizer::Adam,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.prototypes_per_class == 0 {
            return bad("prototypes_per_class must be positive");
        }
        if !(self.cap > 0.0 && self.cap.is_finite()) {
            return bad("cap must be a positive number");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("lr_decay must lie in (0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        check_trainable(self.metric, self.threat)
    }
}

fn check_trainable(metric: Norm, threat: Norm) -> Result<()> {
    match (metric, threat) {
        (Norm::L2, _) | (Norm::Linf, Norm::Linf) => Ok(()),
        (Norm::Linf, q) => Err(Error::InvalidConfig(format!(
            "training an linf model needs the linf threat, got {q}"
        ))),
        (Norm::L1, _) => Err(Error::InvalidConfig("training supports l2/linf only".into())),
    }
}

/// Signed, capped margin of one point and the prototype pair realizing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarginValue {
    pub signed_margin: f64,
    /// (nearer, farther) prototype of the pair: (i*, j) when correct,
    /// (j*, i') when misclassified.
    pub pair: (usize, usize),
    pub correct: bool,
    pub capped: bool,
}

/// Pairwise value from `z` to the boundary between `near` and `far`,
/// signed (positive while `near` is strictly closer), with its gradients
/// with respect to `near` and `far`.
fn pair_value(z: &[f64], near: &[f64], far: &[f64], p: Norm, q: Norm, grad: bool) -> (f64, Vec<f64>, Vec<f64>) {
    match p {
        Norm::L2 => {
            let half_gap = 0.5 * (sq_dist(z, far) - sq_dist(z, near));
            let v: Vec<f64> = far.iter().zip(near).map(|(b, a)| b - a).collect();
            let n = q.dual().norm(&v);
            let value = half_gap / n;
            if !grad {
                return (value, Vec::new(), Vec::new());
            }
            let g = dual_norm_gradient(&v, q);
            let gn: Vec<f64> = (0..z.len())
                .map(|k| ((z[k] - near[k]) * n + half_gap * g[k]) / (n * n))
                .collect();
            let gf: Vec<f64> = (0..z.len())
                .map(|k| ((far[k] - z[k]) * n - half_gap * g[k]) / (n * n))
                .collect();
            (value, gn, gf)
        }
        _ => {
            let d = z.len();
            let mut near_gap = (f64::NEG_INFINITY, usize::MAX, 0.0);
            let mut far_low = (f64::INFINITY, usize::MAX);
            for l in 0..d {
                let s = sign(far[l] - near[l]);
                let gap = if s == 0.0 { (z[l] - near[l]).abs() } else { s * (z[l] - near[l]) };
                // Derivative of `gap` with respect to near[l].
                let slope = if s == 0.0 { -sign(z[l] - near[l]) } else { -s };
                if gap > near_gap.0 {
                    near_gap = (gap, l, slope);
                }
                if s != 0.0 && s * (z[l] - far[l]) < far_low.0 {
                    far_low = (s * (z[l] - far[l]), l);
                }
            }
            let value = 0.5 * (-far_low.0 - near_gap.0);
            if !grad {
                return (value, Vec::new(), Vec::new());
            }
            let mut gn = vec![0.0; d];
            let mut gf = vec![0.0; d];
            gn[near_gap.1] = -0.5 * near_gap.2;
            gf[far_low.1] = 0.5 * sign(far[far_low.1] - near[far_low.1]);
            (value, gn, gf)
        }
    }
}

/// Gradient of ‖v‖_{q*}; the smallest index wins at ties.
fn dual_norm_gradient(v: &[f64], q: Norm) -> Vec<f64> {
    match q {
        Norm::L2 => {
            let n = Norm::L2.norm(v);
            v.iter().map(|x| x / n).collect()
        }
        Norm::Linf => v.iter().map(|&x| sign(x)).collect(),
        Norm::L1 => {
            let mut k = 0;
            for l in 1..v.len() {
                if v[l].abs() > v[k].abs() {
                    k = l;
                }
            }
            let mut g = vec![0.0; v.len()];
            g[k] = sign(v[k]);
            g
        }
    }
}

/// Gradient of a point's margin: nonzero rows only, as (prototype, row).
#[derive(Debug, Clone, PartialEq)]
pub struct MarginGradient {
    pub margin: MarginValue,
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl MarginGradient {
    /// Dense gradient over all prototype rows, row-major.
    pub fn dense(&self, num_prototypes: usize, dim: usize) -> Vec<f64> {
        let mut g = vec![0.0; num_prototypes * dim];
        for (i, row) in &self.rows {
            for (k, v) in row.iter().enumerate() {
                g[i * dim + k] += v;
            }
        }
        g
    }
}

fn margin_impl(model: &PrototypeModel, z: &[f64], y: usize, q: Norm, cap: f64, grad: bool) -> Result<MarginGradient> {
    let p = model.metric().norm();
    check_trainable(p, q)?;
    let nb = model.neighbors(z, y)?;
    let correct = model.classify(z)?.class == y;
    let (value, pair, gn, gf) = if correct {
        let own = model.prototype(nb.own_index);
        let mut best: Option<(f64, usize)> = None;
        for j in model.other_members(y) {
            check_pair(z, own, model.prototype(j))?;
            let (v, _, _) = pair_value(z, own, model.prototype(j), p, q, false);
            if best.is_none_or(|(b, _)| v < b) {
                best = Some((v, j));
            }
        }
        let (_, j) = best.expect("other classes exist");
        let (v, gn, gf) = pair_value(z, own, model.prototype(j), p, q, grad);
        (v, (nb.own_index, j), gn, gf)
    } else {
        let near = model.prototype(nb.other_index);
        let far = model.prototype(nb.own_index);
        check_pair(z, near, far)?;
        let (v, gn, gf) = pair_value(z, near, far, p, q, grad);
        let neg = |g: Vec<f64>| g.into_iter().map(|x| -x).collect::<Vec<_>>();
        (-v, (nb.other_index, nb.own_index), neg(gn), neg(gf))
    };
    let capped = correct && value >= cap;
    let margin = MarginValue {
        signed_margin: if capped { cap } else { value },
        pair,
        correct,
        capped,
    };
    let rows = if capped || !grad { Vec::new() } else { vec![(pair.0, gn), (pair.1, gf)] };
    Ok(MarginGradient { margin, rows })
}

/// Signed capped margin of `z` with label `y` under threat norm `q`.
pub fn margin(model: &PrototypeModel, z: &[f64], y: usize, q: Norm, cap: f64) -> Result<MarginValue> {
    Ok(margin_impl(model, z, y, q, cap, false)?.margin)
}

/// Gradient of [`margin`] with respect to the prototypes. Only the two
/// prototypes of the realizing pair get nonzero rows; a capped margin has
/// none.
pub fn margin_gradient(model: &PrototypeModel, z: &[f64], y: usize, q: Norm, cap: f64) -> Result<MarginGradient> {
    margin_impl(model, z, y, q, cap, true)
}

fn class_rows(data: &Dataset, y: usize, k: usize) -> Result<Vec<usize>> {
    let rows = data.class_indices(y);
    if rows.is_empty() {
        return Err(Error::EmptyClass(y));
    }
    if rows.len() < k {
        return Err(Error::ClassTooSmall {
            class: y,
            available: rows.len(),
            requested: k,
        });
    }
    Ok(rows)
}

const KMEANS_ITERATIONS: usize = 50;
const KMEANS_TOL: f64 = 1e-4;

/// Lloyd's algorithm on squared Euclidean distance with k-means++ seeding.
fn kmeans(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let nearest = |x: &[f64], centers: &[Vec<f64>]| -> (usize, f64) {
        centers
            .iter()
            .enumerate()
            .map(|(c, w)| (c, sq_dist(x, w)))
            .fold((0, f64::INFINITY), |b, v| if v.1 < b.1 { v } else { b })
    };
    let mut centers = vec![points[rng.gen_range(0..points.len())].to_vec()];
    while centers.len() < k {
        let weights: Vec<f64> = points.iter().map(|x| nearest(x, &centers).1).collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.gen::<f64>() * total;
            weights
                .iter()
                .position(|&w| {
                    t -= w;
                    t < 0.0 && w > 0.0
                })
                .unwrap_or_else(|| weights.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            rng.gen_range(0..points.len())
        };
        centers.push(points[pick].to_vec());
    }
    let dim = points[0].len();
    let mut inertia = f64::INFINITY;
    for _ in 0..KMEANS_ITERATIONS {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        let mut next = 0.0;
        for x in points {
            let (c, d) = nearest(x, &centers);
            next += d;
            counts[c] += 1;
            sums[c].iter_mut().zip(x.iter()).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let change = (inertia - next).abs() / next.max(f64::MIN_POSITIVE);
        inertia = next;
        if change < KMEANS_TOL {
            break;
        }
    }
    centers
}

/// Initial prototypes, `prototypes_per_class` per class, in class order.
pub fn init_prototypes(data: &Dataset, config: &TrainConfig) -> Result<PrototypeModel> {
    config.validate()?;
    let k = config.prototypes_per_class;
    let num_classes = data.num_classes();
    if num_classes < 2 {
        return Err(Error::InvalidConfig("training needs at least two classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::with_capacity(num_classes * k);
    let mut labels = Vec::with_capacity(num_classes * k);
    for y in 0..num_classes {
        let idx = class_rows(data, y, k)?;
        let centers = match config.init {
            Init::RandomSamples => rand::seq::index::sample(&mut rng, idx.len(), k)
                .into_iter()
                .map(|s| data.point(idx[s]).to_vec())
                .collect(),
            Init::KMeans => {
                let points: Vec<&[f64]> = idx.iter().map(|&i| data.point(i)).collect();
                kmeans(&points, k, &mut rng)
            }
        };
        labels.extend(std::iter::repeat_n(y, k));
        rows.extend(centers);
    }
    let metric = match config.metric {
        Norm::L2 => Metric::L2,
        Norm::Linf => Metric::Linf,
        Norm::L1 => Metric::L1,
    };
    PrototypeModel::new(data.dim(), num_classes, rows, labels, metric, Domain::Unbounded)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean capped signed margin over the full set.
    pub objective: f64,
    pub clean_accuracy: f64,
}

/// Full-dataset objective and accuracy.
pub fn evaluate(model: &PrototypeModel, data: &Dataset, q: Norm, cap: f64) -> Result<(f64, f64)> {
    let margins = (0..data.len())
        .into_par_iter()
        .map(|i| margin(model, data.point(i), data.labels()[i], q, cap))
        .collect::<Result<Vec<_>>>()?;
    let n = data.len().max(1) as f64;
    let objective = margins.iter().map(|m| m.signed_margin).sum::<f64>() / n;
    let accuracy = margins.iter().filter(|m| m.correct).count() as f64 / n;
    Ok((objective, accuracy))
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = Self::BETA1 * self.m[k] + (1.0 - Self::BETA1) * grad[k];
            self.v[k] = Self::BETA2 * self.v[k] + (1.0 - Self::BETA2) * grad[k] * grad[k];
            params[k] += lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
        }
    }
}

/// Trains from the configured initialization. The trace holds epoch 0
/// (the initialization) followed by one entry per epoch.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<(PrototypeModel, Vec<EpochStats>)> {
    let model = init_prototypes(data, config)?;
    train_from(model, data, config)
}

/// Trains starting from `model`, whose metric must match the config.
pub fn train_from(mut model: PrototypeModel, data: &Dataset, config: &TrainConfig) -> Result<(PrototypeModel, Vec<EpochStats>)> {
    config.validate()?;
    if model.metric().norm() != config.metric || model.metric().embedding().is_some() {
        return Err(Error::InvalidConfig(format!(
            "model metric {} differs from the configured {}",
            model.metric().name(),
            config.metric
        )));
    }
    if config.batch_size > data.len() {
        return Err(Error::InvalidConfig(format!(
            "batch size {} exceeds the {} training points",
            config.batch_size,
            data.len()
        )));
    }
    let q = config.threat;
    let record = |model: &PrototypeModel, epoch| -> Result<EpochStats> {
        let (objective, clean_accuracy) = evaluate(model, data, q, config.cap)?;
        Ok(EpochStats {
            epoch,
            objective,
            clean_accuracy,
        })
    };
    let mut trace = vec![record(&model, 0)?];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5e_ed0f_7a1e);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut params = model.prototypes_flat().to_vec();
    let (n_proto, dim) = (model.num_prototypes(), model.dim());
    let mut adam = Adam {
        m: vec![0.0; params.len()],
        v: vec![0.0; params.len()],
        t: 0,
    };
    let mut lr = config.learning_rate;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let grads = batch
                .par_iter()
                .map(|&i| margin_gradient(&model, data.point(i), data.labels()[i], q, config.cap))
                .collect::<Result<Vec<_>>>()?;
            let mut total = vec![0.0; params.len()];
            for g in &grads {
                for (i, row) in &g.rows {
                    for (k, v) in row.iter().enumerate() {
                        total[i * dim + k] += v;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            total.iter_mut().for_each(|g| *g *= scale);
            match config.optimizer {
                Optimizer::Sgd => params.iter_mut().zip(&total).for_each(|(w, g)| *w += lr * g),
                Optimizer::Adam => adam.step(&mut params, &total, lr),
            }
            model = model.with_prototypes(params.clone())?;
        }
        lr *= config.lr_decay;
        trace.push(record(&model, epoch)?);
    }
    debug_assert_eq!(params.len(), n_proto * dim);
    Ok((model, trace))
}

/// Writes the trace as `epoch,objective,clean_accuracy`.
pub fn write_trace(trace: &[EpochStats], mut out: impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "epoch,objective,clean_accuracy")?;
    for s in trace {
        writeln!(out, "{},{:?},{:?}", s.epoch, s.objective, s.clean_accuracy)?;
    }
    out.flush()
}
