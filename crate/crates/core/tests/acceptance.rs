//! Acceptance gate. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use npc_robust::exact::{
    certify, minmax_lower_bound, solve_r_l2, solve_r_l2_lp, BoundBreakdown, Certificate, CertifyMode, CertifyOptions,
    ConvexSubproblem,
};
use npc_robust::geometry::{rho, PairwiseProblem};
use npc_robust::io::Dataset;
use npc_robust::oracle::{attack_upper_bound, exact_brute_force, grid_min_rho, sphere_brute, SearchBox};
use npc_robust::sphere::{dual_objective, sphere_dual_bound, validate_embedding, SphereTolerance};
use npc_robust::support::{dispatch_support, Exactness};
use npc_robust::train::{self, margin, margin_gradient, TrainConfig};
use npc_robust::{Domain, Error, Metric, Norm, PrototypeModel, SphereBlock, SphereEmbedding, ThreatSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn random_vec(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(lo..hi)).collect()
}

/// A query strictly on the own side of the pairwise boundary.
fn pairwise_instance(rng: &mut ChaCha8Rng, d: usize, p: Norm, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    loop {
        let z = random_vec(rng, d, lo, hi);
        let own = random_vec(rng, d, lo, hi);
        let other = random_vec(rng, d, lo, hi);
        if p.dist(&z, &own) < p.dist(&z, &other) - 1e-3 {
            return (z, own, other);
        }
    }
}

fn criterion_1() -> Outcome {
    const CELLS: [(Norm, Norm); 7] = [
        (Norm::L2, Norm::L1),
        (Norm::L2, Norm::L2),
        (Norm::L2, Norm::Linf),
        (Norm::Linf, Norm::Linf),
        (Norm::Linf, Norm::L1),
        (Norm::Linf, Norm::L2),
        (Norm::L1, Norm::Linf),
    ];
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = (0.0f64, String::new());
    let mut failures = 0;
    for d in [2usize, 3] {
        let resolution = if d == 2 { 64 } else { 24 };
        for (p, q) in CELLS {
            for _ in 0..500 {
                let (z, own, other) = pairwise_instance(&mut rng, d, p, -1.0, 1.0);
                let pb = PairwiseProblem::new(&z, &own, &other, p, q, Domain::Unbounded);
                let solved = rho(&pb).expect("supported cell").value;
                let grid = grid_min_rho(&pb, resolution, &SearchBox::around(&pb)).unwrap();
                let err = (solved - grid).abs();
                if err > worst.0 {
                    worst = (err, format!("p={p} q={q} d={d} z={z:?} own={own:?} other={other:?} rho={solved} grid={grid}"));
                }
                if err > 1e-3 {
                    failures += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures == 0 && elapsed < Duration::from_secs(120);
    Outcome {
        pass,
        detail: format!(
            "7 solvers x 500 instances x d in {{2,3}}: {failures} beyond 1e-3, max |rho - grid| = {:.2e}, {:.1}s{}",
            worst.0,
            elapsed.as_secs_f64(),
            if failures > 0 { format!(" (worst: {})", worst.1) } else { String::new() }
        ),
    }
}

const NORMS: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

fn tol(v: f64) -> f64 {
    1e-9 * (1.0 + v.abs())
}

/// An ℓ2 classifier with 2..=6 prototypes over 2 or 3 classes in [0,1]^d.
fn random_l2_model(rng: &mut ChaCha8Rng, d: usize) -> PrototypeModel {
    let classes = rng.gen_range(2..=3);
    let count = rng.gen_range(classes.max(2)..=6);
    let mut labels: Vec<usize> = (0..count).map(|i| if i < classes { i } else { rng.gen_range(0..classes) }).collect();
    labels.sort_unstable();
    let rows = (0..count).map(|_| random_vec(rng, d, 0.0, 1.0)).collect();
    PrototypeModel::new(d, classes, rows, labels, Metric::L2, Domain::Unbounded).unwrap()
}

fn certify_with(model: &PrototypeModel, z: &[f64], y: usize, q: Norm, domain: Domain, mode: CertifyMode) -> npc_robust::Result<Certificate> {
    certify(model, z, y, &ThreatSpec::new(q, domain), mode, &CertifyOptions::default())
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut violations, mut mismatches, mut unresolved, mut no_attack) = (0, 0, 0, 0);
    let mut worst_rel = 0.0f64;
    let mut first = String::new();
    for q in NORMS {
        for n in 0..200 {
            let d = rng.gen_range(2..=4);
            let domain = if n % 2 == 0 { Domain::Unbounded } else { Domain::UnitBox };
            let model = random_l2_model(&mut rng, d);
            let z = random_vec(&mut rng, d, 0.0, 1.0);
            let y = model.classify(&z).unwrap().class;
            let cert = certify_with(&model, &z, y, q, domain, CertifyMode::Exact).unwrap();
            let Some(exact) = cert.exact else {
                unresolved += 1;
                continue;
            };
            let BoundBreakdown {
                trivial,
                minmax_unbounded,
                minmax_box,
                ..
            } = cert.bounds;
            let minmax = minmax_unbounded.unwrap().max(minmax_box.unwrap_or(0.0));
            let attack = attack_upper_bound(&model, &z, y, &ThreatSpec::new(q, domain), 20_000).map(|a| a.radius);
            let chain_ok = trivial <= minmax + tol(minmax)
                && minmax <= exact + tol(exact)
                && cert.lower_bound <= exact + tol(exact)
                && attack.is_none_or(|a| exact <= a + tol(a));
            if attack.is_none() {
                no_attack += 1;
            }
            let brute = exact_brute_force(&model, &z, y, q, domain).unwrap();
            let rel = (exact - brute).abs() / brute.max(1e-9);
            worst_rel = worst_rel.max(rel);
            if !chain_ok {
                violations += 1;
            }
            if rel > 1e-3 {
                mismatches += 1;
            }
            if (!chain_ok || rel > 1e-3) && first.is_empty() {
                first = format!(
                    " (first: q={q} {domain} z={z:?} trivial={trivial} minmax={minmax} exact={exact} attack={attack:?} brute={brute})"
                );
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: violations == 0 && mismatches == 0 && unresolved == 0 && elapsed < Duration::from_secs(300),
        detail: format!(
            "600 instances: {violations} chain violations, {mismatches} beyond 1e-3 relative of brute force (max {worst_rel:.1e}), {unresolved} unresolved, {no_attack} without attack point, {:.1}s{first}",
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_3() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for d in [2usize, 3, 5] {
        let mut own = vec![0.0; d];
        let mut other = vec![0.0; d];
        own[0] = 1.0;
        other[0] = 2.0;
        let model = PrototypeModel::new(d, 2, vec![own, other], vec![0, 1], Metric::L2, Domain::Unbounded).unwrap();
        let z = vec![0.0; d];
        let cert = certify_with(&model, &z, 0, Norm::L2, Domain::Unbounded, CertifyMode::LowerBound).unwrap();
        let minmax = cert.bounds.minmax_unbounded.unwrap();
        let ok = (minmax - 1.5).abs() < 1e-12 && (cert.bounds.trivial - 0.5).abs() < 1e-12;
        pass &= ok;
        lines.push(format!("d={d}: min-max {minmax}, trivial {}", cert.bounds.trivial));
    }
    Outcome {
        pass,
        detail: lines.join("; "),
    }
}

/// min over j of the convex subproblem, without the tightness shortcut.
fn unconditioned_exact(model: &PrototypeModel, z: &[f64], y: usize, q: Norm) -> f64 {
    model
        .other_members(y)
        .map(|j| {
            let sub = ConvexSubproblem::for_prototype(model, z, y, j, q, false);
            let out = if q == Norm::L2 { solve_r_l2(&sub, None) } else { solve_r_l2_lp(&sub) }.unwrap();
            out.primal_value
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_4() -> Outcome {
    let model = PrototypeModel::new(
        2,
        2,
        vec![vec![0.0, 1.0], vec![0.0, -1.0], vec![2.0, 0.0]],
        vec![0, 0, 1],
        Metric::L2,
        Domain::Unbounded,
    )
    .unwrap();
    let z = [0.0, 0.0];
    let mm = minmax_lower_bound(&model, &z, 0, Norm::L2, Domain::Unbounded).unwrap();
    let cert = certify_with(&model, &z, 0, Norm::L2, Domain::Unbounded, CertifyMode::Exact).unwrap();
    let exact = cert.exact.unwrap_or(f64::NAN);
    let fixture_ok = !mm.tight && (mm.value - 0.6708203932499369).abs() < 1e-9 && (exact - 0.75).abs() < 1e-9;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut tight, mut disagree, mut worst) = (0, 0, 0.0f64);
    for n in 0..3000 {
        let q = NORMS[n % 3];
        let d = rng.gen_range(2..=4);
        let model = random_l2_model(&mut rng, d);
        let z = random_vec(&mut rng, d, 0.0, 1.0);
        let y = model.classify(&z).unwrap().class;
        let mm = minmax_lower_bound(&model, &z, y, q, Domain::Unbounded).unwrap();
        if !mm.tight || mm.value == 0.0 {
            continue;
        }
        tight += 1;
        let full = unconditioned_exact(&model, &z, y, q);
        let err = (full - mm.value).abs();
        worst = worst.max(err);
        if err > 1e-6 {
            disagree += 1;
        }
    }
    Outcome {
        pass: fixture_ok && tight > 0 && disagree == 0,
        detail: format!(
            "two-blocker tight={} lower={:.6} exact={exact:.6}; {tight} tight random instances, {disagree} disagree beyond 1e-6 (max {worst:.1e})",
            mm.tight, mm.value
        ),
    }
}

fn criterion_5() -> Outcome {
    let (z, own, other) = ([0.8, 1.0], [0.5, 0.5], [1.5, 1.5]);
    let free = rho(&PairwiseProblem::new(&z, &own, &other, Norm::L2, Norm::L2, Domain::Unbounded)).unwrap().value;
    let boxed = rho(&PairwiseProblem::new(&z, &own, &other, Norm::L2, Norm::L2, Domain::UnitBox)).unwrap().value;
    let fixture_ok = (free - 0.02f64.sqrt()).abs() < 1e-12 && (boxed - 0.2).abs() < 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut decreases, mut strict) = (0, 0);
    for n in 0..1000 {
        let d = rng.gen_range(2..=6);
        let (model, q) = if n % 4 == 3 {
            let m = random_l2_model(&mut rng, d);
            let rows = (0..m.num_prototypes()).map(|i| m.prototype(i).to_vec()).collect();
            (
                PrototypeModel::new(d, m.num_classes(), rows, m.labels().to_vec(), Metric::Linf, Domain::Unbounded).unwrap(),
                Norm::Linf,
            )
        } else {
            (random_l2_model(&mut rng, d), NORMS[n % 3])
        };
        let z = random_vec(&mut rng, d, 0.0, 1.0);
        let y = model.classify(&z).unwrap().class;
        let a = certify_with(&model, &z, y, q, Domain::Unbounded, CertifyMode::LowerBound).unwrap().lower_bound;
        let b = certify_with(&model, &z, y, q, Domain::UnitBox, CertifyMode::LowerBound).unwrap().lower_bound;
        if b < a - tol(a) {
            decreases += 1;
        }
        if b > a + tol(a) {
            strict += 1;
        }
    }
    Outcome {
        pass: fixture_ok && decreases == 0,
        detail: format!(
            "fixture box {boxed} vs unbounded {free:.4}; 1000 box-interior points: {decreases} decreases, {strict} strict improvements"
        ),
    }
}

fn criterion_6() -> Outcome {
    let circle = SphereEmbedding::new(vec![SphereBlock {
        radius: 1.0,
        channels: 2,
        positions: 1,
    }])
    .unwrap();
    let tolerance = SphereTolerance::default();
    let on_arc = |t: f64| vec![t.cos(), t.sin()];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut above, mut negative, mut checked) = (0, 0, 0);
    let mut worst = f64::NEG_INFINITY;
    while checked < 500 {
        let z = on_arc(rng.gen_range(0.0..std::f64::consts::FRAC_PI_2));
        let own = random_vec(&mut rng, 2, -0.2, 1.2);
        let other = random_vec(&mut rng, 2, -0.2, 1.2);
        if Norm::L2.dist(&z, &own) >= Norm::L2.dist(&z, &other) - 1e-6 {
            continue;
        }
        checked += 1;
        let query = validate_embedding(&z, &circle, &tolerance).unwrap();
        let bound = sphere_dual_bound(&query, &own, &other).unwrap().bound;
        let brute = sphere_brute(&z, &own, &other, &circle, 20_000).unwrap();
        worst = worst.max(bound - brute);
        if bound > brute + 1e-6 {
            above += 1;
        }
        if bound < 0.0 {
            negative += 1;
        }
    }
    let fixture = |z: [f64; 2], own: [f64; 2], other: [f64; 2]| {
        sphere_dual_bound(&validate_embedding(&z, &circle, &tolerance).unwrap(), &own, &other).unwrap().bound
    };
    let quarter = fixture([0.0, 1.0], [0.0, 1.0], [1.0, 0.0]);
    let antipodal = fixture([1.0, 0.0], [1.0, 0.0], [-1.0, 0.0]);
    let fixtures_ok = (quarter - (2.0 - 2f64.sqrt()).sqrt()).abs() < 1e-6 && (antipodal - 2f64.sqrt()).abs() < 1e-6;

    let mut concave_violations = 0;
    for _ in 0..10_000 {
        let z = on_arc(rng.gen_range(0.0..std::f64::consts::FRAC_PI_2));
        let own = random_vec(&mut rng, 2, -1.0, 1.0);
        let other = random_vec(&mut rng, 2, -1.0, 1.0);
        let a = rng.gen_range(0.0..10.0);
        let b = rng.gen_range(0.0..10.0);
        let f = |l: f64| dual_objective(&z, &own, &other, &circle, l);
        let mid = f(0.5 * (a + b));
        let chord = 0.5 * (f(a) + f(b));
        if mid < chord - 1e-12 * (1.0 + chord.abs()) {
            concave_violations += 1;
        }
    }
    Outcome {
        pass: above == 0 && negative == 0 && fixtures_ok && concave_violations == 0,
        detail: format!(
            "500 arcs: {above} above brute force (max bound - brute {worst:.1e}), {negative} negative; fixtures {quarter:.6}/{antipodal:.6}; {concave_violations} of 10000 midpoint checks fail"
        ),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let cells = [(Norm::L2, Norm::L2), (Norm::L2, Norm::L1), (Norm::L2, Norm::Linf), (Norm::Linf, Norm::Linf)];
    let (mut accepted, mut skipped, mut worst) = (0, 0, 0.0f64);
    let h = 1e-6;
    while accepted < 1000 {
        let (p, q) = cells[(accepted + skipped) % cells.len()];
        let metric = if p == Norm::L2 { Metric::L2 } else { Metric::Linf };
        let d = 5;
        let rows: Vec<Vec<f64>> = (0..4).map(|_| (0..d).map(|_| normal.sample(&mut rng)).collect()).collect();
        let model = PrototypeModel::new(d, 2, rows, vec![0, 0, 1, 1], metric, Domain::Unbounded).unwrap();
        let z: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
        let y = rng.gen_range(0..2);
        let cap = 1e9;
        let g = margin_gradient(&model, &z, y, q, cap).unwrap();
        let analytic = g.dense(4, d);
        let f = |w: &[f64]| margin(&model.with_prototypes(w.to_vec()).unwrap(), &z, y, q, cap).unwrap();
        let base = model.prototypes_flat().to_vec();
        let mut fd = vec![0.0; base.len()];
        let mut smooth = true;
        for k in 0..base.len() {
            let diff = |step: f64| {
                let (mut a, mut b) = (base.clone(), base.clone());
                a[k] += step;
                b[k] -= step;
                let (fa, fb) = (f(&a), f(&b));
                ((fa.signed_margin - fb.signed_margin) / (2.0 * step), fa.pair == g.margin.pair && fb.pair == g.margin.pair)
            };
            let (coarse, same_a) = diff(h);
            let (fine, same_b) = diff(h / 8.0);
            // A kink inside the stencil shows up as step dependence.
            smooth &= same_a && same_b && (coarse - fine).abs() <= 1e-6 * (1.0 + coarse.abs());
            fd[k] = coarse;
        }
        if !smooth {
            skipped += 1;
            continue;
        }
        accepted += 1;
        let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
        let err = analytic.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        worst = worst.max(err);
    }
    Outcome {
        pass: worst <= 1e-4,
        detail: format!("1000 instances ({skipped} near ties skipped): max relative error {worst:.1e}"),
    }
}

/// Two classes of three Gaussian blobs each, separated along x₁.
fn toy_blobs(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let centers = [[0.2, 0.2], [0.25, 0.5], [0.2, 0.8], [0.8, 0.2], [0.75, 0.5], [0.8, 0.8]];
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let c = centers[i % centers.len()];
        points.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
        labels.push(usize::from(i % centers.len() >= 3));
    }
    Dataset::new(2, points, labels).unwrap()
}

fn mean_exact(model: &PrototypeModel, data: &Dataset, q: Norm) -> (f64, usize, usize) {
    let mut sum = 0.0;
    let (mut correct, mut positive) = (0, 0);
    for (z, &y) in data.points().iter().zip(data.labels()) {
        let cert = certify_with(model, z, y, q, Domain::Unbounded, CertifyMode::Exact).unwrap();
        let r = cert.certified_radius();
        sum += r;
        if cert.correct {
            correct += 1;
            if cert.exact.is_some_and(|e| e > 0.0) {
                positive += 1;
            }
        }
    }
    (sum / data.len() as f64, correct, positive)
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let data = toy_blobs(480, 8);
    let config = TrainConfig {
        prototypes_per_class: 2,
        cap: 0.5,
        learning_rate: 0.01,
        epochs: 100,
        batch_size: 60,
        seed: 8,
        ..TrainConfig::default()
    };
    let init = train::init_prototypes(&data, &config).unwrap();
    let (model, trace) = train::train(&data, &config).unwrap();
    let accuracy = trace.last().unwrap().clean_accuracy;
    let (init_radius, _, _) = mean_exact(&init, &data, Norm::L2);
    let (radius, correct, _) = mean_exact(&model, &data, Norm::L2);
    let (_, _, pos1) = mean_exact(&model, &data, Norm::L1);
    let (_, _, posinf) = mean_exact(&model, &data, Norm::Linf);
    let share = |k: usize| k as f64 / correct.max(1) as f64;
    let elapsed = start.elapsed();
    Outcome {
        pass: accuracy == 1.0
            && radius > init_radius
            && share(pos1) >= 0.95
            && share(posinf) >= 0.95
            && elapsed < Duration::from_secs(60),
        detail: format!(
            "clean accuracy {accuracy}, mean exact l2 radius {radius:.4} vs k-means init {init_radius:.4}; positive l1/linf radii on {:.1}%/{:.1}% of correct points; {:.1}s",
            100.0 * share(pos1),
            100.0 * share(posinf),
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_10() -> Outcome {
    let mut problems = Vec::new();
    let mut refusals = 0;
    for p in NORMS {
        let metric = match p {
            Norm::L1 => Metric::L1,
            Norm::L2 => Metric::L2,
            Norm::Linf => Metric::Linf,
        };
        let model = PrototypeModel::new(2, 2, vec![vec![0.2, 0.3], vec![0.7, 0.6]], vec![0, 1], metric, Domain::Unbounded).unwrap();
        let z = [0.25, 0.3];
        for q in NORMS {
            for domain in [Domain::Unbounded, Domain::UnitBox] {
                for (exactness, mode) in [(Exactness::Pairwise, CertifyMode::LowerBound), (Exactness::Exact, CertifyMode::Exact)] {
                    let entry = dispatch_support(p, q, exactness, domain);
                    let result = certify_with(&model, &z, 0, q, domain, mode);
                    let pair = rho(&PairwiseProblem::new(&z, model.prototype(0), model.prototype(1), p, q, domain));
                    let table = match exactness {
                        Exactness::Pairwise => "Table 1: NP-hard",
                        Exactness::Exact => "Table 2: NP-hard",
                    };
                    let label = format!("p={p} q={q} {domain} {exactness:?}");
                    if entry.is_supported() {
                        if let Err(e) = &result {
                            problems.push(format!("{label} refused: {e}"));
                        }
                        continue;
                    }
                    refusals += 1;
                    match &result {
                        Err(Error::UnsupportedCombination { cell }) => {
                            // Pairwise NP-hard cells are reported from the pairwise table even in exact mode.
                            if !cell.contains("NP-hard") || !(cell.contains(table) || cell.contains("Table 1: NP-hard")) {
                                problems.push(format!("{label}: unexpected cell '{cell}'"));
                            }
                            let fallback = cell.contains("--mode lower");
                            let polynomial_rho = p == Norm::Linf || (p == Norm::L1 && q == Norm::Linf);
                            if exactness == Exactness::Exact && fallback != polynomial_rho {
                                problems.push(format!("{label}: fallback offered={fallback}, polynomial rho={polynomial_rho}"));
                            }
                            if fallback
                                && certify_with(&model, &z, 0, q, domain, CertifyMode::LowerBound).is_err()
                            {
                                problems.push(format!("{label}: advertised lower bound fails"));
                            }
                        }
                        other => problems.push(format!("{label}: expected refusal, got {other:?}")),
                    }
                    if exactness == Exactness::Pairwise {
                        match &pair {
                            Err(Error::UnsupportedCombination { cell }) if cell.contains("Table 1: NP-hard") => {}
                            other => problems.push(format!("{label}: pairwise solver gave {other:?}")),
                        }
                    }
                }
            }
        }
    }
    Outcome {
        pass: problems.is_empty() && refusals > 0,
        detail: if problems.is_empty() {
            format!("{refusals} NP-hard cell requests refused with their table cell; fallbacks exactly for p=linf and (p=l1, q=linf)")
        } else {
            problems.join("; ")
        },
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "closed-form solvers match the grid oracle", criterion_1),
        (2, "exactness sandwich against brute force and attack", criterion_2),
        (3, "strict gap between min-max and trivial bound", criterion_3),
        (4, "tightness shortcut", criterion_4),
        (5, "box constraints never lower the bound", criterion_5),
        (6, "sphere dual bound", criterion_6),
        (7, "margin gradient matches finite differences", criterion_7),
        (8, "end-to-end toy training", criterion_8),
        (10, "NP-hard refusals", criterion_10),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all = true;
    for (id, name, run) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let out = run();
        all &= out.pass;
        println!(
            "criterion {id:>2} [{}] {name}: {}",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    if !all {
        std::process::exit(1);
    }
}
