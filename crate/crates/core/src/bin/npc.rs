//! `npc`: train, certify and evaluate nearest prototype classifiers.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal solver failure.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use npc_robust::exact::{certify_dataset, BoundReport, CertifyMode, CertifyOptions, PointRecord};
use npc_robust::io::{self as files, Dataset};
use npc_robust::support::{self, Exactness};
use npc_robust::train::{self, Init, Optimizer, TrainConfig};
use npc_robust::{Domain, Error, PrototypeModel, ThreatNorm, ThreatSpec};

#[derive(Parser)]
#[command(name = "npc", version, about = "Robustness certification for nearest prototype classifiers")]
struct Cli {
    /// Worker threads for certification and training.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train prototypes by maximizing the capped certified margin.
    Train(TrainArgs),
    /// Certify every point of a dataset and write one CSV row per point.
    Certify(CertifyArgs),
    /// Certified robust accuracy over a sweep of radii.
    Curve(CurveArgs),
    /// Convert CSV, IDX or embedding files into a canonical dataset.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// JSON training configuration; explicit flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    metric: Option<String>,
    /// Threat norm of the margin (defaults to the metric).
    #[arg(long)]
    threat: Option<String>,
    #[arg(long)]
    ppc: Option<usize>,
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    lr_decay: Option<f64>,
    /// kmeans or random
    #[arg(long)]
    init: Option<String>,
    /// adam or sgd
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Loss trace CSV (defaults to the model path with extension trace.csv).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ThreatArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// l1, l2, linf or embedded_l2
    #[arg(long, default_value = "l2")]
    threat: String,
    /// unbounded, unit-box or sphere-product (defaults to the model's domain)
    #[arg(long)]
    domain: Option<String>,
    /// lower or exact
    #[arg(long, default_value = "lower")]
    mode: String,
    /// Stop refining once the bound exceeds this radius.
    #[arg(long)]
    radius_cap: Option<f64>,
    #[arg(long)]
    no_prune: bool,
    #[arg(long)]
    no_early_termination: bool,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    threat: ThreatArgs,
    /// Radii at which certified robust accuracy is reported.
    #[arg(long, value_delimiter = ',')]
    radius: Vec<f64>,
    /// Ray-attack budget (classifier evaluations) for upper bounds.
    #[arg(long)]
    attack_budget: Option<usize>,
    /// Output CSV; stdout when absent, in which case the summary goes to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    threat: ThreatArgs,
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    #[arg(long, default_value_t = 1.0)]
    to: f64,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    /// Bounds to sweep: plain, box, dual.
    #[arg(long, value_delimiter = ',')]
    bound: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, conflicts_with_all = ["idx_images", "embeddings"])]
    csv: Option<PathBuf>,
    #[arg(long, requires = "idx_labels")]
    idx_images: Option<PathBuf>,
    #[arg(long)]
    idx_labels: Option<PathBuf>,
    /// EMB1 file or embedding CSV with its blocks.json sidecar.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Labels must lie in [0, num_classes).
    #[arg(long)]
    num_classes: Option<usize>,
    /// CSV output, or EMB1 when ingesting embeddings.
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidConfig(_) | Error::UnsupportedCombination { .. } | Error::PreconditionViolated(_) => {
                Failure::Usage(msg)
            }
            Error::IterationLimit { .. } | Error::DegenerateBoundary | Error::Infeasible => Failure::Internal(msg),
            _ => Failure::Data(msg),
        }
    }
}

impl Failure {
    fn io(path: &Path, e: io::Error) -> Self {
        Failure::Data(format!("{}: {e}", path.display()))
    }
}

type Outcome = Result<(), Failure>;

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, Failure> {
    s.parse::<T>().map_err(|e| Failure::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Ingest(a) => cmd_ingest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (1, m),
                Failure::Data(m) => (2, m),
                Failure::Internal(m) => (3, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn train_config(a: &TrainArgs, n: usize) -> Result<TrainConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            serde_json::from_str::<TrainConfig>(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        None => TrainConfig {
            batch_size: TrainConfig::default().batch_size.min(n.max(1)),
            ..TrainConfig::default()
        },
    };
    if let Some(m) = &a.metric {
        cfg.metric = parse(m)?;
        if a.threat.is_none() && a.config.is_none() {
            cfg.threat = cfg.metric;
        }
    }
    if let Some(q) = &a.threat {
        cfg.threat = parse(q)?;
    }
    if let Some(v) = a.ppc {
        cfg.prototypes_per_class = v;
    }
    if let Some(v) = a.cap {
        cfg.cap = v;
    }
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.lr_decay {
        cfg.lr_decay = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = &a.init {
        cfg.init = match v.as_str() {
            "kmeans" | "k-means" | "k_means" => Init::KMeans,
            "random" | "random_samples" | "random-samples" => Init::RandomSamples,
            other => return Err(Failure::Usage(format!("unknown init '{other}' (expected kmeans or random)"))),
        };
    }
    if let Some(v) = &a.optimizer {
        cfg.optimizer = match v.as_str() {
            "adam" => Optimizer::Adam,
            "sgd" => Optimizer::Sgd,
            other => return Err(Failure::Usage(format!("unknown optimizer '{other}' (expected adam or sgd)"))),
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(a: TrainArgs) -> Outcome {
    let data = files::read_csv(&a.data)?;
    let cfg = train_config(&a, data.len())?;
    let (model, trace) = train::train(&data, &cfg)?;
    files::save_model(&model, &a.out)?;
    let trace_path = a.trace.clone().unwrap_or_else(|| a.out.with_extension("trace.csv"));
    let file = fs::File::create(&trace_path).map_err(|e| Failure::io(&trace_path, e))?;
    train::write_trace(&trace, BufWriter::new(file)).map_err(|e| Failure::io(&trace_path, e))?;
    let last = trace.last().expect("trace holds the initialization");
    println!("clean_accuracy={}", last.clean_accuracy);
    println!("objective={}", last.objective);
    Ok(())
}

/// Loads the evaluation points; embedded models read embedding files.
fn load_points(path: &Path, model: &PrototypeModel) -> Result<Dataset, Failure> {
    let data = match model.metric().embedding() {
        Some(expected) => {
            let (data, embedding) = files::read_embeddings(path)?;
            if &embedding != expected {
                return Err(Failure::Data(format!(
                    "{}: embedding blocks differ from the model's",
                    path.display()
                )));
            }
            data
        }
        None => files::read_csv(path)?,
    };
    if !data.is_empty() && data.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: data.dim(),
        }
        .into());
    }
    if let Some(&y) = data.labels().iter().find(|&&y| y >= model.num_classes()) {
        return Err(Failure::Data(format!(
            "label {y} outside the model's {} classes",
            model.num_classes()
        )));
    }
    Ok(data)
}

struct Setup {
    model: PrototypeModel,
    data: Dataset,
    threat: ThreatSpec,
    mode: CertifyMode,
    options: CertifyOptions,
}

fn setup(a: &ThreatArgs) -> Result<Setup, Failure> {
    let model = files::load_model(&a.model)?;
    let q: ThreatNorm = parse(&a.threat)?;
    let domain = match &a.domain {
        Some(d) => parse(d)?,
        None => model.domain(),
    };
    let mode: CertifyMode = parse(&a.mode)?;
    let embedded = q == ThreatNorm::EmbeddedL2 || domain == Domain::SphereProduct;
    if embedded && model.metric().embedding().is_none() {
        return Err(Failure::Usage("the embedded_l2 threat needs an embedded_l2 model".into()));
    }
    if !embedded {
        let p = model.metric().norm();
        let exactness = match mode {
            CertifyMode::Exact => Exactness::Exact,
            CertifyMode::LowerBound => Exactness::Pairwise,
        };
        support::require(p, q.norm(), exactness, domain)?;
    }
    let mut threat = ThreatSpec::new(q, domain);
    if let Some(cap) = a.radius_cap {
        threat = threat.with_cap(cap);
    }
    let options = CertifyOptions {
        prune: !a.no_prune,
        early_termination: !a.no_early_termination,
        attack_budget: None,
    };
    let data = load_points(&a.data, &model)?;
    Ok(Setup {
        model,
        data,
        threat,
        mode,
        options,
    })
}

fn run(s: &Setup, threat: &ThreatSpec, options: &CertifyOptions, radii: &[f64]) -> Result<BoundReport, Failure> {
    Ok(certify_dataset(
        &s.model,
        s.data.points(),
        s.data.labels(),
        threat,
        s.mode,
        options,
        radii,
    )?)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(|e| Failure::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:?}"))
}

fn write_row(out: &mut dyn Write, r: &PointRecord) -> io::Result<()> {
    match &r.outcome {
        Ok(c) => writeln!(
            out,
            "{},{},{},{:?},{},{},{},{},{:?}",
            r.index,
            r.label,
            c.label_predicted,
            c.lower_bound,
            opt(c.exact),
            opt(c.upper_bound),
            c.diagnostics.shortcut_hit,
            c.diagnostics.subproblems_solved,
            c.diagnostics.wall_time
        ),
        Err(msg) => writeln!(out, "{},{},,,,,,,,\"{}\"", r.index, r.label, msg.replace('"', "'")),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summary(report: &BoundReport) -> Vec<String> {
    let mut lines: Vec<String> = report
        .radii
        .iter()
        .zip(&report.robust_accuracy)
        .map(|(r, a)| format!("CRA@{r}={a:.4}"))
        .collect();
    let certs: Vec<_> = report.records.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let fmt = |m: Option<f64>| m.map_or("na".to_string(), |v| format!("{v:.6}"));
    lines.push(format!("clean_accuracy={:.4}", report.clean_accuracy));
    lines.push(format!(
        "mean_trivial={} mean_minmax_unbounded={} mean_minmax_box={} mean_exact={} mean_lower={}",
        fmt(mean(certs.iter().map(|c| c.bounds.trivial))),
        fmt(mean(certs.iter().filter_map(|c| c.bounds.minmax_unbounded))),
        fmt(mean(certs.iter().filter_map(|c| c.bounds.minmax_box))),
        fmt(mean(certs.iter().filter_map(|c| c.exact))),
        fmt(mean(certs.iter().map(|c| c.lower_bound))),
    ));
    lines.push(format!("failures={}", report.failures));
    lines
}

fn cmd_certify(a: CertifyArgs) -> Outcome {
    let s = setup(&a.threat)?;
    let options = CertifyOptions {
        attack_budget: a.attack_budget,
        ..s.options
    };
    let report = run(&s, &s.threat, &options, &a.radius)?;
    let write = |out: &mut dyn Write| -> io::Result<()> {
        writeln!(out, "index,label,predicted,lower_bound,exact,upper_bound,shortcut,subproblems,time_s,error")?;
        for r in &report.records {
            write_row(out, r)?;
        }
        out.flush()
    };
    let mut out = output(&a.out)?;
    write(&mut *out).map_err(|e| Failure::Data(format!("writing certificates: {e}")))?;
    drop(out);
    let lines = summary(&report);
    if a.out.is_some() {
        lines.iter().for_each(|l| println!("{l}"));
    } else {
        lines.iter().for_each(|l| eprintln!("{l}"));
    }
    if !report.records.is_empty() && report.failures == report.records.len() {
        return Err(Failure::Internal("every point failed to certify".into()));
    }
    Ok(())
}

fn radii(from: f64, to: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if step.is_nan() || step <= 0.0 || to < from {
        return Err(Failure::Usage("need --step > 0 and --to ≥ --from".into()));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| from + k as f64 * step).collect())
}

fn cmd_curve(a: CurveArgs) -> Outcome {
    let s = setup(&a.threat)?;
    let rs = radii(a.from, a.to, a.step)?;
    let embedded = s.model.metric().embedding().is_some();
    let bounds = if a.bound.is_empty() {
        match (embedded, s.threat.domain) {
            (true, _) => vec!["plain".to_string(), "dual".to_string()],
            (false, Domain::UnitBox) => vec!["plain".to_string(), "box".to_string()],
            _ => vec!["plain".to_string()],
        }
    } else {
        a.bound.clone()
    };
    let mut columns = Vec::new();
    for b in &bounds {
        let (name, threat) = match b.as_str() {
            "plain" => {
                let q = if s.threat.q == ThreatNorm::EmbeddedL2 { ThreatNorm::L2 } else { s.threat.q };
                ("cra", ThreatSpec::new(q, Domain::Unbounded))
            }
            "box" if !embedded => ("cra_box", ThreatSpec::new(s.threat.q, Domain::UnitBox)),
            "dual" if embedded => ("cra_sphere", ThreatSpec::new(ThreatNorm::EmbeddedL2, Domain::SphereProduct)),
            other => {
                return Err(Failure::Usage(format!("bound '{other}' does not apply to this model")));
            }
        };
        let threat = match s.threat.radius_cap {
            Some(c) => threat.with_cap(c),
            None => threat,
        };
        columns.push((name, run(&s, &threat, &s.options, &rs)?));
    }
    let mut out = output(&a.out)?;
    let write = |out: &mut dyn Write| -> io::Result<()> {
        let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
        writeln!(out, "radius,{}", names.join(","))?;
        if s.data.is_empty() {
            return out.flush();
        }
        for (k, r) in rs.iter().enumerate() {
            write!(out, "{r:?}")?;
            for (_, rep) in &columns {
                write!(out, ",{:?}", rep.robust_accuracy[k])?;
            }
            writeln!(out)?;
        }
        out.flush()
    };
    write(&mut *out).map_err(|e| Failure::Data(format!("writing curve: {e}")))?;
    Ok(())
}

fn cmd_ingest(a: IngestArgs) -> Outcome {
    let (data, embedding) = match (&a.csv, &a.idx_images, &a.idx_labels, &a.embeddings) {
        (Some(csv), None, None, None) => (files::read_csv(csv)?, None),
        (None, Some(images), Some(labels), None) => (files::read_idx(images, labels, a.num_classes)?, None),
        (None, None, None, Some(path)) => {
            let (d, e) = files::read_embeddings(path)?;
            (d, Some(e))
        }
        _ => {
            return Err(Failure::Usage(
                "give exactly one of --csv, --idx-images with --idx-labels, or --embeddings".into(),
            ))
        }
    };
    if let Some(k) = a.num_classes {
        if let Some((i, y)) = data.labels().iter().enumerate().find(|(_, &y)| y >= k) {
            return Err(Failure::Data(format!("row {i} has label {y} outside [0, {k})")));
        }
    }
    match &embedding {
        Some(e) => files::write_embeddings(&data, e, &a.out)?,
        None => files::write_csv(&data, &a.out)?,
    }
    println!("points={} dim={}", data.len(), data.dim());
    for (y, n) in data.class_counts(a.num_classes.unwrap_or(0)).iter().enumerate() {
        println!("class {y}: {n}");
    }
    Ok(())
}
