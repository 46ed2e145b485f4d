use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use golu_core::kernels::bench_suite;
use golu_core::landscape::{loss_surface, sample_directions, surface_stats};
use golu_core::net::{
    grad_check, intersect_intervals, load_checkpoint, mlp_layers, rings, two_moons, weight_stats, Dataset,
    central_interval, curve_csv, train,
};
use golu_core::ranking::{cd_report, ScoreMatrix};
use golu_core::variance::{
    delta_moments, mc_moments, moment_csv_row, output_density, quadrature_moments, squeeze_experiment,
    synthetic_image, MOMENT_CSV_HEADER,
};
use golu_core::{
    density_profile, sigmoid_gompertz_gap, ActivationKind, BenchReport, ExecPath, GateKind, LayerSpec, MicroNet,
    Rng, Tensor, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::{usage, Artifacts, Options, Resolved};

/// What a subcommand produced and whether its own validation passed.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub summary: String,
    pub passed: bool,
}

fn parse_kinds(names: &[String]) -> Result<Vec<ActivationKind>> {
    let mut kinds = Vec::new();
    for name in names {
        match name.to_ascii_lowercase().as_str() {
            "all" => kinds.extend(ActivationKind::ALL),
            "benchmarked" => kinds.extend(ActivationKind::BENCHMARKED),
            _ => kinds.push(name.parse()?),
        }
    }
    if kinds.is_empty() {
        return Err(usage("no activation selected"));
    }
    Ok(kinds)
}

fn file_stem(kind: ActivationKind) -> String {
    kind.to_string().to_ascii_lowercase()
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------- gradcheck

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GradcheckOpts {
    /// Activations, comma separated; `all` selects every kind.
    #[arg(long, value_delimiter = ',')]
    pub kind: Option<Vec<String>>,
    /// Architectures: mlp, conv-bn, conv-conv.
    #[arg(long, value_delimiter = ',')]
    pub arch: Option<Vec<String>>,
    /// Central-difference step.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Largest accepted relative error.
    #[arg(long)]
    pub threshold: Option<f64>,
}

impl Options for GradcheckOpts {
    fn fill_defaults(&mut self) {
        self.kind.get_or_insert_with(|| strings(&["all"]));
        self.arch.get_or_insert_with(|| strings(&["mlp", "conv-bn", "conv-conv"]));
        self.eps.get_or_insert(1e-5);
        self.threshold.get_or_insert(1e-5);
    }
}

const GRADCHECK_BATCH: usize = 6;

fn architecture(name: &str, kind: ActivationKind) -> Result<(Vec<LayerSpec>, Vec<usize>)> {
    let b = GRADCHECK_BATCH;
    Ok(match name {
        "mlp" => (
            vec![
                LayerSpec::dense(4, 6),
                LayerSpec::act(kind),
                LayerSpec::dense(6, 5),
                LayerSpec::act(kind),
                LayerSpec::dense(5, 3),
            ],
            vec![b, 4],
        ),
        "conv-bn" => (
            vec![
                LayerSpec::conv3x3(2, 3),
                LayerSpec::batchnorm(3),
                LayerSpec::act(kind),
                LayerSpec::dense(3 * 4 * 4, 3),
            ],
            vec![b, 2, 4, 4],
        ),
        "conv-conv" => (
            vec![LayerSpec::conv3x3(2, 3), LayerSpec::act(kind), LayerSpec::conv3x3(3, 1)],
            vec![b, 2, 3, 3],
        ),
        other => return Err(usage(format!("unknown architecture '{other}'"))),
    })
}

pub fn gradcheck(cfg: &Resolved<GradcheckOpts>) -> Result<Outcome> {
    cfg.require_f64()?;
    let o = &cfg.options;
    let kinds = parse_kinds(o.kind.as_deref().unwrap_or_default())?;
    let threshold = o.threshold.unwrap_or_default();
    let mut csv = String::from("kind,arch,max_rel_err,checked,excluded\n");
    let mut reports = Vec::new();
    let mut worst = 0.0f64;
    for kind in kinds {
        for arch in o.arch.as_deref().unwrap_or_default() {
            let (layers, shape) = architecture(arch, kind)?;
            let net = MicroNet::new(layers, cfg.seed)?;
            let mut rng = Rng::stream(cfg.seed, 3);
            let n = shape.iter().product();
            let x = Tensor::new(shape, (0..n).map(|_| rng.normal()).collect())?;
            let targets: Vec<usize> = (0..GRADCHECK_BATCH).map(|i| i % 3).collect();
            let r = grad_check(&net, &x, &targets, o.eps.unwrap_or_default(), cfg.seed)?;
            worst = worst.max(r.max_rel_err);
            let _ = writeln!(csv, "{kind},{arch},{},{},{}", r.max_rel_err, r.checked, r.excluded.len());
            reports.push(serde_json::json!({ "kind": kind.to_string(), "arch": arch, "report": r }));
        }
    }
    let passed = worst < threshold;
    let mut artifacts = Artifacts::default();
    artifacts.text("gradcheck.csv", csv);
    artifacts.json("gradcheck.json", &serde_json::json!({ "threshold": threshold, "max_rel_err": worst, "passed": passed, "checks": reports }))?;
    Ok(Outcome { artifacts, summary: format!("max_rel_err {worst:.3e} (threshold {threshold:e})"), passed })
}

// ---------------------------------------------------------------- variance

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct VarianceOpts {
    #[arg(long, value_delimiter = ',')]
    pub kind: Option<Vec<String>>,
    /// Input means.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Option<Vec<f64>>,
    /// Input standard deviations.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Estimators: delta, quadrature, montecarlo.
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<String>>,
    /// Quadrature nodes.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Monte-Carlo samples.
    #[arg(long)]
    pub samples: Option<usize>,
}

impl Options for VarianceOpts {
    fn fill_defaults(&mut self) {
        self.kind.get_or_insert_with(|| strings(&["all"]));
        self.mu.get_or_insert_with(|| vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        self.sigma.get_or_insert_with(|| vec![0.02, 0.05, 1.0]);
        self.method.get_or_insert_with(|| strings(&["delta", "quadrature", "montecarlo"]));
        self.nodes.get_or_insert(128);
        self.samples.get_or_insert(1_000_000);
    }
}

pub fn variance(cfg: &Resolved<VarianceOpts>) -> Result<Outcome> {
    cfg.require_f64()?;
    let o = &cfg.options;
    let kinds = parse_kinds(o.kind.as_deref().unwrap_or_default())?;
    let methods = o.method.clone().unwrap_or_default();
    for m in &methods {
        if !matches!(m.as_str(), "delta" | "quadrature" | "montecarlo" | "mc") {
            return Err(usage(format!("unknown method '{m}'")));
        }
    }
    let mut csv = format!("{MOMENT_CSV_HEADER}\n");
    let mut rows = 0;
    for &kind in &kinds {
        for &mu in o.mu.as_deref().unwrap_or_default() {
            for &sigma in o.sigma.as_deref().unwrap_or_default() {
                for m in &methods {
                    let est = match m.as_str() {
                        "delta" => delta_moments(kind, mu, sigma),
                        "quadrature" => quadrature_moments(kind, mu, sigma, o.nodes.unwrap_or_default()),
                        _ => mc_moments(kind, mu, sigma, o.samples.unwrap_or_default(), cfg.seed),
                    };
                    match est {
                        Ok(est) => {
                            csv.push_str(&moment_csv_row(kind, mu, sigma, &est));
                            csv.push('\n');
                            rows += 1;
                        }
                        // delta method is undefined on a kink; the sweep skips that cell
                        Err(golu_core::Error::UndefinedDerivative(_)) => {}
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
    }
    let mut artifacts = Artifacts::default();
    artifacts.text("moments.csv", csv);
    Ok(Outcome { artifacts, summary: format!("{rows} moment estimates"), passed: true })
}

// ---------------------------------------------------------------- squeeze

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SqueezeOpts {
    #[arg(long, value_delimiter = ',')]
    pub kind: Option<Vec<String>>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Convolution output channels.
    #[arg(long)]
    pub channels: Option<usize>,
    /// Number of synthetic images; image `i` uses seed `seed + i`.
    #[arg(long)]
    pub images: Option<usize>,
}

impl Options for SqueezeOpts {
    fn fill_defaults(&mut self) {
        self.kind.get_or_insert_with(|| strings(&["benchmarked"]));
        self.height.get_or_insert(32);
        self.width.get_or_insert(32);
        self.channels.get_or_insert(golu_core::variance::DEFAULT_SQUEEZE_CHANNELS);
        self.images.get_or_insert(1);
    }
}

pub fn squeeze(cfg: &Resolved<SqueezeOpts>) -> Result<Outcome> {
    cfg.require_f64()?;
    let o = &cfg.options;
    let kinds = parse_kinds(o.kind.as_deref().unwrap_or_default())?;
    let mut artifacts = Artifacts::default();
    let mut table = String::from("image,seed,activation,variance\n");
    let mut reports = Vec::new();
    for i in 0..o.images.unwrap_or_default() {
        let seed = cfg.seed.wrapping_add(i as u64);
        let img = synthetic_image(o.height.unwrap_or_default(), o.width.unwrap_or_default(), seed);
        let r = squeeze_experiment(&img, o.channels.unwrap_or_default(), seed, &kinds)?;
        let _ = writeln!(table, "{i},{seed},identity,{}", r.pre_activation_variance);
        for row in &r.rows {
            let _ = writeln!(table, "{i},{seed},{},{}", row.activation, row.variance);
        }
        if i == 0 {
            artifacts.text("squeeze.csv", r.to_csv());
        }
        reports.push(r);
    }
    artifacts.text("squeeze_all.csv", table);
    artifacts.json("squeeze.json", &reports)?;
    let degenerate = reports.iter().filter(|r| r.degenerate).count();
    Ok(Outcome {
        artifacts,
        summary: format!("{} images, {degenerate} degenerate", reports.len()),
        passed: true,
    })
}

// ---------------------------------------------------------------- density

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DensityOpts {
    /// Gates whose densities are profiled.
    #[arg(long, value_delimiter = ',')]
    pub gate: Option<Vec<String>>,
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    /// Grid points of each profile.
    #[arg(long)]
    pub points: Option<usize>,
    /// Activations whose outputs on standard normal inputs are histogrammed.
    #[arg(long, value_delimiter = ',')]
    pub kind: Option<Vec<String>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
}

impl Options for DensityOpts {
    fn fill_defaults(&mut self) {
        self.gate.get_or_insert_with(|| GateKind::ALL.iter().map(|g| g.name().to_ascii_lowercase()).collect());
        self.lo.get_or_insert(-40.0);
        self.hi.get_or_insert(40.0);
        self.points.get_or_insert(80_001);
        self.kind.get_or_insert_with(|| strings(&["all"]));
        self.samples.get_or_insert(100_000);
        self.bins.get_or_insert(100);
    }
}

#[derive(Serialize)]
struct ProfileSummary {
    gate: GateKind,
    integral: f64,
    mean: f64,
    variance: f64,
    skewness: f64,
    mode: f64,
}

pub fn density(cfg: &Resolved<DensityOpts>) -> Result<Outcome> {
    cfg.require_f64()?;
    let o = &cfg.options;
    let mut artifacts = Artifacts::default();
    let mut summaries = Vec::new();
    for name in o.gate.as_deref().unwrap_or_default() {
        let gate: GateKind = name.parse()?;
        let p = density_profile(gate, o.lo.unwrap_or_default(), o.hi.unwrap_or_default(), o.points.unwrap_or_default())?;
        artifacts.text(format!("gate_{}.csv", gate.name().to_ascii_lowercase()), p.to_csv());
        summaries.push(ProfileSummary {
            gate,
            integral: p.integral,
            mean: p.mean,
            variance: p.variance,
            skewness: p.skewness,
            mode: p.mode,
        });
    }
    artifacts.json("gates.json", &summaries)?;

    let kinds = parse_kinds(o.kind.as_deref().unwrap_or_default())?;
    let n = o.samples.unwrap_or_default();
    let mut rng = Rng::new(cfg.seed);
    let samples = Tensor::vector((0..n).map(|_| rng.normal()).collect());
    for kind in kinds {
        let h = output_density(kind, &samples, o.bins.unwrap_or_default())?;
        artifacts.text(format!("output_{}.csv", file_stem(kind)), h.to_csv());
    }
    Ok(Outcome { artifacts, summary: format!("{} gate profiles", summaries.len()), passed: true })
}

// ---------------------------------------------------------------- gap

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GapOpts {
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

impl Options for GapOpts {
    fn fill_defaults(&mut self) {
        self.from.get_or_insert(0.0);
        self.to.get_or_insert(15.0);
        self.points.get_or_insert(151);
    }
}

pub fn gap(cfg: &Resolved<GapOpts>) -> Result<Outcome> {
    cfg.require_f64()?;
    let o = &cfg.options;
    let (a, b, n) = (o.from.unwrap_or_default(), o.to.unwrap_or_default(), o.points.unwrap_or_default());
    if n < 2 || !(b > a) {
        return Err(usage("gap needs --to > --from and at least 2 points"));
    }
    let mut csv = String::from("x,gap,normalized\n");
    for i in 0..n {
        let x = a + (b - a) * i as f64 / (n - 1) as f64;
        let p = sigmoid_gompertz_gap(x)?;
        let _ = writeln!(csv, "{},{},{}", p.x, p.gap, p.normalized);
    }
    let mut artifacts = Artifacts::default();
    artifacts.text("gap.csv", csv);
    Ok(Outcome { artifacts, summary: format!("{n} gap points on [{a}, {b}]"), passed: true })
}

// ---------------------------------------------------------------- bench

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct BenchOpts {
    #[arg(long, value_delimiter = ',')]
    pub kind: Option<Vec<String>>,
    /// Elements per pass.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// scalar, vector or parallel.
    #[arg(long)]
    pub path: Option<ExecPath>,
}

impl Options for BenchOpts {
    fn fill_defaults(&mut self) {
        self.kind.get_or_insert_with(|| strings(&["benchmarked"]));
        self.n.get_or_insert(10_000_000);
        self.reps.get_or_insert(20);
        self.path.get_or_insert(ExecPath::Parallel);
    }
}

pub fn bench(cfg: &Resolved<BenchOpts>) -> Result<Outcome> {
    let o = &cfg.options;
    let kinds = parse_kinds(o.kind.as_deref().unwrap_or_default())?;
    let reports = bench_suite(
        &kinds,
        o.n.unwrap_or_default(),
        o.reps.unwrap_or_default(),
        o.path.unwrap_or(ExecPath::Parallel),
        cfg.precision,
        cfg.seed,
    )?;
    let mut csv = format!("{}\n", BenchReport::CSV_HEADER);
    let mut summary = String::new();
    for r in &reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
        let _ = write!(summary, "{} {:.3}x  ", r.kind, r.relative_to_relu);
    }
    let mut artifacts = Artifacts::default();
    artifacts.text("bench.csv", csv);
    Ok(Outcome { artifacts, summary: summary.trim_end().to_string(), passed: true })
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct TrainOpts {
    /// moons or rings.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Points in the training set (the evaluation set has the same size).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    /// Inner-to-outer radius ratio for rings.
    #[arg(long)]
    pub factor: Option<f64>,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

impl TrainOpts {
    fn fill(&mut self) {
        let d = TrainConfig::default();
        self.dataset.get_or_insert_with(|| "moons".into());
        self.samples.get_or_insert(500);
        self.noise.get_or_insert(0.1);
        self.factor.get_or_insert(0.5);
        self.hidden.get_or_insert_with(|| vec![32, 32]);
        self.epochs.get_or_insert(d.epochs);
        self.lr.get_or_insert(d.lr);
        self.momentum.get_or_insert(d.momentum);
        self.weight_decay.get_or_insert(d.weight_decay);
        self.batch_size.get_or_insert(d.batch_size);
    }

    /// Training and evaluation sets drawn from `seed` and `seed + 1`.
    fn datasets(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        let n = self.samples.unwrap_or_default();
        let noise = self.noise.unwrap_or_default();
        let make = |s| match self.dataset.as_deref() {
            Some("moons") => two_moons(n, noise, s),
            Some("rings") => rings(n, noise, self.factor.unwrap_or_default(), s),
            other => Err(golu_core::Error::Usage(format!("unknown dataset {other:?}"))),
        };
        Ok((make(seed)?, make(seed.wrapping_add(1))?))
    }

    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr.unwrap_or_default(),
            momentum: self.momentum.unwrap_or_default(),
            weight_decay: self.weight_decay.unwrap_or_default(),
            epochs: self.epochs.unwrap_or_default(),
            batch_size: self.batch_size.unwrap_or_default(),
            seed,
        }
    }

    fn layers(&self, data: &Dataset, kind: ActivationKind) -> Result<Vec<LayerSpec>> {
        let mut sizes = vec![data.dim()];
        sizes.extend(self.hidden.as_deref().unwrap_or_default());
        sizes.push(data.classes);
        Ok(mlp_layers(&sizes, kind)?)
    }

    fn fit(&self, seed: u64, kind: ActivationKind) -> Result<(MicroNet, Vec<golu_core::net::EpochRecord>, Dataset)> {
        let (data, eval) = self.datasets(seed)?;
        let (net, curve) = train(self.layers(&data, kind)?, &data, &eval, &self.config(seed))?;
        Ok((net, curve, eval))
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct TrainCmdOpts {
    #[arg(long)]
    pub kind: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOpts,
}

impl Options for TrainCmdOpts {
    fn fill_defaults(&mut self) {
        self.kind.get_or_insert_with(|| "golu".into());
        self.train.fill();
    }
}

pub fn train_cmd(cfg: &Resolved<TrainCmdOpts>) -> Result<Outcome> {
    cfg.require_f64()?;
    let kind: ActivationKind = cfg.options.kind.as_deref().unwrap_or_default().parse()?;
    let (net, curve, _) = cfg.options.train.fit(cfg.seed, kind)?;
    let last = curve.last().cloned();
    let best = curve.iter().map(|r| r.accuracy).fold(0.0, f64::max);
    let mut artifacts = Artifacts::default();
    artifacts.text("curve.csv", curve_csv(&curve));
    artifacts.bytes("model.ckpt", golu_core::net::encode_checkpoint(&net)?);
    artifacts.json("train.json", &serde_json::json!({ "kind": kind.to_string(), "best_train_accuracy": best, "final": last }))?;
    Ok(Outcome { artifacts, summary: format!("{kind}: best train accuracy {best:.4}"), passed: true })
}

// ---------------------------------------------------------------- landscape

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct LandscapeOpts {
    #[arg(long, value_delimiter = ',')]
    pub kind: Option<Vec<String>>,
    /// Evaluate a saved network instead of training one per activation.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Points per grid axis (odd).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Coefficients span [-range, range].
    #[arg(long)]
    pub range: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOpts,
}

impl Options for LandscapeOpts {
    fn fill_defaults(&mut self) {
        self.kind.get_or_insert_with(|| strings(&["all"]));
        self.grid.get_or_insert(golu_core::landscape::DEFAULT_GRID);
        self.range.get_or_insert(1.0);
        self.train.fill();
    }
}

pub fn landscape(cfg: &Resolved<LandscapeOpts>) -> Result<Outcome> {
    cfg.require_f64()?;
    let o = &cfg.options;
    let mut nets = Vec::new();
    if let Some(path) = &o.checkpoint {
        let net = load_checkpoint(path)?;
        let (_, eval) = o.train.datasets(cfg.seed)?;
        nets.push(("checkpoint".to_string(), net, eval));
    } else {
        for kind in parse_kinds(o.kind.as_deref().unwrap_or_default())? {
            let (net, _, eval) = o.train.fit(cfg.seed, kind)?;
            nets.push((file_stem(kind), net, eval));
        }
    }
    let mut artifacts = Artifacts::default();
    let mut table = String::from("kind,base_loss,mean,variance,min,max,argmin_alpha,argmin_beta,nan_cells\n");
    let mut all = Vec::new();
    for (name, net, eval) in nets {
        let dirs = sample_directions(net.param_count(), cfg.seed)?;
        let s = loss_surface(&net, &eval, &dirs, o.grid.unwrap_or_default(), o.range.unwrap_or_default())?;
        artifacts.text(format!("surface_{name}.csv"), s.to_csv());
        let st = surface_stats(&s)?;
        let _ = writeln!(
            table,
            "{name},{},{},{},{},{},{},{},{}",
            st.base_loss, st.mean, st.variance, st.min, st.max, st.argmin.0, st.argmin.1, st.nan_cells
        );
        all.push(serde_json::json!({ "kind": name, "stats": st }));
    }
    artifacts.text("landscape.csv", table);
    artifacts.json("landscape.json", &all)?;
    Ok(Outcome { artifacts, summary: format!("{} surfaces", all.len()), passed: true })
}

// ---------------------------------------------------------------- rank

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct RankOpts {
    /// CSV with a header of activation names and one benchmark per row.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, conflicts_with = "lower_better")]
    #[serde(skip)]
    pub higher_better: bool,
    #[arg(long)]
    #[serde(skip)]
    pub lower_better: bool,
    #[arg(skip)]
    pub higher_is_better: Option<bool>,
    /// 0.05 or 0.10.
    #[arg(long)]
    pub alpha: Option<f64>,
}

impl Options for RankOpts {
    fn fill_defaults(&mut self) {
        self.higher_is_better.get_or_insert(true);
        self.alpha.get_or_insert(0.05);
    }
}

impl RankOpts {
    /// Folds the two orientation flags into `higher_is_better`.
    pub fn absorb_flags(&mut self) {
        if self.higher_better {
            self.higher_is_better = Some(true);
        }
        if self.lower_better {
            self.higher_is_better = Some(false);
        }
    }
}

pub fn rank(cfg: &Resolved<RankOpts>) -> Result<Outcome> {
    let o = &cfg.options;
    let path = o.scores.as_ref().ok_or_else(|| usage("rank needs --scores"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| golu_core::Error::Data(format!("{}: {e}", path.display())))?;
    let m = ScoreMatrix::from_csv(&text, o.higher_is_better.unwrap_or(true))?;
    let r = cd_report(&m, o.alpha.unwrap_or(0.05))?;
    let mut csv = String::from("activation,mean_rank\n");
    for (name, rank) in r.ordering() {
        let _ = writeln!(csv, "{name},{rank}");
    }
    let mut artifacts = Artifacts::default();
    artifacts.json("cd.json", &r)?;
    artifacts.text("ranks.csv", csv);
    Ok(Outcome { artifacts, summary: r.summary().trim_end().to_string(), passed: true })
}

// ---------------------------------------------------------------- weights

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct WeightsOpts {
    #[arg(long, value_delimiter = ',')]
    pub kind: Option<Vec<String>>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Central mass of each net's weights kept before intersecting the intervals.
    #[arg(long)]
    pub mass: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainOpts,
}

impl Options for WeightsOpts {
    fn fill_defaults(&mut self) {
        self.kind.get_or_insert_with(|| strings(&["all"]));
        self.bins.get_or_insert(50);
        self.mass.get_or_insert(0.98);
        self.train.fill();
    }
}

pub fn weights(cfg: &Resolved<WeightsOpts>) -> Result<Outcome> {
    cfg.require_f64()?;
    let o = &cfg.options;
    let kinds = parse_kinds(o.kind.as_deref().unwrap_or_default())?;
    let mut nets = Vec::new();
    let mut intervals = Vec::new();
    for kind in kinds {
        let (net, _, _) = o.train.fit(cfg.seed, kind)?;
        let params = net.params();
        let values: Vec<f64> = net.non_normalization_indices().into_iter().map(|i| params[i]).collect();
        intervals.push(central_interval(&values, o.mass.unwrap_or_default())?);
        nets.push((kind, net));
    }
    let common = intersect_intervals(&intervals)?;
    let mut artifacts = Artifacts::default();
    let mut table = String::from("kind,included,bulk_count,bulk_variance,interval_lo,interval_hi\n");
    let mut ordering = Vec::new();
    for (kind, net) in &nets {
        let ws = weight_stats(net, o.bins.unwrap_or_default(), Some(common))?;
        artifacts.text(format!("weights_{}.csv", file_stem(*kind)), ws.to_csv());
        let _ = writeln!(table, "{kind},{},{},{},{},{}", ws.included, ws.bulk_count, ws.bulk_variance, common.0, common.1);
        ordering.push((kind.to_string(), ws.bulk_variance));
    }
    ordering.sort_by(|a, b| a.1.total_cmp(&b.1));
    artifacts.text("weights.csv", table);
    let order: Vec<&str> = ordering.iter().map(|(k, _)| k.as_str()).collect();
    Ok(Outcome { artifacts, summary: format!("bulk variance, low to high: {}", order.join(" < ")), passed: true })
}
