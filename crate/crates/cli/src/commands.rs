//! Subcommand definitions and their implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use psne_core::synthetic::{generate_angular, generate_sparse_sequential, GeneratorConfig, LabeledDataset};
use psne_core::{evaluation, fit, CountMatrix, EmbeddingState, FitConfig, MetricReport};

use crate::config::{self, KeyValues};
use crate::error::{CliError, Result};
use crate::io;
use crate::manifest::{Provenance, RunManifest};
use crate::plot::{self, Coloring};

#[derive(Debug, Parser)]
#[command(name = "psne", version, about = "Embeddings of count data with Poisson-KL affinities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (counts, labels, rates, manifold coordinates).
    Generate(GenerateArgs),
    /// Fit an embedding to a counts file.
    Fit(FitArgs),
    /// Compute metrics for an embedding.
    Evaluate(EvaluateArgs),
    /// Render an embedding as an SVG scatter plot.
    Plot(PlotArgs),
    /// Generate, fit and evaluate at several rate scales.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dataset {
    Angular,
    SparseSequential,
}

impl Dataset {
    pub fn name(self) -> &'static str {
        match self {
            Dataset::Angular => "angular",
            Dataset::SparseSequential => "sparse-sequential",
        }
    }

    pub fn generate(self, seed: u64, rate_scale: f64) -> Result<LabeledDataset> {
        let data = match self {
            Dataset::Angular => {
                generate_angular(&GeneratorConfig::angular().with_seed(seed).with_rate_scale(rate_scale))
            }
            Dataset::SparseSequential => generate_sparse_sequential(
                &GeneratorConfig::sparse_sequential().with_seed(seed).with_rate_scale(rate_scale),
            ),
        }?;
        Ok(data)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub dataset: Dataset,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Multiplier applied to every Poisson rate before sampling.
    #[arg(long)]
    pub rate_scale: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Command-line overrides for `FitConfig`. Each one wins over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct FitFlags {
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub sharpness: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum_initial: Option<f64>,
    #[arg(long)]
    pub momentum_final: Option<f64>,
    #[arg(long)]
    pub momentum_switch_iter: Option<usize>,
    #[arg(long)]
    pub exaggeration: Option<f64>,
    #[arg(long)]
    pub exaggeration_iters: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub group_lasso: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub exaggeration_renormalize: Option<bool>,
    /// Use sharpness 0.5 and twice the learning rate otherwise in effect.
    #[arg(long)]
    pub half_sharpness_variant: bool,
}

impl FitFlags {
    pub fn apply(&self, c: &mut FitConfig) {
        macro_rules! set {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        set!(
            embed_dim,
            sharpness,
            learning_rate,
            momentum_initial,
            momentum_final,
            momentum_switch_iter,
            exaggeration,
            exaggeration_iters,
            max_iters,
            tolerance,
            epsilon,
            group_lasso,
            seed,
            exaggeration_renormalize,
        );
        if self.half_sharpness_variant {
            c.sharpness = 0.5;
            c.learning_rate *= 2.0;
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub counts: PathBuf,
    /// Flat `key = value` file with `FitConfig` field names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output prefix; writes `<out>_embedding.csv`, `<out>_trace.csv` and
    /// `<out>_manifest.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Labels file; when given, metrics are stored in the manifest.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Manifold file with a `t` column; adds the Spearman metric.
    #[arg(long)]
    pub manifold: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[command(flatten)]
    pub flags: FitFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub manifold: Option<PathBuf>,
    /// Output metric CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Seed for the k-means restarts.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "p-SNE")]
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ColorMode {
    Categorical,
    Continuous,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    /// Labels file (categorical) or manifold file (continuous).
    #[arg(long)]
    pub colors: PathBuf,
    #[arg(long, value_enum, default_value_t = ColorMode::Categorical)]
    pub mode: ColorMode,
    /// Column of the colors file; defaults to `label` or `t` by mode.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "")]
    pub title: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep file: `FitConfig` keys plus `dataset`, `data_seed` and `scales`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub dataset: Option<Dataset>,
    #[arg(long)]
    pub data_seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[command(flatten)]
    pub flags: FitFlags,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Fit(a) => fit_command(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Plot(a) => plot_command(&a),
        Command::Sweep(a) => sweep(&a),
    }
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let data = a.dataset.generate(a.seed, a.rate_scale.unwrap_or(1.0))?;
    io::write_dataset(&a.out_dir, &data)?;
    println!(
        "{}: {} samples x {} features, zero fraction {:.4}, {} all-zero rows dropped -> {}",
        a.dataset.name(),
        data.counts.n_samples(),
        data.counts.n_features(),
        data.counts.zero_fraction(),
        data.removed.len(),
        a.out_dir.display()
    );
    Ok(())
}

/// Output files of one fit.
#[derive(Debug, Clone)]
pub struct FitOutputs {
    pub embedding: PathBuf,
    pub trace: PathBuf,
    pub manifest: PathBuf,
}

impl FitOutputs {
    pub fn for_prefix(prefix: &Path) -> Self {
        let with = |suffix: &str| {
            let mut s = prefix.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        FitOutputs { embedding: with("_embedding.csv"), trace: with("_trace.csv"), manifest: with("_manifest.json") }
    }
}

/// Fits, evaluates when labels or manifold values are given, and writes the
/// embedding, trace and manifest next to `prefix`.
pub fn fit_and_record(
    counts: &CountMatrix,
    config: &FitConfig,
    provenance: Provenance,
    labels: Option<&[usize]>,
    manifold_t: Option<&[f64]>,
    k: usize,
    prefix: &Path,
) -> Result<(EmbeddingState, RunManifest)> {
    let start = Instant::now();
    let (state, _) = fit(counts, config)?;
    let seconds = start.elapsed().as_secs_f64();
    let metrics = if labels.is_some() || manifold_t.is_some() {
        Some(evaluation::evaluate("p-SNE", &state.x, labels, manifold_t, k, config.seed)?)
    } else {
        None
    };
    let manifest =
        RunManifest::new(config, provenance, (counts.n_samples(), counts.n_features()), &state, seconds, metrics);
    let out = FitOutputs::for_prefix(prefix);
    if let Some(parent) = prefix.parent().filter(|p| !p.as_os_str().is_empty()) {
        io::create_dir(parent)?;
    }
    io::write_bytes(&out.embedding, &io::embedding_csv(&state.x))?;
    io::write_bytes(&out.trace, &io::trace_csv(&state.cost_trace))?;
    io::write_bytes(&out.manifest, manifest.to_json().as_bytes())?;
    Ok((state, manifest))
}

fn resolve_fit_config(file: Option<&Path>, flags: &FitFlags) -> Result<FitConfig> {
    let mut c = match file {
        Some(path) => config::read_fit_config(path, FitConfig::default())?,
        None => FitConfig::default(),
    };
    flags.apply(&mut c);
    c.validate()?;
    Ok(c)
}

pub fn fit_command(a: &FitArgs) -> Result<()> {
    let config = resolve_fit_config(a.config.as_deref(), &a.flags)?;
    let bytes = io::read_bytes(&a.counts)?;
    let counts = io::parse_counts(&bytes, &a.counts)?;
    let labels = match &a.labels {
        Some(p) => {
            let l = io::read_labels(p, None)?;
            io::check_rows(&a.counts, counts.n_samples(), p, l.len())?;
            Some(l)
        }
        None => None,
    };
    let t = match &a.manifold {
        Some(p) => {
            let t = io::read_values(p, Some("t"))?;
            io::check_rows(&a.counts, counts.n_samples(), p, t.len())?;
            Some(t)
        }
        None => None,
    };
    let provenance = Provenance::from_file(&a.counts.display().to_string(), &bytes);
    let (state, manifest) = fit_and_record(&counts, &config, provenance, labels.as_deref(), t.as_deref(), a.k, &a.out)?;
    println!(
        "{} samples -> {} dims, {} iterations{}, final cost {:.6}, {:.3} s",
        counts.n_samples(),
        config.embed_dim,
        state.iteration,
        if state.converged { " (converged)" } else { "" },
        manifest.final_cost,
        manifest.seconds
    );
    if let Some(m) = &manifest.metrics {
        print!("{}", metric_table(std::slice::from_ref(m)));
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Metric CSV with columns method, knn_accuracy, kmeans_ari, spearman_abs,
/// silhouette. Missing metrics are empty fields.
pub fn metric_csv(reports: &[MetricReport]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["method", "knn_accuracy", "kmeans_ari", "spearman_abs", "silhouette"]).expect("in-memory write");
    for r in reports {
        w.write_record([
            r.method.clone(),
            fmt_opt(r.knn_accuracy),
            fmt_opt(r.kmeans_ari),
            fmt_opt(r.spearman_abs),
            fmt_opt(r.silhouette),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub fn metric_table(reports: &[MetricReport]) -> String {
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:>8} {:>8} {:>8} {:>10}", "method", "knn", "ari", "spearman", "silhouette");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>8} {:>8} {:>10}",
            r.method,
            cell(r.knn_accuracy),
            cell(r.kmeans_ari),
            cell(r.spearman_abs),
            cell(r.silhouette)
        );
    }
    s
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let (_, x) = io::read_matrix(&a.embedding)?;
    let labels = io::read_labels(&a.labels, None)?;
    io::check_rows(&a.embedding, x.rows(), &a.labels, labels.len())?;
    let t = match &a.manifold {
        Some(p) => {
            let t = io::read_values(p, Some("t"))?;
            io::check_rows(&a.embedding, x.rows(), p, t.len())?;
            Some(t)
        }
        None => None,
    };
    let report = evaluation::evaluate(&a.method, &x, Some(&labels), t.as_deref(), a.k, a.seed)?;
    io::write_bytes(&a.out, &metric_csv(std::slice::from_ref(&report)))?;
    print!("{}", metric_table(std::slice::from_ref(&report)));
    Ok(())
}

pub fn plot_command(a: &PlotArgs) -> Result<()> {
    let (_, x) = io::read_matrix(&a.embedding)?;
    let coloring = match a.mode {
        ColorMode::Categorical => {
            Coloring::Categorical(io::read_labels(&a.colors, Some(a.column.as_deref().unwrap_or("label")))?)
        }
        ColorMode::Continuous => {
            Coloring::Continuous(io::read_values(&a.colors, Some(a.column.as_deref().unwrap_or("t")))?)
        }
    };
    let n_colors = match &coloring {
        Coloring::Categorical(v) => v.len(),
        Coloring::Continuous(v) => v.len(),
    };
    if x.rows() > 0 {
        io::check_rows(&a.embedding, x.rows(), &a.colors, n_colors)?;
    }
    let plot = plot::scatter_svg(&x, &coloring, &a.title).map_err(|e| match e {
        CliError::Invalid(msg) => CliError::format(&a.embedding, msg),
        other => other,
    })?;
    for w in &plot.warnings {
        eprintln!("warning: {w}");
    }
    io::write_bytes(&a.out, plot.svg.as_bytes())
}

/// One row of the sweep summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scale: f64,
    pub zero_fraction: f64,
    pub metrics: MetricReport,
    pub final_cost: f64,
    pub seconds: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["scale", "zero_fraction", "knn", "ari", "spearman", "silhouette", "final_cost", "seconds"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            format!("{:?}", r.scale),
            format!("{:?}", r.zero_fraction),
            fmt_opt(r.metrics.knn_accuracy),
            fmt_opt(r.metrics.kmeans_ari),
            fmt_opt(r.metrics.spearman_abs),
            fmt_opt(r.metrics.silhouette),
            format!("{:?}", r.final_cost),
            format!("{:?}", r.seconds),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Fully resolved sweep settings.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub dataset: Dataset,
    pub data_seed: u64,
    pub scales: Vec<f64>,
    pub config: FitConfig,
}

pub fn resolve_sweep(a: &SweepArgs) -> Result<SweepPlan> {
    let (mut dataset, mut data_seed, mut scales, mut config) = (None, None, None, FitConfig::default());
    if let Some(path) = &a.config {
        let mut kv = KeyValues::read(path)?;
        if let Some(name) = kv.take::<String>("dataset")? {
            dataset = Some(
                Dataset::from_str(&name, false)
                    .map_err(|_| CliError::format(path, format!("unknown dataset {name:?}")))?,
            );
        }
        data_seed = kv.take::<u64>("data_seed")?;
        scales = kv.take_list::<f64>("scales")?;
        kv.apply_fit(&mut config)?;
        kv.finish()?;
    }
    a.flags.apply(&mut config);
    config.validate()?;
    let dataset = a
        .dataset
        .or(dataset)
        .ok_or_else(|| CliError::Invalid("no dataset given (use --dataset or `dataset` in the config)".into()))?;
    let scales = a.scales.clone().or(scales).ok_or_else(|| CliError::Invalid("no scales given".into()))?;
    if scales.is_empty() || scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(CliError::Invalid("scales must be positive".into()));
    }
    Ok(SweepPlan { dataset, data_seed: a.data_seed.or(data_seed).unwrap_or(42), scales, config })
}

/// Runs the plan, writing `scale_<i>_*` files and `sweep.csv` into `out_dir`.
pub fn run_sweep(plan: &SweepPlan, out_dir: &Path, k: usize) -> Result<Vec<SweepRow>> {
    io::create_dir(out_dir)?;
    let mut rows = Vec::with_capacity(plan.scales.len());
    for (i, &scale) in plan.scales.iter().enumerate() {
        let wrap = |e: CliError| CliError::Sweep { scale, source: Box::new(e) };
        let data = plan.dataset.generate(plan.data_seed, scale).map_err(wrap)?;
        let provenance =
            Provenance::Generator { name: plan.dataset.name().into(), seed: plan.data_seed, rate_scale: scale };
        let prefix = out_dir.join(format!("scale_{i}"));
        let (_, manifest) = fit_and_record(
            &data.counts,
            &plan.config,
            provenance,
            Some(&data.group),
            Some(&data.manifold_t),
            k,
            &prefix,
        )
        .map_err(wrap)?;
        rows.push(SweepRow {
            scale,
            zero_fraction: data.counts.zero_fraction(),
            metrics: manifest.metrics.clone().unwrap_or_default(),
            final_cost: manifest.final_cost,
            seconds: manifest.seconds,
        });
    }
    io::write_bytes(&out_dir.join("sweep.csv"), &sweep_csv(&rows))?;
    Ok(rows)
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    let plan = resolve_sweep(a)?;
    let rows = run_sweep(&plan, &a.out_dir, a.k)?;
    println!(
        "{:>8} {:>6} {:>8} {:>8} {:>8} {:>10} {:>8}",
        "scale", "zeros", "knn", "ari", "spearman", "silhouette", "cost"
    );
    for r in &rows {
        let m = &r.metrics;
        println!(
            "{:>8.4} {:>6.3} {:>8.4} {:>8.4} {:>8.4} {:>10.4} {:>8.4}",
            r.scale,
            r.zero_fraction,
            m.knn_accuracy.unwrap_or(f64::NAN),
            m.kmeans_ari.unwrap_or(f64::NAN),
            m.spearman_abs.unwrap_or(f64::NAN),
            m.silhouette.unwrap_or(f64::NAN),
            r.final_cost
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_sharpness_variant_doubles_the_effective_rate() {
        let mut c = FitConfig::default();
        FitFlags { half_sharpness_variant: true, ..Default::default() }.apply(&mut c);
        assert_eq!((c.sharpness, c.learning_rate), (0.5, 200.0));
        let mut c = FitConfig::default();
        FitFlags { learning_rate: Some(50.0), half_sharpness_variant: true, ..Default::default() }.apply(&mut c);
        assert_eq!(c.learning_rate, 100.0);
    }

    #[test]
    fn output_names() {
        let o = FitOutputs::for_prefix(Path::new("out/run1"));
        assert_eq!(o.embedding, PathBuf::from("out/run1_embedding.csv"));
        assert_eq!(o.trace, PathBuf::from("out/run1_trace.csv"));
        assert_eq!(o.manifest, PathBuf::from("out/run1_manifest.json"));
    }

    #[test]
    fn absent_metrics_are_empty_fields() {
        let r = MetricReport { method: "m".into(), knn_accuracy: Some(1.0), ..Default::default() };
        assert_eq!(metric_csv(&[r]), b"method,knn_accuracy,kmeans_ari,spearman_abs,silhouette\nm,1.0,,,\n");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
