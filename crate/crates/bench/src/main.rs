use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use dragan_core::data::synthetic::{abalone_like, two_gaussians};
use dragan_core::data::{load_csv, write_csv, LabelColumn};
use dragan_core::dragan::{resample_with_dragan_state, write_telemetry_csv, DraganConfig};
use dragan_core::harness::{
    ablate_data_fraction, dataset_paths, emit_ablation, emit_report, run_benchmark_paths, BenchmarkOptions,
    Format,
};
use dragan_core::nn::OptimizerKind;
use dragan_core::metrics::{epsilon_grid, loss_f1_curve, write_curve_csv};
use dragan_core::oversample::{resample, Method, ResamplePlan};

#[derive(Parser)]
#[command(name = "bench", about = "Oversampler benchmark for imbalanced tabular classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated stratified k-fold comparison over every CSV in a directory.
    Run(RunArgs),
    /// Mean AUC per method on growing subsamples of one dataset.
    Ablate(AblateArgs),
    /// Constant-predictor loss and F1 over ε for one minority fraction.
    Curve(CurveArgs),
    /// Oversample one CSV file.
    Resample(ResampleArgs),
    /// Write a seeded synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Shared {
    /// Comma-separated: vanilla, smote, polyfit, mixup, dragan.
    #[arg(long, value_delimiter = ',', default_value = "vanilla,smote,polyfit,mixup,dragan")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 5)]
    splits: usize,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Score metrics on predictions pooled over the folds of each repeat.
    #[arg(long)]
    pooled: bool,
    /// Worker threads; defaults to available cores.
    #[arg(long)]
    threads: Option<usize>,
    /// SMOTE neighbour count; defaults to min(5, N₊ − 1).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = dragan_core::oversample::DEFAULT_MIXUP_ALPHA)]
    mixup_alpha: f64,
    /// Logistic-regression gradient steps, for the downstream and the inner
    /// classifier alike.
    #[arg(long)]
    clf_steps: Option<usize>,
    #[arg(long)]
    clf_lr: Option<f64>,
    /// sgd, adam or rmsprop.
    #[arg(long)]
    clf_optimizer: Option<OptimizerKind>,
    #[command(flatten)]
    dragan: DraganArgs,
}

#[derive(Args)]
struct DraganArgs {
    /// key = value file of generator settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Emit generated ∪ real rows instead of generated rows only.
    #[arg(long)]
    augment: bool,
    /// Extra `key=value` generator overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl DraganArgs {
    fn build(&self) -> Result<DraganConfig> {
        let mut c = match &self.config {
            Some(p) => DraganConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => DraganConfig::default(),
        };
        if let Some(e) = self.epochs {
            c.total_epochs = e;
        }
        if let Some(p) = self.patience {
            c.early_stopping_patience = p;
        }
        if self.augment {
            c.augment = true;
        }
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("--set expects KEY=VALUE, got `{kv}`");
            };
            c.set(k, v.trim())?;
        }
        c.validate()?;
        Ok(c)
    }
}

impl Shared {
    fn options(&self) -> Result<BenchmarkOptions> {
        let mut o = BenchmarkOptions {
            methods: self.methods.clone(),
            n_splits: self.splits,
            n_repeats: self.repeats,
            seed: self.seed,
            dragan: self.dragan.build()?,
            k_neighbors: self.k,
            mixup_alpha: self.mixup_alpha,
            pooled: self.pooled,
            ..BenchmarkOptions::default()
        };
        if let Some(t) = self.threads {
            o.threads = t.max(1);
        }
        for c in [&mut o.classifier, &mut o.dragan.inner] {
            if let Some(v) = self.clf_steps {
                c.steps = v;
            }
            if let Some(v) = self.clf_lr {
                c.learning_rate = v;
            }
            if let Some(v) = self.clf_optimizer {
                c.optimizer = v;
            }
        }
        Ok(o)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
    fractions: Vec<f64>,
    #[arg(long, default_value = "ablation")]
    out: PathBuf,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, default_value_t = 0.1)]
    minority_fraction: f64,
    #[arg(long, default_value_t = 0.001)]
    step: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ResampleArgs {
    #[arg(long)]
    method: Method,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = dragan_core::oversample::DEFAULT_MIXUP_ALPHA)]
    mixup_alpha: f64,
    /// Per-epoch generator telemetry CSV.
    #[arg(long)]
    telemetry: Option<PathBuf>,
    #[command(flatten)]
    dragan: DraganArgs,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SynthKind {
    TwoGaussians,
    AbaloneLike,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "abalone-like")]
    kind: SynthKind,
    #[arg(long)]
    n: usize,
    /// Minority rows (abalone-like).
    #[arg(long, default_value_t = 42)]
    positives: usize,
    /// Imbalance ratio (two-gaussians).
    #[arg(long, default_value_t = 9.0)]
    ir: f64,
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

const FORMATS: [Format; 2] = [Format::Csv, Format::Markdown];

fn run(a: RunArgs) -> Result<()> {
    let opts = a.shared.options()?;
    let paths = dataset_paths(&a.data).with_context(|| format!("listing {}", a.data.display()))?;
    if paths.is_empty() {
        bail!("no CSV files in {}", a.data.display());
    }
    let report = run_benchmark_paths(&paths, &opts)?;
    for f in &report.failures {
        let m = f.method.map_or_else(|| "all".to_string(), |m| m.to_string());
        eprintln!("warning: {} / {m}: {}", f.dataset, f.message);
    }
    let files = emit_report(&report, &a.out, &FORMATS)?;
    eprintln!("{} records, {} files in {}", report.records.len(), files.len(), a.out.display());
    Ok(())
}

fn ablate(a: AblateArgs) -> Result<()> {
    let opts = a.shared.options()?;
    let ds = load_csv(&a.data, &LabelColumn::Last)?;
    let rep = ablate_data_fraction(&ds, &a.fractions, &opts)?;
    for (f, why) in &rep.skipped {
        eprintln!("warning: fraction {f} skipped: {why}");
    }
    emit_ablation(&rep, &a.out, &FORMATS)?;
    for (m, s) in &rep.slopes {
        println!("{m}\t{}", s.map_or_else(|| "NA".to_string(), |s| format!("{s:.4}")));
    }
    Ok(())
}

fn curve(a: CurveArgs) -> Result<()> {
    let points = loss_f1_curve(a.minority_fraction, &epsilon_grid(a.step))?;
    write_curve_csv(&points, BufWriter::new(File::create(&a.out)?))?;
    Ok(())
}

fn resample_file(a: ResampleArgs) -> Result<()> {
    let ds = load_csv(&a.input, &LabelColumn::Last)?;
    let out = if a.method == Method::Dragan {
        let mut cfg = a.dragan.build()?;
        cfg.seed = a.seed;
        let (out, state) = resample_with_dragan_state(&ds, &cfg)?;
        if let Some(p) = &a.telemetry {
            write_telemetry_csv(&state.telemetry, BufWriter::new(File::create(p)?))?;
        }
        eprintln!("best score {:.4} after {} epochs", state.best_score, state.epoch);
        out
    } else {
        let mut plan = ResamplePlan::balanced(a.method, &ds, a.seed);
        plan.k_neighbors = a.k;
        plan.alpha = a.mixup_alpha;
        resample(&ds, &plan)?
    };
    write_csv(&out, BufWriter::new(File::create(&a.out)?))?;
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let name = a.out.file_stem().map_or_else(|| "synthetic".to_string(), |s| s.to_string_lossy().into_owned());
    let ds = match a.kind {
        SynthKind::TwoGaussians => two_gaussians(a.n, a.ir, a.separation, a.seed)?,
        SynthKind::AbaloneLike => abalone_like(&name, a.n, a.positives, a.seed)?,
    };
    write_csv(&ds, BufWriter::new(File::create(&a.out)?))?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Ablate(a) => ablate(a),
        Command::Curve(a) => curve(a),
        Command::Resample(a) => resample_file(a),
        Command::Synth(a) => synth(a),
    }
}
