mod analyze;
mod generate;
mod manifest;
mod model_io;
mod protocols;
mod report_cmd;
mod training;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use crate::analyze::{run_analyze, AnalyzeConfig};
use crate::generate::{run_gen, run_gen_art, GenArtConfig, GenConfig};
use crate::manifest::RunManifest;
use crate::protocols::{run_ablate, run_compose, run_transfer, AblateConfig, ComposeConfig, TransferConfig};
use crate::report_cmd::{run_report, ReportConfig};
use crate::training::{run_eval, run_train, DataSource, EvalConfig, TrainRunConfig};

#[derive(Parser)]
#[command(
    name = "vrlab",
    version,
    about = "Visual-reasoning laboratory: dataset generation, model training, \
             transfer/composition/ablation protocols, and taxonomy analysis."
)]
struct Cli {
    /// Re-execute a recorded run and verify its deterministic outputs
    /// reproduce bit-identically (single-threaded).
    #[arg(long, value_name = "FILE")]
    from_manifest: Option<PathBuf>,

    /// Output directory for a re-executed run; defaults to the original.
    #[arg(long, value_name = "DIR", requires = "from_manifest")]
    into: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a single-image reasoning dataset with oracle-checked labels.
    Gen(GenArgs),
    /// Generate a glyph-episode dataset under a vocabulary holdout.
    GenArt(GenArtArgs),
    /// Train a model variant and save its weights plus a training report.
    Train(TrainArgs),
    /// Score saved weights on one dataset split.
    Eval(EvalArgs),
    /// Evaluate saved weights on a rule-aligned task with zero updates.
    Transfer(TransferArgs),
    /// Few-shot fine-tune of the combination and decision layers only.
    Compose(ComposeArgs),
    /// Train pruned model variants across tasks for component ablations.
    Ablate(AblateArgs),
    /// Taxonomy analysis over accuracy matrices.
    Analyze(AnalyzeArgs),
    /// Merge run reports and aggregate test accuracy across seeds.
    Report(ReportArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 64 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = execute(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(65);
    }
}

fn execute(cli: Cli) -> Result<()> {
    match (cli.from_manifest, cli.command) {
        (Some(path), None) => rerun(&path, cli.into),
        (None, Some(cmd)) => dispatch(cmd).map(|_| ()),
        (Some(_), Some(_)) => bail!("--from-manifest replaces the subcommand; pass one or the other"),
        (None, None) => unreachable!("clap enforces a subcommand or --from-manifest"),
    }
}

fn dispatch(cmd: Command) -> Result<RunManifest> {
    match cmd {
        Command::Gen(args) => run_gen(args.resolve()?),
        Command::GenArt(args) => run_gen_art(args.resolve()?),
        Command::Train(args) => run_train(args.resolve()?),
        Command::Eval(args) => run_eval(args.resolve()?),
        Command::Transfer(args) => run_transfer(args.resolve()?),
        Command::Compose(args) => run_compose(args.resolve()?),
        Command::Ablate(args) => run_ablate(args.resolve()?),
        Command::Analyze(args) => run_analyze(args.resolve()?),
        Command::Report(args) => run_report(args.resolve()?),
    }
}

/// Re-runs a recorded config on one thread and checks that every
/// deterministic output hashes to its recorded value.
fn rerun(manifest_path: &Path, into: Option<PathBuf>) -> Result<()> {
    let recorded = RunManifest::read(manifest_path)?;
    recorded.verify_inputs().context("recorded inputs have drifted")?;

    let mut config = recorded.config.clone();
    let obj = config
        .as_object_mut()
        .context("manifest config is not an object")?;
    if let Some(dir) = into {
        obj.insert("out".into(), serde_json::json!(dir));
    }
    if obj.contains_key("jobs") {
        obj.insert("jobs".into(), serde_json::json!(1));
    }

    let fresh = dispatch_config(&recorded.subcommand, config)?;
    recorded.verify_outputs_against(&fresh)?;
    println!(
        "reproduced {} deterministic output(s) bit-identically",
        recorded.outputs.len()
    );
    Ok(())
}

fn dispatch_config(subcommand: &str, config: serde_json::Value) -> Result<RunManifest> {
    fn typed<T: DeserializeOwned>(v: serde_json::Value) -> Result<T> {
        serde_json::from_value(v).context("manifest config does not fit its subcommand")
    }
    match subcommand {
        "gen" => run_gen(typed::<GenConfig>(config)?),
        "gen-art" => run_gen_art(typed::<GenArtConfig>(config)?),
        "train" => run_train(typed::<TrainRunConfig>(config)?),
        "eval" => run_eval(typed::<EvalConfig>(config)?),
        "transfer" => run_transfer(typed::<TransferConfig>(config)?),
        "compose" => run_compose(typed::<ComposeConfig>(config)?),
        "ablate" => run_ablate(typed::<AblateConfig>(config)?),
        "analyze" => run_analyze(typed::<AnalyzeConfig>(config)?),
        "report" => run_report(typed::<ReportConfig>(config)?),
        other => bail!("manifest names unknown subcommand `{other}`"),
    }
}

/// Output directory resolution shared by every subcommand: an explicit
/// `--out` wins, otherwise a deterministic name under `$VRLAB_RUNS` (or
/// `./runs`).
pub fn run_dir(out: &Option<PathBuf>, default_name: &str) -> Result<PathBuf> {
    let dir = match out {
        Some(d) => d.clone(),
        None => {
            let root = std::env::var_os("VRLAB_RUNS")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs"));
            root.join(default_name)
        }
    };
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("creating run directory {}", dir.display()))?;
    Ok(dir)
}

fn base_config<T: DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        Some(p) => {
            let file = std::fs::File::open(p)
                .with_context(|| format!("opening config {}", p.display()))?;
            serde_json::from_reader(std::io::BufReader::new(file))
                .with_context(|| format!("parsing config {}", p.display()))
        }
        None => Ok(T::default()),
    }
}

macro_rules! override_with {
    ($target:expr, $flag:expr) => {
        if let Some(v) = $flag {
            $target = v;
        }
    };
}

fn parse_ratios(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().context("ratios must be numbers"))
        .collect::<Result<_>>()?;
    let [a, b, c] = parts.as_slice() else {
        bail!("ratios need exactly three comma-separated values");
    };
    Ok([*a, *b, *c])
}

fn parse_u32_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|p| p.trim().parse::<u32>().context("task ids must be integers"))
        .collect()
}

fn parse_triplet(s: &str) -> Result<(u32, u32, u32)> {
    let ids = parse_u32_list(s)?;
    let [z, a, b] = ids.as_slice() else {
        bail!("a triplet needs exactly three comma-separated task ids");
    };
    Ok((*z, *a, *b))
}

#[derive(Args)]
struct GenArgs {
    /// JSON file with the same fields as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    task: Option<u32>,
    /// Total sample count across train/val/test.
    #[arg(long)]
    n: Option<usize>,
    /// Train/val/test fractions, e.g. 0.4,0.2,0.4.
    #[arg(long)]
    ratios: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Image side length in pixels.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl GenArgs {
    fn resolve(self) -> Result<GenConfig> {
        let mut cfg: GenConfig = base_config(&self.config)?;
        override_with!(cfg.task, self.task);
        override_with!(cfg.n, self.n);
        if let Some(r) = &self.ratios {
            cfg.ratios = parse_ratios(r)?;
        }
        override_with!(cfg.seed, self.seed);
        override_with!(cfg.size, self.size);
        override_with!(cfg.out, self.out.map(Some));
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenArtArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Episode task: sd, rmts, dist3, or id.
    #[arg(long)]
    task: Option<String>,
    /// Held-out glyph count m (0, 50, 85, or 95).
    #[arg(long)]
    holdout: Option<usize>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    /// Use the reference episode counts for this task and holdout.
    #[arg(long)]
    paper_counts: bool,
    #[arg(long)]
    vocab_seed: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Jitter glyph placement by up to ±5 px (true by default).
    #[arg(long)]
    jitter: Option<bool>,
    /// Stimulus side length in pixels.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl GenArtArgs {
    fn resolve(self) -> Result<GenArtConfig> {
        let mut cfg: GenArtConfig = base_config(&self.config)?;
        override_with!(cfg.task, self.task);
        override_with!(cfg.m, self.holdout);
        override_with!(cfg.train, self.train);
        override_with!(cfg.test, self.test);
        override_with!(cfg.vocab_seed, self.vocab_seed);
        override_with!(cfg.seed, self.seed);
        override_with!(cfg.jitter, self.jitter);
        override_with!(cfg.size, self.size);
        override_with!(cfg.out, self.out.map(Some));
        if self.paper_counts {
            let task: art_gen::ArtTask =
                cfg.task.parse().map_err(|e: art_gen::ArtError| anyhow::anyhow!(e))?;
            let (train, test) = art_gen::full_counts(task, cfg.m)
                .with_context(|| format!("no reference counts for {} at m={}", cfg.task, cfg.m))?;
            cfg.train = train;
            cfg.test = test;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// JSON training-hyperparameter file; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Single-image task id to train on.
    #[arg(long)]
    task: Option<u32>,
    /// Second task mixed into the training stream (joint pre-training).
    #[arg(long)]
    merge_task: Option<u32>,
    /// Episode task (sd, rmts, dist3, id); pair with --holdout.
    #[arg(long, conflicts_with = "task")]
    art_task: Option<String>,
    #[arg(long)]
    holdout: Option<usize>,
    #[arg(long)]
    variant: Option<String>,
    /// Architecture preset: tiny, desk, or full.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    time_steps: Option<usize>,
    /// Train every learning-rate × weight-decay grid cell, reports only.
    #[arg(long)]
    sweep: bool,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Validation accuracy that ends training early.
    #[arg(long)]
    early_stop: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TrainArgs {
    fn resolve(self) -> Result<TrainRunConfig> {
        let mut cfg = TrainRunConfig::default();
        cfg.train = base_config(&self.config)?;
        override_with!(cfg.data, self.data);
        override_with!(cfg.variant, self.variant);
        override_with!(cfg.preset, self.preset);
        override_with!(cfg.time_steps, self.time_steps.map(Some));
        if self.sweep {
            cfg.sweep = true;
        }
        override_with!(cfg.jobs, self.jobs);
        override_with!(cfg.train.seed, self.seed);
        override_with!(cfg.train.lr, self.lr);
        override_with!(cfg.train.max_epochs, self.epochs);
        override_with!(cfg.train.batch_size, self.batch);
        override_with!(cfg.train.weight_decay, self.weight_decay);
        override_with!(cfg.train.early_stop, self.early_stop);
        override_with!(cfg.out, self.out.map(Some));
        cfg.source = data_source(self.task, self.merge_task, self.art_task, self.holdout)?;
        if cfg.data.as_os_str().is_empty() {
            bail!("--data is required");
        }
        Ok(cfg)
    }
}

fn data_source(
    task: Option<u32>,
    merge: Option<u32>,
    art_task: Option<String>,
    holdout: Option<usize>,
) -> Result<Option<DataSource>> {
    match (task, art_task) {
        (Some(t), None) => Ok(Some(DataSource::Svrt { task: t, merge })),
        (None, Some(a)) => Ok(Some(DataSource::Art { task: a, m: holdout.unwrap_or(0) })),
        (None, None) => Ok(None),
        (Some(_), Some(_)) => bail!("--task and --art-task are mutually exclusive"),
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Directory holding model.ckpt + model.json from a training run.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    task: Option<u32>,
    #[arg(long, conflicts_with = "task")]
    art_task: Option<String>,
    #[arg(long)]
    holdout: Option<usize>,
    /// Which split to score: train, val, or test.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl EvalArgs {
    fn resolve(self) -> Result<EvalConfig> {
        let mut cfg = EvalConfig::default();
        override_with!(cfg.model, self.model);
        override_with!(cfg.data, self.data);
        override_with!(cfg.split, self.split);
        override_with!(cfg.out, self.out.map(Some));
        cfg.source = data_source(self.task, None, self.art_task, self.holdout)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TransferArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Task the model was trained on.
    #[arg(long)]
    train_task: Option<u32>,
    /// Rule-aligned task to evaluate on.
    #[arg(long)]
    test_task: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl TransferArgs {
    fn resolve(self) -> Result<TransferConfig> {
        let mut cfg = TransferConfig::default();
        override_with!(cfg.model, self.model);
        override_with!(cfg.data, self.data);
        override_with!(cfg.train_task, self.train_task);
        override_with!(cfg.test_task, self.test_task);
        override_with!(cfg.out, self.out.map(Some));
        Ok(cfg)
    }
}

#[derive(Args)]
struct ComposeArgs {
    /// JSON training-hyperparameter file; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding the jointly pre-trained model.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Composed task then its two elements, e.g. 15,1,10.
    #[arg(long)]
    triplet: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    /// Also train a from-scratch control on the same few-shot set.
    #[arg(long)]
    scratch: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ComposeArgs {
    fn resolve(self) -> Result<ComposeConfig> {
        let mut cfg = ComposeConfig::default();
        cfg.train = base_config(&self.config).map(|t: harness::TrainConfig| t).unwrap_or(cfg.train);
        override_with!(cfg.model, self.model);
        override_with!(cfg.data, self.data);
        if let Some(t) = &self.triplet {
            cfg.triplet = parse_triplet(t)?;
        }
        override_with!(cfg.samples_per_category, self.samples);
        if self.scratch {
            cfg.scratch = true;
        }
        override_with!(cfg.train.seed, self.seed);
        override_with!(cfg.train.lr, self.lr);
        override_with!(cfg.train.max_epochs, self.epochs);
        override_with!(cfg.train.batch_size, self.batch);
        override_with!(cfg.out, self.out.map(Some));
        Ok(cfg)
    }
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated task ids, e.g. 1,22.
    #[arg(long)]
    tasks: Option<String>,
    /// Comma-separated component names; defaults to all five.
    #[arg(long)]
    components: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl AblateArgs {
    fn resolve(self) -> Result<AblateConfig> {
        let mut cfg = AblateConfig::default();
        cfg.train = base_config(&self.config)?;
        override_with!(cfg.data, self.data);
        if let Some(t) = &self.tasks {
            cfg.tasks = parse_u32_list(t)?;
        }
        if let Some(c) = &self.components {
            cfg.components = c.split(',').map(|p| p.trim().to_string()).collect();
        }
        override_with!(cfg.preset, self.preset);
        override_with!(cfg.jobs, self.jobs);
        override_with!(cfg.train.seed, self.seed);
        override_with!(cfg.train.lr, self.lr);
        override_with!(cfg.train.max_epochs, self.epochs);
        override_with!(cfg.train.batch_size, self.batch);
        override_with!(cfg.out, self.out.map(Some));
        Ok(cfg)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(subcommand)]
    op: AnalyzeOp,
}

#[derive(Subcommand)]
enum AnalyzeOp {
    /// Ward-linkage dendrogram over the matrix rows.
    Cluster {
        #[arg(long)]
        matrix: PathBuf,
        /// Also write a k-cluster cut of the dendrogram.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Principal components of the accuracy cloud.
    Pca {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-task improvement-ratio slopes against log dataset size.
    Slopes {
        #[arg(long)]
        variant_matrix: PathBuf,
        #[arg(long)]
        base_matrix: PathBuf,
        /// Comma-separated dataset sizes; defaults to parsing column labels.
        #[arg(long)]
        sizes: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pearson r and p between a slope table and a projection column.
    Correlate {
        #[arg(long)]
        slopes: PathBuf,
        #[arg(long)]
        projections: PathBuf,
        #[arg(long, default_value_t = 1)]
        component: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl AnalyzeArgs {
    fn resolve(self) -> Result<AnalyzeConfig> {
        Ok(match self.op {
            AnalyzeOp::Cluster { matrix, k, out } => AnalyzeConfig::Cluster { matrix, k, out },
            AnalyzeOp::Pca { matrix, k, out } => AnalyzeConfig::Pca { matrix, k, out },
            AnalyzeOp::Slopes { variant_matrix, base_matrix, sizes, out } => {
                let sizes = match sizes {
                    Some(s) => Some(
                        s.split(',')
                            .map(|p| p.trim().parse::<f64>().context("sizes must be numbers"))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                    None => None,
                };
                AnalyzeConfig::Slopes { variant_matrix, base_matrix, sizes, out }
            }
            AnalyzeOp::Correlate { slopes, projections, component, out } => {
                AnalyzeConfig::Correlate { slopes, projections, component, out }
            }
        })
    }
}

#[derive(Args)]
struct ReportArgs {
    /// Root directory scanned recursively for report JSON files.
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ReportArgs {
    fn resolve(self) -> Result<ReportConfig> {
        let mut cfg = ReportConfig::default();
        override_with!(cfg.dir, self.dir);
        override_with!(cfg.out, self.out.map(Some));
        Ok(cfg)
    }
}
