use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gamr::{build_variant, ArtModel, GamrConfig, VariantKind};
use harness::{
    evaluate_art, evaluate_svrt, load_art, load_svrt, merge_for_pretrain, sweep_svrt, train_art,
    train_svrt, Report, TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::generate::record_data_inputs;
use crate::manifest::RunManifest;
use crate::model_io::{load_model, save_model, LoadedModel, ModelSpec};
use crate::run_dir;

/// Which dataset a training or evaluation run draws from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Svrt { task: u32, merge: Option<u32> },
    Art { task: String, m: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainRunConfig {
    pub data: PathBuf,
    pub source: Option<DataSource>,
    pub variant: String,
    pub preset: String,
    pub time_steps: Option<usize>,
    pub sweep: bool,
    pub jobs: usize,
    pub train: TrainConfig,
    pub out: Option<PathBuf>,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        TrainRunConfig {
            data: PathBuf::new(),
            source: None,
            variant: "gamr".into(),
            preset: "desk".into(),
            time_steps: None,
            sweep: false,
            jobs: 1,
            train: TrainConfig::default(),
            out: None,
        }
    }
}

pub fn preset_config(name: &str) -> Result<GamrConfig> {
    match name {
        "tiny" => Ok(GamrConfig::tiny()),
        "desk" => Ok(GamrConfig::desk()),
        "full" => Ok(GamrConfig::full()),
        other => bail!("unknown preset `{other}` (expected tiny, desk, or full)"),
    }
}

/// Rescales a preset to a different input resolution, keeping the stride
/// plan and recomputing the attention grid.
pub fn fit_resolution(mut g: GamrConfig, resolution: usize) -> Result<GamrConfig> {
    let stride: usize = g.stem_stride * g.block_strides.iter().product::<usize>();
    if resolution % stride != 0 {
        bail!("input resolution {resolution} is not divisible by the encoder stride {stride}");
    }
    g.input_resolution = resolution;
    g.grid = resolution / stride;
    Ok(g)
}

fn model_config(cfg: &TrainRunConfig, resolution: usize, episode: bool) -> Result<GamrConfig> {
    let mut g = fit_resolution(preset_config(&cfg.preset)?, resolution)?;
    if let Some(t) = cfg.time_steps {
        g.time_steps = t;
    } else if episode {
        g = g.with_time_steps(6);
    }
    Ok(g)
}

pub fn run_train(cfg: TrainRunConfig) -> Result<RunManifest> {
    match cfg.source.clone() {
        Some(DataSource::Svrt { task, merge }) => train_on_svrt(cfg, task, merge),
        Some(DataSource::Art { task, m }) => train_on_art(cfg, &task, m),
        None => bail!("no dataset given: pass --task or --art-task"),
    }
}

fn train_on_svrt(cfg: TrainRunConfig, task: u32, merge: Option<u32>) -> Result<RunManifest> {
    let mut data = load_svrt(&cfg.data, task)?;
    if let Some(second) = merge {
        data = merge_for_pretrain(data, load_svrt(&cfg.data, second)?);
    }
    let resolution = data.train.height as usize;
    let gcfg = model_config(&cfg, resolution, false)?;
    let kind: VariantKind = cfg.variant.parse().map_err(|e: String| anyhow::anyhow!(e))?;

    let out = run_dir(&cfg.out, &format!("train-{}-{}-s{}", kind, data.label, cfg.train.seed))?;
    let mut manifest = RunManifest::new("train", &cfg, cfg.train.seed);
    record_data_inputs(&mut manifest, &cfg.data)?;

    if cfg.sweep {
        let (best, all) = sweep_svrt(kind, &gcfg, &data, &cfg.train, cfg.jobs)?;
        write_reports(&out, &all, &mut manifest)?;
        println!(
            "best cell: lr {} wd {} -> val {:.3}, test {:.3}",
            best.lr, best.weight_decay, best.best_val_acc, best.test_accuracy
        );
    } else {
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.train.seed);
        let model = build_variant(kind, &mut rng, &gcfg, 1);
        let report = train_svrt(&model, &kind.to_string(), &data, &cfg.train)?;
        let spec = ModelSpec {
            variant: kind.to_string(),
            config: gcfg,
            heads: 1,
            episode: false,
        };
        for f in save_model(&out, &model.params(), &spec, report.epochs_run() as u64)? {
            manifest.add_output(&out, &f)?;
        }
        write_reports(&out, std::slice::from_ref(&report), &mut manifest)?;
        println!(
            "{} on {}: best val {:.3} (epoch {}), test {:.3}",
            kind, data.label, report.best_val_acc, report.best_epoch, report.test_accuracy
        );
    }
    manifest.write(&out)?;
    Ok(manifest)
}

fn train_on_art(cfg: TrainRunConfig, task: &str, m: usize) -> Result<RunManifest> {
    let task: art_gen::ArtTask =
        task.parse().map_err(|e: art_gen::ArtError| anyhow::anyhow!(e))?;
    if cfg.sweep {
        bail!("--sweep applies to single-image tasks only");
    }
    if cfg.variant != "gamr" {
        bail!("episode training supports the gamr variant only");
    }
    let data = load_art(&cfg.data, task, m)?;
    let gcfg = model_config(&cfg, data.train.size, true)?;

    let out = run_dir(&cfg.out, &format!("train-art-{}-m{:02}-s{}", task, m, cfg.train.seed))?;
    let mut manifest = RunManifest::new("train", &cfg, cfg.train.seed);
    record_data_inputs(&mut manifest, &cfg.data)?;

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.train.seed);
    let model = ArtModel::new(&mut rng, &gcfg, data.train.stimuli_per_episode);
    let report = train_art(&model, &data, &cfg.train)?;
    let spec = ModelSpec {
        variant: "gamr".into(),
        config: gcfg,
        heads: data.train.stimuli_per_episode,
        episode: true,
    };
    for f in save_model(&out, &model.params(), &spec, report.epochs_run() as u64)? {
        manifest.add_output(&out, &f)?;
    }
    write_reports(&out, std::slice::from_ref(&report), &mut manifest)?;
    println!(
        "gamr on {}: best val {:.3} (epoch {}), test {:.3}",
        report.task, report.best_val_acc, report.best_epoch, report.test_accuracy
    );
    manifest.write(&out)?;
    Ok(manifest)
}

/// Single reports land in `report.json`; sweeps get one file per grid cell.
/// Reports carry wall-clock timings, so they are recorded as volatile.
fn write_reports(out: &Path, reports: &[Report], manifest: &mut RunManifest) -> Result<()> {
    for r in reports {
        let name = if reports.len() == 1 {
            "report.json".to_string()
        } else {
            format!("report-lr{}-wd{}.json", r.lr, r.weight_decay)
        };
        let path = out.join(name);
        r.write_json(&path)?;
        manifest.add_volatile(out, &path);
    }
    let csv = out.join("runs.csv");
    if csv.exists() {
        std::fs::remove_file(&csv)?;
    }
    harness::report::append_csv(&csv, reports)?;
    manifest.add_volatile(out, &csv);
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub model: PathBuf,
    pub data: PathBuf,
    pub source: Option<DataSource>,
    pub split: String,
    pub out: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            model: PathBuf::new(),
            data: PathBuf::new(),
            source: None,
            split: "test".into(),
            out: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalResult {
    pub model: String,
    pub task: String,
    pub split: String,
    pub n: usize,
    pub accuracy: f64,
}

pub fn run_eval(cfg: EvalConfig) -> Result<RunManifest> {
    let (model, spec) = load_model(&cfg.model)?;
    let (task_label, n, accuracy) = match cfg.source.clone() {
        Some(DataSource::Svrt { task, merge: _ }) => {
            let data = load_svrt(&cfg.data, task)?;
            let ds = match cfg.split.as_str() {
                "train" => &data.train,
                "val" => &data.val,
                "test" => &data.test,
                other => bail!("unknown split `{other}`"),
            };
            (data.label.clone(), ds.labels.len(), evaluate_svrt(model.single()?, ds))
        }
        Some(DataSource::Art { task, m }) => {
            let task: art_gen::ArtTask =
                task.parse().map_err(|e: art_gen::ArtError| anyhow::anyhow!(e))?;
            let data = load_art(&cfg.data, task, m)?;
            let set = match cfg.split.as_str() {
                "train" => &data.train,
                "test" => &data.test,
                other => bail!("episode datasets have train/test splits, not `{other}`"),
            };
            let label = format!("art-{}-m{:02}", task, m);
            (label, set.episode_count(), evaluate_art(model.episode()?, set))
        }
        None => bail!("no dataset given: pass --task or --art-task"),
    };

    let out = run_dir(&cfg.out, &format!("eval-{}-{}", task_label, cfg.split))?;
    let mut manifest = RunManifest::new("eval", &cfg, 0);
    manifest.add_input(&cfg.model.join(crate::model_io::WEIGHTS_FILE))?;
    record_data_inputs(&mut manifest, &cfg.data)?;

    let result = EvalResult {
        model: spec.variant,
        task: task_label,
        split: cfg.split.clone(),
        n,
        accuracy,
    };
    let path = out.join("eval.json");
    let file = std::fs::File::create(&path).context("writing eval result")?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &result)?;
    manifest.add_output(&out, &path)?;
    manifest.write(&out)?;
    println!("{} {} {}: accuracy {:.4} over {}", result.model, result.task, result.split, accuracy, n);
    Ok(manifest)
}
