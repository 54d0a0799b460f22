use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use harness::{
    ablate, compositional_finetune, load_svrt, scratch_control, validate_triplet,
    zero_shot_transfer, ComposeReport, FewShot, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::generate::record_data_inputs;
use crate::manifest::RunManifest;
use crate::model_io::{load_model, save_model};
use crate::run_dir;
use crate::training::{fit_resolution, preset_config};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferConfig {
    pub model: PathBuf,
    pub data: PathBuf,
    pub train_task: u32,
    pub test_task: u32,
    pub out: Option<PathBuf>,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            model: PathBuf::new(),
            data: PathBuf::new(),
            train_task: 0,
            test_task: 0,
            out: None,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TransferResult {
    pub train_task: u32,
    pub test_task: u32,
    pub n: usize,
    pub accuracy: f64,
}

pub fn run_transfer(cfg: TransferConfig) -> Result<RunManifest> {
    let (model, _) = load_model(&cfg.model)?;
    let data = load_svrt(&cfg.data, cfg.test_task)?;
    let accuracy =
        zero_shot_transfer(model.single()?, cfg.train_task, cfg.test_task, &data.test)?;

    let out = run_dir(
        &cfg.out,
        &format!("transfer-{:02}-to-{:02}", cfg.train_task, cfg.test_task),
    )?;
    let mut manifest = RunManifest::new("transfer", &cfg, 0);
    manifest.add_input(&cfg.model.join(crate::model_io::WEIGHTS_FILE))?;
    record_data_inputs(&mut manifest, &cfg.data)?;

    let result = TransferResult {
        train_task: cfg.train_task,
        test_task: cfg.test_task,
        n: data.test.labels.len(),
        accuracy,
    };
    let path = out.join("transfer.json");
    let file = std::fs::File::create(&path).context("writing transfer result")?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &result)?;
    manifest.add_output(&out, &path)?;
    manifest.write(&out)?;
    println!(
        "zero-shot {:02} -> {:02}: accuracy {:.4}",
        cfg.train_task, cfg.test_task, accuracy
    );
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ComposeConfig {
    pub model: PathBuf,
    pub data: PathBuf,
    /// Composed task first, then the two elementary tasks the pre-trained
    /// model saw.
    pub triplet: (u32, u32, u32),
    pub samples_per_category: usize,
    pub scratch: bool,
    pub train: TrainConfig,
    pub out: Option<PathBuf>,
}

impl Default for ComposeConfig {
    fn default() -> Self {
        ComposeConfig {
            model: PathBuf::new(),
            data: PathBuf::new(),
            triplet: (0, 0, 0),
            samples_per_category: 10,
            scratch: false,
            train: TrainConfig { max_epochs: 100, ..TrainConfig::default() },
            out: None,
        }
    }
}

pub fn run_compose(cfg: ComposeConfig) -> Result<RunManifest> {
    let (z, a, b) = cfg.triplet;
    validate_triplet(z, a, b)?;
    let (model, spec) = load_model(&cfg.model)?;
    let z_data = load_svrt(&cfg.data, z)?;
    let few = FewShot::from_task(
        z,
        cfg.samples_per_category,
        cfg.train.seed,
        spec.config.input_resolution,
    )?;

    let out = run_dir(&cfg.out, &format!("compose-{:02}-s{}", z, cfg.train.seed))?;
    let mut manifest = RunManifest::new("compose", &cfg, cfg.train.seed);
    manifest.add_input(&cfg.model.join(crate::model_io::WEIGHTS_FILE))?;
    record_data_inputs(&mut manifest, &cfg.data)?;

    let report =
        compositional_finetune(model.single()?, &few, &z_data.test, &z_data.label, &cfg.train)?;
    write_compose_report(&out, "finetune.json", &report, &mut manifest)?;
    println!(
        "fine-tune on {} ({} trainable / {} frozen): test {:.4}",
        z_data.label, report.trainable_params, report.frozen_params, report.test_accuracy
    );
    for f in save_model(&out, &model.params(), &spec, report.epochs_run as u64)? {
        manifest.add_output(&out, &f)?;
    }

    if cfg.scratch {
        let control =
            scratch_control(&spec.config, &few, &z_data.test, &z_data.label, &cfg.train)?;
        write_compose_report(&out, "scratch.json", &control, &mut manifest)?;
        println!("scratch control: test {:.4}", control.test_accuracy);
    }
    manifest.write(&out)?;
    Ok(manifest)
}

fn write_compose_report(
    out: &std::path::Path,
    name: &str,
    report: &ComposeReport,
    manifest: &mut RunManifest,
) -> Result<()> {
    let path = out.join(name);
    let file = std::fs::File::create(&path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), report)?;
    manifest.add_volatile(out, &path);
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AblateConfig {
    pub data: PathBuf,
    pub tasks: Vec<u32>,
    /// Component names as in the reports; empty means every component.
    pub components: Vec<String>,
    pub preset: String,
    pub jobs: usize,
    pub train: TrainConfig,
    pub out: Option<PathBuf>,
}

impl Default for AblateConfig {
    fn default() -> Self {
        AblateConfig {
            data: PathBuf::new(),
            tasks: Vec::new(),
            components: Vec::new(),
            preset: "desk".into(),
            jobs: 1,
            train: TrainConfig::default(),
            out: None,
        }
    }
}

pub fn run_ablate(cfg: AblateConfig) -> Result<RunManifest> {
    if cfg.tasks.is_empty() {
        bail!("no tasks given: pass --tasks");
    }
    let components = if cfg.components.is_empty() {
        harness::ablation_components().iter().map(|(_, a)| *a).collect()
    } else {
        cfg.components
            .iter()
            .map(|name| {
                harness::parse_component(name)
                    .ok_or_else(|| anyhow::anyhow!("unknown component `{name}`"))
            })
            .collect::<Result<Vec<_>, _>>()?
    };

    let datasets = cfg
        .tasks
        .iter()
        .map(|&t| load_svrt(&cfg.data, t))
        .collect::<Result<Vec<_>, _>>()?;
    let resolution = datasets[0].train.height as usize;
    let gcfg = fit_resolution(preset_config(&cfg.preset)?, resolution)?;

    let out = run_dir(&cfg.out, &format!("ablate-s{}", cfg.train.seed))?;
    let mut manifest = RunManifest::new("ablate", &cfg, cfg.train.seed);
    record_data_inputs(&mut manifest, &cfg.data)?;

    let reports = ablate(&components, &datasets, &gcfg, &cfg.train, cfg.jobs)?;
    for r in &reports {
        let path = out.join(format!("report-{}-{}.json", r.variant, r.task));
        r.write_json(&path)?;
        manifest.add_volatile(&out, &path);
        println!("{} on {}: test {:.4}", r.variant, r.task, r.test_accuracy);
    }
    let csv = out.join("runs.csv");
    if csv.exists() {
        std::fs::remove_file(&csv)?;
    }
    harness::report::append_csv(&csv, &reports)?;
    manifest.add_volatile(&out, &csv);
    manifest.write(&out)?;
    Ok(manifest)
}
