use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use harness::Report;
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::run_dir;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub dir: PathBuf,
    pub out: Option<PathBuf>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { dir: PathBuf::from("."), out: None }
    }
}

/// One aggregation cell: identical settings, varying seed.
#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey {
    task: String,
    variant: String,
    train_samples: usize,
    lr_bits: u64,
    wd_bits: u64,
}

pub fn run_report(cfg: ReportConfig) -> Result<RunManifest> {
    let mut files = Vec::new();
    collect_report_files(&cfg.dir, &mut files)?;
    if files.is_empty() {
        bail!("no report JSON files under {}", cfg.dir.display());
    }
    files.sort();

    let mut reports = Vec::new();
    let mut offenders = Vec::new();
    for f in &files {
        match Report::read_json(f) {
            Ok(r) => reports.push(r),
            Err(e) => offenders.push(format!("{}: {e}", f.display())),
        }
    }
    if !offenders.is_empty() {
        bail!("reports with mismatched schema:\n  {}", offenders.join("\n  "));
    }

    let out = run_dir(&cfg.out, "report")?;
    let mut manifest = RunManifest::new("report", &cfg, 0);
    for f in &files {
        manifest.add_input(f)?;
    }

    let merged = out.join("merged.csv");
    if merged.exists() {
        std::fs::remove_file(&merged)?;
    }
    harness::report::append_csv(&merged, &reports)?;
    manifest.add_output(&out, &merged)?;

    let mut groups: BTreeMap<GroupKey, Vec<&Report>> = BTreeMap::new();
    for r in &reports {
        groups
            .entry(GroupKey {
                task: r.task.clone(),
                variant: r.variant.clone(),
                train_samples: r.train_samples,
                lr_bits: r.lr.to_bits(),
                wd_bits: r.weight_decay.to_bits(),
            })
            .or_default()
            .push(r);
    }

    let summary = out.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary)?;
    w.write_record([
        "task",
        "variant",
        "train_samples",
        "lr",
        "weight_decay",
        "seeds",
        "mean_test_acc",
        "sd_test_acc",
    ])?;
    println!(
        "{:<14} {:<14} {:>8} {:>8} {:>6} {:>6} {:>9} {:>9}",
        "task", "variant", "samples", "lr", "wd", "seeds", "mean", "sd"
    );
    for (key, members) in &groups {
        let accs: Vec<f64> = members.iter().map(|r| r.test_accuracy).collect();
        let n = accs.len() as f64;
        let mean = accs.iter().sum::<f64>() / n;
        let sd = if accs.len() > 1 {
            (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let lr = f64::from_bits(key.lr_bits);
        let wd = f64::from_bits(key.wd_bits);
        w.write_record([
            key.task.clone(),
            key.variant.clone(),
            key.train_samples.to_string(),
            lr.to_string(),
            wd.to_string(),
            members.len().to_string(),
            mean.to_string(),
            sd.to_string(),
        ])?;
        println!(
            "{:<14} {:<14} {:>8} {:>8} {:>6} {:>6} {:>9.4} {:>9.4}",
            key.task, key.variant, key.train_samples, lr, wd, members.len(), mean, sd
        );
    }
    w.flush()?;
    manifest.add_output(&out, &summary)?;
    manifest.write(&out)?;
    Ok(manifest)
}

/// Gathers `report*.json` files recursively, skipping run manifests.
fn collect_report_files(dir: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
    {
        let path = entry?.path();
        if path.is_dir() {
            collect_report_files(&path, found)?;
        } else if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            if name.starts_with("report") && name.ends_with(".json") {
                found.push(path);
            }
        }
    }
    Ok(())
}
