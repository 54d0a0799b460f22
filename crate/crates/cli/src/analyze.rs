use std::path::{Path, PathBuf};

use analysis::{
    improvement_slopes, pca, pearson, sizes_from_labels, ward_cluster, AccuracyMatrix,
};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;
use crate::run_dir;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum AnalyzeConfig {
    Cluster {
        matrix: PathBuf,
        k: Option<usize>,
        out: Option<PathBuf>,
    },
    Pca {
        matrix: PathBuf,
        k: usize,
        out: Option<PathBuf>,
    },
    Slopes {
        variant_matrix: PathBuf,
        base_matrix: PathBuf,
        sizes: Option<Vec<f64>>,
        out: Option<PathBuf>,
    },
    Correlate {
        slopes: PathBuf,
        projections: PathBuf,
        component: usize,
        out: Option<PathBuf>,
    },
}

pub fn run_analyze(cfg: AnalyzeConfig) -> Result<RunManifest> {
    let mut manifest = RunManifest::new("analyze", &cfg, 0);
    match cfg {
        AnalyzeConfig::Cluster { ref matrix, k, ref out } => {
            let m = AccuracyMatrix::from_csv(matrix)?;
            let out = run_dir(out, "analyze-cluster")?;
            manifest.add_input(matrix)?;
            let dendro = ward_cluster(&m)?;
            let dpath = out.join("dendrogram.json");
            dendro.write_json(&dpath)?;
            manifest.add_output(&out, &dpath)?;
            if let Some(k) = k {
                if k < 1 || k > dendro.n_leaves {
                    bail!("cannot cut {} leaves into {k} clusters", dendro.n_leaves);
                }
                let assignment = dendro.cut(k);
                let cpath = out.join(format!("clusters-k{k}.csv"));
                let mut w = csv::Writer::from_path(&cpath)?;
                w.write_record(["task", "cluster"])?;
                for (label, c) in m.row_labels().iter().zip(&assignment) {
                    w.write_record([label.as_str(), &c.to_string()])?;
                }
                w.flush()?;
                manifest.add_output(&out, &cpath)?;
            }
            println!("{} merges -> {}", dendro.merges.len(), dpath.display());
            manifest.write(&out)?;
        }
        AnalyzeConfig::Pca { ref matrix, k, ref out } => {
            let m = AccuracyMatrix::from_csv(matrix)?;
            let out = run_dir(out, "analyze-pca")?;
            manifest.add_input(matrix)?;
            let p = pca(&m, k)?;

            let pc_names: Vec<String> = (1..=k).map(|i| format!("pc{i}")).collect();

            let proj = out.join("projections.csv");
            write_table_csv(&proj, "task", &pc_names, m.row_labels(), &p.projections)?;
            manifest.add_output(&out, &proj)?;

            let comp = out.join("components.csv");
            write_table_csv(&comp, "component", m.col_labels(), &pc_names, &p.components)?;
            manifest.add_output(&out, &comp)?;

            let expl = out.join("explained.csv");
            let mut w = csv::Writer::from_path(&expl)?;
            w.write_record(["component", "variance_ratio"])?;
            for (i, ratio) in p.explained.iter().enumerate() {
                w.write_record([format!("pc{}", i + 1), ratio.to_string()])?;
            }
            w.flush()?;
            manifest.add_output(&out, &expl)?;
            println!(
                "explained variance: {:?}",
                p.explained.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>()
            );
            manifest.write(&out)?;
        }
        AnalyzeConfig::Slopes { ref variant_matrix, ref base_matrix, ref sizes, ref out } => {
            let variant = AccuracyMatrix::from_csv(variant_matrix)?;
            let base = AccuracyMatrix::from_csv(base_matrix)?;
            let sizes = match sizes {
                Some(s) => s.clone(),
                None => sizes_from_labels(&variant)?,
            };
            let out = run_dir(out, "analyze-slopes")?;
            manifest.add_input(variant_matrix)?;
            manifest.add_input(base_matrix)?;
            let slopes = improvement_slopes(&variant, &base, &sizes)?;
            let path = out.join("slopes.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["task", "slope"])?;
            for (label, slope) in variant.row_labels().iter().zip(&slopes) {
                w.write_record([label.as_str(), &slope.to_string()])?;
            }
            w.flush()?;
            manifest.add_output(&out, &path)?;
            println!("{} slopes -> {}", slopes.len(), path.display());
            manifest.write(&out)?;
        }
        AnalyzeConfig::Correlate { ref slopes, ref projections, component, ref out } => {
            let out = run_dir(out, format!("analyze-correlate-pc{component}").as_str())?;
            manifest.add_input(slopes)?;
            manifest.add_input(projections)?;
            let slope_rows = read_label_value_csv(slopes, 1)?;
            let proj_rows = read_label_value_csv(projections, component)?;

            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (label, slope) in &slope_rows {
                let Some((_, proj)) = proj_rows.iter().find(|(l, _)| l == label) else {
                    bail!("row `{label}` missing from {}", projections.display());
                };
                xs.push(*proj);
                ys.push(*slope);
            }
            let (r, p) = pearson(&xs, &ys)?;

            #[derive(Serialize)]
            struct Correlation {
                component: usize,
                n: usize,
                r: f64,
                p: f64,
            }
            let path = out.join("correlation.json");
            let file = std::fs::File::create(&path)?;
            serde_json::to_writer_pretty(
                std::io::BufWriter::new(file),
                &Correlation { component, n: xs.len(), r, p },
            )?;
            manifest.add_output(&out, &path)?;
            println!("pc{component} vs slopes: r = {r:.4}, p = {p:.2e} (n = {})", xs.len());
            manifest.write(&out)?;
        }
    }
    Ok(manifest)
}

fn write_table_csv(
    path: &Path,
    key: &str,
    columns: &[String],
    labels: &[String],
    rows: &[Vec<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![key.to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header)?;
    for (label, row) in labels.iter().zip(rows) {
        let mut record = vec![label.clone()];
        record.extend(row.iter().map(f64::to_string));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads (first column, numeric column at `value_col`) pairs, skipping the
/// header row.
fn read_label_value_csv(path: &Path, value_col: usize) -> Result<Vec<(String, f64)>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let label = record.get(0).unwrap_or_default().to_string();
        let field = record
            .get(value_col)
            .with_context(|| format!("{} has no column {value_col}", path.display()))?;
        rows.push((label, field.trim().parse::<f64>()?));
    }
    Ok(rows)
}
