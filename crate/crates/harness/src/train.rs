//! The shared training loop and the per-protocol entry points.

use std::time::Instant;

use gamr::{build_variant, restore, snapshot, ArtModel, GamrConfig, Model, VariantKind};
use layers::{Adam, Checkpoint, LayersError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use svrt_gen::Dataset;
use tensor::{Tape, Tensor};

use crate::config::{config_hash, grid, TrainConfig};
use crate::data::{images_tensor, ArtData, EpisodeSet, SvrtData};
use crate::parallel::parallel_map;
use crate::report::{EpochMetrics, Report};
use crate::HarnessError;

/// Pair-expanding architectures materialize `B·N²` rows per forward pass;
/// capping their batches keeps memory flat without changing the estimator.
const RN_BATCH_CAP: usize = 4;
const EVAL_BATCH: usize = 64;

fn effective_batch(model: &Model, requested: usize) -> usize {
    match model {
        Model::Rn(_) => requested.min(RN_BATCH_CAP),
        _ => requested,
    }
}

pub(crate) struct FitTrace {
    pub epochs: Vec<EpochMetrics>,
    pub stopped_early: bool,
    pub best_epoch: usize,
    pub best_val: f64,
}

/// Epoch loop shared by every protocol: shuffled minibatches, one Adam step
/// per batch, best-validation snapshot, early stop at the epoch boundary.
pub(crate) fn fit(
    params: &[(String, Tensor)],
    n_train: usize,
    batch: usize,
    cfg: &TrainConfig,
    mut step: impl FnMut(&Tape, &[usize]) -> (Tensor, usize),
    mut validate: impl FnMut() -> f64,
    diverged: impl Fn() -> HarnessError,
) -> Result<(FitTrace, Checkpoint), HarnessError> {
    let mut adam = Adam::new(params.to_vec(), cfg.lr, cfg.weight_decay);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut epochs = Vec::new();
    let mut stopped_early = false;
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut best_ckpt = snapshot(params, 0);
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(batch) {
            let tape = Tape::new();
            let (loss, ok) = step(&tape, chunk);
            let l = loss.to_vec()[0];
            if !l.is_finite() {
                return Err(diverged());
            }
            loss_sum += l * chunk.len() as f64;
            correct += ok;
            let grads = tape.backward(&loss);
            adam.step(&grads).map_err(|e| match e {
                LayersError::NonFiniteGradient { .. } => diverged(),
                other => HarnessError::Layers(other),
            })?;
        }
        let val_acc = validate();
        epochs.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / n_train as f64,
            train_acc: correct as f64 / n_train as f64,
            val_acc,
        });
        if val_acc > best.1 {
            best = (epoch, val_acc);
            best_ckpt = snapshot(params, epoch as u64);
        }
        if val_acc >= cfg.early_stop {
            stopped_early = true;
            break;
        }
    }
    let trace = FitTrace {
        epochs,
        stopped_early,
        best_epoch: best.0,
        best_val: best.1,
    };
    Ok((trace, best_ckpt))
}

/// Positive iff the single logit clears 0.5 post-sigmoid, i.e. is positive.
pub fn svrt_predictions(model: &Model, ds: &Dataset) -> Vec<u8> {
    let size = ds.width as usize;
    let batch = effective_batch(model, EVAL_BATCH);
    let indices: Vec<usize> = (0..ds.len()).collect();
    let mut preds = Vec::with_capacity(ds.len());
    for chunk in indices.chunks(batch) {
        let tape = Tape::new();
        let x = images_tensor(&ds.images, chunk, size);
        let logits = model.forward(&tape, &x);
        preds.extend(logits.to_vec().iter().map(|&v| u8::from(v > 0.0)));
    }
    preds
}

pub fn evaluate_svrt(model: &Model, ds: &Dataset) -> f64 {
    let preds = svrt_predictions(model, ds);
    let correct = preds.iter().zip(&ds.labels).filter(|(p, l)| p == l).count();
    correct as f64 / ds.len().max(1) as f64
}

/// Trains on the train split, early-stops on the validation split, restores
/// the best-validation weights, and only then touches the test split.
pub fn train_svrt(
    model: &Model,
    variant: &str,
    data: &SvrtData,
    cfg: &TrainConfig,
) -> Result<Report, HarnessError> {
    cfg.validate();
    let start = Instant::now();
    let size = data.size();
    let params = model.params();
    let batch = effective_batch(model, cfg.batch_size);
    let targets: Vec<f64> = data.train.labels.iter().map(|&l| l as f64).collect();
    let diverged = || HarnessError::Divergence {
        variant: variant.to_string(),
        task: data.label.clone(),
        config: serde_json::to_string(cfg).expect("config serializes"),
    };
    let (trace, best) = fit(
        &params,
        data.train.len(),
        batch,
        cfg,
        |tape, idx| {
            let x = images_tensor(&data.train.images, idx, size);
            let logits = model.forward(tape, &x);
            let t: Vec<f64> = idx.iter().map(|&i| targets[i]).collect();
            let loss = tape.bce_with_logits(&logits, &t);
            let ok = logits
                .to_vec()
                .iter()
                .zip(&t)
                .filter(|(&l, &y)| (l > 0.0) == (y > 0.5))
                .count();
            (loss, ok)
        },
        || evaluate_svrt(model, &data.val),
        diverged,
    )?;
    restore(&params, &best)?;
    let test_accuracy = evaluate_svrt(model, &data.test);
    Ok(Report {
        variant: variant.to_string(),
        task: data.label.clone(),
        seed: cfg.seed,
        train_samples: data.train.labels.len(),
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
        epochs: trace.epochs,
        stopped_early: trace.stopped_early,
        best_epoch: trace.best_epoch,
        best_val_acc: trace.best_val,
        test_accuracy,
        wall_secs: start.elapsed().as_secs_f64(),
        config_hash: config_hash(cfg),
        data_hashes: data.hashes.clone(),
    })
}

/// Argmax over choice logits; single-logit episodes reduce to the binary rule.
pub fn art_predictions(model: &ArtModel, set: &EpisodeSet, episodes: &[usize]) -> Vec<u8> {
    let k = model.n_choices();
    let mut preds = Vec::with_capacity(episodes.len());
    for chunk in episodes.chunks(EVAL_BATCH) {
        let tape = Tape::new();
        let stimuli = set.stimuli_tensors(chunk);
        let logits = model.forward(&tape, &stimuli).to_vec();
        if k == 1 {
            preds.extend(logits.iter().map(|&v| u8::from(v > 0.0)));
        } else {
            for row in logits.chunks(k) {
                let mut arg = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[arg] {
                        arg = j;
                    }
                }
                preds.push(arg as u8);
            }
        }
    }
    preds
}

pub fn evaluate_art_subset(model: &ArtModel, set: &EpisodeSet, episodes: &[usize]) -> f64 {
    let preds = art_predictions(model, set, episodes);
    let correct = preds
        .iter()
        .zip(episodes)
        .filter(|(p, &e)| **p == set.answers[e])
        .count();
    correct as f64 / episodes.len().max(1) as f64
}

pub fn evaluate_art(model: &ArtModel, set: &EpisodeSet) -> f64 {
    let all: Vec<usize> = (0..set.episode_count()).collect();
    evaluate_art_subset(model, set, &all)
}

/// Fraction of training episodes held out for early stopping (the episode
/// sets ship as train/test pairs only).
const ART_VAL_FRACTION: f64 = 0.2;

pub fn train_art(model: &ArtModel, data: &ArtData, cfg: &TrainConfig) -> Result<Report, HarnessError> {
    cfg.validate();
    let start = Instant::now();
    let n = data.train.episode_count();
    let n_val = ((n as f64 * ART_VAL_FRACTION) as usize).clamp(1, n.saturating_sub(1).max(1));
    let train_idx: Vec<usize> = (0..n - n_val).collect();
    let val_idx: Vec<usize> = (n - n_val..n).collect();
    let params = model.params();
    let k = model.n_choices();
    let task_name = format!("art-{}-m{:02}", data.task, data.m);
    let diverged = || HarnessError::Divergence {
        variant: "gamr".to_string(),
        task: task_name.clone(),
        config: serde_json::to_string(cfg).expect("config serializes"),
    };
    let (trace, best) = fit(
        &params,
        train_idx.len(),
        cfg.batch_size,
        cfg,
        |tape, idx| {
            let episodes: Vec<usize> = idx.iter().map(|&i| train_idx[i]).collect();
            let stimuli = data.train.stimuli_tensors(&episodes);
            let logits = model.forward(tape, &stimuli);
            let answers: Vec<u8> = episodes.iter().map(|&e| data.train.answers[e]).collect();
            let v = logits.to_vec();
            let (loss, ok) = if k == 1 {
                let t: Vec<f64> = answers.iter().map(|&a| a as f64).collect();
                let ok = v.iter().zip(&t).filter(|(&l, &y)| (l > 0.0) == (y > 0.5)).count();
                (tape.bce_with_logits(&logits, &t), ok)
            } else {
                let classes: Vec<usize> = answers.iter().map(|&a| a as usize).collect();
                let ok = v
                    .chunks(k)
                    .zip(&classes)
                    .filter(|(row, &c)| row.iter().all(|&x| x <= row[c]))
                    .count();
                (tape.cross_entropy_logits(&logits, &classes), ok)
            };
            (loss, ok)
        },
        || evaluate_art_subset(model, &data.train, &val_idx),
        diverged,
    )?;
    restore(&params, &best)?;
    let test_accuracy = evaluate_art(model, &data.test);
    Ok(Report {
        variant: "gamr".to_string(),
        task: task_name,
        seed: cfg.seed,
        train_samples: train_idx.len(),
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
        epochs: trace.epochs,
        stopped_early: trace.stopped_early,
        best_epoch: trace.best_epoch,
        best_val_acc: trace.best_val,
        test_accuracy,
        wall_secs: start.elapsed().as_secs_f64(),
        config_hash: config_hash(cfg),
        data_hashes: data.hashes.clone(),
    })
}

/// Trains one fresh model per sweep cell and returns the best-validation
/// report along with the full sweep.
pub fn sweep_svrt(
    kind: VariantKind,
    gcfg: &GamrConfig,
    data: &SvrtData,
    base: &TrainConfig,
    workers: usize,
) -> Result<(Report, Vec<Report>), HarnessError> {
    let runs = parallel_map(grid(), workers, &|(lr, wd)| {
        let mut rng = ChaCha12Rng::seed_from_u64(base.seed);
        let model = build_variant(kind, &mut rng, gcfg, 1);
        train_svrt(&model, &kind.to_string(), data, &base.with_cell(lr, wd))
    });
    let mut reports = Vec::with_capacity(runs.len());
    for r in runs {
        reports.push(r?);
    }
    let best = reports
        .iter()
        .max_by(|a, b| a.best_val_acc.total_cmp(&b.best_val_acc))
        .expect("grid is non-empty")
        .clone();
    Ok((best, reports))
}
