//! Few-shot compositional fine-tuning: after pre-training on two tasks whose
//! rules compose into a third, everything is frozen except the layer that
//! combines elementary relations and the decision layer, then the model sees
//! ten samples per category of the composed task.

use std::time::Instant;

use gamr::{snapshot, Gamr, GamrConfig, Model};
use layers::{Adam, LayersError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use svrt_gen::{gen_task_sample, sample_seed, Dataset, Split, TaskSpec};
use tensor::{Tape, Tensor};

use crate::config::{config_hash, TrainConfig};
use crate::data::{images_tensor, SvrtData};
use crate::train::evaluate_svrt;
use crate::HarnessError;

/// (x, y, z): pre-train on x and y, compose into z.
pub const TRIPLETS: [(u32, u32, u32); 2] = [(15, 1, 10), (21, 19, 25)];

/// Pre-training pair whose rules do not compose into any supported target;
/// fine-tuning from it should stay at chance.
pub const CONTROL_PAIR: (u32, u32) = (5, 22);

/// Names of the parameters that stay trainable during fine-tuning: the
/// second relational layer and the decision head.
pub const TRAINABLE: [&str; 4] = ["rel2.w", "rel2.b", "f_phi.w", "f_phi.b"];

pub fn validate_triplet(x: u32, y: u32, z: u32) -> Result<(), HarnessError> {
    if TRIPLETS.contains(&(x, y, z)) {
        Ok(())
    } else {
        Err(HarnessError::UnsupportedTriplet(x, y, z))
    }
}

/// The composed task's few-shot training set.
#[derive(Debug, Clone)]
pub struct FewShot {
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
    pub size: usize,
}

impl FewShot {
    /// Draws `per_category` fresh samples of each category from a seed
    /// stream disjoint from any dataset split stream.
    pub fn from_task(
        task: u32,
        per_category: usize,
        seed: u64,
        size: usize,
    ) -> Result<FewShot, HarnessError> {
        let spec = TaskSpec::new(task)?;
        let mut images = Vec::with_capacity(2 * per_category);
        let mut labels = Vec::with_capacity(2 * per_category);
        for i in 0..2 * per_category {
            let category = (i % 2) as u8;
            let sample =
                gen_task_sample(&spec, category, sample_seed(seed ^ 0x5eed, Split::Train, i), size)?;
            images.push(sample.image);
            labels.push(sample.label);
        }
        Ok(FewShot { images, labels, size })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Stitches two tasks into one pre-training set (labels keep their shared
/// polarity, so one head serves both).
pub fn merge_for_pretrain(a: SvrtData, b: SvrtData) -> SvrtData {
    let merge = |mut x: Dataset, y: Dataset| -> Dataset {
        x.labels.extend(y.labels);
        x.images.extend(y.images);
        x
    };
    let mut hashes = a.hashes;
    hashes.extend(b.hashes);
    SvrtData {
        task: a.task,
        label: format!("{}+{:02}", a.label, b.task),
        train: merge(a.train, b.train),
        val: merge(a.val, b.val),
        test: merge(a.test, b.test),
        hashes,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComposeReport {
    /// `finetune`, `scratch`, or `control`.
    pub mode: String,
    pub task: String,
    pub seed: u64,
    pub trainable_params: usize,
    pub frozen_params: usize,
    pub epochs_run: usize,
    pub final_train_loss: f64,
    pub test_accuracy: f64,
    pub wall_secs: f64,
    pub config_hash: String,
}

fn few_shot_fit(
    model: &Model,
    trainable: Vec<(String, Tensor)>,
    few: &FewShot,
    cfg: &TrainConfig,
    task_label: &str,
) -> Result<(usize, f64), HarnessError> {
    let mut adam = Adam::new(trainable, cfg.lr, cfg.weight_decay);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..few.len()).collect();
    let batch = cfg.batch_size.min(few.len());
    let mut last_loss = f64::NAN;
    for _ in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(batch) {
            let tape = Tape::new();
            let x = images_tensor(&few.images, chunk, few.size);
            let logits = model.forward(&tape, &x);
            let t: Vec<f64> = chunk.iter().map(|&i| few.labels[i] as f64).collect();
            let loss = tape.bce_with_logits(&logits, &t);
            let l = loss.to_vec()[0];
            if !l.is_finite() {
                return Err(HarnessError::Divergence {
                    variant: "gamr".into(),
                    task: task_label.into(),
                    config: serde_json::to_string(cfg).expect("config serializes"),
                });
            }
            loss_sum += l * chunk.len() as f64;
            let grads = tape.backward(&loss);
            adam.step(&grads).map_err(|e| match e {
                LayersError::NonFiniteGradient { .. } => HarnessError::Divergence {
                    variant: "gamr".into(),
                    task: task_label.into(),
                    config: serde_json::to_string(cfg).expect("config serializes"),
                },
                other => HarnessError::Layers(other),
            })?;
        }
        last_loss = loss_sum / few.len() as f64;
    }
    Ok((cfg.max_epochs, last_loss))
}

/// Fine-tunes only the combination and decision layers of a pre-trained
/// model on the few-shot set, verifies every frozen parameter is bit-for-bit
/// unchanged, then evaluates once on the composed task's test split.
pub fn compositional_finetune(
    model: &Model,
    few: &FewShot,
    z_test: &Dataset,
    z_label: &str,
    cfg: &TrainConfig,
) -> Result<ComposeReport, HarnessError> {
    cfg.validate();
    let start = Instant::now();
    let params = model.params();
    let (trainable, frozen): (Vec<_>, Vec<_>) = params
        .into_iter()
        .partition(|(name, _)| TRAINABLE.contains(&name.as_str()));
    let frozen_before = snapshot(&frozen, 0);
    let trainable_params: usize = trainable.iter().map(|(_, t)| t.len()).sum();
    let frozen_params: usize = frozen.iter().map(|(_, t)| t.len()).sum();

    let (epochs_run, final_train_loss) = few_shot_fit(model, trainable, few, cfg, z_label)?;

    for (name, t) in &frozen {
        let saved = frozen_before.get(name).expect("snapshot holds every frozen tensor");
        if saved.data().as_ref() != t.data().as_ref() {
            return Err(HarnessError::FrozenLeak(name.clone()));
        }
    }
    let test_accuracy = evaluate_svrt(model, z_test);
    Ok(ComposeReport {
        mode: "finetune".into(),
        task: z_label.into(),
        seed: cfg.seed,
        trainable_params,
        frozen_params,
        epochs_run,
        final_train_loss,
        test_accuracy,
        wall_secs: start.elapsed().as_secs_f64(),
        config_hash: config_hash(cfg),
    })
}

/// Control: a fresh model trained end-to-end on the same few-shot samples.
pub fn scratch_control(
    gcfg: &GamrConfig,
    few: &FewShot,
    z_test: &Dataset,
    z_label: &str,
    cfg: &TrainConfig,
) -> Result<ComposeReport, HarnessError> {
    cfg.validate();
    let start = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let model = Model::Gamr(Gamr::new(&mut rng, gcfg, 1));
    let trainable = model.params();
    let trainable_params: usize = trainable.iter().map(|(_, t)| t.len()).sum();
    let (epochs_run, final_train_loss) = few_shot_fit(&model, trainable, few, cfg, z_label)?;
    let test_accuracy = evaluate_svrt(&model, z_test);
    Ok(ComposeReport {
        mode: "scratch".into(),
        task: z_label.into(),
        seed: cfg.seed,
        trainable_params,
        frozen_params: 0,
        epochs_run,
        final_train_loss,
        test_accuracy,
        wall_secs: start.elapsed().as_secs_f64(),
        config_hash: config_hash(cfg),
    })
}
