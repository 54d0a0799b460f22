//! Comparison architectures sharing the convolutional backbone: an
//! all-pairs relational network, plain convolutional classifiers with and
//! without attention inserts, and string names for every trainable variant.

use std::fmt;
use std::str::FromStr;

use attention::{fbam_forward, sam_forward, MhaParams};
use layers::Linear;
use rand_chacha::ChaCha12Rng;
use tensor::{Axis, Tape, Tensor};

use crate::encoder::Encoder;
use crate::model::{Ablation, Gamr};
use crate::GamrConfig;

/// Every spatial location of the encoded grid is an object; all ordered pairs
/// flow through a shared first layer, are averaged, and summarized.
#[derive(Debug)]
pub struct RnModel {
    pub cfg: GamrConfig,
    encoder: Encoder,
    rel1: Linear,
    rel2: Linear,
    f_phi: Linear,
}

impl RnModel {
    pub fn new(rng: &mut ChaCha12Rng, cfg: &GamrConfig, n_out: usize) -> Self {
        RnModel {
            cfg: cfg.clone(),
            encoder: Encoder::new(rng, cfg),
            rel1: Linear::new(rng, 2 * cfg.feature_width, cfg.relational_hidden),
            rel2: Linear::new(rng, cfg.relational_hidden, cfg.relational_out),
            f_phi: Linear::new(rng, cfg.relational_out, n_out),
        }
    }

    pub fn pair_count(&self) -> usize {
        self.cfg.locations() * self.cfg.locations()
    }

    pub fn forward(&self, tape: &Tape, images: &Tensor) -> Tensor {
        let b = images.shape()[0];
        let (hw, f, hidden) =
            (self.cfg.locations(), self.cfg.feature_width, self.cfg.relational_hidden);
        let z = self.encoder.forward(tape, images, true);
        let flat = tape.reshape(&z, &[b * hw, f]);

        // rel1 on a concatenated pair [z_i ‖ z_j] splits into two half-width
        // maps; materializing only the per-object halves keeps the pair
        // tensor's construction to one broadcast add.
        let w_i = tape.slice(&self.rel1.weight, 1, 0, f);
        let w_j = tape.slice(&self.rel1.weight, 1, f, f);
        let u = tape.matmul(&flat, &tape.permute(&w_i, &[1, 0]));
        let v = tape.add(
            &tape.matmul(&flat, &tape.permute(&w_j, &[1, 0])),
            self.rel1.bias.as_ref().expect("linear has bias"),
        );
        let u = tape.reshape(&u, &[b, hw, 1, hidden]);
        let v = tape.reshape(&v, &[b, 1, hw, hidden]);
        let pairs = tape.relu(&tape.add(&u, &v));
        let pooled = tape.mean(&tape.mean(&pairs, Axis::At(2)), Axis::At(1));

        let all_obj = tape.relu(&self.rel2.forward(tape, &pooled));
        self.f_phi.forward(tape, &all_obj)
    }

    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = self.encoder.params();
        for (name, layer) in [("rel1", &self.rel1), ("rel2", &self.rel2), ("f_phi", &self.f_phi)] {
            out.push((format!("{name}.w"), layer.weight.clone()));
            out.push((format!("{name}.b"), layer.bias.clone().expect("linear has bias")));
        }
        out
    }
}

/// Where an attention module sits in the convolutional classifier.
#[derive(Debug)]
enum CnnAttention {
    None,
    /// Spatial attention after the second block.
    Sam(MhaParams),
    /// Feature-based attention after the third block.
    Fbam(MhaParams),
}

/// Convolutional classifier over the shared backbone, optionally with one
/// attention module inserted mid-stack.
#[derive(Debug)]
pub struct CnnModel {
    pub cfg: GamrConfig,
    encoder: Encoder,
    attn: CnnAttention,
    fc1: Linear,
    fc2: Linear,
}

const CNN_HIDDEN: usize = 128;

impl CnnModel {
    pub fn new(rng: &mut ChaCha12Rng, cfg: &GamrConfig, n_out: usize) -> Self {
        CnnModel::build(rng, cfg, n_out, 0)
    }

    pub fn with_sam(rng: &mut ChaCha12Rng, cfg: &GamrConfig, n_out: usize) -> Self {
        CnnModel::build(rng, cfg, n_out, 1)
    }

    pub fn with_fbam(rng: &mut ChaCha12Rng, cfg: &GamrConfig, n_out: usize) -> Self {
        CnnModel::build(rng, cfg, n_out, 2)
    }

    fn build(rng: &mut ChaCha12Rng, cfg: &GamrConfig, n_out: usize, kind: u8) -> Self {
        cfg.validate();
        let encoder = Encoder::new(rng, cfg);
        let attn = match kind {
            0 => CnnAttention::None,
            1 => CnnAttention::Sam(MhaParams::sam(rng, cfg.block_channels[1])),
            2 => {
                let side = cfg.input_resolution
                    / (cfg.stem_stride * cfg.block_strides[..3].iter().product::<usize>());
                CnnAttention::Fbam(MhaParams::fbam(rng, side * side))
            }
            _ => unreachable!(),
        };
        let flat = cfg.feature_width * cfg.locations();
        CnnModel {
            cfg: cfg.clone(),
            encoder,
            attn,
            fc1: Linear::new(rng, flat, CNN_HIDDEN),
            fc2: Linear::new(rng, CNN_HIDDEN, n_out),
        }
    }

    pub fn forward(&self, tape: &Tape, images: &Tensor) -> Tensor {
        let b = images.shape()[0];
        let mut x = self.encoder.apply_stem(tape, images);
        for i in 0..4 {
            x = self.encoder.apply_block(tape, i, &x);
            match &self.attn {
                CnnAttention::Sam(p) if i == 1 => x = per_sample(tape, p, &x, sam_forward),
                CnnAttention::Fbam(p) if i == 2 => x = per_sample(tape, p, &x, fbam_forward),
                _ => {}
            }
        }
        let flat = tape.reshape(&x, &[b, self.cfg.feature_width * self.cfg.locations()]);
        let hidden = tape.relu(&self.fc1.forward(tape, &flat));
        self.fc2.forward(tape, &hidden)
    }

    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = self.encoder.params();
        let attn = match &self.attn {
            CnnAttention::None => None,
            CnnAttention::Sam(p) | CnnAttention::Fbam(p) => Some(p),
        };
        if let Some(p) = attn {
            for (name, t) in p.params() {
                out.push((format!("attn.{name}"), t));
            }
        }
        for (name, layer) in [("fc1", &self.fc1), ("fc2", &self.fc2)] {
            out.push((format!("{name}.w"), layer.weight.clone()));
            out.push((format!("{name}.b"), layer.bias.clone().expect("linear has bias")));
        }
        out
    }
}

/// Run a single-sample attention transform across a `[B, C, H, W]` batch.
fn per_sample(
    tape: &Tape,
    p: &MhaParams,
    x: &Tensor,
    f: fn(&Tape, &MhaParams, &Tensor) -> Tensor,
) -> Tensor {
    let shape = x.shape().to_vec();
    let per = &shape[1..];
    let mut parts = Vec::with_capacity(shape[0]);
    for s in 0..shape[0] {
        let one = tape.reshape(&tape.slice(x, 0, s, 1), per);
        let y = f(tape, p, &one);
        parts.push(tape.reshape(&y, &[1, per[0], per[1], per[2]]));
    }
    let refs: Vec<&Tensor> = parts.iter().collect();
    tape.concat(&refs, 0)
}

/// Names for every trainable architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Gamr,
    GamrSa,
    Rn,
    Cnn,
    CnnSam,
    CnnFbam,
    Ablated(Ablation),
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            VariantKind::Gamr => "gamr",
            VariantKind::GamrSa => "gamr-sa",
            VariantKind::Rn => "rn",
            VariantKind::Cnn => "cnn",
            VariantKind::CnnSam => "cnn-sam",
            VariantKind::CnnFbam => "cnn-fbam",
            VariantKind::Ablated(Ablation::NoOut) => "gamr-no-out",
            VariantKind::Ablated(Ablation::NoWt) => "gamr-no-wt",
            VariantKind::Ablated(Ablation::NoAllObj) => "gamr-no-allobj",
            VariantKind::Ablated(Ablation::NoG) => "gamr-no-g",
            VariantKind::Ablated(Ablation::NoINorm) => "gamr-no-inorm",
        };
        f.write_str(name)
    }
}

impl FromStr for VariantKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "gamr" => VariantKind::Gamr,
            "gamr-sa" => VariantKind::GamrSa,
            "rn" => VariantKind::Rn,
            "cnn" => VariantKind::Cnn,
            "cnn-sam" => VariantKind::CnnSam,
            "cnn-fbam" => VariantKind::CnnFbam,
            "gamr-no-out" => VariantKind::Ablated(Ablation::NoOut),
            "gamr-no-wt" => VariantKind::Ablated(Ablation::NoWt),
            "gamr-no-allobj" => VariantKind::Ablated(Ablation::NoAllObj),
            "gamr-no-g" => VariantKind::Ablated(Ablation::NoG),
            "gamr-no-inorm" => VariantKind::Ablated(Ablation::NoINorm),
            other => return Err(format!("unknown model variant {other:?}")),
        })
    }
}

impl VariantKind {
    pub fn all() -> [VariantKind; 11] {
        [
            VariantKind::Gamr,
            VariantKind::GamrSa,
            VariantKind::Rn,
            VariantKind::Cnn,
            VariantKind::CnnSam,
            VariantKind::CnnFbam,
            VariantKind::Ablated(Ablation::NoOut),
            VariantKind::Ablated(Ablation::NoWt),
            VariantKind::Ablated(Ablation::NoAllObj),
            VariantKind::Ablated(Ablation::NoG),
            VariantKind::Ablated(Ablation::NoINorm),
        ]
    }
}

/// A trainable architecture with a uniform forward/parameters surface.
#[derive(Debug)]
pub enum Model {
    Gamr(Gamr),
    Rn(RnModel),
    Cnn(CnnModel),
}

impl Model {
    pub fn forward(&self, tape: &Tape, images: &Tensor) -> Tensor {
        match self {
            Model::Gamr(m) => m.forward(tape, images),
            Model::Rn(m) => m.forward(tape, images),
            Model::Cnn(m) => m.forward(tape, images),
        }
    }

    pub fn params(&self) -> Vec<(String, Tensor)> {
        match self {
            Model::Gamr(m) => m.params(),
            Model::Rn(m) => m.params(),
            Model::Cnn(m) => m.params(),
        }
    }
}

pub fn build_variant(
    kind: VariantKind,
    rng: &mut ChaCha12Rng,
    cfg: &GamrConfig,
    n_out: usize,
) -> Model {
    match kind {
        VariantKind::Gamr => Model::Gamr(Gamr::new(rng, cfg, n_out)),
        VariantKind::GamrSa => Model::Gamr(Gamr::with_self_attention(rng, cfg, n_out)),
        VariantKind::Rn => Model::Rn(RnModel::new(rng, cfg, n_out)),
        VariantKind::Cnn => Model::Cnn(CnnModel::new(rng, cfg, n_out)),
        VariantKind::CnnSam => Model::Cnn(CnnModel::with_sam(rng, cfg, n_out)),
        VariantKind::CnnFbam => Model::Cnn(CnnModel::with_fbam(rng, cfg, n_out)),
        VariantKind::Ablated(which) => Model::Gamr(Gamr::ablated(rng, cfg, n_out, which)),
    }
}
