//! The recurrent guided-attention model.
//!
//! Per stimulus: encode once, then loop a fixed number of steps. Each step the
//! LSTM controller reads the gated memory summary and emits a query; the query
//! guides a read-out over the encoded grid; the routed context vector is
//! appended to the memory bank. After the loop, a two-layer relational MLP
//! aggregates all ordered pairs of memory rows into `all_obj`, which is
//! concatenated with the controller's final `out` and mapped to logits.

use attention::guided_attention_step;
use layers::init::kaiming_uniform;
use layers::{Linear, LstmCell, NormLayer};
use rand_chacha::ChaCha12Rng;
use tensor::{Axis, Tape, Tensor};

use crate::encoder::Encoder;
use crate::GamrConfig;

/// A pathway removed for lesion studies. Each value prunes exactly one piece
/// of the architecture; everything else is untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    /// Decide from `all_obj` alone; the controller's `out` head is dropped.
    NoOut,
    /// Skip the normalization of the attention map; raw shifted features
    /// weight the read-out.
    NoWt,
    /// Decide from `out` alone; the relational MLP is dropped.
    NoAllObj,
    /// Memory summaries are not gated; the gate head is dropped.
    NoG,
    /// Encoder output is not instance-normalized.
    NoINorm,
}

#[derive(Debug)]
enum AttentionMode {
    Guided,
    /// Query/key/value projections (each `[features, features]`) for the
    /// variant that replaces the guided read-out with self-attention.
    SelfAttention { wq: Tensor, wk: Tensor, wv: Tensor },
}

#[derive(Debug)]
pub struct Gamr {
    pub cfg: GamrConfig,
    encoder: Encoder,
    lstm: LstmCell,
    head_out: Linear,
    head_g: Linear,
    head_q: Linear,
    wt_norm: NormLayer,
    rel1: Linear,
    rel2: Linear,
    f_phi: Linear,
    mode: AttentionMode,
    ablation: Option<Ablation>,
    n_out: usize,
}

/// Trace of one forward pass, for tests and diagnostics.
pub struct GamrRollout {
    pub logits: Tensor,
    /// Context vector appended at each step, `[B, features]` each.
    pub memory: Vec<Tensor>,
    /// What the controller consumed at each step (zeros at the first step).
    pub controller_inputs: Vec<Tensor>,
    pub all_obj: Option<Tensor>,
    pub out: Option<Tensor>,
}

impl Gamr {
    pub fn new(rng: &mut ChaCha12Rng, cfg: &GamrConfig, n_out: usize) -> Self {
        Gamr::build(rng, cfg, n_out, None, false)
    }

    pub fn ablated(rng: &mut ChaCha12Rng, cfg: &GamrConfig, n_out: usize, which: Ablation) -> Self {
        Gamr::build(rng, cfg, n_out, Some(which), false)
    }

    /// Variant with self-attention over the encoded grid in place of the
    /// query-guided read-out (queries, keys, and values all come from the
    /// grid itself, so the read-out no longer depends on the controller).
    pub fn with_self_attention(rng: &mut ChaCha12Rng, cfg: &GamrConfig, n_out: usize) -> Self {
        Gamr::build(rng, cfg, n_out, None, true)
    }

    fn build(
        rng: &mut ChaCha12Rng,
        cfg: &GamrConfig,
        n_out: usize,
        ablation: Option<Ablation>,
        self_attention: bool,
    ) -> Self {
        cfg.validate();
        assert!(n_out >= 1, "need at least one output");
        let f = cfg.feature_width;
        let decision_in = match ablation {
            Some(Ablation::NoOut) => cfg.relational_out,
            Some(Ablation::NoAllObj) => cfg.out_width,
            _ => cfg.relational_out + cfg.out_width,
        };
        let mode = if self_attention {
            AttentionMode::SelfAttention {
                wq: kaiming_uniform(rng, &[f, f], f),
                wk: kaiming_uniform(rng, &[f, f], f),
                wv: kaiming_uniform(rng, &[f, f], f),
            }
        } else {
            AttentionMode::Guided
        };
        Gamr {
            cfg: cfg.clone(),
            encoder: Encoder::new(rng, cfg),
            lstm: LstmCell::new(rng, f, cfg.controller_hidden),
            head_out: Linear::new(rng, cfg.controller_hidden, cfg.out_width),
            head_g: Linear::new(rng, cfg.controller_hidden, f),
            head_q: Linear::new(rng, cfg.controller_hidden, f),
            wt_norm: NormLayer::layer(f),
            rel1: Linear::new(rng, 2 * f, cfg.relational_hidden),
            rel2: Linear::new(rng, cfg.relational_hidden, cfg.relational_out),
            f_phi: Linear::new(rng, decision_in, n_out),
            mode,
            ablation,
            n_out,
        }
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn ablation(&self) -> Option<Ablation> {
        self.ablation
    }

    pub fn forward(&self, tape: &Tape, images: &Tensor) -> Tensor {
        self.rollout(tape, images).logits
    }

    pub fn rollout(&self, tape: &Tape, images: &Tensor) -> GamrRollout {
        let z_img = self.encode(tape, images);
        let (memory, controller_inputs, out) = self.reason(tape, &z_img);

        let all_obj = match self.ablation {
            Some(Ablation::NoAllObj) => None,
            _ => Some(self.relational(tape, &memory)),
        };
        let joint = match (&all_obj, &out) {
            (Some(a), Some(o)) => tape.concat(&[a, o], 1),
            (Some(a), None) => a.clone(),
            (None, Some(o)) => o.clone(),
            (None, None) => unreachable!("decision needs at least one pathway"),
        };
        let logits = self.f_phi.forward(tape, &joint);
        GamrRollout { logits, memory, controller_inputs, all_obj, out }
    }

    /// Encoded feature rows `[B, grid², features]`.
    pub fn encode(&self, tape: &Tape, images: &Tensor) -> Tensor {
        let normalize = self.ablation != Some(Ablation::NoINorm);
        self.encoder.forward(tape, images, normalize)
    }

    /// `all_obj` for one stimulus — the relational summary used by the
    /// multi-stimulus episode head.
    pub fn stimulus_summary(&self, tape: &Tape, images: &Tensor) -> Tensor {
        let z_img = self.encode(tape, images);
        let (memory, _, _) = self.reason(tape, &z_img);
        self.relational(tape, &memory)
    }

    fn reason(&self, tape: &Tape, z_img: &Tensor) -> (Vec<Tensor>, Vec<Tensor>, Option<Tensor>) {
        let b = z_img.shape()[0];
        let f = self.cfg.feature_width;
        let (mut h, mut c) = self.lstm.zero_state(b);
        let mut k_r = Tensor::zeros(&[b, f]);
        let mut memory: Vec<Tensor> = Vec::with_capacity(self.cfg.time_steps);
        let mut inputs = Vec::with_capacity(self.cfg.time_steps);
        let mut out = None;

        for _ in 0..self.cfg.time_steps {
            inputs.push(k_r.clone());
            let (h2, c2) = self.lstm.forward(tape, &k_r, &h, &c);
            h = h2;
            c = c2;

            if self.ablation != Some(Ablation::NoOut) {
                out = Some(self.head_out.forward(tape, &h));
            }
            let q_int = self.head_q.forward(tape, &h);
            let z_t = self.attend(tape, z_img, &q_int);

            // The gate scales the summary of everything stored *before* this
            // step; the fresh row becomes visible one step later.
            k_r = if memory.is_empty() {
                Tensor::zeros(&[b, f])
            } else {
                let mut sum = memory[0].clone();
                for row in &memory[1..] {
                    sum = tape.add(&sum, row);
                }
                match self.ablation {
                    Some(Ablation::NoG) => sum,
                    _ => {
                        let g = tape.sigmoid(&self.head_g.forward(tape, &h));
                        tape.mul(&g, &sum)
                    }
                }
            };
            memory.push(z_t);
        }
        (memory, inputs, out)
    }

    fn attend(&self, tape: &Tape, z_img: &Tensor, q_int: &Tensor) -> Tensor {
        match &self.mode {
            AttentionMode::Guided => {
                if self.ablation == Some(Ablation::NoWt) {
                    let b = z_img.shape()[0];
                    let q = tape.reshape(q_int, &[b, 1, self.cfg.feature_width]);
                    let raw = tape.add(z_img, &q);
                    self.route(tape, z_img, &raw)
                } else {
                    let (_, z_t) = guided_attention_step(tape, z_img, q_int, &self.wt_norm);
                    z_t
                }
            }
            AttentionMode::SelfAttention { wq, wk, wv } => {
                let b = z_img.shape()[0];
                let hw = self.cfg.locations();
                let f = self.cfg.feature_width;
                let mut per_sample = Vec::with_capacity(b);
                for s in 0..b {
                    let rows = tape.reshape(&tape.slice(z_img, 0, s, 1), &[hw, f]);
                    let q = tape.matmul(&rows, &tape.permute(wq, &[1, 0]));
                    let k = tape.matmul(&rows, &tape.permute(wk, &[1, 0]));
                    let v = tape.matmul(&rows, &tape.permute(wv, &[1, 0]));
                    let attn = attention::scaled_dot_attention(tape, &q, &k, &v);
                    per_sample.push(tape.reshape(&attn.output, &[1, hw, f]));
                }
                let refs: Vec<&Tensor> = per_sample.iter().collect();
                let w_t = tape.concat(&refs, 0);
                self.route(tape, z_img, &w_t)
            }
        }
    }

    /// Collapse an attention map to per-location scalars and mix the grid
    /// rows accordingly: `z_t = Σ_loc (Σ_feat map[loc,:]) · z_img[loc,:]`.
    fn route(&self, tape: &Tape, z_img: &Tensor, map: &Tensor) -> Tensor {
        let b = z_img.shape()[0];
        let hw = self.cfg.locations();
        let per_location = tape.sum(map, Axis::At(2));
        let weights = tape.reshape(&per_location, &[b, hw, 1]);
        tape.sum(&tape.mul(z_img, &weights), Axis::At(1))
    }

    /// Relational summary of a set of `[B, features]` rows: the first MLP
    /// layer on every ordered pair (self-pairs included), summed, then the
    /// second layer.
    pub fn relational(&self, tape: &Tape, rows: &[Tensor]) -> Tensor {
        assert!(!rows.is_empty(), "relational summary of an empty memory bank");
        let mut acc: Option<Tensor> = None;
        for zi in rows {
            for zj in rows {
                let pair = tape.concat(&[zi, zj], 1);
                let a = tape.relu(&self.rel1.forward(tape, &pair));
                acc = Some(match acc {
                    Some(s) => tape.add(&s, &a),
                    None => a,
                });
            }
        }
        tape.relu(&self.rel2.forward(tape, &acc.expect("at least one pair")))
    }

    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = self.encoder.params();
        out.push(("lstm.w_ih".into(), self.lstm.w_ih.clone()));
        out.push(("lstm.w_hh".into(), self.lstm.w_hh.clone()));
        out.push(("lstm.b".into(), self.lstm.bias.clone()));
        let linears: [(&str, &Linear, bool); 5] = [
            ("head_out", &self.head_out, self.ablation != Some(Ablation::NoOut)),
            ("head_g", &self.head_g, self.ablation != Some(Ablation::NoG)),
            ("head_q", &self.head_q, true),
            ("rel1", &self.rel1, self.ablation != Some(Ablation::NoAllObj)),
            ("rel2", &self.rel2, self.ablation != Some(Ablation::NoAllObj)),
        ];
        for (name, layer, live) in linears {
            if live {
                out.push((format!("{name}.w"), layer.weight.clone()));
                out.push((format!("{name}.b"), layer.bias.clone().expect("linear has bias")));
            }
        }
        if self.ablation != Some(Ablation::NoWt) {
            if let AttentionMode::Guided = self.mode {
                out.push(("wt_norm.gamma".into(), self.wt_norm.gamma.clone().expect("affine")));
                out.push(("wt_norm.beta".into(), self.wt_norm.beta.clone().expect("affine")));
            }
        }
        if let AttentionMode::SelfAttention { wq, wk, wv } = &self.mode {
            out.push(("sa.wq".into(), wq.clone()));
            out.push(("sa.wk".into(), wk.clone()));
            out.push(("sa.wv".into(), wv.clone()));
        }
        out.push(("f_phi.w".into(), self.f_phi.weight.clone()));
        out.push(("f_phi.b".into(), self.f_phi.bias.clone().expect("linear has bias")));
        out
    }
}

/// Episode model for the multiple-choice tasks: the same recurrent model is
/// applied to each stimulus; each stimulus's `all_obj` is scored by one shared
/// linear map, yielding one logit per choice. The shared scorer is what makes
/// the logits permutation-equivariant in the choice stimuli.
#[derive(Debug)]
pub struct ArtModel {
    pub gamr: Gamr,
    scorer: Linear,
    n_stimuli: usize,
}

impl ArtModel {
    pub fn new(rng: &mut ChaCha12Rng, cfg: &GamrConfig, n_stimuli: usize) -> Self {
        assert!(matches!(n_stimuli, 1 | 2 | 4), "episodes have 1, 2 or 4 stimuli");
        let gamr = Gamr::new(rng, cfg, 1);
        let scorer = Linear::new(rng, cfg.relational_out, 1);
        ArtModel { gamr, scorer, n_stimuli }
    }

    pub fn n_stimuli(&self) -> usize {
        self.n_stimuli
    }

    /// Number of choice logits (a single-stimulus episode is scored with one
    /// binary logit).
    pub fn n_choices(&self) -> usize {
        self.n_stimuli
    }

    /// `stimuli[k]` is the batch of k-th choice stimuli, `[B, 1, H, W]`.
    /// Returns `[B, n_choices]`.
    pub fn forward(&self, tape: &Tape, stimuli: &[Tensor]) -> Tensor {
        assert_eq!(
            stimuli.len(),
            self.n_stimuli,
            "episode expects {} stimuli, got {}",
            self.n_stimuli,
            stimuli.len()
        );
        let scores: Vec<Tensor> = stimuli
            .iter()
            .map(|s| {
                let all_obj = self.gamr.stimulus_summary(tape, s);
                self.scorer.forward(tape, &all_obj)
            })
            .collect();
        if scores.len() == 1 {
            scores.into_iter().next().expect("one score")
        } else {
            let refs: Vec<&Tensor> = scores.iter().collect();
            tape.concat(&refs, 1)
        }
    }

    pub fn params(&self) -> Vec<(String, Tensor)> {
        let mut out = self.gamr.params();
        // The per-pathway decision layer of the single-stimulus model is
        // replaced by the shared scorer here; keep both named distinctly.
        out.push(("scorer.w".into(), self.scorer.weight.clone()));
        out.push(("scorer.b".into(), self.scorer.bias.clone().expect("linear has bias")));
        out
    }
}
