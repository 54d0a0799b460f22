use std::cell::{Cell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::ops::Op;
use crate::tensor::{Inner, Tensor};

static TAPE_IDS: AtomicU64 = AtomicU64::new(1);

fn next_uid() -> u64 {
    TAPE_IDS.fetch_add(1, Ordering::Relaxed)
}

pub(crate) struct Node {
    pub(crate) op: Op,
    /// Node id per input; `None` marks an untracked (constant) input.
    pub(crate) inputs: Vec<Option<usize>>,
    /// The input tensors themselves, kept so backward can read their values.
    pub(crate) src: Vec<Rc<Inner>>,
    pub(crate) out: Rc<Inner>,
}

/// Recording of a forward computation, replayed in reverse by [`Tape::backward`].
///
/// One tape serves one forward/backward cycle at a time; call [`Tape::reset`]
/// between training steps to drop the recording (stale tensors then act as
/// constants). A tape is single-threaded by construction (`Rc` innards).
pub struct Tape {
    uid: Cell<u64>,
    pub(crate) nodes: RefCell<Vec<Node>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape {
            uid: Cell::new(next_uid()),
            nodes: RefCell::new(Vec::new()),
        }
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops the recording and detaches every tensor bound to this tape.
    pub fn reset(&mut self) {
        self.nodes.get_mut().clear();
        self.uid.set(next_uid());
    }

    /// Registers `t` as a leaf, making it visible to [`GradMap::wrt`] even if no
    /// operation ends up consuming it. Tensors built with [`Tensor::param`] are
    /// registered automatically on first use.
    pub fn watch(&self, t: &Tensor) -> Tensor {
        self.leaf_id(t);
        t.clone()
    }

    fn leaf_id(&self, t: &Tensor) -> usize {
        if let Some((uid, id)) = t.binding() {
            if uid == self.uid.get() {
                return id;
            }
        }
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            op: Op::Leaf,
            inputs: Vec::new(),
            src: Vec::new(),
            out: Rc::clone(&t.inner),
        });
        t.inner.node.set(Some((self.uid.get(), id)));
        id
    }

    /// Node id to wire an op input to: the existing binding, a fresh leaf for
    /// tracked parameters, or `None` for constants.
    pub(crate) fn input_id(&self, t: &Tensor) -> Option<usize> {
        match t.binding() {
            Some((uid, id)) if uid == self.uid.get() => Some(id),
            _ if t.requires_grad() => Some(self.leaf_id(t)),
            _ => None,
        }
    }

    /// Records `op` producing `out_shape`/`out_data` from `srcs`, unless no input
    /// is tracked, in which case the result stays a plain constant.
    pub(crate) fn push(
        &self,
        op: Op,
        srcs: &[&Tensor],
        out_shape: Vec<usize>,
        out_data: Vec<f64>,
    ) -> Tensor {
        let ids: Vec<Option<usize>> = srcs.iter().map(|t| self.input_id(t)).collect();
        let out = Tensor::new(&out_shape, out_data);
        if ids.iter().all(Option::is_none) {
            return out;
        }
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            op,
            inputs: ids,
            src: srcs.iter().map(|t| Rc::clone(&t.inner)).collect(),
            out: Rc::clone(&out.inner),
        });
        out.inner.node.set(Some((self.uid.get(), id)));
        out
    }

    /// Reverse pass from a scalar loss.
    ///
    /// Accumulates gradients into the `grad` slot of every tracked parameter
    /// reachable from `loss` (unreached leaves get zeros), and returns a map with
    /// the same per-leaf gradients. Panics if `loss` is not a scalar recorded on
    /// this tape.
    pub fn backward(&self, loss: &Tensor) -> GradMap {
        assert_eq!(
            loss.len(),
            1,
            "backward: loss must be a scalar tensor, got shape {:?}",
            loss.shape()
        );
        let lid = match loss.binding() {
            Some((uid, id)) if uid == self.uid.get() => id,
            _ => panic!("backward: loss was not recorded on this tape"),
        };
        let nodes = self.nodes.borrow();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        grads[lid] = Some(vec![1.0]);
        let mut leaf_grads: HashMap<usize, Vec<f64>> = HashMap::new();
        for id in (0..=lid).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if let Op::Leaf = node.op {
                leaf_grads.insert(id, g);
                continue;
            }
            node.op.backprop(&g, node, &mut grads);
        }
        // Leaves the loss never reached still appear, with zero gradients.
        for (id, node) in nodes.iter().enumerate() {
            if matches!(node.op, Op::Leaf) {
                let entry = leaf_grads
                    .entry(id)
                    .or_insert_with(|| vec![0.0; node.out.shape.iter().product()]);
                if node.out.requires_grad {
                    let mut slot = node.out.grad.borrow_mut();
                    match slot.as_mut() {
                        Some(acc) => {
                            for (a, b) in acc.iter_mut().zip(entry.iter()) {
                                *a += b;
                            }
                        }
                        None => *slot = Some(entry.clone()),
                    }
                }
            }
        }
        GradMap {
            uid: self.uid.get(),
            leaves: leaf_grads,
        }
    }
}

/// Per-leaf gradients produced by one [`Tape::backward`] call.
pub struct GradMap {
    uid: u64,
    leaves: HashMap<usize, Vec<f64>>,
}

impl GradMap {
    /// Gradient with respect to a leaf tensor of this tape's recording.
    ///
    /// Returns `None` for tensors that are not leaves of the recording;
    /// leaves the loss never reached yield zeros.
    pub fn wrt(&self, t: &Tensor) -> Option<Vec<f64>> {
        match t.binding() {
            Some((uid, id)) if uid == self.uid => self.leaves.get(&id).cloned(),
            _ => None,
        }
    }
}

/// Adds `v` into the gradient accumulator for node `id`.
pub(crate) fn acc(grads: &mut [Option<Vec<f64>>], id: Option<usize>, v: Vec<f64>) {
    let Some(id) = id else { return };
    match &mut grads[id] {
        Some(buf) => {
            debug_assert_eq!(buf.len(), v.len());
            for (a, b) in buf.iter_mut().zip(v) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(v),
    }
}
