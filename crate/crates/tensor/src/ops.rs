use crate::broadcast::{binary_broadcast, broadcast_shape, reduce_to_shape};
use crate::tape::{acc, Node, Tape};
use crate::tensor::Tensor;
use crate::Axis;

#[derive(Debug)]
pub(crate) enum Op {
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Affine { m: f64 },
    Exp,
    Log,
    Sqrt,
    Tanh,
    Sigmoid,
    Relu,
    MatMul,
    Unfold(UnfoldSpec),
    Softmax { axis: usize },
    Sum { axis: Axis },
    Mean { axis: Axis },
    Max { arg: Vec<usize> },
    Reshape,
    Permute { perm: Vec<usize> },
    Concat { axis: usize },
    Slice { axis: usize, start: usize },
    BceWithLogits { targets: Vec<f64> },
    CrossEntropy { classes: Vec<usize> },
}

#[derive(Debug)]
pub(crate) struct UnfoldSpec {
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
}

/// `c = a·b` over explicit strides, so transposed views need no copies.
#[allow(clippy::too_many_arguments)]
fn mm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
) {
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Splits a shape at `axis` into (product before, extent at, product after).
fn split_at_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn check_axis(name: &str, shape: &[usize], axis: usize) {
    assert!(
        axis < shape.len(),
        "{name}: axis {axis} out of range for shape {shape:?}"
    );
}

impl Tape {
    fn unary(&self, name: &str, a: &Tensor, op: Op, f: impl Fn(f64) -> f64) -> Tensor {
        let _ = name;
        let data = a.data().iter().map(|&x| f(x)).collect();
        self.push(op, &[a], a.shape().to_vec(), data)
    }

    fn binary(
        &self,
        name: &str,
        a: &Tensor,
        b: &Tensor,
        op: Op,
        f: impl Fn(f64, f64) -> f64 + Copy,
    ) -> Tensor {
        let shape = broadcast_shape(a.shape(), b.shape()).unwrap_or_else(|| {
            panic!(
                "{name}: shapes {:?} and {:?} are not broadcast-compatible",
                a.shape(),
                b.shape()
            )
        });
        let data = binary_broadcast(&a.data(), a.shape(), &b.data(), b.shape(), &shape, f);
        self.push(op, &[a, b], shape, data)
    }

    pub fn add(&self, a: &Tensor, b: &Tensor) -> Tensor {
        self.binary("add", a, b, Op::Add, |x, y| x + y)
    }

    pub fn sub(&self, a: &Tensor, b: &Tensor) -> Tensor {
        self.binary("sub", a, b, Op::Sub, |x, y| x - y)
    }

    pub fn mul(&self, a: &Tensor, b: &Tensor) -> Tensor {
        self.binary("mul", a, b, Op::Mul, |x, y| x * y)
    }

    pub fn div(&self, a: &Tensor, b: &Tensor) -> Tensor {
        assert!(
            b.data().iter().all(|&x| x != 0.0),
            "div: divisor contains zero"
        );
        self.binary("div", a, b, Op::Div, |x, y| x / y)
    }

    pub fn neg(&self, a: &Tensor) -> Tensor {
        self.unary("neg", a, Op::Neg, |x| -x)
    }

    /// Elementwise `m·x + c`; covers scale and scalar shift.
    pub fn affine(&self, a: &Tensor, m: f64, c: f64) -> Tensor {
        self.unary("affine", a, Op::Affine { m }, |x| m * x + c)
    }

    pub fn exp(&self, a: &Tensor) -> Tensor {
        self.unary("exp", a, Op::Exp, f64::exp)
    }

    pub fn log(&self, a: &Tensor) -> Tensor {
        if let Some(&bad) = a.data().iter().find(|&&x| x <= 0.0) {
            panic!("log: input must be positive, found {bad}");
        }
        self.unary("log", a, Op::Log, f64::ln)
    }

    pub fn sqrt(&self, a: &Tensor) -> Tensor {
        if let Some(&bad) = a.data().iter().find(|&&x| x < 0.0) {
            panic!("sqrt: input must be non-negative, found {bad}");
        }
        self.unary("sqrt", a, Op::Sqrt, f64::sqrt)
    }

    pub fn tanh(&self, a: &Tensor) -> Tensor {
        self.unary("tanh", a, Op::Tanh, f64::tanh)
    }

    pub fn sigmoid(&self, a: &Tensor) -> Tensor {
        self.unary("sigmoid", a, Op::Sigmoid, |x| 1.0 / (1.0 + (-x).exp()))
    }

    pub fn relu(&self, a: &Tensor) -> Tensor {
        self.unary("relu", a, Op::Relu, |x| x.max(0.0))
    }

    /// Matrix product of `a [m,k]` and `b [k,n]`.
    pub fn matmul(&self, a: &Tensor, b: &Tensor) -> Tensor {
        assert!(
            a.shape().len() == 2 && b.shape().len() == 2,
            "matmul: operands must be rank 2, got {:?} and {:?}",
            a.shape(),
            b.shape()
        );
        let (m, k) = (a.shape()[0], a.shape()[1]);
        let (k2, n) = (b.shape()[0], b.shape()[1]);
        assert_eq!(
            k, k2,
            "matmul: inner dimensions differ: [{m},{k}]·[{k2},{n}]"
        );
        let mut out = vec![0.0; m * n];
        mm(
            m,
            k,
            n,
            &a.data(),
            k as isize,
            1,
            &b.data(),
            n as isize,
            1,
            &mut out,
        );
        self.push(Op::MatMul, &[a, b], vec![m, n], out)
    }

    /// im2col patch gather: `[B,C,H,W] -> [C·kh·kw, B·H'·W']`, columns grouped by
    /// batch element. Zero padding, cross-correlation window layout.
    pub fn unfold(&self, x: &Tensor, kh: usize, kw: usize, stride: usize, pad: usize) -> Tensor {
        assert_eq!(
            x.shape().len(),
            4,
            "unfold: input must be [B,C,H,W], got {:?}",
            x.shape()
        );
        assert!(stride > 0, "unfold: stride must be positive");
        let (bs, ch, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
        assert!(
            h + 2 * pad >= kh && w + 2 * pad >= kw,
            "unfold: kernel {kh}x{kw} larger than padded input {}x{}",
            h + 2 * pad,
            w + 2 * pad
        );
        let out_h = (h + 2 * pad - kh) / stride + 1;
        let out_w = (w + 2 * pad - kw) / stride + 1;
        let l = out_h * out_w;
        let rows = ch * kh * kw;
        let cols = bs * l;
        let xd = x.data();
        let mut out = vec![0.0; rows * cols];
        for b in 0..bs {
            for c in 0..ch {
                for ki in 0..kh {
                    for kj in 0..kw {
                        let row = (c * kh + ki) * kw + kj;
                        for oh in 0..out_h {
                            let ih = (oh * stride + ki) as isize - pad as isize;
                            if ih < 0 || ih >= h as isize {
                                continue;
                            }
                            let src_base = ((b * ch + c) * h + ih as usize) * w;
                            let dst_base = row * cols + b * l + oh * out_w;
                            for ow in 0..out_w {
                                let iw = (ow * stride + kj) as isize - pad as isize;
                                if iw < 0 || iw >= w as isize {
                                    continue;
                                }
                                out[dst_base + ow] = xd[src_base + iw as usize];
                            }
                        }
                    }
                }
            }
        }
        drop(xd);
        let spec = UnfoldSpec {
            kh,
            kw,
            stride,
            pad,
            out_h,
            out_w,
        };
        self.push(Op::Unfold(spec), &[x], vec![rows, cols], out)
    }

    /// 2-D convolution (cross-correlation) with zero padding, as patch gather
    /// followed by one matrix product.
    pub fn conv2d(&self, x: &Tensor, kernel: &Tensor, stride: usize, pad: usize) -> Tensor {
        assert_eq!(
            kernel.shape().len(),
            4,
            "conv2d: kernel must be [C_out,C_in,kh,kw], got {:?}",
            kernel.shape()
        );
        assert_eq!(
            x.shape().len(),
            4,
            "conv2d: input must be [B,C,H,W], got {:?}",
            x.shape()
        );
        let (c_out, c_in, kh, kw) = (
            kernel.shape()[0],
            kernel.shape()[1],
            kernel.shape()[2],
            kernel.shape()[3],
        );
        assert_eq!(
            c_in,
            x.shape()[1],
            "conv2d: kernel expects {} input channels, image has {}",
            c_in,
            x.shape()[1]
        );
        let bs = x.shape()[0];
        let cols = self.unfold(x, kh, kw, stride, pad);
        let l = cols.shape()[1] / bs;
        let out_h = (x.shape()[2] + 2 * pad - kh) / stride + 1;
        let out_w = (x.shape()[3] + 2 * pad - kw) / stride + 1;
        let wm = self.reshape(kernel, &[c_out, c_in * kh * kw]);
        let prod = self.matmul(&wm, &cols);
        let grouped = self.reshape(&prod, &[c_out, bs, l]);
        let swapped = self.permute(&grouped, &[1, 0, 2]);
        self.reshape(&swapped, &[bs, c_out, out_h, out_w])
    }

    /// Softmax along `axis`, computed with max subtraction.
    pub fn softmax(&self, a: &Tensor, axis: usize) -> Tensor {
        check_axis("softmax", a.shape(), axis);
        let (outer, lane, inner) = split_at_axis(a.shape(), axis);
        let ad = a.data();
        let mut out = vec![0.0; ad.len()];
        for o in 0..outer {
            for i in 0..inner {
                let at = |j: usize| (o * lane + j) * inner + i;
                let mut mx = f64::NEG_INFINITY;
                for j in 0..lane {
                    mx = mx.max(ad[at(j)]);
                }
                let mut z = 0.0;
                for j in 0..lane {
                    let e = (ad[at(j)] - mx).exp();
                    out[at(j)] = e;
                    z += e;
                }
                for j in 0..lane {
                    out[at(j)] /= z;
                }
            }
        }
        drop(ad);
        self.push(Op::Softmax { axis }, &[a], a.shape().to_vec(), out)
    }

    pub fn sum(&self, a: &Tensor, axis: Axis) -> Tensor {
        self.reduce("sum", a, axis, Op::Sum { axis })
    }

    pub fn mean(&self, a: &Tensor, axis: Axis) -> Tensor {
        self.reduce("mean", a, axis, Op::Mean { axis })
    }

    fn reduce(&self, name: &str, a: &Tensor, axis: Axis, op: Op) -> Tensor {
        let mean = matches!(op, Op::Mean { .. });
        match axis {
            Axis::All => {
                let mut s: f64 = a.data().iter().sum();
                if mean {
                    s /= a.len() as f64;
                }
                self.push(op, &[a], vec![], vec![s])
            }
            Axis::At(ax) => {
                check_axis(name, a.shape(), ax);
                let (outer, lane, inner) = split_at_axis(a.shape(), ax);
                let ad = a.data();
                let mut out = vec![0.0; outer * inner];
                for o in 0..outer {
                    for j in 0..lane {
                        let base = (o * lane + j) * inner;
                        let dst = o * inner;
                        for i in 0..inner {
                            out[dst + i] += ad[base + i];
                        }
                    }
                }
                if mean {
                    let inv = 1.0 / lane as f64;
                    for v in &mut out {
                        *v *= inv;
                    }
                }
                drop(ad);
                let mut shape = a.shape().to_vec();
                shape.remove(ax);
                self.push(op, &[a], shape, out)
            }
        }
    }

    /// Max reduction. Ties route the gradient to the first maximal index.
    pub fn max(&self, a: &Tensor, axis: Axis) -> Tensor {
        let ad = a.data();
        let (shape, out, arg) = match axis {
            Axis::All => {
                let mut best = 0usize;
                for (i, &v) in ad.iter().enumerate() {
                    if v > ad[best] {
                        best = i;
                    }
                }
                (vec![], vec![ad[best]], vec![best])
            }
            Axis::At(ax) => {
                check_axis("max", a.shape(), ax);
                let (outer, lane, inner) = split_at_axis(a.shape(), ax);
                let mut out = vec![0.0; outer * inner];
                let mut arg = vec![0usize; outer * inner];
                for o in 0..outer {
                    for i in 0..inner {
                        let mut best = (o * lane) * inner + i;
                        for j in 1..lane {
                            let idx = (o * lane + j) * inner + i;
                            if ad[idx] > ad[best] {
                                best = idx;
                            }
                        }
                        out[o * inner + i] = ad[best];
                        arg[o * inner + i] = best;
                    }
                }
                let mut shape = a.shape().to_vec();
                shape.remove(ax);
                (shape, out, arg)
            }
        };
        drop(ad);
        self.push(Op::Max { arg }, &[a], shape, out)
    }

    pub fn reshape(&self, a: &Tensor, shape: &[usize]) -> Tensor {
        let n: usize = shape.iter().product();
        assert_eq!(
            n,
            a.len(),
            "reshape: cannot view shape {:?} ({} elems) as {:?} ({} elems)",
            a.shape(),
            a.len(),
            shape,
            n
        );
        let data = a.to_vec();
        self.push(Op::Reshape, &[a], shape.to_vec(), data)
    }

    /// Reorders axes; `perm[d]` names the source axis landing at position `d`.
    pub fn permute(&self, a: &Tensor, perm: &[usize]) -> Tensor {
        let rank = a.shape().len();
        let mut seen = vec![false; rank];
        assert!(
            perm.len() == rank && perm.iter().all(|&p| p < rank && !std::mem::replace(&mut seen[p], true)),
            "permute: {perm:?} is not a permutation of axes for shape {:?}",
            a.shape()
        );
        let out_shape: Vec<usize> = perm.iter().map(|&p| a.shape()[p]).collect();
        let data = permute_copy(&a.data(), a.shape(), perm, &out_shape);
        self.push(
            Op::Permute {
                perm: perm.to_vec(),
            },
            &[a],
            out_shape,
            data,
        )
    }

    /// Concatenates tensors along `axis`; all other extents must agree.
    pub fn concat(&self, parts: &[&Tensor], axis: usize) -> Tensor {
        assert!(!parts.is_empty(), "concat: no inputs");
        let rank = parts[0].shape().len();
        check_axis("concat", parts[0].shape(), axis);
        let mut axis_total = 0;
        for p in parts {
            assert_eq!(
                p.shape().len(),
                rank,
                "concat: rank mismatch: {:?} vs {:?}",
                parts[0].shape(),
                p.shape()
            );
            for d in 0..rank {
                assert!(
                    d == axis || p.shape()[d] == parts[0].shape()[d],
                    "concat: shapes {:?} and {:?} differ off the concat axis {axis}",
                    parts[0].shape(),
                    p.shape()
                );
            }
            axis_total += p.shape()[axis];
        }
        let mut shape = parts[0].shape().to_vec();
        shape[axis] = axis_total;
        let (outer, _, inner) = split_at_axis(&shape, axis);
        let mut out = vec![0.0; outer * axis_total * inner];
        let mut offset = 0usize;
        for p in parts {
            let ext = p.shape()[axis];
            let pd = p.data();
            let block = ext * inner;
            for o in 0..outer {
                let dst = (o * axis_total + offset) * inner;
                out[dst..dst + block].copy_from_slice(&pd[o * block..(o + 1) * block]);
            }
            offset += ext;
        }
        self.push(Op::Concat { axis }, parts, shape, out)
    }

    /// Contiguous block `[start, start+len)` along `axis`.
    pub fn slice(&self, a: &Tensor, axis: usize, start: usize, len: usize) -> Tensor {
        check_axis("slice", a.shape(), axis);
        let ext = a.shape()[axis];
        assert!(
            start + len <= ext && len > 0,
            "slice: range {start}..{} out of bounds for axis {axis} of extent {ext}",
            start + len
        );
        let (outer, _, inner) = split_at_axis(a.shape(), axis);
        let ad = a.data();
        let block = len * inner;
        let mut out = vec![0.0; outer * block];
        for o in 0..outer {
            let src = (o * ext + start) * inner;
            out[o * block..(o + 1) * block].copy_from_slice(&ad[src..src + block]);
        }
        drop(ad);
        let mut shape = a.shape().to_vec();
        shape[axis] = len;
        self.push(Op::Slice { axis, start }, &[a], shape, out)
    }

    /// Mean binary cross-entropy between logits and 0/1 targets, in the
    /// numerically stable log-sum-exp form.
    pub fn bce_with_logits(&self, logits: &Tensor, targets: &[f64]) -> Tensor {
        assert_eq!(
            logits.len(),
            targets.len(),
            "bce_with_logits: {} logits vs {} targets",
            logits.len(),
            targets.len()
        );
        let ld = logits.data();
        let n = ld.len() as f64;
        let loss = ld
            .iter()
            .zip(targets)
            .map(|(&l, &y)| l.max(0.0) - l * y + (-l.abs()).exp().ln_1p())
            .sum::<f64>()
            / n;
        drop(ld);
        self.push(
            Op::BceWithLogits {
                targets: targets.to_vec(),
            },
            &[logits],
            vec![],
            vec![loss],
        )
    }

    /// Mean softmax cross-entropy of `[B,K]` logits against class indices.
    pub fn cross_entropy_logits(&self, logits: &Tensor, classes: &[usize]) -> Tensor {
        assert_eq!(
            logits.shape().len(),
            2,
            "cross_entropy_logits: logits must be [B,K], got {:?}",
            logits.shape()
        );
        let (bs, k) = (logits.shape()[0], logits.shape()[1]);
        assert_eq!(
            bs,
            classes.len(),
            "cross_entropy_logits: {} rows vs {} class labels",
            bs,
            classes.len()
        );
        assert!(
            classes.iter().all(|&c| c < k),
            "cross_entropy_logits: class index out of range for {k} classes"
        );
        let ld = logits.data();
        let mut loss = 0.0;
        for b in 0..bs {
            let row = &ld[b * k..(b + 1) * k];
            let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + row.iter().map(|&v| (v - mx).exp()).sum::<f64>().ln();
            loss += lse - row[classes[b]];
        }
        loss /= bs as f64;
        drop(ld);
        self.push(
            Op::CrossEntropy {
                classes: classes.to_vec(),
            },
            &[logits],
            vec![],
            vec![loss],
        )
    }
}

fn permute_copy(src: &[f64], in_shape: &[usize], perm: &[usize], out_shape: &[usize]) -> Vec<f64> {
    let rank = in_shape.len();
    let mut in_strides = vec![1usize; rank];
    for d in (0..rank.saturating_sub(1)).rev() {
        in_strides[d] = in_strides[d + 1] * in_shape[d + 1];
    }
    // Stride of the source axis that lands at each output position.
    let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let n = src.len();
    let mut out = vec![0.0; n];
    let mut idx = vec![0usize; rank];
    let mut off = 0usize;
    for slot in out.iter_mut() {
        *slot = src[off];
        for d in (0..rank).rev() {
            idx[d] += 1;
            off += strides[d];
            if idx[d] < out_shape[d] {
                break;
            }
            off -= strides[d] * out_shape[d];
            idx[d] = 0;
        }
    }
    out
}

impl Op {
    /// Routes `g` (gradient at this node's output) to the node's inputs.
    pub(crate) fn backprop(&self, g: &[f64], node: &Node, grads: &mut [Option<Vec<f64>>]) {
        let src = &node.src;
        let out_shape = &node.out.shape;
        let val = |i: usize| src[i].data.borrow();
        let shape = |i: usize| src[i].shape.as_slice();
        match self {
            Op::Leaf => {}
            Op::Add => {
                acc(grads, node.inputs[0], reduce_to_shape(g, out_shape, shape(0)));
                acc(grads, node.inputs[1], reduce_to_shape(g, out_shape, shape(1)));
            }
            Op::Sub => {
                acc(grads, node.inputs[0], reduce_to_shape(g, out_shape, shape(0)));
                let neg: Vec<f64> = g.iter().map(|x| -x).collect();
                acc(grads, node.inputs[1], reduce_to_shape(&neg, out_shape, shape(1)));
            }
            Op::Mul => {
                if node.inputs[0].is_some() {
                    let da = binary_broadcast(g, out_shape, &val(1), shape(1), out_shape, |x, y| x * y);
                    acc(grads, node.inputs[0], reduce_to_shape(&da, out_shape, shape(0)));
                }
                if node.inputs[1].is_some() {
                    let db = binary_broadcast(g, out_shape, &val(0), shape(0), out_shape, |x, y| x * y);
                    acc(grads, node.inputs[1], reduce_to_shape(&db, out_shape, shape(1)));
                }
            }
            Op::Div => {
                if node.inputs[0].is_some() {
                    let da = binary_broadcast(g, out_shape, &val(1), shape(1), out_shape, |x, y| x / y);
                    acc(grads, node.inputs[0], reduce_to_shape(&da, out_shape, shape(0)));
                }
                if node.inputs[1].is_some() {
                    let out_val = node.out.data.borrow();
                    let t: Vec<f64> = g.iter().zip(out_val.iter()).map(|(x, o)| x * o).collect();
                    let db = binary_broadcast(&t, out_shape, &val(1), shape(1), out_shape, |x, y| {
                        -(x / y)
                    });
                    acc(grads, node.inputs[1], reduce_to_shape(&db, out_shape, shape(1)));
                }
            }
            Op::Neg => acc(grads, node.inputs[0], g.iter().map(|x| -x).collect()),
            Op::Affine { m } => {
                acc(grads, node.inputs[0], g.iter().map(|x| m * x).collect());
            }
            Op::Exp => {
                let o = node.out.data.borrow();
                acc(grads, node.inputs[0], g.iter().zip(o.iter()).map(|(x, y)| x * y).collect());
            }
            Op::Log => {
                let a = val(0);
                acc(grads, node.inputs[0], g.iter().zip(a.iter()).map(|(x, y)| x / y).collect());
            }
            Op::Sqrt => {
                let o = node.out.data.borrow();
                acc(
                    grads,
                    node.inputs[0],
                    g.iter().zip(o.iter()).map(|(x, y)| 0.5 * x / y).collect(),
                );
            }
            Op::Tanh => {
                let o = node.out.data.borrow();
                acc(
                    grads,
                    node.inputs[0],
                    g.iter().zip(o.iter()).map(|(x, y)| x * (1.0 - y * y)).collect(),
                );
            }
            Op::Sigmoid => {
                let o = node.out.data.borrow();
                acc(
                    grads,
                    node.inputs[0],
                    g.iter().zip(o.iter()).map(|(x, y)| x * y * (1.0 - y)).collect(),
                );
            }
            Op::Relu => {
                let a = val(0);
                acc(
                    grads,
                    node.inputs[0],
                    g.iter()
                        .zip(a.iter())
                        .map(|(x, y)| if *y > 0.0 { *x } else { 0.0 })
                        .collect(),
                );
            }
            Op::MatMul => {
                let (m, k) = (shape(0)[0], shape(0)[1]);
                let n = shape(1)[1];
                if node.inputs[0].is_some() {
                    // dA = g · Bᵀ
                    let b = val(1);
                    let mut da = vec![0.0; m * k];
                    mm(m, n, k, g, n as isize, 1, &b, 1, n as isize, &mut da);
                    acc(grads, node.inputs[0], da);
                }
                if node.inputs[1].is_some() {
                    // dB = Aᵀ · g
                    let a = val(0);
                    let mut db = vec![0.0; k * n];
                    mm(k, m, n, &a, 1, k as isize, g, n as isize, 1, &mut db);
                    acc(grads, node.inputs[1], db);
                }
            }
            Op::Unfold(spec) => {
                let (bs, ch, h, w) = (shape(0)[0], shape(0)[1], shape(0)[2], shape(0)[3]);
                let l = spec.out_h * spec.out_w;
                let cols = bs * l;
                let mut dx = vec![0.0; bs * ch * h * w];
                for b in 0..bs {
                    for c in 0..ch {
                        for ki in 0..spec.kh {
                            for kj in 0..spec.kw {
                                let row = (c * spec.kh + ki) * spec.kw + kj;
                                for oh in 0..spec.out_h {
                                    let ih = (oh * spec.stride + ki) as isize - spec.pad as isize;
                                    if ih < 0 || ih >= h as isize {
                                        continue;
                                    }
                                    let dst_base = ((b * ch + c) * h + ih as usize) * w;
                                    let src_base = row * cols + b * l + oh * spec.out_w;
                                    for ow in 0..spec.out_w {
                                        let iw =
                                            (ow * spec.stride + kj) as isize - spec.pad as isize;
                                        if iw < 0 || iw >= w as isize {
                                            continue;
                                        }
                                        dx[dst_base + iw as usize] += g[src_base + ow];
                                    }
                                }
                            }
                        }
                    }
                }
                acc(grads, node.inputs[0], dx);
            }
            Op::Softmax { axis } => {
                let y = node.out.data.borrow();
                let (outer, lane, inner) = split_at_axis(out_shape, *axis);
                let mut dx = vec![0.0; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let at = |j: usize| (o * lane + j) * inner + i;
                        let mut dot = 0.0;
                        for j in 0..lane {
                            dot += g[at(j)] * y[at(j)];
                        }
                        for j in 0..lane {
                            dx[at(j)] = y[at(j)] * (g[at(j)] - dot);
                        }
                    }
                }
                acc(grads, node.inputs[0], dx);
            }
            Op::Sum { axis } | Op::Mean { axis } => {
                let n_in: usize = shape(0).iter().product();
                let scale = if matches!(self, Op::Mean { .. }) {
                    match axis {
                        Axis::All => 1.0 / n_in as f64,
                        Axis::At(ax) => 1.0 / shape(0)[*ax] as f64,
                    }
                } else {
                    1.0
                };
                let dx = match axis {
                    Axis::All => vec![g[0] * scale; n_in],
                    Axis::At(ax) => {
                        let (outer, lane, inner) = split_at_axis(shape(0), *ax);
                        let mut dx = vec![0.0; n_in];
                        for o in 0..outer {
                            for j in 0..lane {
                                let base = (o * lane + j) * inner;
                                for i in 0..inner {
                                    dx[base + i] = g[o * inner + i] * scale;
                                }
                            }
                        }
                        dx
                    }
                };
                acc(grads, node.inputs[0], dx);
            }
            Op::Max { arg } => {
                let n_in: usize = shape(0).iter().product();
                let mut dx = vec![0.0; n_in];
                for (o, &src_idx) in arg.iter().enumerate() {
                    dx[src_idx] += g[o];
                }
                acc(grads, node.inputs[0], dx);
            }
            Op::Reshape => acc(grads, node.inputs[0], g.to_vec()),
            Op::Permute { perm } => {
                let mut inverse = vec![0usize; perm.len()];
                for (d, &p) in perm.iter().enumerate() {
                    inverse[p] = d;
                }
                let dx = permute_copy(g, out_shape, &inverse, shape(0));
                acc(grads, node.inputs[0], dx);
            }
            Op::Concat { axis } => {
                let (outer, total, inner) = split_at_axis(out_shape, *axis);
                let mut offset = 0usize;
                for (i, id) in node.inputs.iter().enumerate() {
                    let ext = shape(i)[*axis];
                    let block = ext * inner;
                    if id.is_some() {
                        let mut dx = vec![0.0; outer * block];
                        for o in 0..outer {
                            let srcb = (o * total + offset) * inner;
                            dx[o * block..(o + 1) * block]
                                .copy_from_slice(&g[srcb..srcb + block]);
                        }
                        acc(grads, *id, dx);
                    }
                    offset += ext;
                }
            }
            Op::Slice { axis, start } => {
                let (outer, ext, inner) = split_at_axis(shape(0), *axis);
                let len = out_shape[*axis];
                let block = len * inner;
                let mut dx = vec![0.0; outer * ext * inner];
                for o in 0..outer {
                    let dst = (o * ext + start) * inner;
                    dx[dst..dst + block].copy_from_slice(&g[o * block..(o + 1) * block]);
                }
                acc(grads, node.inputs[0], dx);
            }
            Op::BceWithLogits { targets } => {
                let l = val(0);
                let n = l.len() as f64;
                let dx: Vec<f64> = l
                    .iter()
                    .zip(targets)
                    .map(|(&x, &y)| g[0] * (1.0 / (1.0 + (-x).exp()) - y) / n)
                    .collect();
                acc(grads, node.inputs[0], dx);
            }
            Op::CrossEntropy { classes } => {
                let l = val(0);
                let bs = classes.len();
                let k = shape(0)[1];
                let mut dx = vec![0.0; l.len()];
                for b in 0..bs {
                    let row = &l[b * k..(b + 1) * k];
                    let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let z: f64 = row.iter().map(|&v| (v - mx).exp()).sum();
                    for j in 0..k {
                        let p = (row[j] - mx).exp() / z;
                        let y = if j == classes[b] { 1.0 } else { 0.0 };
                        dx[b * k + j] = g[0] * (p - y) / bs as f64;
                    }
                }
                acc(grads, node.inputs[0], dx);
            }
        }
    }
}
