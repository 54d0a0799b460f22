//! Numpy-style broadcasting over trailing axes, plus the gradient-side reduction
//! that folds a broadcast result back onto an operand's shape.

/// Broadcast shape of two operands, aligning trailing axes. `None` if incompatible.
pub(crate) fn broadcast_shape(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let nd = a.len().max(b.len());
    let mut out = vec![0usize; nd];
    for i in 0..nd {
        let da = if i < nd - a.len() { 1 } else { a[i - (nd - a.len())] };
        let db = if i < nd - b.len() { 1 } else { b[i - (nd - b.len())] };
        out[i] = if da == db {
            da
        } else if da == 1 {
            db
        } else if db == 1 {
            da
        } else {
            return None;
        };
    }
    Some(out)
}

/// Row-major strides, with stride 0 on axes the operand broadcasts along.
fn broadcast_strides(shape: &[usize], out_shape: &[usize]) -> Vec<usize> {
    let offset = out_shape.len() - shape.len();
    let mut strides = vec![0usize; out_shape.len()];
    let mut s = 1usize;
    for i in (0..shape.len()).rev() {
        strides[offset + i] = if shape[i] == 1 { 0 } else { s };
        s *= shape[i];
    }
    strides
}

/// Applies `f` elementwise over the broadcast of `a` and `b`.
pub(crate) fn binary_broadcast(
    a: &[f64],
    a_shape: &[usize],
    b: &[f64],
    b_shape: &[usize],
    out_shape: &[usize],
    f: impl Fn(f64, f64) -> f64 + Copy,
) -> Vec<f64> {
    let n: usize = out_shape.iter().product();
    let mut out = vec![0.0; n];
    if a_shape == b_shape {
        for i in 0..n {
            out[i] = f(a[i], b[i]);
        }
        return out;
    }
    if b.len() == 1 {
        let bv = b[0];
        for i in 0..n {
            out[i] = f(a[i], bv);
        }
        return out;
    }
    if a.len() == 1 {
        let av = a[0];
        for i in 0..n {
            out[i] = f(av, b[i]);
        }
        return out;
    }
    let sa = broadcast_strides(a_shape, out_shape);
    let sb = broadcast_strides(b_shape, out_shape);
    fill_rec(&mut out, a, b, out_shape, &sa, &sb, 0, 0, 0, f);
    out
}

#[allow(clippy::too_many_arguments)]
fn fill_rec(
    out: &mut [f64],
    a: &[f64],
    b: &[f64],
    shape: &[usize],
    sa: &[usize],
    sb: &[usize],
    dim: usize,
    ao: usize,
    bo: usize,
    f: impl Fn(f64, f64) -> f64 + Copy,
) {
    if dim == shape.len() - 1 {
        let n = shape[dim];
        match (sa[dim], sb[dim]) {
            (1, 1) => {
                for i in 0..n {
                    out[i] = f(a[ao + i], b[bo + i]);
                }
            }
            (1, 0) => {
                let bv = b[bo];
                for i in 0..n {
                    out[i] = f(a[ao + i], bv);
                }
            }
            (0, 1) => {
                let av = a[ao];
                for i in 0..n {
                    out[i] = f(av, b[bo + i]);
                }
            }
            (la, lb) => {
                for i in 0..n {
                    out[i] = f(a[ao + i * la], b[bo + i * lb]);
                }
            }
        }
        return;
    }
    let inner: usize = shape[dim + 1..].iter().product();
    for i in 0..shape[dim] {
        fill_rec(
            &mut out[i * inner..(i + 1) * inner],
            a,
            b,
            shape,
            sa,
            sb,
            dim + 1,
            ao + i * sa[dim],
            bo + i * sb[dim],
            f,
        );
    }
}

/// Folds a gradient of `from_shape` back to `to_shape` by summing the axes the
/// operand was broadcast along.
pub(crate) fn reduce_to_shape(grad: &[f64], from_shape: &[usize], to_shape: &[usize]) -> Vec<f64> {
    if from_shape == to_shape {
        return grad.to_vec();
    }
    let n_to: usize = to_shape.iter().product();
    let mut out = vec![0.0; n_to];
    if n_to == 1 {
        out[0] = grad.iter().sum();
        return out;
    }
    let strides = broadcast_strides(to_shape, from_shape);
    // Walk the full-size gradient once, scattering into the reduced buffer.
    let nd = from_shape.len();
    let mut idx = vec![0usize; nd];
    let mut to_off = 0usize;
    for &g in grad {
        out[to_off] += g;
        // Increment the multi-index, updating the target offset incrementally.
        for d in (0..nd).rev() {
            idx[d] += 1;
            to_off += strides[d];
            if idx[d] < from_shape[d] {
                break;
            }
            to_off -= strides[d] * from_shape[d];
            idx[d] = 0;
        }
    }
    out
}
