use tensor::{Axis, Tape, Tensor};

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

fn close_all(xs: &[f64], ys: &[f64], tol: f64) {
    assert_eq!(xs.len(), ys.len());
    for (x, y) in xs.iter().zip(ys) {
        close(*x, *y, tol);
    }
}

#[test]
fn add_elementwise() {
    let t = Tape::new();
    let a = Tensor::new(&[2], vec![1.0, 2.0]);
    let b = Tensor::new(&[2], vec![3.0, 4.0]);
    assert_eq!(t.add(&a, &b).to_vec(), vec![4.0, 6.0]);
}

#[test]
fn sigmoid_at_zero_is_half() {
    let t = Tape::new();
    let x = Tensor::new(&[1], vec![0.0]);
    close(t.sigmoid(&x).to_vec()[0], 0.5, 1e-15);
}

#[test]
fn mul_gradient_is_other_factor() {
    let t = Tape::new();
    let x = Tensor::param(&[1], vec![2.0]);
    let y = Tensor::param(&[1], vec![3.0]);
    let p = t.mul(&x, &y);
    let gm = t.backward(&p);
    assert_eq!(gm.wrt(&x).unwrap(), vec![3.0]);
    assert_eq!(gm.wrt(&y).unwrap(), vec![2.0]);
}

#[test]
fn matmul_identity_passthrough() {
    let t = Tape::new();
    let i2 = Tensor::new(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]);
    let v = Tensor::new(&[2, 1], vec![3.0, 4.0]);
    assert_eq!(t.matmul(&i2, &v).to_vec(), vec![3.0, 4.0]);
}

#[test]
fn matmul_row_times_column() {
    let t = Tape::new();
    let a = Tensor::new(&[1, 2], vec![1.0, 2.0]);
    let b = Tensor::new(&[2, 1], vec![3.0, 4.0]);
    let c = t.matmul(&a, &b);
    assert_eq!(c.shape(), &[1, 1]);
    assert_eq!(c.to_vec(), vec![11.0]);
}

#[test]
fn conv2d_identity_kernel() {
    let t = Tape::new();
    let x = Tensor::new(&[1, 1, 3, 3], (1..=9).map(f64::from).collect());
    let k = Tensor::new(&[1, 1, 1, 1], vec![1.0]);
    let y = t.conv2d(&x, &k, 1, 0);
    assert_eq!(y.shape(), &[1, 1, 3, 3]);
    assert_eq!(y.to_vec(), x.to_vec());
}

#[test]
fn conv2d_all_ones_sums_window() {
    let t = Tape::new();
    let x = Tensor::full(&[1, 1, 3, 3], 1.0);
    let k = Tensor::full(&[1, 1, 3, 3], 1.0);
    let y = t.conv2d(&x, &k, 1, 0);
    assert_eq!(y.shape(), &[1, 1, 1, 1]);
    assert_eq!(y.to_vec(), vec![9.0]);
}

#[test]
fn conv2d_output_extent_formula() {
    let t = Tape::new();
    let x = Tensor::full(&[2, 3, 11, 9], 0.25);
    let k = Tensor::full(&[5, 3, 3, 3], 0.5);
    let y = t.conv2d(&x, &k, 2, 1);
    assert_eq!(y.shape(), &[2, 5, 6, 5]);
}

#[test]
fn softmax_symmetry_and_stability() {
    let t = Tape::new();
    let even = t.softmax(&Tensor::new(&[2], vec![0.0, 0.0]), 0);
    close_all(&even.to_vec(), &[0.5, 0.5], 1e-15);
    let huge = t.softmax(&Tensor::new(&[2], vec![1000.0, 1000.0]), 0);
    close_all(&huge.to_vec(), &[0.5, 0.5], 1e-15);
    assert!(huge.to_vec().iter().all(|v| v.is_finite()));
}

#[test]
fn softmax_closed_form() {
    // softmax([0, ln 3]) = [1/(1+3), 3/(1+3)]
    let t = Tape::new();
    let y = t.softmax(&Tensor::new(&[2], vec![0.0, 3.0f64.ln()]), 0);
    close_all(&y.to_vec(), &[0.25, 0.75], 1e-15);
}

#[test]
fn sum_along_axis() {
    let t = Tape::new();
    let x = Tensor::new(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]);
    let s = t.sum(&x, Axis::At(1));
    assert_eq!(s.shape(), &[2]);
    assert_eq!(s.to_vec(), vec![3.0, 7.0]);
}

#[test]
fn mean_over_all() {
    let t = Tape::new();
    let x = Tensor::new(&[2], vec![2.0, 4.0]);
    assert_eq!(t.mean(&x, Axis::All).item(), 3.0);
}

#[test]
fn max_tie_routes_gradient_to_first_index() {
    let t = Tape::new();
    let x = Tensor::param(&[3], vec![2.0, 2.0, 1.0]);
    let m = t.max(&x, Axis::All);
    assert_eq!(m.item(), 2.0);
    let gm = t.backward(&m);
    assert_eq!(gm.wrt(&x).unwrap(), vec![1.0, 0.0, 0.0]);
}

#[test]
fn square_gradient() {
    let t = Tape::new();
    let x = Tensor::param(&[1], vec![3.0]);
    let y = t.mul(&x, &x);
    let gm = t.backward(&y);
    assert_eq!(gm.wrt(&x).unwrap(), vec![6.0]);
}

#[test]
fn unused_watched_leaf_gets_zero_gradient() {
    let t = Tape::new();
    let x = Tensor::param(&[1], vec![1.0]);
    let y = Tensor::param(&[3], vec![1.0, 2.0, 3.0]);
    t.watch(&y);
    let loss = t.mul(&x, &x);
    let gm = t.backward(&loss);
    assert_eq!(gm.wrt(&y).unwrap(), vec![0.0, 0.0, 0.0]);
    assert_eq!(y.grad().unwrap(), vec![0.0, 0.0, 0.0]);
}

#[test]
fn gradients_accumulate_into_params() {
    let t = Tape::new();
    let x = Tensor::param(&[1], vec![3.0]);
    let y = t.mul(&x, &x);
    t.backward(&y);
    t.backward(&y);
    assert_eq!(x.grad().unwrap(), vec![12.0]);
    x.zero_grad();
    assert_eq!(x.grad(), None);
}

#[test]
fn broadcast_add_row_vector() {
    let t = Tape::new();
    let a = Tensor::new(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    let b = Tensor::new(&[3], vec![10.0, 20.0, 30.0]);
    let c = t.add(&a, &b);
    assert_eq!(c.to_vec(), vec![11.0, 22.0, 33.0, 14.0, 25.0, 36.0]);
}

#[test]
fn broadcast_gradient_folds_back() {
    let t = Tape::new();
    let a = Tensor::param(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]);
    let b = Tensor::param(&[2], vec![10.0, 20.0]);
    let s = t.sum(&t.mul(&a, &b), Axis::All);
    let gm = t.backward(&s);
    assert_eq!(gm.wrt(&a).unwrap(), vec![10.0, 20.0, 10.0, 20.0]);
    assert_eq!(gm.wrt(&b).unwrap(), vec![4.0, 6.0]);
}

#[test]
fn concat_and_split_gradients() {
    let t = Tape::new();
    let a = Tensor::param(&[1, 2], vec![1.0, 2.0]);
    let b = Tensor::param(&[1, 2], vec![3.0, 4.0]);
    let c = t.concat(&[&a, &b], 0);
    assert_eq!(c.shape(), &[2, 2]);
    assert_eq!(c.to_vec(), vec![1.0, 2.0, 3.0, 4.0]);
    let w = Tensor::new(&[2, 2], vec![1.0, 10.0, 100.0, 1000.0]);
    let loss = t.sum(&t.mul(&c, &w), Axis::All);
    let gm = t.backward(&loss);
    assert_eq!(gm.wrt(&a).unwrap(), vec![1.0, 10.0]);
    assert_eq!(gm.wrt(&b).unwrap(), vec![100.0, 1000.0]);
}

#[test]
fn slice_extracts_contiguous_block() {
    let t = Tape::new();
    let x = Tensor::new(&[2, 4], (0..8).map(f64::from).collect());
    let s = t.slice(&x, 1, 1, 2);
    assert_eq!(s.shape(), &[2, 2]);
    assert_eq!(s.to_vec(), vec![1.0, 2.0, 5.0, 6.0]);
}

#[test]
#[should_panic(expected = "out of bounds for axis")]
fn slice_out_of_range_panics() {
    let t = Tape::new();
    t.slice(&Tensor::full(&[2, 4], 1.0), 1, 3, 2);
}

#[test]
fn permute_round_trip() {
    let t = Tape::new();
    let x = Tensor::new(&[2, 3, 4], (0..24).map(f64::from).collect());
    let p = t.permute(&x, &[2, 0, 1]);
    assert_eq!(p.shape(), &[4, 2, 3]);
    let back = t.permute(&p, &[1, 2, 0]);
    assert_eq!(back.to_vec(), x.to_vec());
}

#[test]
fn forward_is_deterministic() {
    let run = || {
        let t = Tape::new();
        let x = Tensor::new(&[4, 4], (0..16).map(|i| (i as f64).sin()).collect());
        let y = t.softmax(&t.matmul(&x, &x), 1);
        y.to_vec()
    };
    let a = run();
    let b = run();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn bce_matches_hand_computation() {
    let t = Tape::new();
    let logits = Tensor::new(&[2], vec![0.0, 2.0]);
    let loss = t.bce_with_logits(&logits, &[1.0, 0.0]);
    // term 1: -ln σ(0) = ln 2; term 2: -ln(1-σ(2)) = 2 + ln(1+e⁻²)
    let hand = ((2f64).ln() + 2.0 + (-2.0f64).exp().ln_1p()) / 2.0;
    close(loss.item(), hand, 1e-12);
}

#[test]
fn cross_entropy_uniform_logits() {
    let t = Tape::new();
    let logits = Tensor::new(&[2, 4], vec![0.0; 8]);
    let loss = t.cross_entropy_logits(&logits, &[0, 3]);
    close(loss.item(), 4.0f64.ln(), 1e-12);
}

#[test]
#[should_panic(expected = "not broadcast-compatible")]
fn add_shape_mismatch_panics() {
    let t = Tape::new();
    let a = Tensor::new(&[2], vec![1.0, 2.0]);
    let b = Tensor::new(&[3], vec![1.0, 2.0, 3.0]);
    t.add(&a, &b);
}

#[test]
#[should_panic(expected = "inner dimensions differ")]
fn matmul_inner_mismatch_panics() {
    let t = Tape::new();
    let a = Tensor::full(&[2, 3], 1.0);
    let b = Tensor::full(&[4, 2], 1.0);
    t.matmul(&a, &b);
}

#[test]
#[should_panic(expected = "larger than padded input")]
fn conv2d_oversized_kernel_panics() {
    let t = Tape::new();
    let x = Tensor::full(&[1, 1, 4, 4], 1.0);
    let k = Tensor::full(&[1, 1, 5, 5], 1.0);
    t.conv2d(&x, &k, 1, 0);
}

#[test]
#[should_panic(expected = "divisor contains zero")]
fn div_by_zero_panics() {
    let t = Tape::new();
    let a = Tensor::full(&[2], 1.0);
    let b = Tensor::new(&[2], vec![1.0, 0.0]);
    t.div(&a, &b);
}

#[test]
#[should_panic(expected = "must be positive")]
fn log_of_nonpositive_panics() {
    let t = Tape::new();
    t.log(&Tensor::new(&[2], vec![1.0, -1.5]));
}

#[test]
#[should_panic(expected = "loss must be a scalar")]
fn backward_rejects_non_scalar_loss() {
    let t = Tape::new();
    let x = Tensor::param(&[2], vec![1.0, 2.0]);
    let y = t.mul(&x, &x);
    t.backward(&y);
}

#[test]
#[should_panic(expected = "cannot view shape")]
fn reshape_element_count_mismatch_panics() {
    let t = Tape::new();
    t.reshape(&Tensor::full(&[2, 3], 1.0), &[7]);
}

#[test]
fn constant_only_ops_stay_off_the_tape() {
    let t = Tape::new();
    let a = Tensor::new(&[2], vec![1.0, 2.0]);
    let b = Tensor::new(&[2], vec![3.0, 4.0]);
    t.add(&a, &b);
    assert_eq!(t.len(), 0);
    let p = Tensor::param(&[2], vec![1.0, 2.0]);
    t.add(&a, &p);
    assert!(t.len() > 0);
}
