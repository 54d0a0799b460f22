use layers::{Adam, NormLayer};
use proptest::prelude::*;
use tensor::{Axis, Tape, Tensor};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Normalization removes any positive rescaling and constant shift of its input.
    #[test]
    fn norm_is_scale_and_shift_invariant(
        vals in prop::collection::vec(-50.0f64..50.0, 8),
        scale in 0.1f64..20.0,
        shift in -30.0f64..30.0,
    ) {
        // Guard against degenerate rows where variance ~ 0 and the norm's ε
        // dominates; the scaled copy must clear the bar too.
        let mean = vals.iter().sum::<f64>() / 8.0;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0;
        prop_assume!(var > 0.5 && var * scale * scale > 0.5);

        let n = NormLayer::layer(8);
        let tape = Tape::new();
        let x = Tensor::new(&[1, 8], vals.clone());
        let x2 = Tensor::new(&[1, 8], vals.iter().map(|v| v * scale + shift).collect());
        let a = n.forward(&tape, &x).to_vec();
        let b = n.forward(&tape, &x2).to_vec();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() < 1e-4, "{u} vs {v}");
        }
    }

    // Rescaling every gradient by a positive constant cannot flip the
    // direction of Adam's first update.
    #[test]
    fn first_adam_update_sign_ignores_gradient_scale(
        g in prop::collection::vec(-5.0f64..5.0, 4),
        factor in prop_oneof![Just(10.0f64), Just(100.0), Just(0.1)],
    ) {
        prop_assume!(g.iter().all(|v| v.abs() > 1e-6));

        let run = |grads: &[f64]| -> Vec<f64> {
            let w = Tensor::param(&[4], vec![1.0; 4]);
            let mut opt = Adam::new(vec![("w".into(), w.clone())], 0.01, 0.0);
            let tape = Tape::new();
            let loss = tape.sum(&tape.mul(&w, &Tensor::new(&[4], grads.to_vec())), Axis::All);
            let gm = tape.backward(&loss);
            opt.step(&gm).unwrap();
            w.to_vec().iter().map(|v| v - 1.0).collect()
        };

        let base = run(&g);
        let scaled = run(&g.iter().map(|v| v * factor).collect::<Vec<_>>());
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert!(a.signum() == b.signum(), "{a} vs {b}");
        }
    }
}
