use leafkit::neural::{
    train_encoder, EncoderArch, EncoderModel, LabeledSet, Mode, Tensor, TrainConfig,
};
use leafkit::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn blobs(n: usize, seed: u64) -> (Vec<Tensor>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        let y = i % 2;
        let c = if y == 0 { -2.0 } else { 2.0 };
        let v: Vec<f64> = (0..4).map(|_| c + noise.sample(&mut rng)).collect();
        xs.push(Tensor::new(vec![4], v).unwrap());
        ys.push(y);
    }
    (xs, ys)
}

#[test]
fn separable_blobs_reach_full_training_accuracy() {
    let (xs, ys) = blobs(60, 1);
    let cfg = TrainConfig {
        epochs: 50,
        ..TrainConfig::default()
    };
    let set = LabeledSet { inputs: &xs, labels: &ys };
    let (model, hist) = train_encoder(&EncoderArch::dense(4), 2, set, None, &cfg).unwrap();
    let pred = model.predict(&xs).unwrap();
    assert_eq!(pred, ys);
    assert_eq!(hist.epochs.len(), 50);
}

#[test]
fn fixed_seed_gives_identical_history() {
    let (xs, ys) = blobs(40, 2);
    let (vx, vy) = blobs(10, 3);
    let cfg = TrainConfig {
        epochs: 5,
        seed: 42,
        ..TrainConfig::default()
    };
    let run = || {
        train_encoder(
            &EncoderArch::dense(4),
            2,
            LabeledSet { inputs: &xs, labels: &ys },
            Some(LabeledSet { inputs: &vx, labels: &vy }),
            &cfg,
        )
        .unwrap()
    };
    let (m1, h1) = run();
    let (m2, h2) = run();
    assert_eq!(h1, h2);
    assert_eq!(m1, m2);
}

#[test]
fn huge_learning_rate_reports_divergence() {
    let (mut xs, ys) = blobs(20, 4);
    xs[0].data_mut()[0] = 1e200;
    let cfg = TrainConfig {
        epochs: 20,
        learning_rate: 1e150,
        ..TrainConfig::default()
    };
    let err = train_encoder(&EncoderArch::dense(4), 2, LabeledSet { inputs: &xs, labels: &ys }, None, &cfg)
        .unwrap_err();
    match err {
        Error::Divergence { learning_rate, .. } => assert_eq!(learning_rate, 1e150),
        other => panic!("expected divergence, got {other}"),
    }
}

#[test]
fn zero_loss_batch_leaves_only_the_l2_gradient() {
    let mut m = EncoderModel::new(EncoderArch::dense(3), 2, 9);
    // Drive the head so that class 0 wins with probability 1 in f64.
    if let leafkit::neural::Layer::Dense(d) = &mut m.head.layers[0] {
        d.weight.fill(0.0);
        d.bias = vec![1e4, -1e4];
    }
    let x = Tensor::new(vec![2, 3], vec![0.3, -0.2, 0.9, 0.1, 0.5, -0.7]).unwrap();
    let l2 = 0.01;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (_, probs) = m.compute_gradients(x, &[0, 0], l2, Mode::Infer, &mut rng).unwrap();
    assert_eq!(probs.data()[0], 1.0);
    for net in [&mut m.body, &mut m.head] {
        for (w, g, decay) in net.params_mut() {
            for (wi, gi) in w.iter().zip(g.iter()) {
                let expected = if decay { l2 * wi } else { 0.0 };
                assert_eq!(*gi, expected);
            }
        }
    }
}

#[test]
fn doubling_l2_doubles_the_decay_component() {
    let x = Tensor::new(vec![2, 3], vec![0.3, -0.2, 0.9, 0.1, 0.5, -0.7]).unwrap();
    let grads = |l2: f64| {
        let mut m = EncoderModel::new(EncoderArch::dense(3), 2, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        m.compute_gradients(x.clone(), &[0, 1], l2, Mode::Infer, &mut rng).unwrap();
        m.body
            .params_mut()
            .into_iter()
            .chain(m.head.params_mut())
            .flat_map(|p| p.1.clone())
            .collect::<Vec<f64>>()
    };
    let (g0, g1, g2) = (grads(0.0), grads(0.1), grads(0.2));
    for i in 0..g0.len() {
        let d1 = g1[i] - g0[i];
        let d2 = g2[i] - g0[i];
        assert!((d2 - 2.0 * d1).abs() <= 1e-12 * (1.0 + d2.abs()));
    }
}

fn random_images(n: usize, shape: &[usize], seed: u64) -> Vec<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len: usize = shape.iter().product();
    (0..n)
        .map(|_| Tensor::new(shape.to_vec(), (0..len).map(|_| rng.gen::<f64>()).collect()).unwrap())
        .collect()
}

#[test]
fn inference_ignores_batch_composition() {
    let xs = random_images(6, &[3, 32, 32], 5);
    let labels = vec![0, 1, 2, 0, 1, 2];
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 3,
        ..TrainConfig::default()
    };
    let arch = EncoderArch::conv2d(3, 32).unwrap();
    let (model, _) = train_encoder(&arch, 3, LabeledSet { inputs: &xs, labels: &labels }, None, &cfg).unwrap();
    let all = model.encode(&xs).unwrap();
    for (i, x) in xs.iter().enumerate() {
        assert_eq!(model.encode(std::slice::from_ref(x)).unwrap()[0], all[i]);
    }
}

#[test]
fn save_load_reproduces_inference_bit_for_bit() {
    let xs = random_images(4, &[1, 1, 60], 6);
    let labels = vec![0, 1, 0, 1];
    let cfg = TrainConfig {
        epochs: 2,
        batch_size: 2,
        ..TrainConfig::default()
    };
    let arch = EncoderArch::conv1d(60).unwrap();
    let (model, _) = train_encoder(&arch, 2, LabeledSet { inputs: &xs, labels: &labels }, None, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("enc.bin");
    model.save(&path).unwrap();
    let back = EncoderModel::load(&path).unwrap();
    let a = model.encode(&xs).unwrap();
    let b = back.encode(&xs).unwrap();
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    // dense encoders carry their standardizer
    let (dx, dy) = blobs(10, 8);
    let (dm, _) =
        train_encoder(&EncoderArch::dense(4), 2, LabeledSet { inputs: &dx, labels: &dy }, None, &cfg).unwrap();
    dm.save(&path).unwrap();
    let back = EncoderModel::load(&path).unwrap();
    assert_eq!(back.standardizer, dm.standardizer);
    assert_eq!(back.encode(&dx).unwrap(), dm.encode(&dx).unwrap());
}

#[test]
fn config_validation() {
    let bad = TrainConfig {
        dropout: 1.0,
        ..TrainConfig::default()
    };
    assert!(bad.validate().is_err());
    assert!(TrainConfig::default().validate().is_ok());
}

mod softmax_props {
    use leafkit::neural::{softmax, Tensor};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn extreme_rows_stay_normalized(
            rows in 1usize..6,
            logits in prop::collection::vec(-700.0f64..700.0, 60),
        ) {
            let cols = logits.len() / rows;
            let t = Tensor::new(vec![rows, cols], logits[..rows * cols].to_vec()).unwrap();
            let p = softmax(&t);
            for r in 0..rows {
                let row = &p.data()[r * cols..(r + 1) * cols];
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                prop_assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }

        #[test]
        fn moderate_logits_give_strictly_positive_probabilities(
            logits in prop::collection::vec(-50.0f64..50.0, 2..20),
        ) {
            let n = logits.len();
            let p = softmax(&Tensor::new(vec![1, n], logits).unwrap());
            prop_assert!(p.data().iter().all(|&v| v > 0.0));
            prop_assert!((p.data().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}
