mod common;

use common::qp::{random_problems, reference_dual};
use leafkit::svm::{
    grid_search, gram_matrix, kkt_violation, train_binary, SmoConfig, SvmGrid, SvmModel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn blobs(centers: &[[f64; 2]], per: usize, sd: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..per {
        for (k, c) in centers.iter().enumerate() {
            x.push(vec![c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)]);
            y.push(k);
        }
    }
    (x, y)
}

#[test]
fn smo_matches_reference_qp_and_passes_kkt_audit() {
    for (k, p) in random_problems(20, 5).iter().enumerate() {
        let cfg = SmoConfig::default();
        let fit = train_binary(&p.x, &p.y, p.c, p.gamma, &cfg).unwrap();
        let rows: Vec<&[f64]> = p.x.iter().map(Vec::as_slice).collect();
        let gram = gram_matrix(&rows, p.gamma);
        let reference = reference_dual(&gram, &p.y, p.c, 20_000);
        let ours = leafkit::svm::dual_objective(&gram, &p.y, &fit.alpha);
        let rel = (ours - reference).abs() / reference.abs();
        assert!(rel <= 1e-3, "problem {k}: smo {ours} vs reference {reference}");
        assert!(kkt_violation(&fit, &p.x, &p.y) <= cfg.tol, "problem {k}");
        let balance: f64 = fit.alpha.iter().zip(&p.y).map(|(a, y)| a * y).sum();
        assert!(balance.abs() < 1e-6);
        assert!(fit.alpha.iter().all(|&a| (0.0..=p.c).contains(&a)));
    }
}

#[test]
fn separable_blobs_are_fit_without_bounded_multipliers() {
    let (x, labels) = blobs(&[[-3.0, 0.0], [3.0, 0.0]], 20, 0.5, 1);
    let y: Vec<f64> = labels.iter().map(|&l| if l == 0 { -1.0 } else { 1.0 }).collect();
    let fit = train_binary(&x, &y, 100.0, 0.5, &SmoConfig::default()).unwrap();
    for (xi, yi) in x.iter().zip(&y) {
        assert!(yi * fit.svm.decision(xi) > 0.0);
    }
    assert!(fit.alpha.iter().all(|&a| a < 0.5 * 100.0));
}

#[test]
fn duplicating_points_keeps_the_decision_function() {
    let (x, labels) = blobs(&[[-2.0, 0.0], [2.0, 0.5]], 8, 0.6, 2);
    let y: Vec<f64> = labels.iter().map(|&l| if l == 0 { -1.0 } else { 1.0 }).collect();
    let cfg = SmoConfig { tol: 1e-9, ..SmoConfig::default() };
    let once = train_binary(&x, &y, 1e4, 0.5, &cfg).unwrap();
    let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
    let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
    let twice = train_binary(&x2, &y2, 1e4, 0.5, &cfg).unwrap();
    for i in -10..=10 {
        for j in -5..=5 {
            let p = [i as f64 * 0.4, j as f64 * 0.4];
            assert!((once.svm.decision(&p) - twice.svm.decision(&p)).abs() < 1e-6);
        }
    }
}

#[test]
fn three_gaussian_classes_are_fit_exactly() {
    let (x, y) = blobs(&[[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]], 15, 0.5, 3);
    let m = SvmModel::train(&x, &y, 10.0, 0.5, &SmoConfig::default()).unwrap();
    assert_eq!(m.machines.len(), 3);
    assert_eq!(m.predict(&x).unwrap(), y);
    assert!(m.kkt_violation <= 1e-3);
}

#[test]
fn two_classes_reduce_to_the_binary_machine() {
    let (x, labels) = blobs(&[[0.0, 0.0], [1.5, 1.0]], 20, 0.8, 4);
    let m = SvmModel::train(&x, &labels, 1.0, 0.5, &SmoConfig::default()).unwrap();
    // the binary machine on the same standardized data
    let z: Vec<Vec<f64>> = x.iter().map(|r| m.scaler.transform(r).unwrap()).collect();
    let y: Vec<f64> = labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
    let b = train_binary(&z, &y, 1.0, 0.5, &SmoConfig::default()).unwrap();
    for i in -8..=8 {
        for j in -8..=8 {
            let p = vec![i as f64 * 0.3, j as f64 * 0.3];
            let bin = if b.svm.decision(&m.scaler.transform(&p).unwrap()) > 0.0 { 0 } else { 1 };
            assert_eq!(m.predict_one(&p).unwrap(), bin);
        }
    }
}

#[test]
fn training_order_does_not_matter() {
    let (x, y) = blobs(&[[0.0, 0.0], [2.0, 0.0], [1.0, 2.0], [3.0, 3.0]], 10, 1.0, 5);
    let a = SvmModel::train(&x, &y, 1.0, 0.5, &SmoConfig::default()).unwrap();
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.reverse();
    idx.rotate_left(7);
    let xp: Vec<Vec<f64>> = idx.iter().map(|&i| x[i].clone()).collect();
    let yp: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
    let b = SvmModel::train(&xp, &yp, 1.0, 0.5, &SmoConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn translation_is_absorbed_by_the_standardizer() {
    let (x, y) = blobs(&[[0.0, 0.0], [2.0, 1.0], [1.0, 3.0]], 10, 0.7, 6);
    let shifted: Vec<Vec<f64>> = x.iter().map(|r| vec![r[0] + 4.0, r[1] - 3.0]).collect();
    let a = SvmModel::train(&x, &y, 1.0, 0.5, &SmoConfig::default()).unwrap();
    let b = SvmModel::train(&shifted, &y, 1.0, 0.5, &SmoConfig::default()).unwrap();
    for (ma, mb) in a.machines.iter().zip(&b.machines) {
        for (p, q) in x.iter().zip(&shifted) {
            let da = ma.svm.decision(&a.scaler.transform(p).unwrap());
            let db = mb.svm.decision(&b.scaler.transform(q).unwrap());
            assert!((da - db).abs() < 1e-9);
        }
    }
}

#[test]
fn free_support_vectors_predict_their_own_label() {
    let (x, y) = blobs(&[[-2.0, 0.0], [2.0, 0.0]], 15, 0.5, 7);
    let m = SvmModel::train(&x, &y, 100.0, 0.5, &SmoConfig::default()).unwrap();
    let svm = &m.machines[0].svm;
    let mut checked = 0;
    for (sv, coef) in svm.support.iter().zip(&svm.coef) {
        if coef.abs() < svm.c {
            let label = if *coef > 0.0 { 0 } else { 1 };
            let raw: Vec<f64> = sv.iter().zip(&m.scaler.scale).zip(&m.scaler.mean).map(|((z, s), mu)| z * s + mu).collect();
            assert_eq!(m.predict_one(&raw).unwrap(), label);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn grid_search_rules() {
    let (x, y) = blobs(&[[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]], 10, 0.5, 8);
    let (vx, vy) = blobs(&[[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]], 5, 0.5, 9);
    let single = SvmGrid { c: vec![3.0], gamma_scaled: vec![0.7] };
    let r = grid_search(&x, &y, &vx, &vy, &single, &SmoConfig::default()).unwrap();
    assert_eq!((r.best.c, r.best.gamma), (3.0, 0.7 / 2.0));
    let r = grid_search(&x, &y, &vx, &vy, &SvmGrid::default(), &SmoConfig::default()).unwrap();
    assert_eq!(r.best.valid_accuracy, 1.0);
    assert_eq!(r.cells.len(), 16);
    // ties prefer the earliest (smallest C, then gamma) perfect cell
    let first = r.cells.iter().find(|c| c.valid_accuracy == 1.0).unwrap();
    assert_eq!((first.c, first.gamma), (r.best.c, r.best.gamma));
    assert!(grid_search(&x, &y, &vx, &vy, &SvmGrid { c: vec![], gamma_scaled: vec![1.0] }, &SmoConfig::default()).is_err());
}

#[test]
fn model_file_round_trip() {
    let (x, y) = blobs(&[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]], 8, 0.9, 10);
    let m = SvmModel::train(&x, &y, 1.0, 0.5, &SmoConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("svm.bin");
    m.save(&path).unwrap();
    assert_eq!(SvmModel::load(&path).unwrap(), m);
}
