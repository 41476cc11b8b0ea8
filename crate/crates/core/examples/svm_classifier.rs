//! One-vs-one RBF SVM trained by SMO: grid search on a validation split,
//! KKT audit of every pairwise machine, save and reload.
//!
//! cargo run --release --example svm_classifier

use leafkit::svm::{grid_search, SmoConfig, SvmGrid, SvmModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn blobs(per: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<usize>) {
    let centers = [[0.0, 0.0, 0.0], [2.5, 0.0, 1.0], [0.0, 2.5, -1.0], [2.0, 2.0, 2.0]];
    let noise = Normal::new(0.0, 0.7).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..per {
            x.push(c.iter().map(|v| v + noise.sample(rng)).collect());
            y.push(k);
        }
    }
    (x, y)
}

fn main() -> leafkit::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (tx, ty) = blobs(40, &mut rng);
    let (vx, vy) = blobs(15, &mut rng);
    let (sx, sy) = blobs(15, &mut rng);

    let smo = SmoConfig::default();
    let result = grid_search(&tx, &ty, &vx, &vy, &SvmGrid::default(), &smo)?;
    for cell in &result.cells {
        println!("C {:>6}  gamma {:.4e}  valid {:.3}", cell.c, cell.gamma, cell.valid_accuracy);
    }
    let model = result.model;
    println!(
        "best C {} gamma {:.4e}; test accuracy {:.3}; worst KKT violation {:.2e}",
        result.best.c,
        result.best.gamma,
        model.accuracy(&sx, &sy)?,
        model.kkt_violation
    );

    let path = std::env::temp_dir().join("leafkit-svm.bin");
    model.save(&path)?;
    let reloaded = SvmModel::load(&path)?;
    assert_eq!(reloaded.predict(&sx)?, model.predict(&sx)?);
    println!("model saved to {} and reloaded with identical predictions", path.display());
    Ok(())
}
