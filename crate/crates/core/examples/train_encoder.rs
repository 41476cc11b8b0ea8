//! Train the shape (dense) and xy-projection (1-D conv) encoders with a
//! softmax head on synthetic leaves and print the learning curves.
//!
//! cargo run --release --example train_encoder -- [per_class] [epochs]

use leafkit::neural::{train_encoder, LabeledSet, Tensor, TrainConfig};
use leafkit::pipeline::synth::{synth_leaf, SYNTH_CLASSES, SYNTH_SIDE};
use leafkit::pipeline::{extract_from_image, Branch, ExtractConfig};

fn main() -> leafkit::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let per_class: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(20);
    let epochs = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let cfg = ExtractConfig {
        side: SYNTH_SIDE,
        ..ExtractConfig::default()
    };

    let mut sets = Vec::new();
    let mut labels = Vec::new();
    for class in 0..SYNTH_CLASSES {
        for i in 0..per_class {
            let leaf = synth_leaf(class, 100 + i as u64)?;
            sets.push(extract_from_image(&leaf.image, &cfg, false)?.0);
            labels.push(class);
        }
    }
    // every fourth leaf goes to validation
    let is_valid = |i: usize| i % 4 == 3;

    for branch in [Branch::Shape, Branch::XyProjection] {
        let inputs: Vec<Tensor> = sets.iter().map(|s| branch.input(s)).collect();
        let split = |want: bool| -> (Vec<Tensor>, Vec<usize>) {
            (0..inputs.len())
                .filter(|&i| is_valid(i) == want)
                .map(|i| (inputs[i].clone(), labels[i]))
                .unzip()
        };
        let (tx, ty) = split(false);
        let (vx, vy) = split(true);
        let arch = branch.arch(&inputs[0])?;
        let train_cfg = TrainConfig {
            epochs,
            seed: 1,
            ..TrainConfig::default()
        };
        let (model, history) = train_encoder(
            &arch,
            SYNTH_CLASSES,
            LabeledSet { inputs: &tx, labels: &ty },
            Some(LabeledSet { inputs: &vx, labels: &vy }),
            &train_cfg,
        )?;
        println!("{} encoder ({:?}):", branch.name(), arch.kind);
        for r in history.epochs.iter().step_by((epochs / 10).max(1)) {
            println!(
                "  epoch {:>3}  loss {:.4}  train {:.3}  valid {:.3}",
                r.epoch,
                r.train_loss,
                r.train_accuracy,
                r.valid_accuracy.unwrap_or(f64::NAN)
            );
        }
        let emb = model.encode(&vx[..1])?;
        println!("  best epoch {}, embedding width {}", history.best_epoch, emb[0].len());
    }
    Ok(())
}
