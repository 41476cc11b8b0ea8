//! Full pipeline in memory: synthesize leaves, extract all seven branch
//! inputs, then run random 10-fold cross-validation with per-fold encoder
//! training, fusion and SVM grid search.
//!
//! cargo run --release --example cross_validation -- [per_class] [folds] [epochs]
//!
//! `folds` is a list such as `1..3`; the default runs all ten.

use std::path::PathBuf;
use std::time::Instant;

use leafkit::cli::{parse_folds, summary_line};
use leafkit::pipeline::synth::{synth_leaf, SYNTH_CLASSES, SYNTH_SIDE};
use leafkit::pipeline::{
    extract_from_image, make_fold_plan, run_cv, CvConfig, DatasetManifest, ExtractConfig, FoldMode, ManifestEntry,
    BRANCHES,
};

fn main() -> leafkit::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let per_class: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(40);
    let folds = match args.get(1) {
        Some(s) => parse_folds(s)?,
        None => Vec::new(),
    };
    let seed = 7;
    let mut cfg = CvConfig {
        seed,
        ..CvConfig::default()
    };
    if let Some(e) = args.get(2).and_then(|s| s.parse().ok()) {
        BRANCHES.iter().for_each(|&b| cfg.encoders.get_mut(b).epochs = e);
    }

    let t = Instant::now();
    let extract = ExtractConfig {
        side: SYNTH_SIDE,
        ..ExtractConfig::default()
    };
    let classes: Vec<String> = (0..SYNTH_CLASSES).map(|c| format!("class_{c}")).collect();
    let mut entries = Vec::new();
    let mut features = Vec::new();
    for class in 0..SYNTH_CLASSES {
        for i in 0..per_class {
            let leaf = synth_leaf(class, seed * 1_000_003 + i as u64)?;
            features.push(extract_from_image(&leaf.image, &extract, false)?.0);
            entries.push(ManifestEntry {
                index: entries.len(),
                path: PathBuf::from(format!("leaf_{class}_{i:03}.png")),
                class: classes[class].clone(),
                label: class,
            });
        }
    }
    println!("extracted {} leaves in {:.1}s", features.len(), t.elapsed().as_secs_f64());

    let manifest = DatasetManifest {
        root: PathBuf::from("."),
        classes,
        entries,
    };
    let plan = make_fold_plan(&manifest, FoldMode::Random, seed)?;
    let report = run_cv(&manifest, &features, &plan, &folds, &cfg, false)?;
    for f in &report.folds {
        match &f.metrics {
            Some(m) => println!(
                "fold {:>2}: test {:.3} valid {:.3} C {} gamma {:.2e} separation {:.2}",
                f.fold, m.test_accuracy, m.valid_accuracy, m.c, m.gamma, m.separation
            ),
            None => println!("fold {:>2}: failed: {}", f.fold, f.error.as_deref().unwrap_or("")),
        }
    }
    for b in BRANCHES {
        if let Some(s) = report.branch(b) {
            println!("{:>14}: {:.3} ± {:.3}", b.name(), s.mean, s.std);
        }
    }
    println!("{}", summary_line(&report));
    println!("total {:.0}s", t.elapsed().as_secs_f64());
    Ok(())
}
