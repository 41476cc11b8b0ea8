//! Indexed and stratified 10-fold plans, printed as role tables.
//!
//! cargo run --release --example fold_plan -- [dataset_root]

use std::path::PathBuf;

use leafkit::pipeline::{make_fold_plan, DatasetManifest, FoldMode, ManifestEntry, Role, FOLDS};

fn demo_manifest() -> DatasetManifest {
    let classes = vec!["a".to_string(), "b".to_string(), "c".to_string()];
    let entries = (0..36)
        .map(|i| ManifestEntry {
            index: i,
            path: PathBuf::from(format!("{}.jpg", 1001 + i)),
            class: classes[i % 3].clone(),
            label: i % 3,
        })
        .collect();
    DatasetManifest {
        root: PathBuf::from("."),
        classes,
        entries,
    }
}

fn main() -> leafkit::Result<()> {
    let manifest = match std::env::args().nth(1) {
        Some(root) => DatasetManifest::from_class_dirs(root.as_ref())?,
        None => demo_manifest(),
    };
    let plan = make_fold_plan(&manifest, FoldMode::Indexed, 0)?;
    print!("{:>16}", "file");
    for f in 1..=FOLDS {
        print!(" {:>5}", format!("F{f}"));
    }
    println!();
    for e in manifest.entries.iter().take(10) {
        print!("{:>16}", e.path.file_name().unwrap().to_string_lossy());
        for f in 0..FOLDS {
            let tag = match plan.role(f, e.index) {
                Role::Test => "Test",
                Role::Valid => "Valid",
                Role::Train => "Train",
            };
            print!(" {tag:>5}");
        }
        println!();
    }

    let random = make_fold_plan(&manifest, FoldMode::Random, 7)?;
    random.audit(&manifest)?;
    println!("\nrandom stratified plan (seed 7), test-set class counts per fold:");
    for (f, split) in random.splits.iter().enumerate() {
        let mut counts = vec![0; manifest.classes.len()];
        for &i in &split.test {
            counts[manifest.entries[i].label] += 1;
        }
        println!(
            "  fold {:>2}: train {:>3} valid {:>3} test {:>3} {:?}",
            f + 1,
            split.train.len(),
            split.valid.len(),
            split.test.len(),
            counts
        );
    }
    Ok(())
}
