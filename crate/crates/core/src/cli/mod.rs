//! Command implementations behind the `leafkit` binary. Each command reads a
//! [`RunConfig`], writes its artifacts under `output_dir`, and reports an
//! [`Outcome`] that maps onto the process exit code.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{
    self, config_hash, extract_dataset, make_fold_plan, parse_ranges, run_cv, synth, train_fold, write_report,
    BranchInputs, CvConfig, CvReport, DatasetManifest, ExtractConfig, ExtractSummary, FeatureStore, FoldMode,
    LeafFeatureSet, BRANCHES, FOLDS,
};

/// Overrides the feature directory when `features_dir` is not configured.
pub const CACHE_ENV: &str = "LEAFKIT_CACHE_DIR";

/// Built-in Flavia class ranges.
pub const FLAVIA_RANGES: &str = include_str!("../../data/flavia_ranges.csv");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Image root: one subdirectory per class, or a flat Flavia folder.
    pub dataset_root: Option<PathBuf>,
    /// Use the built-in Flavia file-number ranges.
    pub flavia: bool,
    /// Custom `class,first,last` range file; implies a flat layout.
    pub ranges: Option<PathBuf>,
    /// Defaults to `<output_dir>/manifest.csv`.
    pub manifest: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Defaults to `$LEAFKIT_CACHE_DIR`, then `<output_dir>/features`.
    pub features_dir: Option<PathBuf>,
    pub fold_mode: FoldMode,
    /// 1-based folds to run; empty runs all ten.
    pub folds: Vec<usize>,
    /// Worker threads for extraction and parallel folds; 0 uses every core.
    pub workers: usize,
    pub parallel_folds: bool,
    pub debug_images: bool,
    pub extract: ExtractConfig,
    /// `cv.seed` seeds the fold plan and every encoder.
    pub cv: CvConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_root: None,
            flavia: false,
            ranges: None,
            manifest: None,
            output_dir: PathBuf::from("leafkit-out"),
            features_dir: None,
            fold_mode: FoldMode::Random,
            folds: Vec::new(),
            workers: 0,
            parallel_folds: false,
            debug_images: false,
            extract: ExtractConfig::default(),
            cv: CvConfig::default(),
        }
    }
}

/// How a command ended; errors are reported separately.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Finished, but some images or folds failed.
    Partial,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Partial => 1,
        }
    }
}

/// 2 for configuration problems, 1 for anything else.
pub fn error_exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Leakage(_) | Error::ClassTooSmall { .. } => 2,
        _ => 1,
    }
}

/// Parse `3`, `1..3`, `1-3` or `1,4,7`.
pub fn parse_folds(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("cannot parse fold list {text:?}"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let range = part.split_once("..").or_else(|| part.split_once('-'));
        match range {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim_start_matches('=').trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() || out.iter().any(|&f| f == 0 || f > FOLDS) {
        return Err(Error::Config(format!("folds must lie in 1..={FOLDS}, got {text:?}")));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest.clone().unwrap_or_else(|| self.output_dir.join("manifest.csv"))
    }

    pub fn features_dir(&self) -> PathBuf {
        self.features_dir
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| self.output_dir.join("features"))
    }

    pub fn seed(&self) -> u64 {
        self.cv.seed
    }

    /// Hash of the settings that change extracted features.
    pub fn extract_hash(&self) -> String {
        config_hash(&self.extract)
    }

    /// Hash of every setting that changes results.
    pub fn result_hash(&self) -> String {
        config_hash(&(&self.extract, &self.cv, self.fold_mode))
    }

    pub fn validate(&self) -> Result<()> {
        self.extract.validate()?;
        self.cv.validate()?;
        if !self.folds.is_empty() {
            parse_folds(&self.folds.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(","))?;
        }
        if self.flavia && self.ranges.is_some() {
            return Err(Error::Config("set either `flavia` or `ranges`, not both".into()));
        }
        for p in [&self.dataset_root, &self.ranges].into_iter().flatten() {
            if !p.exists() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

fn require_manifest(cfg: &RunConfig) -> Result<DatasetManifest> {
    let p = cfg.manifest_path();
    if !p.exists() {
        return Err(Error::Config(format!("manifest {} not found; run `manifest` first", p.display())));
    }
    DatasetManifest::load(&p)
}

/// File name of the run configuration written next to a synthetic dataset.
pub const SYNTH_CONFIG: &str = "leafkit.toml";

/// Run configuration matching a synthetic dataset in `dir`.
pub fn synth_config(dir: &Path, seed: u64) -> RunConfig {
    let mut cfg = RunConfig {
        dataset_root: Some(dir.to_path_buf()),
        ..RunConfig::default()
    };
    cfg.extract.side = synth::SYNTH_SIDE;
    cfg.cv.seed = seed;
    cfg
}

/// Write `per_class` synthetic leaves per class under `dir`, plus a
/// matching `leafkit.toml`.
pub fn cmd_synth(dir: &Path, per_class: usize, seed: u64) -> Result<usize> {
    if per_class == 0 {
        return Err(Error::Config("per-class count must be positive".into()));
    }
    let n = synth::write_dataset(dir, per_class, seed)?;
    let p = dir.join(SYNTH_CONFIG);
    fs::write(&p, synth_config(dir, seed).to_toml()).map_err(|e| Error::io(&p, e))?;
    Ok(n)
}

/// Build, save and summarize the manifest.
pub fn cmd_manifest(cfg: &RunConfig) -> Result<DatasetManifest> {
    cfg.validate()?;
    let root = cfg
        .dataset_root
        .as_deref()
        .ok_or_else(|| Error::Config("dataset_root is not set".into()))?;
    let manifest = if cfg.flavia {
        DatasetManifest::from_ranges(root, &parse_ranges(FLAVIA_RANGES)?)?
    } else if let Some(r) = &cfg.ranges {
        let text = fs::read_to_string(r).map_err(|e| Error::io(r, e))?;
        DatasetManifest::from_ranges(root, &parse_ranges(&text)?)?
    } else {
        DatasetManifest::from_class_dirs(root)?
    };
    let path = cfg.manifest_path();
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    manifest.save(&path)?;
    Ok(manifest)
}

/// Extract features for every manifest entry not yet in the store.
pub fn cmd_extract(cfg: &RunConfig) -> Result<(ExtractSummary, Outcome)> {
    cfg.validate()?;
    let manifest = require_manifest(cfg)?;
    let store = FeatureStore::open(&cfg.features_dir(), &cfg.extract_hash(), cfg.seed())?;
    let debug = cfg.debug_images.then(|| cfg.output_dir.join("debug"));
    let summary = cfg
        .pool()?
        .install(|| extract_dataset(&manifest, &store, &cfg.extract, debug.as_deref()))?;
    let outcome = if summary.failed.is_empty() { Outcome::Success } else { Outcome::Partial };
    Ok((summary, outcome))
}

/// Manifest restricted to successfully extracted entries, with features.
pub fn load_features(cfg: &RunConfig) -> Result<(DatasetManifest, Vec<LeafFeatureSet>)> {
    let manifest = require_manifest(cfg)?;
    let dir = cfg.features_dir();
    if !dir.exists() {
        return Err(Error::Config(format!("no features in {}; run `extract` first", dir.display())));
    }
    let store = FeatureStore::open(&dir, &cfg.extract_hash(), cfg.seed())?;
    let rows = store.load(&manifest)?;
    let mut kept = manifest.clone();
    kept.entries.clear();
    let mut features = Vec::new();
    for (e, f) in manifest.entries.iter().zip(rows) {
        match f {
            Some(f) => {
                let mut e = e.clone();
                e.index = kept.entries.len();
                kept.entries.push(e);
                features.push(f);
            }
            None => log::warn!("{} has no features; left out", e.path.display()),
        }
    }
    if kept.is_empty() {
        return Err(Error::Config("no extracted features match the manifest".into()));
    }
    Ok((kept, features))
}

/// Train the encoders and SVM of one 1-based fold and save them under
/// `<output_dir>/models/fold_<k>/`.
pub fn cmd_train_encoders(cfg: &RunConfig, fold: usize) -> Result<PathBuf> {
    cfg.validate()?;
    if fold == 0 || fold > FOLDS {
        return Err(Error::Config(format!("fold {fold} is outside 1..={FOLDS}")));
    }
    let (manifest, features) = load_features(cfg)?;
    let plan = make_fold_plan(&manifest, cfg.fold_mode, cfg.seed())?;
    let data = BranchInputs::new(&features);
    let models = train_fold(
        &data,
        &manifest.labels(),
        manifest.classes.len(),
        &plan.splits[fold - 1],
        &cfg.cv,
        fold - 1,
    )?;
    let dir = cfg.output_dir.join("models").join(format!("fold_{fold}"));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (b, enc) in BRANCHES.iter().zip(&models.encoders) {
        enc.save(&dir.join(format!("{}.enc", b.name())))?;
    }
    models.svm.save(&dir.join("svm.bin"))?;
    let meta = serde_json::json!({
        "fold": fold,
        "mode": cfg.fold_mode,
        "seed": cfg.seed(),
        "config": cfg.result_hash(),
        "svm": models.best,
        "grid": models.grid,
        "histories": BRANCHES.iter().zip(&models.histories)
            .map(|(b, h)| (b.name().to_string(), h))
            .collect::<std::collections::BTreeMap<_, _>>(),
    });
    let p = dir.join("training.json");
    fs::write(&p, serde_json::to_string_pretty(&meta).unwrap()).map_err(|e| Error::io(&p, e))?;
    Ok(dir)
}

/// Cross-validate and write the report under `<output_dir>/report/`.
pub fn cmd_cv(cfg: &RunConfig) -> Result<(CvReport, Outcome)> {
    cfg.validate()?;
    let (manifest, features) = load_features(cfg)?;
    let plan = make_fold_plan(&manifest, cfg.fold_mode, cfg.seed())?;
    let mut report = cfg
        .pool()?
        .install(|| run_cv(&manifest, &features, &plan, &cfg.folds, &cfg.cv, cfg.parallel_folds))?;
    report.config_hash = cfg.result_hash();
    write_report(&report, &cfg.output_dir.join("report"))?;
    let outcome = if report.failed() == 0 { Outcome::Success } else { Outcome::Partial };
    Ok((report, outcome))
}

/// Re-render CSV and SVG from a saved `report.json`.
pub fn cmd_report(json: &Path, out_dir: &Path) -> Result<CvReport> {
    let text = fs::read_to_string(json).map_err(|e| Error::io(json, e))?;
    let report: CvReport =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", json.display())))?;
    write_report(&report, out_dir)?;
    Ok(report)
}

/// One-line `mean ± std` summary.
pub fn summary_line(report: &CvReport) -> String {
    let fmt = |s: Option<pipeline::Summary>| match s {
        Some(s) => format!("{:.2}% ± {:.2}%", 100.0 * s.mean, 100.0 * s.std),
        None => "n/a".into(),
    };
    format!(
        "{} {} folds, seed {}: test {} | valid {}{}",
        report.mode,
        report.folds.len(),
        report.seed,
        fmt(report.test()),
        fmt(report.valid()),
        if report.partial { " (partial)" } else { "" }
    )
}
