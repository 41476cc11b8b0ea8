//! End-to-end orchestration: extraction, fusion, fold plans, cross-validation,
//! feature files, reports and the synthetic leaf generator.

mod cv;
mod features;
mod folds;
mod fusion;
mod manifest;
mod report;
mod store;
pub mod synth;

pub use cv::{
    config_hash, encoder_seed, run_cv, train_fold, BranchInputs, CvConfig, CvReport, EncoderConfigs, FoldMetrics,
    FoldModels, FoldResult, Summary,
};
pub use features::{extract_features, extract_from_image, preprocess, ExtractConfig, Intermediates, LeafFeatureSet};
pub use folds::{make_fold_plan, FoldMode, FoldPlan, FoldSplit, Role, FOLDS};
pub use fusion::{branch_order_stamp, branch_slice, fuse, Branch, BRANCHES, BRANCH_ORDER_VERSION, FUSED_WIDTH};
pub use manifest::{parse_ranges, ClassRange, DatasetManifest, ManifestEntry};
pub use report::{confusion_csv, csv_body, report_csv, report_svg, write_report};
pub use store::{extract_dataset, write_debug_images, ExtractSummary, FeatureStore, VectorFile, FEATURE_FORMAT, VECTOR_FILES};
