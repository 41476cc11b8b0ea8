use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leafkit::cli::{self, Outcome, RunConfig};
use leafkit::pipeline::FoldMode;

#[derive(Parser)]
#[command(name = "leafkit", version, about = "Leaf recognition: features, encoders, SVM, cross-validation")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Directory for the manifest, features, models and report.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Dataset root (class subfolders, or a flat Flavia folder).
    #[arg(long, global = true)]
    root: Option<PathBuf>,
    /// Manifest CSV path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Feature cache directory (else $LEAFKIT_CACHE_DIR).
    #[arg(long, global = true)]
    features_dir: Option<PathBuf>,
    /// Seed for folds, synthesis and training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fold mode: random (stratified) or indexed.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<FoldMode>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Working canvas side for extraction.
    #[arg(long, global = true)]
    side: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Render the seeded synthetic dataset as PNGs.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 40)]
        per_class: usize,
    },
    /// Build the sorted, indexed manifest.
    Manifest {
        /// Flat Flavia folder with the built-in class ranges.
        #[arg(long)]
        flavia: bool,
        /// Custom `class,first,last` range file.
        #[arg(long)]
        ranges: Option<PathBuf>,
    },
    /// Extract and cache features (resumable).
    Extract {
        /// Write intermediate PNGs per image.
        #[arg(long)]
        debug: bool,
    },
    /// Train and save the encoders and SVM of one fold.
    TrainEncoders {
        #[arg(long, default_value_t = 1)]
        fold: usize,
    },
    /// Run cross-validation and write the report.
    Cv {
        /// Fold subset such as `1..3` or `1,4`.
        #[arg(long)]
        folds: Option<String>,
        /// Override the epoch count of every encoder.
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        parallel_folds: bool,
    },
    /// Re-render CSV and SVG from a saved report.json.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn parse_mode(s: &str) -> Result<FoldMode, String> {
    match s {
        "random" => Ok(FoldMode::Random),
        "indexed" => Ok(FoldMode::Indexed),
        _ => Err(format!("unknown fold mode {s:?} (random or indexed)")),
    }
}

fn build_config(cli: &Cli) -> leafkit::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let c = &cli.common;
    if let Some(v) = &c.output_dir {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = &c.root {
        cfg.dataset_root = Some(v.clone());
    }
    if let Some(v) = &c.manifest {
        cfg.manifest = Some(v.clone());
    }
    if let Some(v) = &c.features_dir {
        cfg.features_dir = Some(v.clone());
    }
    if let Some(v) = c.seed {
        cfg.cv.seed = v;
    }
    if let Some(v) = c.mode {
        cfg.fold_mode = v;
    }
    if let Some(v) = c.workers {
        cfg.workers = v;
    }
    if let Some(v) = c.side {
        cfg.extract.side = v;
    }
    match &cli.command {
        Command::Manifest { flavia, ranges } => {
            cfg.flavia |= *flavia;
            if ranges.is_some() {
                cfg.ranges = ranges.clone();
            }
        }
        Command::Extract { debug } => cfg.debug_images |= *debug,
        Command::Cv {
            folds,
            epochs,
            parallel_folds,
        } => {
            if let Some(f) = folds {
                cfg.folds = cli::parse_folds(f)?;
            }
            if let Some(e) = epochs {
                for b in leafkit::pipeline::BRANCHES {
                    cfg.cv.encoders.get_mut(b).epochs = *e;
                }
            }
            cfg.parallel_folds |= *parallel_folds;
        }
        _ => {}
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> leafkit::Result<Outcome> {
    let cfg = build_config(cli)?;
    match &cli.command {
        Command::Synth { out, per_class } => {
            let n = cli::cmd_synth(out, *per_class, cfg.seed())?;
            println!("wrote {n} images to {} (seed {})", out.display(), cfg.seed());
            println!("run config -> {}", out.join(cli::SYNTH_CONFIG).display());
            Ok(Outcome::Success)
        }
        Command::Manifest { .. } => {
            let m = cli::cmd_manifest(&cfg)?;
            for (class, n) in m.class_counts() {
                println!("{class:>32} {n:>5}");
            }
            println!("{} images, {} classes -> {}", m.len(), m.classes.len(), cfg.manifest_path().display());
            Ok(Outcome::Success)
        }
        Command::Extract { .. } => {
            let (s, outcome) = cli::cmd_extract(&cfg)?;
            println!(
                "cached {}, extracted {}, failed {} -> {}",
                s.cached,
                s.extracted,
                s.failed.len(),
                cfg.features_dir().display()
            );
            for (i, p, e) in &s.failed {
                eprintln!("  {i} {p}: {e}");
            }
            Ok(outcome)
        }
        Command::TrainEncoders { fold } => {
            let dir = cli::cmd_train_encoders(&cfg, *fold)?;
            println!("models for fold {fold} -> {}", dir.display());
            Ok(Outcome::Success)
        }
        Command::Cv { .. } => {
            let (report, outcome) = cli::cmd_cv(&cfg)?;
            for f in &report.folds {
                match (&f.metrics, &f.error) {
                    (Some(m), _) => println!(
                        "fold {:>2}: test {:.4} valid {:.4} C={} gamma={:.3e}",
                        f.fold, m.test_accuracy, m.valid_accuracy, m.c, m.gamma
                    ),
                    (None, e) => println!("fold {:>2}: FAILED {}", f.fold, e.as_deref().unwrap_or("")),
                }
            }
            println!("{}", cli::summary_line(&report));
            println!("report -> {}", cfg.output_dir.join("report").display());
            Ok(outcome)
        }
        Command::Report { input, out } => {
            let dir = out.clone().unwrap_or_else(|| input.parent().map(PathBuf::from).unwrap_or_default());
            let report = cli::cmd_report(input, &dir)?;
            println!("{}", cli::summary_line(&report));
            Ok(Outcome::Success)
        }
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(Outcome::Success)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::error_exit_code(&e) as u8)
        }
    }
}
