use airsig::dataset::{
    classify_database, duplicate_file, evaluate_database, gesture_db, synth_full, synth_kinematics, DuplicateRequest,
    GenerationMode, GestureDbConfig, SynthFullConfig,
};
use airsig::duplicate::{DistortionMode, DuplicateKind, DEFAULT_M_FORGERY, DEFAULT_M_GENUINE};
use airsig::format::KeyValues;
use airsig::verify::{ExperimentProtocol, Verifier, DEFAULT_BINS};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "airsig", version, about = "Synthesize and verify 3D on-air signatures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed (overrides the config's).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// `key = value` config file (a database manifest also works).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sampling rate in Hz (overrides the config's).
    #[arg(long)]
    fm: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a signature database by full synthesis plus duplication.
    SynthFull {
        #[command(flatten)]
        common: Common,
        /// Start from a named preset (leap-60, kinect-30, initials-60, tablet-100).
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        genuine: Option<usize>,
        #[arg(long)]
        forgery: Option<usize>,
    },
    /// Give bare trajectories a synthetic timing.
    SynthKinematics {
        #[command(flatten)]
        common: Common,
        /// Dense path step; defaults to a thousandth of each path length.
        #[arg(long)]
        step: Option<f64>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Duplicate a signature (.sig, estimated first) or parameter file.
    Duplicate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value = "genuine")]
        kind: DuplicateKind,
        /// Deformation level; defaults by kind.
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        no_affine: bool,
        #[arg(long, default_value = "relative")]
        distortion: DistortionMode,
        input: PathBuf,
    },
    /// Verification (or classification) experiments on a database.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "dtw")]
        verifier: Verifier,
        #[arg(long, default_value_t = 5)]
        train: usize,
        #[arg(long, default_value_t = 10)]
        repetitions: usize,
        /// Duplicates per training sample; reports the augmented run next to
        /// the baseline.
        #[arg(long, default_value_t = 0)]
        duplicates: usize,
        #[arg(long, default_value_t = DEFAULT_M_GENUINE)]
        duplicate_m: f64,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Nearest-template classification with a cumulative match curve.
        #[arg(long)]
        classify: bool,
        db: PathBuf,
    },
    /// Generate a class-labelled gesture or air-writing database.
    GestureDb {
        #[command(flatten)]
        common: Common,
        /// gesture or airwriting.
        #[arg(long)]
        mode: Option<GenerationMode>,
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn read_config(path: Option<&Path>) -> Result<KeyValues> {
    match path {
        Some(p) => KeyValues::read(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(KeyValues::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SynthFull { common, preset, users, genuine, forgery } => {
            let mut kv = read_config(common.config.as_deref())?;
            if let Some(p) = preset {
                kv.set("preset", p);
            }
            let mut cfg = SynthFullConfig::parse(kv)?;
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            cfg.fm = common.fm.unwrap_or(cfg.fm);
            cfg.users = users.unwrap_or(cfg.users);
            cfg.genuine = genuine.unwrap_or(cfg.genuine);
            cfg.forgery = forgery.unwrap_or(cfg.forgery);
            let m = synth_full(&cfg, &common.out)?;
            log::info!("wrote {} files to {}", m.expected_files().len(), common.out.display());
        }
        Command::SynthKinematics { common, step, inputs } => {
            if common.config.is_some() {
                bail!("synth-kinematics takes no config file");
            }
            let fm = common.fm.unwrap_or(60.0);
            let report = synth_kinematics(&inputs, &common.out, fm, common.seed.unwrap_or(0), step)?;
            print!("{}", report.to_text());
            if report.failures() > 0 {
                bail!("{} of {} inputs failed", report.failures(), report.entries.len());
            }
        }
        Command::Duplicate { common, count, kind, m, no_affine, distortion, input } => {
            if common.config.is_some() {
                bail!("duplicate takes no config file");
            }
            let m = m.unwrap_or(match kind {
                DuplicateKind::Genuine => DEFAULT_M_GENUINE,
                DuplicateKind::Forgery => DEFAULT_M_FORGERY,
            });
            let req = DuplicateRequest {
                input,
                out: common.out,
                count,
                kind,
                m,
                seed: common.seed.unwrap_or(0),
                fm: common.fm,
                affine: !no_affine,
                distortion,
            };
            for p in duplicate_file(&req)? {
                println!("{}", p.display());
            }
        }
        Command::Evaluate { common, verifier, train, repetitions, duplicates, duplicate_m, bins, classify, db } => {
            if common.config.is_some() || common.fm.is_some() {
                bail!("evaluate takes neither --config nor --fm");
            }
            let protocol = ExperimentProtocol {
                train_genuine_count: train,
                repetitions,
                duplicates_per_training: duplicates,
                duplicate_m,
                verifier,
                bins,
                seed: common.seed.unwrap_or(0),
            };
            if classify {
                let cmc = classify_database(&db, &protocol, &common.out)?;
                println!("rank-1 accuracy {:.4}", cmc.rank_accuracy[0]);
            } else {
                let run = evaluate_database(&db, &protocol, &common.out)?;
                print!("{}", run.to_text());
            }
        }
        Command::GestureDb { common, mode, classes, samples } => {
            let mut kv = read_config(common.config.as_deref())?;
            if let Some(m) = mode {
                kv.set("mode", m);
            }
            let mut cfg = GestureDbConfig::parse(kv)?;
            cfg.seed = common.seed.unwrap_or(cfg.seed);
            cfg.fm = common.fm.unwrap_or(cfg.fm);
            cfg.classes = classes.unwrap_or(cfg.classes);
            cfg.samples = samples.unwrap_or(cfg.samples);
            gesture_db(&cfg, &common.out)?;
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
