use super::config::{GenerationMode, GenerationSettings, GestureDbConfig, SynthFullConfig};
use super::{
    load_database, specimen_file_name, user_dir_name, DatabaseManifest, FORGERY_DIR, GENUINE_DIR, MANIFEST_FILE,
    MASTER_FILE,
};
use crate::duplicate::{duplicate_signature, DistortionMode, DuplicateKind, DuplicationConfig};
use crate::error::{Error, Result};
use crate::format::{format_sig, write_atomic, ParameterFile, SignatureFile, PARAMETER_MAGIC};
use crate::kinematic::{estimate_parameters, synthesize_kinematics, EstimateOptions};
use crate::model::SigmaLogSignature;
use crate::plan::{
    assign_timestamps, generate_airwriting_plan, generate_gesture_plan, generate_morphology_2d, lift_morphology,
    ActionPlan,
};
use crate::rng::derive_seed;
use crate::synthesis::plan_to_signature_with;
use crate::verify::{classify_cmc, evaluate, CmcReport, ExperimentProtocol, SpecimenKind, TrialLabel, VerificationReport};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const PLAN_STREAM: u64 = 0;
const TIMING_STREAM: u64 = 1;
const GENUINE_STREAM: u64 = 2;
const FORGERY_STREAM: u64 = 3;
/// Rate used when neither the caller nor the input gives one.
const DEFAULT_FM: f64 = 60.0;

type FileSet = Vec<(PathBuf, String)>;

fn write_all(out: &Path, files: &FileSet) -> Result<()> {
    files.par_iter().try_for_each(|(p, text)| write_atomic(&out.join(p), text.as_bytes()))
}

fn timed_signature(plan: &ActionPlan<f64>, s: &GenerationSettings, seed: u64) -> Result<SigmaLogSignature<f64>> {
    let timed = assign_timestamps(plan, derive_seed(seed, &[TIMING_STREAM]), s.mean_gap, s.sd_gap)?;
    plan_to_signature_with(&timed, s.solver)
}

fn duplication(s: &GenerationSettings, kind: DuplicateKind, m: f64, seed: u64) -> DuplicationConfig {
    DuplicationConfig {
        affine_enabled: s.affine,
        distortion: s.distortion,
        rotation_scale: s.rotation_scale,
        displacement_max: s.displacement_max,
        insert_remove_max_fraction: s.edit_fraction,
        ..DuplicationConfig::with_m(kind, m, seed)
    }
}

/// Specimens of one master, written under `<dir>/<kind>/`.
#[allow(clippy::too_many_arguments)]
fn specimens(
    master: &SigmaLogSignature<f64>,
    s: &GenerationSettings,
    kind: DuplicateKind,
    m: f64,
    count: usize,
    user_seed: u64,
    fm: f64,
    dir: &Path,
    label: Option<&str>,
    user: usize,
) -> Result<FileSet> {
    let (stream, sub) = match kind {
        DuplicateKind::Genuine => (GENUINE_STREAM, GENUINE_DIR),
        DuplicateKind::Forgery => (FORGERY_STREAM, FORGERY_DIR),
    };
    (0..count)
        .map(|k| {
            let seed = derive_seed(user_seed, &[stream, k as u64]);
            let dup = duplicate_signature(master, &duplication(s, kind, m, seed), fm)?;
            let mut file = SignatureFile::new(dup.rendered.trajectory)
                .with("user", user)
                .with("kind", kind)
                .with("index", k)
                .with("seed", seed)
                .with("m", m);
            if let Some(l) = label {
                file = file.with("label", l);
            }
            Ok((dir.join(sub).join(specimen_file_name(k)), file.to_text()))
        })
        .collect()
}

fn full_user(cfg: &SynthFullConfig, u: usize) -> Result<FileSet> {
    let s = &cfg.settings;
    let seed = derive_seed(cfg.seed, &[u as u64]);
    let morph = generate_morphology_2d::<f64>(&s.morphology, derive_seed(seed, &[PLAN_STREAM]))?;
    let plan = lift_morphology(&morph, &s.surface)?;
    let master = timed_signature(&plan, s, seed)?;
    let dir = PathBuf::from(user_dir_name(u));
    let params = ParameterFile::new(master.clone()).with("user", u).with("seed", seed);
    let mut files = vec![(dir.join(MASTER_FILE), params.to_text())];
    files.extend(specimens(&master, s, DuplicateKind::Genuine, cfg.m_genuine, cfg.genuine, seed, cfg.fm, &dir, None, u)?);
    files.extend(specimens(&master, s, DuplicateKind::Forgery, cfg.m_forgery, cfg.forgery, seed, cfg.fm, &dir, None, u)?);
    Ok(files)
}

/// Generates a signature database: per user a fully synthetic master, its
/// genuine specimens and skilled forgeries (duplicates at the two
/// deformation levels). The tree depends only on the config.
pub fn synth_full(cfg: &SynthFullConfig, out: &Path) -> Result<DatabaseManifest> {
    cfg.validate()?;
    let files: Vec<FileSet> = (0..cfg.users).into_par_iter().map(|u| full_user(cfg, u)).collect::<Result<_>>()?;
    let manifest = DatabaseManifest::for_full(cfg);
    write_all(out, &files.concat())?;
    write_atomic(&out.join(MANIFEST_FILE), manifest.to_text().as_bytes())?;
    Ok(manifest)
}

fn gesture_class(cfg: &GestureDbConfig, c: usize) -> Result<FileSet> {
    let s = &cfg.settings;
    let seed = derive_seed(cfg.seed, &[c as u64]);
    let plan_seed = derive_seed(seed, &[PLAN_STREAM]);
    let (label, plan) = match cfg.mode {
        GenerationMode::AirWriting => generate_airwriting_plan::<f64>(&s.morphology, &s.surface, plan_seed)?,
        _ => (format!("gesture{c:03}"), generate_gesture_plan::<f64>(&s.morphology, plan_seed)?),
    };
    let master = timed_signature(&plan, s, seed)?;
    let dir = PathBuf::from(user_dir_name(c));
    let params = ParameterFile::new(master.clone()).with("label", &label).with("seed", seed);
    let mut files = vec![(dir.join(MASTER_FILE), params.to_text())];
    files.extend(specimens(&master, s, DuplicateKind::Genuine, cfg.m, cfg.samples, seed, cfg.fm, &dir, Some(&label), c)?);
    Ok(files)
}

/// Generates a class-labelled database of gestures or air-written words:
/// one master per class, samples are its duplicates.
pub fn gesture_db(cfg: &GestureDbConfig, out: &Path) -> Result<DatabaseManifest> {
    cfg.validate()?;
    let files: Vec<FileSet> = (0..cfg.classes).into_par_iter().map(|c| gesture_class(cfg, c)).collect::<Result<_>>()?;
    let manifest = DatabaseManifest::for_gestures(cfg);
    write_all(out, &files.concat())?;
    write_atomic(&out.join(MANIFEST_FILE), manifest.to_text().as_bytes())?;
    Ok(manifest)
}

/// Summary of one converted file.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicEntry {
    pub input: PathBuf,
    pub output: PathBuf,
    pub outcome: std::result::Result<KinematicStats, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicStats {
    pub salient_points: usize,
    pub strokes: usize,
    pub omega: f64,
    pub path_length: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicReport {
    pub entries: Vec<KinematicEntry>,
}

impl KinematicReport {
    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.outcome.is_err()).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("file salient strokes omega path_length duration status\n");
        for e in &self.entries {
            let name = e.input.display();
            let _ = match &e.outcome {
                Ok(s) => writeln!(
                    out,
                    "{name} {} {} {} {} {} ok",
                    s.salient_points,
                    s.strokes,
                    format_sig(s.omega, 6),
                    format_sig(s.path_length, 6),
                    format_sig(s.duration, 6)
                ),
                Err(msg) => writeln!(out, "{name} - - - - - error: {msg}"),
            };
        }
        out
    }
}

fn kinematic_file(input: &Path, output: &Path, fm: f64, seed: u64, step: Option<f64>) -> Result<KinematicStats> {
    let src = SignatureFile::read(input)?;
    let ks = synthesize_kinematics(&src.trajectory, step, fm, seed)?;
    let t = ks.trajectory.times().expect("timed");
    let stats = KinematicStats {
        salient_points: ks.salient.len(),
        strokes: ks.profile.strokes.len(),
        omega: ks.profile.omega,
        path_length: ks.profile.path_length,
        duration: t[t.len() - 1] - t[0],
    };
    let name = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let file = SignatureFile::new(ks.trajectory)
        .with("kind", "kinematic")
        .with("source", name)
        .with("seed", seed);
    write_atomic(output, file.to_text().as_bytes())?;
    Ok(stats)
}

/// Times every input trajectory with the kinematic pipeline. Failures are
/// recorded per file and do not stop the batch; a `report` table is written
/// next to the outputs.
pub fn synth_kinematics(
    inputs: &[PathBuf],
    out: &Path,
    fm: f64,
    seed: u64,
    step: Option<f64>,
) -> Result<KinematicReport> {
    if !(fm > 0.0) {
        return Err(Error::Config(format!("fm must be > 0, got {fm}")));
    }
    let mut names: Vec<String> = Vec::new();
    let outputs: Vec<PathBuf> = inputs
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into());
            let name = if names.contains(&stem) { format!("{stem}_{k}") } else { stem };
            names.push(name.clone());
            out.join(format!("{name}.sig"))
        })
        .collect();
    let entries = inputs
        .par_iter()
        .zip(&outputs)
        .enumerate()
        .map(|(k, (input, output))| {
            let outcome = kinematic_file(input, output, fm, derive_seed(seed, &[k as u64]), step).map_err(|e| {
                log::error!("{}: {e}", input.display());
                e.to_string()
            });
            KinematicEntry {
                input: input.clone(),
                output: output.clone(),
                outcome,
            }
        })
        .collect();
    let report = KinematicReport { entries };
    write_atomic(&out.join("report"), report.to_text().as_bytes())?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuplicateRequest {
    pub input: PathBuf,
    pub out: PathBuf,
    pub count: usize,
    pub kind: DuplicateKind,
    pub m: f64,
    pub seed: u64,
    /// Rendering rate; defaults to the input's, then 60 Hz.
    pub fm: Option<f64>,
    pub affine: bool,
    pub distortion: DistortionMode,
}

fn load_source(input: &Path) -> Result<(SigmaLogSignature<f64>, Option<f64>)> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input.display().to_string(), e))?;
    let name = input.display().to_string();
    if text.starts_with(PARAMETER_MAGIC) {
        return Ok((ParameterFile::parse(&text, &name)?.signature, None));
    }
    let file = SignatureFile::parse(&text, &name)?;
    let est = estimate_parameters(&file.trajectory, &EstimateOptions::default())
        .map_err(|e| Error::InvalidInput(format!("{name}: cannot estimate parameters: {e}")))?;
    Ok((est.signature, file.trajectory.sampling_rate()))
}

/// Writes `count` duplicates of a parameter file or (estimated) signature
/// file, the i-th seeded with `seed + i`.
pub fn duplicate_file(req: &DuplicateRequest) -> Result<Vec<PathBuf>> {
    let (source, rate) = load_source(&req.input)?;
    let fm = req.fm.or(rate).unwrap_or(DEFAULT_FM);
    let stem = req.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "dup".into());
    let source_name = req.input.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let files: FileSet = (0..req.count)
        .into_par_iter()
        .map(|i| {
            let seed = req.seed.wrapping_add(i as u64);
            let cfg = DuplicationConfig {
                affine_enabled: req.affine,
                distortion: req.distortion,
                ..DuplicationConfig::with_m(req.kind, req.m, seed)
            };
            let dup = duplicate_signature(&source, &cfg, fm)?;
            let file = SignatureFile::new(dup.rendered.trajectory)
                .with("kind", req.kind)
                .with("m", req.m)
                .with("seed", seed)
                .with("source", &source_name);
            Ok((PathBuf::from(format!("{stem}_{i:03}.sig")), file.to_text()))
        })
        .collect::<Result<_>>()?;
    write_all(&req.out, &files)?;
    Ok(files.into_iter().map(|(p, _)| req.out.join(p)).collect())
}

/// Baseline verification and, when the protocol asks for duplicates, the
/// augmented run on the same training draws.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRun {
    pub database: String,
    pub baseline: VerificationReport,
    pub augmented: Option<VerificationReport>,
}

fn condition_name(r: &VerificationReport) -> String {
    match r.protocol.duplicates_per_training {
        0 => "baseline".into(),
        n => format!("ds-x{n}"),
    }
}

impl EvaluationRun {
    pub fn reports(&self) -> impl Iterator<Item = &VerificationReport> {
        std::iter::once(&self.baseline).chain(self.augmented.as_ref())
    }

    /// Summary table (EER in percent) followed by the per-repetition
    /// breakdown.
    pub fn to_text(&self) -> String {
        let p = &self.baseline.protocol;
        let mut out = String::new();
        let _ = writeln!(out, "database {}", self.database);
        let _ = writeln!(out, "verifier {}", p.verifier);
        let _ = writeln!(out, "train_genuine {}", p.train_genuine_count);
        let _ = writeln!(out, "repetitions {}", p.repetitions);
        let _ = writeln!(out, "seed {}\n", p.seed);
        out.push_str("condition eer_random eer_skilled auc_random auc_skilled\n");
        for r in self.reports() {
            let _ = writeln!(
                out,
                "{} {:.2} {:.2} {:.4} {:.4}",
                condition_name(r),
                r.eer_random,
                r.eer_skilled,
                r.auc_random,
                r.auc_skilled
            );
        }
        out.push_str("\ncondition repetition eer_random eer_skilled auc_random auc_skilled\n");
        for r in self.reports() {
            for (k, rep) in r.repetitions.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{} {k} {:.2} {:.2} {:.4} {:.4}",
                    condition_name(r),
                    rep.random.eer,
                    rep.skilled.eer,
                    rep.random.auc,
                    rep.skilled.auc
                );
            }
        }
        if let Some(a) = &self.augmented {
            if a.estimation_failures > 0 {
                let _ = writeln!(out, "\nestimation_failures {}", a.estimation_failures);
            }
        }
        out
    }
}

fn curve_text(points: &[(f64, f64)]) -> String {
    points.iter().map(|(a, b)| format!("{} {}\n", format_sig(*a, 9), format_sig(*b, 9))).collect()
}

fn scores_text(r: &VerificationReport) -> String {
    let mut out = String::from("repetition user probe_user probe_kind probe_index label score\n");
    for (k, rep) in r.repetitions.iter().enumerate() {
        for t in &rep.trials {
            let kind = match t.probe.kind {
                SpecimenKind::Genuine => "genuine",
                SpecimenKind::Forgery => "forgery",
            };
            let label = match t.label {
                TrialLabel::Genuine => "genuine",
                TrialLabel::RandomForgery => "random",
                TrialLabel::SkilledForgery => "skilled",
            };
            let _ = writeln!(
                out,
                "{k} {} {} {kind} {} {label} {}",
                t.user,
                t.probe.user,
                t.probe.index,
                format_sig(t.score, 12)
            );
        }
    }
    out
}

/// Runs the verification protocol on a database directory and writes
/// `report`, averaged DET curves and trial scores per condition to `out`.
pub fn evaluate_database(db: &Path, protocol: &ExperimentProtocol, out: &Path) -> Result<EvaluationRun> {
    let data = load_database(db)?;
    let baseline = evaluate(&data.users, &ExperimentProtocol { duplicates_per_training: 0, ..*protocol })?;
    let augmented = match protocol.duplicates_per_training {
        0 => None,
        _ => Some(evaluate(&data.users, protocol)?),
    };
    let run = EvaluationRun {
        database: data.manifest.name.clone(),
        baseline,
        augmented,
    };
    let mut files: FileSet = vec![(PathBuf::from("report"), run.to_text())];
    for r in run.reports() {
        let c = condition_name(r);
        files.push((PathBuf::from(format!("det_random_{c}.dat")), curve_text(&r.det_random)));
        files.push((PathBuf::from(format!("det_skilled_{c}.dat")), curve_text(&r.det_skilled)));
        files.push((PathBuf::from(format!("scores_{c}.dat")), scores_text(r)));
    }
    write_all(out, &files)?;
    Ok(run)
}

/// Nearest-template classification over the classes of a database; writes
/// `report` and the `cmc.dat` curve (rank, accuracy).
pub fn classify_database(db: &Path, protocol: &ExperimentProtocol, out: &Path) -> Result<CmcReport> {
    let data = load_database(db)?;
    let classes: Vec<_> = data.users.into_iter().map(|u| u.genuine).collect();
    let cmc = classify_cmc(&classes, protocol)?;
    let curve: Vec<(f64, f64)> = cmc.rank_accuracy.iter().enumerate().map(|(k, a)| ((k + 1) as f64, *a)).collect();
    let mut report = format!(
        "database {}\nclasses {}\nprobes {}\ntemplates_per_class {}\nrepetitions {}\nseed {}\n\nrank accuracy\n",
        data.manifest.name,
        classes.len(),
        cmc.probes,
        protocol.train_genuine_count,
        protocol.repetitions,
        protocol.seed
    );
    for (k, a) in &curve {
        let _ = writeln!(report, "{k} {:.4}", a);
    }
    write_all(out, &vec![(PathBuf::from("report"), report), (PathBuf::from("cmc.dat"), curve_text(&curve))])?;
    Ok(cmc)
}
