//! Verification machinery: feature extraction, DTW and histogram verifiers,
//! DET/EER/AUC over random- and skilled-forgery trials, and CMC
//! classification.

mod det;
mod distance;
mod features;

pub use det::{area_under_curve, det_curve, equal_error_rate, far_grid, frr_at, DetPoint};
pub use distance::{dtw_distance, man_distance};
pub use features::{extract_features, extract_histograms, FeatureSequence, HistogramFeature, DEFAULT_BINS, FEATURE_DIMS};

use crate::duplicate::{duplicate_signature, DuplicateKind, DuplicationConfig, DEFAULT_M_GENUINE};
use crate::error::{Error, Result};
use crate::kinematic::{estimate_parameters, EstimateOptions};
use crate::model::Trajectory3D;
use crate::rng::{derive_seed, seeded};
use rand::seq::index::sample;
use rayon::prelude::*;
use std::collections::{BTreeSet, HashMap};

const REPETITION_STREAM: u64 = 1;
const DUPLICATE_STREAM: u64 = 2;
const CLASSIFY_STREAM: u64 = 3;
/// Rendering rate of duplicates made from trajectories without a rate.
const FALLBACK_FM: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Verifier {
    #[default]
    Dtw,
    Man,
}

impl std::str::FromStr for Verifier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dtw" => Ok(Self::Dtw),
            "man" => Ok(Self::Man),
            other => Err(Error::Config(format!("unknown verifier '{other}'"))),
        }
    }
}

impl std::fmt::Display for Verifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Dtw => "dtw",
            Self::Man => "man",
        })
    }
}

/// A specimen prepared for one verifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Template {
    Sequence(FeatureSequence),
    Histogram(HistogramFeature),
}

impl Template {
    pub fn extract(verifier: Verifier, traj: &Trajectory3D<f64>, bins: usize) -> Result<Self> {
        Ok(match verifier {
            Verifier::Dtw => Self::Sequence(extract_features(traj)?),
            Verifier::Man => Self::Histogram(extract_histograms(traj, bins)?),
        })
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        match (self, other) {
            (Self::Sequence(a), Self::Sequence(b)) => Ok(dtw_distance(a, b)),
            (Self::Histogram(a), Self::Histogram(b)) => man_distance(a, b),
            _ => Err(Error::InvalidInput("templates of different verifiers".into())),
        }
    }
}

/// Score of a probe against a user's references: the smallest DTW distance
/// or the mean histogram distance. Lower is more genuine.
pub fn score_probe(references: &[Template], probe: &Template) -> Result<f64> {
    let first = references
        .first()
        .ok_or_else(|| Error::InvalidInput("no reference templates".into()))?;
    let d = references.iter().map(|r| r.distance(probe)).collect::<Result<Vec<_>>>()?;
    Ok(fuse(matches!(first, Template::Sequence(_)), &d))
}

fn fuse(take_min: bool, distances: &[f64]) -> f64 {
    if take_min {
        distances.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        distances.iter().sum::<f64>() / distances.len() as f64
    }
}

/// Genuine specimens and skilled forgeries of one user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UserSpecimens {
    pub genuine: Vec<Trajectory3D<f64>>,
    pub forgery: Vec<Trajectory3D<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentProtocol {
    pub train_genuine_count: usize,
    pub repetitions: usize,
    /// DS duplicates added per training genuine; 0 disables augmentation.
    pub duplicates_per_training: usize,
    /// Deformation level of the training duplicates.
    pub duplicate_m: f64,
    pub verifier: Verifier,
    pub bins: usize,
    pub seed: u64,
}

impl Default for ExperimentProtocol {
    fn default() -> Self {
        Self {
            train_genuine_count: 5,
            repetitions: 10,
            duplicates_per_training: 0,
            duplicate_m: DEFAULT_M_GENUINE,
            verifier: Verifier::Dtw,
            bins: DEFAULT_BINS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpecimenKind {
    Genuine,
    Forgery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpecimenId {
    pub user: usize,
    pub kind: SpecimenKind,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialLabel {
    Genuine,
    RandomForgery,
    SkilledForgery,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredTrial {
    /// Claimed identity.
    pub user: usize,
    pub probe: SpecimenId,
    pub label: TrialLabel,
    pub score: f64,
}

/// Error rates of one impostor class; EERs in percent.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRates {
    pub eer: f64,
    pub auc: f64,
    pub det: Vec<DetPoint>,
}

impl ErrorRates {
    pub fn from_scores(genuine: &[f64], impostor: &[f64]) -> Self {
        let det = det_curve(genuine, impostor);
        Self {
            eer: 100.0 * equal_error_rate(&det),
            auc: area_under_curve(&det),
            det,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionResult {
    /// Training genuine indices per user.
    pub training: Vec<Vec<usize>>,
    pub trials: Vec<ScoredTrial>,
    pub random: ErrorRates,
    pub skilled: ErrorRates,
}

impl RepetitionResult {
    pub fn scores(&self, label: TrialLabel) -> Vec<f64> {
        self.trials.iter().filter(|t| t.label == label).map(|t| t.score).collect()
    }

    /// Error rates recomputed from the stored trial scores.
    pub fn recompute(&self) -> (ErrorRates, ErrorRates) {
        let g = self.scores(TrialLabel::Genuine);
        (
            ErrorRates::from_scores(&g, &self.scores(TrialLabel::RandomForgery)),
            ErrorRates::from_scores(&g, &self.scores(TrialLabel::SkilledForgery)),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub protocol: ExperimentProtocol,
    pub repetitions: Vec<RepetitionResult>,
    /// Mean EERs over repetitions, in percent.
    pub eer_random: f64,
    pub eer_skilled: f64,
    pub auc_random: f64,
    pub auc_skilled: f64,
    /// FRR averaged over repetitions at each FAR of [`far_grid`].
    pub det_random: Vec<(f64, f64)>,
    pub det_skilled: Vec<(f64, f64)>,
    /// Training genuines whose parameters could not be estimated and so
    /// contributed no duplicates.
    pub estimation_failures: usize,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn averaged_det<'a>(curves: impl Iterator<Item = &'a [DetPoint]>) -> Vec<(f64, f64)> {
    let grid = far_grid();
    let rows: Vec<Vec<f64>> = curves.map(|c| frr_at(c, &grid)).collect();
    grid.iter()
        .enumerate()
        .map(|(k, &far)| (far, mean(rows.iter().map(|r| r[k]))))
        .collect()
}

/// Every template an experiment may compare: specimens first, then the
/// duplicates of training genuines.
struct TemplateBank {
    templates: Vec<Template>,
    specimen: HashMap<SpecimenId, usize>,
    duplicates: HashMap<(usize, usize), Vec<usize>>,
}

fn training_sets(db: &[UserSpecimens], protocol: &ExperimentProtocol) -> Vec<Vec<Vec<usize>>> {
    (0..protocol.repetitions)
        .map(|r| {
            let mut rng = seeded(derive_seed(protocol.seed, &[REPETITION_STREAM, r as u64]));
            db.iter()
                .map(|u| {
                    let mut idx = sample(&mut rng, u.genuine.len(), protocol.train_genuine_count).into_vec();
                    idx.sort_unstable();
                    idx
                })
                .collect()
        })
        .collect()
}

fn duplicate_trajectories(
    traj: &Trajectory3D<f64>,
    protocol: &ExperimentProtocol,
    user: usize,
    index: usize,
) -> Result<Vec<Trajectory3D<f64>>> {
    let est = estimate_parameters(traj, &EstimateOptions::default())?;
    let fm = traj.sampling_rate().unwrap_or(FALLBACK_FM);
    (0..protocol.duplicates_per_training)
        .map(|k| {
            let seed = derive_seed(protocol.seed, &[DUPLICATE_STREAM, user as u64, index as u64, k as u64]);
            let cfg = DuplicationConfig::with_m(DuplicateKind::Genuine, protocol.duplicate_m, seed);
            Ok(duplicate_signature(&est.signature, &cfg, fm)?.rendered.trajectory)
        })
        .collect()
}

fn build_bank(
    db: &[UserSpecimens],
    protocol: &ExperimentProtocol,
    training: &[Vec<Vec<usize>>],
) -> Result<(TemplateBank, usize)> {
    let mut ids = Vec::new();
    for (u, user) in db.iter().enumerate() {
        ids.extend((0..user.genuine.len()).map(|index| SpecimenId { user: u, kind: SpecimenKind::Genuine, index }));
        ids.extend((0..user.forgery.len()).map(|index| SpecimenId { user: u, kind: SpecimenKind::Forgery, index }));
    }
    let trajectory = |id: &SpecimenId| match id.kind {
        SpecimenKind::Genuine => &db[id.user].genuine[id.index],
        SpecimenKind::Forgery => &db[id.user].forgery[id.index],
    };
    let mut templates = ids
        .par_iter()
        .map(|id| Template::extract(protocol.verifier, trajectory(id), protocol.bins))
        .collect::<Result<Vec<_>>>()?;
    let specimen: HashMap<SpecimenId, usize> = ids.iter().enumerate().map(|(k, id)| (*id, k)).collect();

    let mut duplicates = HashMap::new();
    let mut failures = 0;
    if protocol.duplicates_per_training > 0 {
        let sources: BTreeSet<(usize, usize)> = training
            .iter()
            .flat_map(|rep| rep.iter().enumerate().flat_map(|(u, idx)| idx.iter().map(move |&g| (u, g))))
            .collect();
        let sources: Vec<(usize, usize)> = sources.into_iter().collect();
        let made: Vec<Option<Vec<Template>>> = sources
            .par_iter()
            .map(|&(u, g)| match duplicate_trajectories(&db[u].genuine[g], protocol, u, g) {
                Ok(trajs) => trajs
                    .iter()
                    .map(|t| Template::extract(protocol.verifier, t, protocol.bins))
                    .collect::<Result<Vec<_>>>()
                    .map(Some),
                Err(e) => {
                    log::warn!("user {u} genuine {g}: no duplicates ({e})");
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        for (key, dups) in sources.into_iter().zip(made) {
            match dups {
                Some(d) => {
                    let start = templates.len();
                    templates.extend(d);
                    duplicates.insert(key, (start..templates.len()).collect());
                }
                None => failures += 1,
            }
        }
    }
    Ok((TemplateBank { templates, specimen, duplicates }, failures))
}

fn check_database(db: &[UserSpecimens], protocol: &ExperimentProtocol) -> Result<()> {
    if db.len() < 2 {
        return Err(Error::InvalidInput("verification needs at least 2 users".into()));
    }
    if protocol.train_genuine_count == 0 || protocol.repetitions == 0 {
        return Err(Error::Config("training count and repetitions must be positive".into()));
    }
    for (u, user) in db.iter().enumerate() {
        if user.genuine.len() <= protocol.train_genuine_count {
            return Err(Error::InvalidInput(format!(
                "user {u} has {} genuine specimens, needs more than {}",
                user.genuine.len(),
                protocol.train_genuine_count
            )));
        }
        if user.forgery.is_empty() {
            return Err(Error::InvalidInput(format!("user {u} has no forgeries")));
        }
    }
    Ok(())
}

/// Runs the verification protocol: per repetition, draws training genuines
/// for every user (optionally augmented with duplicates), scores the
/// remaining genuines, every skilled forgery of the user and every genuine
/// of the other users, and summarizes both impostor classes.
pub fn evaluate(db: &[UserSpecimens], protocol: &ExperimentProtocol) -> Result<VerificationReport> {
    check_database(db, protocol)?;
    let training = training_sets(db, protocol);
    let (bank, estimation_failures) = build_bank(db, protocol, &training)?;
    let take_min = protocol.verifier == Verifier::Dtw;

    let mut plans = Vec::with_capacity(training.len());
    let mut pairs = BTreeSet::new();
    for rep in &training {
        let mut trials = Vec::new();
        for (u, train) in rep.iter().enumerate() {
            let mut refs: Vec<usize> = train
                .iter()
                .map(|&g| bank.specimen[&SpecimenId { user: u, kind: SpecimenKind::Genuine, index: g }])
                .collect();
            for g in train {
                refs.extend(bank.duplicates.get(&(u, *g)).into_iter().flatten());
            }
            let mut probe = |probe: SpecimenId, label| {
                let p = bank.specimen[&probe];
                pairs.extend(refs.iter().map(|&r| (r.min(p), r.max(p))));
                trials.push((u, probe, label, refs.clone(), p));
            };
            for (v, other) in db.iter().enumerate() {
                for index in 0..other.genuine.len() {
                    let id = SpecimenId { user: v, kind: SpecimenKind::Genuine, index };
                    if v == u && !train.contains(&index) {
                        probe(id, TrialLabel::Genuine);
                    } else if v != u {
                        probe(id, TrialLabel::RandomForgery);
                    }
                }
            }
            for index in 0..db[u].forgery.len() {
                probe(SpecimenId { user: u, kind: SpecimenKind::Forgery, index }, TrialLabel::SkilledForgery);
            }
        }
        plans.push(trials);
    }

    let pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    let distances = pairs
        .par_iter()
        .map(|&(a, b)| bank.templates[a].distance(&bank.templates[b]))
        .collect::<Result<Vec<_>>>()?;
    let table: HashMap<(usize, usize), f64> = pairs.into_iter().zip(distances).collect();

    let repetitions: Vec<RepetitionResult> = training
        .into_iter()
        .zip(plans)
        .map(|(train, trials)| {
            let trials: Vec<ScoredTrial> = trials
                .into_iter()
                .map(|(user, probe, label, refs, p)| {
                    let d: Vec<f64> = refs.iter().map(|&r| table[&(r.min(p), r.max(p))]).collect();
                    ScoredTrial { user, probe, label, score: fuse(take_min, &d) }
                })
                .collect();
            let mut rep = RepetitionResult {
                training: train,
                trials,
                random: ErrorRates::from_scores(&[], &[]),
                skilled: ErrorRates::from_scores(&[], &[]),
            };
            (rep.random, rep.skilled) = rep.recompute();
            rep
        })
        .collect();

    Ok(VerificationReport {
        protocol: *protocol,
        eer_random: mean(repetitions.iter().map(|r| r.random.eer)),
        eer_skilled: mean(repetitions.iter().map(|r| r.skilled.eer)),
        auc_random: mean(repetitions.iter().map(|r| r.random.auc)),
        auc_skilled: mean(repetitions.iter().map(|r| r.skilled.auc)),
        det_random: averaged_det(repetitions.iter().map(|r| r.random.det.as_slice())),
        det_skilled: averaged_det(repetitions.iter().map(|r| r.skilled.det.as_slice())),
        repetitions,
        estimation_failures,
    })
}

/// Cumulative match curve: `rank_accuracy[k]` is the fraction of probes
/// whose true class is among the `k + 1` nearest classes.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcReport {
    pub rank_accuracy: Vec<f64>,
    pub probes: usize,
}

/// Nearest-template DTW classification. Per repetition each class keeps
/// `min(train_genuine_count, n - 1)` random samples as templates; the rest
/// are probes ranked by their smallest distance to each class. Curves are
/// averaged over repetitions.
pub fn classify_cmc(classes: &[Vec<Trajectory3D<f64>>], protocol: &ExperimentProtocol) -> Result<CmcReport> {
    if classes.len() < 2 {
        return Err(Error::InvalidInput("classification needs at least 2 classes".into()));
    }
    if let Some(c) = classes.iter().position(|c| c.len() < 2) {
        return Err(Error::InvalidInput(format!("class {c} has fewer than 2 samples")));
    }
    if protocol.repetitions == 0 || protocol.train_genuine_count == 0 {
        return Err(Error::Config("training count and repetitions must be positive".into()));
    }
    let flat: Vec<(usize, usize)> = classes
        .iter()
        .enumerate()
        .flat_map(|(c, s)| (0..s.len()).map(move |i| (c, i)))
        .collect();
    let seqs = flat
        .par_iter()
        .map(|&(c, i)| extract_features(&classes[c][i]))
        .collect::<Result<Vec<_>>>()?;
    let offset: Vec<usize> = classes
        .iter()
        .scan(0, |acc, c| {
            let o = *acc;
            *acc += c.len();
            Some(o)
        })
        .collect();
    let n = flat.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let dist: Vec<f64> = pairs.par_iter().map(|&(a, b)| dtw_distance(&seqs[a], &seqs[b])).collect();
    let table: HashMap<(usize, usize), f64> = pairs.into_iter().zip(dist).collect();
    let d = |a: usize, b: usize| if a == b { 0.0 } else { table[&(a.min(b), a.max(b))] };

    let k = classes.len();
    let mut hits = vec![0usize; k];
    let mut probes = 0;
    for r in 0..protocol.repetitions {
        let mut rng = seeded(derive_seed(protocol.seed, &[CLASSIFY_STREAM, r as u64]));
        let templates: Vec<Vec<usize>> = classes
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let t = protocol.train_genuine_count.min(s.len() - 1);
                sample(&mut rng, s.len(), t).into_iter().map(|i| offset[c] + i).collect()
            })
            .collect();
        for (p, &(truth, _)) in flat.iter().enumerate() {
            if templates[truth].contains(&p) {
                continue;
            }
            let score: Vec<f64> = templates
                .iter()
                .map(|t| t.iter().map(|&q| d(p, q)).fold(f64::INFINITY, f64::min))
                .collect();
            let rank = score.iter().filter(|&&s| s < score[truth]).count();
            hits[rank] += 1;
            probes += 1;
        }
    }
    let mut acc = 0;
    let rank_accuracy = hits
        .iter()
        .map(|h| {
            acc += h;
            acc as f64 / probes as f64
        })
        .collect();
    Ok(CmcReport { rank_accuracy, probes })
}

#[cfg(test)]
mod tests;
