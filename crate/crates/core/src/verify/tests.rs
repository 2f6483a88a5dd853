use super::*;
use crate::geom::Vec3;
use crate::rng::standard_normal;

/// Lissajous-like curve with frequency `f`, phase jitter and noise.
fn curve(f: f64, wobble: f64, noise: f64, seed: u64) -> Trajectory3D<f64> {
    let mut rng = seeded(seed);
    let ph = wobble * standard_normal(&mut rng);
    let amp = 1.0 + wobble * standard_normal(&mut rng);
    let pts = (0..80)
        .map(|k| {
            let t = k as f64 / 79.0 * std::f64::consts::TAU;
            Vec3::new(
                amp * (f * t + ph).sin() + noise * standard_normal(&mut rng),
                (t + ph).cos() + noise * standard_normal(&mut rng),
                0.3 * (2.0 * f * t).sin() + noise * standard_normal(&mut rng),
            )
        })
        .collect();
    Trajectory3D::sampled(0.0, 60.0, pts).unwrap()
}

fn toy_db(users: usize, forgery_wobble: f64) -> Vec<UserSpecimens> {
    (0..users)
        .map(|u| {
            let f = 1.0 + u as f64 * 0.7;
            UserSpecimens {
                genuine: (0..8).map(|k| curve(f, 0.05, 0.01, (u * 100 + k) as u64)).collect(),
                forgery: (0..4).map(|k| curve(f, forgery_wobble, 0.05, (u * 100 + 50 + k) as u64)).collect(),
            }
        })
        .collect()
}

#[test]
fn probe_scores() {
    let a = Template::extract(Verifier::Dtw, &curve(1.0, 0.1, 0.01, 1), 16).unwrap();
    let b = Template::extract(Verifier::Dtw, &curve(2.0, 0.1, 0.01, 2), 16).unwrap();
    let c = Template::extract(Verifier::Dtw, &curve(1.0, 0.1, 0.01, 3), 16).unwrap();
    assert_eq!(score_probe(&[b.clone(), a.clone()], &a).unwrap(), 0.0);
    let one = score_probe(&[b.clone()], &c).unwrap();
    let two = score_probe(&[b.clone(), a.clone()], &c).unwrap();
    assert!(two <= one);
    let h = |s| Template::extract(Verifier::Man, &curve(1.0, 0.1, 0.01, s), 16).unwrap();
    let (r, p) = (h(4), h(5));
    let single = score_probe(&[r.clone()], &p).unwrap();
    let triple = score_probe(&[r.clone(), r.clone(), r], &p).unwrap();
    assert!((single - triple).abs() < 1e-12);
    assert!(score_probe(&[], &p).is_err());
    assert!(score_probe(&[a], &p).is_err());
}

#[test]
fn evaluate_toy_database() {
    let db = toy_db(4, 0.3);
    let protocol = ExperimentProtocol { repetitions: 3, seed: 5, ..Default::default() };
    let report = evaluate(&db, &protocol).unwrap();
    assert_eq!(report.repetitions.len(), 3);
    for rep in &report.repetitions {
        assert_eq!(rep.scores(TrialLabel::Genuine).len(), 4 * 3);
        assert_eq!(rep.scores(TrialLabel::SkilledForgery).len(), 4 * 4);
        assert_eq!(rep.scores(TrialLabel::RandomForgery).len(), 4 * 3 * 8);
        for (u, train) in rep.training.iter().enumerate() {
            assert_eq!(train.len(), 5);
            let probes = rep.trials.iter().filter(|t| t.user == u && t.label == TrialLabel::Genuine);
            assert!(probes.clone().all(|t| !train.contains(&t.probe.index)));
        }
        let (r, s) = rep.recompute();
        assert_eq!(r, rep.random);
        assert_eq!(s, rep.skilled);
        for w in rep.random.det.windows(2) {
            assert!(w[1].far >= w[0].far && w[1].frr <= w[0].frr);
        }
    }
    assert!(report.eer_random <= report.eer_skilled);
    assert_eq!(report.det_random.len(), far_grid().len());
    assert_eq!(evaluate(&db, &protocol).unwrap(), report);
}

#[test]
fn perfect_separation_gives_zero_eer() {
    let db = toy_db(3, 3.0);
    let report = evaluate(&db, &ExperimentProtocol { repetitions: 2, ..Default::default() }).unwrap();
    assert_eq!(report.eer_random, 0.0);
    assert_eq!(report.eer_skilled, 0.0);
}

#[test]
fn man_verifier_runs() {
    let db = toy_db(3, 0.3);
    let protocol = ExperimentProtocol { repetitions: 2, verifier: Verifier::Man, ..Default::default() };
    let report = evaluate(&db, &protocol).unwrap();
    assert!(report.eer_random >= 0.0 && report.eer_random <= 100.0);
    assert!(report.auc_random > 0.5);
}

#[test]
fn infeasible_protocols() {
    let db = toy_db(2, 0.3);
    let p = ExperimentProtocol { train_genuine_count: 8, ..Default::default() };
    assert!(evaluate(&db, &p).is_err());
    assert!(evaluate(&db[..1], &ExperimentProtocol::default()).is_err());
    let mut no_forgery = db.clone();
    no_forgery[1].forgery.clear();
    assert!(evaluate(&no_forgery, &ExperimentProtocol::default()).is_err());
}

#[test]
fn cmc_on_separated_classes() {
    let classes: Vec<Vec<Trajectory3D<f64>>> = (0..4)
        .map(|c| (0..4).map(|k| curve(1.0 + c as f64, 0.05, 0.01, (c * 10 + k) as u64)).collect())
        .collect();
    let p = ExperimentProtocol { train_genuine_count: 1, repetitions: 3, ..Default::default() };
    let cmc = classify_cmc(&classes, &p).unwrap();
    assert_eq!(cmc.rank_accuracy.len(), 4);
    assert_eq!(cmc.rank_accuracy[0], 1.0);
    assert_eq!(cmc.probes, 3 * 4 * 3);
}

#[test]
fn cmc_is_cumulative() {
    let classes: Vec<Vec<Trajectory3D<f64>>> = (0..5)
        .map(|c| (0..3).map(|k| curve(1.0 + 0.05 * c as f64, 0.4, 0.2, (c * 10 + k) as u64)).collect())
        .collect();
    let cmc = classify_cmc(&classes, &ExperimentProtocol { train_genuine_count: 1, ..Default::default() }).unwrap();
    for w in cmc.rank_accuracy.windows(2) {
        assert!(w[1] >= w[0]);
    }
    assert_eq!(*cmc.rank_accuracy.last().unwrap(), 1.0);
    assert!(classify_cmc(&classes[..1], &ExperimentProtocol::default()).is_err());
}

#[test]
fn augmentation_adds_references() {
    use crate::plan::ActionPlan;
    use crate::synthesis::{plan_to_signature, render_full_signature};
    // zigzags of different amplitude per user
    let user = |u: usize| {
        let sig = |s: u64| {
            let mut rng = seeded(s);
            let n = 6;
            let targets: Vec<Vec3<f64>> = (0..n)
                .map(|k| {
                    let y = if k % 2 == 0 { 0.0 } else { 20.0 + 10.0 * u as f64 };
                    Vec3::new(15.0 * k as f64 + standard_normal(&mut rng), y, 0.0)
                })
                .collect();
            let mids = targets.windows(2).map(|w| w[0].lerp(w[1], 0.5) + Vec3::new(0.0, 0.0, 2.0)).collect();
            let ts = (0..n).map(|k| 0.1 * k as f64).collect();
            let plan = ActionPlan::timed(targets, mids, ts).unwrap();
            render_full_signature(&plan_to_signature(&plan).unwrap(), 60.0).unwrap().trajectory
        };
        UserSpecimens {
            genuine: (0..3).map(|k| sig((u * 10 + k) as u64)).collect(),
            forgery: vec![sig(999)],
        }
    };
    let db: Vec<UserSpecimens> = (0..2).map(user).collect();
    let p = ExperimentProtocol {
        train_genuine_count: 2,
        repetitions: 1,
        duplicates_per_training: 2,
        ..Default::default()
    };
    let report = evaluate(&db, &p).unwrap();
    assert_eq!(report.estimation_failures, 0);
    let plain = evaluate(&db, &ExperimentProtocol { duplicates_per_training: 0, ..p }).unwrap();
    let (a, b) = (&report.repetitions[0], &plain.repetitions[0]);
    assert_eq!(a.training, b.training);
    for (x, y) in a.trials.iter().zip(&b.trials) {
        assert!(x.score <= y.score);
    }
}
