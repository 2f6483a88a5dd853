use airsig::dataset::{
    classify_database, duplicate_file, evaluate_database, gesture_db, load_database, synth_full, synth_kinematics,
    DatabaseManifest, DuplicateRequest, GestureDbConfig, SynthFullConfig, MANIFEST_FILE,
};
use airsig::duplicate::{DistortionMode, DuplicateKind};
use airsig::format::{KeyValues, ParameterFile, SignatureFile};
use airsig::synthesis::render_full_signature;
use airsig::verify::ExperimentProtocol;
use airsig::Trajectory;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn config(text: &str) -> SynthFullConfig {
    SynthFullConfig::parse(KeyValues::parse(text, "test").unwrap()).unwrap()
}

fn small() -> SynthFullConfig {
    config("users = 3\ngenuine = 4\nforgery = 2\nseed = 9\n")
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn synth_full_writes_the_expected_tree() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth_full(&small(), dir.path()).unwrap();
    let files: Vec<PathBuf> = tree(dir.path()).into_keys().collect();
    let mut expected = manifest.expected_files();
    expected.sort();
    assert_eq!(files, expected);
    assert_eq!(files.len(), 1 + 3 * (1 + 4 + 2));
    assert_eq!(DatabaseManifest::read(dir.path()).unwrap(), manifest);

    let db = load_database(dir.path()).unwrap();
    assert_eq!(db.users.len(), 3);
    assert!(db.users.iter().all(|u| u.genuine.len() == 4 && u.forgery.len() == 2));
    assert_eq!(db.labels, ["user000", "user001", "user002"]);
    let f = SignatureFile::read(&dir.path().join("user001/forgery/001.sig")).unwrap();
    assert_eq!(f.headers.get("fm"), Some("60"));
    assert_eq!(f.headers.get("kind"), Some("forgery"));
    assert_eq!(f.trajectory.sampling_rate(), Some(60.0));
    ParameterFile::read(&dir.path().join("user002/master.params")).unwrap();
}

#[test]
fn default_database_has_the_documented_size() {
    let dir = tempfile::tempdir().unwrap();
    synth_full(&config("seed = 1\n"), dir.path()).unwrap();
    let files = tree(dir.path());
    let count = |ext: &str| files.keys().filter(|p| p.extension().is_some_and(|e| e == ext)).count();
    assert_eq!((count("sig"), count("params"), files.len()), (200, 10, 211));
}

#[test]
fn regeneration_from_the_manifest_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    in_pool(1, || synth_full(&small(), a.path())).unwrap();
    let cfg = SynthFullConfig::parse(KeyValues::read(&a.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    in_pool(4, || synth_full(&cfg, b.path())).unwrap();
    assert_eq!(tree(a.path()), tree(b.path()));

    let c = tempfile::tempdir().unwrap();
    synth_full(&SynthFullConfig { seed: 10, ..small() }, c.path()).unwrap();
    assert_ne!(tree(a.path()), tree(c.path()));
}

#[test]
fn presets_generate() {
    for preset in ["leap-60", "kinect-30", "initials-60", "tablet-100"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(&format!("preset = {preset}\nusers = 2\ngenuine = 2\nforgery = 1\n"));
        let m = synth_full(&cfg, dir.path()).unwrap();
        assert_eq!(m.name, preset);
        let f = SignatureFile::read(&dir.path().join("user000/genuine/000.sig")).unwrap();
        assert_eq!(f.trajectory.sampling_rate(), Some(cfg.fm));
    }
}

#[test]
fn gesture_and_airwriting_databases() {
    for mode in ["gesture", "airwriting"] {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("mode = {mode}\nclasses = 3\nsamples = 4\nseed = 2\n");
        let cfg = GestureDbConfig::parse(KeyValues::parse(&text, "test").unwrap()).unwrap();
        let m = gesture_db(&cfg, dir.path()).unwrap();
        assert_eq!(tree(dir.path()).len(), m.expected_files().len());
        let db = load_database(dir.path()).unwrap();
        assert_eq!(db.users.len(), 3);
        assert!(db.users.iter().all(|u| u.genuine.len() == 4 && u.forgery.is_empty()));
        for label in &db.labels {
            match mode {
                "gesture" => assert!(label.starts_with("gesture")),
                _ => assert!(label.chars().all(|c| c.is_ascii_alphabetic()), "{label}"),
            }
        }
        let again = tempfile::tempdir().unwrap();
        gesture_db(&cfg, again.path()).unwrap();
        assert_eq!(tree(dir.path()), tree(again.path()));
    }
}

#[test]
fn kinematic_batch_reports_each_file() {
    let db = tempfile::tempdir().unwrap();
    synth_full(&small(), db.path()).unwrap();
    let inputs_dir = tempfile::tempdir().unwrap();
    let mut inputs = Vec::new();
    for u in 0..3 {
        let src = SignatureFile::read(&db.path().join(format!("user00{u}/genuine/000.sig"))).unwrap();
        let bare = Trajectory::bare(src.trajectory.positions().to_vec()).unwrap();
        let p = inputs_dir.path().join(format!("bare{u}.sig"));
        std::fs::write(&p, SignatureFile::new(bare).to_text()).unwrap();
        inputs.push(p);
    }
    let broken = inputs_dir.path().join("broken.sig");
    std::fs::write(&broken, "#airsig v1\n1 2\n").unwrap();
    inputs.push(broken);

    let out = tempfile::tempdir().unwrap();
    let report = synth_kinematics(&inputs, out.path(), 60.0, 3, None).unwrap();
    assert_eq!(report.entries.len(), 4);
    assert_eq!(report.failures(), 1);
    for e in &report.entries[..3] {
        let stats = e.outcome.as_ref().unwrap();
        assert!(stats.strokes >= 1 && stats.duration > 0.0);
        let f = SignatureFile::read(&e.output).unwrap();
        assert_eq!(f.trajectory.sampling_rate(), Some(60.0));
    }
    let text = std::fs::read_to_string(out.path().join("report")).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().last().unwrap().contains("error"));
}

#[test]
fn identity_duplicates_reproduce_the_master() {
    let db = tempfile::tempdir().unwrap();
    synth_full(&small(), db.path()).unwrap();
    let input = db.path().join("user000/master.params");
    let out = tempfile::tempdir().unwrap();
    let req = DuplicateRequest {
        input: input.clone(),
        out: out.path().to_path_buf(),
        count: 3,
        kind: DuplicateKind::Genuine,
        m: 0.0,
        seed: 5,
        fm: Some(60.0),
        affine: false,
        distortion: DistortionMode::Relative,
    };
    let paths = duplicate_file(&req).unwrap();
    assert_eq!(paths.len(), 3);
    let master = ParameterFile::read(&input).unwrap().signature;
    let expected = SignatureFile::new(render_full_signature(&master, 60.0).unwrap().trajectory);
    for p in &paths {
        assert!(p.file_name().unwrap().to_string_lossy().starts_with("master_"));
        let got = SignatureFile::read(p).unwrap();
        assert_eq!(got.trajectory, SignatureFile::parse(&expected.to_text(), "x").unwrap().trajectory);
    }

    let varied = duplicate_file(&DuplicateRequest { m: 0.3, affine: true, ..req.clone() }).unwrap();
    let a = std::fs::read(&varied[0]).unwrap();
    let b = std::fs::read(&varied[1]).unwrap();
    assert_ne!(a, b);

    // signature files are estimated first
    let sig = db.path().join("user001/genuine/000.sig");
    let out2 = tempfile::tempdir().unwrap();
    let from_sig = duplicate_file(&DuplicateRequest { input: sig, out: out2.path().to_path_buf(), fm: None, ..req }).unwrap();
    assert_eq!(SignatureFile::read(&from_sig[0]).unwrap().trajectory.sampling_rate(), Some(60.0));
}

#[test]
fn evaluation_writes_both_conditions() {
    let db = tempfile::tempdir().unwrap();
    synth_full(&config("users = 3\ngenuine = 4\nforgery = 2\nseed = 4\n"), db.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let protocol = ExperimentProtocol {
        train_genuine_count: 2,
        repetitions: 2,
        duplicates_per_training: 2,
        ..ExperimentProtocol::default()
    };
    let run = evaluate_database(db.path(), &protocol, out.path()).unwrap();
    assert!(run.augmented.is_some());
    let report = std::fs::read_to_string(out.path().join("report")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("baseline ")));
    assert!(report.lines().any(|l| l.starts_with("ds-x2 ")));
    for f in ["det_random_baseline.dat", "det_skilled_ds-x2.dat", "scores_baseline.dat", "scores_ds-x2.dat"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    let det = std::fs::read_to_string(out.path().join("det_random_baseline.dat")).unwrap();
    assert_eq!(det.lines().count(), 101);
}

#[test]
fn classification_writes_a_cmc_curve() {
    let db = tempfile::tempdir().unwrap();
    let cfg = GestureDbConfig::parse(KeyValues::parse("classes = 4\nsamples = 4\n", "t").unwrap()).unwrap();
    gesture_db(&cfg, db.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let protocol = ExperimentProtocol { train_genuine_count: 2, repetitions: 2, ..ExperimentProtocol::default() };
    let cmc = classify_database(db.path(), &protocol, out.path()).unwrap();
    assert_eq!(cmc.rank_accuracy.len(), 4);
    assert!((cmc.rank_accuracy[3] - 1.0).abs() < 1e-12);
    let curve = std::fs::read_to_string(out.path().join("cmc.dat")).unwrap();
    assert_eq!(curve.lines().count(), 4);
}

#[test]
fn missing_specimens_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    synth_full(&small(), dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("user002/genuine/003.sig")).unwrap();
    let err = load_database(dir.path()).unwrap_err().to_string();
    assert!(err.contains("003.sig"), "{err}");
}
