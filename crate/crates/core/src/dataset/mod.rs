//! Databases on disk: manifests, layout, generation drivers and the
//! experiment drivers behind the command-line tool.

mod config;
mod drivers;

pub use config::{GenerationMode, GenerationSettings, GestureDbConfig, SynthFullConfig};
pub use drivers::{
    classify_database, duplicate_file, evaluate_database, gesture_db, synth_full, synth_kinematics, DuplicateRequest,
    EvaluationRun, KinematicEntry, KinematicReport, KinematicStats,
};

use crate::error::{Error, Result};
use crate::format::{KeyValues, SignatureFile};
use crate::verify::UserSpecimens;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest";
pub const MASTER_FILE: &str = "master.params";
pub const GENUINE_DIR: &str = "genuine";
pub const FORGERY_DIR: &str = "forgery";

pub fn user_dir_name(user: usize) -> String {
    format!("user{user:03}")
}

pub fn specimen_file_name(index: usize) -> String {
    format!("{index:03}.sig")
}

/// Root description of a generated database. The settings are the complete
/// generator configuration, so a manifest doubles as the config that
/// regenerates its database.
#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseManifest {
    pub mode: GenerationMode,
    pub name: String,
    pub users: usize,
    pub genuine_per_user: usize,
    pub forgery_per_user: usize,
    pub fm: f64,
    pub seed: u64,
    /// Every generator setting, in order, as written.
    pub settings: Vec<(String, String)>,
}

impl DatabaseManifest {
    pub fn for_full(cfg: &SynthFullConfig) -> Self {
        Self {
            mode: GenerationMode::FullSynthesis,
            name: cfg.name.clone(),
            users: cfg.users,
            genuine_per_user: cfg.genuine,
            forgery_per_user: cfg.forgery,
            fm: cfg.fm,
            seed: cfg.seed,
            settings: cfg.settings_list(),
        }
    }

    pub fn for_gestures(cfg: &GestureDbConfig) -> Self {
        Self {
            mode: cfg.mode,
            name: cfg.name.clone(),
            users: cfg.classes,
            genuine_per_user: cfg.samples,
            forgery_per_user: 0,
            fm: cfg.fm,
            seed: cfg.seed,
            settings: cfg.settings_list(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("mode = {}\n", self.mode);
        out.push_str(&config::to_text(&self.settings));
        out
    }

    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let kv = KeyValues::parse(text, path)?;
        let mode: GenerationMode = kv
            .clone()
            .take("mode")?
            .ok_or_else(|| Error::Config(format!("{path}: manifest has no mode")))?;
        let settings: Vec<(String, String)> = text
            .lines()
            .filter_map(|l| l.split('#').next())
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .filter(|(k, _)| k != "mode")
            .collect();
        Ok(match mode {
            GenerationMode::FullSynthesis => {
                let cfg = SynthFullConfig::parse(kv)?;
                Self { settings, ..Self::for_full(&cfg) }
            }
            _ => {
                let cfg = GestureDbConfig::parse(kv)?;
                Self { settings, ..Self::for_gestures(&cfg) }
            }
        })
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Every file the database should contain, relative to its root.
    pub fn expected_files(&self) -> Vec<PathBuf> {
        let mut out = vec![PathBuf::from(MANIFEST_FILE)];
        for u in 0..self.users {
            let d = PathBuf::from(user_dir_name(u));
            out.push(d.join(MASTER_FILE));
            out.extend((0..self.genuine_per_user).map(|k| d.join(GENUINE_DIR).join(specimen_file_name(k))));
            out.extend((0..self.forgery_per_user).map(|k| d.join(FORGERY_DIR).join(specimen_file_name(k))));
        }
        out
    }
}

/// A database read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDatabase {
    pub manifest: DatabaseManifest,
    pub users: Vec<UserSpecimens>,
    /// Class label of every user (the `label` header of its first specimen,
    /// or the directory name).
    pub labels: Vec<String>,
}

fn read_specimens(dir: &Path, count: usize) -> Result<Vec<SignatureFile>> {
    (0..count).map(|k| SignatureFile::read(&dir.join(specimen_file_name(k)))).collect()
}

/// Loads every specimen listed by the manifest, failing on missing files.
pub fn load_database(dir: &Path) -> Result<LoadedDatabase> {
    let manifest = DatabaseManifest::read(dir)?;
    let mut users = Vec::with_capacity(manifest.users);
    let mut labels = Vec::with_capacity(manifest.users);
    for u in 0..manifest.users {
        let udir = dir.join(user_dir_name(u));
        let genuine = read_specimens(&udir.join(GENUINE_DIR), manifest.genuine_per_user)?;
        let forgery = read_specimens(&udir.join(FORGERY_DIR), manifest.forgery_per_user)?;
        labels.push(
            genuine
                .first()
                .and_then(|f| f.headers.get("label").map(str::to_string))
                .unwrap_or_else(|| user_dir_name(u)),
        );
        users.push(UserSpecimens {
            genuine: genuine.into_iter().map(|f| f.trajectory).collect(),
            forgery: forgery.into_iter().map(|f| f.trajectory).collect(),
        });
    }
    Ok(LoadedDatabase { manifest, users, labels })
}
