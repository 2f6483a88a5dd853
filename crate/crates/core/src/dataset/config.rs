use crate::duplicate::{DistortionMode, DEFAULT_M_FORGERY, DEFAULT_M_GENUINE};
use crate::error::{Error, Result};
use crate::format::KeyValues;
use crate::plan::{DiscreteDistribution, MorphologyConfig, SurfaceConfig, DEFAULT_MEAN_GAP, DEFAULT_SD_GAP};
use crate::synthesis::SolverMode;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerationMode {
    /// Full synthesis of masters, DS for genuine specimens and forgeries.
    FullSynthesis,
    /// Random 3D point gestures, one class per master.
    Gesture,
    /// Random uppercase words, one class per master.
    AirWriting,
}

impl FromStr for GenerationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fs-ds" => Ok(Self::FullSynthesis),
            "gesture" => Ok(Self::Gesture),
            "airwriting" => Ok(Self::AirWriting),
            o => Err(Error::Config(format!("unknown generation mode '{o}'"))),
        }
    }
}

impl fmt::Display for GenerationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FullSynthesis => "fs-ds",
            Self::Gesture => "gesture",
            Self::AirWriting => "airwriting",
        })
    }
}

/// Ordered `key = value` pairs.
pub(crate) type Settings = Vec<(String, String)>;

fn put(out: &mut Settings, key: &str, value: impl ToString) {
    out.push((key.to_string(), value.to_string()));
}

/// Morphology, surface, timing and duplication settings shared by every
/// generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationSettings {
    pub morphology: MorphologyConfig,
    pub surface: SurfaceConfig,
    pub mean_gap: f64,
    pub sd_gap: f64,
    pub solver: SolverMode,
    pub affine: bool,
    pub distortion: DistortionMode,
    /// Standard deviation of the duplicate rotation angles.
    pub rotation_scale: f64,
    pub displacement_max: f64,
    pub edit_fraction: f64,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        let morphology = MorphologyConfig::default();
        Self {
            surface: SurfaceConfig::for_canvas(morphology.canvas_size),
            morphology,
            mean_gap: DEFAULT_MEAN_GAP,
            sd_gap: DEFAULT_SD_GAP,
            solver: SolverMode::General,
            affine: true,
            distortion: DistortionMode::Relative,
            rotation_scale: std::f64::consts::PI / 100.0,
            displacement_max: 0.02,
            edit_fraction: 0.05,
        }
    }
}

impl GenerationSettings {
    fn take(kv: &mut KeyValues) -> Result<Self> {
        let d = MorphologyConfig::default();
        let mut morphology = MorphologyConfig {
            words: kv.take_or("words", d.words)?,
            letters_per_word: kv.take_or("letters_per_word", d.letters_per_word)?,
            flourish_probability: kv.take_or("flourish_probability", d.flourish_probability)?,
            points_per_letter: kv.take_or("points_per_letter", d.points_per_letter)?,
            canvas_size: kv.take_or("canvas_size", d.canvas_size)?,
            letter_jitter: kv.take_or("letter_jitter", d.letter_jitter)?,
            arc_bulge: kv.take_or("arc_bulge", d.arc_bulge)?,
            alphabet: kv.take_or("alphabet", d.alphabet.clone())?,
            gesture: d.gesture.clone(),
        };
        let g = &mut morphology.gesture;
        g.cube_size = kv.take_or("cube_size", g.cube_size)?;
        g.points = kv.take_or("gesture_points", g.points.clone())?;
        g.sagitta_min = kv.take_or("sagitta_min", g.sagitta_min)?;
        g.sagitta_max = kv.take_or("sagitta_max", g.sagitta_max)?;
        g.letters = kv.take_or("word_letters", g.letters.clone())?;
        let s = SurfaceConfig::for_canvas(morphology.canvas_size);
        let surface = SurfaceConfig {
            ax: kv.take_or("surface_ax", s.ax)?,
            ay: kv.take_or("surface_ay", s.ay)?,
            wx: kv.take_or("surface_wx", s.wx)?,
            wy: kv.take_or("surface_wy", s.wy)?,
            phx: kv.take_or("surface_phx", s.phx)?,
            phy: kv.take_or("surface_phy", s.phy)?,
        };
        let d_rot = std::f64::consts::PI / 100.0;
        let out = Self {
            morphology,
            surface,
            mean_gap: kv.take_or("mean_gap", DEFAULT_MEAN_GAP)?,
            sd_gap: kv.take_or("sd_gap", DEFAULT_SD_GAP)?,
            solver: kv.take_or("solver", SolverMode::General)?,
            affine: kv.take_or("affine", true)?,
            distortion: kv.take_or("distortion", DistortionMode::Relative)?,
            rotation_scale: kv.take_or("rotation_scale", d_rot)?,
            displacement_max: kv.take_or("displacement_max", 0.02)?,
            edit_fraction: kv.take_or("edit_fraction", 0.05)?,
        };
        out.validate()?;
        Ok(out)
    }

    fn put(&self, out: &mut Settings) {
        let m = &self.morphology;
        put(out, "words", &m.words);
        put(out, "letters_per_word", &m.letters_per_word);
        put(out, "flourish_probability", m.flourish_probability);
        put(out, "points_per_letter", &m.points_per_letter);
        put(out, "canvas_size", m.canvas_size);
        put(out, "letter_jitter", m.letter_jitter);
        put(out, "arc_bulge", m.arc_bulge);
        put(out, "alphabet", &m.alphabet);
        put(out, "cube_size", m.gesture.cube_size);
        put(out, "gesture_points", &m.gesture.points);
        put(out, "sagitta_min", m.gesture.sagitta_min);
        put(out, "sagitta_max", m.gesture.sagitta_max);
        put(out, "word_letters", &m.gesture.letters);
        let s = &self.surface;
        put(out, "surface_ax", s.ax);
        put(out, "surface_ay", s.ay);
        put(out, "surface_wx", s.wx);
        put(out, "surface_wy", s.wy);
        put(out, "surface_phx", s.phx);
        put(out, "surface_phy", s.phy);
        put(out, "mean_gap", self.mean_gap);
        put(out, "sd_gap", self.sd_gap);
        put(out, "solver", self.solver);
        put(out, "affine", self.affine);
        put(out, "distortion", self.distortion);
        put(out, "rotation_scale", self.rotation_scale);
        put(out, "displacement_max", self.displacement_max);
        put(out, "edit_fraction", self.edit_fraction);
    }

    pub fn validate(&self) -> Result<()> {
        self.morphology.validate()?;
        self.surface.validate()?;
        if !(self.mean_gap > 0.0) || !(self.sd_gap >= 0.0) {
            return Err(Error::Config("mean_gap must be > 0 and sd_gap >= 0".into()));
        }
        if !(self.rotation_scale >= 0.0) || !(self.displacement_max >= 0.0) {
            return Err(Error::Config("rotation_scale and displacement_max must be >= 0".into()));
        }
        if !(0.0..=0.05).contains(&self.edit_fraction) {
            return Err(Error::Config("edit_fraction must lie in [0, 0.05]".into()));
        }
        Ok(())
    }
}

fn check_rate(fm: f64) -> Result<()> {
    if fm > 0.0 && fm.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("fm must be > 0, got {fm}")))
    }
}

fn check_m(key: &str, m: f64) -> Result<()> {
    if (0.0..1.0).contains(&m) {
        Ok(())
    } else {
        Err(Error::Config(format!("{key} must lie in [0, 1), got {m}")))
    }
}

/// Consumes `mode` if present and checks it.
fn take_mode(kv: &mut KeyValues, allowed: &[GenerationMode]) -> Result<GenerationMode> {
    let mode = kv.take_or("mode", allowed[0])?;
    if allowed.contains(&mode) {
        Ok(mode)
    } else {
        Err(Error::Config(format!("mode '{mode}' not valid here")))
    }
}

/// Settings of a full-synthesis signature database.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFullConfig {
    pub name: String,
    pub users: usize,
    pub genuine: usize,
    pub forgery: usize,
    pub fm: f64,
    pub seed: u64,
    pub m_genuine: f64,
    pub m_forgery: f64,
    pub settings: GenerationSettings,
}

impl Default for SynthFullConfig {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            users: 10,
            genuine: 10,
            forgery: 10,
            fm: 60.0,
            seed: 0,
            m_genuine: DEFAULT_M_GENUINE,
            m_forgery: DEFAULT_M_FORGERY,
            settings: GenerationSettings::default(),
        }
    }
}

impl SynthFullConfig {
    /// Named starting points approximating common capture setups.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        match name {
            "leap-60" => Ok(Self { name: name.into(), ..base }),
            "kinect-30" => {
                let mut s = base.settings.clone();
                s.morphology.canvas_size = 400.0;
                s.surface = SurfaceConfig::for_canvas(400.0);
                Ok(Self { name: name.into(), fm: 30.0, settings: s, ..base })
            }
            // short signatures: one initial from a small shared alphabet,
            // so some users resemble each other
            "initials-60" => {
                let mut s = base.settings.clone();
                let m = &mut s.morphology;
                m.words = DiscreteDistribution::constant(1);
                m.letters_per_word = DiscreteDistribution::constant(1);
                m.points_per_letter = DiscreteDistribution::constant(4);
                m.flourish_probability = 0.0;
                m.alphabet = "ABCD".into();
                Ok(Self { name: name.into(), m_genuine: 0.3, m_forgery: 0.9, settings: s, ..base })
            }
            "tablet-100" => {
                let mut s = base.settings.clone();
                s.surface = SurfaceConfig::flat();
                Ok(Self { name: name.into(), fm: 100.0, settings: s, ..base })
            }
            o => Err(Error::Config(format!("unknown preset '{o}' (leap-60, kinect-30, initials-60, tablet-100)"))),
        }
    }

    /// Parses a config or a database manifest. A `preset` key supplies the
    /// defaults for every key not given.
    pub fn parse(mut kv: KeyValues) -> Result<Self> {
        take_mode(&mut kv, &[GenerationMode::FullSynthesis])?;
        let base = match kv.take::<String>("preset")? {
            Some(p) => Self::preset(&p)?,
            None => Self::default(),
        };
        // explicit keys override the preset's values
        let mut merged = Settings::new();
        for (k, v) in base.settings_list() {
            let explicit: Option<String> = kv.take(&k)?;
            merged.push((k, explicit.unwrap_or(v)));
        }
        kv.finish()?;
        let mut kv = KeyValues::parse(&to_text(&merged), "settings")?;
        let cfg = Self {
            name: kv.take_or("name", base.name)?,
            users: kv.take_or("users", base.users)?,
            genuine: kv.take_or("genuine", base.genuine)?,
            forgery: kv.take_or("forgery", base.forgery)?,
            fm: kv.take_or("fm", base.fm)?,
            seed: kv.take_or("seed", base.seed)?,
            m_genuine: kv.take_or("m_genuine", base.m_genuine)?,
            m_forgery: kv.take_or("m_forgery", base.m_forgery)?,
            settings: GenerationSettings::take(&mut kv)?,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 || self.genuine == 0 {
            return Err(Error::Config("users and genuine counts must be > 0".into()));
        }
        check_rate(self.fm)?;
        check_m("m_genuine", self.m_genuine)?;
        check_m("m_forgery", self.m_forgery)?;
        self.settings.validate()
    }

    /// Every setting, in manifest order.
    pub(crate) fn settings_list(&self) -> Settings {
        let mut out = Settings::new();
        put(&mut out, "name", &self.name);
        put(&mut out, "users", self.users);
        put(&mut out, "genuine", self.genuine);
        put(&mut out, "forgery", self.forgery);
        put(&mut out, "fm", self.fm);
        put(&mut out, "seed", self.seed);
        put(&mut out, "m_genuine", self.m_genuine);
        put(&mut out, "m_forgery", self.m_forgery);
        self.settings.put(&mut out);
        out
    }
}

/// Settings of a class-labelled gesture or air-writing database.
#[derive(Debug, Clone, PartialEq)]
pub struct GestureDbConfig {
    pub name: String,
    pub mode: GenerationMode,
    pub classes: usize,
    pub samples: usize,
    pub fm: f64,
    pub seed: u64,
    /// Deformation level of the samples around each class master.
    pub m: f64,
    pub settings: GenerationSettings,
}

impl Default for GestureDbConfig {
    fn default() -> Self {
        Self {
            name: "gestures".into(),
            mode: GenerationMode::Gesture,
            classes: 10,
            samples: 5,
            fm: 60.0,
            seed: 0,
            m: DEFAULT_M_GENUINE,
            settings: GenerationSettings::default(),
        }
    }
}

impl GestureDbConfig {
    pub fn parse(mut kv: KeyValues) -> Result<Self> {
        let mode = take_mode(&mut kv, &[GenerationMode::Gesture, GenerationMode::AirWriting])?;
        let d = Self::default();
        let cfg = Self {
            name: kv.take_or("name", d.name)?,
            mode,
            classes: kv.take_or("classes", d.classes)?,
            samples: kv.take_or("samples", d.samples)?,
            fm: kv.take_or("fm", d.fm)?,
            seed: kv.take_or("seed", d.seed)?,
            m: kv.take_or("m", d.m)?,
            settings: GenerationSettings::take(&mut kv)?,
        };
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.samples == 0 {
            return Err(Error::Config("classes and samples must be > 0".into()));
        }
        if self.mode == GenerationMode::FullSynthesis {
            return Err(Error::Config("gesture databases use mode gesture or airwriting".into()));
        }
        check_rate(self.fm)?;
        check_m("m", self.m)?;
        self.settings.validate()
    }

    pub(crate) fn settings_list(&self) -> Settings {
        let mut out = Settings::new();
        put(&mut out, "name", &self.name);
        put(&mut out, "classes", self.classes);
        put(&mut out, "samples", self.samples);
        put(&mut out, "fm", self.fm);
        put(&mut out, "seed", self.seed);
        put(&mut out, "m", self.m);
        self.settings.put(&mut out);
        out
    }
}

pub(crate) fn to_text(settings: &Settings) -> String {
    settings.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
