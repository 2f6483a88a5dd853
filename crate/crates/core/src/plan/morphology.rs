//! Configurable morphology model standing in for corpus statistics: word and
//! letter counts, flourishes, and per-letter target point counts.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use super::letters;
use super::uniform;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::scalar::{lit, Scalar};

/// Finite distribution over nonnegative integers.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    pub outcomes: Vec<(usize, f64)>,
}

impl DiscreteDistribution {
    pub fn new(outcomes: Vec<(usize, f64)>) -> Result<Self> {
        let d = Self { outcomes };
        d.validate()?;
        Ok(d)
    }

    /// Uniform over `lo..=hi`.
    pub fn uniform(lo: usize, hi: usize) -> Self {
        let n = (hi - lo + 1) as f64;
        Self {
            outcomes: (lo..=hi).map(|v| (v, 1.0 / n)).collect(),
        }
    }

    pub fn constant(v: usize) -> Self {
        Self {
            outcomes: vec![(v, 1.0)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.outcomes.is_empty() {
            return Err(Error::Config("empty distribution".into()));
        }
        if self.outcomes.iter().any(|(_, p)| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Config("negative or non-finite probability".into()));
        }
        let total: f64 = self.outcomes.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn min(&self) -> usize {
        self.outcomes.iter().map(|o| o.0).min().unwrap_or(0)
    }

    pub fn max(&self) -> usize {
        self.outcomes.iter().map(|o| o.0).max().unwrap_or(0)
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(v, p) in &self.outcomes {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.outcomes.last().map(|o| o.0).unwrap_or(0)
    }
}

/// Accepts `lo..hi` (inclusive, uniform) or `v:p, v:p, ...`.
impl FromStr for DiscreteDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((lo, hi)) = s.split_once("..") {
            let lo: usize = lo.trim().parse().map_err(|_| Error::Config(format!("bad range '{s}'")))?;
            let hi: usize = hi.trim().parse().map_err(|_| Error::Config(format!("bad range '{s}'")))?;
            if hi < lo {
                return Err(Error::Config(format!("empty range '{s}'")));
            }
            return Ok(Self::uniform(lo, hi));
        }
        let outcomes = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                let (v, p) = t
                    .split_once(':')
                    .ok_or_else(|| Error::Config(format!("expected value:probability, got '{t}'")))?;
                let v = v.trim().parse().map_err(|_| Error::Config(format!("bad value '{v}'")))?;
                let p = p.trim().parse().map_err(|_| Error::Config(format!("bad probability '{p}'")))?;
                Ok((v, p))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(outcomes)
    }
}

impl fmt::Display for DiscreteDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = (self.min(), self.max());
        let n = hi - lo + 1;
        let is_uniform = self.outcomes.len() == n
            && self
                .outcomes
                .iter()
                .enumerate()
                .all(|(i, &(v, p))| v == lo + i && (p - 1.0 / n as f64).abs() < 1e-12);
        if is_uniform {
            return write!(f, "{lo}..{hi}");
        }
        let parts: Vec<String> = self
            .outcomes
            .iter()
            .map(|(v, p)| format!("{v}:{p}"))
            .collect();
        write!(f, "{}", parts.join(", "))
    }
}

/// Gesture and air-writing generation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GestureConfig {
    /// Edge of the cube the random points are drawn in.
    pub cube_size: f64,
    pub points: DiscreteDistribution,
    /// Sagitta bounds as fractions of the chord.
    pub sagitta_min: f64,
    pub sagitta_max: f64,
    /// Letter count for air-writing words.
    pub letters: DiscreteDistribution,
}

impl Default for GestureConfig {
    fn default() -> Self {
        Self {
            cube_size: 100.0,
            points: DiscreteDistribution::uniform(5, 10),
            sagitta_min: 1.0 / 20.0,
            sagitta_max: 1.0 / 5.0,
            letters: DiscreteDistribution::uniform(2, 4),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorphologyConfig {
    pub words: DiscreteDistribution,
    pub letters_per_word: DiscreteDistribution,
    pub flourish_probability: f64,
    pub points_per_letter: DiscreteDistribution,
    /// Largest extent of the generated plan, in length units.
    pub canvas_size: f64,
    /// Per-point positional noise, as a fraction of the letter height.
    pub letter_jitter: f64,
    /// Largest |sagitta| / chord for letter links.
    pub arc_bulge: f64,
    /// Letters the random words are drawn from.
    pub alphabet: String,
    pub gesture: GestureConfig,
}

impl Default for MorphologyConfig {
    fn default() -> Self {
        Self {
            words: DiscreteDistribution {
                outcomes: vec![(1, 0.5), (2, 0.4), (3, 0.1)],
            },
            letters_per_word: DiscreteDistribution::uniform(3, 7),
            flourish_probability: 0.6,
            points_per_letter: DiscreteDistribution::uniform(3, 6),
            canvas_size: 100.0,
            letter_jitter: 0.04,
            arc_bulge: 0.15,
            alphabet: ('A'..='Z').collect(),
            gesture: GestureConfig::default(),
        }
    }
}

impl MorphologyConfig {
    pub fn validate(&self) -> Result<()> {
        self.words.validate()?;
        self.letters_per_word.validate()?;
        self.points_per_letter.validate()?;
        self.gesture.points.validate()?;
        self.gesture.letters.validate()?;
        if !(0.0..=1.0).contains(&self.flourish_probability) {
            return Err(Error::Config("flourish probability must be in [0, 1]".into()));
        }
        if !(self.canvas_size > 0.0) || !(self.gesture.cube_size > 0.0) {
            return Err(Error::Config("canvas and cube sizes must be > 0".into()));
        }
        if !(self.letter_jitter >= 0.0) || !(self.arc_bulge >= 0.0) {
            return Err(Error::Config("jitter and bulge must be >= 0".into()));
        }
        if self.alphabet.is_empty() || self.alphabet.chars().any(|c| letters::template(c).is_none()) {
            return Err(Error::Config(format!("alphabet '{}' must be nonempty letters", self.alphabet)));
        }
        let g = &self.gesture;
        if !(g.sagitta_min > 0.0 && g.sagitta_min <= g.sagitta_max) {
            return Err(Error::Config("sagitta range must be nonempty and positive".into()));
        }
        if g.points.min() < 2 {
            return Err(Error::Config("gestures need at least 2 points".into()));
        }
        if self.letters_per_word.min() == 0 && self.words.max() > 0 {
            return Err(Error::Config("words need at least one letter".into()));
        }
        Ok(())
    }
}

/// 2D virtual target points and one link midpoint per consecutive pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Morphology2D<S> {
    pub targets: Vec<[S; 2]>,
    pub midpoints: Vec<[S; 2]>,
}

struct Sketch {
    points: Vec<[f64; 2]>,
}

impl Sketch {
    fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        (lo, hi)
    }
}

fn jitter(rng: &mut Rng, sd: f64) -> f64 {
    sd * rng::standard_normal(rng)
}

fn place_letter(sketch: &mut Sketch, skeleton: &[[f64; 2]], x0: f64, slant: f64, sd: f64, rng: &mut Rng) -> f64 {
    let lo = skeleton.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    for p in skeleton {
        let x = x0 + (p[0] - lo) + slant * p[1] + jitter(rng, sd);
        let y = p[1] + jitter(rng, sd);
        sketch.points.push([x, y]);
    }
    x0 + letters::width(skeleton)
}

fn append_flourish(sketch: &mut Sketch, rng: &mut Rng) {
    let n: usize = rng.gen_range(6..=10);
    let (center, rx, ry) = if sketch.points.is_empty() {
        ([0.0, 0.0], uniform(rng, 1.5, 3.0), uniform(rng, 0.5, 1.2))
    } else {
        let (lo, hi) = sketch.bbox();
        let w = hi[0] - lo[0];
        (
            [(lo[0] + hi[0]) / 2.0, lo[1] + 0.2 * (hi[1] - lo[1])],
            0.55 * w + 0.3,
            uniform(rng, 0.35, 0.7),
        )
    };
    let start: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let dir = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let first = sketch.points.len();
    for i in 0..n {
        let a = start + dir * std::f64::consts::TAU * i as f64 / n as f64;
        let k = uniform(rng, 0.85, 1.15);
        sketch.points.push([center[0] + k * rx * a.cos(), center[1] + k * ry * a.sin()]);
    }
    // close the loop near its first point
    let p0 = sketch.points[first];
    sketch
        .points
        .push([p0[0] + jitter(rng, 0.02 * rx), p0[1] + jitter(rng, 0.02 * ry)]);
}

fn finish<S: Scalar>(sketch: Sketch, cfg: &MorphologyConfig, rng: &mut Rng) -> Result<Morphology2D<S>> {
    if sketch.points.len() < 2 {
        return Err(Error::Config("morphology produced fewer than 2 target points".into()));
    }
    let (lo, hi) = sketch.bbox();
    let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if !(extent > 0.0) {
        return Err(Error::Degenerate("morphology has zero extent".into()));
    }
    let k = cfg.canvas_size / extent;
    let pts: Vec<[f64; 2]> = sketch
        .points
        .iter()
        .map(|p| [(p[0] - lo[0]) * k, (p[1] - lo[1]) * k])
        .collect();
    let mids = pts
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let h = uniform(rng, -cfg.arc_bulge, cfg.arc_bulge);
            [(a[0] + b[0]) / 2.0 - d[1] * h, (a[1] + b[1]) / 2.0 + d[0] * h]
        })
        .collect::<Vec<_>>();
    let conv = |p: &[f64; 2]| [lit::<S>(p[0]), lit::<S>(p[1])];
    Ok(Morphology2D {
        targets: pts.iter().map(conv).collect(),
        midpoints: mids.iter().map(conv).collect(),
    })
}

/// Random signature morphology: words of letter skeletons, each resampled
/// to a drawn number of target points, optionally followed by a flourish
/// loop. Deterministic in `seed`.
pub fn generate_morphology_2d<S: Scalar>(cfg: &MorphologyConfig, seed: u64) -> Result<Morphology2D<S>> {
    cfg.validate()?;
    let mut rng = rng::seeded(seed);
    let mut sketch = Sketch { points: Vec::new() };
    let slant = uniform(&mut rng, -0.15, 0.25);
    let sd = cfg.letter_jitter;
    let alphabet: Vec<char> = cfg.alphabet.chars().collect();
    let words = cfg.words.sample(&mut rng);
    let mut x = 0.0;
    for _ in 0..words {
        let n_letters = cfg.letters_per_word.sample(&mut rng);
        for _ in 0..n_letters {
            let c = alphabet[rng.gen_range(0..alphabet.len())];
            let n_points = cfg.points_per_letter.sample(&mut rng);
            let skeleton = letters::resample(letters::template(c).expect("A-Z"), n_points);
            x = place_letter(&mut sketch, &skeleton, x, slant, sd, &mut rng) + 0.25;
        }
        x += 0.45;
    }
    let forced = sketch.points.len() < 2;
    if forced || rng.gen_bool(cfg.flourish_probability) {
        append_flourish(&mut sketch, &mut rng);
    }
    finish(sketch, cfg, &mut rng)
}

/// Morphology tracing `text` with the letter skeletons as they are
/// (air-writing). Non-letters act as word gaps.
pub fn text_morphology_2d<S: Scalar>(text: &str, cfg: &MorphologyConfig, seed: u64) -> Result<Morphology2D<S>> {
    cfg.validate()?;
    let mut rng = rng::seeded(seed);
    let mut sketch = Sketch { points: Vec::new() };
    let mut x = 0.0;
    for c in text.chars() {
        match letters::template(c) {
            Some(sk) => x = place_letter(&mut sketch, sk, x, 0.0, cfg.letter_jitter, &mut rng) + 0.25,
            None => x += 0.45,
        }
    }
    if sketch.points.is_empty() {
        return Err(Error::InvalidInput(format!("no letters in '{text}'")));
    }
    finish(sketch, cfg, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_parsing() {
        let d: DiscreteDistribution = "3..7".parse().unwrap();
        assert_eq!(d.outcomes.len(), 5);
        assert_eq!(d.to_string(), "3..7");
        let d: DiscreteDistribution = "1:0.5, 2:0.4, 3:0.1".parse().unwrap();
        assert_eq!(d.max(), 3);
        assert_eq!(d.to_string().parse::<DiscreteDistribution>().unwrap(), d);
        assert!("".parse::<DiscreteDistribution>().is_err());
        assert!("1:0.5".parse::<DiscreteDistribution>().is_err());
        assert!("5..2".parse::<DiscreteDistribution>().is_err());
    }

    #[test]
    fn deterministic_in_seed() {
        let cfg = MorphologyConfig::default();
        let a: Morphology2D<f64> = generate_morphology_2d(&cfg, 42).unwrap();
        let b: Morphology2D<f64> = generate_morphology_2d(&cfg, 42).unwrap();
        assert_eq!(a, b);
        let c: Morphology2D<f64> = generate_morphology_2d(&cfg, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn letter_v_is_down_up() {
        let cfg = MorphologyConfig::default();
        let m: Morphology2D<f64> = text_morphology_2d("v", &cfg, 5).unwrap();
        assert_eq!(m.targets.len(), 3);
        assert_eq!(m.midpoints.len(), 2);
        assert!(m.targets[1][1] < m.targets[0][1] && m.targets[1][1] < m.targets[2][1]);
    }

    #[test]
    fn lone_flourish_closes() {
        let cfg = MorphologyConfig {
            words: DiscreteDistribution::constant(0),
            flourish_probability: 1.0,
            ..Default::default()
        };
        for seed in 0..50 {
            let m: Morphology2D<f64> = generate_morphology_2d(&cfg, seed).unwrap();
            let (a, b) = (m.targets[0], *m.targets.last().unwrap());
            let gap = (a[0] - b[0]).hypot(a[1] - b[1]);
            assert!(gap < 0.1 * cfg.canvas_size, "seed {seed}: gap {gap}");
        }
    }

    #[test]
    fn counts_follow_config() {
        let cfg = MorphologyConfig {
            words: DiscreteDistribution::constant(1),
            letters_per_word: DiscreteDistribution::constant(4),
            points_per_letter: DiscreteDistribution::constant(5),
            flourish_probability: 0.0,
            ..Default::default()
        };
        let m: Morphology2D<f64> = generate_morphology_2d(&cfg, 3).unwrap();
        assert_eq!(m.targets.len(), 20);
        assert_eq!(m.midpoints.len(), 19);
    }

    #[test]
    fn empty_distribution_rejected() {
        let cfg = MorphologyConfig {
            words: DiscreteDistribution { outcomes: vec![] },
            ..Default::default()
        };
        assert!(generate_morphology_2d::<f64>(&cfg, 1).is_err());
    }
}
