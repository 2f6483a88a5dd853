//! Cognitive action plans: virtual target points joined by planar circular
//! arcs, their projection from 2D onto a sinusoidal surface, and rhythmic
//! timing of the targets.

mod arc;
mod gesture;
mod letters;
mod morphology;

pub use arc::PlanarArc;
pub use gesture::{generate_airwriting_plan, generate_gesture_plan};
pub use morphology::{
    generate_morphology_2d, text_morphology_2d, DiscreteDistribution, GestureConfig,
    Morphology2D, MorphologyConfig,
};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::rng::{self, Rng};
use crate::scalar::{lit, Scalar};

/// Fits the planar arc from `p1` to `p2` through `pm`.
pub fn fit_planar_arc<S: Scalar>(p1: Vec3<S>, p2: Vec3<S>, pm: Vec3<S>) -> Result<PlanarArc<S>> {
    PlanarArc::fit(p1, p2, pm)
}

/// Target points, link midpoints, fitted arcs and (optionally) target times.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionPlan<S> {
    pub targets: Vec<Vec3<S>>,
    pub midpoints: Vec<Vec3<S>>,
    pub links: Vec<PlanarArc<S>>,
    pub timestamps: Option<Vec<S>>,
}

impl<S: Scalar> ActionPlan<S> {
    /// Builds a plan and fits one arc per link. Consecutive coincident
    /// targets are dropped together with their link.
    pub fn new(targets: Vec<Vec3<S>>, midpoints: Vec<Vec3<S>>) -> Result<Self> {
        Self::build(targets, midpoints, None)
    }

    /// Like [`ActionPlan::new`] with target timestamps attached.
    pub fn timed(targets: Vec<Vec3<S>>, midpoints: Vec<Vec3<S>>, timestamps: Vec<S>) -> Result<Self> {
        if timestamps.len() != targets.len() {
            return Err(Error::InvalidInput(format!(
                "{} timestamps for {} targets",
                timestamps.len(),
                targets.len()
            )));
        }
        Self::build(targets, midpoints, Some(timestamps))
    }

    fn build(
        targets: Vec<Vec3<S>>,
        midpoints: Vec<Vec3<S>>,
        timestamps: Option<Vec<S>>,
    ) -> Result<Self> {
        if targets.len() < 2 {
            return Err(Error::TooShort {
                what: "action plan targets",
                needed: 2,
                got: targets.len(),
            });
        }
        if midpoints.len() + 1 != targets.len() {
            return Err(Error::InvalidInput(format!(
                "{} midpoints for {} targets",
                midpoints.len(),
                targets.len()
            )));
        }
        let mut kept_t = vec![targets[0]];
        let mut kept_m = Vec::with_capacity(midpoints.len());
        let mut kept_ts = timestamps.as_ref().map(|ts| vec![ts[0]]);
        for j in 1..targets.len() {
            if (targets[j] - *kept_t.last().unwrap()).normalized().is_none() {
                log::warn!("dropping zero-length link {j} of action plan");
                continue;
            }
            kept_t.push(targets[j]);
            kept_m.push(midpoints[j - 1]);
            if let (Some(k), Some(ts)) = (kept_ts.as_mut(), timestamps.as_ref()) {
                k.push(ts[j]);
            }
        }
        if kept_t.len() < 2 {
            return Err(Error::Degenerate("all action plan targets coincide".into()));
        }
        let mut plan = Self {
            targets: kept_t,
            midpoints: kept_m,
            links: Vec::new(),
            timestamps: None,
        };
        plan.refit()?;
        if let Some(ts) = kept_ts {
            plan = plan.with_timestamps(ts)?;
        }
        Ok(plan)
    }

    /// Plan with prebuilt links; midpoints are taken from the links.
    pub fn from_links(links: Vec<PlanarArc<S>>, timestamps: Option<Vec<S>>) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::TooShort {
                what: "action plan links",
                needed: 1,
                got: 0,
            });
        }
        let mut targets = vec![links[0].start];
        targets.extend(links.iter().map(|l| l.end));
        let midpoints = links.iter().map(PlanarArc::midpoint).collect();
        let plan = Self {
            targets,
            midpoints,
            links,
            timestamps: None,
        };
        match timestamps {
            Some(ts) => plan.with_timestamps(ts),
            None => Ok(plan),
        }
    }

    /// Refits every link from its targets and midpoint.
    pub fn refit(&mut self) -> Result<()> {
        self.links = self
            .targets
            .windows(2)
            .zip(&self.midpoints)
            .map(|(w, m)| PlanarArc::fit(w[0], w[1], *m))
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn with_timestamps(mut self, ts: Vec<S>) -> Result<Self> {
        if ts.len() != self.targets.len() {
            return Err(Error::InvalidInput(format!(
                "{} timestamps for {} targets",
                ts.len(),
                self.targets.len()
            )));
        }
        if ts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "target timestamps must be strictly increasing".into(),
            ));
        }
        self.timestamps = Some(ts);
        Ok(self)
    }

    /// Applies `f` to every target and midpoint, then refits the arcs.
    pub fn map_points(&self, mut f: impl FnMut(Vec3<S>) -> Vec3<S>) -> Result<Self> {
        let mut out = Self {
            targets: self.targets.iter().map(|p| f(*p)).collect(),
            midpoints: self.midpoints.iter().map(|p| f(*p)).collect(),
            links: Vec::new(),
            timestamps: self.timestamps.clone(),
        };
        out.refit()?;
        Ok(out)
    }

    pub fn is_timed(&self) -> bool {
        self.timestamps.is_some()
    }

    pub fn total_length(&self) -> S {
        self.links.iter().map(PlanarArc::length).sum()
    }

    /// Checks the count and arc-through-points invariants.
    pub fn check_invariants(&self, tol: S) -> Result<()> {
        if self.links.len() + 1 != self.targets.len() || self.midpoints.len() != self.links.len() {
            return Err(Error::InvalidInput("plan counts are inconsistent".into()));
        }
        for (j, l) in self.links.iter().enumerate() {
            let scale = S::one().max(l.chord_length());
            let worst = [self.targets[j], self.targets[j + 1], self.midpoints[j]]
                .iter()
                .map(|p| l.distance_to_carrier(*p))
                .fold(S::zero(), S::max);
            if worst > tol * scale {
                return Err(Error::Degenerate(format!(
                    "link {j} misses its defining points by {worst}"
                )));
            }
        }
        Ok(())
    }
}

/// Sinusoidal surface onto which 2D plans are lifted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceConfig {
    pub ax: f64,
    pub ay: f64,
    pub wx: f64,
    pub wy: f64,
    pub phx: f64,
    pub phy: f64,
}

impl SurfaceConfig {
    /// Flat surface (z = 0).
    pub fn flat() -> Self {
        Self {
            ax: 0.0,
            ay: 0.0,
            wx: 0.0,
            wy: 0.0,
            phx: 0.0,
            phy: 0.0,
        }
    }

    /// One spatial period across the canvas, amplitudes 7.5% of its width.
    pub fn for_canvas(canvas: f64) -> Self {
        let w = std::f64::consts::TAU / canvas;
        Self {
            ax: 0.075 * canvas,
            ay: 0.075 * canvas,
            wx: w,
            wy: w,
            phx: 0.0,
            phy: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.ax, self.ay, self.wx, self.wy, self.phx, self.phy];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("surface parameters must be finite".into()));
        }
        if self.ax < 0.0 || self.ay < 0.0 {
            return Err(Error::Config("surface amplitudes must be >= 0".into()));
        }
        Ok(())
    }

    pub fn height<S: Scalar>(&self, x: S, y: S) -> S {
        lit::<S>(self.ax) * (lit::<S>(self.wx) * x + lit(self.phx)).sin()
            + lit::<S>(self.ay) * (lit::<S>(self.wy) * y + lit(self.phy)).sin()
    }
}

/// Lifts 2D points onto the surface; x and y are kept.
pub fn project_to_surface<S: Scalar>(points: &[[S; 2]], cfg: &SurfaceConfig) -> Vec<Vec3<S>> {
    points
        .iter()
        .map(|&[x, y]| Vec3::new(x, y, cfg.height(x, y)))
        .collect()
}

/// Lifts a 2D morphology into an (untimed) action plan.
pub fn lift_morphology<S: Scalar>(m: &Morphology2D<S>, cfg: &SurfaceConfig) -> Result<ActionPlan<S>> {
    ActionPlan::new(
        project_to_surface(&m.targets, cfg),
        project_to_surface(&m.midpoints, cfg),
    )
}

pub const DEFAULT_MEAN_GAP: f64 = 0.1;
pub const DEFAULT_SD_GAP: f64 = 0.005;

/// Rhythmic target times: `ts_0 = 0`, gaps drawn from
/// Normal(mean_gap, sd_gap) and redrawn while not above `mean_gap / 2`.
pub fn cpg_timestamps<S: Scalar>(n: usize, rng: &mut Rng, mean_gap: f64, sd_gap: f64) -> Vec<S> {
    let mut ts = Vec::with_capacity(n);
    let mut t = 0.0f64;
    for j in 0..n {
        if j > 0 {
            let gap = loop {
                let r = mean_gap + sd_gap * rng::standard_normal(rng);
                if r > mean_gap / 2.0 {
                    break r;
                }
            };
            t += gap;
        }
        ts.push(lit(t));
    }
    ts
}

/// Assigns rhythmic timestamps to every target of `plan`.
pub fn assign_timestamps<S: Scalar>(
    plan: &ActionPlan<S>,
    seed: u64,
    mean_gap: f64,
    sd_gap: f64,
) -> Result<ActionPlan<S>> {
    if !(mean_gap > 0.0) || !(sd_gap >= 0.0) {
        return Err(Error::Config("timing gap parameters out of range".into()));
    }
    let mut rng = rng::seeded(seed);
    let ts = cpg_timestamps(plan.targets.len(), &mut rng, mean_gap, sd_gap);
    plan.clone().with_timestamps(ts)
}

/// Uniform draw in `[lo, hi]`.
pub(crate) fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Random unit vector orthogonal to `axis`.
pub(crate) fn random_orthogonal<S: Scalar>(axis: Vec3<S>, rng: &mut Rng) -> Vec3<S> {
    let u = axis.any_orthogonal();
    let w = axis.normalized().unwrap_or(axis).cross(u);
    let psi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    u * lit(psi.cos()) + w * lit(psi.sin())
}

/// Axis-aligned extent of a point set.
pub fn bounding_extent<S: Scalar>(points: &[Vec3<S>]) -> Vec3<S> {
    let mut lo = Vec3::new(S::infinity(), S::infinity(), S::infinity());
    let mut hi = -lo;
    for p in points {
        lo = Vec3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vec3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    if points.is_empty() {
        Vec3::zero()
    } else {
        hi - lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_surface_keeps_plane() {
        let pts = [[1.0, 2.0], [3.0, -4.0]];
        let p = project_to_surface(&pts, &SurfaceConfig::flat());
        assert!(p.iter().all(|p| p.z == 0.0));
        assert_eq!(p[1].x, 3.0);
        assert_eq!(p[1].y, -4.0);
    }

    #[test]
    fn surface_peak_and_origin() {
        let cfg = SurfaceConfig {
            ax: 1.0,
            ay: 0.7,
            wx: 0.5,
            wy: 2.0,
            phx: 0.3,
            phy: 0.9,
        };
        let x = PI / (2.0 * cfg.wx) - cfg.phx / cfg.wx;
        let y = -cfg.phy / cfg.wy;
        let z = project_to_surface(&[[x, y]], &cfg)[0].z;
        assert!((z - 1.0).abs() < 1e-12);
        let z0 = project_to_surface(&[[0.0, 0.0]], &cfg)[0].z;
        assert!((z0 - (cfg.ax * cfg.phx.sin() + cfg.ay * cfg.phy.sin())).abs() < 1e-15);
    }

    #[test]
    fn uniform_gaps_without_noise() {
        let plan = ActionPlan::new(
            (0..5).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect(),
            (0..4).map(|i| Vec3::new(i as f64 + 0.5, 0.3, 0.0)).collect(),
        )
        .unwrap();
        let timed = assign_timestamps(&plan, 1, 0.1, 0.0).unwrap();
        let ts = timed.timestamps.unwrap();
        for (j, t) in ts.iter().enumerate() {
            assert!((t - 0.1 * j as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_targets_are_dropped() {
        let plan = ActionPlan::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(2.0, 1.0, 0.0),
            ],
            vec![Vec3::new(0.5, 0.1, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.5, 0.2, 0.0)],
        )
        .unwrap();
        assert_eq!(plan.targets.len(), 3);
        assert_eq!(plan.links.len(), 2);
        assert_eq!(plan.midpoints[1], Vec3::new(1.5, 0.2, 0.0));
    }

    #[test]
    fn plan_counts_checked() {
        assert!(ActionPlan::new(vec![Vec3::<f64>::zero()], vec![]).is_err());
        assert!(ActionPlan::new(
            vec![Vec3::<f64>::zero(), Vec3::new(1.0, 0.0, 0.0)],
            vec![]
        )
        .is_err());
    }
}
