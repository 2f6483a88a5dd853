//! Duplication: new specimens of an existing signature by perturbing its
//! lognormal parameters, editing and warping its target points, moving it
//! rigidly and rendering it again.

use crate::error::{Error, Result};
use crate::geom::{centroid, Vec3};
use crate::model::{LognormalStroke, SigmaLogSignature};
use crate::plan::{bounding_extent, ActionPlan, PlanarArc};
use crate::rng::{self, derive_seed, standard_normal, Rng};
use crate::scalar::{lit, Scalar};
use crate::synthesis::{render_full_signature, solve_stroke, Rendered, SolverMode, StrokeTiming};
use rand::Rng as _;

pub const DEFAULT_M_GENUINE: f64 = 0.15;
pub const DEFAULT_M_FORGERY: f64 = 0.5;

/// Smallest `sigma2` a perturbation may produce (values already below it are
/// left alone).
const SIGMA2_FLOOR: f64 = 1e-4;

const STAGE_PERTURB: u64 = 1;
const STAGE_EDIT: u64 = 2;
const STAGE_AFFINE: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DuplicateKind {
    Genuine,
    Forgery,
}

/// Amplitude convention of the sinusoidal warp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistortionMode {
    /// Coordinates modulated by at most `m / 50` of themselves.
    #[default]
    Relative,
    /// Amplitude `m / 50 * L` with `L` the extent on that axis.
    PaperLiteral,
}

impl std::str::FromStr for DistortionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "relative" => Ok(Self::Relative),
            "paper-literal" => Ok(Self::PaperLiteral),
            o => Err(Error::Config(format!("unknown distortion mode '{o}'"))),
        }
    }
}

impl std::fmt::Display for DistortionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Relative => "relative",
            Self::PaperLiteral => "paper-literal",
        })
    }
}

impl std::str::FromStr for DuplicateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "genuine" => Ok(Self::Genuine),
            "forgery" => Ok(Self::Forgery),
            o => Err(Error::Config(format!("unknown duplicate kind '{o}'"))),
        }
    }
}

impl std::fmt::Display for DuplicateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Genuine => "genuine",
            Self::Forgery => "forgery",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuplicationConfig {
    /// Deformation level in `[0, 1)`.
    pub m: f64,
    pub kind: DuplicateKind,
    /// Upper bound of the fraction of target points removed or inserted.
    pub insert_remove_max_fraction: f64,
    pub affine_enabled: bool,
    /// Standard deviation of the rotation angle about each axis.
    pub rotation_scale: f64,
    /// Displacement factor drawn uniformly from `(0, displacement_max)`.
    pub displacement_max: f64,
    pub distortion: DistortionMode,
    pub seed: u64,
}

impl DuplicationConfig {
    pub fn genuine(seed: u64) -> Self {
        Self::with_m(DuplicateKind::Genuine, DEFAULT_M_GENUINE, seed)
    }

    pub fn forgery(seed: u64) -> Self {
        Self::with_m(DuplicateKind::Forgery, DEFAULT_M_FORGERY, seed)
    }

    pub fn with_m(kind: DuplicateKind, m: f64, seed: u64) -> Self {
        Self {
            m,
            kind,
            insert_remove_max_fraction: 0.05,
            affine_enabled: true,
            rotation_scale: std::f64::consts::PI / 100.0,
            displacement_max: 0.02,
            distortion: DistortionMode::Relative,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.m) {
            return Err(Error::Config(format!("m must lie in [0, 1), got {}", self.m)));
        }
        if !(0.0..=0.05).contains(&self.insert_remove_max_fraction) {
            return Err(Error::Config(format!(
                "insert/remove fraction must lie in [0, 0.05], got {}",
                self.insert_remove_max_fraction
            )));
        }
        if !(self.rotation_scale >= 0.0) || !(self.displacement_max >= 0.0) {
            return Err(Error::Config("affine scales must be >= 0".into()));
        }
        Ok(())
    }

    fn stage_rng(&self, stage: u64) -> Rng {
        rng::seeded(derive_seed(self.seed, &[stage]))
    }
}

/// Perturbed timing/shape of one stroke; angle changes are kept as offsets
/// so they can be applied to refitted arcs.
#[derive(Debug, Clone, Copy, PartialEq)]
struct StrokeDelta<S> {
    t0: S,
    mu: S,
    sigma2: S,
    angles: [S; 4],
}

fn draw_deltas<S: Scalar>(sig: &SigmaLogSignature<S>, cfg: &DuplicationConfig) -> Vec<StrokeDelta<S>> {
    let mut r = cfg.stage_rng(STAGE_PERTURB);
    let m = cfg.m;
    sig.strokes
        .iter()
        .map(|s| {
            let mut scale = |c: f64| lit::<S>(c * m * standard_normal(&mut r));
            let (g_mu, g_s2, g_t0) = (scale(0.01), scale(0.01), scale(0.001));
            let g_a: [S; 4] = [scale(0.001), scale(0.001), scale(0.001), scale(0.001)];
            let orig = [s.theta_s, s.theta_e, s.phi_s, s.phi_e];
            let floor = lit::<S>(SIGMA2_FLOOR).min(s.sigma2);
            StrokeDelta {
                t0: s.t0 + s.t0 * g_t0,
                mu: s.mu + s.mu * g_mu,
                sigma2: (s.sigma2 + s.sigma2 * g_s2).max(floor),
                angles: [0, 1, 2, 3].map(|k| orig[k] * g_a[k]),
            }
        })
        .collect()
}

/// Onsets made nondecreasing by raising any onset that precedes its
/// predecessor.
fn clamp_onsets<S: Scalar>(strokes: &mut [LognormalStroke<S>]) {
    for j in 1..strokes.len() {
        if strokes[j].t0 < strokes[j - 1].t0 {
            strokes[j].t0 = strokes[j - 1].t0;
        }
    }
}

/// Multiplies `mu`, `sigma2`, `t0` and the four angles of every stroke by
/// `1 + c m g` with independent standard normal `g` (`c = 0.01` for `mu`
/// and `sigma2`, `0.001` otherwise).
pub fn perturb_parameters<S: Scalar>(
    sig: &SigmaLogSignature<S>,
    cfg: &DuplicationConfig,
) -> Result<SigmaLogSignature<S>> {
    cfg.validate()?;
    let deltas = draw_deltas(sig, cfg);
    let mut strokes: Vec<LognormalStroke<S>> = sig
        .strokes
        .iter()
        .zip(&deltas)
        .map(|(s, d)| LognormalStroke {
            t0: d.t0,
            mu: d.mu,
            sigma2: d.sigma2,
            theta_s: s.theta_s + d.angles[0],
            theta_e: s.theta_e + d.angles[1],
            phi_s: s.phi_s + d.angles[2],
            phi_e: s.phi_e + d.angles[3],
            ..*s
        })
        .collect();
    clamp_onsets(&mut strokes);
    SigmaLogSignature::new(sig.plan.clone(), strokes)
}

/// Edited plan with, per link, the index of the original link it still is
/// (`None` for merged or split links).
#[derive(Debug, Clone, PartialEq)]
pub struct EditedPlan<S> {
    pub plan: ActionPlan<S>,
    pub origin: Vec<Option<usize>>,
}

/// Largest number of edits of each kind for `n` targets.
pub fn edit_bounds(n: usize, fraction: f64, kind: DuplicateKind) -> (usize, (usize, usize)) {
    let k = (fraction * n as f64 + 1e-12).floor() as usize;
    let insert = match kind {
        DuplicateKind::Genuine => (0, k),
        DuplicateKind::Forgery => (1, k + 1),
    };
    (k, insert)
}

/// Removes the targets closest to a neighbour (never an endpoint) and inserts
/// new ones on random links within 5% of their length from an end. Merged
/// links pass through the removed target; split links keep their arc.
/// Timestamps of inserted targets are interpolated along the link.
pub fn edit_target_points<S: Scalar>(plan: &ActionPlan<S>, cfg: &DuplicationConfig) -> Result<ActionPlan<S>> {
    cfg.validate()?;
    Ok(edit_with_origin(plan, cfg)?.plan)
}

pub fn edit_with_origin<S: Scalar>(plan: &ActionPlan<S>, cfg: &DuplicationConfig) -> Result<EditedPlan<S>> {
    let n = plan.targets.len();
    let mut links = plan.links.clone();
    let mut ts = plan.timestamps.clone();
    let mut origin: Vec<Option<usize>> = (0..links.len()).map(Some).collect();
    if n < 3 {
        return Ok(EditedPlan { plan: plan.clone(), origin });
    }
    let mut r = cfg.stage_rng(STAGE_EDIT);
    let (max_remove, (ins_lo, ins_hi)) = edit_bounds(n, cfg.insert_remove_max_fraction, cfg.kind);
    let removals = r.gen_range(0..=max_remove);
    let insertions = r.gen_range(ins_lo..=ins_hi);

    for _ in 0..removals {
        if links.len() < 2 {
            break;
        }
        // interior target j sits between links j-1 and j
        let mut order: Vec<(S, usize)> = (1..links.len())
            .map(|j| {
                let p = links[j].start;
                (links[j - 1].start.distance(p).min(p.distance(links[j].end)), j)
            })
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        for (_, j) in order {
            let Ok(merged) = PlanarArc::fit(links[j - 1].start, links[j].end, links[j].start) else {
                continue;
            };
            links.splice(j - 1..=j, [merged]);
            origin.splice(j - 1..=j, [None]);
            if let Some(t) = ts.as_mut() {
                t.remove(j);
            }
            break;
        }
    }

    for _ in 0..insertions {
        let j = r.gen_range(0..links.len());
        let f: f64 = 0.05 * (1.0 - r.gen::<f64>());
        let from_start: bool = r.gen();
        let arc = links[j];
        let len = arc.length();
        let s = len * lit(if from_start { f } else { 1.0 - f });
        let p = arc.point_at(s);
        let half = lit::<S>(0.5);
        let (Ok(a), Ok(b)) = (
            PlanarArc::fit(arc.start, p, arc.point_at(s * half)),
            PlanarArc::fit(p, arc.end, arc.point_at((s + len) * half)),
        ) else {
            continue;
        };
        links.splice(j..=j, [a, b]);
        origin.splice(j..=j, [None, None]);
        if let Some(t) = ts.as_mut() {
            let tp = t[j] + (t[j + 1] - t[j]) * (s / len);
            t.insert(j + 1, tp);
        }
    }
    let plan = if ts.is_none() && links == plan.links {
        plan.clone()
    } else {
        rebuild(links, ts, plan)?
    };
    Ok(EditedPlan { plan, origin })
}

/// Plan from links, keeping the original midpoints where a link is unchanged.
fn rebuild<S: Scalar>(links: Vec<PlanarArc<S>>, ts: Option<Vec<S>>, orig: &ActionPlan<S>) -> Result<ActionPlan<S>> {
    let mut targets = vec![links[0].start];
    targets.extend(links.iter().map(|l| l.end));
    let midpoints = links
        .iter()
        .map(|l| match orig.links.iter().position(|o| o == l) {
            Some(k) => orig.midpoints[k],
            None => l.midpoint(),
        })
        .collect();
    let mut plan = ActionPlan {
        targets,
        midpoints,
        links,
        timestamps: None,
    };
    if let Some(ts) = ts {
        plan = plan.with_timestamps(ts)?;
    }
    Ok(plan)
}

/// Warps every target and midpoint per axis:
/// `p_a (1 + A sin(2 pi P p_a / L_a))` with `P = 3m` and `A = m/50` (or
/// `m/50 L_a` in paper-literal mode); `L_a` is the target extent on the axis
/// and flat axes are left alone.
pub fn sinusoidal_distortion<S: Scalar>(plan: &ActionPlan<S>, m: f64, mode: DistortionMode) -> Result<ActionPlan<S>> {
    if m == 0.0 {
        return Ok(plan.clone());
    }
    let extent = bounding_extent(&plan.targets);
    let period = lit::<S>(3.0 * m);
    let tau = S::TAU();
    let warp = |p: Vec3<S>| {
        let mut q = p;
        for a in 0..3 {
            let l = extent.axis(a);
            if !(l > lit(1e-9)) {
                continue;
            }
            let amp = match mode {
                DistortionMode::Relative => lit::<S>(m / 50.0),
                DistortionMode::PaperLiteral => lit::<S>(m / 50.0) * l,
            };
            let x = p.axis(a);
            q = q.with_axis(a, x * (S::one() + amp * (tau * period * x / l).sin()));
        }
        q
    };
    plan.map_points(warp)
}

/// Rotation `R = Rx Ry Rz` applied to row vectors.
fn rotation<S: Scalar>(ax: S, ay: S, az: S) -> [[S; 3]; 3] {
    let (o, i) = (S::zero(), S::one());
    let (sx, cx) = ax.sin_cos();
    let (sy, cy) = ay.sin_cos();
    let (sz, cz) = az.sin_cos();
    let rx = [[i, o, o], [o, cx, -sx], [o, sx, cx]];
    let ry = [[cy, o, sy], [o, i, o], [-sy, o, cy]];
    let rz = [[cz, -sz, o], [sz, cz, o], [o, o, i]];
    matmul(matmul(rx, ry), rz)
}

fn matmul<S: Scalar>(a: [[S; 3]; 3], b: [[S; 3]; 3]) -> [[S; 3]; 3] {
    let mut out = [[S::zero(); 3]; 3];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

fn row_times<S: Scalar>(v: Vec3<S>, m: &[[S; 3]; 3]) -> Vec3<S> {
    Vec3::new(
        v.x * m[0][0] + v.y * m[1][0] + v.z * m[2][0],
        v.x * m[0][1] + v.y * m[1][1] + v.z * m[2][1],
        v.x * m[0][2] + v.y * m[1][2] + v.z * m[2][2],
    )
}

/// Draws the rotation angles (about x, y, z) and displacement factor.
fn draw_affine(cfg: &DuplicationConfig) -> ([f64; 3], f64) {
    let mut r = cfg.stage_rng(STAGE_AFFINE);
    let angles = [0; 3].map(|_| cfg.rotation_scale * standard_normal(&mut r));
    let d = if cfg.displacement_max > 0.0 {
        r.gen_range(0.0..cfg.displacement_max)
    } else {
        0.0
    };
    (angles, d)
}

/// Rotates the target points about their centroid by small random angles
/// about the three axes, then shifts them by `r` times their mean position.
pub fn affine_transform<S: Scalar>(plan: &ActionPlan<S>, cfg: &DuplicationConfig) -> Result<ActionPlan<S>> {
    if !cfg.affine_enabled {
        return Ok(plan.clone());
    }
    let (angles, d) = draw_affine(cfg);
    let rot = rotation::<S>(lit(angles[0]), lit(angles[1]), lit(angles[2]));
    let c = centroid(&plan.targets);
    let rotated = plan.map_points(|p| row_times(p - c, &rot) + c)?;
    let shift = centroid(&rotated.targets) * lit(d);
    rotated.map_points(|p| p + shift)
}

/// A duplicate and its rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct Duplicate<S> {
    pub signature: SigmaLogSignature<S>,
    pub rendered: Rendered<S>,
}

/// Full duplication pipeline, rendered at `fm`. Target editing takes place
/// only when `m > 0`, so `m = 0` with the affine stage disabled reproduces
/// the source exactly.
pub fn duplicate_signature<S: Scalar>(
    sig: &SigmaLogSignature<S>,
    cfg: &DuplicationConfig,
    fm: S,
) -> Result<Duplicate<S>> {
    let signature = duplicate_parameters(sig, cfg)?;
    let rendered = render_full_signature(&signature, fm)?;
    Ok(Duplicate { signature, rendered })
}

/// The duplicated signature without rendering.
pub fn duplicate_parameters<S: Scalar>(sig: &SigmaLogSignature<S>, cfg: &DuplicationConfig) -> Result<SigmaLogSignature<S>> {
    cfg.validate()?;
    let deltas = draw_deltas(sig, cfg);
    let edited = if cfg.m > 0.0 {
        edit_with_origin(&sig.plan, cfg)?
    } else {
        EditedPlan {
            plan: sig.plan.clone(),
            origin: (0..sig.len()).map(Some).collect(),
        }
    };
    let warped = sinusoidal_distortion(&edited.plan, cfg.m, cfg.distortion)?;
    let moved = affine_transform(&warped, cfg)?;
    let ts = moved.timestamps.clone();

    let mut links = Vec::with_capacity(moved.links.len());
    let mut strokes = Vec::with_capacity(moved.links.len());
    for (k, arc) in moved.links.iter().enumerate() {
        match edited.origin[k] {
            Some(j) => {
                let src = &sig.strokes[j];
                let delta = &deltas[j];
                let unchanged = *arc == sig.plan.links[j];
                let base = if unchanged {
                    [src.theta_s, src.theta_e, src.phi_s, src.phi_e]
                } else {
                    let (a, b, c, d) = arc.tangent_angles();
                    [a, b, c, d]
                };
                let ang = [0, 1, 2, 3].map(|i| base[i] + delta.angles[i]);
                let turned = delta.angles.iter().any(|a| *a != S::zero());
                let arc = if turned {
                    PlanarArc::from_tangents(
                        arc.start,
                        arc.end,
                        Vec3::from_spherical(ang[0], ang[2]),
                        Vec3::from_spherical(ang[1], ang[3]),
                    )?
                } else {
                    *arc
                };
                let d = if unchanged && !turned { src.d } else { arc.length() };
                strokes.push(LognormalStroke {
                    d,
                    t0: delta.t0,
                    mu: delta.mu,
                    sigma2: delta.sigma2,
                    theta_s: ang[0],
                    theta_e: ang[1],
                    phi_s: ang[2],
                    phi_e: ang[3],
                });
                links.push(arc);
            }
            None => {
                let ts = ts
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("edited links need timestamps".into()))?;
                let timing = StrokeTiming::new(ts[k], ts[k + 1], arc.length())?;
                strokes.push(solve_stroke(SolverMode::General, timing, arc.tangent_angles())?);
                links.push(*arc);
            }
        }
    }
    clamp_onsets(&mut strokes);
    let plan = if links == moved.links {
        moved
    } else {
        let mut p = ActionPlan::from_links(links, None)?;
        p.timestamps = ts;
        p
    };
    SigmaLogSignature::new(plan, strokes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{assign_timestamps, ActionPlan};
    use crate::synthesis::plan_to_signature;

    fn zigzag(n: usize) -> SigmaLogSignature<f64> {
        let targets: Vec<_> = (0..n)
            .map(|i| Vec3::new(10.0 + 12.0 * i as f64, if i % 2 == 0 { 5.0 } else { 30.0 }, 2.0 + 0.5 * i as f64))
            .collect();
        let mids = targets
            .windows(2)
            .map(|w| w[0].lerp(w[1], 0.5) + Vec3::new(2.0, 0.0, 0.3))
            .collect();
        let plan = assign_timestamps(&ActionPlan::new(targets, mids).unwrap(), 3, 0.1, 0.005).unwrap();
        plan_to_signature(&plan).unwrap()
    }

    #[test]
    fn zero_m_perturbation_is_identity() {
        let sig = zigzag(8);
        let out = perturb_parameters(&sig, &DuplicationConfig::with_m(DuplicateKind::Genuine, 0.0, 9)).unwrap();
        assert_eq!(out, sig);
    }

    #[test]
    fn mu_perturbation_spread() {
        let sig = zigzag(3);
        let cfg = |seed| DuplicationConfig::with_m(DuplicateKind::Genuine, 0.5, seed);
        let rel: Vec<f64> = (0..10_000)
            .map(|seed| {
                let out = perturb_parameters(&sig, &cfg(seed)).unwrap();
                out.strokes[0].mu / sig.strokes[0].mu - 1.0
            })
            .collect();
        let n = rel.len() as f64;
        let mean = rel.iter().sum::<f64>() / n;
        let sd = (rel.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 0.1 * 0.005);
        assert!((sd - 0.005).abs() < 0.1 * 0.005, "sd {sd}");
    }

    #[test]
    fn onsets_stay_ordered() {
        let sig = zigzag(12);
        for seed in 0..200 {
            let out = perturb_parameters(&sig, &DuplicationConfig::with_m(DuplicateKind::Forgery, 0.5, seed)).unwrap();
            assert!(out.strokes.windows(2).all(|w| w[1].t0 >= w[0].t0));
        }
    }

    #[test]
    fn edit_bounds_arithmetic() {
        assert_eq!(edit_bounds(3, 0.05, DuplicateKind::Genuine), (0, (0, 0)));
        assert_eq!(edit_bounds(40, 0.05, DuplicateKind::Genuine), (2, (0, 2)));
        assert_eq!(edit_bounds(40, 0.05, DuplicateKind::Forgery), (2, (1, 3)));
    }

    #[test]
    fn three_targets_unchanged_for_genuine() {
        let sig = zigzag(3);
        for seed in 0..20 {
            let cfg = DuplicationConfig::with_m(DuplicateKind::Genuine, 0.3, seed);
            assert_eq!(edit_target_points(&sig.plan, &cfg).unwrap(), sig.plan);
        }
    }

    #[test]
    fn edits_keep_endpoints_and_counts() {
        let sig = zigzag(40);
        let n = sig.plan.targets.len();
        for seed in 0..50 {
            for kind in [DuplicateKind::Genuine, DuplicateKind::Forgery] {
                let cfg = DuplicationConfig::with_m(kind, 0.3, seed);
                let e = edit_with_origin(&sig.plan, &cfg).unwrap();
                let p = &e.plan;
                assert_eq!(p.targets[0], sig.plan.targets[0]);
                assert_eq!(p.targets.last(), sig.plan.targets.last());
                let diff = p.targets.len() as i64 - n as i64;
                let hi = if kind == DuplicateKind::Forgery { 3 } else { 2 };
                assert!((-2..=hi).contains(&diff), "diff {diff}");
                assert_eq!(e.origin.len(), p.links.len());
                p.check_invariants(1e-6).unwrap();
                assert!(p.timestamps.as_ref().unwrap().windows(2).all(|w| w[1] > w[0]));
            }
        }
    }

    #[test]
    fn distortion_peak_and_bound() {
        let targets: Vec<Vec3<f64>> = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(100.0, 0.0, 0.0)];
        let mids = vec![Vec3::new(50.0, 10.0, 0.0)];
        let plan = ActionPlan::new(targets, mids).unwrap();
        let m = 0.5;
        // x = L / (4 P) puts the sine at its peak
        let x = 100.0 / (4.0 * 3.0 * m);
        let probe = ActionPlan::new(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(x, 0.0, 0.0), Vec3::new(100.0, 0.0, 0.0)],
            vec![Vec3::new(x / 2.0, 1.0, 0.0), Vec3::new(50.0, 1.0, 0.0)],
        )
        .unwrap();
        let out = sinusoidal_distortion(&probe, m, DistortionMode::Relative).unwrap();
        assert!((out.targets[1].x - x * (1.0 + m / 50.0)).abs() < 1e-9);
        let out = sinusoidal_distortion(&plan, m, DistortionMode::Relative).unwrap();
        for (a, b) in plan.targets.iter().zip(&out.targets).chain(plan.midpoints.iter().zip(&out.midpoints)) {
            for k in 0..3 {
                assert!((b.axis(k) - a.axis(k)).abs() <= m / 50.0 * a.axis(k).abs() + 1e-12);
            }
        }
        assert_eq!(sinusoidal_distortion(&plan, 0.0, DistortionMode::Relative).unwrap(), plan);
    }

    #[test]
    fn affine_isometry_and_disable() {
        let sig = zigzag(10);
        let mut cfg = DuplicationConfig::genuine(4);
        cfg.displacement_max = 0.0;
        let out = affine_transform(&sig.plan, &cfg).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let a = sig.plan.targets[i].distance(sig.plan.targets[j]);
                let b = out.targets[i].distance(out.targets[j]);
                assert!((a - b).abs() < 1e-9);
            }
        }
        cfg.affine_enabled = false;
        assert_eq!(affine_transform(&sig.plan, &cfg).unwrap(), sig.plan);
    }

    #[test]
    fn rotation_angles_bounded() {
        let mut hits = 0;
        for seed in 0..20_000u64 {
            let (a, _) = draw_affine(&DuplicationConfig::genuine(seed));
            hits += a.iter().filter(|x| x.abs() >= 4.0 * std::f64::consts::PI / 100.0).count();
        }
        assert!(hits as f64 / 60_000.0 < 1e-3);
    }

    #[test]
    fn rotation_matrix_is_orthonormal() {
        let r = rotation(0.3f64, -0.2, 0.9);
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
                assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_identity() {
        let sig = zigzag(25);
        let mut cfg = DuplicationConfig::with_m(DuplicateKind::Forgery, 0.0, 17);
        cfg.affine_enabled = false;
        let dup = duplicate_signature(&sig, &cfg, 100.0).unwrap();
        assert_eq!(dup.signature, sig);
        assert_eq!(dup.rendered, render_full_signature(&sig, 100.0).unwrap());
    }

    #[test]
    fn duplicates_are_valid_and_deterministic() {
        let sig = zigzag(30);
        for seed in 0..30 {
            for cfg in [DuplicationConfig::genuine(seed), DuplicationConfig::forgery(seed)] {
                let a = duplicate_parameters(&sig, &cfg).unwrap();
                let b = duplicate_parameters(&sig, &cfg).unwrap();
                assert_eq!(a, b);
                assert_eq!(a.len(), a.plan.links.len());
                assert!(a.strokes.iter().all(|s| s.sigma2 > 0.0 && s.d > 0.0));
                a.plan.check_invariants(1e-6).unwrap();
            }
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let sig = zigzag(4);
        let mut cfg = DuplicationConfig::genuine(1);
        cfg.m = 1.0;
        assert!(duplicate_parameters(&sig, &cfg).is_err());
        cfg.m = 0.2;
        cfg.insert_remove_max_fraction = 0.2;
        assert!(duplicate_parameters(&sig, &cfg).is_err());
    }
}
