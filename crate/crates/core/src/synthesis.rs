//! Full synthesis: closed-form lognormal parameters for every link of a
//! timed action plan, and rendering of the overlapped strokes along their
//! arcs.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::model::{uniform_grid, LognormalStroke, SigmaLogSignature, Trajectory3D};
use crate::plan::ActionPlan;
use crate::scalar::{lit, Scalar};

/// Onset lead: `t0 = ts_prev - ONSET_LEAD`.
pub const ONSET_LEAD: f64 = 0.5;

/// `erf(3) ~ 1`: a stroke is considered complete three (scaled) sigmas
/// past its median.
const COMPLETION_Z: f64 = 3.0;

/// How the log-ratio constant of the sigma quadratic is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMode {
    /// `ln((ts_cur - t0) / (mid - t0))`, which keeps the speed peak at the
    /// stroke centre for any duration.
    #[default]
    General,
    /// Constant `ln(3/2)`, identical to `General` for 1 s strokes.
    PaperExact,
}

impl std::str::FromStr for SolverMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "general" => Ok(Self::General),
            "paper-exact" => Ok(Self::PaperExact),
            other => Err(Error::Config(format!("unknown solver mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for SolverMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::General => "general",
            Self::PaperExact => "paper-exact",
        })
    }
}

/// Timing of one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokeTiming<S> {
    pub ts_prev: S,
    pub ts_cur: S,
    pub t0: S,
    pub d: S,
}

impl<S: Scalar> StrokeTiming<S> {
    pub fn new(ts_prev: S, ts_cur: S, d: S) -> Result<Self> {
        if !(ts_cur > ts_prev) {
            return Err(Error::InvalidInput(format!(
                "stroke must end after it starts ({ts_prev} -> {ts_cur})"
            )));
        }
        Ok(Self {
            ts_prev,
            ts_cur,
            t0: ts_prev - lit(ONSET_LEAD),
            d,
        })
    }
}

/// Positive root of `sigma^2 + 3 sqrt(2) sigma - c = 0` with
/// `c = ln((ts_cur - t0) / (mid - t0))`.
pub fn solve_sigma<S: Scalar>(ts_prev: S, ts_cur: S, t0: S) -> Result<S> {
    solve_sigma_with(SolverMode::General, ts_prev, ts_cur, t0)
}

pub fn solve_sigma_with<S: Scalar>(mode: SolverMode, ts_prev: S, ts_cur: S, t0: S) -> Result<S> {
    if !(ts_cur > ts_prev) {
        return Err(Error::Degenerate(format!(
            "zero-duration stroke ({ts_prev} -> {ts_cur})"
        )));
    }
    if !(ts_prev > t0) {
        return Err(Error::InvalidInput(format!(
            "onset {t0} must precede stroke start {ts_prev}"
        )));
    }
    let c = match mode {
        SolverMode::General => {
            let mid = (ts_prev + ts_cur) * lit(0.5);
            ((ts_cur - t0) / (mid - t0)).ln()
        }
        SolverMode::PaperExact => lit::<S>(1.5).ln(),
    };
    let b = lit::<S>(COMPLETION_Z) * S::SQRT_2();
    // 2c / (b + sqrt(b^2 + 4c)) avoids cancellation for small c
    let sigma = lit::<S>(2.0) * c / (b + (b * b + lit::<S>(4.0) * c).sqrt());
    if !(sigma > S::zero()) {
        return Err(Error::Degenerate(format!("no positive sigma for c = {c}")));
    }
    Ok(sigma)
}

/// `mu = ln(ts_cur - t0) - 3 sqrt(2) sigma`.
pub fn solve_mu<S: Scalar>(ts_cur: S, t0: S, sigma: S) -> Result<S> {
    if !(ts_cur > t0) || sigma < S::zero() {
        return Err(Error::InvalidInput(format!(
            "need ts_cur > t0 and sigma >= 0 (ts_cur {ts_cur}, t0 {t0}, sigma {sigma})"
        )));
    }
    Ok((ts_cur - t0).ln() - lit::<S>(COMPLETION_Z) * S::SQRT_2() * sigma)
}

/// Stroke for one timed link with the given amplitude and tangent angles.
pub fn solve_stroke<S: Scalar>(
    mode: SolverMode,
    timing: StrokeTiming<S>,
    angles: (S, S, S, S),
) -> Result<LognormalStroke<S>> {
    let sigma = solve_sigma_with(mode, timing.ts_prev, timing.ts_cur, timing.t0)?;
    let mu = solve_mu(timing.ts_cur, timing.t0, sigma)?;
    let (ts, te, ps, pe) = angles;
    LognormalStroke::new(timing.d, timing.t0, mu, sigma * sigma, ts, te, ps, pe)
}

/// Converts a timed plan into a signature: one stroke per link with
/// `D` = arc length, closed-form `(t0, mu, sigma2)` and the arc's tangent
/// angles at both ends.
pub fn plan_to_signature<S: Scalar>(plan: &ActionPlan<S>) -> Result<SigmaLogSignature<S>> {
    plan_to_signature_with(plan, SolverMode::General)
}

pub fn plan_to_signature_with<S: Scalar>(
    plan: &ActionPlan<S>,
    mode: SolverMode,
) -> Result<SigmaLogSignature<S>> {
    let ts = plan
        .timestamps
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("action plan has no timestamps".into()))?;
    let strokes = plan
        .links
        .iter()
        .enumerate()
        .map(|(j, link)| {
            let timing = StrokeTiming::new(ts[j], ts[j + 1], link.length())?;
            solve_stroke(mode, timing, link.tangent_angles())
        })
        .collect::<Result<Vec<_>>>()?;
    SigmaLogSignature::new(plan.clone(), strokes)
}

/// Rendered trajectory with its analytic speed profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered<S> {
    pub trajectory: Trajectory3D<S>,
    pub speed: Vec<S>,
}

/// Position and velocity of the superposed strokes at time `t`: each stroke
/// advances along its own arc by `D * W(t)`, offsets summed from the first
/// target.
pub fn state_at<S: Scalar>(sig: &SigmaLogSignature<S>, t: S) -> (Vec3<S>, Vec3<S>) {
    let mut p = sig.plan.targets[0];
    let mut v = Vec3::zero();
    for (stroke, arc) in sig.strokes.iter().zip(&sig.plan.links) {
        let w = stroke.area_fraction(t);
        if w == S::zero() {
            continue;
        }
        let s = stroke.d * w;
        p += arc.point_at(s) - arc.start;
        v += arc.tangent_at(s) * stroke.speed(t);
    }
    (p, v)
}

/// Samples the signature at `fm` from `t = 0` until every stroke tail has
/// decayed.
pub fn render_full_signature<S: Scalar>(sig: &SigmaLogSignature<S>, fm: S) -> Result<Rendered<S>> {
    if !(fm > S::zero()) {
        return Err(Error::ParameterDomain(format!("sampling rate must be > 0, got {fm}")));
    }
    if sig.strokes.is_empty() {
        return Err(Error::InvalidInput("signature has no strokes".into()));
    }
    let mut grid = uniform_grid(sig.end_time(), fm);
    if grid.len() < 2 {
        grid.push(S::one() / fm);
    }
    let (positions, speed): (Vec<_>, Vec<_>) = grid
        .iter()
        .map(|&t| {
            let (p, v) = state_at(sig, t);
            (p, v.norm())
        })
        .unzip();
    Ok(Rendered {
        trajectory: Trajectory3D::timed(grid, positions, Some(fm))?,
        speed,
    })
}
