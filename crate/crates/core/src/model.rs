//! Sigma-Lognormal primitives: the unit lognormal speed profile, per-stroke
//! vectorial velocity, reconstruction of velocity and trajectory from a set of
//! strokes, and the SNR quality metrics comparing an observed movement with
//! its reconstruction.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::plan::ActionPlan;
use crate::scalar::{from_usize, lit, Scalar};

/// SNR values are clamped to this ceiling when the residual vanishes.
pub const SNR_CAP_DB: f64 = 100.0;

/// Width of the lognormal tail (in units of sigma, log-time) kept when a
/// time grid has to cover a whole stroke.
pub const TAIL_SIGMAS: f64 = 5.0;

/// Unit-area lognormal speed profile evaluated at `t`.
///
/// Exactly zero for `t <= t0`.
pub fn unit_lognormal<S: Scalar>(t: S, t0: S, mu: S, sigma2: S) -> Result<S> {
    check_sigma2(sigma2)?;
    Ok(unit_lognormal_unchecked(t, t0, mu, sigma2))
}

#[inline]
pub(crate) fn unit_lognormal_unchecked<S: Scalar>(t: S, t0: S, mu: S, sigma2: S) -> S {
    let dt = t - t0;
    if dt <= S::zero() {
        return S::zero();
    }
    let z = dt.ln() - mu;
    let sigma = sigma2.sqrt();
    (-(z * z) / (lit::<S>(2.0) * sigma2)).exp() / (sigma * S::TAU().sqrt() * dt)
}

/// Fraction of the unit lognormal's area elapsed by time `t` (its CDF).
pub fn lognormal_area<S: Scalar>(t: S, t0: S, mu: S, sigma2: S) -> Result<S> {
    check_sigma2(sigma2)?;
    Ok(lognormal_area_unchecked(t, t0, mu, sigma2))
}

#[inline]
pub(crate) fn lognormal_area_unchecked<S: Scalar>(t: S, t0: S, mu: S, sigma2: S) -> S {
    let dt = t - t0;
    if dt <= S::zero() {
        return S::zero();
    }
    let arg = (dt.ln() - mu) / (S::SQRT_2() * sigma2.sqrt());
    lit::<S>(0.5) * (S::one() + arg.erf())
}

fn check_sigma2<S: Scalar>(sigma2: S) -> Result<()> {
    if sigma2 > S::zero() && sigma2.is_finite() {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!("sigma2 must be > 0, got {sigma2}")))
    }
}

/// One stroke of the Sigma-Lognormal model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LognormalStroke<S> {
    /// Amplitude (path length travelled by the stroke).
    pub d: S,
    /// Onset time in seconds.
    pub t0: S,
    /// Log-time delay.
    pub mu: S,
    /// Log response time.
    pub sigma2: S,
    pub theta_s: S,
    pub theta_e: S,
    pub phi_s: S,
    pub phi_e: S,
}

impl<S: Scalar> LognormalStroke<S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        d: S,
        t0: S,
        mu: S,
        sigma2: S,
        theta_s: S,
        theta_e: S,
        phi_s: S,
        phi_e: S,
    ) -> Result<Self> {
        let s = Self {
            d,
            t0,
            mu,
            sigma2,
            theta_s,
            theta_e,
            phi_s,
            phi_e,
        };
        s.validate()?;
        Ok(s)
    }

    /// Straight stroke with a constant direction.
    pub fn straight(d: S, t0: S, mu: S, sigma2: S, theta: S, phi: S) -> Result<Self> {
        Self::new(d, t0, mu, sigma2, theta, theta, phi, phi)
    }

    pub fn validate(&self) -> Result<()> {
        check_sigma2(self.sigma2)?;
        if !(self.d > S::zero() && self.d.is_finite()) {
            return Err(Error::ParameterDomain(format!("D must be > 0, got {}", self.d)));
        }
        let finite = [
            self.t0,
            self.mu,
            self.theta_s,
            self.theta_e,
            self.phi_s,
            self.phi_e,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::ParameterDomain("non-finite stroke parameter".into()));
        }
        Ok(())
    }

    pub fn sigma(&self) -> S {
        self.sigma2.sqrt()
    }

    /// Unit lognormal of this stroke at `t`.
    pub fn profile(&self, t: S) -> S {
        unit_lognormal_unchecked(t, self.t0, self.mu, self.sigma2)
    }

    /// Fraction of the stroke completed by `t`.
    pub fn area_fraction(&self, t: S) -> S {
        lognormal_area_unchecked(t, self.t0, self.mu, self.sigma2)
    }

    /// Tangential speed `D * profile(t)`.
    pub fn speed(&self, t: S) -> S {
        self.d * self.profile(t)
    }

    /// Time of the speed peak.
    pub fn peak_time(&self) -> S {
        self.t0 + (self.mu - self.sigma2).exp()
    }

    /// Time after which the remaining tail is negligible.
    pub fn end_time(&self) -> S {
        self.t0 + (self.mu + lit::<S>(TAIL_SIGMAS) * self.sigma()).exp()
    }

    /// Running direction angles `(theta, phi)` at time `t`.
    pub fn angles_at(&self, t: S) -> (S, S) {
        let w = self.area_fraction(t);
        (
            self.theta_s + (self.theta_e - self.theta_s) * w,
            self.phi_s + (self.phi_e - self.phi_s) * w,
        )
    }
}

/// Velocity vector contributed by one stroke at time `t`.
pub fn stroke_velocity_vector<S: Scalar>(t: S, stroke: &LognormalStroke<S>) -> Vec3<S> {
    let lambda = stroke.profile(t);
    if lambda == S::zero() {
        return Vec3::zero();
    }
    let (theta, phi) = stroke.angles_at(t);
    Vec3::from_spherical(theta, phi) * (stroke.d * lambda)
}

/// Ordered 3D movement, optionally timestamped.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory3D<S> {
    positions: Vec<Vec3<S>>,
    times: Option<Vec<S>>,
    sampling_rate: Option<S>,
}

impl<S: Scalar> Trajectory3D<S> {
    /// Timestamped trajectory. Times must be strictly increasing.
    pub fn timed(times: Vec<S>, positions: Vec<Vec3<S>>, sampling_rate: Option<S>) -> Result<Self> {
        if times.len() != positions.len() {
            return Err(Error::InvalidInput(format!(
                "{} timestamps for {} positions",
                times.len(),
                positions.len()
            )));
        }
        if positions.is_empty() {
            return Err(Error::TooShort {
                what: "trajectory",
                needed: 1,
                got: 0,
            });
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!(
                "timestamps not strictly increasing at sample {}",
                i + 1
            )));
        }
        if !positions.iter().all(|p| p.is_finite()) || !times.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidInput("non-finite trajectory sample".into()));
        }
        Ok(Self {
            positions,
            times: Some(times),
            sampling_rate,
        })
    }

    /// Uniformly sampled trajectory starting at `t_start`.
    pub fn sampled(t_start: S, sampling_rate: S, positions: Vec<Vec3<S>>) -> Result<Self> {
        let times = (0..positions.len())
            .map(|k| t_start + from_usize::<S>(k) / sampling_rate)
            .collect();
        Self::timed(times, positions, Some(sampling_rate))
    }

    /// Spatial-only trajectory (no usable timing).
    pub fn bare(positions: Vec<Vec3<S>>) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::TooShort {
                what: "trajectory",
                needed: 2,
                got: positions.len(),
            });
        }
        if !positions.iter().all(|p| p.is_finite()) {
            return Err(Error::InvalidInput("non-finite trajectory sample".into()));
        }
        Ok(Self {
            positions,
            times: None,
            sampling_rate: None,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vec3<S>] {
        &self.positions
    }

    pub fn times(&self) -> Option<&[S]> {
        self.times.as_deref()
    }

    pub fn sampling_rate(&self) -> Option<S> {
        self.sampling_rate
    }

    /// Drops the timing, keeping only the spatial path.
    pub fn strip_timing(&self) -> Result<Self> {
        Self::bare(self.positions.clone())
    }

    /// Polyline length.
    pub fn path_length(&self) -> S {
        self.positions
            .windows(2)
            .map(|w| w[0].distance(w[1]))
            .sum()
    }

    pub fn duration(&self) -> Option<S> {
        self.times
            .as_ref()
            .map(|t| *t.last().unwrap() - *t.first().unwrap())
    }

    /// Same trajectory with all timestamps shifted by `dt`.
    pub fn time_shifted(&self, dt: S) -> Self {
        let mut out = self.clone();
        if let Some(t) = out.times.as_mut() {
            t.iter_mut().for_each(|v| *v += dt);
        }
        out
    }

    /// Position at time `t` by linear interpolation, holding the end values
    /// outside the sampled span.
    pub fn position_at(&self, t: S) -> Option<Vec3<S>> {
        let times = self.times.as_ref()?;
        let n = times.len();
        if t <= times[0] {
            return Some(self.positions[0]);
        }
        if t >= times[n - 1] {
            return Some(self.positions[n - 1]);
        }
        let i = times.partition_point(|&x| x <= t);
        let (ta, tb) = (times[i - 1], times[i]);
        let f = (t - ta) / (tb - ta);
        Some(self.positions[i - 1].lerp(self.positions[i], f))
    }
}

/// An action plan together with one lognormal stroke per link.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaLogSignature<S> {
    pub plan: ActionPlan<S>,
    pub strokes: Vec<LognormalStroke<S>>,
}

impl<S: Scalar> SigmaLogSignature<S> {
    pub fn new(plan: ActionPlan<S>, strokes: Vec<LognormalStroke<S>>) -> Result<Self> {
        if strokes.len() != plan.links.len() {
            return Err(Error::InvalidInput(format!(
                "{} strokes for {} plan links",
                strokes.len(),
                plan.links.len()
            )));
        }
        for s in &strokes {
            s.validate()?;
        }
        if strokes.windows(2).any(|w| w[1].t0 < w[0].t0) {
            return Err(Error::InvalidInput("stroke onsets must be nondecreasing".into()));
        }
        Ok(Self { plan, strokes })
    }

    /// Number of lognormals.
    pub fn len(&self) -> usize {
        self.strokes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strokes.is_empty()
    }

    /// Time by which every stroke has (numerically) finished.
    pub fn end_time(&self) -> S {
        self.strokes
            .iter()
            .map(LognormalStroke::end_time)
            .fold(S::neg_infinity(), S::max)
    }

    pub fn total_amplitude(&self) -> S {
        self.strokes.iter().map(|s| s.d).sum()
    }
}

/// Vectorial velocity of the whole signature on `time_grid`.
pub fn reconstruct_velocity<S: Scalar>(
    sig: &SigmaLogSignature<S>,
    time_grid: &[S],
) -> Result<Vec<Vec3<S>>> {
    if sig.strokes.is_empty() {
        return Err(Error::InvalidInput("signature has no strokes".into()));
    }
    if time_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("time grid must be increasing".into()));
    }
    Ok(time_grid
        .iter()
        .map(|&t| sig.strokes.iter().map(|s| stroke_velocity_vector(t, s)).sum())
        .collect())
}

/// Uniform grid `k / fm` for `k = 0..=ceil(t_end * fm)`; a single sample at 0
/// when `t_end <= 0`.
pub fn uniform_grid<S: Scalar>(t_end: S, fm: S) -> Vec<S> {
    let n = if t_end > S::zero() {
        (t_end * fm).ceil().to_usize().unwrap_or(0)
    } else {
        0
    };
    (0..=n).map(|k| from_usize::<S>(k) / fm).collect()
}

/// Integrates the reconstructed velocity (trapezoidal rule) from `t = 0` to
/// the end of the last stroke's tail, at step `1 / fm`, starting at `origin`.
///
/// A signature that has finished before `t = 0` yields the single point
/// `origin`.
pub fn reconstruct_trajectory<S: Scalar>(
    sig: &SigmaLogSignature<S>,
    fm: S,
    origin: Vec3<S>,
) -> Result<Trajectory3D<S>> {
    if !(fm > S::zero()) {
        return Err(Error::ParameterDomain(format!("sampling rate must be > 0, got {fm}")));
    }
    let grid = uniform_grid(sig.end_time(), fm);
    let vel = reconstruct_velocity(sig, &grid)?;
    let half_dt = lit::<S>(0.5) / fm;
    let mut positions = Vec::with_capacity(grid.len());
    let mut p = origin;
    positions.push(p);
    for w in vel.windows(2) {
        p += (w[0] + w[1]) * half_dt;
        positions.push(p);
    }
    Trajectory3D::timed(grid, positions, Some(fm))
}

/// Samples of `reconstructed` at the timestamps of `observed`.
fn aligned<S: Scalar>(
    observed: &Trajectory3D<S>,
    reconstructed: &Trajectory3D<S>,
) -> Result<(Vec<S>, Vec<Vec3<S>>)> {
    if observed.len() < 3 {
        return Err(Error::TooShort {
            what: "observed trajectory",
            needed: 3,
            got: observed.len(),
        });
    }
    let times = observed
        .times()
        .ok_or_else(|| Error::InvalidInput("observed trajectory has no timestamps".into()))?
        .to_vec();
    if reconstructed.times().is_none() {
        return Err(Error::InvalidInput(
            "reconstructed trajectory has no timestamps".into(),
        ));
    }
    let rec = times
        .iter()
        .map(|&t| reconstructed.position_at(t).expect("timed"))
        .collect();
    Ok((times, rec))
}

fn finite_velocity<S: Scalar>(times: &[S], pos: &[Vec3<S>]) -> Vec<(Vec3<S>, S)> {
    times
        .windows(2)
        .zip(pos.windows(2))
        .map(|(t, p)| {
            let dt = t[1] - t[0];
            ((p[1] - p[0]) / dt, dt)
        })
        .collect()
}

fn ratio_db<S: Scalar>(num: S, den: S) -> S {
    let cap = lit::<S>(SNR_CAP_DB);
    if den <= S::zero() || !den.is_normal() {
        return cap;
    }
    let db = lit::<S>(10.0) * (num / den).log10();
    if db.is_nan() {
        cap
    } else {
        db.min(cap)
    }
}

/// Velocity signal-to-noise ratio in dB, capped at +100 dB.
pub fn snr_v<S: Scalar>(observed: &Trajectory3D<S>, reconstructed: &Trajectory3D<S>) -> Result<S> {
    let (times, rec) = aligned(observed, reconstructed)?;
    let vo = finite_velocity(&times, observed.positions());
    let vr = finite_velocity(&times, &rec);
    let mut num = S::zero();
    let mut den = S::zero();
    for ((a, dt), (b, _)) in vo.iter().zip(&vr) {
        num += a.norm_sq() * *dt;
        den += (*a - *b).norm_sq() * *dt;
    }
    if num <= S::zero() {
        return Err(Error::Degenerate("observed trajectory does not move".into()));
    }
    Ok(ratio_db(num, den))
}

/// Trapezoid weights for a possibly non-uniform time grid.
fn trapezoid_weights<S: Scalar>(times: &[S]) -> Vec<S> {
    let n = times.len();
    let half = lit::<S>(0.5);
    (0..n)
        .map(|k| {
            let left = if k > 0 { times[k] - times[k - 1] } else { S::zero() };
            let right = if k + 1 < n { times[k + 1] - times[k] } else { S::zero() };
            (left + right) * half
        })
        .collect()
}

/// Trajectory signal-to-noise ratio in dB, capped at +100 dB.
pub fn snr_t<S: Scalar>(observed: &Trajectory3D<S>, reconstructed: &Trajectory3D<S>) -> Result<S> {
    let (times, rec) = aligned(observed, reconstructed)?;
    let w = trapezoid_weights(&times);
    let total: S = w.iter().copied().sum();
    let so = observed.positions();
    let mean = so
        .iter()
        .zip(&w)
        .map(|(p, &wk)| *p * wk)
        .sum::<Vec3<S>>()
        / total;
    let mut num = S::zero();
    let mut den = S::zero();
    for ((p, r), &wk) in so.iter().zip(&rec).zip(&w) {
        num += (*p - mean).norm_sq() * wk;
        den += (*p - *r).norm_sq() * wk;
    }
    if num <= S::zero() {
        return Err(Error::Degenerate(
            "observed trajectory has zero spatial variance".into(),
        ));
    }
    Ok(ratio_db(num, den))
}
