use super::{densify_points, detect_salient_points, moments_to_lognormal, polyline_cumulative, smooth_samples};
use super::{DensePath3D, PlaneTags, SalientPointSet};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::model::{snr_t, snr_v, LognormalStroke, SigmaLogSignature, Trajectory3D};
use crate::plan::{assign_timestamps, ActionPlan, DEFAULT_MEAN_GAP, DEFAULT_SD_GAP};
use crate::scalar::{from_usize, lit, Scalar};
use crate::synthesis::{plan_to_signature_with, render_full_signature, SolverMode, ONSET_LEAD};

/// Dense points per path when no step is given.
const AUTO_POINTS: f64 = 1000.0;

/// Band around a salient point, as a fraction of each adjoining segment,
/// inside which the movement is considered to rest on it.
const DWELL_FRACTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions<S> {
    /// Derive stroke timing from the input timestamps; otherwise draw
    /// rhythmic times from `seed` and fit strokes by moments.
    pub trust_timing: bool,
    /// Dense path step; `None` picks `Ls / 1000`.
    pub step: Option<S>,
    /// Rendering rate of the reconstruction; `None` uses the input's rate.
    pub fm: Option<S>,
    pub mode: SolverMode,
    pub seed: u64,
}

impl<S: Scalar> Default for EstimateOptions<S> {
    fn default() -> Self {
        Self {
            trust_timing: true,
            step: None,
            fm: None,
            mode: SolverMode::General,
            seed: 0,
        }
    }
}

/// Estimated signature and the quality of its reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate<S> {
    pub signature: SigmaLogSignature<S>,
    pub salient: SalientPointSet,
    pub path: DensePath3D<S>,
    /// Reconstruction, on the input's time axis.
    pub reconstruction: Trajectory3D<S>,
    pub snr_v: S,
    pub snr_t: S,
}

/// Fits a sigma-lognormal signature to a timed trajectory. Segments between
/// salient points become arcs through their endpoints and their point
/// farthest from the chord; strokes come from the closed-form solvers at the
/// observed salient times, or from moments at rhythmic times.
pub fn estimate_parameters<S: Scalar>(
    traj: &Trajectory3D<S>,
    opts: &EstimateOptions<S>,
) -> Result<Estimate<S>> {
    let times = traj
        .times()
        .ok_or_else(|| Error::InvalidInput("trajectory has no timestamps".into()))?;
    let t_first = times[0];
    let local = traj.time_shifted(-t_first);
    let ls = traj.path_length();
    if !(ls > S::zero()) {
        return Err(Error::Degenerate("trajectory does not move".into()));
    }
    let step = opts.step.unwrap_or(ls / lit(AUTO_POINTS));
    let local_times = local.times().expect("timed");
    let (smooth, smooth_times) = smooth_samples(traj.positions(), local_times, step * lit(0.5));
    let path = densify_points(&smooth, step)?;
    let mut salient = detect_salient_points(&path)?;
    if salient.len() < 2 {
        return Err(Error::TooShort {
            what: "salient points",
            needed: 2,
            got: salient.len(),
        });
    }
    let dense = path.cumulative_length();
    let mut lengths: Vec<S> = salient.indices.iter().map(|&i| dense[i]).collect();
    let signature = if opts.trust_timing {
        let timed = TimedPolyline::new(&smooth, &smooth_times);
        valley_points(&local, &timed, &path, &mut salient, &mut lengths);
        let prior = timed.rest_times(&mut salient, &mut lengths)?;
        let ts = refine_times(&timed, local_times, &lengths, &prior);
        let plan = segment_plan(&path, &salient, &lengths, Some(ts))?;
        plan_to_signature_with(&plan, opts.mode)?
    } else {
        let plan = segment_plan(&path, &salient, &lengths, None)?;
        let plan = assign_timestamps(&plan, opts.seed, DEFAULT_MEAN_GAP, DEFAULT_SD_GAP)?;
        moment_signature(plan)?
    };
    let fm = match opts.fm.or(traj.sampling_rate()) {
        Some(f) => f,
        None => median_rate(times)?,
    };
    let rendered = render_full_signature(&signature, fm)?;
    let reconstruction = rendered.trajectory.time_shifted(t_first);
    Ok(Estimate {
        snr_v: snr_v(traj, &reconstruction)?,
        snr_t: snr_t(traj, &reconstruction)?,
        signature,
        salient,
        path,
        reconstruction,
    })
}

fn median_rate<S: Scalar>(times: &[S]) -> Result<S> {
    let mut dt: Vec<S> = times.windows(2).map(|w| w[1] - w[0]).collect();
    if dt.is_empty() {
        return Err(Error::TooShort {
            what: "timed trajectory",
            needed: 2,
            got: times.len(),
        });
    }
    dt.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(S::one() / dt[dt.len() / 2])
}

/// Plan whose links follow the path between consecutive salient points,
/// located at arc lengths `lengths`.
fn segment_plan<S: Scalar>(
    path: &DensePath3D<S>,
    salient: &SalientPointSet,
    lengths: &[S],
    ts: Option<Vec<S>>,
) -> Result<ActionPlan<S>> {
    let pts = path.points();
    let targets: Vec<Vec3<S>> = lengths.iter().map(|&l| path.point_at_length(l)).collect();
    let midpoints = salient
        .indices
        .windows(2)
        .zip(targets.windows(2))
        .map(|(w, t)| farthest_from_chord(t[0], t[1], &pts[w[0] + 1..w[1]]))
        .collect();
    match ts {
        Some(ts) => ActionPlan::timed(targets, midpoints, ts),
        None => ActionPlan::new(targets, midpoints),
    }
}

fn farthest_from_chord<S: Scalar>(a: Vec3<S>, b: Vec3<S>, inner: &[Vec3<S>]) -> Vec3<S> {
    let dir = (b - a).normalized();
    let dist = |p: Vec3<S>| match dir {
        Some(u) => {
            let v = p - a;
            (v - u * v.dot(u)).norm()
        }
        None => p.distance(a),
    };
    inner
        .iter()
        .copied()
        .max_by(|p, q| dist(*p).partial_cmp(&dist(*q)).unwrap())
        .filter(|p| dist(*p) > S::zero())
        .unwrap_or_else(|| a.lerp(b, lit(0.5)))
}

/// Positions with their times and travelled distance.
struct TimedPolyline<'a, S> {
    times: &'a [S],
    cum: Vec<S>,
}

impl<'a, S: Scalar> TimedPolyline<'a, S> {
    fn new(points: &[Vec3<S>], times: &'a [S]) -> Self {
        Self {
            times,
            cum: polyline_cumulative(points),
        }
    }

    /// Time at which the input rests on each salient point: the middle of
    /// the interval during which the travelled distance stays within a band
    /// around the point's arc length (a small fraction of each adjoining
    /// segment). The open-ended dwells at the two endpoints are closed with
    /// the mean interior half-dwell. Points whose time would not increase are
    /// dropped.
    fn rest_times(&self, salient: &mut SalientPointSet, lengths: &mut Vec<S>) -> Result<Vec<S>> {
        let n = lengths.len();
        let f: S = lit(DWELL_FRACTION);
        let dwells: Vec<(S, S)> = (0..n)
            .map(|j| {
                let s = lengths[j];
                let left = if j > 0 { (s - lengths[j - 1]) * f } else { S::zero() };
                let right = if j + 1 < n { (lengths[j + 1] - s) * f } else { S::zero() };
                (self.first_reach(s - left), self.last_stay(s + right))
            })
            .collect();
        let half = lit::<S>(0.5);
        let interior = &dwells[1..n - 1];
        let mean_half = if interior.is_empty() {
            S::zero()
        } else {
            interior.iter().map(|(a, b)| (*b - *a) * half).sum::<S>() / from_usize(interior.len())
        };
        let mut ts: Vec<S> = dwells.iter().map(|(a, b)| (*a + *b) * half).collect();
        ts[0] = dwells[0].1 - mean_half;
        ts[n - 1] = dwells[n - 1].0 + mean_half;

        let mut keep = vec![true; n];
        let mut prev = ts[0];
        for j in 1..n - 1 {
            if ts[j] > prev && ts[j] < ts[n - 1] {
                prev = ts[j];
            } else {
                keep[j] = false;
            }
        }
        if !(ts[n - 1] > prev) {
            return Err(Error::Degenerate("salient point times do not increase".into()));
        }
        retain_by(&mut salient.indices, &keep);
        retain_by(&mut salient.tags, &keep);
        retain_by(lengths, &keep);
        retain_by(&mut ts, &keep);
        Ok(ts)
    }

    /// Earliest time the travelled distance reaches `level`.
    fn first_reach(&self, level: S) -> S {
        let i = self.cum.partition_point(|c| *c < level);
        match i {
            0 => self.times[0],
            i if i == self.cum.len() => self.times[i - 1],
            i => self.interpolate(i - 1, level),
        }
    }

    /// Latest time the travelled distance is still at most `level`.
    fn last_stay(&self, level: S) -> S {
        let i = self.cum.partition_point(|c| *c <= level);
        match i {
            0 => self.times[0],
            i if i == self.cum.len() => self.times[i - 1],
            i => self.interpolate(i - 1, level),
        }
    }

    fn interpolate(&self, k: usize, level: S) -> S {
        let span = self.cum[k + 1] - self.cum[k];
        let f = if span > S::zero() { (level - self.cum[k]) / span } else { S::zero() };
        self.times[k] + (self.times[k + 1] - self.times[k]) * f.max(S::zero()).min(S::one())
    }

    /// Travelled distance at time `t`.
    fn length_at(&self, t: S) -> S {
        let (times, cum) = (self.times, &self.cum);
        let i = times.partition_point(|x| *x <= t);
        if i == 0 {
            return cum[0];
        }
        if i == times.len() {
            return cum[cum.len() - 1];
        }
        let span = times[i] - times[i - 1];
        let f = if span > S::zero() { (t - times[i - 1]) / span } else { S::zero() };
        cum[i - 1] + (cum[i] - cum[i - 1]) * f
    }
}

fn retain_by<T>(v: &mut Vec<T>, keep: &[bool]) {
    let mut k = 0;
    v.retain(|_| {
        k += 1;
        keep[k - 1]
    });
}

/// A speed valley must dip below this fraction of the surrounding peak.
const VALLEY_DEPTH: f64 = 0.5;

fn sample_speeds<S: Scalar>(traj: &Trajectory3D<S>) -> Vec<S> {
    let st = traj.times().expect("timed");
    let sp = traj.positions();
    let m = st.len();
    (0..m)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(m - 1));
            sp[a].distance(sp[b]) / (st[b] - st[a])
        })
        .collect()
}

/// Replaces the curvature candidates by the endpoints and the deep local
/// minima of the sampled speed, where timed motion separates its strokes.
/// Targets passed along a straight line leave no curvature peak, and
/// curvature peaks inside a stroke are not stroke boundaries; candidates
/// only lend their plane tags to a valley within two path steps.
fn valley_points<S: Scalar>(
    traj: &Trajectory3D<S>,
    timed: &TimedPolyline<'_, S>,
    path: &DensePath3D<S>,
    salient: &mut SalientPointSet,
    lengths: &mut Vec<S>,
) {
    let st = traj.times().expect("timed");
    let speed = sample_speeds(traj);
    let m = speed.len();
    let minima: Vec<usize> = (1..m.saturating_sub(1))
        .filter(|&i| speed[i] <= speed[i - 1] && speed[i] < speed[i + 1])
        .collect();
    let last = path.len() - 1;
    let tag_near = |idx: usize| {
        salient
            .indices
            .iter()
            .zip(&salient.tags)
            .filter(|(i, _)| i.abs_diff(idx) <= 2)
            .fold(PlaneTags::empty(), |acc, (_, t)| acc.union(*t))
    };
    let mut kept = SalientPointSet {
        indices: vec![0],
        tags: vec![salient.tags[0]],
    };
    let mut kept_len = vec![lengths[0]];
    for (k, &i) in minima.iter().enumerate() {
        let a = if k == 0 { 0 } else { minima[k - 1] };
        let b = minima.get(k + 1).copied().unwrap_or(m - 1);
        let left = speed[a..=i].iter().copied().fold(S::zero(), S::max);
        let right = speed[i..=b].iter().copied().fold(S::zero(), S::max);
        if !(speed[i] < left.min(right) * lit(VALLEY_DEPTH)) {
            continue;
        }
        let s = timed.length_at(st[i]);
        let idx = (s / path.step()).round().to_usize().unwrap_or(0).min(last);
        if idx <= kept.indices.last().unwrap() + 2 || idx + 2 >= last {
            continue;
        }
        kept.indices.push(idx);
        kept.tags.push(tag_near(idx));
        kept_len.push(s);
    }
    kept.indices.push(last);
    kept.tags.push(*salient.tags.last().unwrap());
    kept_len.push(*lengths.last().unwrap());
    *salient = kept;
    *lengths = kept_len;
}

/// Fractions of a stroke's travel kept for its timing fit.
const FIT_FRACTIONS: (f64, f64) = (0.02, 0.98);
const MIN_FIT_R2: f64 = 0.995;
/// Weight of the dwell times relative to the fitted stroke peaks.
const DWELL_WEIGHT: f64 = 0.01;

/// `z` with `Phi(z) = f`, by Newton steps from 0 (monotone on either side).
fn probit<S: Scalar>(f: S) -> S {
    let half: S = lit(0.5);
    let mut z = S::zero();
    for _ in 0..50 {
        let cdf = half * (S::one() + (z / S::SQRT_2()).erf());
        let pdf = (-half * z * z).exp() / S::TAU().sqrt();
        let dz = (cdf - f) / pdf;
        z = z - dz;
        if dz.abs() < lit(1e-12) {
            break;
        }
    }
    z
}

/// Peak time of the stroke travelling from `s0` to `s1`: the travelled
/// fraction of a lognormal stroke is `Phi((ln(t - t0) - mu) / sigma)`, so
/// its probit is linear in `ln(t - t0)`; a least-squares line gives
/// `(mu, sigma)` and the peak `t0 + exp(mu - sigma^2)`.
fn stroke_peak<S: Scalar>(timed: &TimedPolyline<'_, S>, samples: &[S], s0: S, s1: S, t0: S) -> Option<S> {
    let d = s1 - s0;
    let (lo, hi) = (lit::<S>(FIT_FRACTIONS.0), lit::<S>(FIT_FRACTIONS.1));
    let pts: Vec<(S, S)> = samples
        .iter()
        .filter(|t| **t > t0)
        .map(|t| (*t, (timed.length_at(*t) - s0) / d))
        .filter(|(_, f)| *f > lo && *f < hi)
        .map(|(t, f)| ((t - t0).ln(), probit(f)))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = from_usize::<S>(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<S>() / n;
    let my = pts.iter().map(|p| p.1).sum::<S>() / n;
    let sxx = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<S>();
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<S>();
    let syy = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum::<S>();
    // a poor line means the span holds more than one stroke
    if !(sxx > S::zero()) || !(sxy > S::zero()) || sxy * sxy < lit::<S>(MIN_FIT_R2) * sxx * syy {
        return None;
    }
    let sigma = sxx / sxy;
    let mu = mx - my * sigma;
    let peak = t0 + (mu - sigma * sigma).exp();
    peak.is_finite().then_some(peak)
}

/// Salient times combining the dwell times `prior` with the stroke peaks
/// (fitted on the input sample times `samples`),
/// each of which lies midway between its two salient times: the weighted
/// least-squares solution of a tridiagonal system. Falls back to `prior`
/// when the result does not increase.
fn refine_times<S: Scalar>(timed: &TimedPolyline<'_, S>, samples: &[S], lengths: &[S], prior: &[S]) -> Vec<S> {
    let n = prior.len();
    let w: S = lit(DWELL_WEIGHT);
    let quarter: S = lit(0.25);
    let half: S = lit(0.5);
    let mut diag: Vec<S> = vec![w; n];
    let mut off: Vec<S> = vec![S::zero(); n.saturating_sub(1)];
    let mut rhs: Vec<S> = prior.iter().map(|p| *p * w).collect();
    for j in 1..n {
        let t0 = prior[j - 1] - lit(ONSET_LEAD);
        let span = prior[j] - prior[j - 1];
        let centre = (prior[j] + prior[j - 1]) * half;
        let peak = stroke_peak(timed, samples, lengths[j - 1], lengths[j], t0)
            .filter(|p| (*p - centre).abs() < span * quarter);
        if let Some(peak) = peak {
            diag[j - 1] += quarter;
            diag[j] += quarter;
            off[j - 1] += quarter;
            rhs[j - 1] += half * peak;
            rhs[j] += half * peak;
        }
    }
    // Thomas algorithm (the system is symmetric and diagonally dominant)
    let mut c = vec![S::zero(); n];
    let mut d = vec![S::zero(); n];
    for i in 0..n {
        let sub = if i > 0 { off[i - 1] } else { S::zero() };
        let den = diag[i] - if i > 0 { sub * c[i - 1] } else { S::zero() };
        c[i] = if i + 1 < n { off[i] / den } else { S::zero() };
        d[i] = (rhs[i] - if i > 0 { sub * d[i - 1] } else { S::zero() }) / den;
    }
    let mut ts = vec![S::zero(); n];
    for i in (0..n).rev() {
        ts[i] = d[i] - if i + 1 < n { c[i] * ts[i + 1] } else { S::zero() };
    }
    if ts.windows(2).all(|p| p[1] > p[0]) && ts.iter().all(|t| t.is_finite()) {
        ts
    } else {
        prior.to_vec()
    }
}

/// Strokes fitted by moments to a timed plan (onset `ts_{j-1} - 0.5`, mean
/// at the link centre, standard deviation a quarter of the link duration).
fn moment_signature<S: Scalar>(plan: ActionPlan<S>) -> Result<SigmaLogSignature<S>> {
    let ts = plan.timestamps.clone().expect("timed plan");
    let half: S = lit(0.5);
    let strokes = plan
        .links
        .iter()
        .enumerate()
        .map(|(j, link)| {
            let t0 = ts[j] - lit(ONSET_LEAD);
            let mean = (ts[j] + ts[j + 1]) * half - t0;
            let sd = (ts[j + 1] - ts[j]) / lit(4.0);
            let (mu, sigma2) = moments_to_lognormal(mean, sd * sd)?;
            let (th_s, th_e, ph_s, ph_e) = link.tangent_angles();
            LognormalStroke::new(link.length(), t0, mu, sigma2, th_s, th_e, ph_s, ph_e)
        })
        .collect::<Result<Vec<_>>>()?;
    SigmaLogSignature::new(plan, strokes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{assign_timestamps, ActionPlan};
    use crate::synthesis::plan_to_signature;

    fn rendered_zigzag() -> (SigmaLogSignature<f64>, Trajectory3D<f64>) {
        let targets: Vec<_> = (0..6)
            .map(|i| Vec3::new(25.0 * i as f64, if i % 2 == 0 { 0.0 } else { 40.0 }, 3.0 * i as f64))
            .collect();
        let mids = targets
            .windows(2)
            .enumerate()
            .map(|(j, w)| {
                let m = w[0].lerp(w[1], 0.5);
                m + Vec3::new(if j % 2 == 0 { -6.0 } else { 6.0 }, 0.0, 0.0)
            })
            .collect();
        let plan = ActionPlan::new(targets, mids).unwrap();
        let plan = assign_timestamps(&plan, 5, 0.1, 0.005).unwrap();
        let sig = plan_to_signature(&plan).unwrap();
        let traj = render_full_signature(&sig, 200.0).unwrap().trajectory;
        (sig, traj)
    }

    #[test]
    fn round_trip_of_rendered_signature() {
        let (sig, traj) = rendered_zigzag();
        let est = estimate_parameters(&traj, &EstimateOptions::default()).unwrap();
        assert_eq!(est.signature.len(), sig.len());
        assert!(est.snr_v >= 15.0 && est.snr_t >= 15.0, "{} {}", est.snr_v, est.snr_t);
        let truth = sig.plan.timestamps.as_ref().unwrap();
        let got = est.signature.plan.timestamps.as_ref().unwrap();
        for (a, b) in truth.iter().zip(got) {
            assert!((a - b).abs() < 0.01, "{a} vs {b}");
        }
    }

    #[test]
    fn time_offset_is_preserved() {
        let (_, traj) = rendered_zigzag();
        let a = estimate_parameters(&traj, &EstimateOptions::default()).unwrap();
        let b = estimate_parameters(&traj.time_shifted(3.0), &EstimateOptions::default()).unwrap();
        assert!((a.snr_v - b.snr_v).abs() < 1e-6);
        assert_eq!(a.signature.len(), b.signature.len());
        for (x, y) in a.signature.strokes.iter().zip(&b.signature.strokes) {
            assert!((x.t0 - y.t0).abs() < 1e-9 && (x.mu - y.mu).abs() < 1e-9);
        }
    }

    #[test]
    fn straight_constant_speed_is_one_stroke() {
        let pos: Vec<_> = (0..=100).map(|k| Vec3::new(k as f64, 0.0, 0.0)).collect();
        let traj = Trajectory3D::sampled(0.0, 100.0, pos).unwrap();
        let est = estimate_parameters(&traj, &EstimateOptions::default()).unwrap();
        assert_eq!(est.signature.len(), 1);
        assert!(est.signature.plan.links[0].is_degenerate_segment);
    }

    #[test]
    fn deterministic_with_trusted_timing() {
        let (_, traj) = rendered_zigzag();
        let mut o = EstimateOptions::default();
        let a = estimate_parameters(&traj, &o).unwrap();
        o.seed = 99;
        let b = estimate_parameters(&traj, &o).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn untrusted_timing_uses_moments() {
        let (_, traj) = rendered_zigzag();
        let o = EstimateOptions {
            trust_timing: false,
            seed: 4,
            ..Default::default()
        };
        let est = estimate_parameters(&traj, &o).unwrap();
        let s = est.signature.strokes[0];
        let ts = est.signature.plan.timestamps.as_ref().unwrap();
        assert_eq!(ts[0], 0.0);
        let mean = (s.mu + s.sigma2 / 2.0).exp();
        assert!((mean - ((ts[0] + ts[1]) / 2.0 - s.t0)).abs() < 1e-9);
    }

    #[test]
    fn bare_input_rejected() {
        let traj = Trajectory3D::bare(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)]).unwrap();
        assert!(estimate_parameters(&traj, &EstimateOptions::default()).is_err());
    }
}
