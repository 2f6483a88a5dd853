use super::{DensePath3D, SalientPointSet};
use crate::error::{Error, Result};
use crate::model::{lognormal_area_unchecked, unit_lognormal_unchecked, Trajectory3D, TAIL_SIGMAS};
use crate::plan::{cpg_timestamps, DEFAULT_MEAN_GAP, DEFAULT_SD_GAP};
use crate::rng;
use crate::scalar::{from_usize, lit, Scalar};
use crate::synthesis::ONSET_LEAD;

/// Resampled positions may overshoot the path by this fraction before the
/// profile is considered inconsistent with it.
const OVERSHOOT_TOLERANCE: f64 = 0.005;

/// Lognormal `(mu, sigma2)` with the given mean and variance:
/// `sigma2 = ln(1 + V/M^2)`, `mu = ln(M^2 / sqrt(V + M^2))`.
pub fn moments_to_lognormal<S: Scalar>(mean: S, var: S) -> Result<(S, S)> {
    if !(mean > S::zero()) || !(var > S::zero()) || !mean.is_finite() || !var.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "moments need mean > 0 and variance > 0 (got {mean}, {var})"
        )));
    }
    let mu = (mean * mean / (var + mean * mean).sqrt()).ln();
    let sigma2 = (var / (mean * mean)).ln_1p();
    Ok((mu, sigma2))
}

/// Scalar lognormal speed component: `d * Lambda(t; t0, mu, sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedStroke<S> {
    pub d: S,
    pub t0: S,
    pub mu: S,
    pub sigma2: S,
}

impl<S: Scalar> SpeedStroke<S> {
    pub fn speed(&self, t: S) -> S {
        self.d * unit_lognormal_unchecked(t, self.t0, self.mu, self.sigma2)
    }

    pub fn area_fraction(&self, t: S) -> S {
        lognormal_area_unchecked(t, self.t0, self.mu, self.sigma2)
    }

    pub fn end_time(&self) -> S {
        self.t0 + (self.mu + lit::<S>(TAIL_SIGMAS) * self.sigma2.sqrt()).exp()
    }
}

/// Summed stroke speeds scaled by `omega` so that the distance covered
/// over `[0, duration]` equals the path length.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile<S> {
    pub strokes: Vec<SpeedStroke<S>>,
    pub omega: S,
    pub duration: S,
    /// Times assigned to the salient points.
    pub timestamps: Vec<S>,
    pub path_length: S,
}

impl<S: Scalar> VelocityProfile<S> {
    pub fn speed(&self, t: S) -> S {
        self.omega * self.strokes.iter().map(|s| s.speed(t)).sum::<S>()
    }

    /// Distance covered between 0 and `t`.
    pub fn distance(&self, t: S) -> S {
        self.omega
            * self
                .strokes
                .iter()
                .map(|s| s.d * (s.area_fraction(t) - s.area_fraction(S::zero())))
                .sum::<S>()
    }
}

/// Times the salient points rhythmically (seeded) and builds the profile.
pub fn synthesize_velocity<S: Scalar>(
    sps: &SalientPointSet,
    path: &DensePath3D<S>,
    seed: u64,
) -> Result<VelocityProfile<S>> {
    let mut r = rng::seeded(seed);
    let ts = cpg_timestamps(sps.len(), &mut r, DEFAULT_MEAN_GAP, DEFAULT_SD_GAP);
    synthesize_velocity_timed(sps, path, &ts)
}

/// Profile for salient points at known times: one stroke per segment with
/// onset `ts_{j-1} - 0.5`, mean at the segment centre, standard deviation a
/// quarter of the segment duration and amplitude the segment arc length.
pub fn synthesize_velocity_timed<S: Scalar>(
    sps: &SalientPointSet,
    path: &DensePath3D<S>,
    ts: &[S],
) -> Result<VelocityProfile<S>> {
    if sps.len() < 2 {
        return Err(Error::TooShort {
            what: "salient points",
            needed: 2,
            got: sps.len(),
        });
    }
    if ts.len() != sps.len() {
        return Err(Error::InvalidInput(format!(
            "{} timestamps for {} salient points",
            ts.len(),
            sps.len()
        )));
    }
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("salient point times must increase".into()));
    }
    let cum = path.cumulative_length();
    if sps.indices.iter().any(|i| *i >= cum.len()) {
        return Err(Error::InvalidInput("salient index outside the path".into()));
    }
    let half: S = lit(0.5);
    let mut strokes = Vec::with_capacity(sps.len() - 1);
    for j in 1..sps.len() {
        let d = cum[sps.indices[j]] - cum[sps.indices[j - 1]];
        if !(d > S::zero()) {
            return Err(Error::Degenerate(format!("segment {j} has zero length")));
        }
        let t0 = ts[j - 1] - lit(ONSET_LEAD);
        let mean = (ts[j - 1] + ts[j]) * half - t0;
        let sd = (ts[j] - ts[j - 1]) / lit(4.0);
        let (mu, sigma2) = moments_to_lognormal(mean, sd * sd)?;
        strokes.push(SpeedStroke { d, t0, mu, sigma2 });
    }
    let duration = strokes
        .iter()
        .map(SpeedStroke::end_time)
        .fold(S::zero(), S::max);
    let area: S = strokes
        .iter()
        .map(|s| s.d * (s.area_fraction(duration) - s.area_fraction(S::zero())))
        .sum();
    if !(area > S::zero()) {
        return Err(Error::Degenerate("velocity profile has no area after t = 0".into()));
    }
    let path_length = path.length();
    Ok(VelocityProfile {
        strokes,
        omega: path_length / area,
        duration,
        timestamps: ts.to_vec(),
        path_length,
    })
}

/// Distance along the path at `t_k = k / fm`, `k = 0..=floor(T fm)`.
pub fn resample_arc_lengths<S: Scalar>(vp: &VelocityProfile<S>, fm: S) -> Result<Vec<S>> {
    if !(fm > S::zero()) || !fm.is_finite() {
        return Err(Error::ParameterDomain(format!("sampling rate must be > 0, got {fm}")));
    }
    let n = (vp.duration * fm).floor().to_usize().unwrap_or(0);
    Ok((0..=n).map(|k| vp.distance(from_usize::<S>(k) / fm)).collect())
}

/// Samples the path at `fm`, each sample placed at the distance the profile
/// has covered by then.
pub fn resample_with_velocity<S: Scalar>(
    path: &DensePath3D<S>,
    vp: &VelocityProfile<S>,
    fm: S,
) -> Result<Trajectory3D<S>> {
    let ls = path.length();
    let limit = ls * (S::one() + lit(OVERSHOOT_TOLERANCE));
    let positions = resample_arc_lengths(vp, fm)?
        .into_iter()
        .map(|d| {
            if d > limit {
                Err(Error::InvalidInput(format!(
                    "profile covers {d}, beyond path length {ls}"
                )))
            } else {
                Ok(path.point_at_length(d))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory3D::sampled(S::zero(), fm, positions)
}

#[cfg(test)]
mod tests {
    use super::super::{densify_path, detect_salient_points};
    use super::*;
    use crate::geom::Vec3;

    fn straight(len: f64) -> DensePath3D<f64> {
        let t = Trajectory3D::bare(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(len, 0.0, 0.0)]).unwrap();
        densify_path(&t, 1.0).unwrap()
    }

    #[test]
    fn moments_example() {
        let (mu, s2): (f64, f64) = moments_to_lognormal(1.0, 0.0625).unwrap();
        assert!((mu + 0.5 * 1.0625f64.ln()).abs() < 1e-15);
        assert!((s2 - 1.0625f64.ln()).abs() < 1e-15);
        assert!((mu + 0.030_312_310_908_217_42).abs() < 1e-12);
        assert!((s2 - 0.060_624_621_816_434_84).abs() < 1e-12);
    }

    #[test]
    fn moments_small_variance_limit() {
        let (mu, s2): (f64, f64) = moments_to_lognormal(2.0, 1e-14).unwrap();
        assert!(s2 < 1e-14 && (mu - 2f64.ln()).abs() < 1e-14);
        assert!(moments_to_lognormal(0.0, 1.0).is_err());
        assert!(moments_to_lognormal(1.0, 0.0).is_err());
        assert!(moments_to_lognormal(-1.0, 1.0).is_err());
    }

    #[test]
    fn single_segment_unit_duration() {
        let path = straight(50.0);
        let sps = SalientPointSet::endpoints(path.len());
        let vp = synthesize_velocity_timed(&sps, &path, &[0.0, 1.0]).unwrap();
        let s = vp.strokes[0];
        assert!((s.t0 + 0.5).abs() < 1e-15);
        let (mu, s2) = moments_to_lognormal(1.0, 0.0625).unwrap();
        assert!((s.mu - mu).abs() < 1e-15 && (s.sigma2 - s2).abs() < 1e-15);
        assert!((s.d - 50.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_segments() {
        let path = straight(100.0);
        let sps = SalientPointSet {
            indices: vec![0, 50, 100],
            tags: vec![Default::default(); 3],
        };
        let vp = synthesize_velocity_timed(&sps, &path, &[0.0, 0.1, 0.2]).unwrap();
        let (a, b) = (vp.strokes[0], vp.strokes[1]);
        assert!((a.mu - b.mu).abs() < 1e-12 && (a.sigma2 - b.sigma2).abs() < 1e-12);
        assert!((a.d - b.d).abs() < 1e-12);
        assert!((0.9..=1.1).contains(&vp.omega), "omega {}", vp.omega);
    }

    #[test]
    fn omega_normalizes_distance() {
        let path = straight(80.0);
        let sps = SalientPointSet {
            indices: vec![0, 13, 40, 80],
            tags: vec![Default::default(); 4],
        };
        let vp = synthesize_velocity(&sps, &path, 7).unwrap();
        assert!((vp.distance(vp.duration) - 80.0).abs() < 1e-9);
        // independent check: midpoint-rule quadrature of the speed
        let n = 200_000;
        let h = vp.duration / n as f64;
        let q: f64 = (0..n).map(|k| vp.speed((k as f64 + 0.5) * h) * h).sum();
        assert!((q - 80.0).abs() / 80.0 < 1e-3);
    }

    #[test]
    fn resampled_timestamps_and_final_length() {
        let pts: Vec<_> = (0..200)
            .map(|i| {
                let a = i as f64 * 0.05;
                Vec3::new(40.0 * a.cos(), 30.0 * a.sin(), 5.0 * a)
            })
            .collect();
        let path = densify_path(&Trajectory3D::bare(pts).unwrap(), 1.0).unwrap();
        let sps = detect_salient_points(&path).unwrap();
        let vp = synthesize_velocity(&sps, &path, 3).unwrap();
        let out = resample_with_velocity(&path, &vp, 100.0).unwrap();
        for (k, t) in out.times().unwrap().iter().enumerate() {
            assert_eq!(*t, k as f64 / 100.0);
        }
        let d = resample_arc_lengths(&vp, 100.0).unwrap();
        assert!((d.last().unwrap() - path.length()).abs() <= path.step());
        assert!(d.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn speed_from_samples_tracks_profile() {
        let pts: Vec<_> = (0..400)
            .map(|i| {
                let a = i as f64 * 0.01;
                Vec3::new(100.0 * a, 20.0 * (2.0 * a).sin(), 0.0)
            })
            .collect();
        let path = densify_path(&Trajectory3D::bare(pts).unwrap(), 0.5).unwrap();
        let sps = SalientPointSet {
            indices: vec![0, path.len() / 3, path.len() - 1],
            tags: vec![Default::default(); 3],
        };
        let vp = synthesize_velocity(&sps, &path, 11).unwrap();
        let fm = 200.0;
        let out = resample_with_velocity(&path, &vp, fm).unwrap();
        let p = out.positions();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for k in 1..p.len() {
            a.push(p[k].distance(p[k - 1]) * fm);
            b.push(vp.speed((k as f64 - 0.5) / fm));
        }
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        assert!(cov / (va * vb).sqrt() > 0.99);
    }

    #[test]
    fn constant_speed_profile_spaces_uniformly() {
        // one very wide stroke observed near its peak is close to constant
        let path = straight(1000.0);
        let vp = VelocityProfile {
            strokes: vec![SpeedStroke { d: 1e5, t0: -1e3, mu: 1e3f64.ln(), sigma2: 1e-2 }],
            omega: 1.0,
            duration: 0.5,
            timestamps: vec![0.0, 0.5],
            path_length: 1000.0,
        };
        let out = resample_with_velocity(&path, &vp, 10.0).unwrap();
        let p = out.positions();
        let gaps: Vec<f64> = p.windows(2).map(|w| w[0].distance(w[1])).collect();
        let g0 = gaps[0];
        assert!(gaps.iter().all(|g| (g - g0).abs() / g0 < 1e-3));
    }

    #[test]
    fn overshoot_is_an_error() {
        let path = straight(10.0);
        let sps = SalientPointSet::endpoints(path.len());
        let mut vp = synthesize_velocity_timed(&sps, &path, &[0.0, 0.1]).unwrap();
        vp.omega *= 1.2;
        assert!(resample_with_velocity(&path, &vp, 100.0).is_err());
    }
}
