//! Kinematic synthesis: timing for bare trajectories from multiscale
//! curvature, moment-fitted lognormals and arc-length resampling. The same
//! primitives back a lightweight parameter estimator for timed input.

mod curvature;
mod estimate;
mod velocity;

pub use curvature::{detect_salient_points, plane_curvature, salient_scales, Plane, PlaneTags, SalientPointSet};
pub use estimate::{estimate_parameters, Estimate, EstimateOptions};
pub use velocity::{
    moments_to_lognormal, resample_arc_lengths, resample_with_velocity, synthesize_velocity,
    synthesize_velocity_timed, SpeedStroke, VelocityProfile,
};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::model::Trajectory3D;
use crate::scalar::{from_usize, lit, Scalar};

/// Polyline re-interpolated at a uniform arc-length step.
#[derive(Debug, Clone, PartialEq)]
pub struct DensePath3D<S> {
    points: Vec<Vec3<S>>,
    cumulative_length: Vec<S>,
    step: S,
}

impl<S: Scalar> DensePath3D<S> {
    pub fn points(&self) -> &[Vec3<S>] {
        &self.points
    }

    pub fn cumulative_length(&self) -> &[S] {
        &self.cumulative_length
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Actual spacing between consecutive points.
    pub fn step(&self) -> S {
        self.step
    }

    /// Total arc length `Ls`.
    pub fn length(&self) -> S {
        *self.cumulative_length.last().unwrap()
    }

    /// Point at arc length `s`, clamped to `[0, Ls]`.
    pub fn point_at_length(&self, s: S) -> Vec3<S> {
        let c = &self.cumulative_length;
        if !(s > S::zero()) {
            return self.points[0];
        }
        if s >= self.length() {
            return *self.points.last().unwrap();
        }
        let k = c.partition_point(|v| *v <= s).max(1);
        let span = c[k] - c[k - 1];
        let f = if span > S::zero() { (s - c[k - 1]) / span } else { S::zero() };
        self.points[k - 1].lerp(self.points[k], f)
    }
}

/// Cumulative polyline length of `points`.
pub(crate) fn polyline_cumulative<S: Scalar>(points: &[Vec3<S>]) -> Vec<S> {
    let mut acc = S::zero();
    let mut out = Vec::with_capacity(points.len());
    out.push(acc);
    for w in points.windows(2) {
        acc += w[0].distance(w[1]);
        out.push(acc);
    }
    out
}

/// Re-interpolates `traj` at a uniform arc-length step close to `step`
/// (the segment count is `round(Ls / step)`).
pub fn densify_path<S: Scalar>(traj: &Trajectory3D<S>, step: S) -> Result<DensePath3D<S>> {
    densify_points(traj.positions(), step)
}

pub(crate) fn densify_points<S: Scalar>(points: &[Vec3<S>], step: S) -> Result<DensePath3D<S>> {
    if !(step > S::zero()) || !step.is_finite() {
        return Err(Error::ParameterDomain(format!("path step must be > 0, got {step}")));
    }
    let mut pts: Vec<Vec3<S>> = Vec::with_capacity(points.len());
    for p in points {
        if !p.is_finite() {
            return Err(Error::InvalidInput("trajectory contains non-finite points".into()));
        }
        if pts.last().map_or(true, |q| q.distance(*p) > S::zero()) {
            pts.push(*p);
        }
    }
    if pts.len() < 2 {
        return Err(Error::Degenerate("trajectory has zero length".into()));
    }
    let cum = polyline_cumulative(&pts);
    let total = *cum.last().unwrap();
    let n_seg = (total / step).round().to_usize().unwrap_or(1).max(1);
    let h = total / from_usize(n_seg);
    let mut out = Vec::with_capacity(n_seg + 1);
    let mut lengths = Vec::with_capacity(n_seg + 1);
    let mut seg = 1;
    for k in 0..=n_seg {
        let s = if k == n_seg { total } else { h * from_usize(k) };
        while seg < pts.len() - 1 && cum[seg] < s {
            seg += 1;
        }
        let span = cum[seg] - cum[seg - 1];
        let f = ((s - cum[seg - 1]) / span).max(S::zero()).min(S::one());
        out.push(pts[seg - 1].lerp(pts[seg], f));
        lengths.push(s);
    }
    Ok(DensePath3D {
        points: out,
        cumulative_length: lengths,
        step: h,
    })
}

/// Centripetal Catmull-Rom interpolation of timed samples, emitting points
/// at most `max_gap` apart; times follow the local spline parameter.
/// Samples closer than `1e-3 * max_gap` to their predecessor are skipped.
pub(crate) fn smooth_samples<S: Scalar>(
    points: &[Vec3<S>],
    times: &[S],
    max_gap: S,
) -> (Vec<Vec3<S>>, Vec<S>) {
    let min_gap = max_gap * lit(1e-3);
    let mut p: Vec<Vec3<S>> = Vec::with_capacity(points.len());
    let mut t: Vec<S> = Vec::with_capacity(points.len());
    for (q, tq) in points.iter().zip(times) {
        if p.last().map_or(true, |l| l.distance(*q) > min_gap) {
            p.push(*q);
            t.push(*tq);
        }
    }
    if p.len() < 2 {
        return (p, t);
    }
    let n = p.len();
    let two: S = lit(2.0);
    let mut out = vec![p[0]];
    let mut out_t = vec![t[0]];
    for i in 0..n - 1 {
        let p0 = if i == 0 { p[0] * two - p[1] } else { p[i - 1] };
        let p3 = if i + 2 == n { p[n - 1] * two - p[n - 2] } else { p[i + 2] };
        let (p1, p2) = (p[i], p[i + 1]);
        let k = (p1.distance(p2) / max_gap).ceil().to_usize().unwrap_or(1).max(1);
        let k0 = S::zero();
        let k1 = k0 + p0.distance(p1).sqrt();
        let k2 = k1 + p1.distance(p2).sqrt();
        let k3 = k2 + p2.distance(p3).sqrt();
        for j in 1..=k {
            let f = from_usize::<S>(j) / from_usize(k);
            let c = if j == k {
                p2
            } else {
                let u = k1 + (k2 - k1) * f;
                let mix = |a: Vec3<S>, b: Vec3<S>, ka: S, kb: S| a * ((kb - u) / (kb - ka)) + b * ((u - ka) / (kb - ka));
                let a1 = mix(p0, p1, k0, k1);
                let a2 = mix(p1, p2, k1, k2);
                let a3 = mix(p2, p3, k2, k3);
                let b1 = mix(a1, a2, k0, k2);
                let b2 = mix(a2, a3, k1, k3);
                mix(b1, b2, k1, k2)
            };
            out.push(c);
            out_t.push(t[i] + (t[i + 1] - t[i]) * f);
        }
    }
    (out, out_t)
}

/// Points per dense path when no step is given.
const AUTO_PATH_POINTS: f64 = 1000.0;

/// Output of the kinematic synthesis pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicSynthesis<S> {
    pub trajectory: Trajectory3D<S>,
    pub salient: SalientPointSet,
    pub profile: VelocityProfile<S>,
    pub path: DensePath3D<S>,
}

/// Gives a bare trajectory a human-like timing: densify (step `Ls / 1000`
/// unless given), detect salient points, time them rhythmically from `seed`,
/// and resample at `fm`. Input timestamps, if any, are ignored.
pub fn synthesize_kinematics<S: Scalar>(
    traj: &Trajectory3D<S>,
    step: Option<S>,
    fm: S,
    seed: u64,
) -> Result<KinematicSynthesis<S>> {
    let ls = traj.path_length();
    if !(ls > S::zero()) {
        return Err(Error::Degenerate("trajectory has zero length".into()));
    }
    let path = densify_path(traj, step.unwrap_or(ls / lit(AUTO_PATH_POINTS)))?;
    let salient = detect_salient_points(&path)?;
    let profile = synthesize_velocity(&salient, &path, seed)?;
    let trajectory = resample_with_velocity(&path, &profile, fm)?;
    Ok(KinematicSynthesis {
        trajectory,
        salient,
        profile,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn bare(points: Vec<Vec3<f64>>) -> Trajectory3D<f64> {
        Trajectory3D::bare(points).unwrap()
    }

    #[test]
    fn straight_segment_point_count() {
        let t = bare(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0)]);
        let d = densify_path(&t, 1.0).unwrap();
        assert_eq!(d.len(), 11);
        assert!((d.length() - 10.0).abs() < 1e-12);
        for (k, p) in d.points().iter().enumerate() {
            assert!((p.x - k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn last_length_matches_polyline() {
        let pts: Vec<_> = (0..37)
            .map(|i| {
                let a = i as f64 * 0.37;
                Vec3::new(a.cos() * 7.0 + a, a.sin() * 3.0, 0.2 * a * a)
            })
            .collect();
        let t = bare(pts.clone());
        let d = densify_path(&t, 0.7).unwrap();
        assert!((d.length() - t.path_length()).abs() < 1e-9);
        let c = d.cumulative_length();
        assert!(c.windows(2).all(|w| w[1] >= w[0]));
        for w in c.windows(2) {
            assert!(((w[1] - w[0]) / d.step() - 1.0).abs() < 1e-9);
        }
        assert!((d.step() - 0.7).abs() <= 0.35);
    }

    #[test]
    fn coarse_circle_length() {
        let pts: Vec<_> = (0..=360)
            .map(|i| {
                let a = TAU * i as f64 / 360.0;
                Vec3::new(100.0 * a.cos(), 100.0 * a.sin(), 0.0)
            })
            .collect();
        let d = densify_path(&bare(pts), 1.0).unwrap();
        let exact = TAU * 100.0;
        assert!((d.length() - exact).abs() / exact < 0.005);
    }

    #[test]
    fn duplicates_removed_and_degenerate_rejected() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        let t = bare(vec![p, p, p + Vec3::new(3.0, 0.0, 0.0), p + Vec3::new(3.0, 0.0, 0.0)]);
        let d = densify_path(&t, 1.0).unwrap();
        assert_eq!(d.len(), 4);
        assert!(densify_path(&bare(vec![p, p]), 1.0).is_err());
        assert!(densify_path(&t, 0.0).is_err());
    }

    #[test]
    fn smoothing_recovers_circle_from_coarse_samples() {
        let r = 50.0;
        let pts: Vec<_> = (0..=24)
            .map(|i| {
                let a = TAU * i as f64 / 24.0;
                Vec3::new(r * a.cos(), r * a.sin(), 0.0)
            })
            .collect();
        let times: Vec<f64> = (0..=24).map(|i| i as f64).collect();
        let (sp, st) = smooth_samples(&pts, &times, 0.5);
        assert!(sp.windows(2).all(|w| w[0].distance(w[1]) <= 0.5 + 1e-9));
        assert!(st.windows(2).all(|w| w[1] >= w[0]));
        let worst = sp.iter().map(|p| (p.norm() - r).abs()).fold(0.0, f64::max);
        assert!(worst < 0.3, "radial error {worst}");
    }

    #[test]
    fn point_at_length_interpolates() {
        let t = bare(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(4.0, 0.0, 0.0), Vec3::new(4.0, 4.0, 0.0)]);
        let d = densify_path(&t, 1.0).unwrap();
        assert!(d.point_at_length(5.5).distance(Vec3::new(4.0, 1.5, 0.0)) < 1e-12);
        assert_eq!(d.point_at_length(-1.0), d.points()[0]);
        assert_eq!(d.point_at_length(100.0), *d.points().last().unwrap());
    }

    #[test]
    fn kinematic_pipeline_times_a_zigzag() {
        let pts: Vec<Vec3<f64>> = (0..7)
            .map(|k| Vec3::new(10.0 * k as f64, if k % 2 == 0 { 0.0 } else { 15.0 }, 0.0))
            .collect();
        let traj = Trajectory3D::bare(pts).unwrap();
        let ks = synthesize_kinematics(&traj, None, 60.0, 4).unwrap();
        assert_eq!(ks.salient.len(), 7);
        let t = ks.trajectory.times().unwrap();
        let dur = t[t.len() - 1];
        assert!((dur - 0.6).abs() <= 0.2 * 0.6, "{dur}");
        let end = *ks.trajectory.positions().last().unwrap();
        assert!(end.distance(Vec3::new(60.0, 0.0, 0.0)) <= ks.path.step() * 1.01);
        assert_eq!(synthesize_kinematics(&traj, None, 60.0, 4).unwrap(), ks);
        let line = Trajectory3D::bare(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 50.0, 0.0)]).unwrap();
        let ks = synthesize_kinematics(&line, None, 60.0, 4).unwrap();
        assert_eq!(ks.salient.len(), 2);
        assert_eq!(ks.profile.strokes.len(), 1);
    }
}
