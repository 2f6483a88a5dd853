use crate::error::{Error, Result};
use crate::model::Trajectory3D;
use crate::scalar::{to_f64, Scalar};
use std::f64::consts::PI;

pub const FEATURE_DIMS: usize = 9;
pub const DEFAULT_BINS: usize = 16;
const MIN_SAMPLES: usize = 5;

/// Position, velocity and acceleration per sample, z-scored per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub rows: Vec<[f64; FEATURE_DIMS]>,
}

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Sample times, or sample indices for bare trajectories.
fn time_axis<S: Scalar>(traj: &Trajectory3D<S>) -> Vec<f64> {
    match traj.times() {
        Some(t) => t.iter().map(|v| to_f64(*v)).collect(),
        None => (0..traj.len()).map(|k| k as f64).collect(),
    }
}

/// Central differences inside, one-sided at the ends.
fn derivative(t: &[f64], x: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let dt = t[b] - t[a];
            [0, 1, 2].map(|k| (x[b][k] - x[a][k]) / dt)
        })
        .collect()
}

struct Kinematics {
    vel: Vec<[f64; 3]>,
    rows: Vec<[f64; FEATURE_DIMS]>,
    /// Natural magnitude of position, velocity and acceleration.
    scales: [f64; 3],
}

fn kinematics<S: Scalar>(traj: &Trajectory3D<S>) -> Result<Kinematics> {
    if traj.len() < MIN_SAMPLES {
        return Err(Error::TooShort {
            what: "trajectory for features",
            needed: MIN_SAMPLES,
            got: traj.len(),
        });
    }
    let t = time_axis(traj);
    let pos: Vec<[f64; 3]> = traj.positions().iter().map(|p| p.to_f64()).collect();
    let vel = derivative(&t, &pos);
    let acc = derivative(&t, &vel);
    let extent = (0..3)
        .map(|k| {
            let (lo, hi) = pos.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])));
            hi - lo
        })
        .fold(0.0, f64::max);
    let span = t[t.len() - 1] - t[0];
    let scales = [extent, extent / span, extent / (span * span)];
    let rows = (0..pos.len())
        .map(|i| {
            let (p, v, a) = (pos[i], vel[i], acc[i]);
            [p[0], p[1], p[2], v[0], v[1], v[2], a[0], a[1], a[2]]
        })
        .collect();
    Ok(Kinematics { vel, rows, scales })
}

/// Trajectory, first and second derivatives, each dimension z-scored over
/// the sequence; dimensions constant up to rounding become zero.
pub fn extract_features<S: Scalar>(traj: &Trajectory3D<S>) -> Result<FeatureSequence> {
    let Kinematics { mut rows, scales, .. } = kinematics(traj)?;
    let n = rows.len() as f64;
    for d in 0..FEATURE_DIMS {
        let mean = rows.iter().map(|r| r[d]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[d] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        let flat = !(sd > 1e-9 * scales[d / 3]);
        for r in rows.iter_mut() {
            r[d] = if flat { 0.0 } else { (r[d] - mean) / sd };
        }
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite features".into()));
    }
    Ok(FeatureSequence { rows })
}

/// Concatenated normalized histograms of speed, the three velocity
/// components, turning angle, azimuth and polar angle of the velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFeature {
    pub values: Vec<f64>,
    pub bins: usize,
}

impl HistogramFeature {
    pub const QUANTITIES: usize = 7;

    pub fn blocks(&self) -> usize {
        self.values.len() / self.bins
    }
}

fn histogram(samples: impl Iterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let mut n = 0.0;
    for v in samples {
        let f = ((v - lo) / (hi - lo) * bins as f64).floor();
        let k = if f.is_nan() { 0 } else { f.clamp(0.0, (bins - 1) as f64) as usize };
        h[k] += 1.0;
        n += 1.0;
    }
    if n > 0.0 {
        h.iter_mut().for_each(|v| *v /= n);
    } else {
        h.iter_mut().for_each(|v| *v = 1.0 / bins as f64);
    }
    h
}

/// Histogram feature with `bins` bins per quantity. Speeds and velocity
/// components are scaled by the mean speed so the feature is independent of
/// size and tempo; direction quantities skip samples at rest.
pub fn extract_histograms<S: Scalar>(traj: &Trajectory3D<S>, bins: usize) -> Result<HistogramFeature> {
    if bins == 0 {
        return Err(Error::ParameterDomain("histograms need at least one bin".into()));
    }
    let vel = kinematics(traj)?.vel;
    let speed: Vec<f64> = vel.iter().map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()).collect();
    let mean = speed.iter().sum::<f64>() / speed.len() as f64;
    let scale = if mean > 0.0 { 1.0 / mean } else { 0.0 };
    let moving: Vec<usize> = (0..vel.len()).filter(|&i| speed[i] > 1e-3 * mean && mean > 0.0).collect();
    let mut values = Vec::with_capacity(bins * HistogramFeature::QUANTITIES);
    values.extend(histogram(speed.iter().map(|s| s * scale), 0.0, 4.0, bins));
    for k in 0..3 {
        values.extend(histogram(vel.iter().map(|v| v[k] * scale), -3.0, 3.0, bins));
    }
    let turning = moving.windows(2).filter(|w| w[1] == w[0] + 1).map(|w| {
        let (a, b) = (vel[w[0]], vel[w[1]]);
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        (dot / (speed[w[0]] * speed[w[1]])).clamp(-1.0, 1.0).acos()
    });
    values.extend(histogram(turning, 0.0, PI, bins));
    values.extend(histogram(moving.iter().map(|&i| vel[i][1].atan2(vel[i][0])), -PI, PI, bins));
    values.extend(histogram(
        moving.iter().map(|&i| (vel[i][2] / speed[i]).clamp(-1.0, 1.0).acos()),
        0.0,
        PI,
        bins,
    ));
    Ok(HistogramFeature { values, bins })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;

    fn sampled(points: Vec<Vec3<f64>>) -> Trajectory3D<f64> {
        Trajectory3D::sampled(0.0, 60.0, points).unwrap()
    }

    #[test]
    fn constant_trajectory_is_all_zero() {
        let t = sampled(vec![Vec3::new(1.0, 2.0, 3.0); 10]);
        let f = extract_features(&t).unwrap();
        assert_eq!(f.len(), 10);
        assert!(f.rows.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_motion() {
        let t = sampled((0..20).map(|k| Vec3::new(k as f64, 2.0 * k as f64, 5.0)).collect());
        let f = extract_features(&t).unwrap();
        assert_eq!(f.len(), 20);
        for r in &f.rows {
            assert!(r[3..].iter().all(|v| v.abs() < 1e-9), "{r:?}");
            assert_eq!(r[2], 0.0);
        }
        // position dims are z-scored
        let mean: f64 = f.rows.iter().map(|r| r[0]).sum::<f64>() / 20.0;
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn too_short_rejected() {
        let t = sampled(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)]);
        assert!(extract_features(&t).is_err());
    }

    #[test]
    fn histograms_sum_to_one() {
        let t = sampled(
            (0..50)
                .map(|k| {
                    let a = k as f64 * 0.2;
                    Vec3::new(a.cos() * 10.0, a.sin() * 7.0, a)
                })
                .collect(),
        );
        let h = extract_histograms(&t, DEFAULT_BINS).unwrap();
        assert_eq!(h.blocks(), HistogramFeature::QUANTITIES);
        for b in h.values.chunks(h.bins) {
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let rest = sampled(vec![Vec3::new(1.0, 1.0, 1.0); 8]);
        let h = extract_histograms(&rest, 4).unwrap();
        for b in h.values.chunks(4) {
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
