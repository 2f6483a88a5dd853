use super::features::{FeatureSequence, HistogramFeature, FEATURE_DIMS};
use crate::error::{Error, Result};

fn euclidean(a: &[f64; FEATURE_DIMS], b: &[f64; FEATURE_DIMS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Dynamic time warping with Euclidean local cost and diagonal/up/left
/// steps, divided by the length of the optimal path (ties go to the
/// shorter path). Empty input gives infinity.
pub fn dtw_distance(a: &FeatureSequence, b: &FeatureSequence) -> f64 {
    let (a, b) = (&a.rows, &b.rows);
    let m = b.len();
    if a.is_empty() || m == 0 {
        return f64::INFINITY;
    }
    let better = |p: (f64, u32), q: (f64, u32)| if q.0 < p.0 || (q.0 == p.0 && q.1 < p.1) { q } else { p };
    let mut prev = vec![(f64::INFINITY, 0u32); m];
    let mut cur = vec![(f64::INFINITY, 0u32); m];
    for (i, ra) in a.iter().enumerate() {
        for j in 0..m {
            let c = euclidean(ra, &b[j]);
            let best = if i == 0 && j == 0 {
                (0.0, 0)
            } else {
                let mut best = (f64::INFINITY, u32::MAX);
                if i > 0 && j > 0 {
                    best = better(best, prev[j - 1]);
                }
                if i > 0 {
                    best = better(best, prev[j]);
                }
                if j > 0 {
                    best = better(best, cur[j - 1]);
                }
                best
            };
            cur[j] = (best.0 + c, best.1 + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (cost, len) = prev[m - 1];
    cost / len as f64
}

/// L1 distance between histogram features.
pub fn man_distance(a: &HistogramFeature, b: &HistogramFeature) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::InvalidInput(format!(
            "histogram dimensions differ ({} vs {})",
            a.values.len(),
            b.values.len()
        )));
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[f64]) -> FeatureSequence {
        FeatureSequence {
            rows: v.iter().map(|x| [*x, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).collect(),
        }
    }

    #[test]
    fn identity_and_symmetry() {
        let a = seq(&[0.0, 1.0, 2.0, 1.5, -1.0]);
        let b = seq(&[0.5, 2.0, 2.0, -0.5]);
        assert_eq!(dtw_distance(&a, &a), 0.0);
        assert!((dtw_distance(&a, &b) - dtw_distance(&b, &a)).abs() < 1e-9);
    }

    #[test]
    fn single_samples() {
        let mut u = seq(&[1.0]);
        u.rows[0][4] = 2.0;
        let v = seq(&[-2.0]);
        assert!((dtw_distance(&u, &v) - 13f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn warping_absorbs_repetition() {
        let a = seq(&[0.0, 1.0, 2.0]);
        let b = seq(&[0.0, 0.0, 1.0, 1.0, 2.0]);
        assert_eq!(dtw_distance(&a, &b), 0.0);
    }

    #[test]
    fn brute_force_agrees() {
        // exhaustive search over monotone paths on a small grid
        fn brute(a: &[f64], b: &[f64], i: usize, j: usize) -> Vec<(f64, usize)> {
            let c = (a[i] - b[j]).abs();
            if i == 0 && j == 0 {
                return vec![(c, 1)];
            }
            let mut out = Vec::new();
            for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
                if i >= di && j >= dj {
                    for (s, l) in brute(a, b, i - di, j - dj) {
                        out.push((s + c, l + 1));
                    }
                }
            }
            out
        }
        let a = [0.3, -1.0, 2.0, 0.7];
        let b = [1.0, 0.0, 2.5];
        let paths = brute(&a, &b, 3, 2);
        let best = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let len = paths.iter().filter(|p| p.0 == best).map(|p| p.1).min().unwrap();
        assert!((dtw_distance(&seq(&a), &seq(&b)) - best / len as f64).abs() < 1e-12);
    }

    #[test]
    fn manhattan() {
        let h = |v: Vec<f64>| HistogramFeature { values: v, bins: 2 };
        assert_eq!(man_distance(&h(vec![0.5, 0.5]), &h(vec![0.5, 0.5])).unwrap(), 0.0);
        assert_eq!(man_distance(&h(vec![1.0, 0.0]), &h(vec![0.0, 1.0])).unwrap(), 2.0);
        let a = h(vec![1.0, 0.0, 0.0, 1.0]);
        let b = h(vec![0.0, 1.0, 1.0, 0.0]);
        assert!(man_distance(&a, &b).unwrap() <= 2.0 * 2.0);
        assert!(man_distance(&a, &h(vec![1.0, 0.0])).is_err());
    }
}
