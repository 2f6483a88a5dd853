/// One point of a detection-error trade-off sweep: accepting scores at or
/// below `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

/// FAR/FRR over every distinct score, starting from the all-reject point.
pub fn det_curve(genuine: &[f64], impostor: &[f64]) -> Vec<DetPoint> {
    let mut g: Vec<f64> = genuine.to_vec();
    let mut im: Vec<f64> = impostor.to_vec();
    g.sort_by(f64::total_cmp);
    im.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = g.iter().chain(&im).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let (ng, ni) = (g.len().max(1) as f64, im.len().max(1) as f64);
    let mut out = vec![DetPoint {
        threshold: f64::NEG_INFINITY,
        far: 0.0,
        frr: if g.is_empty() { 0.0 } else { 1.0 },
    }];
    let (mut a, mut b) = (0, 0);
    for t in thresholds {
        while a < g.len() && g[a] <= t {
            a += 1;
        }
        while b < im.len() && im[b] <= t {
            b += 1;
        }
        out.push(DetPoint {
            threshold: t,
            far: b as f64 / ni,
            frr: (g.len() - a) as f64 / ng,
        });
    }
    out
}

/// Equal error rate (fraction), interpolated linearly between the two sweep
/// points where FRR - FAR changes sign.
pub fn equal_error_rate(det: &[DetPoint]) -> f64 {
    for w in det.windows(2) {
        let d1 = w[0].frr - w[0].far;
        let d2 = w[1].frr - w[1].far;
        if d1 == 0.0 {
            return w[0].far;
        }
        if d1 > 0.0 && d2 <= 0.0 {
            let f = d1 / (d1 - d2);
            return w[0].far + f * (w[1].far - w[0].far);
        }
    }
    det.last().map_or(0.5, |p| (p.far + p.frr) / 2.0)
}

/// Area under the ROC (true-accept rate against FAR) by trapezoids.
pub fn area_under_curve(det: &[DetPoint]) -> f64 {
    let mut area = 0.0;
    let mut last = (0.0, 0.0);
    for p in det {
        let cur = (p.far, 1.0 - p.frr);
        area += (cur.0 - last.0) * (cur.1 + last.1) / 2.0;
        last = cur;
    }
    area + (1.0 - last.0) * (1.0 + last.1) / 2.0
}

/// FRR at each FAR of `grid`: the lowest FRR reachable without exceeding it.
pub fn frr_at(det: &[DetPoint], grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&g| {
            det.iter()
                .filter(|p| p.far <= g + 1e-12)
                .map(|p| p.frr)
                .fold(1.0, f64::min)
        })
        .collect()
}

/// FAR grid used to average DET curves.
pub fn far_grid() -> Vec<f64> {
    (0..=100).map(|k| k as f64 / 100.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn perfect_separation() {
        let det = det_curve(&[0.1, 0.2, 0.3], &[0.5, 0.9]);
        assert_eq!(equal_error_rate(&det), 0.0);
        assert!((area_under_curve(&det) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn monotone_sweep() {
        let mut r = rng::seeded(3);
        let g: Vec<f64> = (0..300).map(|_| r.gen::<f64>()).collect();
        let i: Vec<f64> = (0..200).map(|_| r.gen::<f64>() + 0.3).collect();
        let det = det_curve(&g, &i);
        for w in det.windows(2) {
            assert!(w[1].far >= w[0].far && w[1].frr <= w[0].frr);
        }
        let last = det.last().unwrap();
        assert_eq!((last.far, last.frr), (1.0, 0.0));
        let e = equal_error_rate(&det);
        assert!(e > 0.0 && e < 0.5);
    }

    #[test]
    fn identical_distributions() {
        let mut r = rng::seeded(11);
        let g: Vec<f64> = (0..10_000).map(|_| r.gen::<f64>()).collect();
        let i: Vec<f64> = (0..10_000).map(|_| r.gen::<f64>()).collect();
        let det = det_curve(&g, &i);
        assert!((equal_error_rate(&det) - 0.5).abs() < 0.03);
        assert!((area_under_curve(&det) - 0.5).abs() < 0.03);
    }

    #[test]
    fn interpolated_crossing() {
        // one genuine at 1, one impostor at 0: the classes are swapped
        let det = det_curve(&[1.0], &[0.0]);
        assert_eq!(equal_error_rate(&det), 1.0);
        let det = det_curve(&[0.0, 2.0], &[1.0, 3.0]);
        assert!((equal_error_rate(&det) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn frr_lookup() {
        let det = det_curve(&[0.1, 0.4], &[0.2, 0.3]);
        assert_eq!(frr_at(&det, &[0.0, 0.5, 1.0]), vec![0.5, 0.5, 0.0]);
    }
}
