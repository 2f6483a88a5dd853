//! Single-stroke uppercase letter skeletons in a unit box (height 1, y up).
//! Each letter is traced as one continuous on-air movement.

const A: &[[f64; 2]] = &[[0.0, 0.0], [0.35, 1.0], [0.7, 0.0], [0.55, 0.42], [0.15, 0.42]];
const B: &[[f64; 2]] = &[[0.0, 0.0], [0.0, 1.0], [0.5, 0.78], [0.05, 0.52], [0.6, 0.25], [0.0, 0.02]];
const C: &[[f64; 2]] = &[[0.62, 0.85], [0.3, 1.0], [0.0, 0.5], [0.3, 0.0], [0.62, 0.15]];
const D: &[[f64; 2]] = &[[0.0, 0.0], [0.0, 1.0], [0.6, 0.62], [0.5, 0.15], [0.02, 0.0]];
const E: &[[f64; 2]] = &[[0.6, 1.0], [0.0, 1.0], [0.05, 0.5], [0.45, 0.5], [0.0, 0.0], [0.6, 0.0]];
const F: &[[f64; 2]] = &[[0.6, 1.0], [0.0, 1.0], [0.0, 0.0], [0.05, 0.5], [0.45, 0.5]];
const G: &[[f64; 2]] = &[[0.62, 0.85], [0.3, 1.0], [0.0, 0.5], [0.3, 0.0], [0.65, 0.3], [0.35, 0.4]];
const H: &[[f64; 2]] = &[[0.0, 1.0], [0.0, 0.0], [0.05, 0.5], [0.6, 0.5], [0.6, 1.0], [0.62, 0.0]];
const I: &[[f64; 2]] = &[[0.1, 1.0], [0.1, 0.0], [0.12, 0.05]];
const J: &[[f64; 2]] = &[[0.6, 1.0], [0.55, 0.15], [0.25, 0.0], [0.0, 0.25]];
const K: &[[f64; 2]] = &[[0.0, 1.0], [0.0, 0.0], [0.05, 0.4], [0.6, 1.0], [0.2, 0.55], [0.65, 0.0]];
const L: &[[f64; 2]] = &[[0.0, 1.0], [0.0, 0.0], [0.55, 0.02]];
const M: &[[f64; 2]] = &[[0.0, 0.0], [0.05, 1.0], [0.4, 0.3], [0.75, 1.0], [0.8, 0.0]];
const N: &[[f64; 2]] = &[[0.0, 0.0], [0.0, 1.0], [0.6, 0.0], [0.62, 1.0]];
const O: &[[f64; 2]] = &[[0.35, 1.0], [0.0, 0.5], [0.35, 0.0], [0.7, 0.5], [0.37, 0.98]];
const P: &[[f64; 2]] = &[[0.0, 0.0], [0.0, 1.0], [0.55, 0.8], [0.05, 0.5]];
const Q: &[[f64; 2]] = &[[0.35, 1.0], [0.0, 0.5], [0.35, 0.0], [0.7, 0.5], [0.37, 0.98], [0.75, -0.1]];
const R: &[[f64; 2]] = &[[0.0, 0.0], [0.0, 1.0], [0.55, 0.8], [0.05, 0.5], [0.6, 0.0]];
const S: &[[f64; 2]] = &[[0.6, 0.88], [0.3, 1.0], [0.05, 0.72], [0.55, 0.3], [0.3, 0.0], [0.0, 0.12]];
const T: &[[f64; 2]] = &[[0.0, 1.0], [0.7, 1.0], [0.35, 1.0], [0.36, 0.0]];
const U: &[[f64; 2]] = &[[0.0, 1.0], [0.05, 0.2], [0.35, 0.0], [0.62, 0.2], [0.65, 1.0]];
const V: &[[f64; 2]] = &[[0.0, 1.0], [0.35, 0.0], [0.7, 1.0]];
const W: &[[f64; 2]] = &[[0.0, 1.0], [0.2, 0.0], [0.45, 0.7], [0.7, 0.0], [0.9, 1.0]];
const X: &[[f64; 2]] = &[[0.0, 1.0], [0.6, 0.0], [0.3, 0.5], [0.6, 1.0], [0.0, 0.0]];
const Y: &[[f64; 2]] = &[[0.0, 1.0], [0.35, 0.5], [0.7, 1.0], [0.35, 0.5], [0.36, 0.0]];
const Z: &[[f64; 2]] = &[[0.0, 1.0], [0.65, 1.0], [0.0, 0.0], [0.65, 0.02]];

const TABLE: [&[[f64; 2]]; 26] = [
    A, B, C, D, E, F, G, H, I, J, K, L, M, N, O, P, Q, R, S, T, U, V, W, X, Y, Z,
];

/// Skeleton of an uppercase ASCII letter (case-insensitive).
pub fn template(letter: char) -> Option<&'static [[f64; 2]]> {
    let c = letter.to_ascii_uppercase();
    c.is_ascii_uppercase()
        .then(|| TABLE[(c as u8 - b'A') as usize])
}

/// Horizontal extent of a template.
pub fn width(points: &[[f64; 2]]) -> f64 {
    let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

/// Resamples a skeleton to exactly `n >= 2` points: splits the longest
/// segment while short, drops the interior point with the least turning
/// while long.
pub fn resample(points: &[[f64; 2]], n: usize) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    let n = n.max(2);
    while pts.len() < n {
        let (i, _) = pts
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .enumerate()
            .fold((0, -1.0), |best, (i, d)| if d > best.1 { (i, d) } else { best });
        let a = pts[i];
        let b = pts[i + 1];
        pts.insert(i + 1, [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
    }
    while pts.len() > n {
        let (i, _) = (1..pts.len() - 1)
            .map(|i| {
                let u = [pts[i][0] - pts[i - 1][0], pts[i][1] - pts[i - 1][1]];
                let v = [pts[i + 1][0] - pts[i][0], pts[i + 1][1] - pts[i][1]];
                let turn = (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]).abs();
                (i, turn)
            })
            .fold((1, f64::INFINITY), |best, (i, t)| if t < best.1 { (i, t) } else { best });
        pts.remove(i);
    }
    pts
}
