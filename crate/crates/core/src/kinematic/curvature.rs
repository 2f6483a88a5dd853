use super::DensePath3D;
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Coordinate plane a curvature is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Xy, Plane::Xz, Plane::Yz];

    pub fn axes(self) -> (usize, usize) {
        match self {
            Plane::Xy => (0, 1),
            Plane::Xz => (0, 2),
            Plane::Yz => (1, 2),
        }
    }

    fn bit(self) -> u8 {
        match self {
            Plane::Xy => 1,
            Plane::Xz => 2,
            Plane::Yz => 4,
        }
    }
}

/// Set of planes a salient point was detected in. Endpoints that no plane
/// selected carry an empty set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct PlaneTags(u8);

impl PlaneTags {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn contains(self, p: Plane) -> bool {
        self.0 & p.bit() != 0
    }

    pub fn insert(&mut self, p: Plane) {
        self.0 |= p.bit();
    }

    pub fn union(self, o: Self) -> Self {
        Self(self.0 | o.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn planes(self) -> impl Iterator<Item = Plane> {
        Plane::ALL.into_iter().filter(move |p| self.contains(*p))
    }
}

/// Sorted, unique indices into a dense path, endpoints included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SalientPointSet {
    pub indices: Vec<usize>,
    pub tags: Vec<PlaneTags>,
}

impl SalientPointSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Endpoints only.
    pub fn endpoints(path_len: usize) -> Self {
        Self {
            indices: vec![0, path_len - 1],
            tags: vec![PlaneTags::empty(); 2],
        }
    }
}

/// Curvature of the projection onto `plane`, with first and second
/// derivatives taken by finite differences over `scale` points on each side
/// (one-sided spans are shortened at the ends; the two endpoints get 0).
pub fn plane_curvature<S: Scalar>(path: &DensePath3D<S>, plane: Plane, scale: usize) -> Result<Vec<S>> {
    let m = path.len();
    if scale == 0 {
        return Err(Error::ParameterDomain("curvature scale must be >= 1".into()));
    }
    if m <= 2 * scale {
        return Err(Error::TooShort {
            what: "dense path for curvature scale",
            needed: 2 * scale + 1,
            got: m,
        });
    }
    let (ax, ay) = plane.axes();
    let pts = path.points();
    let h = path.step();
    let floor: S = lit(1e-12);
    let two: S = lit(2.0);
    Ok((0..m)
        .map(|i| {
            let lo = i.saturating_sub(scale);
            let hi = (i + scale).min(m - 1);
            let (a, b) = (i - lo, hi - i);
            if a == 0 || b == 0 {
                return S::zero();
            }
            let h1 = from_usize::<S>(a) * h;
            let h2 = from_usize::<S>(b) * h;
            let den = h1 * h2 * (h1 + h2);
            let d1 = |c: usize| {
                let (xm, x0, xp) = (pts[lo].axis(c), pts[i].axis(c), pts[hi].axis(c));
                (h1 * h1 * xp - h2 * h2 * xm + (h2 * h2 - h1 * h1) * x0) / den
            };
            let d2 = |c: usize| {
                let (xm, x0, xp) = (pts[lo].axis(c), pts[i].axis(c), pts[hi].axis(c));
                two * (h1 * xp - (h1 + h2) * x0 + h2 * xm) / den
            };
            let (dx, dy, ddx, ddy) = (d1(ax), d1(ay), d2(ax), d2(ay));
            let speed2 = dx * dx + dy * dy;
            (ddy * dx - ddx * dy).abs() / (speed2 * speed2.sqrt()).max(floor)
        })
        .collect())
}

/// Twelve integer scales spread uniformly over `[1, (M-1)/2]`, deduplicated.
pub fn salient_scales(m: usize) -> Vec<usize> {
    let hi = ((m.saturating_sub(1)) / 2).max(1) as f64;
    let mut out: Vec<usize> = (0..12)
        .map(|k| (1.0 + k as f64 * (hi - 1.0) / 11.0).round() as usize)
        .collect();
    out.dedup();
    out
}

const MIN_PATH_POINTS: usize = 24;

/// Selects points of maximal multiscale curvature. Per plane the curvature
/// is summed over [`salient_scales`]; local maxima whose prominence divided
/// by their width at half prominence exceeds `(max C - min C) / 45` are kept.
/// Planes are merged with a tolerance of two path steps and the endpoints
/// are always present.
pub fn detect_salient_points<S: Scalar>(path: &DensePath3D<S>) -> Result<SalientPointSet> {
    let m = path.len();
    if m < MIN_PATH_POINTS {
        return Err(Error::TooShort {
            what: "dense path for salient point detection",
            needed: MIN_PATH_POINTS,
            got: m,
        });
    }
    let scales = salient_scales(m);
    let mut found: Vec<(usize, Plane)> = Vec::new();
    for plane in Plane::ALL {
        let mut c = vec![0.0f64; m];
        for &s in &scales {
            for (acc, k) in c.iter_mut().zip(plane_curvature(path, plane, s)?) {
                *acc += k.to_f64().unwrap_or(0.0);
            }
        }
        let inv_step = 1.0 / path.step().to_f64().unwrap_or(1.0);
        found.extend(curvature_peaks(&c, 1e-6 * inv_step).into_iter().map(|i| (i, plane)));
    }
    Ok(merge(found, m))
}

/// Peak selection on summed curvature `c`; nothing is selected when the
/// dynamic range is below `flat`.
fn curvature_peaks(c: &[f64], flat: f64) -> Vec<usize> {
    let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(*v), b.max(*v))
    });
    let range = hi - lo;
    if !(range > flat) {
        return Vec::new();
    }
    let threshold = range / 45.0;
    local_maxima(c)
        .into_iter()
        .filter(|&p| {
            let (prom, width) = prominence_and_width(c, p);
            prom > 0.0 && width > 0.0 && prom / width > threshold
        })
        .collect()
}

/// Strict local maxima; a flat top is reported at its middle.
fn local_maxima(c: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < c.len() {
        if c[i - 1] < c[i] {
            let mut j = i;
            while j + 1 < c.len() - 1 && c[j + 1] == c[i] {
                j += 1;
            }
            if c[j + 1] < c[i] {
                out.push((i + j) / 2);
                i = j + 1;
                continue;
            }
            i = j;
        }
        i += 1;
    }
    out
}

/// Topographic prominence of the peak at `p` and its full width (in
/// samples, linearly interpolated) at half prominence.
fn prominence_and_width(c: &[f64], p: usize) -> (f64, f64) {
    let top = c[p];
    let (mut left_min, mut left_base) = (top, p);
    for k in (0..p).rev() {
        if c[k] > top {
            break;
        }
        if c[k] < left_min {
            left_min = c[k];
            left_base = k;
        }
    }
    let (mut right_min, mut right_base) = (top, p);
    for (k, v) in c.iter().enumerate().skip(p + 1) {
        if *v > top {
            break;
        }
        if *v < right_min {
            right_min = *v;
            right_base = k;
        }
    }
    let prom = top - left_min.max(right_min);
    let level = top - prom / 2.0;
    let mut left = left_base as f64;
    for k in (left_base..p).rev() {
        if c[k] < level {
            left = k as f64 + (level - c[k]) / (c[k + 1] - c[k]);
            break;
        }
    }
    let mut right = right_base as f64;
    for k in p + 1..=right_base {
        if c[k] < level {
            right = k as f64 - (level - c[k]) / (c[k - 1] - c[k]);
            break;
        }
    }
    (prom, right - left)
}

/// Unions per-plane detections, collapsing runs closer than two path steps
/// and absorbing detections next to the endpoints.
fn merge(mut found: Vec<(usize, Plane)>, m: usize) -> SalientPointSet {
    const TOL: usize = 2;
    found.sort_by_key(|(i, _)| *i);
    let mut clusters: Vec<(Vec<usize>, PlaneTags)> = Vec::new();
    for (i, plane) in found {
        match clusters.last_mut() {
            Some((members, tags)) if i - *members.last().unwrap() <= TOL => {
                members.push(i);
                tags.insert(plane);
            }
            _ => {
                let mut tags = PlaneTags::empty();
                tags.insert(plane);
                clusters.push((vec![i], tags));
            }
        }
    }
    let mut out = SalientPointSet::endpoints(m);
    let mut interior = Vec::new();
    for (members, tags) in clusters {
        let centre = (members.iter().sum::<usize>() as f64 / members.len() as f64).round() as usize;
        if centre <= TOL {
            out.tags[0] = out.tags[0].union(tags);
        } else if centre + TOL >= m - 1 {
            out.tags[1] = out.tags[1].union(tags);
        } else {
            interior.push((centre, tags));
        }
    }
    interior.dedup_by(|b, a| {
        if b.0 == a.0 {
            a.1 = a.1.union(b.1);
            true
        } else {
            false
        }
    });
    let last_tag = out.tags.pop().unwrap();
    let last = out.indices.pop().unwrap();
    for (i, t) in interior {
        out.indices.push(i);
        out.tags.push(t);
    }
    out.indices.push(last);
    out.tags.push(last_tag);
    out
}
