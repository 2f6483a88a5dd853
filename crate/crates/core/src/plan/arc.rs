use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::{lit, Scalar};

/// Relative area below which three points are treated as collinear.
const COLLINEAR_TOL: f64 = 1e-9;

/// Circular arc in a plane, or a straight segment when the three defining
/// points are collinear.
///
/// The arc runs counter-clockwise about `plane_normal` from `start_angle`
/// (always 0) to `end_angle`, angles measured from `basis_u` toward
/// `plane_normal x basis_u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarArc<S> {
    pub center: Vec3<S>,
    pub radius: S,
    pub plane_normal: Vec3<S>,
    pub basis_u: Vec3<S>,
    pub start_angle: S,
    pub end_angle: S,
    pub is_degenerate_segment: bool,
    pub start: Vec3<S>,
    pub end: Vec3<S>,
}

impl<S: Scalar> PlanarArc<S> {
    /// Straight segment from `p1` to `p2`.
    pub fn segment(p1: Vec3<S>, p2: Vec3<S>) -> Result<Self> {
        let chord = p2 - p1;
        let dir = chord
            .normalized()
            .ok_or_else(|| Error::Degenerate("arc endpoints coincide".into()))?;
        Ok(Self {
            center: p1.lerp(p2, lit(0.5)),
            radius: S::infinity(),
            plane_normal: dir.any_orthogonal(),
            basis_u: dir,
            start_angle: S::zero(),
            end_angle: S::zero(),
            is_degenerate_segment: true,
            start: p1,
            end: p2,
        })
    }

    /// Fits the circle through `p1`, `pm`, `p2` and keeps the arc from `p1`
    /// to `p2` that passes through `pm`.
    pub fn fit(p1: Vec3<S>, p2: Vec3<S>, pm: Vec3<S>) -> Result<Self> {
        let chord = p2 - p1;
        let chord2 = chord.norm_sq();
        if !(chord2 > S::zero()) || chord.normalized().is_none() {
            return Err(Error::Degenerate("arc endpoints coincide".into()));
        }
        let twice_area = chord.cross(pm - p1).norm();
        if twice_area * lit(0.5) < lit::<S>(COLLINEAR_TOL) * chord2 {
            return Self::segment(p1, p2);
        }
        let a = p1 - pm;
        let b = p2 - pm;
        let axb = a.cross(b);
        let center = pm + (b * a.norm_sq() - a * b.norm_sq()).cross(axb) / (lit::<S>(2.0) * axb.norm_sq());
        let radius = (p1 - center).norm();
        let normal = (pm - p1).cross(p2 - pm).normalized().ok_or_else(|| {
            Error::Degenerate("could not determine arc plane".into())
        })?;
        let u = (p1 - center) / radius;
        let v = normal.cross(u);
        let r2 = p2 - center;
        let mut sweep = r2.dot(v).atan2(r2.dot(u));
        if sweep <= S::zero() {
            sweep += S::TAU();
        }
        Ok(Self {
            center,
            radius,
            plane_normal: normal,
            basis_u: u,
            start_angle: S::zero(),
            end_angle: sweep,
            is_degenerate_segment: false,
            start: p1,
            end: p2,
        })
    }

    /// Arc from `p1` to `p2` whose start and end tangents best match `ts`
    /// and `te`. The arc turns by the mean of the two tangent-to-chord
    /// angles, in the plane spanned by the tangents and the chord.
    pub fn from_tangents(p1: Vec3<S>, p2: Vec3<S>, ts: Vec3<S>, te: Vec3<S>) -> Result<Self> {
        let chord = p2 - p1;
        let c = chord
            .normalized()
            .ok_or_else(|| Error::Degenerate("arc endpoints coincide".into()))?;
        let (Some(ts), Some(te)) = (ts.normalized(), te.normalized()) else {
            return Self::segment(p1, p2);
        };
        let angle = |a: Vec3<S>, b: Vec3<S>| a.dot(b).max(-S::one()).min(S::one()).acos();
        let half = (angle(ts, c) + angle(c, te)) * lit(0.5);
        let tiny = lit::<S>(1e-9);
        let Some(normal) = (ts.cross(c) + c.cross(te)).normalized() else {
            return Self::segment(p1, p2);
        };
        if half < tiny {
            return Self::segment(p1, p2);
        }
        // keep away from the full-circle singularity
        let half = half.min(S::PI() - lit(1e-3));
        let len = chord.norm();
        let radius = len / (lit::<S>(2.0) * half.sin());
        let center = p1.lerp(p2, lit(0.5)) + normal.cross(c) * (radius * half.cos());
        let u = (p1 - center) / radius;
        Ok(Self {
            center,
            radius,
            plane_normal: normal,
            basis_u: u,
            start_angle: S::zero(),
            end_angle: lit::<S>(2.0) * half,
            is_degenerate_segment: false,
            start: p1,
            end: p2,
        })
    }

    pub fn chord_length(&self) -> S {
        self.start.distance(self.end)
    }

    /// Signed angle swept by the arc (zero for a segment).
    pub fn sweep(&self) -> S {
        self.end_angle - self.start_angle
    }

    pub fn length(&self) -> S {
        if self.is_degenerate_segment {
            self.chord_length()
        } else {
            self.radius * self.sweep().abs()
        }
    }

    /// Point at arc length `s` from the start. Values past the ends continue
    /// along the circle (or line).
    pub fn point_at(&self, s: S) -> Vec3<S> {
        if self.is_degenerate_segment {
            return self.start + self.basis_u * s;
        }
        let th = self.start_angle + s / self.radius;
        let v = self.plane_normal.cross(self.basis_u);
        self.center + (self.basis_u * th.cos() + v * th.sin()) * self.radius
    }

    /// Unit tangent at arc length `s`.
    pub fn tangent_at(&self, s: S) -> Vec3<S> {
        if self.is_degenerate_segment {
            return self.basis_u;
        }
        let th = self.start_angle + s / self.radius;
        let v = self.plane_normal.cross(self.basis_u);
        v * th.cos() - self.basis_u * th.sin()
    }

    pub fn midpoint(&self) -> Vec3<S> {
        self.point_at(self.length() * lit(0.5))
    }

    /// Distance from `p` to the (full) circle or line carrying the arc.
    pub fn distance_to_carrier(&self, p: Vec3<S>) -> S {
        if self.is_degenerate_segment {
            let d = p - self.start;
            return (d - self.basis_u * d.dot(self.basis_u)).norm();
        }
        let d = p - self.center;
        let off_plane = d.dot(self.plane_normal);
        let in_plane = (d - self.plane_normal * off_plane).norm();
        (off_plane * off_plane + (in_plane - self.radius).powi(2)).sqrt()
    }

    /// Azimuth/polar angles of the start and end tangents, with the azimuth
    /// unwrapped along the arc so its difference follows the actual turning.
    pub fn tangent_angles(&self) -> (S, S, S, S) {
        let (theta_s, phi_s) = self.tangent_at(S::zero()).to_spherical();
        let len = self.length();
        let (_, phi_e) = self.tangent_at(len).to_spherical();
        if self.is_degenerate_segment {
            return (theta_s, theta_s, phi_s, phi_e);
        }
        const STEPS: usize = 64;
        let mut theta = theta_s;
        let mut prev = theta_s;
        for k in 1..=STEPS {
            let s = len * lit::<S>(k as f64 / STEPS as f64);
            let (th, _) = self.tangent_at(s).to_spherical();
            theta += crate::scalar::wrap_angle(th - prev);
            prev = th;
        }
        (theta_s, theta, phi_s, phi_e)
    }
}
