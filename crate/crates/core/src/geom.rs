//! Minimal 3-vector used for points, directions and velocities.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Scalar> Vec3<S> {
    pub const fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self::new(lit(v[0]), lit(v[1]), lit(v[2]))
    }

    pub fn to_f64(self) -> [f64; 3] {
        [
            crate::scalar::to_f64(self.x),
            crate::scalar::to_f64(self.y),
            crate::scalar::to_f64(self.z),
        ]
    }

    pub fn dot(self, o: Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> S {
        self.dot(self)
    }

    pub fn norm(self) -> S {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, o: Self) -> S {
        (self - o).norm()
    }

    /// Unit vector, or `None` for a (near) zero vector.
    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > S::epsilon() * lit(16.0) && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn lerp(self, o: Self, f: S) -> Self {
        self + (o - self) * f
    }

    pub fn axis(self, a: usize) -> S {
        self[a]
    }

    pub fn with_axis(mut self, a: usize, v: S) -> Self {
        match a {
            0 => self.x = v,
            1 => self.y = v,
            _ => self.z = v,
        }
        self
    }

    /// Direction from azimuth `theta` (about z, from +x) and polar angle `phi` (from +z).
    pub fn from_spherical(theta: S, phi: S) -> Self {
        Self::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos())
    }

    /// Azimuth and polar angle of a direction.
    pub fn to_spherical(self) -> (S, S) {
        let n = self.norm();
        let theta = self.y.atan2(self.x);
        let c = if n > S::zero() { self.z / n } else { S::one() };
        let phi = c.max(-S::one()).min(S::one()).acos();
        (theta, phi)
    }

    /// Any unit vector orthogonal to `self` (which must be nonzero).
    pub fn any_orthogonal(self) -> Self {
        let a = if self.x.abs() <= self.y.abs() && self.x.abs() <= self.z.abs() {
            Self::new(S::one(), S::zero(), S::zero())
        } else if self.y.abs() <= self.z.abs() {
            Self::new(S::zero(), S::one(), S::zero())
        } else {
            Self::new(S::zero(), S::zero(), S::one())
        };
        self.cross(a).normalized().unwrap_or(a)
    }

    /// Rotates `self` about unit axis `k` by `angle` (Rodrigues).
    pub fn rotate_about(self, k: Self, angle: S) -> Self {
        let (s, c) = angle.sin_cos();
        self * c + k.cross(self) * s + k * (k.dot(self) * (S::one() - c))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<S: Scalar> Add for Vec3<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<S: Scalar> AddAssign for Vec3<S> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<S: Scalar> Sub for Vec3<S> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<S: Scalar> SubAssign for Vec3<S> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<S: Scalar> Mul<S> for Vec3<S> {
    type Output = Self;
    fn mul(self, k: S) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

impl<S: Scalar> Div<S> for Vec3<S> {
    type Output = Self;
    fn div(self, k: S) -> Self {
        Self::new(self.x / k, self.y / k, self.z / k)
    }
}

impl<S: Scalar> Neg for Vec3<S> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<S> Index<usize> for Vec3<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl<S: Scalar> std::iter::Sum for Vec3<S> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

/// Arithmetic mean of a point set (zero for an empty set).
pub fn centroid<S: Scalar>(points: &[Vec3<S>]) -> Vec3<S> {
    if points.is_empty() {
        return Vec3::zero();
    }
    points.iter().copied().sum::<Vec3<S>>() / crate::scalar::from_usize(points.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spherical_round_trip() {
        let v = Vec3::new(0.3f64, -0.4, 0.5).normalized().unwrap();
        let (t, p) = v.to_spherical();
        let w = Vec3::from_spherical(t, p);
        assert!((v - w).norm() < 1e-14);
        let (t, p) = Vec3::new(1.0f64, 0.0, 0.0).to_spherical();
        assert_eq!(t, 0.0);
        assert!((p - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn rodrigues_quarter_turn() {
        let z = Vec3::new(0.0f64, 0.0, 1.0);
        let r = Vec3::new(1.0, 0.0, 0.0).rotate_about(z, std::f64::consts::FRAC_PI_2);
        assert!((r - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }
}
