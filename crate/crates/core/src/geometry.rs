//! Small fixed-size vector types: points, unit directions, RGB triples, rays.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound(serialize = "T: Clone + Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T> From<[T; 3]> for Vec3<T> {
    fn from([x, y, z]: [T; 3]) -> Self {
        Vec3 { x, y, z }
    }
}

impl<T> From<Vec3<T>> for [T; 3] {
    fn from(v: Vec3<T>) -> Self {
        [v.x, v.y, v.z]
    }
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Vec3 { x, y, z }
    }

    pub fn zero() -> Self {
        Vec3::new(T::zero(), T::zero(), T::zero())
    }

    pub fn splat(v: T) -> Self {
        Vec3::new(v, v, v)
    }

    pub fn from_f64(x: f64, y: f64, z: f64) -> Self {
        Vec3::new(T::lit(x), T::lit(y), T::lit(z))
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Self) -> Self {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn abs(self) -> Self {
        self.map(T::abs)
    }

    pub fn max_component(self) -> T {
        self.x.max(self.y).max(self.z)
    }

    pub fn normalized(self) -> Result<Direction<T>> {
        Direction::new(self.x, self.y, self.z)
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// A unit-length 3-vector.
///
/// Construction normalizes its input, so every `Direction` in the program is
/// unit length up to rounding and has finite components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(into = "[T; 3]")]
pub struct Direction<T: Real>(Vec3<T>);

impl<T: Real> From<Direction<T>> for [T; 3] {
    fn from(d: Direction<T>) -> Self {
        d.0.into()
    }
}

impl<'de, T: Real> Deserialize<'de> for Direction<T> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let [x, y, z] = <[T; 3]>::deserialize(de)?;
        Direction::new(x, y, z).map_err(serde::de::Error::custom)
    }
}

impl<T: Real> Direction<T> {
    /// Normalizes `(x, y, z)`; rejects non-finite and zero-length input.
    pub fn new(x: T, y: T, z: T) -> Result<Self> {
        let v = Vec3::new(x, y, z);
        if !v.is_finite() {
            return Err(Error::NonFinite("direction"));
        }
        let n = v.norm();
        if n <= T::min_positive_value() || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(Direction(v / n))
    }

    /// Wraps a vector the caller guarantees is already unit length.
    #[inline]
    pub(crate) fn from_unit(v: Vec3<T>) -> Self {
        Direction(v)
    }

    pub fn from_f64(x: f64, y: f64, z: f64) -> Result<Self> {
        Direction::new(T::lit(x), T::lit(y), T::lit(z))
    }

    /// Polar angle `theta` from +z, azimuth `phi` from +x toward +y.
    pub fn from_spherical(theta: T, phi: T) -> Self {
        let st = theta.sin();
        Direction(Vec3::new(st * phi.cos(), st * phi.sin(), theta.cos()))
    }

    /// Returns `(theta, phi)` with `theta` in `[0, pi]` and `phi` in `[0, 2 pi)`.
    pub fn to_spherical(self) -> (T, T) {
        let theta = self.0.z.max(-T::one()).min(T::one()).acos();
        let mut phi = self.0.y.atan2(self.0.x);
        if phi < T::zero() {
            phi += T::TAU();
        }
        if phi >= T::TAU() {
            phi = T::zero();
        }
        (theta, phi)
    }

    pub fn unit_x() -> Self {
        Direction(Vec3::new(T::one(), T::zero(), T::zero()))
    }

    pub fn unit_y() -> Self {
        Direction(Vec3::new(T::zero(), T::one(), T::zero()))
    }

    pub fn unit_z() -> Self {
        Direction(Vec3::new(T::zero(), T::zero(), T::one()))
    }

    #[inline]
    pub fn x(self) -> T {
        self.0.x
    }

    #[inline]
    pub fn y(self) -> T {
        self.0.y
    }

    #[inline]
    pub fn z(self) -> T {
        self.0.z
    }

    #[inline]
    pub fn vec(self) -> Vec3<T> {
        self.0
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.0.dot(o.0)
    }

    /// Re-normalizes the stored vector.
    pub fn renormalized(self) -> Self {
        Direction(self.0 / self.0.norm())
    }

    /// Builds an orthonormal basis `(t, b)` completing `self` to a right-handed frame.
    pub fn orthonormal_basis(self) -> (Vec3<T>, Vec3<T>) {
        // Duff et al. branchless construction.
        let n = self.0;
        let sign = T::one().copysign(n.z);
        let a = -T::one() / (sign + n.z);
        let b = n.x * n.y * a;
        let t = Vec3::new(T::one() + sign * n.x * n.x * a, sign * b, -sign * n.x);
        let bt = Vec3::new(b, sign + n.y * n.y * a, -n.y);
        (t, bt)
    }
}

/// Direction drawn uniformly from the unit sphere (`z = 1 - 2u`, `phi = 2 pi v`).
pub fn uniform_sphere_direction<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Direction<T> {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let z = 1.0 - 2.0 * u;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let phi = std::f64::consts::TAU * v;
    Direction(Vec3::new(T::lit(r * phi.cos()), T::lit(r * phi.sin()), T::lit(z))).renormalized()
}

impl<T: Real> Neg for Direction<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Direction(-self.0)
    }
}

/// Linear RGB triple. Values may be negative while in transit (SH ringing).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 3]", into = "[T; 3]")]
#[serde(bound(serialize = "T: Clone + Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Rgb<T>(pub [T; 3]);

impl<T> From<[T; 3]> for Rgb<T> {
    fn from(c: [T; 3]) -> Self {
        Rgb(c)
    }
}

impl<T> From<Rgb<T>> for [T; 3] {
    fn from(c: Rgb<T>) -> Self {
        c.0
    }
}

impl<T: Real> Rgb<T> {
    pub fn new(r: T, g: T, b: T) -> Self {
        Rgb([r, g, b])
    }

    pub fn splat(v: T) -> Self {
        Rgb([v; 3])
    }

    pub fn zero() -> Self {
        Rgb::splat(T::zero())
    }

    pub fn map(self, f: impl Fn(T) -> T) -> Self {
        Rgb(self.0.map(f))
    }

    pub fn zip(self, o: Self, f: impl Fn(T, T) -> T) -> Self {
        Rgb([f(self.0[0], o.0[0]), f(self.0[1], o.0[1]), f(self.0[2], o.0[2])])
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn min_component(self) -> T {
        self.0[0].min(self.0[1]).min(self.0[2])
    }

    pub fn max_abs_diff(self, o: Self) -> T {
        self.zip(o, |a, b| (a - b).abs()).0.iter().fold(T::zero(), |m, &v| m.max(v))
    }
}

impl<T: Real> Add for Rgb<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        self.zip(o, |a, b| a + b)
    }
}

impl<T: Real> AddAssign for Rgb<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Rgb<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self.zip(o, |a, b| a - b)
    }
}

impl<T: Real> Mul<T> for Rgb<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.map(|c| c * s)
    }
}

impl<T: Real> Mul for Rgb<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        self.zip(o, |a, b| a * b)
    }
}

impl<T> Index<usize> for Rgb<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Ray<T: Real> {
    pub origin: Vec3<T>,
    pub dir: Direction<T>,
}

impl<T: Real> Ray<T> {
    pub fn new(origin: Vec3<T>, dir: Direction<T>) -> Self {
        Ray { origin, dir }
    }

    #[inline]
    pub fn at(&self, t: T) -> Vec3<T> {
        self.origin + self.dir.vec() * t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BoundingSphere<T: Real> {
    pub center: Vec3<T>,
    pub radius: T,
}

impl<T: Real> BoundingSphere<T> {
    pub fn contains(&self, p: Vec3<T>) -> bool {
        (p - self.center).norm_squared() <= self.radius * self.radius
    }

    /// Parametric interval `[t0, t1]` where the ray is inside the sphere.
    pub fn intersect(&self, ray: &Ray<T>) -> Option<(T, T)> {
        let oc = ray.origin - self.center;
        let b = oc.dot(ray.dir.vec());
        let c = oc.norm_squared() - self.radius * self.radius;
        let disc = b * b - c;
        if disc < T::zero() {
            return None;
        }
        let s = disc.sqrt();
        Some((-b - s, -b + s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_rejects_degenerate_input() {
        assert!(Direction::<f64>::new(0.0, 0.0, 0.0).is_err());
        assert!(Direction::<f64>::new(f64::NAN, 0.0, 1.0).is_err());
        assert!(Direction::<f64>::new(f64::INFINITY, 0.0, 1.0).is_err());
    }

    #[test]
    fn direction_is_unit_after_construction() {
        let d = Direction::<f64>::new(3.0, -4.0, 12.0).unwrap();
        assert!((d.vec().norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn spherical_round_trip() {
        let d = Direction::<f64>::from_f64(-0.3, -0.5, 0.2).unwrap();
        let (t, p) = d.to_spherical();
        let e = Direction::from_spherical(t, p);
        assert!((d.vec() - e.vec()).norm() < 1e-12);
        assert!((0.0..std::f64::consts::TAU).contains(&p));
    }

    #[test]
    fn basis_is_orthonormal() {
        for v in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [0.3, -0.8, 0.1], [1.0, 0.0, 0.0]] {
            let n = Direction::<f64>::from_f64(v[0], v[1], v[2]).unwrap();
            let (t, b) = n.orthonormal_basis();
            assert!((t.norm() - 1.0).abs() < 1e-12);
            assert!((b.norm() - 1.0).abs() < 1e-12);
            assert!(t.dot(b).abs() < 1e-12);
            assert!(t.dot(n.vec()).abs() < 1e-12);
            assert!(b.dot(n.vec()).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_intersection_interval() {
        let s = BoundingSphere {
            center: Vec3::<f64>::zero(),
            radius: 1.0,
        };
        let r = Ray::new(Vec3::from_f64(0.0, 0.0, 3.0), -Direction::unit_z());
        let (t0, t1) = s.intersect(&r).unwrap();
        assert!((t0 - 2.0).abs() < 1e-12 && (t1 - 4.0).abs() < 1e-12);
        let miss = Ray::new(Vec3::from_f64(0.0, 2.0, 3.0), -Direction::unit_z());
        assert!(s.intersect(&miss).is_none());
    }
}
