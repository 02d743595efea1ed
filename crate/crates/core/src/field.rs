//! Volumetric scenes built from analytic density primitives.
//!
//! Each primitive has a signed distance `d(x)` (negative inside) and a soft
//! falloff of width `w` centered on its surface:
//! `sigma(x) = s * (1 - smoothstep((d(x) + w/2) / w))`. Deep inside the density
//! is the constant `s`, beyond `w/2` outside it is zero, and because
//! `smoothstep(u) + smoothstep(1 - u) = 1` the optical depth across a flat
//! soft edge equals that of a hard edge at `d = 0`.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundingSphere, Direction, Ray, Rgb, Vec3};
use crate::render::Camera;
use crate::scalar::{smoothstep, smoothstep_derivative, Real};

/// Gradient magnitude below which a point has no normal.
pub const GRADIENT_EPSILON: f64 = 1e-6;

/// Default standard deviation of the albedo smoothness perturbation.
pub const SMOOTHNESS_PERTURBATION: f64 = 0.03;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", bound = "T: Real")]
pub enum Shape<T: Real> {
    Sphere {
        center: Vec3<T>,
        radius: T,
    },
    /// Axis-aligned box; `extent` holds the half sizes.
    Box {
        center: Vec3<T>,
        extent: Vec3<T>,
    },
    /// Infinite slab of full `thickness` around the plane through `center`.
    Slab {
        center: Vec3<T>,
        normal: Direction<T>,
        thickness: T,
    },
}

impl<T: Real> Shape<T> {
    pub fn signed_distance(&self, x: Vec3<T>) -> T {
        match *self {
            Shape::Sphere { center, radius } => (x - center).norm() - radius,
            Shape::Box { center, extent } => {
                let q = (x - center).abs() - extent;
                let outside = q.map(|c| c.max(T::zero())).norm();
                let inside = q.max_component().min(T::zero());
                outside + inside
            }
            Shape::Slab {
                center,
                normal,
                thickness,
            } => normal.vec().dot(x - center).abs() - thickness / T::lit(2.0),
        }
    }

    /// Analytic gradient of [`Self::signed_distance`] (unit length where defined).
    pub fn distance_gradient(&self, x: Vec3<T>) -> Vec3<T> {
        match *self {
            Shape::Sphere { center, .. } => {
                let r = x - center;
                let n = r.norm();
                if n > T::zero() {
                    r / n
                } else {
                    Vec3::zero()
                }
            }
            Shape::Box { center, extent } => {
                let p = x - center;
                let q = p.abs() - extent;
                let sign = p.map(|c| T::one().copysign(c));
                let clamped = q.map(|c| c.max(T::zero()));
                let len = clamped.norm();
                if len > T::zero() {
                    let g = clamped / len;
                    Vec3::new(g.x * sign.x, g.y * sign.y, g.z * sign.z)
                } else {
                    let m = q.max_component();
                    if q.x == m {
                        Vec3::new(sign.x, T::zero(), T::zero())
                    } else if q.y == m {
                        Vec3::new(T::zero(), sign.y, T::zero())
                    } else {
                        Vec3::new(T::zero(), T::zero(), sign.z)
                    }
                }
            }
            Shape::Slab { center, normal, .. } => {
                let s = normal.vec().dot(x - center);
                normal.vec() * T::one().copysign(s)
            }
        }
    }

    /// Radius around the bounds center that contains the shape, if finite.
    fn extent_from(&self, origin: Vec3<T>) -> Option<T> {
        match *self {
            Shape::Sphere { center, radius } => Some((center - origin).norm() + radius),
            Shape::Box { center, extent } => Some((center - origin).norm() + extent.norm()),
            Shape::Slab { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Material<T: Real> {
    pub albedo: Rgb<T>,
    pub tint: T,
}

impl<T: Real> Material<T> {
    pub fn new(albedo: Rgb<T>, tint: T) -> Self {
        Material { albedo, tint }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Primitive<T: Real> {
    #[serde(flatten)]
    pub shape: Shape<T>,
    /// Density deep inside, in inverse length units.
    pub density_scale: T,
    /// Width of the falloff shell; zero gives a hard edge.
    pub softness: T,
    pub albedo: Rgb<T>,
    pub tint: T,
}

impl<T: Real> Primitive<T> {
    pub fn new(shape: Shape<T>, density_scale: T, softness: T, material: Material<T>) -> Self {
        Primitive {
            shape,
            density_scale,
            softness,
            albedo: material.albedo,
            tint: material.tint,
        }
    }

    pub fn material(&self) -> Material<T> {
        Material::new(self.albedo, self.tint)
    }

    #[inline]
    fn falloff_coordinate(&self, x: Vec3<T>) -> T {
        (self.shape.signed_distance(x) + self.softness / T::lit(2.0)) / self.softness
    }

    pub fn density(&self, x: Vec3<T>) -> T {
        if self.softness > T::zero() {
            self.density_scale * (T::one() - smoothstep(self.falloff_coordinate(x)))
        } else if self.shape.signed_distance(x) <= T::zero() {
            self.density_scale
        } else {
            T::zero()
        }
    }

    /// Closed-form density gradient (zero for hard-edged primitives).
    pub fn gradient(&self, x: Vec3<T>) -> Vec3<T> {
        if self.softness <= T::zero() {
            return Vec3::zero();
        }
        let ds = smoothstep_derivative(self.falloff_coordinate(x));
        if ds == T::zero() {
            return Vec3::zero();
        }
        self.shape.distance_gradient(x) * (-self.density_scale * ds / self.softness)
    }

    /// Parameter interval along `ray` outside which this primitive's density
    /// is exactly zero (conservative for boxes).
    pub fn support_interval(&self, ray: &Ray<T>) -> Option<(T, T)> {
        let pad = self.softness / T::lit(2.0);
        match self.shape {
            Shape::Sphere { center, radius } => BoundingSphere {
                center,
                radius: radius + pad,
            }
            .intersect(ray),
            Shape::Box { center, extent } => {
                let lo = center - extent - Vec3::splat(pad);
                let hi = center + extent + Vec3::splat(pad);
                let mut t0 = T::neg_infinity();
                let mut t1 = T::infinity();
                for a in 0..3 {
                    let (o, d) = (ray.origin[a], ray.dir.vec()[a]);
                    if d == T::zero() {
                        if o < lo[a] || o > hi[a] {
                            return None;
                        }
                    } else {
                        let (u, v) = ((lo[a] - o) / d, (hi[a] - o) / d);
                        t0 = t0.max(u.min(v));
                        t1 = t1.min(u.max(v));
                    }
                }
                (t0 <= t1).then_some((t0, t1))
            }
            Shape::Slab {
                center,
                normal,
                thickness,
            } => {
                let half = thickness / T::lit(2.0) + pad;
                let h = normal.vec().dot(ray.origin - center);
                let d = normal.dot(ray.dir);
                if d == T::zero() {
                    return (h.abs() <= half).then_some((T::neg_infinity(), T::infinity()));
                }
                let (u, v) = ((-half - h) / d, (half - h) / d);
                Some((u.min(v), u.max(v)))
            }
        }
    }

    /// Lipschitz constant of [`Self::density`]: `1.5 s / w` (smoothstep slope peaks at 1.5).
    pub fn lipschitz_bound(&self) -> T {
        if self.softness > T::zero() {
            T::lit(1.5) * self.density_scale / self.softness
        } else {
            T::infinity()
        }
    }

    fn validate(&self, i: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidScene(format!("primitive {i}: {what}")));
        let finite = match &self.shape {
            Shape::Sphere { center, radius } => center.is_finite() && radius.is_finite(),
            Shape::Box { center, extent } => center.is_finite() && extent.is_finite(),
            Shape::Slab {
                center, thickness, ..
            } => center.is_finite() && thickness.is_finite(),
        };
        if !finite
            || !self.density_scale.is_finite()
            || !self.softness.is_finite()
            || !self.albedo.is_finite()
            || !self.tint.is_finite()
        {
            return bad("non-finite parameter");
        }
        match &self.shape {
            Shape::Sphere { radius, .. } if *radius <= T::zero() => return bad("radius must be positive"),
            Shape::Box { extent, .. } if extent.x <= T::zero() || extent.y <= T::zero() || extent.z <= T::zero() => {
                return bad("box extent must be positive")
            }
            Shape::Slab { thickness, .. } if *thickness <= T::zero() => {
                return bad("slab thickness must be positive")
            }
            _ => {}
        }
        if self.density_scale < T::zero() {
            return bad("density_scale must be non-negative");
        }
        if self.softness < T::zero() {
            return bad("softness must be non-negative");
        }
        let unit = |v: T| v >= T::zero() && v <= T::one();
        if !self.albedo.0.iter().all(|&c| unit(c)) || !unit(self.tint) {
            return bad("albedo and tint must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MarchParams<T: Real> {
    pub primary_steps: usize,
    pub secondary_steps: usize,
    pub t_near: T,
    pub t_far: T,
}

impl<T: Real> Default for MarchParams<T> {
    fn default() -> Self {
        MarchParams {
            primary_steps: 256,
            secondary_steps: 64,
            t_near: T::zero(),
            t_far: T::lit(1e3),
        }
    }
}

/// Density, albedo and specular tint fields inside a bounding sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct VolumeScene<T: Real> {
    pub bounds: BoundingSphere<T>,
    pub default_material: Material<T>,
    #[serde(default)]
    pub march: MarchParams<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<Camera<T>>,
    pub primitives: Vec<Primitive<T>>,
}

/// A shading location: position, normal (if the gradient is non-zero) and material.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SurfacePoint<T: Real> {
    pub position: Vec3<T>,
    pub normal: Option<Direction<T>>,
    pub albedo: Rgb<T>,
    pub tint: T,
}

impl<T: Real> SurfacePoint<T> {
    pub fn is_valid(&self) -> bool {
        self.normal.is_some()
    }
}

impl<T: Real> VolumeScene<T> {
    pub fn new(bounds: BoundingSphere<T>, default_material: Material<T>, march: MarchParams<T>) -> Self {
        VolumeScene {
            bounds,
            default_material,
            march,
            camera: None,
            primitives: Vec::new(),
        }
    }

    pub fn with_primitive(mut self, p: Primitive<T>) -> Self {
        self.primitives.push(p);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Self = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut scene: Self = serde_json::from_str(&text)
            .map_err(|e| Error::format(path, format!("scene JSON: {e}")))?;
        scene.normalize_slab_normals();
        scene.validate()?;
        Ok(scene)
    }

    fn normalize_slab_normals(&mut self) {
        for p in &mut self.primitives {
            if let Shape::Slab { normal, .. } = &mut p.shape {
                *normal = normal.renormalized();
            }
        }
    }

    /// Checks finiteness, ranges, and that bounded primitives (spheres and
    /// boxes, including their falloff shell) fit inside the bounding sphere.
    /// Slabs are unbounded and are clipped by the sphere.
    pub fn validate(&self) -> Result<()> {
        if !self.bounds.center.is_finite() || !(self.bounds.radius > T::zero()) || !self.bounds.radius.is_finite() {
            return Err(Error::InvalidScene("bounds need a finite center and positive radius".into()));
        }
        let m = &self.march;
        if m.primary_steps == 0 || m.secondary_steps == 0 {
            return Err(Error::InvalidScene("march step counts must be positive".into()));
        }
        if !(m.t_near >= T::zero()) || !(m.t_far > m.t_near) {
            return Err(Error::InvalidScene("march requires 0 <= t_near < t_far".into()));
        }
        let unit = |v: T| v >= T::zero() && v <= T::one();
        let dm = &self.default_material;
        if !dm.albedo.0.iter().all(|&c| unit(c)) || !unit(dm.tint) {
            return Err(Error::InvalidScene("default material outside [0, 1]".into()));
        }
        for (i, p) in self.primitives.iter().enumerate() {
            p.validate(i)?;
            if let Some(r) = p.shape.extent_from(self.bounds.center) {
                let reach = r + p.softness / T::lit(2.0);
                if reach > self.bounds.radius * T::lit(1.0 + 1e-9) {
                    return Err(Error::InvalidScene(format!(
                        "primitive {i} reaches {reach} from the bounds center, beyond radius {}",
                        self.bounds.radius
                    )));
                }
            }
        }
        if let Some(c) = &self.camera {
            c.validate()?;
        }
        Ok(())
    }

    /// Total density; zero outside the bounding sphere.
    #[inline]
    pub fn density_at(&self, x: Vec3<T>) -> T {
        if !self.bounds.contains(x) {
            return T::zero();
        }
        self.primitives.iter().map(|p| p.density(x)).sum()
    }

    /// Whether any primitive can have density on `ray` within `[t0, t1]`.
    pub fn ray_meets_density(&self, ray: &Ray<T>, t0: T, t1: T) -> bool {
        self.primitives.iter().any(|p| {
            p.density_scale > T::zero()
                && p.support_interval(ray).is_some_and(|(a, b)| a <= t1 && b >= t0)
        })
    }

    /// Sum of the primitives' closed-form gradients (ignores the bounds cut).
    pub fn analytic_gradient(&self, x: Vec3<T>) -> Vec3<T> {
        self.primitives
            .iter()
            .fold(Vec3::zero(), |acc, p| acc + p.gradient(x))
    }

    /// Finite-difference step: a quarter of the smallest positive softness.
    pub fn fd_step(&self) -> T {
        self.primitives
            .iter()
            .map(|p| p.softness)
            .filter(|&w| w > T::zero())
            .fold(None, |m: Option<T>, w| Some(m.map_or(w, |m| m.min(w))))
            .map(|w| w / T::lit(4.0))
            .unwrap_or(self.bounds.radius * T::lit(1e-3))
    }

    /// Central-difference density gradient with step [`Self::fd_step`].
    pub fn gradient_fd(&self, x: Vec3<T>) -> Vec3<T> {
        let h = self.fd_step();
        let two_h = h + h;
        let axis = |e: Vec3<T>| (self.density_at(x + e * h) - self.density_at(x - e * h)) / two_h;
        Vec3::new(
            axis(Vec3::new(T::one(), T::zero(), T::zero())),
            axis(Vec3::new(T::zero(), T::one(), T::zero())),
            axis(Vec3::new(T::zero(), T::zero(), T::one())),
        )
    }

    /// `-grad sigma / |grad sigma|`, or `None` where the gradient vanishes.
    pub fn normal_at(&self, x: Vec3<T>) -> Option<Direction<T>> {
        let g = self.gradient_fd(x);
        if g.norm() < T::lit(GRADIENT_EPSILON) {
            return None;
        }
        (-g).normalized().ok()
    }

    /// Density-weighted blend of primitive materials; the scene default where
    /// the total density is zero.
    pub fn material_at(&self, x: Vec3<T>) -> Material<T> {
        if !self.bounds.contains(x) {
            return self.default_material;
        }
        let total: T = self.primitives.iter().map(|p| p.density(x)).sum();
        if total <= T::zero() {
            return self.default_material;
        }
        let mut albedo = Rgb::zero();
        let mut tint = T::zero();
        for p in &self.primitives {
            let s = p.density(x);
            if s > T::zero() {
                // Weights are exactly 1 for a lone contributor.
                let w = s / total;
                albedo += p.albedo * w;
                tint += p.tint * w;
            }
        }
        Material::new(albedo, tint)
    }

    pub fn surface_point(&self, x: Vec3<T>) -> SurfacePoint<T> {
        let m = self.material_at(x);
        SurfacePoint {
            position: x,
            normal: self.normal_at(x),
            albedo: m.albedo,
            tint: m.tint,
        }
    }

    /// Mean of `|albedo(x) - albedo(x + eps)|_1` over `samples` draws of
    /// `eps ~ N(0, 0.03^2 I)`.
    pub fn albedo_smoothness_residual(&self, x: Vec3<T>, samples: usize, seed: u64) -> T {
        albedo_smoothness_residual_with(
            |p| self.material_at(p).albedo,
            x,
            samples,
            T::lit(SMOOTHNESS_PERTURBATION),
            seed,
        )
    }

    /// Copy with every density scale multiplied by `c`.
    pub fn with_density_scaled(&self, c: T) -> Self {
        let mut s = self.clone();
        for p in &mut s.primitives {
            p.density_scale *= c;
        }
        s
    }
}

/// Albedo smoothness residual for an arbitrary albedo field, with
/// perturbation standard deviation `std`. Deterministic per `seed`.
pub fn albedo_smoothness_residual_with<T: Real>(
    albedo: impl Fn(Vec3<T>) -> Rgb<T>,
    x: Vec3<T>,
    samples: usize,
    std: T,
    seed: u64,
) -> T {
    assert!(samples >= 1, "albedo smoothness residual needs at least one sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = albedo(x);
    let mut acc = T::zero();
    for _ in 0..samples {
        let mut draw = || T::lit(StandardNormal.sample(&mut rng)) * std;
        let eps = Vec3::new(draw(), draw(), draw());
        let d = base - albedo(x + eps);
        acc += d.0.iter().map(|c| c.abs()).sum::<T>();
    }
    acc / T::from_usize_lossy(samples)
}
