//! Light transport through the density field: transmittance, per-point SH
//! transfer vectors and the neural-radiance-transfer style residual.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SurfacePoint, VolumeScene};
use crate::geometry::{uniform_sphere_direction, Direction, Ray, Vec3};
use crate::scalar::Real;
use crate::sh::{ProjectionGrid, QuadratureSpec, ShVector, DEFAULT_DEGREE};

/// Optical depth beyond which a march stops; `exp(-40)` is below 5e-18.
pub const OPAQUE_DEPTH: f64 = 40.0;

/// Number of auxiliary rays added to the two primary rays.
pub const AUXILIARY_RAYS: usize = 8;

/// `max(0, n . dir)`.
#[inline]
pub fn cosine_term<T: Real>(n: Direction<T>, dir: Direction<T>) -> T {
    n.dot(dir).max(T::zero())
}

/// Midpoint samples `(t, sigma)` of `steps` equal segments of `[t0, t1]`.
pub fn march_samples<'a, T: Real>(
    scene: &'a VolumeScene<T>,
    ray: &'a Ray<T>,
    t0: T,
    t1: T,
    steps: usize,
) -> impl Iterator<Item = (T, T)> + 'a {
    let dt = (t1 - t0) / T::from_usize_lossy(steps.max(1));
    (0..steps).map(move |k| {
        let t = t0 + (T::from_usize_lossy(k) + T::lit(0.5)) * dt;
        (t, scene.density_at(ray.at(t)))
    })
}

/// Midpoint estimate of the optical depth along `ray` over `[t0, t1]`.
/// Stops early once the depth exceeds [`OPAQUE_DEPTH`].
pub fn optical_depth<T: Real>(scene: &VolumeScene<T>, ray: &Ray<T>, t0: T, t1: T, steps: usize) -> T {
    if t1 <= t0 || steps == 0 {
        return T::zero();
    }
    let dt = (t1 - t0) / T::from_usize_lossy(steps);
    let cap = T::lit(OPAQUE_DEPTH);
    let mut tau = T::zero();
    for (_, sigma) in march_samples(scene, ray, t0, t1, steps) {
        tau += sigma * dt;
        if tau > cap {
            break;
        }
    }
    tau
}

/// Surface offset used to leave a shading point before marching.
pub fn surface_offset<T: Real>(scene: &VolumeScene<T>) -> T {
    scene.fd_step() * T::lit(2.0)
}

/// Transmittance from `x` toward `dir` until the ray leaves the bounds,
/// starting `2h` away from `x`.
pub fn visibility<T: Real>(scene: &VolumeScene<T>, x: Vec3<T>, dir: Direction<T>) -> T {
    let ray = Ray::new(x, dir);
    let Some((_, t_exit)) = scene.bounds.intersect(&ray) else {
        return T::one();
    };
    let start = surface_offset(scene);
    if t_exit <= start || !scene.ray_meets_density(&ray, start, t_exit) {
        return T::one();
    }
    let tau = optical_depth(scene, &ray, start, t_exit, scene.march.secondary_steps);
    (-tau).exp()
}

/// A surface point with its baked transfer vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TransferSample<T: Real> {
    pub point: SurfacePoint<T>,
    pub transfer: ShVector<T>,
}

/// Bakes transfer vectors on a fixed quadrature grid, reusing the tabulated
/// basis across points.
#[derive(Clone, Debug)]
pub struct TransferBaker<T: Real> {
    grid: ProjectionGrid<T>,
}

impl<T: Real> TransferBaker<T> {
    /// Default bake: degree 4 on a 32x64 Gauss-Legendre grid.
    pub fn new() -> Result<Self> {
        Self::with_grid(QuadratureSpec::gauss_legendre(32, 64), DEFAULT_DEGREE)
    }

    pub fn with_grid(spec: QuadratureSpec, degree: usize) -> Result<Self> {
        Ok(TransferBaker {
            grid: ProjectionGrid::new(spec, degree)?,
        })
    }

    pub fn grid(&self) -> &ProjectionGrid<T> {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.grid.degree()
    }

    /// `V(x, w) * H(n, w)` at every grid direction.
    pub fn visibility_cosine_map(&self, scene: &VolumeScene<T>, p: &SurfacePoint<T>) -> Result<Vec<T>> {
        let n = p.normal.ok_or(Error::InvalidPoint)?;
        if !p.position.is_finite() {
            return Err(Error::InvalidPoint);
        }
        Ok(self
            .grid
            .directions()
            .iter()
            .map(|&w| {
                let h = cosine_term(n, w);
                if h > T::zero() {
                    visibility(scene, p.position, w) * h
                } else {
                    T::zero()
                }
            })
            .collect())
    }

    pub fn bake(&self, scene: &VolumeScene<T>, p: &SurfacePoint<T>) -> Result<TransferSample<T>> {
        Ok(self.bake_with_map(scene, p)?.0)
    }

    /// Bakes and also returns the sampled visibility-cosine map.
    pub fn bake_with_map(
        &self,
        scene: &VolumeScene<T>,
        p: &SurfacePoint<T>,
    ) -> Result<(TransferSample<T>, Vec<T>)> {
        let map = self.visibility_cosine_map(scene, p)?;
        let transfer = self.grid.project_values(&map)?;
        Ok((TransferSample { point: *p, transfer }, map))
    }
}

/// Degree-4 transfer vector of `V * H` at `p`, integrated on `quad`.
pub fn bake_transfer<T: Real>(
    scene: &VolumeScene<T>,
    p: &SurfacePoint<T>,
    quad: QuadratureSpec,
) -> Result<TransferSample<T>> {
    TransferBaker::with_grid(quad, DEFAULT_DEGREE)?.bake(scene, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayRole {
    /// The outgoing (camera-facing) direction.
    View,
    /// The direction opposite the view.
    Opposite,
    Auxiliary,
}

/// Directions at which the residual between reconstructed transfer and
/// directly evaluated visibility-cosine is measured.
#[derive(Clone, Debug, PartialEq)]
pub struct RaySet<T: Real> {
    pub rays: Vec<(Direction<T>, RayRole)>,
}

impl<T: Real> RaySet<T> {
    pub fn directions(&self) -> impl Iterator<Item = Direction<T>> + '_ {
        self.rays.iter().map(|r| r.0)
    }
}

/// The view direction, its opposite, and [`AUXILIARY_RAYS`] directions drawn
/// uniformly from the hemisphere opposite `n`.
pub fn nrt_rays<T: Real>(n: Direction<T>, view: Direction<T>, seed: u64) -> RaySet<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rays = Vec::with_capacity(AUXILIARY_RAYS + 2);
    rays.push((view, RayRole::View));
    rays.push((-view, RayRole::Opposite));
    while rays.len() < AUXILIARY_RAYS + 2 {
        let d: Direction<T> = uniform_sphere_direction(&mut rng);
        let s = n.dot(d);
        if s == T::zero() {
            continue;
        }
        let d = if s > T::zero() { -d } else { d };
        rays.push((d, RayRole::Auxiliary));
    }
    RaySet { rays }
}

/// Directly evaluated `V * H` at the sample's point; zero for points without a normal.
pub fn reference_transfer<T: Real>(scene: &VolumeScene<T>, point: &SurfacePoint<T>, dir: Direction<T>) -> T {
    let Some(n) = point.normal else {
        return T::zero();
    };
    let h = cosine_term(n, dir);
    if h > T::zero() {
        visibility(scene, point.position, dir) * h
    } else {
        T::zero()
    }
}

/// Squared error between the reconstructed transfer and `V * H` along `dir`.
pub fn nrt_residual<T: Real>(scene: &VolumeScene<T>, sample: &TransferSample<T>, dir: Direction<T>) -> T {
    let e = sample.transfer.eval(dir) - reference_transfer(scene, &sample.point, dir);
    e * e
}

/// Sum of [`nrt_residual`] over a ray set.
pub fn nrt_loss<T: Real>(scene: &VolumeScene<T>, sample: &TransferSample<T>, rays: &RaySet<T>) -> T {
    rays.directions().map(|d| nrt_residual(scene, sample, d)).sum()
}

/// Rendering weights `w_k = T_k (1 - exp(-sigma_k dt))` along a primary ray
/// clipped to the bounds and the scene's near/far range. Returns the
/// midpoint parameters and weights.
pub fn primary_weights<T: Real>(scene: &VolumeScene<T>, ray: &Ray<T>) -> Vec<(T, T)> {
    let Some((a, b)) = scene.bounds.intersect(ray) else {
        return Vec::new();
    };
    let t0 = a.max(scene.march.t_near).max(T::zero());
    let t1 = b.min(scene.march.t_far);
    if t1 <= t0 {
        return Vec::new();
    }
    let steps = scene.march.primary_steps;
    let dt = (t1 - t0) / T::from_usize_lossy(steps);
    let mut tau = T::zero();
    let mut out = Vec::with_capacity(steps);
    for (t, sigma) in march_samples(scene, ray, t0, t1, steps) {
        let seg = sigma * dt;
        let w = (-tau).exp() * (T::one() - (-seg).exp());
        out.push((t, w));
        tau += seg;
    }
    out
}

/// The maximum-weight sample along `ray`, or `None` if the ray sees no density.
pub fn extract_surface_point<T: Real>(scene: &VolumeScene<T>, ray: &Ray<T>) -> Option<SurfacePoint<T>> {
    let mut best: Option<(T, T)> = None;
    for (t, w) in primary_weights(scene, ray) {
        if w > T::zero() && best.is_none_or(|(_, bw)| w > bw) {
            best = Some((t, w));
        }
    }
    best.map(|(t, _)| scene.surface_point(ray.at(t)))
}

/// A surface point together with the direction toward its viewer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ProbePoint<T: Real> {
    pub point: SurfacePoint<T>,
    pub view: Direction<T>,
}

/// Surface points found by shooting rays from a sphere of twice the bounds
/// radius toward random targets near the bounds center. Points without a
/// normal are skipped.
pub fn sample_probe_points<T: Real>(scene: &VolumeScene<T>, count: usize, seed: u64) -> Result<Vec<ProbePoint<T>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = scene.bounds.center;
    let r = scene.bounds.radius;
    let mut out = Vec::with_capacity(count);
    let attempts = count.saturating_mul(50).max(64);
    for _ in 0..attempts {
        if out.len() == count {
            break;
        }
        let d: Direction<T> = uniform_sphere_direction(&mut rng);
        let origin = c + d.vec() * (r * T::lit(2.0));
        let jitter: Direction<T> = uniform_sphere_direction(&mut rng);
        let u: f64 = rng.random();
        let target = c + jitter.vec() * (r * T::lit(0.25 * u.cbrt()));
        let Ok(dir) = (target - origin).normalized() else {
            continue;
        };
        let ray = Ray::new(origin, dir);
        if let Some(point) = extract_surface_point(scene, &ray) {
            if point.is_valid() {
                out.push(ProbePoint { point, view: -dir });
            }
        }
    }
    if out.is_empty() && count > 0 {
        return Err(Error::NoSurfacePoints);
    }
    Ok(out)
}

/// Stream seed for item `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined words.
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
