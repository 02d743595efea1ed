//! Pinhole camera, volume rendering of radiance and debug channels, and
//! image export.
//!
//! Along a primary ray the sample weights are `w_k = T_k (1 - exp(-sigma_k dt))`
//! with `T_k = exp(-sum_{j<k} sigma_j dt)`, so the weights sum to the opacity
//! `1 - T_final`. Transfer-dependent channels are evaluated only at the `M`
//! heaviest samples and rescaled to the full opacity.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::TransferCache;
use crate::envlight::ShLight;
use crate::error::{Error, Result};
use crate::field::{SurfacePoint, VolumeScene};
use crate::geometry::{Direction, Ray, Rgb, Vec3};
use crate::image_io;
use crate::scalar::Real;
use crate::shading::{irradiance, outgoing_radiance};
use crate::sh::{QuadratureSpec, ShVector};
use crate::transport::{primary_weights, TransferBaker};

/// Default number of heaviest samples that receive a transfer vector.
pub const DEFAULT_TOP_M: usize = 4;

/// Default raw render resolution.
pub const DEFAULT_RESOLUTION: usize = 64;

fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}

fn default_up<T: Real>() -> Vec3<T> {
    Vec3::new(T::zero(), T::zero(), T::one())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Camera<T: Real> {
    pub position: Vec3<T>,
    pub look_at: Vec3<T>,
    #[serde(default = "default_up")]
    pub up: Vec3<T>,
    /// Vertical field of view in radians.
    pub vfov: T,
    #[serde(default = "default_resolution")]
    pub width: usize,
    #[serde(default = "default_resolution")]
    pub height: usize,
}

impl<T: Real> Camera<T> {
    pub fn new(position: Vec3<T>, look_at: Vec3<T>, up: Vec3<T>, vfov: T, width: usize, height: usize) -> Result<Self> {
        let c = Camera {
            position,
            look_at,
            up,
            vfov,
            width,
            height,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidCamera(m.to_string()));
        if !self.position.is_finite() || !self.look_at.is_finite() || !self.up.is_finite() {
            return bad("non-finite camera vector");
        }
        if !(self.vfov > T::zero() && self.vfov < T::PI()) {
            return bad("vertical field of view must lie in (0, pi) radians");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image size must be positive");
        }
        self.basis().map(|_| ())
    }

    /// `(forward, right, up)` orthonormal frame.
    fn basis(&self) -> Result<(Vec3<T>, Vec3<T>, Vec3<T>)> {
        let f = (self.look_at - self.position)
            .normalized()
            .map_err(|_| Error::InvalidCamera("look_at coincides with position".into()))?
            .vec();
        let r = f
            .cross(self.up)
            .normalized()
            .map_err(|_| Error::InvalidCamera("up is parallel to the view direction".into()))?
            .vec();
        Ok((f, r, r.cross(f)))
    }

    /// Ray through the center of pixel `(px, py)`; row 0 is the top.
    pub fn ray(&self, px: usize, py: usize) -> Result<Ray<T>> {
        let (f, r, u) = self.basis()?;
        let half = (self.vfov / T::lit(2.0)).tan();
        let w = T::from_usize_lossy(self.width);
        let h = T::from_usize_lossy(self.height);
        let two = T::lit(2.0);
        let sx = (two * (T::from_usize_lossy(px) + T::lit(0.5)) / w - T::one()) * half * (w / h);
        let sy = (T::one() - two * (T::from_usize_lossy(py) + T::lit(0.5)) / h) * half;
        let d = (f + r * sx + u * sy).normalized()?;
        Ok(Ray::new(self.position, d))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    /// Diffuse plus specular.
    Lit,
    Diffuse,
    Specular,
    Albedo,
    /// Normals color-coded as `0.5 (n + 1)`.
    Normal,
    /// Raw per-channel `<t, l>`.
    Irradiance,
    /// Ambient occlusion `(1/pi) * integral of V H`, from the DC transfer term.
    Visibility,
}

impl RenderMode {
    pub const ALL: [RenderMode; 7] = [
        RenderMode::Lit,
        RenderMode::Diffuse,
        RenderMode::Specular,
        RenderMode::Albedo,
        RenderMode::Normal,
        RenderMode::Irradiance,
        RenderMode::Visibility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RenderMode::Lit => "lit",
            RenderMode::Diffuse => "diffuse",
            RenderMode::Specular => "specular",
            RenderMode::Albedo => "albedo",
            RenderMode::Normal => "normal",
            RenderMode::Irradiance => "irradiance",
            RenderMode::Visibility => "visibility",
        }
    }

    pub fn needs_transfer(self) -> bool {
        !matches!(self, RenderMode::Albedo | RenderMode::Normal)
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RenderMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RenderMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMode(s.to_string()))
    }
}

/// Where transfer vectors come from during rendering.
#[derive(Clone, Copy, Debug)]
pub enum TransferSource<'a, T: Real> {
    /// Bake at each selected sample on this grid.
    Bake(QuadratureSpec),
    /// Nearest record of a baked cache.
    Cache(&'a TransferCache<T>),
}

/// Scene, light and transfer strategy shared by all pixels.
#[derive(Clone, Debug)]
pub struct Renderer<'a, T: Real> {
    scene: &'a VolumeScene<T>,
    light: &'a ShLight<T>,
    baker: Option<TransferBaker<T>>,
    cache: Option<&'a TransferCache<T>>,
    top_m: usize,
}

impl<'a, T: Real> Renderer<'a, T> {
    /// On-the-fly baking on a 32x64 Gauss-Legendre grid at the light's degree.
    pub fn new(scene: &'a VolumeScene<T>, light: &'a ShLight<T>) -> Result<Self> {
        Self::with_source(
            scene,
            light,
            TransferSource::Bake(QuadratureSpec::gauss_legendre(32, 64)),
            DEFAULT_TOP_M,
        )
    }

    pub fn with_source(
        scene: &'a VolumeScene<T>,
        light: &'a ShLight<T>,
        source: TransferSource<'a, T>,
        top_m: usize,
    ) -> Result<Self> {
        if top_m == 0 {
            return Err(Error::InvalidParameter("top-M must be at least 1".into()));
        }
        let (baker, cache) = match source {
            TransferSource::Bake(spec) => (Some(TransferBaker::with_grid(spec, light.degree())?), None),
            TransferSource::Cache(c) => {
                if c.degree() != light.degree() {
                    return Err(Error::DegreeMismatch {
                        transfer: c.degree(),
                        light: light.degree(),
                    });
                }
                (None, Some(c))
            }
        };
        Ok(Renderer {
            scene,
            light,
            baker,
            cache,
            top_m,
        })
    }

    fn transfer_at(&self, p: &SurfacePoint<T>) -> Result<ShVector<T>> {
        match (&self.baker, self.cache) {
            (Some(b), _) => Ok(b.bake(self.scene, p)?.transfer),
            (None, Some(c)) => Ok(c.nearest(p.position).transfer.clone()),
            (None, None) => unreachable!("renderer has a transfer source"),
        }
    }

    fn shade(&self, p: &SurfacePoint<T>, view: Direction<T>, mode: RenderMode) -> Result<Rgb<T>> {
        if mode == RenderMode::Albedo {
            return Ok(p.albedo);
        }
        let Some(n) = p.normal else {
            return Ok(Rgb::zero());
        };
        if mode == RenderMode::Normal {
            let c = (n.vec() + Vec3::splat(T::one())) * T::lit(0.5);
            return Ok(Rgb::new(c.x, c.y, c.z));
        }
        let t = self.transfer_at(p)?;
        Ok(match mode {
            RenderMode::Lit => outgoing_radiance(p, view, &t, self.light)?.total(),
            RenderMode::Diffuse => outgoing_radiance(p, view, &t, self.light)?.diffuse,
            RenderMode::Specular => outgoing_radiance(p, view, &t, self.light)?.specular,
            RenderMode::Irradiance => irradiance(&t, self.light)?,
            RenderMode::Visibility => Rgb::splat(t.dc() * T::lit(2.0) / T::PI().sqrt()),
            RenderMode::Albedo | RenderMode::Normal => unreachable!(),
        })
    }

    /// Radiance and opacity along one primary ray.
    pub fn trace(&self, ray: &Ray<T>, mode: RenderMode) -> Result<(Rgb<T>, T)> {
        let samples = primary_weights(self.scene, ray);
        let alpha: T = samples.iter().map(|s| s.1).sum();
        if alpha <= T::zero() {
            return Ok((Rgb::zero(), T::zero()));
        }
        let view = -ray.dir;
        let mut color = Rgb::zero();
        if mode.needs_transfer() {
            let mut order: Vec<usize> = (0..samples.len()).filter(|&k| samples[k].1 > T::zero()).collect();
            // Stable sort keeps the nearer sample first among equal weights.
            order.sort_by(|&a, &b| samples[b].1.partial_cmp(&samples[a].1).unwrap());
            order.truncate(self.top_m);
            let mut w_top = T::zero();
            for &k in &order {
                let (t, w) = samples[k];
                let p = self.scene.surface_point(ray.at(t));
                color += self.shade(&p, view, mode)? * w;
                w_top += w;
            }
            color = color * (alpha / w_top);
        } else {
            for &(t, w) in &samples {
                if w > T::zero() {
                    let p = self.scene.surface_point(ray.at(t));
                    color += self.shade(&p, view, mode)? * w;
                }
            }
        }
        Ok((color, alpha.min(T::one())))
    }

    pub fn render(&self, camera: &Camera<T>, mode: RenderMode) -> Result<LinearImage<T>> {
        camera.validate()?;
        let (w, h) = (camera.width, camera.height);
        let px: Vec<(Rgb<T>, T)> = (0..w * h)
            .into_par_iter()
            .map(|i| self.trace(&camera.ray(i % w, i / w)?, mode))
            .collect::<Result<_>>()?;
        let (pixels, alpha) = px.into_iter().unzip();
        LinearImage::new(w, h, pixels, Some(alpha))
    }
}

/// Traces one ray with on-the-fly transfer baking at the default settings.
pub fn trace_radiance<T: Real>(
    scene: &VolumeScene<T>,
    light: &ShLight<T>,
    ray: &Ray<T>,
    mode: RenderMode,
) -> Result<(Rgb<T>, T)> {
    Renderer::new(scene, light)?.trace(ray, mode)
}

pub fn render_image<T: Real>(
    scene: &VolumeScene<T>,
    light: &ShLight<T>,
    camera: &Camera<T>,
    mode: RenderMode,
) -> Result<LinearImage<T>> {
    Renderer::new(scene, light)?.render(camera, mode)
}

/// Linear RGB image, row 0 at the top, with optional per-pixel opacity.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearImage<T: Real> {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb<T>>,
    pub alpha: Option<Vec<T>>,
}

impl<T: Real> LinearImage<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb<T>>, alpha: Option<Vec<T>>) -> Result<Self> {
        if pixels.len() != width * height || alpha.as_ref().is_some_and(|a| a.len() != width * height) {
            return Err(Error::InvalidParameter(format!(
                "image buffer does not match {width}x{height}"
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("pixel"));
        }
        if let Some(a) = &alpha {
            if a.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
                return Err(Error::InvalidParameter("alpha outside [0, 1]".into()));
            }
        }
        Ok(LinearImage {
            width,
            height,
            pixels,
            alpha,
        })
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb<T> {
        self.pixels[y * self.width + x]
    }

    fn float_data(&self, exposure: T) -> Vec<f32> {
        self.pixels
            .iter()
            .flat_map(|p| p.0.map(|c| (c * exposure).to_f64_lossy() as f32))
            .collect()
    }

    /// Linear HDR data scaled by `exposure`.
    pub fn encode_pfm(&self, exposure: T) -> Vec<u8> {
        image_io::encode_pfm(self.width, self.height, 3, &self.float_data(exposure))
    }

    /// 8-bit sRGB after scaling by `exposure` in linear space.
    pub fn encode_srgb_ppm(&self, exposure: T) -> Vec<u8> {
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .flat_map(|p| p.0.map(|c| quantize(linear_to_srgb((c * exposure).to_f64_lossy()))))
            .collect();
        image_io::encode_ppm(self.width, self.height, &bytes)
    }

    /// Opacity as a gray PPM (linear, no transfer curve); all-white without alpha.
    pub fn encode_alpha_ppm(&self) -> Vec<u8> {
        let bytes: Vec<u8> = (0..self.width * self.height)
            .flat_map(|i| {
                let a = self.alpha.as_ref().map_or(1.0, |a| a[i].to_f64_lossy());
                [quantize(a); 3]
            })
            .collect();
        image_io::encode_ppm(self.width, self.height, &bytes)
    }

    pub fn write_pfm(&self, path: impl AsRef<Path>, exposure: T) -> Result<()> {
        write_bytes(path.as_ref(), &self.encode_pfm(exposure))
    }

    pub fn write_srgb_ppm(&self, path: impl AsRef<Path>, exposure: T) -> Result<()> {
        write_bytes(path.as_ref(), &self.encode_srgb_ppm(exposure))
    }

    pub fn write_alpha_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        write_bytes(path.as_ref(), &self.encode_alpha_ppm())
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Clamps to `[0, 1]` and applies the sRGB transfer curve.
pub fn linear_to_srgb(v: f64) -> f64 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    if v <= 0.003_130_8 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}
