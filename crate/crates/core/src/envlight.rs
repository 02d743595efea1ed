//! Distant environment lighting and its per-channel SH projection.
//!
//! Equirectangular maps put row 0 at `theta = 0` (the +z pole) and measure
//! longitude `phi` from +x toward +y, with column centers at
//! `phi = (k + 0.5) * 2 pi / width`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Direction, Rgb};
use crate::image_io;
use crate::scalar::Real;
use crate::sh::{self, ProjectionGrid, QuadratureSpec, ShVector};

/// Largest degree accepted for light projection.
pub const MAX_LIGHT_DEGREE: usize = 8;

/// Anything that returns incident radiance for a direction.
pub trait RadianceSource<T: Real>: Sync {
    fn radiance(&self, dir: Direction<T>) -> Rgb<T>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquirectMap<T> {
    width: usize,
    height: usize,
    pixels: Vec<Rgb<T>>,
}

impl<T: Real> EquirectMap<T> {
    /// Pixels row-major, top row (`theta = 0`) first. Values must be finite and non-negative.
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb<T>>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "equirectangular map {width}x{height} with {} pixels",
                pixels.len()
            )));
        }
        for (i, p) in pixels.iter().enumerate() {
            if !p.is_finite() || p.min_component() < T::zero() {
                return Err(Error::InvalidParameter(format!(
                    "radiance at pixel (x={}, y={}) is not finite and non-negative",
                    i % width,
                    i / width
                )));
            }
        }
        Ok(EquirectMap {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb<T>] {
        &self.pixels
    }

    fn at(&self, x: usize, y: usize) -> Rgb<T> {
        self.pixels[y * self.width + x]
    }

    /// Bilinear lookup; wraps in longitude, clamps in latitude.
    pub fn sample(&self, dir: Direction<T>) -> Rgb<T> {
        let (theta, phi) = dir.to_spherical();
        let u = phi / T::TAU() * T::from_usize_lossy(self.width) - T::lit(0.5);
        let v = theta / T::PI() * T::from_usize_lossy(self.height) - T::lit(0.5);
        let (uf, vf) = (u.floor(), v.floor());
        let (fx, fy) = (u - uf, v - vf);
        let w = self.width as i64;
        let h = self.height as i64;
        let x0 = (uf.to_i64().unwrap_or(0)).rem_euclid(w) as usize;
        let x1 = (x0 + 1) % self.width;
        let yi = vf.to_i64().unwrap_or(0);
        let y0 = yi.clamp(0, h - 1) as usize;
        let y1 = (yi + 1).clamp(0, h - 1) as usize;
        let top = self.at(x0, y0) * (T::one() - fx) + self.at(x1, y0) * fx;
        let bottom = self.at(x0, y1) * (T::one() - fx) + self.at(x1, y1) * fx;
        top * (T::one() - fy) + bottom * fy
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnvironmentLight<T: Real> {
    Equirectangular(EquirectMap<T>),
    Constant(Rgb<T>),
    /// `color * exp(sharpness * (axis . dir - 1))`: peak along `axis`, minimum opposite.
    Lobe {
        axis: Direction<T>,
        sharpness: T,
        color: Rgb<T>,
    },
}

impl<T: Real> EnvironmentLight<T> {
    pub fn constant(color: Rgb<T>) -> Result<Self> {
        check_color(color)?;
        Ok(EnvironmentLight::Constant(color))
    }

    pub fn lobe(axis: Direction<T>, sharpness: T, color: Rgb<T>) -> Result<Self> {
        check_color(color)?;
        if !sharpness.is_finite() || sharpness < T::zero() {
            return Err(Error::InvalidParameter(format!("lobe sharpness {sharpness}")));
        }
        Ok(EnvironmentLight::Lobe {
            axis,
            sharpness,
            color,
        })
    }

    /// Multiplies every radiance value by `s` (exposure).
    pub fn scaled(&self, s: T) -> Self {
        match self {
            EnvironmentLight::Equirectangular(m) => EnvironmentLight::Equirectangular(EquirectMap {
                width: m.width,
                height: m.height,
                pixels: m.pixels.iter().map(|&p| p * s).collect(),
            }),
            EnvironmentLight::Constant(c) => EnvironmentLight::Constant(*c * s),
            EnvironmentLight::Lobe {
                axis,
                sharpness,
                color,
            } => EnvironmentLight::Lobe {
                axis: *axis,
                sharpness: *sharpness,
                color: *color * s,
            },
        }
    }

    /// Radiance arriving from `dir`.
    pub fn sample_direction(&self, dir: Direction<T>) -> Rgb<T> {
        match self {
            EnvironmentLight::Equirectangular(m) => m.sample(dir),
            EnvironmentLight::Constant(c) => *c,
            EnvironmentLight::Lobe {
                axis,
                sharpness,
                color,
            } => *color * (*sharpness * (axis.dot(dir) - T::one())).exp(),
        }
    }

    /// Quadrature used by [`project_to_sh`]: the map's own pixel grid when it
    /// is fine enough, otherwise the default 128x256 midpoint grid.
    pub fn native_quadrature(&self) -> QuadratureSpec {
        match self {
            EnvironmentLight::Equirectangular(m)
                if m.height >= QuadratureSpec::MIN_THETA && m.width >= QuadratureSpec::MIN_PHI =>
            {
                QuadratureSpec::midpoint(m.height, m.width)
            }
            _ => QuadratureSpec::default(),
        }
    }
}

impl<T: Real> RadianceSource<T> for EnvironmentLight<T> {
    fn radiance(&self, dir: Direction<T>) -> Rgb<T> {
        self.sample_direction(dir)
    }
}

fn check_color<T: Real>(c: Rgb<T>) -> Result<()> {
    if !c.is_finite() || c.min_component() < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "radiance {:?} must be finite and non-negative",
            c.0
        )));
    }
    Ok(())
}

/// Reads a color PFM as an equirectangular light.
pub fn load_envmap<T: Real>(path: impl AsRef<Path>) -> Result<EnvironmentLight<T>> {
    let path = path.as_ref();
    let img = image_io::read_pfm(path)?;
    if img.channels != 3 {
        return Err(Error::format(
            path,
            "grayscale PFM (\"Pf\") given where a color environment map (\"PF\") is required",
        ));
    }
    let mut pixels = Vec::with_capacity(img.width * img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            let p = img.pixel(x, y);
            if p.iter().any(|v| v.is_nan()) {
                return Err(Error::NanPixel {
                    path: path.to_path_buf(),
                    x,
                    y,
                });
            }
            if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::format(
                    path,
                    format!("radiance at pixel (x={x}, y={y}) is infinite or negative"),
                ));
            }
            pixels.push(Rgb::new(T::lit(p[0] as f64), T::lit(p[1] as f64), T::lit(p[2] as f64)));
        }
    }
    Ok(EnvironmentLight::Equirectangular(EquirectMap::new(
        img.width, img.height, pixels,
    )?))
}

/// Per-channel SH projection of incident light.
#[derive(Clone, Debug, PartialEq)]
pub struct ShLight<T> {
    channels: [ShVector<T>; 3],
}

impl<T: Real> ShLight<T> {
    pub fn new(channels: [ShVector<T>; 3]) -> Result<Self> {
        let d = channels[0].degree();
        if channels.iter().any(|c| c.degree() != d) {
            return Err(Error::InvalidParameter(
                "SH light channels have different degrees".into(),
            ));
        }
        Ok(ShLight { channels })
    }

    /// Exact projection of a constant light: DC = `2 sqrt(pi) * c`.
    pub fn constant(color: Rgb<T>, degree: usize) -> Self {
        let dc = T::lit(2.0) * T::PI().sqrt();
        let channels = color.0.map(|c| {
            let mut v = vec![T::zero(); sh::coeff_count(degree)];
            v[0] = dc * c;
            ShVector::with_degree(degree, v).expect("constant light coefficients")
        });
        ShLight { channels }
    }

    pub fn degree(&self) -> usize {
        self.channels[0].degree()
    }

    pub fn channels(&self) -> &[ShVector<T>; 3] {
        &self.channels
    }

    pub fn channel(&self, c: usize) -> &ShVector<T> {
        &self.channels[c]
    }

    pub fn scaled(&self, s: T) -> Self {
        ShLight {
            channels: [0, 1, 2].map(|c| self.channels[c].scaled(s)),
        }
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        Ok(ShLight {
            channels: [
                self.channels[0].lincomb(a, &other.channels[0], b)?,
                self.channels[1].lincomb(a, &other.channels[1], b)?,
                self.channels[2].lincomb(a, &other.channels[2], b)?,
            ],
        })
    }

    pub fn truncated(&self, degree: usize) -> Self {
        ShLight {
            channels: [0, 1, 2].map(|c| self.channels[c].truncated(degree)),
        }
    }

    /// Low-pass reconstruction; may be negative where the SH rings.
    pub fn eval(&self, dir: Direction<T>) -> Rgb<T> {
        let basis = sh::eval_basis(dir, self.degree());
        Rgb([0, 1, 2].map(|c| sh::dot(self.channels[c].coeffs(), basis.coeffs())))
    }
}

impl<T: Real> RadianceSource<T> for ShLight<T> {
    fn radiance(&self, dir: Direction<T>) -> Rgb<T> {
        self.eval(dir)
    }
}

#[derive(Serialize, Deserialize)]
struct ShLightFile<T> {
    degree: usize,
    convention: String,
    channels: [Vec<T>; 3],
}

impl<T: Real> Serialize for ShLight<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ShLightFile {
            degree: self.degree(),
            convention: sh::CONVENTION.to_string(),
            channels: [0, 1, 2].map(|c| self.channels[c].coeffs().to_vec()),
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for ShLight<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = ShLightFile::<T>::deserialize(d)?;
        let [r, g, b] = f.channels;
        let mk = |v| ShVector::with_degree(f.degree, v).map_err(D::Error::custom);
        ShLight::new([mk(r)?, mk(g)?, mk(b)?]).map_err(D::Error::custom)
    }
}

/// Projects `env` onto bands `0..=degree` using [`EnvironmentLight::native_quadrature`].
pub fn project_to_sh<T: Real>(env: &EnvironmentLight<T>, degree: usize) -> Result<ShLight<T>> {
    project_to_sh_with(env, degree, env.native_quadrature())
}

pub fn project_to_sh_with<T: Real>(
    env: &EnvironmentLight<T>,
    degree: usize,
    quad: QuadratureSpec,
) -> Result<ShLight<T>> {
    if degree > MAX_LIGHT_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    let grid = ProjectionGrid::new(quad, degree)?;
    let samples: Vec<Rgb<T>> = grid
        .directions()
        .iter()
        .map(|&d| env.sample_direction(d))
        .collect();
    let channel = |c: usize| {
        let values: Vec<T> = samples.iter().map(|s| s.0[c]).collect();
        grid.project_values(&values)
    };
    ShLight::new([channel(0)?, channel(1)?, channel(2)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(x: f64, y: f64, z: f64) -> Direction<f64> {
        Direction::from_f64(x, y, z).unwrap()
    }

    #[test]
    fn constant_light_is_direction_independent() {
        let c = Rgb::new(0.2, 0.5, 1.5);
        let env = EnvironmentLight::constant(c).unwrap();
        for d in [dir(0.0, 0.0, 1.0), dir(1.0, 1.0, 0.0), dir(0.0, -0.2, -1.0)] {
            assert_eq!(env.sample_direction(d), c);
        }
    }

    #[test]
    fn constant_equirect_map_is_constant_at_poles_and_equator() {
        let c = Rgb::new(1.0, 2.0, 3.0);
        let m = EquirectMap::new(4, 2, vec![c; 8]).unwrap();
        let env = EnvironmentLight::Equirectangular(m);
        for d in [dir(0.0, 0.0, 1.0), dir(0.0, 0.0, -1.0), dir(1.0, 0.0, 0.0), dir(-0.3, 0.9, 0.0)] {
            assert!(env.sample_direction(d).max_abs_diff(c) < 1e-12);
        }
    }

    #[test]
    fn lobe_peaks_on_axis() {
        let axis = dir(0.3, -0.4, 0.8);
        let env = EnvironmentLight::lobe(axis, 4.0, Rgb::splat(2.0)).unwrap();
        let peak = env.sample_direction(axis)[0];
        let low = env.sample_direction(-axis)[0];
        assert!((peak - 2.0).abs() < 1e-12);
        assert!((low - 2.0 * (-8.0f64).exp()).abs() < 1e-12);
        let side = env.sample_direction(dir(1.0, 0.0, 0.0))[0];
        assert!(low < side && side < peak);
    }

    #[test]
    fn bilinear_hits_pixel_centers_exactly() {
        let pixels: Vec<_> = (0..32 * 16).map(|i| Rgb::splat(i as f64)).collect();
        let m = EquirectMap::new(32, 16, pixels).unwrap();
        let theta = (3.0 + 0.5) * std::f64::consts::PI / 16.0;
        let phi = (7.0 + 0.5) * std::f64::consts::TAU / 32.0;
        let v = m.sample(Direction::from_spherical(theta, phi));
        assert!((v[0] - (3 * 32 + 7) as f64).abs() < 1e-9);
        // Longitude wraps: halfway between the last and first column.
        let v = m.sample(Direction::from_spherical(theta, 1e-12));
        assert!((v[0] - (3 * 32) as f64 - 15.5).abs() < 1e-6);
    }

    #[test]
    fn rejects_negative_radiance() {
        assert!(EnvironmentLight::constant(Rgb::new(-1.0, 0.0, 0.0)).is_err());
        assert!(EquirectMap::new(1, 1, vec![Rgb::new(0.0, f64::INFINITY, 0.0)]).is_err());
        assert!(EnvironmentLight::lobe(dir(0.0, 0.0, 1.0), -1.0, Rgb::splat(1.0)).is_err());
    }

    #[test]
    fn degree_limit() {
        let env = EnvironmentLight::constant(Rgb::splat(1.0f64)).unwrap();
        assert!(matches!(project_to_sh(&env, 9), Err(Error::UnsupportedDegree(9))));
        assert_eq!(project_to_sh(&env, 8).unwrap().channel(0).len(), 81);
    }

    #[test]
    fn sh_light_json_layout() {
        let l = ShLight::constant(Rgb::new(1.0f64, 0.5, 0.0), 4);
        let v: serde_json::Value = serde_json::to_value(&l).unwrap();
        assert_eq!(v["degree"], 4);
        assert!(v["convention"].as_str().unwrap().contains("j = l*l + l + m + 1"));
        let ch = v["channels"].as_array().unwrap();
        assert_eq!(ch.len(), 3);
        assert!(ch.iter().all(|c| c.as_array().unwrap().len() == 25));
        let back: ShLight<f64> = serde_json::from_value(v).unwrap();
        assert_eq!(back, l);
    }
}
