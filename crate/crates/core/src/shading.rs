//! Outgoing radiance from a transfer vector and an SH light.
//!
//! Diffuse: `(albedo / pi) * <t, l>` per channel. Specular: a mirror lobe
//! evaluated as `tint * L(r) * T(r)` with `r` the view reflected about the
//! normal. Both stay in linear units and may be negative from SH ringing.

use serde::{Deserialize, Serialize};

use crate::envlight::ShLight;
use crate::error::{Error, Result};
use crate::field::SurfacePoint;
use crate::geometry::{Direction, Rgb};
use crate::scalar::Real;
use crate::sh::{inner_product, ShVector};

/// `2 (w . n) n - w`.
pub fn reflect_direction<T: Real>(w: Direction<T>, n: Direction<T>) -> Direction<T> {
    let v = n.vec() * (T::lit(2.0) * w.dot(n)) - w.vec();
    v.normalized().unwrap_or(n)
}

fn check_degree<T: Real>(t: &ShVector<T>, light: &ShLight<T>) -> Result<()> {
    if t.degree() != light.degree() {
        return Err(Error::DegreeMismatch {
            transfer: t.degree(),
            light: light.degree(),
        });
    }
    Ok(())
}

/// Per-channel `<t, l_c>` (cosine- and visibility-weighted irradiance).
pub fn irradiance<T: Real>(transfer: &ShVector<T>, light: &ShLight<T>) -> Result<Rgb<T>> {
    check_degree(transfer, light)?;
    let c = |i: usize| inner_product(transfer, light.channel(i));
    Ok(Rgb::new(c(0)?, c(1)?, c(2)?))
}

pub fn diffuse_radiance<T: Real>(albedo: Rgb<T>, transfer: &ShVector<T>, light: &ShLight<T>) -> Result<Rgb<T>> {
    Ok(albedo * irradiance(transfer, light)? * T::FRAC_1_PI())
}

pub fn specular_radiance<T: Real>(
    tint: T,
    n: Direction<T>,
    view: Direction<T>,
    transfer: &ShVector<T>,
    light: &ShLight<T>,
) -> Result<Rgb<T>> {
    check_degree(transfer, light)?;
    let r = reflect_direction(view, n);
    Ok(light.eval(r) * (transfer.eval(r) * tint))
}

/// Diffuse and specular parts of the radiance leaving a point toward `view`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RadianceSample<T: Real> {
    pub diffuse: Rgb<T>,
    pub specular: Rgb<T>,
}

impl<T: Real> RadianceSample<T> {
    pub fn total(&self) -> Rgb<T> {
        self.diffuse + self.specular
    }
}

/// Radiance toward `view`; black for points without a normal.
pub fn outgoing_radiance<T: Real>(
    point: &SurfacePoint<T>,
    view: Direction<T>,
    transfer: &ShVector<T>,
    light: &ShLight<T>,
) -> Result<RadianceSample<T>> {
    check_degree(transfer, light)?;
    let Some(n) = point.normal else {
        return Ok(RadianceSample {
            diffuse: Rgb::zero(),
            specular: Rgb::zero(),
        });
    };
    Ok(RadianceSample {
        diffuse: diffuse_radiance(point.albedo, transfer, light)?,
        specular: specular_radiance(point.tint, n, view, transfer, light)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflection_about_normal() {
        let n = Direction::<f64>::unit_z();
        let w = Direction::from_f64(1.0, 0.0, 1.0).unwrap();
        let r = reflect_direction(w, n);
        assert!((r.x() + w.x()).abs() < 1e-12 && (r.z() - w.z()).abs() < 1e-12);
        assert!((reflect_direction(n, n).z() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degree_mismatch_is_rejected() {
        let t = ShVector::<f64>::zeros(3);
        let l = ShLight::constant(Rgb::splat(1.0), 4);
        assert!(matches!(
            diffuse_radiance(Rgb::splat(1.0), &t, &l),
            Err(Error::DegreeMismatch { transfer: 3, light: 4 })
        ));
    }

    #[test]
    fn zero_tint_has_no_specular() {
        let t = ShVector::<f64>::unit(4, 0);
        let l = ShLight::constant(Rgb::splat(1.0), 4);
        let s = specular_radiance(0.0, Direction::unit_z(), Direction::unit_z(), &t, &l).unwrap();
        assert_eq!(s, Rgb::zero());
    }
}
