//! Real spherical harmonics: basis evaluation, coefficient vectors,
//! projection by spherical quadrature and reconstruction.
//!
//! Basis functions are real, orthonormal over the unit sphere, and carry the
//! Condon-Shortley phase. Coefficients are stored band by band: the entry for
//! band `l`, order `m` lives at zero-based offset `l*l + l + m`, so the
//! one-based index used in file headers is `j = l*l + l + m + 1`.

mod quadrature;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use quadrature::{ProjectionGrid, QuadratureRule, QuadratureSpec};

use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::scalar::Real;

/// Degree used when none is given: bands 0..=4, 25 coefficients.
pub const DEFAULT_DEGREE: usize = 4;

/// Largest degree the normalization table covers.
pub const MAX_DEGREE: usize = 16;

/// Human-readable description written next to every serialized coefficient set.
pub const CONVENTION: &str =
    "real orthonormal SH, Condon-Shortley phase, index j = l*l + l + m + 1 (1-based)";

/// Number of coefficients for bands `0..=degree`.
#[inline]
pub const fn coeff_count(degree: usize) -> usize {
    (degree + 1) * (degree + 1)
}

/// Zero-based storage offset of band `l`, order `m`.
#[inline]
pub fn sh_index(l: usize, m: i64) -> usize {
    debug_assert!(m.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + m) as usize
}

/// Inverse of [`sh_index`].
pub fn band_order(index: usize) -> (usize, i64) {
    let l = (index as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= index { l + 1 } else { l };
    (l, index as i64 - (l * l + l) as i64)
}

/// Band-limited spherical function as its SH coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ShVector<T> {
    degree: usize,
    coeffs: Vec<T>,
}

impl<T: Real> ShVector<T> {
    /// Wraps `coeffs`, which must hold exactly `(degree + 1)^2` finite values.
    pub fn with_degree(degree: usize, coeffs: Vec<T>) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        let expected = coeff_count(degree);
        if coeffs.len() != expected {
            return Err(Error::InvalidLength {
                degree,
                expected,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("SH coefficients"));
        }
        Ok(ShVector { degree, coeffs })
    }

    /// Wraps 25 coefficients (degree 4).
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        Self::with_degree(DEFAULT_DEGREE, coeffs)
    }

    pub fn zeros(degree: usize) -> Self {
        ShVector {
            degree,
            coeffs: vec![T::zero(); coeff_count(degree)],
        }
    }

    /// Basis vector with a one at zero-based `index`.
    pub fn unit(degree: usize, index: usize) -> Self {
        let mut v = Self::zeros(degree);
        v.coeffs[index] = T::one();
        v
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn get(&self, l: usize, m: i64) -> T {
        self.coeffs[sh_index(l, m)]
    }

    /// The DC (band 0) coefficient.
    pub fn dc(&self) -> T {
        self.coeffs[0]
    }

    /// Keeps bands `0..=degree`; `degree` must not exceed the current one.
    pub fn truncated(&self, degree: usize) -> Self {
        assert!(degree <= self.degree, "cannot truncate upward");
        ShVector {
            degree,
            coeffs: self.coeffs[..coeff_count(degree)].to_vec(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        ShVector {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(ShVector {
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&u, &v)| a * u + b * v)
                .collect(),
        })
    }

    pub fn norm(&self) -> T {
        self.coeffs.iter().map(|&c| c * c).sum::<T>().sqrt()
    }

    /// Evaluates the band-limited function at `dir`.
    pub fn eval(&self, dir: Direction<T>) -> T {
        let basis = eval_basis(dir, self.degree);
        dot(&self.coeffs, basis.coeffs())
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> ShVector<U> {
        ShVector {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| U::lit(c.to_f64_lossy())).collect(),
        }
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!)` for `0 <= m <= l <= MAX_DEGREE`, in f64.
fn normalization_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = vec![0.0; coeff_count(MAX_DEGREE)];
        for l in 0..=MAX_DEGREE {
            for m in 0..=l {
                // (l-m)!/(l+m)! as a running product of reciprocals.
                let ratio: f64 = ((l - m + 1)..=(l + m)).map(|k| 1.0 / k as f64).product();
                let k = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI) * ratio).sqrt();
                table[sh_index(l, m as i64)] = k;
            }
        }
        table
    })
}

/// Evaluates all real SH basis functions of bands `0..=degree` at `dir`.
///
/// Uses the associated Legendre recurrence on `P_l^m(z) / sin^m(theta)` and
/// the real and imaginary parts of `(x + iy)^m`, which avoids trigonometry
/// and stays exact at the poles.
pub fn eval_basis<T: Real>(dir: Direction<T>, degree: usize) -> ShVector<T> {
    let mut out = vec![T::zero(); coeff_count(degree)];
    eval_basis_into(dir, degree, &mut out);
    ShVector { degree, coeffs: out }
}

pub(crate) fn eval_basis_into<T: Real>(dir: Direction<T>, degree: usize, out: &mut [T]) {
    assert!(degree <= MAX_DEGREE, "SH degree {degree} above {MAX_DEGREE}");
    debug_assert_eq!(out.len(), coeff_count(degree));
    let norm = normalization_table();
    let (x, y, z) = (dir.x(), dir.y(), dir.z());
    let sqrt2 = T::SQRT_2();

    let mut cos_m = T::one();
    let mut sin_m = T::zero();
    // P~_m^m = (-1)^m (2m-1)!!
    let mut p_mm = T::one();
    for m in 0..=degree {
        if m > 0 {
            let c = x * cos_m - y * sin_m;
            sin_m = x * sin_m + y * cos_m;
            cos_m = c;
            p_mm = -p_mm * T::from_usize_lossy(2 * m - 1);
        }
        let mut p_prev = T::zero();
        let mut p_cur = p_mm;
        for l in m..=degree {
            if l == m + 1 {
                p_prev = p_cur;
                p_cur = z * T::from_usize_lossy(2 * m + 1) * p_mm;
            } else if l > m + 1 {
                let next = (T::from_usize_lossy(2 * l - 1) * z * p_cur
                    - T::from_usize_lossy(l + m - 1) * p_prev)
                    / T::from_usize_lossy(l - m);
                p_prev = p_cur;
                p_cur = next;
            }
            let k = T::lit(norm[sh_index(l, m as i64)]);
            if m == 0 {
                out[sh_index(l, 0)] = k * p_cur;
            } else {
                let a = sqrt2 * k * p_cur;
                out[sh_index(l, m as i64)] = a * cos_m;
                out[sh_index(l, -(m as i64))] = a * sin_m;
            }
        }
    }
}

/// Evaluates `sum_j v_j Y_j(dir)`.
pub fn reconstruct<T: Real>(v: &ShVector<T>, dir: Direction<T>) -> T {
    v.eval(dir)
}

/// `sum_j u_j v_j`; vectors must have equal length.
pub fn inner_product<T: Real>(u: &ShVector<T>, v: &ShVector<T>) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(dot(&u.coeffs, &v.coeffs))
}

/// Projects `f` onto bands `0..=degree` with the given quadrature.
pub fn project<T: Real>(
    f: impl Fn(Direction<T>) -> T,
    degree: usize,
    quad: QuadratureSpec,
) -> Result<ShVector<T>> {
    ProjectionGrid::new(quad, degree)?.project(f)
}

#[derive(Serialize, Deserialize)]
struct ShVectorFile<T> {
    degree: usize,
    convention: String,
    coeffs: Vec<T>,
}

impl<T: Real> Serialize for ShVector<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ShVectorFile {
            degree: self.degree,
            convention: CONVENTION.to_string(),
            coeffs: self.coeffs.clone(),
        }
        .serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for ShVector<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = ShVectorFile::<T>::deserialize(d)?;
        ShVector::with_degree(file.degree, file.coeffs).map_err(serde::de::Error::custom)
    }
}
