//! Normal-map accuracy metrics: masked cosine similarity and the L1
//! distance between Laplacians (image minus its Gaussian blur).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::image_io::read_pfm;
use crate::scalar::Real;

/// Tolerance on the length of normals under a non-zero mask.
pub const UNIT_TOLERANCE: f64 = 1e-3;

/// Default blur standard deviation, in pixels.
pub const DEFAULT_BLUR_SIGMA: f64 = 1.0;

/// What the masked sums are divided by.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Total pixel count `L * M`.
    #[default]
    PixelCount,
    /// Sum of the combined mask.
    MaskArea,
}

/// Multi-channel planar image, row-major, channels interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<T>,
}

impl<T: Real> Plane<T> {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height * channels || channels == 0 {
            return Err(Error::InvalidParameter(format!(
                "plane buffer of {} values does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Plane {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, v: T) -> Self {
        Plane {
            width,
            height,
            channels,
            data: vec![v; width * height * channels],
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> T {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    fn at_mut(&mut self, x: usize, y: usize, c: usize) -> &mut T {
        &mut self.data[(y * self.width + x) * self.channels + c]
    }
}

/// Normalized Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel<T: Real>(sigma: T) -> Vec<T> {
    let r = (sigma * T::lit(3.0)).ceil().to_f64_lossy() as i64;
    let two_s2 = T::lit(2.0) * sigma * sigma;
    let taps: Vec<T> = (-r..=r)
        .map(|i| {
            let x = T::lit(i as f64);
            (-(x * x) / two_s2).exp()
        })
        .collect();
    let sum: T = taps.iter().copied().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Half-sample symmetric reflection (`d c b a | a b c d | d c b a`).
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Separable Gaussian blur with reflected borders.
pub fn gaussian_blur<T: Real>(img: &Plane<T>, sigma: T) -> Result<Plane<T>> {
    if !(sigma > T::zero()) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("blur sigma must be positive, got {sigma}")));
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let mut tmp = Plane::filled(img.width, img.height, img.channels, T::zero());
    for y in 0..img.height {
        for x in 0..img.width {
            for c in 0..img.channels {
                let mut acc = T::zero();
                for (j, &w) in k.iter().enumerate() {
                    let sx = reflect(x as i64 + j as i64 - r, img.width);
                    acc += w * img.at(sx, y, c);
                }
                *tmp.at_mut(x, y, c) = acc;
            }
        }
    }
    let mut out = Plane::filled(img.width, img.height, img.channels, T::zero());
    for y in 0..img.height {
        for x in 0..img.width {
            for c in 0..img.channels {
                let mut acc = T::zero();
                for (j, &w) in k.iter().enumerate() {
                    let sy = reflect(y as i64 + j as i64 - r, img.height);
                    acc += w * tmp.at(x, sy, c);
                }
                *out.at_mut(x, y, c) = acc;
            }
        }
    }
    Ok(out)
}

/// `img - gaussian_blur(img, sigma)`.
pub fn laplacian<T: Real>(img: &Plane<T>, sigma: T) -> Result<Plane<T>> {
    let blurred = gaussian_blur(img, sigma)?;
    let data = img.data.iter().zip(&blurred.data).map(|(&a, &b)| a - b).collect();
    Ok(Plane { data, ..blurred })
}

/// Per-pixel normals with a soft mask in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap<T: Real> {
    width: usize,
    height: usize,
    normals: Vec<Vec3<T>>,
    mask: Vec<T>,
}

impl<T: Real> NormalMap<T> {
    /// Normals under a non-zero mask must be unit length within
    /// [`UNIT_TOLERANCE`].
    pub fn new(width: usize, height: usize, normals: Vec<Vec3<T>>, mask: Vec<T>) -> Result<Self> {
        if normals.len() != width * height || mask.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "normal map buffers do not match {width}x{height}"
            )));
        }
        for (i, (n, &m)) in normals.iter().zip(&mask).enumerate() {
            if !(m >= T::zero() && m <= T::one()) {
                return Err(Error::InvalidParameter(format!("mask value {m} at pixel {i} outside [0, 1]")));
            }
            if !n.is_finite() {
                return Err(Error::NonFinite("normal"));
            }
            if m > T::zero() && (n.norm() - T::one()).abs() > T::lit(UNIT_TOLERANCE) {
                return Err(Error::InvalidParameter(format!(
                    "masked normal at pixel {i} has length {}",
                    n.norm()
                )));
            }
        }
        Ok(NormalMap {
            width,
            height,
            normals,
            mask,
        })
    }

    /// Full mask.
    pub fn unmasked(width: usize, height: usize, normals: Vec<Vec3<T>>) -> Result<Self> {
        Self::new(width, height, normals, vec![T::one(); width * height])
    }

    /// Reads a 3-channel PFM of raw normals and an optional 1-channel PFM mask.
    pub fn load(normals: impl AsRef<Path>, mask: Option<&Path>) -> Result<Self> {
        let path = normals.as_ref();
        let img = read_pfm(path)?;
        if img.channels != 3 {
            return Err(Error::format(path, "normal map must be a 3-channel PFM"));
        }
        let n: Vec<Vec3<T>> = img
            .data
            .chunks_exact(3)
            .map(|c| Vec3::from_f64(c[0] as f64, c[1] as f64, c[2] as f64))
            .collect();
        let m = match mask {
            None => vec![T::one(); img.width * img.height],
            Some(mp) => {
                let mi = read_pfm(mp)?;
                if mi.channels != 1 {
                    return Err(Error::format(mp, "mask must be a 1-channel PFM"));
                }
                if (mi.width, mi.height) != (img.width, img.height) {
                    return Err(Error::DimensionMismatch(img.width, img.height, mi.width, mi.height));
                }
                mi.data.iter().map(|&v| T::lit(v as f64)).collect()
            }
        };
        Self::new(img.width, img.height, n, m)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn normals(&self) -> &[Vec3<T>] {
        &self.normals
    }

    pub fn mask(&self) -> &[T] {
        &self.mask
    }

    /// Same normals under a different mask.
    pub fn with_mask(&self, mask: Vec<T>) -> Result<Self> {
        Self::new(self.width, self.height, self.normals.clone(), mask)
    }

    pub fn coverage(&self) -> T {
        self.mask.iter().copied().sum::<T>() / T::from_usize_lossy(self.mask.len())
    }

    fn as_plane(&self) -> Plane<T> {
        Plane {
            width: self.width,
            height: self.height,
            channels: 3,
            data: self.normals.iter().flat_map(|n| [n.x, n.y, n.z]).collect(),
        }
    }
}

fn check_dims<T: Real>(a: &NormalMap<T>, b: &NormalMap<T>) -> Result<()> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    Ok(())
}

fn combined_mask<T: Real>(a: &NormalMap<T>, b: &NormalMap<T>) -> Vec<T> {
    a.mask.iter().zip(&b.mask).map(|(&x, &y)| x * y).collect()
}

fn denominator<T: Real>(mask: &[T], norm: Normalization) -> T {
    match norm {
        Normalization::PixelCount => T::from_usize_lossy(mask.len()),
        Normalization::MaskArea => mask.iter().copied().sum(),
    }
}

/// `(1 / LM) * sum (a . b) * mask`, or divided by the mask area.
pub fn normal_cosine_similarity<T: Real>(a: &NormalMap<T>, b: &NormalMap<T>, norm: Normalization) -> Result<T> {
    check_dims(a, b)?;
    let mask = combined_mask(a, b);
    let num: T = a
        .normals
        .iter()
        .zip(&b.normals)
        .zip(&mask)
        .map(|((x, y), &m)| x.dot(*y) * m)
        .sum();
    let den = denominator(&mask, norm);
    Ok(if den > T::zero() { num / den } else { T::zero() })
}

/// `(1 / LM) * sum |lap(a) - lap(b)| * mask`, summed over components.
pub fn laplacian_l1<T: Real>(a: &NormalMap<T>, b: &NormalMap<T>, sigma: T, norm: Normalization) -> Result<T> {
    check_dims(a, b)?;
    let la = laplacian(&a.as_plane(), sigma)?;
    let lb = laplacian(&b.as_plane(), sigma)?;
    let mask = combined_mask(a, b);
    let num: T = la
        .data
        .chunks_exact(3)
        .zip(lb.data.chunks_exact(3))
        .zip(&mask)
        .map(|((p, q), &m)| (0..3).map(|c| (p[c] - q[c]).abs()).sum::<T>() * m)
        .sum();
    let den = denominator(&mask, norm);
    Ok(if den > T::zero() { num / den } else { T::zero() })
}

/// Pixel rectangle; may extend past the image (the excess is zero padded).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropBox {
    pub x: i64,
    pub y: i64,
    pub width: usize,
    pub height: usize,
}

/// Crops to `bx`, pads the shorter side symmetrically with zeros to a
/// square, and resamples bilinearly to `size x size`.
pub fn crop_pad_resize<T: Real>(img: &Plane<T>, bx: CropBox, size: usize) -> Result<Plane<T>> {
    if bx.width == 0 || bx.height == 0 || size == 0 {
        return Err(Error::InvalidParameter("crop box and output size must be non-empty".into()));
    }
    let side = bx.width.max(bx.height);
    let ox = bx.x - ((side - bx.width) / 2) as i64;
    let oy = bx.y - ((side - bx.height) / 2) as i64;
    let inside_box = |sx: i64, sy: i64| {
        sx >= bx.x && sy >= bx.y && sx < bx.x + bx.width as i64 && sy < bx.y + bx.height as i64
    };
    let fetch = |sx: i64, sy: i64, c: usize| -> T {
        if inside_box(sx, sy) && sx >= 0 && sy >= 0 && (sx as usize) < img.width && (sy as usize) < img.height {
            img.at(sx as usize, sy as usize, c)
        } else {
            T::zero()
        }
    };
    let scale = side as f64 / size as f64;
    let mut out = Plane::filled(size, size, img.channels, T::zero());
    for y in 0..size {
        for x in 0..size {
            // Pixel centers map to pixel centers.
            let fx = (x as f64 + 0.5) * scale - 0.5;
            let fy = (y as f64 + 0.5) * scale - 0.5;
            let (x0, y0) = (fx.floor(), fy.floor());
            let (tx, ty) = (T::lit(fx - x0), T::lit(fy - y0));
            let (x0, y0) = (x0 as i64 + ox, y0 as i64 + oy);
            for c in 0..img.channels {
                let top = fetch(x0, y0, c) * (T::one() - tx) + fetch(x0 + 1, y0, c) * tx;
                let bot = fetch(x0, y0 + 1, c) * (T::one() - tx) + fetch(x0 + 1, y0 + 1, c) * tx;
                *out.at_mut(x, y, c) = top * (T::one() - ty) + bot * ty;
            }
        }
    }
    Ok(out)
}

impl<T: Real> NormalMap<T> {
    /// [`crop_pad_resize`] applied to normals and mask; resampled normals are
    /// renormalized and pixels whose normal vanishes are unmasked.
    pub fn crop_pad_resize(&self, bx: CropBox, size: usize) -> Result<Self> {
        let n = crop_pad_resize(&self.as_plane(), bx, size)?;
        let mask_plane = Plane {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.mask.clone(),
        };
        let m = crop_pad_resize(&mask_plane, bx, size)?;
        let mut normals = Vec::with_capacity(size * size);
        let mut mask = Vec::with_capacity(size * size);
        for (v, &mv) in n.data.chunks_exact(3).zip(&m.data) {
            match Vec3::new(v[0], v[1], v[2]).normalized() {
                Ok(d) => {
                    normals.push(d.vec());
                    mask.push(mv.max(T::zero()).min(T::one()));
                }
                Err(_) => {
                    normals.push(Vec3::zero());
                    mask.push(T::zero());
                }
            }
        }
        Self::new(size, size, normals, mask)
    }
}

/// Both metrics plus the parameters that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MetricsReport<T: Real> {
    pub cosine_similarity: T,
    pub laplacian_l1: T,
    pub blur_sigma: T,
    pub normalization: Normalization,
    pub width: usize,
    pub height: usize,
}

pub fn evaluate<T: Real>(a: &NormalMap<T>, b: &NormalMap<T>, sigma: T, norm: Normalization) -> Result<MetricsReport<T>> {
    Ok(MetricsReport {
        cosine_similarity: normal_cosine_similarity(a, b, norm)?,
        laplacian_l1: laplacian_l1(a, b, sigma, norm)?,
        blur_sigma: sigma,
        normalization: norm,
        width: a.width,
        height: a.height,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-4..8).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect(-1, 1), 0);
    }

    #[test]
    fn kernel_radius_and_sum() {
        let k = gaussian_kernel(1.0f64);
        assert_eq!(k.len(), 7);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(gaussian_kernel(0.4f64).len(), 5);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = Plane::filled(2, 2, 1, 0.0f64);
        assert!(gaussian_blur(&p, 0.0).is_err());
        let z = Vec3::from_f64(0.0, 0.0, 1.0);
        assert!(NormalMap::new(1, 1, vec![z * 2.0], vec![1.0]).is_err());
        assert!(NormalMap::new(1, 1, vec![z * 2.0], vec![0.0]).is_ok());
        assert!(NormalMap::new(1, 1, vec![z], vec![1.5]).is_err());
    }
}
