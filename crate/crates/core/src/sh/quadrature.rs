use serde::{Deserialize, Serialize};

use super::{coeff_count, dot, eval_basis_into, ShVector, MAX_DEGREE};
use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::scalar::Real;

/// How latitude nodes and weights are placed on the lat-long grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// Cell centers with weight `sin(theta) dtheta dphi`. Matches the pixel
    /// centers of an equirectangular map of the same resolution.
    #[default]
    Midpoint,
    /// Gauss-Legendre nodes in `cos(theta)`, uniform longitude. Integrates
    /// products of basis functions exactly once `n_theta > degree` and
    /// `n_phi > 2 * degree`, so projection on the grid is an exact
    /// orthogonal projection in the grid's inner product.
    GaussLegendre,
}

/// Deterministic latitude x longitude quadrature over the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n_theta: usize,
    pub n_phi: usize,
    #[serde(default)]
    pub rule: QuadratureRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::midpoint(128, 256)
    }
}

impl QuadratureSpec {
    pub const MIN_THETA: usize = 8;
    pub const MIN_PHI: usize = 16;

    pub fn midpoint(n_theta: usize, n_phi: usize) -> Self {
        QuadratureSpec {
            n_theta,
            n_phi,
            rule: QuadratureRule::Midpoint,
        }
    }

    pub fn gauss_legendre(n_theta: usize, n_phi: usize) -> Self {
        QuadratureSpec {
            n_theta,
            n_phi,
            rule: QuadratureRule::GaussLegendre,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_theta < Self::MIN_THETA || self.n_phi < Self::MIN_PHI {
            return Err(Error::QuadratureTooCoarse {
                n_theta: self.n_theta,
                n_phi: self.n_phi,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Latitude nodes as `(cos theta, sin theta, weight)`; the weight already
    /// includes the longitude spacing.
    fn latitudes(&self) -> Vec<(f64, f64, f64)> {
        let dphi = std::f64::consts::TAU / self.n_phi as f64;
        match self.rule {
            QuadratureRule::Midpoint => {
                let dtheta = std::f64::consts::PI / self.n_theta as f64;
                (0..self.n_theta)
                    .map(|i| {
                        let theta = (i as f64 + 0.5) * dtheta;
                        (theta.cos(), theta.sin(), theta.sin() * dtheta * dphi)
                    })
                    .collect()
            }
            QuadratureRule::GaussLegendre => gauss_legendre(self.n_theta)
                .into_iter()
                .map(|(z, w)| (z, (1.0 - z * z).max(0.0).sqrt(), w * dphi))
                .collect(),
        }
    }

    /// All `(direction, weight)` nodes, latitude-major from the +z pole.
    pub fn nodes<T: Real>(&self) -> Vec<(Direction<T>, T)> {
        let dphi = std::f64::consts::TAU / self.n_phi as f64;
        let mut out = Vec::with_capacity(self.len());
        for (cos_t, sin_t, w) in self.latitudes() {
            for k in 0..self.n_phi {
                let phi = (k as f64 + 0.5) * dphi;
                let v = crate::geometry::Vec3::from_f64(sin_t * phi.cos(), sin_t * phi.sin(), cos_t);
                out.push((Direction::from_unit(v), T::lit(w)));
            }
        }
        out
    }

    /// `sum_i w_i f(omega_i)`.
    pub fn integrate<T: Real>(&self, f: impl Fn(Direction<T>) -> T) -> T {
        self.nodes().into_iter().map(|(d, w)| w * f(d)).sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes in decreasing order.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        out.push((z, 2.0 / ((1.0 - z * z) * dp * dp)));
    }
    out
}

/// A quadrature grid with the SH basis pre-evaluated at every node, so many
/// functions can be projected without re-evaluating the basis.
#[derive(Clone, Debug)]
pub struct ProjectionGrid<T: Real> {
    spec: QuadratureSpec,
    degree: usize,
    directions: Vec<Direction<T>>,
    weights: Vec<T>,
    basis: Vec<T>,
}

impl<T: Real> ProjectionGrid<T> {
    pub fn new(spec: QuadratureSpec, degree: usize) -> Result<Self> {
        spec.validate()?;
        if degree > MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        let n = coeff_count(degree);
        let nodes = spec.nodes::<T>();
        let mut basis = vec![T::zero(); nodes.len() * n];
        for (row, (d, _)) in basis.chunks_exact_mut(n).zip(&nodes) {
            eval_basis_into(*d, degree, row);
        }
        let (directions, weights) = nodes.into_iter().unzip();
        Ok(ProjectionGrid {
            spec,
            degree,
            directions,
            weights,
            basis,
        })
    }

    pub fn spec(&self) -> QuadratureSpec {
        self.spec
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn directions(&self) -> &[Direction<T>] {
        &self.directions
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Basis values at node `i`.
    pub fn basis_row(&self, i: usize) -> &[T] {
        let n = coeff_count(self.degree);
        &self.basis[i * n..(i + 1) * n]
    }

    /// Projects samples taken at [`Self::directions`], in order.
    pub fn project_values(&self, values: &[T]) -> Result<ShVector<T>> {
        if values.len() != self.directions.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: self.directions.len(),
            });
        }
        let n = coeff_count(self.degree);
        let mut coeffs = vec![T::zero(); n];
        for (i, (&v, &w)) in values.iter().zip(&self.weights).enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite("projected function value"));
            }
            if v == T::zero() {
                continue;
            }
            let vw = v * w;
            for (c, &y) in coeffs.iter_mut().zip(self.basis_row(i)) {
                *c += vw * y;
            }
        }
        ShVector::with_degree(self.degree, coeffs)
    }

    pub fn project(&self, f: impl Fn(Direction<T>) -> T) -> Result<ShVector<T>> {
        let values: Vec<T> = self.directions.iter().map(|&d| f(d)).collect();
        self.project_values(&values)
    }

    /// Reconstructs `v` (truncated to `v.degree()`) at node `i`.
    pub fn reconstruct_at(&self, v: &ShVector<T>, i: usize) -> T {
        let row = self.basis_row(i);
        dot(v.coeffs(), &row[..v.len()])
    }
}
