//! Monte Carlo reference for diffuse shading and end-to-end checks of the
//! baked transfer against directly traced visibility.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envlight::{RadianceSource, ShLight};
use crate::error::{Error, Result};
use crate::field::VolumeScene;
use crate::geometry::{uniform_sphere_direction, Direction, Rgb, Vec3};
use crate::scalar::Real;
use crate::sh::{QuadratureSpec, ShVector, DEFAULT_DEGREE};
use crate::shading::{diffuse_radiance, reflect_direction};
use crate::transport::{cosine_term, derive_seed, nrt_loss, nrt_rays, visibility, ProbePoint, TransferBaker, TransferSample};

/// Mean and standard error of a Monte Carlo estimate, per channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct McEstimate<T: Real> {
    pub mean: Rgb<T>,
    pub std_err: Rgb<T>,
    pub samples: usize,
}

/// `(albedo / pi) * integral of L V H` by uniform sphere sampling.
pub fn mc_diffuse_radiance<T: Real, L: RadianceSource<T> + ?Sized>(
    scene: &VolumeScene<T>,
    light: &L,
    x: Vec3<T>,
    n: Direction<T>,
    albedo: Rgb<T>,
    samples: usize,
    seed: u64,
) -> McEstimate<T> {
    assert!(samples >= 1, "Monte Carlo estimate needs at least one sample");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Accumulate in f64 whatever T is; sums over 1e5 samples lose digits in f32.
    let mut sum = [0f64; 3];
    let mut sum_sq = [0f64; 3];
    let scale = albedo.map(|a| a * T::lit(4.0)).0.map(|c| c.to_f64_lossy());
    for _ in 0..samples {
        let w: Direction<T> = uniform_sphere_direction(&mut rng);
        let h = cosine_term(n, w);
        if h <= T::zero() {
            continue;
        }
        let li = light.radiance(w);
        if li == Rgb::zero() {
            continue;
        }
        let vh = (visibility(scene, x, w) * h).to_f64_lossy();
        for c in 0..3 {
            let f = scale[c] * li[c].to_f64_lossy() * vh;
            sum[c] += f;
            sum_sq[c] += f * f;
        }
    }
    let s = samples as f64;
    let mut mean = [0f64; 3];
    let mut se = [0f64; 3];
    for c in 0..3 {
        mean[c] = sum[c] / s;
        let var = if samples > 1 {
            ((sum_sq[c] - s * mean[c] * mean[c]) / (s - 1.0)).max(0.0)
        } else {
            0.0
        };
        se[c] = (var / s).sqrt();
    }
    McEstimate {
        mean: Rgb(mean.map(T::lit)),
        std_err: Rgb(se.map(T::lit)),
        samples,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    /// Transfer degree under test.
    pub degree: usize,
    /// Grid for baking and for the visibility-map error.
    pub grid: QuadratureSpec,
    /// Monte Carlo samples per point; zero skips the diffuse comparison.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            degree: DEFAULT_DEGREE,
            grid: QuadratureSpec::gauss_legendre(32, 64),
            mc_samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PointReport<T: Real> {
    pub index: usize,
    pub position: Vec3<T>,
    pub normal: Direction<T>,
    /// Sum of squared residuals over the point's ray set.
    pub nrt_loss: T,
    pub nrt_mean_per_ray: T,
    /// Same ray set with an all-zero transfer vector.
    pub zero_transfer_nrt_loss: T,
    /// RMS over the sphere of the reconstructed minus traced `V H`, per
    /// truncation degree `0..=degree`.
    pub visibility_l2_by_degree: Vec<T>,
    pub visibility_l2: T,
    pub sh_diffuse: Rgb<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_diffuse: Option<McEstimate<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_3_sigma: Option<bool>,
    /// Mirror-direction product `L(r) T(r)` is negative in some channel.
    pub specular_negative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ValidationReport<T: Real> {
    pub degree: usize,
    pub grid: QuadratureSpec,
    pub mc_samples: usize,
    pub seed: u64,
    pub rays_per_point: usize,
    pub point_count: usize,
    pub mean_nrt_loss: T,
    pub mean_nrt_per_ray: T,
    pub mean_zero_transfer_nrt_loss: T,
    pub mean_visibility_l2: T,
    pub mean_visibility_l2_by_degree: Vec<T>,
    /// Every point's visibility error is non-increasing in degree.
    pub degree_monotone: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction_within_3_sigma: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_rms_diffuse_error: Option<T>,
    pub negative_specular_rate: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
    pub points: Vec<PointReport<T>>,
}

/// Relative slack for comparing visibility errors across degrees.
const MONOTONE_SLACK: f64 = 1e-12;

fn validate_point<T: Real, L: RadianceSource<T> + ?Sized>(
    scene: &VolumeScene<T>,
    light: &L,
    light_sh: &ShLight<T>,
    baker: &TransferBaker<T>,
    probe: &ProbePoint<T>,
    index: usize,
    config: &ValidationConfig,
) -> Result<PointReport<T>> {
    let (sample, map) = baker.bake_with_map(scene, &probe.point)?;
    let n = probe.point.normal.ok_or(Error::InvalidPoint)?;
    let grid = baker.grid();
    let area = T::lit(4.0) * T::PI();

    let visibility_l2_by_degree: Vec<T> = (0..=config.degree)
        .map(|d| {
            let t = sample.transfer.truncated(d);
            let sq: T = (0..map.len())
                .map(|i| {
                    let e = grid.reconstruct_at(&t, i) - map[i];
                    grid.weights()[i] * e * e
                })
                .sum();
            (sq / area).sqrt()
        })
        .collect();

    let rays = nrt_rays(n, probe.view, derive_seed(config.seed, 2 * index as u64 + 1));
    let loss = nrt_loss(scene, &sample, &rays);
    let zero = TransferSample {
        point: sample.point,
        transfer: ShVector::zeros(config.degree),
    };
    let zero_loss = nrt_loss(scene, &zero, &rays);

    let sh_diffuse = diffuse_radiance(probe.point.albedo, &sample.transfer, light_sh)?;
    let (mc, within) = if config.mc_samples > 0 {
        let mc = mc_diffuse_radiance(
            scene,
            light,
            probe.point.position,
            n,
            probe.point.albedo,
            config.mc_samples,
            derive_seed(config.seed, 2 * index as u64),
        );
        let ok = (0..3).all(|c| (sh_diffuse[c] - mc.mean[c]).abs() <= T::lit(3.0) * mc.std_err[c]);
        (Some(mc), Some(ok))
    } else {
        (None, None)
    };

    let r = reflect_direction(probe.view, n);
    let spec = light_sh.eval(r) * sample.transfer.eval(r);

    Ok(PointReport {
        index,
        position: probe.point.position,
        normal: n,
        nrt_loss: loss,
        nrt_mean_per_ray: loss / T::from_usize_lossy(rays.rays.len()),
        zero_transfer_nrt_loss: zero_loss,
        visibility_l2: visibility_l2_by_degree[config.degree],
        visibility_l2_by_degree,
        sh_diffuse,
        mc_diffuse: mc,
        within_3_sigma: within,
        specular_negative: spec.min_component() < T::zero(),
    })
}

/// Bakes each point, compares SH diffuse shading with the Monte Carlo
/// reference under `light`, and measures transfer residuals.
///
/// `light_sh` is the SH projection of `light` at degree at least
/// `config.degree`; it is truncated to the transfer degree for shading.
pub fn compare_prt_vs_mc<T: Real, L: RadianceSource<T> + ?Sized>(
    scene: &VolumeScene<T>,
    light: &L,
    light_sh: &ShLight<T>,
    points: &[ProbePoint<T>],
    config: &ValidationConfig,
) -> Result<ValidationReport<T>> {
    if light_sh.degree() < config.degree {
        return Err(Error::DegreeMismatch {
            transfer: config.degree,
            light: light_sh.degree(),
        });
    }
    let points: Vec<&ProbePoint<T>> = points.iter().filter(|p| p.point.is_valid()).collect();
    if points.is_empty() {
        return Err(Error::NoSurfacePoints);
    }
    let light_sh = light_sh.truncated(config.degree);
    let baker = TransferBaker::with_grid(config.grid, config.degree)?;
    let entries = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| validate_point(scene, light, &light_sh, &baker, p, i, config))
        .collect::<Result<Vec<_>>>()?;

    let count = T::from_usize_lossy(entries.len());
    let mean = |f: &dyn Fn(&PointReport<T>) -> T| entries.iter().map(f).sum::<T>() / count;
    let mean_by_degree = (0..=config.degree)
        .map(|d| mean(&|e| e.visibility_l2_by_degree[d]))
        .collect();
    let degree_monotone = entries.iter().all(|e| {
        e.visibility_l2_by_degree
            .windows(2)
            .all(|w| w[1] <= w[0] * T::lit(1.0 + MONOTONE_SLACK) + T::lit(MONOTONE_SLACK))
    });
    let (fraction, rel_rms) = if config.mc_samples > 0 {
        let ok = entries.iter().filter(|e| e.within_3_sigma == Some(true)).count();
        let mut num = T::zero();
        let mut den = T::zero();
        for e in &entries {
            let mc = e.mc_diffuse.as_ref().unwrap().mean;
            for c in 0..3 {
                num += (e.sh_diffuse[c] - mc[c]).powi(2);
                den += mc[c].powi(2);
            }
        }
        let rel = if den > T::zero() { (num / den).sqrt() } else { T::zero() };
        (Some(T::from_usize_lossy(ok) / count), Some(rel))
    } else {
        (None, None)
    };
    let negatives = entries.iter().filter(|e| e.specular_negative).count();

    Ok(ValidationReport {
        degree: config.degree,
        grid: config.grid,
        mc_samples: config.mc_samples,
        seed: config.seed,
        rays_per_point: crate::transport::AUXILIARY_RAYS + 2,
        point_count: entries.len(),
        mean_nrt_loss: mean(&|e| e.nrt_loss),
        mean_nrt_per_ray: mean(&|e| e.nrt_mean_per_ray),
        mean_zero_transfer_nrt_loss: mean(&|e| e.zero_transfer_nrt_loss),
        mean_visibility_l2: mean(&|e| e.visibility_l2),
        mean_visibility_l2_by_degree: mean_by_degree,
        degree_monotone,
        fraction_within_3_sigma: fraction,
        relative_rms_diffuse_error: rel_rms,
        negative_specular_rate: T::from_usize_lossy(negatives) / count,
        runtime_seconds: None,
        points: entries,
    })
}

impl<T: Real> ValidationReport<T> {
    /// Aggregate summary as an aligned text table.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let g = &self.grid;
        let _ = writeln!(s, "points              {}", self.point_count);
        let _ = writeln!(s, "degree              {}", self.degree);
        let _ = writeln!(s, "grid                {}x{} {:?}", g.n_theta, g.n_phi, g.rule);
        let _ = writeln!(s, "seed                {}", self.seed);
        let _ = writeln!(s, "mc samples          {}", self.mc_samples);
        let _ = writeln!(s, "nrt loss (baked)    {:.6}", self.mean_nrt_loss.to_f64_lossy());
        let _ = writeln!(s, "nrt loss (zeroed)   {:.6}", self.mean_zero_transfer_nrt_loss.to_f64_lossy());
        let _ = writeln!(s, "nrt per ray         {:.6}", self.mean_nrt_per_ray.to_f64_lossy());
        for (d, v) in self.mean_visibility_l2_by_degree.iter().enumerate() {
            let _ = writeln!(s, "visibility l2 @ {d}    {:.6}", v.to_f64_lossy());
        }
        let _ = writeln!(s, "degree monotone     {}", self.degree_monotone);
        if let Some(f) = self.fraction_within_3_sigma {
            let _ = writeln!(s, "within 3 sigma      {:.4}", f.to_f64_lossy());
        }
        if let Some(r) = self.relative_rms_diffuse_error {
            let _ = writeln!(s, "rel rms diffuse     {:.6}", r.to_f64_lossy());
        }
        let _ = writeln!(s, "negative specular   {:.4}", self.negative_specular_rate.to_f64_lossy());
        if let Some(t) = self.runtime_seconds {
            let _ = writeln!(s, "runtime (s)         {t:.3}");
        }
        s
    }
}
