//! Baked transfer vectors stored for reuse across renders.
//!
//! Binary layout: consecutive records of little-endian `f64`, each
//! `position[3] normal[3] coeffs[(degree + 1)^2]`. A JSON sidecar next to
//! the binary (same path plus `.json`) records the degree, record count and
//! a hash of the scene the cache was baked from.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SurfacePoint, VolumeScene};
use crate::geometry::{Direction, Vec3};
use crate::scalar::Real;
use crate::sh::{coeff_count, ShVector};
use crate::transport::{TransferBaker, TransferSample};

pub const RECORD_LAYOUT: &str = "little-endian f64: position[3] normal[3] coeffs[(degree+1)^2]";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheSidecar {
    pub degree: usize,
    pub count: usize,
    pub scene_hash: String,
    pub record_layout: String,
}

pub fn sidecar_path(bin: &Path) -> PathBuf {
    let mut s = bin.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Uniform grid over the record positions for nearest-record queries.
#[derive(Clone, Debug)]
struct PointGrid {
    min: [f64; 3],
    cell: [f64; 3],
    dims: [usize; 3],
    buckets: Vec<Vec<u32>>,
}

impl PointGrid {
    fn build(points: &[[f64; 3]]) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in points {
            for a in 0..3 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        let n = ((points.len() as f64).cbrt().ceil() as usize).clamp(1, 64);
        let mut cell = [1.0; 3];
        for a in 0..3 {
            let ext = max[a] - min[a];
            if ext > 0.0 {
                cell[a] = ext / n as f64;
            }
        }
        let dims = [n; 3];
        let mut grid = PointGrid {
            min,
            cell,
            dims,
            buckets: vec![Vec::new(); n * n * n],
        };
        for (i, p) in points.iter().enumerate() {
            let c = grid.cell_of(*p);
            let k = grid.flat(c);
            grid.buckets[k].push(i as u32);
        }
        grid
    }

    fn cell_of(&self, p: [f64; 3]) -> [usize; 3] {
        let mut c = [0; 3];
        for a in 0..3 {
            let f = ((p[a] - self.min[a]) / self.cell[a]).floor();
            c[a] = if f.is_nan() || f < 0.0 { 0 } else { (f as usize).min(self.dims[a] - 1) };
        }
        c
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Index of the nearest point; ties go to the lowest index.
    fn nearest(&self, points: &[[f64; 3]], q: [f64; 3]) -> usize {
        let c = self.cell_of(q);
        let min_cell = self.cell.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_ring = self.dims.iter().copied().max().unwrap();
        let mut best = (f64::INFINITY, usize::MAX);
        for r in 0..=max_ring {
            let lo = |a: usize| c[a].saturating_sub(r);
            let hi = |a: usize| (c[a] + r).min(self.dims[a] - 1);
            for z in lo(2)..=hi(2) {
                for y in lo(1)..=hi(1) {
                    for x in lo(0)..=hi(0) {
                        let ring = [x.abs_diff(c[0]), y.abs_diff(c[1]), z.abs_diff(c[2])];
                        if ring.into_iter().max().unwrap() != r {
                            continue;
                        }
                        for &i in &self.buckets[self.flat([x, y, z])] {
                            let p = points[i as usize];
                            let d = (0..3).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>();
                            if (d, i as usize) < best {
                                best = (d, i as usize);
                            }
                        }
                    }
                }
            }
            let reach = r as f64 * min_cell;
            if best.1 != usize::MAX && best.0 <= reach * reach {
                break;
            }
        }
        best.1
    }
}

#[derive(Clone, Debug)]
pub struct TransferCache<T: Real> {
    degree: usize,
    records: Vec<TransferSample<T>>,
    positions: Vec<[f64; 3]>,
    grid: PointGrid,
}

impl<T: Real> TransferCache<T> {
    /// All records must carry a normal and share one degree.
    pub fn new(degree: usize, records: Vec<TransferSample<T>>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::NoSurfacePoints);
        }
        for r in &records {
            if r.transfer.degree() != degree {
                return Err(Error::DegreeMismatch {
                    transfer: r.transfer.degree(),
                    light: degree,
                });
            }
            if !r.point.is_valid() {
                return Err(Error::InvalidPoint);
            }
        }
        let positions: Vec<[f64; 3]> = records
            .iter()
            .map(|r| r.point.position.into())
            .map(|p: [T; 3]| p.map(|c| c.to_f64_lossy()))
            .collect();
        let grid = PointGrid::build(&positions);
        Ok(TransferCache {
            degree,
            records,
            positions,
            grid,
        })
    }

    /// Bakes every point in parallel; output order follows `points`.
    pub fn bake(scene: &VolumeScene<T>, points: &[SurfacePoint<T>], baker: &TransferBaker<T>) -> Result<Self> {
        let records = points
            .par_iter()
            .map(|p| baker.bake(scene, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(baker.degree(), records)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn records(&self) -> &[TransferSample<T>] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record whose position is closest to `x`.
    pub fn nearest(&self, x: Vec3<T>) -> &TransferSample<T> {
        let q: [T; 3] = x.into();
        &self.records[self.grid.nearest(&self.positions, q.map(|c| c.to_f64_lossy()))]
    }

    pub fn encode(&self) -> Vec<u8> {
        let per = 6 + coeff_count(self.degree);
        let mut out = Vec::with_capacity(self.records.len() * per * 8);
        for r in &self.records {
            let n = r.point.normal.expect("cached records have normals").vec();
            let head = [r.point.position, n];
            for v in head {
                for c in [v.x, v.y, v.z] {
                    out.extend_from_slice(&c.to_f64_lossy().to_le_bytes());
                }
            }
            for c in r.transfer.coeffs() {
                out.extend_from_slice(&c.to_f64_lossy().to_le_bytes());
            }
        }
        out
    }

    /// Writes the binary records and the sidecar.
    pub fn write(&self, path: impl AsRef<Path>, scene_hash: &str) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))?;
        let side = CacheSidecar {
            degree: self.degree,
            count: self.records.len(),
            scene_hash: scene_hash.to_string(),
            record_layout: RECORD_LAYOUT.to_string(),
        };
        let sp = sidecar_path(path);
        let text = serde_json::to_string_pretty(&side)? + "\n";
        std::fs::write(&sp, text).map_err(|e| Error::io(&sp, e))
    }

    /// Reads a cache; albedo and tint come from `scene` at each position.
    pub fn read(path: impl AsRef<Path>, scene: &VolumeScene<T>) -> Result<(Self, CacheSidecar)> {
        let path = path.as_ref();
        let sp = sidecar_path(path);
        let text = std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
        let side: CacheSidecar =
            serde_json::from_str(&text).map_err(|e| Error::format(&sp, format!("cache sidecar: {e}")))?;
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let per = 6 + coeff_count(side.degree);
        if bytes.len() != side.count * per * 8 {
            return Err(Error::format(
                path,
                format!(
                    "cache holds {} bytes, sidecar implies {}",
                    bytes.len(),
                    side.count * per * 8
                ),
            ));
        }
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let mut records = Vec::with_capacity(side.count);
        for rec in vals.chunks_exact(per) {
            let position = Vec3::from_f64(rec[0], rec[1], rec[2]);
            // Stored normals are unit already; keep their bits so re-encoding is exact.
            let nv: Vec3<T> = Vec3::from_f64(rec[3], rec[4], rec[5]);
            if !nv.is_finite() || (nv.norm() - T::one()).abs() > T::lit(1e-6) {
                return Err(Error::format(path, "cache record has an invalid normal"));
            }
            let normal = Direction::from_unit(nv);
            let m = scene.material_at(position);
            let transfer = ShVector::with_degree(side.degree, rec[6..].iter().map(|&c| T::lit(c)).collect())?;
            records.push(TransferSample {
                point: SurfacePoint {
                    position,
                    normal: Some(normal),
                    albedo: m.albedo,
                    tint: m.tint,
                },
                transfer,
            });
        }
        Ok((Self::new(side.degree, records)?, side))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rgb;

    fn sample(p: [f64; 3], k: usize) -> TransferSample<f64> {
        TransferSample {
            point: SurfacePoint {
                position: Vec3::from(p),
                normal: Some(Direction::unit_z()),
                albedo: Rgb::splat(0.5),
                tint: 0.0,
            },
            transfer: ShVector::unit(2, k % 9),
        }
    }

    #[test]
    fn nearest_matches_linear_scan() {
        let pts: Vec<[f64; 3]> = (0..200)
            .map(|i| {
                let f = i as f64;
                [(f * 0.37).sin(), (f * 0.71).cos(), (f * 0.13).sin() * 0.5]
            })
            .collect();
        let cache = TransferCache::new(2, pts.iter().enumerate().map(|(i, &p)| sample(p, i)).collect()).unwrap();
        for j in 0..300 {
            let f = j as f64;
            let q = [(f * 1.3).sin() * 1.5, (f * 0.4).cos() * 1.2, (f * 0.9).sin()];
            let brute = pts
                .iter()
                .enumerate()
                .map(|(i, p)| ((0..3).map(|a| (p[a] - q[a]).powi(2)).sum::<f64>(), i))
                .fold((f64::INFINITY, 0), |b, x| if x < b { x } else { b })
                .1;
            let got = cache.nearest(Vec3::from(q));
            assert_eq!(got.point.position, Vec3::from(pts[brute]));
        }
    }

    #[test]
    fn single_record_cache() {
        let cache = TransferCache::new(2, vec![sample([0.0; 3], 0)]).unwrap();
        assert_eq!(cache.nearest(Vec3::from_f64(5.0, 5.0, 5.0)).point.position, Vec3::zero());
    }

    #[test]
    fn sidecar_path_appends_json() {
        assert_eq!(sidecar_path(Path::new("a/t.bin")), PathBuf::from("a/t.bin.json"));
    }
}
