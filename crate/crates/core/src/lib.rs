//! Lighting for volumetric density fields with spherical-harmonics
//! radiance transfer.
//!
//! Every numeric type is generic over [`Real`] (`f32` or `f64`); the
//! `*64` / `*32` aliases at the crate root fix the scalar.

pub mod cache;
pub mod envlight;
pub mod error;
pub mod field;
pub mod fixtures;
pub mod geometry;
pub mod image_io;
pub mod metrics;
pub mod oracle;
pub mod render;
pub mod scalar;
pub mod sh;
pub mod shading;
pub mod transport;

pub use cache::TransferCache;
pub use envlight::{load_envmap, project_to_sh, EnvironmentLight, RadianceSource, ShLight};
pub use error::{Error, Result};
pub use field::{Material, MarchParams, Primitive, Shape, SurfacePoint, VolumeScene};
pub use geometry::{BoundingSphere, Direction, Ray, Rgb, Vec3};
pub use metrics::{NormalMap, Normalization};
pub use oracle::{compare_prt_vs_mc, mc_diffuse_radiance, ValidationConfig, ValidationReport};
pub use render::{render_image, trace_radiance, Camera, LinearImage, RenderMode, Renderer, TransferSource};
pub use scalar::Real;
pub use sh::{
    eval_basis, inner_product, project, reconstruct, ProjectionGrid, QuadratureRule,
    QuadratureSpec, ShVector,
};
pub use shading::{diffuse_radiance, outgoing_radiance, specular_radiance, RadianceSample};
pub use transport::{bake_transfer, nrt_residual, nrt_rays, visibility, TransferBaker, TransferSample};

pub type ShVector64 = ShVector<f64>;
pub type ShVector32 = ShVector<f32>;
pub type ShLight64 = ShLight<f64>;
pub type ShLight32 = ShLight<f32>;
pub type VolumeScene64 = VolumeScene<f64>;
pub type VolumeScene32 = VolumeScene<f32>;
pub type Direction64 = Direction<f64>;
pub type Direction32 = Direction<f32>;
pub type Vec3f64 = Vec3<f64>;
pub type Vec3f32 = Vec3<f32>;
pub type Rgb64 = Rgb<f64>;
pub type Rgb32 = Rgb<f32>;
pub type LinearImage64 = LinearImage<f64>;
pub type LinearImage32 = LinearImage<f32>;
pub type TransferCache64 = TransferCache<f64>;
pub type ValidationReport64 = ValidationReport<f64>;
