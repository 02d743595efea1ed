//! Small reference scenes with known behavior.

use crate::field::{Material, MarchParams, Primitive, Shape, VolumeScene};
use crate::geometry::{BoundingSphere, Direction, Rgb, Vec3};
use crate::render::Camera;
use crate::scalar::Real;

fn v<T: Real>(x: f64, y: f64, z: f64) -> Vec3<T> {
    Vec3::from_f64(x, y, z)
}

fn bounds<T: Real>(radius: f64) -> BoundingSphere<T> {
    BoundingSphere {
        center: Vec3::zero(),
        radius: T::lit(radius),
    }
}

fn gray<T: Real>(a: f64) -> Material<T> {
    Material::new(Rgb::splat(T::lit(a)), T::zero())
}

/// Soft opaque sphere of radius 0.5 at the origin; shell width 0.1 and
/// inner density 1000.
pub fn sphere<T: Real>() -> VolumeScene<T> {
    VolumeScene::new(bounds(1.0), gray(0.0), MarchParams::default()).with_primitive(Primitive::new(
        Shape::Sphere {
            center: Vec3::zero(),
            radius: T::lit(0.5),
        },
        T::lit(1000.0),
        T::lit(0.1),
        Material::new(Rgb::new(T::lit(0.8), T::lit(0.6), T::lit(0.4)), T::lit(0.3)),
    ))
}

/// [`sphere`] with a thin box hovering over part of its upper half, so
/// many surface points are partially shadowed.
pub fn sphere_with_blocker<T: Real>() -> VolumeScene<T> {
    let mut s = sphere::<T>();
    s.bounds = bounds(1.5);
    s.with_primitive(Primitive::new(
        Shape::Box {
            center: v(0.3, 0.0, 0.75),
            extent: v(0.35, 0.5, 0.05),
        },
        T::lit(1000.0),
        T::lit(0.04),
        gray(0.5),
    ))
}

/// Homogeneous slab of density `sigma` and full thickness `d` around the
/// plane `z = 0`, with edges softened over `0.05`.
pub fn slab<T: Real>(sigma: f64, d: f64) -> VolumeScene<T> {
    VolumeScene::new(bounds(2.0), gray(0.0), MarchParams::default()).with_primitive(Primitive::new(
        Shape::Slab {
            center: Vec3::zero(),
            normal: Direction::unit_z(),
            thickness: T::lit(d),
        },
        T::lit(sigma),
        T::lit(0.05),
        gray(0.5),
    ))
}

/// Opaque wall below `z = 0.25` with albedo `albedo` and no specular tint,
/// marched with `primary_steps` samples per camera ray.
pub fn wall<T: Real>(albedo: Rgb<T>, primary_steps: usize) -> VolumeScene<T> {
    let march = MarchParams {
        primary_steps,
        // Rays into the wall saturate within a step and rays away from it
        // see no density, so a short march is exact enough.
        secondary_steps: 16,
        ..MarchParams::default()
    };
    let mut s = VolumeScene::new(bounds(2.0), gray(0.0), march).with_primitive(Primitive::new(
        Shape::Slab {
            center: Vec3::zero(),
            normal: Direction::unit_z(),
            thickness: T::lit(0.5),
        },
        T::lit(4000.0),
        T::lit(0.25),
        Material::new(albedo, T::zero()),
    ));
    s.camera = Some(wall_camera(64, 64));
    s
}

/// Camera looking straight down at the wall; its frustum stays on the wall.
pub fn wall_camera<T: Real>(width: usize, height: usize) -> Camera<T> {
    Camera {
        position: v(0.0, 0.0, 3.0),
        look_at: Vec3::zero(),
        up: v(0.0, 1.0, 0.0),
        vfov: T::lit(0.6),
        width,
        height,
    }
}

/// Camera on the -y axis looking at the origin.
pub fn orbit_camera<T: Real>(distance: f64, width: usize, height: usize) -> Camera<T> {
    Camera {
        position: v(0.0, -distance, 0.4 * distance),
        look_at: Vec3::zero(),
        up: v(0.0, 0.0, 1.0),
        vfov: T::lit(0.7),
        width,
        height,
    }
}

/// Scene with bounds but no primitives.
pub fn empty<T: Real>() -> VolumeScene<T> {
    VolumeScene::new(bounds(1.0), gray(0.5), MarchParams::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_validate() {
        sphere::<f64>().validate().unwrap();
        sphere_with_blocker::<f64>().validate().unwrap();
        slab::<f64>(1.0, 1.0).validate().unwrap();
        wall::<f64>(Rgb::splat(0.5), 512).validate().unwrap();
        empty::<f32>().validate().unwrap();
    }
}
