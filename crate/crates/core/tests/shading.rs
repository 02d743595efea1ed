use std::f64::consts::PI;

use volprt::envlight::{project_to_sh_with, EnvironmentLight};
use volprt::shading::{irradiance, reflect_direction};
use volprt::{
    diffuse_radiance, eval_basis, outgoing_radiance, specular_radiance, Direction, QuadratureSpec, Rgb, ShLight,
    ShVector, SurfacePoint, Vec3,
};

/// Exact SH of `max(0, n . w)` for `n = +z`, bands 0..=4.
fn clamped_cosine_z() -> ShVector<f64> {
    let mut c = vec![0.0; 25];
    c[0] = PI.sqrt() / 2.0;
    c[2] = (PI / 3.0).sqrt();
    c[6] = (5.0 * PI).sqrt() / 8.0;
    c[20] = -PI.sqrt() / 16.0;
    ShVector::new(c).unwrap()
}

#[test]
fn clamped_cosine_reconstruction_values() {
    let t = clamped_cosine_z();
    assert!((t.eval(Direction::unit_z()) - 0.96875).abs() < 1e-12);
    assert!((t.eval(-Direction::unit_z()) + 0.03125).abs() < 1e-12);
}

#[test]
fn constant_light_recovers_albedo() {
    let rho = Rgb::new(0.2, 0.55, 0.9);
    let light = ShLight::constant(Rgb::splat(1.0), 4);
    let d = diffuse_radiance(rho, &clamped_cosine_z(), &light).unwrap();
    assert!(d.max_abs_diff(rho) < 1e-12, "{d:?}");
    // Irradiance from a unit sky is pi.
    let e = irradiance(&clamped_cosine_z(), &light).unwrap();
    assert!(e.max_abs_diff(Rgb::splat(PI)) < 1e-12);
}

#[test]
fn diffuse_is_rotation_invariant() {
    let grid = QuadratureSpec::gauss_legendre(32, 64);
    let shade = |axis: Direction<f64>, n: Direction<f64>| {
        let light = project_to_sh_with(&EnvironmentLight::lobe(axis, 3.0, Rgb::splat(1.0)).unwrap(), 4, grid).unwrap();
        let t = volprt::ProjectionGrid::new(grid, 4).unwrap().project(|w| n.dot(w).max(0.0)).unwrap();
        diffuse_radiance(Rgb::splat(1.0), &t, &light).unwrap()[0]
    };
    // Same angle between light axis and normal, different frames.
    let a = shade(Direction::unit_z(), Direction::from_f64(0.0, 0.6, 0.8).unwrap());
    let b = shade(Direction::unit_x(), Direction::from_f64(0.8, 0.0, -0.6).unwrap());
    assert!((a - b).abs() < 2e-3 * a.abs(), "{a} vs {b}");
}

#[test]
fn specular_is_light_times_transfer_at_the_mirror_direction() {
    let n = Direction::<f64>::from_f64(0.1, 0.2, 1.0).unwrap();
    let view = Direction::from_f64(0.5, -0.3, 0.7).unwrap();
    let r = reflect_direction(view, n);
    assert!((r.dot(n) - view.dot(n)).abs() < 1e-12);
    let coeffs = |s: f64| ShVector::new((0..25).map(|j| ((j as f64 + s) * 0.7).sin()).collect()).unwrap();
    let light = ShLight::new([coeffs(0.0), coeffs(1.0), coeffs(2.0)]).unwrap();
    let t = coeffs(3.0);
    let y = eval_basis(r, 4);
    let dot = |v: &ShVector<f64>| v.coeffs().iter().zip(y.coeffs()).map(|(a, b)| a * b).sum::<f64>();
    let s = specular_radiance(0.4, n, view, &t, &light).unwrap();
    for c in 0..3 {
        let expected = 0.4 * dot(light.channel(c)) * dot(&t);
        assert!((s[c] - expected).abs() < 1e-12);
    }
}

#[test]
fn outgoing_radiance_splits_into_diffuse_and_specular() {
    let p = SurfacePoint {
        position: Vec3::zero(),
        normal: Some(Direction::unit_z()),
        albedo: Rgb::new(0.3, 0.6, 0.9),
        tint: 0.25,
    };
    let light = ShLight::constant(Rgb::new(1.0, 2.0, 0.5), 4);
    let view = Direction::from_f64(0.3, 0.0, 1.0).unwrap();
    let t = clamped_cosine_z();
    let o = outgoing_radiance(&p, view, &t, &light).unwrap();
    assert_eq!(o.diffuse, diffuse_radiance(p.albedo, &t, &light).unwrap());
    assert_eq!(o.specular, specular_radiance(0.25, Direction::unit_z(), view, &t, &light).unwrap());
    assert_eq!(o.total(), o.diffuse + o.specular);

    let dark = SurfacePoint { normal: None, ..p };
    let o = outgoing_radiance(&dark, view, &t, &light).unwrap();
    assert_eq!(o.total(), Rgb::zero());
}

#[test]
fn shading_is_linear_in_light() {
    let t = clamped_cosine_z();
    let a = ShLight::constant(Rgb::new(1.0, 0.0, 0.5), 4);
    let b = ShLight::new([
        ShVector::unit(4, 2).scaled(0.7),
        ShVector::unit(4, 6),
        ShVector::unit(4, 3).scaled(-0.2),
    ])
    .unwrap();
    let ab = a.lincomb(2.0, &b, -3.0).unwrap();
    let rho = Rgb::splat(0.5);
    let lhs = diffuse_radiance(rho, &t, &ab).unwrap();
    let rhs = diffuse_radiance(rho, &t, &a).unwrap() * 2.0 - diffuse_radiance(rho, &t, &b).unwrap() * 3.0;
    assert!(lhs.max_abs_diff(rhs) < 1e-12);
}
