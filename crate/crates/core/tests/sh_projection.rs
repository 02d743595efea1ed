//! Spherical harmonics checked against independent closed forms and quadrature.

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volprt::sh::{coeff_count, sh_index};
use volprt::{eval_basis, inner_product, project, reconstruct, Direction, QuadratureSpec, ShVector};

/// Real SH up to band 4 written out as Cartesian polynomials (no recurrence).
/// The textbook table omits the Condon-Shortley phase; it is applied here.
fn polynomial_basis(d: Direction<f64>) -> Vec<f64> {
    let (x, y, z) = (d.x(), d.y(), d.z());
    let s = |v: f64| v.sqrt();
    let mut out = vec![0.0; 25];
    let mut put = |l: usize, m: i64, v: f64| {
        let phase = if m != 0 && m.abs() % 2 == 1 { -1.0 } else { 1.0 };
        out[sh_index(l, m)] = phase * v;
    };
    put(0, 0, 0.5 * s(1.0 / PI));
    put(1, -1, s(3.0 / (4.0 * PI)) * y);
    put(1, 0, s(3.0 / (4.0 * PI)) * z);
    put(1, 1, s(3.0 / (4.0 * PI)) * x);
    put(2, -2, 0.5 * s(15.0 / PI) * x * y);
    put(2, -1, 0.5 * s(15.0 / PI) * y * z);
    put(2, 0, 0.25 * s(5.0 / PI) * (3.0 * z * z - 1.0));
    put(2, 1, 0.5 * s(15.0 / PI) * x * z);
    put(2, 2, 0.25 * s(15.0 / PI) * (x * x - y * y));
    put(3, -3, 0.25 * s(35.0 / (2.0 * PI)) * y * (3.0 * x * x - y * y));
    put(3, -2, 0.5 * s(105.0 / PI) * x * y * z);
    put(3, -1, 0.25 * s(21.0 / (2.0 * PI)) * y * (5.0 * z * z - 1.0));
    put(3, 0, 0.25 * s(7.0 / PI) * (5.0 * z * z * z - 3.0 * z));
    put(3, 1, 0.25 * s(21.0 / (2.0 * PI)) * x * (5.0 * z * z - 1.0));
    put(3, 2, 0.25 * s(105.0 / PI) * (x * x - y * y) * z);
    put(3, 3, 0.25 * s(35.0 / (2.0 * PI)) * x * (x * x - 3.0 * y * y));
    put(4, -4, 0.75 * s(35.0 / PI) * x * y * (x * x - y * y));
    put(4, -3, 0.75 * s(35.0 / (2.0 * PI)) * y * z * (3.0 * x * x - y * y));
    put(4, -2, 0.75 * s(5.0 / PI) * x * y * (7.0 * z * z - 1.0));
    put(4, -1, 0.75 * s(5.0 / (2.0 * PI)) * y * z * (7.0 * z * z - 3.0));
    put(4, 0, 3.0 / 16.0 * s(1.0 / PI) * (35.0 * z.powi(4) - 30.0 * z * z + 3.0));
    put(4, 1, 0.75 * s(5.0 / (2.0 * PI)) * x * z * (7.0 * z * z - 3.0));
    put(4, 2, 3.0 / 8.0 * s(5.0 / PI) * (x * x - y * y) * (7.0 * z * z - 1.0));
    put(4, 3, 0.75 * s(35.0 / (2.0 * PI)) * x * z * (x * x - 3.0 * y * y));
    put(
        4,
        4,
        3.0 / 16.0 * s(35.0 / PI) * (x * x * (x * x - 3.0 * y * y) - y * y * (3.0 * x * x - y * y)),
    );
    out
}

fn random_dir(rng: &mut ChaCha8Rng) -> Direction<f64> {
    let z: f64 = rng.random_range(-1.0..1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).sqrt();
    Direction::from_f64(r * phi.cos(), r * phi.sin(), z).unwrap()
}

/// Plain midpoint lat-long sum, written independently of the library grid.
fn brute_integral(n_theta: usize, n_phi: usize, f: impl Fn(Direction<f64>) -> f64) -> f64 {
    let dt = PI / n_theta as f64;
    let dp = 2.0 * PI / n_phi as f64;
    let mut acc = 0.0;
    for i in 0..n_theta {
        let t = (i as f64 + 0.5) * dt;
        for k in 0..n_phi {
            let p = (k as f64 + 0.5) * dp;
            acc += f(Direction::from_spherical(t, p)) * t.sin() * dt * dp;
        }
    }
    acc
}

fn clamped_cosine(d: Direction<f64>) -> f64 {
    d.z().max(0.0)
}

#[test]
fn recurrence_matches_polynomial_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let d = random_dir(&mut rng);
        let got = eval_basis(d, 4);
        let want = polynomial_basis(d);
        for (j, (g, w)) in got.coeffs().iter().zip(&want).enumerate() {
            assert!((g - w).abs() < 1e-10, "index {j}: {g} vs {w}");
        }
    }
    let pole = Direction::unit_z();
    for (g, w) in eval_basis(pole, 4).coeffs().iter().zip(polynomial_basis(pole)) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn projection_of_constant_hits_only_dc() {
    let v = project(|_| 1.0f64, 4, QuadratureSpec::default()).unwrap();
    assert!((v.dc() - 3.5449077).abs() < 1e-4);
    assert!((v.dc() - 2.0 * PI.sqrt()).abs() < 1e-3);
    for &c in &v.coeffs()[1..] {
        assert!(c.abs() < 1e-3);
    }
}

#[test]
fn projection_of_basis_function_is_unit_vector() {
    let j = 6; // one-based j = 7: band 2, m = 0
    let v = project(|d: Direction<f64>| eval_basis(d, 4).coeffs()[j], 4, QuadratureSpec::default()).unwrap();
    for (k, &c) in v.coeffs().iter().enumerate() {
        let want = if k == j { 1.0 } else { 0.0 };
        assert!((c - want).abs() < 1e-3, "coefficient {k}: {c}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let d = random_dir(&mut rng);
        assert!((reconstruct(&v, d) - eval_basis(d, 4).coeffs()[j]).abs() < 1e-3);
    }
}

#[test]
fn clamped_cosine_projection() {
    let v = project(clamped_cosine, 4, QuadratureSpec::default()).unwrap();
    assert!((v.dc() - 0.8862269).abs() < 1e-3);
    // Dense oracle at 512x1024 for every coefficient.
    for j in 0..25 {
        let oracle = brute_integral(512, 1024, |d| clamped_cosine(d) * polynomial_basis(d)[j]);
        assert!((v.coeffs()[j] - oracle).abs() < 1e-3, "j={j}: {} vs {oracle}", v.coeffs()[j]);
    }
    // Transfer of an unoccluded point dotted with a constant unit light gives pi.
    let unit_light = project(|_| 1.0f64, 4, QuadratureSpec::default()).unwrap();
    let e = inner_product(&v, &unit_light).unwrap();
    assert!((e - PI).abs() < 2e-3, "{e}");
}

#[test]
fn gram_matrix_is_identity_at_default_resolution() {
    let spec = QuadratureSpec::default();
    let nodes = spec.nodes::<f64>();
    let rows: Vec<_> = nodes.iter().map(|(d, w)| (eval_basis(*d, 4), *w)).collect();
    let mut worst: f64 = 0.0;
    for a in 0..25 {
        for b in 0..25 {
            let g: f64 = rows.iter().map(|(y, w)| w * y.coeffs()[a] * y.coeffs()[b]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((g - want).abs());
        }
    }
    assert!(worst <= 1e-3, "max |G - I| = {worst}");
}

#[test]
fn gauss_legendre_grid_is_exactly_orthonormal() {
    let spec = QuadratureSpec::gauss_legendre(32, 64);
    let nodes = spec.nodes::<f64>();
    let rows: Vec<_> = nodes.iter().map(|(d, w)| (eval_basis(*d, 4), *w)).collect();
    for a in 0..25 {
        for b in 0..25 {
            let g: f64 = rows.iter().map(|(y, w)| w * y.coeffs()[a] * y.coeffs()[b]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((g - want).abs() < 1e-12, "G[{a}][{b}] = {g}");
        }
    }
}

#[test]
fn parseval_on_band_limited_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..3 {
        let f = ShVector::new((0..25).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let g = ShVector::new((0..25).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let pf = project(|d| f.eval(d), 4, QuadratureSpec::default()).unwrap();
        let pg = project(|d| g.eval(d), 4, QuadratureSpec::default()).unwrap();
        let direct = brute_integral(128, 256, |d| f.eval(d) * g.eval(d));
        let via_sh = inner_product(&pf, &pg).unwrap();
        assert!((via_sh - direct).abs() <= 1e-3 * (1.0 + direct.abs()), "{via_sh} vs {direct}");
    }
}

#[test]
fn lower_degrees_project_consistently() {
    let full = project(clamped_cosine, 4, QuadratureSpec::default()).unwrap();
    for degree in 0..4 {
        let low = project(clamped_cosine, degree, QuadratureSpec::default()).unwrap();
        assert_eq!(low.len(), coeff_count(degree));
        for (a, b) in low.coeffs().iter().zip(full.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn f32_projection_is_close_to_f64() {
    let v32 = project(|d: Direction<f32>| d.z().max(0.0), 4, QuadratureSpec::midpoint(32, 64)).unwrap();
    let v64 = project(clamped_cosine, 4, QuadratureSpec::midpoint(32, 64)).unwrap();
    for (a, b) in v32.coeffs().iter().zip(v64.coeffs()) {
        assert!((*a as f64 - b).abs() < 1e-4);
    }
}

fn sh_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 25)
}

fn unit_dir() -> impl Strategy<Value = Direction<f64>> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        Direction::from_f64(r * phi.cos(), r * phi.sin(), z).unwrap()
    })
}

proptest! {
    #[test]
    fn reconstruction_is_linear(u in sh_vec(), w in sh_vec(), a in -3.0f64..3.0, b in -3.0f64..3.0, d in unit_dir()) {
        let u = ShVector::new(u).unwrap();
        let w = ShVector::new(w).unwrap();
        let combo = u.lincomb(a, &w, b).unwrap();
        let lhs = reconstruct(&combo, d);
        let rhs = a * reconstruct(&u, d) + b * reconstruct(&w, d);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn basis_evaluation_matches_table(d in unit_dir()) {
        let got = eval_basis(d, 4);
        for (g, w) in got.coeffs().iter().zip(polynomial_basis(d)) {
            prop_assert!((g - w).abs() < 1e-10);
        }
    }
}

#[test]
fn project_then_reconstruct_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let v = ShVector::new((0..25).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let back = project(|d: Direction<f64>| v.eval(d), 4, QuadratureSpec::default()).unwrap();
    for (a, b) in v.coeffs().iter().zip(back.coeffs()) {
        assert!((a - b).abs() <= 1e-3);
    }
}
