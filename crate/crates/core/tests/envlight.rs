use std::f64::consts::PI;

use volprt::envlight::{load_envmap, project_to_sh, project_to_sh_with, EnvironmentLight, ShLight};
use volprt::image_io::write_pfm;
use volprt::{eval_basis, Direction, Error, QuadratureSpec, Rgb, ShVector};

/// Writes an equirectangular PFM whose pixel (x, y) holds `f` at the pixel center.
fn write_map(path: &std::path::Path, w: usize, h: usize, f: impl Fn(Direction<f64>) -> [f64; 3]) {
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let theta = (y as f64 + 0.5) * PI / h as f64;
            let phi = (x as f64 + 0.5) * 2.0 * PI / w as f64;
            data.extend(f(Direction::from_spherical(theta, phi)).map(|v| v as f32));
        }
    }
    write_pfm(path, w, h, 3, &data).unwrap();
}

fn legendre(l: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if l == 0 {
        return p0;
    }
    for k in 1..l {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Zonal coefficient of a function of `cos(theta)` by composite Simpson in `mu`.
fn zonal_coefficient(l: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = 20_000;
    let h = 2.0 / n as f64;
    let g = |mu: f64| f(mu) * legendre(l, mu);
    let mut s = g(-1.0) + g(1.0);
    for k in 1..n {
        let mu = -1.0 + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(mu);
    }
    2.0 * PI * ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * s * h / 3.0
}

#[test]
fn constant_map_projects_to_dc_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.pfm");
    let c = [0.5, 1.0, 2.0];
    write_map(&path, 64, 32, |_| c);
    let env = load_envmap::<f64>(&path).unwrap();
    let sh = project_to_sh(&env, 4).unwrap();
    for ch in 0..3 {
        let v = sh.channel(ch);
        assert_eq!(v.len(), 25);
        let dc = 2.0 * PI.sqrt() * c[ch];
        assert!((v.dc() / dc - 1.0).abs() < 1e-3, "{} vs {dc}", v.dc());
        // A constant c is c * 2 sqrt(pi) * Y_0, so its leakage into band j is
        // that times the Gram error, about 4e-3 for the 32x64 midpoint rule.
        for j in 1..25 {
            let bound = dc * 4e-3;
            assert!(v.coeffs()[j].abs() < bound, "coefficient {j}: {}", v.coeffs()[j]);
        }
    }
    // The exact constant light matches to the same tolerance.
    let exact = ShLight::constant(Rgb::new(0.5, 1.0, 2.0), 4);
    assert!((exact.channel(2).dc() - 4.0 * PI.sqrt()).abs() < 1e-12);
}

#[test]
fn band_limited_map_round_trips() {
    let coeffs: Vec<Vec<f64>> = (0..3)
        .map(|c| (0..25).map(|j| if j == 0 { 3.0 } else { 0.2 * ((j * 5 + c) as f64).cos() }).collect())
        .collect();
    let vs: Vec<ShVector<f64>> = coeffs.iter().map(|c| ShVector::new(c.clone()).unwrap()).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bl.pfm");
    write_map(&path, 256, 128, |d| {
        let y = eval_basis(d, 4);
        [0, 1, 2].map(|c| vs[c].coeffs().iter().zip(y.coeffs()).map(|(a, b)| a * b).sum())
    });
    let sh = project_to_sh(&load_envmap::<f64>(&path).unwrap(), 4).unwrap();
    for c in 0..3 {
        for j in 0..25 {
            let err = (sh.channel(c).coeffs()[j] - coeffs[c][j]).abs();
            assert!(err < 2e-3, "channel {c} coefficient {j}: error {err}");
        }
    }
}

#[test]
fn lobe_coefficients_match_one_dimensional_integral() {
    let s = 4.0;
    let env = EnvironmentLight::lobe(Direction::unit_z(), s, Rgb::splat(1.0)).unwrap();
    let sh = project_to_sh_with(&env, 8, QuadratureSpec::gauss_legendre(32, 64)).unwrap();
    let v = sh.channel(0);
    for l in 0..=8 {
        let expected = zonal_coefficient(l, |mu| (s * (mu - 1.0)).exp());
        let got = v.get(l, 0);
        assert!((got - expected).abs() < 1e-9, "band {l}: {got} vs {expected}");
        for m in 1..=l as i64 {
            assert!(v.get(l, m).abs() < 1e-9 && v.get(l, -m).abs() < 1e-9);
        }
    }
}

#[test]
fn projection_is_linear_in_exposure() {
    let env = EnvironmentLight::<f64>::lobe(Direction::from_f64(0.2, 0.5, 0.3).unwrap(), 3.0, Rgb::new(1.0, 0.5, 0.25)).unwrap();
    let a = project_to_sh(&env, 4).unwrap().scaled(2.5);
    let b = project_to_sh(&env.scaled(2.5), 4).unwrap();
    for c in 0..3 {
        for (x, y) in a.channel(c).coeffs().iter().zip(b.channel(c).coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn nan_pixel_reports_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nan.pfm");
    let mut data = vec![0.5f32; 4 * 2 * 3];
    data[(1 * 4 + 2) * 3 + 1] = f32::NAN;
    write_pfm(&path, 4, 2, 3, &data).unwrap();
    match load_envmap::<f64>(&path) {
        Err(Error::NanPixel { x, y, .. }) => assert_eq!((x, y), (2, 1)),
        other => panic!("expected NanPixel, got {other:?}"),
    }
}

#[test]
fn malformed_maps_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pfm");
    std::fs::write(&bad, b"P3\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0").unwrap();
    let err = load_envmap::<f64>(&bad).unwrap_err().to_string();
    assert!(err.contains("magic") && err.contains("P3"), "{err}");

    let gray = dir.path().join("gray.pfm");
    write_pfm(&gray, 1, 1, 1, &[1.0]).unwrap();
    assert!(load_envmap::<f64>(&gray).unwrap_err().to_string().contains("grayscale"));

    let neg = dir.path().join("neg.pfm");
    write_pfm(&neg, 1, 1, 3, &[1.0, -1.0, 0.0]).unwrap();
    assert!(load_envmap::<f64>(&neg).is_err());

    assert!(matches!(load_envmap::<f64>(dir.path().join("missing.pfm")), Err(Error::Io { .. })));
}

#[test]
fn degree_above_eight_is_rejected() {
    let env = EnvironmentLight::constant(Rgb::splat(1.0)).unwrap();
    assert!(matches!(project_to_sh::<f64>(&env, 9), Err(Error::UnsupportedDegree(9))));
    assert!(EnvironmentLight::constant(Rgb::new(-1.0, 0.0, 0.0)).is_err());
}

#[test]
fn sh_light_json_round_trip() {
    let env = EnvironmentLight::lobe(Direction::from_f64(0.0, 1.0, 1.0).unwrap(), 2.0, Rgb::new(1.0, 2.0, 3.0)).unwrap();
    let sh = project_to_sh::<f64>(&env, 4).unwrap();
    let text = serde_json::to_string(&sh).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["degree"], 4);
    assert_eq!(v["channels"][1].as_array().unwrap().len(), 25);
    assert!(v["convention"].as_str().unwrap().contains("Condon-Shortley"));
    let back: ShLight<f64> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, sh);

    let short = r#"{"degree": 4, "channels": [[1.0], [1.0], [1.0]]}"#;
    assert!(serde_json::from_str::<ShLight<f64>>(short).is_err());
}

#[test]
fn equirect_lookup_hits_pixel_centers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grad.pfm");
    let (w, h) = (8, 4);
    let mut data = Vec::new();
    for y in 0..h {
        for x in 0..w {
            data.extend([x as f32, y as f32, 0.0]);
        }
    }
    write_pfm(&path, w, h, 3, &data).unwrap();
    let env = load_envmap::<f64>(&path).unwrap();
    let d = Direction::from_spherical((2.5) * PI / h as f64, (5.5) * 2.0 * PI / w as f64);
    let v = env.sample_direction(d);
    assert!((v[0] - 5.0).abs() < 1e-9 && (v[1] - 2.0).abs() < 1e-9, "{v:?}");
}
