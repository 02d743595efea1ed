use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use sha2::{Digest, Sha256};
use volprt::metrics::{evaluate, CropBox, DEFAULT_BLUR_SIGMA};
use volprt::render::DEFAULT_TOP_M;
use volprt::sh::DEFAULT_DEGREE;
use volprt::transport::sample_probe_points;
use volprt::{
    compare_prt_vs_mc, load_envmap, project_to_sh, Camera, Direction, EnvironmentLight, NormalMap, Normalization,
    QuadratureSpec, RenderMode, Renderer, Rgb, ShLight, TransferBaker, TransferCache, TransferSource,
    ValidationConfig, Vec3, VolumeScene,
};

/// Highest degree used when projecting a light for the Monte Carlo comparison.
const ORACLE_LIGHT_DEGREE: usize = 8;

#[derive(Parser, Debug)]
#[command(name = "volprt", version, about = "Spherical-harmonics lighting for volumetric density fields")]
struct Cli {
    /// Worker threads; 0 uses every hardware thread. Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Project an environment map or analytic light onto SH coefficients.
    ProjectEnv(ProjectEnvArgs),
    /// Bake transfer vectors at probe points into a cache file.
    Bake(BakeArgs),
    /// Render a scene under an SH light.
    Render(RenderArgs),
    /// Compare SH shading with a Monte Carlo reference and report residuals.
    Validate(ValidateArgs),
    /// Cosine similarity and Laplacian L1 between two normal maps.
    Metrics(MetricsArgs),
}

#[derive(Args, Debug)]
struct LightArgs {
    /// Light file: `.json` SH coefficients or `.pfm` equirectangular map.
    #[arg(long, value_name = "PATH", conflicts_with = "light")]
    env: Option<PathBuf>,
    /// Analytic light: `constant:R,G,B` or `lobe:X,Y,Z,SHARPNESS,R,G,B`.
    #[arg(long, value_name = "SPEC", default_value = "constant:1,1,1")]
    light: String,
    /// Radiance multiplier applied before projection.
    #[arg(long, default_value_t = 1.0)]
    light_scale: f64,
}

#[derive(Args, Debug)]
struct ProjectEnvArgs {
    /// `.pfm` map or analytic light (`constant:...`, `lobe:...`).
    source: String,
    /// Highest SH band (at most 8).
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    degree: usize,
    /// Radiance multiplier applied before projection.
    #[arg(long, default_value_t = 1.0)]
    exposure: f64,
    /// Output JSON; standard output when absent.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BakeArgs {
    /// Scene JSON.
    scene: PathBuf,
    /// Probe rays shot at the scene; misses are dropped.
    #[arg(long, default_value_t = 2000)]
    points: usize,
    /// Seed for the probe rays.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Transfer degree.
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    degree: usize,
    /// Gauss-Legendre polar nodes of the bake grid.
    #[arg(long, default_value_t = 32)]
    grid_theta: usize,
    /// Azimuthal nodes of the bake grid.
    #[arg(long, default_value_t = 64)]
    grid_phi: usize,
    /// Cache file; the sidecar goes to `<PATH>.json`.
    #[arg(short, long, value_name = "PATH")]
    output: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("outputs").required(true).multiple(true).args(["output", "srgb", "alpha"])))]
struct RenderArgs {
    /// Scene JSON.
    scene: PathBuf,
    #[command(flatten)]
    light: LightArgs,
    /// lit | diffuse | specular | albedo | normal | visibility | irradiance
    #[arg(long, default_value = "lit", value_parser = parse_mode)]
    mode: RenderMode,
    /// Transfer degree; the light is truncated to it.
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    degree: usize,
    /// Linear PFM output.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// 8-bit sRGB PPM output.
    #[arg(long, value_name = "PATH")]
    srgb: Option<PathBuf>,
    /// 8-bit opacity PPM output.
    #[arg(long, value_name = "PATH")]
    alpha: Option<PathBuf>,
    /// Multiplier applied to radiance on export.
    #[arg(long, default_value_t = 1.0)]
    exposure: f64,
    /// Highest-weight samples per ray that receive a transfer vector.
    #[arg(long, default_value_t = DEFAULT_TOP_M)]
    top_m: usize,
    /// Use a baked transfer cache instead of baking per sample.
    #[arg(long, value_name = "PATH")]
    cache: Option<PathBuf>,
    /// Primary march steps [default: from the scene, else 256].
    #[arg(long)]
    primary_steps: Option<usize>,
    /// Secondary (visibility) march steps [default: from the scene, else 64].
    #[arg(long)]
    secondary_steps: Option<usize>,
    #[command(flatten)]
    camera: CameraArgs,
}

#[derive(Args, Debug)]
struct CameraArgs {
    /// Camera position [default: scene camera, else (0, -3R, 1.2R) from the bounds center].
    #[arg(long, value_name = "X,Y,Z")]
    camera_position: Option<String>,
    /// Camera target [default: scene camera, else the bounds center].
    #[arg(long, value_name = "X,Y,Z")]
    look_at: Option<String>,
    /// Camera up vector [default: scene camera, else 0,0,1].
    #[arg(long, value_name = "X,Y,Z")]
    up: Option<String>,
    /// Vertical field of view in radians [default: scene camera, else 0.7].
    #[arg(long)]
    vfov: Option<f64>,
    /// Image width [default: scene camera, else 64].
    #[arg(long)]
    width: Option<usize>,
    /// Image height [default: scene camera, else 64].
    #[arg(long)]
    height: Option<usize>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Scene JSON.
    scene: PathBuf,
    #[command(flatten)]
    light: LightArgs,
    /// Probe rays shot at the scene; misses are dropped.
    #[arg(long, default_value_t = 50)]
    points: usize,
    /// Seed for all random sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples per point; 0 skips the diffuse comparison.
    #[arg(long, default_value_t = 20_000)]
    mc_samples: usize,
    /// Transfer degree.
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    degree: usize,
    /// Record wall-clock runtime in the report (breaks byte reproducibility).
    #[arg(long)]
    timing: bool,
    /// Report JSON; standard output when absent. The table goes to standard error.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Predicted normals, 3-channel PFM.
    predicted: PathBuf,
    /// Reference normals, 3-channel PFM.
    reference: PathBuf,
    /// 1-channel PFM mask applied to both maps.
    #[arg(long, value_name = "PATH")]
    mask: Option<PathBuf>,
    /// Gaussian blur standard deviation in pixels.
    #[arg(long, default_value_t = DEFAULT_BLUR_SIGMA)]
    sigma: f64,
    /// Divide by the mask area instead of the pixel count.
    #[arg(long)]
    mask_normalized: bool,
    /// Crop box applied to both maps before comparison; padded to a square and resampled [default: none].
    #[arg(long, value_name = "X,Y,W,H")]
    crop: Option<String>,
    /// Side of the square the crop is resampled to.
    #[arg(long, default_value_t = 256)]
    size: usize,
    /// Report JSON; standard output when absent.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<RenderMode, String> {
    s.parse().map_err(|e: volprt::Error| e.to_string())
}

fn parse_floats(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("{what} `{s}` is not a comma-separated number list"))?;
    if v.len() != n {
        bail!("{what} `{s}` needs {n} numbers, got {}", v.len());
    }
    Ok(v)
}

fn parse_vec3(s: &str, what: &str) -> Result<Vec3<f64>> {
    let v = parse_floats(s, 3, what)?;
    Ok(Vec3::from_f64(v[0], v[1], v[2]))
}

/// `constant:R,G,B` (or a single gray value) and `lobe:X,Y,Z,SHARPNESS,R,G,B`.
fn parse_light_spec(spec: &str) -> Result<EnvironmentLight<f64>> {
    let (kind, rest) = spec
        .split_once(':')
        .with_context(|| format!("light spec `{spec}` must look like constant:R,G,B or lobe:X,Y,Z,S,R,G,B"))?;
    match kind {
        "constant" => {
            let c = if rest.contains(',') {
                let v = parse_floats(rest, 3, "constant color")?;
                Rgb::new(v[0], v[1], v[2])
            } else {
                Rgb::splat(parse_floats(rest, 1, "constant color")?[0])
            };
            Ok(EnvironmentLight::constant(c)?)
        }
        "lobe" => {
            let v = parse_floats(rest, 7, "lobe")?;
            let axis = Direction::from_f64(v[0], v[1], v[2]).context("lobe axis")?;
            Ok(EnvironmentLight::lobe(axis, v[3], Rgb::new(v[4], v[5], v[6]))?)
        }
        _ => bail!("unknown light kind `{kind}`; use constant or lobe"),
    }
}

fn is_json(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

enum Light {
    Sh(ShLight<f64>),
    Env(EnvironmentLight<f64>),
}

impl LightArgs {
    fn resolve(&self) -> Result<Light> {
        let light = match &self.env {
            Some(p) if is_json(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
                let sh: ShLight<f64> =
                    serde_json::from_str(&text).with_context(|| format!("{}: not an SH light file", p.display()))?;
                Light::Sh(sh)
            }
            Some(p) => Light::Env(load_envmap(p)?),
            None => Light::Env(parse_light_spec(&self.light)?),
        };
        if !(self.light_scale.is_finite() && self.light_scale >= 0.0) {
            bail!("--light-scale must be a non-negative number");
        }
        Ok(match light {
            Light::Sh(l) => Light::Sh(l.scaled(self.light_scale)),
            Light::Env(e) => Light::Env(e.scaled(self.light_scale)),
        })
    }
}

impl Light {
    /// SH coefficients at exactly `degree`.
    fn sh(&self, degree: usize) -> Result<ShLight<f64>> {
        match self {
            Light::Sh(l) if l.degree() >= degree => Ok(l.truncated(degree)),
            Light::Sh(l) => bail!("light file has degree {} but degree {degree} was requested", l.degree()),
            Light::Env(e) => Ok(project_to_sh(e, degree)?),
        }
    }
}

fn load_scene(path: &Path) -> Result<VolumeScene<f64>> {
    Ok(VolumeScene::load(path)?)
}

fn scene_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn project_env(a: &ProjectEnvArgs) -> Result<()> {
    if !(a.exposure.is_finite() && a.exposure >= 0.0) {
        bail!("--exposure must be a non-negative number");
    }
    let env = if a.source.starts_with("constant:") || a.source.starts_with("lobe:") {
        parse_light_spec(&a.source)?
    } else {
        load_envmap(&a.source)?
    };
    let sh = project_to_sh(&env.scaled(a.exposure), a.degree)?;
    write_output(a.output.as_deref(), &(serde_json::to_string_pretty(&sh)? + "\n"))
}

fn bake(a: &BakeArgs) -> Result<()> {
    let scene = load_scene(&a.scene)?;
    let probes = sample_probe_points(&scene, a.points, a.seed)?;
    let points: Vec<_> = probes.into_iter().map(|p| p.point).collect();
    let baker = TransferBaker::with_grid(QuadratureSpec::gauss_legendre(a.grid_theta, a.grid_phi), a.degree)?;
    let cache = TransferCache::bake(&scene, &points, &baker)?;
    cache.write(&a.output, &scene_hash(&a.scene)?)?;
    eprintln!("baked {} records at degree {} into {}", cache.len(), a.degree, a.output.display());
    Ok(())
}

fn camera_for(scene: &VolumeScene<f64>, c: &CameraArgs) -> Result<Camera<f64>> {
    let base = match &scene.camera {
        Some(cam) => cam.clone(),
        // Without a scene camera, look at the bounds center from 3 radii away.
        None => {
            let r = scene.bounds.radius;
            Camera {
                position: scene.bounds.center + Vec3::from_f64(0.0, -3.0 * r, 1.2 * r),
                look_at: scene.bounds.center,
                up: Vec3::from_f64(0.0, 0.0, 1.0),
                vfov: 0.7,
                width: volprt::render::DEFAULT_RESOLUTION,
                height: volprt::render::DEFAULT_RESOLUTION,
            }
        }
    };
    let cam = Camera {
        position: match &c.camera_position {
            Some(s) => parse_vec3(s, "--camera-position")?,
            None => base.position,
        },
        look_at: match &c.look_at {
            Some(s) => parse_vec3(s, "--look-at")?,
            None => base.look_at,
        },
        up: match &c.up {
            Some(s) => parse_vec3(s, "--up")?,
            None => base.up,
        },
        vfov: c.vfov.unwrap_or(base.vfov),
        width: c.width.unwrap_or(base.width),
        height: c.height.unwrap_or(base.height),
    };
    cam.validate()?;
    Ok(cam)
}

fn render(a: &RenderArgs) -> Result<()> {
    if !(a.exposure.is_finite() && a.exposure >= 0.0) {
        bail!("--exposure must be a non-negative number");
    }
    let mode = a.mode;
    let mut scene = load_scene(&a.scene)?;
    if let Some(n) = a.primary_steps {
        scene.march.primary_steps = n;
    }
    if let Some(n) = a.secondary_steps {
        scene.march.secondary_steps = n;
    }
    scene.validate()?;
    let camera = camera_for(&scene, &a.camera)?;
    let light = a.light.resolve()?.sh(a.degree)?;

    let cache = match &a.cache {
        Some(p) => Some(TransferCache::read(p, &scene)?.0),
        None => None,
    };
    let source = match &cache {
        Some(c) => TransferSource::Cache(c),
        None => TransferSource::Bake(QuadratureSpec::gauss_legendre(32, 64)),
    };
    let img = Renderer::with_source(&scene, &light, source, a.top_m)?.render(&camera, mode)?;
    if let Some(p) = &a.output {
        img.write_pfm(p, a.exposure)?;
    }
    if let Some(p) = &a.srgb {
        img.write_srgb_ppm(p, a.exposure)?;
    }
    if let Some(p) = &a.alpha {
        img.write_alpha_ppm(p)?;
    }
    Ok(())
}

fn validate(a: &ValidateArgs) -> Result<()> {
    let start = Instant::now();
    let scene = load_scene(&a.scene)?;
    let light = a.light.resolve()?;
    let points = sample_probe_points(&scene, a.points, a.seed)?;
    let config = ValidationConfig {
        degree: a.degree,
        mc_samples: a.mc_samples,
        seed: a.seed,
        ..Default::default()
    };
    let mut report = match &light {
        Light::Sh(l) => compare_prt_vs_mc(&scene, l, l, &points, &config)?,
        Light::Env(e) => {
            let sh = project_to_sh(e, ORACLE_LIGHT_DEGREE.max(a.degree))?;
            compare_prt_vs_mc(&scene, e, &sh, &points, &config)?
        }
    };
    if a.timing {
        report.runtime_seconds = Some(start.elapsed().as_secs_f64());
    }
    write_output(a.output.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    eprint!("{}", report.table());
    Ok(())
}

fn metrics(a: &MetricsArgs) -> Result<()> {
    if !(a.sigma.is_finite() && a.sigma > 0.0) {
        bail!("--sigma must be positive");
    }
    let mut pred = NormalMap::<f64>::load(&a.predicted, a.mask.as_deref())?;
    let mut refn = NormalMap::<f64>::load(&a.reference, a.mask.as_deref())?;
    if let Some(s) = &a.crop {
        let v = parse_floats(s, 4, "--crop")?;
        if v[2] < 1.0 || v[3] < 1.0 || v.iter().any(|x| x.fract() != 0.0) {
            bail!("--crop needs integer X,Y and positive integer W,H");
        }
        let bx = CropBox {
            x: v[0] as i64,
            y: v[1] as i64,
            width: v[2] as usize,
            height: v[3] as usize,
        };
        pred = pred.crop_pad_resize(bx, a.size)?;
        refn = refn.crop_pad_resize(bx, a.size)?;
    }
    let norm = if a.mask_normalized {
        Normalization::MaskArea
    } else {
        Normalization::PixelCount
    };
    let report = evaluate(&pred, &refn, a.sigma, norm)?;
    write_output(a.output.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))
}

/// Joins the error chain, skipping causes already quoted by their parent.
fn one_line(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn run(cli: &Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .context("cannot start the worker pool")?;
    match &cli.command {
        Command::ProjectEnv(a) => project_env(a),
        Command::Bake(a) => bake(a),
        Command::Render(a) => render(a),
        Command::Validate(a) => validate(a),
        Command::Metrics(a) => metrics(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            ExitCode::from(2)
        }
    }
}
