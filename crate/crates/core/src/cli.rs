//! Command-line front end. Every subcommand writes its outputs plus a
//! `manifest-<command>.txt` listing the effective configuration and the
//! SHA-256 of each input and output file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::config::{parse_scheme, parse_shape, RunConfig};
use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::materials::SigmaFit;
use crate::physics::{normalize_measurements, normalize_with, weight_measurements, WeightTable};
use crate::recon::{average_views, metrics, reconstruct_view_with, ring_extent, FilterKind, ReconGrid};
use crate::rtt80::validate_rtt80;
use crate::signal::{add_noise, fourier_slice_check, slice_band_limit, smooth_sinogram, SliceCheckConfig};
use crate::sinogram::DiscSinogram;
use crate::transform::{default_p_grid, disc_transform, uniform_step};

#[derive(Debug, Parser)]
#[command(name = "scatter-tomo", version, about = "Density reconstruction from Compton-scatter disc integrals")]
pub struct Cli {
    /// Config file of key=value lines; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Extra config setting, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a phantom description and its rasterized image.
    Phantom(PhantomArgs),
    /// Disc integrals of a phantom on the (p, phi) grid.
    Forward(ForwardArgs),
    /// Multiplicative uniform noise on a sinogram.
    Noise(NoiseArgs),
    /// Moving average, PCHIP resampling and optional shape constraint per angle.
    Smooth(SmoothArgs),
    /// Smooth, differentiate, backproject and map back one view.
    Reconstruct(ReconstructArgs),
    /// Mean reconstruction over source views.
    Average(AverageArgs),
    /// Region-averaged physical weight P_avg on the sinogram grid.
    PhysicsWeight(PhysicsArgs),
    /// Divide intensities by slice thickness and P_avg.
    Normalize(NormalizeArgs),
    /// Effective atomic number from a density image and an attenuation value.
    AtomicNumber(AtomicArgs),
    /// Compare both sides of the Fourier-slice relation.
    SliceCheck(SliceArgs),
    /// Toric-section area study for the RTT80 geometry.
    ValidateRtt80(RttArgs),
}

#[derive(Debug, Args, Default)]
pub struct PhantomSel {
    /// water_bottle, hollow_tube, or a phantom file.
    #[arg(long)]
    pub phantom: Option<String>,
    /// Width of the smooth edge; 0 gives a sharp boundary.
    #[arg(long)]
    pub edge: Option<f64>,
    #[arg(long)]
    pub density: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct GridSel {
    #[arg(long = "np")]
    pub n_p: Option<usize>,
    #[arg(long = "nphi")]
    pub n_phi: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct SmoothSel {
    /// Odd moving-average window; 1 disables smoothing.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub stride: Option<usize>,
    /// free, non_increasing or non_decreasing.
    #[arg(long)]
    pub shape: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct ReconSel {
    /// ramlak or ramlak_hamming.
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Difference step in p.
    #[arg(long)]
    pub h: Option<f64>,
    /// forward or central.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Output image side in pixels.
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct PhysicsSel {
    #[arg(long = "e-max")]
    pub e_max: Option<f64>,
    /// Cells per axis of the P_avg quadrature.
    #[arg(long)]
    pub cells: Option<usize>,
    /// Spectrum CSV (E_keV,relative_intensity); Kramers when absent.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// none, a .dtimg attenuation map, or an angle,ratio transmission table.
    #[arg(long)]
    pub attenuation: Option<String>,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    #[command(flatten)]
    pub phantom: PhantomSel,
    #[arg(long)]
    pub size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    #[command(flatten)]
    pub phantom: PhantomSel,
    #[command(flatten)]
    pub grid: GridSel,
    /// Simulate intensities with the physical weight and normalize them back.
    #[arg(long)]
    pub physics: bool,
    #[command(flatten)]
    pub physics_opts: PhysicsSel,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Input sinogram [default: <out>/sinogram.csv].
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output sinogram [default: <out>/noisy.csv].
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub percent: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    /// Input sinogram [default: <out>/noisy.csv].
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output sinogram [default: <out>/smoothed.csv].
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub smooth: SmoothSel,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// Disc-integral sinogram [default: <out>/sinogram.csv].
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub recon: ReconSel,
    #[command(flatten)]
    pub smooth: SmoothSel,
}

#[derive(Debug, Args)]
pub struct AverageArgs {
    #[command(flatten)]
    pub phantom: PhantomSel,
    #[command(flatten)]
    pub grid: GridSel,
    #[command(flatten)]
    pub recon: ReconSel,
    #[command(flatten)]
    pub smooth: SmoothSel,
    #[arg(long)]
    pub views: Option<usize>,
    #[arg(long)]
    pub percent: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PhysicsArgs {
    /// Take the (p, phi) grid from this sinogram instead of the config.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridSel,
    #[command(flatten)]
    pub physics: PhysicsSel,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Intensity sinogram [default: <out>/intensity.csv].
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Precomputed P_avg table; computed when absent.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    #[command(flatten)]
    pub physics: PhysicsSel,
}

#[derive(Debug, Args)]
pub struct AtomicArgs {
    /// Reconstructed density image [default: <out>/average.dtimg].
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Attenuation coefficient of the object.
    #[arg(long)]
    pub mu: f64,
    /// Pixels above this fraction of the image maximum form the object.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Coefficient file for a fit other than the built-in 100 keV one.
    #[arg(long)]
    pub fit: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SliceArgs {
    #[command(flatten)]
    pub phantom: PhantomSel,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    pub phi: f64,
    /// Comma-separated frequencies; eight points up to the band limit when absent.
    #[arg(long, value_delimiter = ',')]
    pub sigmas: Vec<f64>,
    #[arg(long = "np", default_value_t = 401)]
    pub n_p: usize,
    #[arg(long = "quad", default_value_t = 512)]
    pub n_quad: usize,
}

#[derive(Debug, Args)]
pub struct RttArgs {
    #[arg(long = "np", default_value_t = 100)]
    pub n_p: usize,
    #[arg(long = "nphi", default_value_t = 360)]
    pub n_phi: usize,
    #[arg(long, default_value_t = 2048)]
    pub cells: usize,
    /// Largest accepted difference relative to the tunnel area.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

fn set_opt<T: ToString>(cfg: &mut RunConfig, key: &str, v: &Option<T>) -> Result<()> {
    match v {
        Some(v) => cfg.set(key, &v.to_string()),
        None => Ok(()),
    }
}

impl PhantomSel {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        set_opt(cfg, "phantom", &self.phantom)?;
        set_opt(cfg, "edge", &self.edge)?;
        set_opt(cfg, "density", &self.density)
    }
}

impl GridSel {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        set_opt(cfg, "n_p", &self.n_p)?;
        set_opt(cfg, "n_phi", &self.n_phi)
    }
}

impl SmoothSel {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        set_opt(cfg, "smooth_window", &self.window)?;
        set_opt(cfg, "smooth_stride", &self.stride)?;
        if let Some(s) = &self.shape {
            parse_shape(s)?;
        }
        set_opt(cfg, "smooth_shape", &self.shape)
    }
}

impl ReconSel {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(f) = &self.filter {
            f.parse::<FilterKind>()?;
        }
        set_opt(cfg, "filter", &self.filter)?;
        set_opt(cfg, "cutoff", &self.cutoff)?;
        set_opt(cfg, "h", &self.h)?;
        if let Some(s) = &self.scheme {
            parse_scheme(s)?;
        }
        set_opt(cfg, "scheme", &self.scheme)?;
        set_opt(cfg, "size", &self.size)
    }
}

impl PhysicsSel {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        set_opt(cfg, "e_max", &self.e_max)?;
        set_opt(cfg, "quadrature_cells", &self.cells)?;
        set_opt(cfg, "spectrum", &self.spectrum.as_ref().map(|p| p.display().to_string()))?;
        set_opt(cfg, "attenuation", &self.attenuation)
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files produced by one subcommand, written together with the manifest.
struct Run {
    command: &'static str,
    cfg: RunConfig,
    params: Vec<(String, String)>,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<(PathBuf, Vec<u8>)>,
}

impl Run {
    fn new(command: &'static str, cfg: RunConfig) -> Self {
        Run {
            command,
            cfg,
            params: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path).map_err(|e| Error::parse("input", format!("'{}': {e}", path.display())))?;
        self.inputs.push((path.to_path_buf(), sha256_hex(&bytes)));
        String::from_utf8(bytes).map_err(|_| Error::parse("input", format!("'{}' is not UTF-8", path.display())))
    }

    fn read_image(&mut self, path: &Path) -> Result<ImageGrid> {
        let bytes = std::fs::read(path).map_err(|e| Error::parse("image", format!("'{}': {e}", path.display())))?;
        self.inputs.push((path.to_path_buf(), sha256_hex(&bytes)));
        ImageGrid::from_dtimg_bytes(&bytes)
    }

    fn default_path(&self, given: &Option<PathBuf>, name: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.cfg.out.join(name))
    }

    fn output(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.outputs.push((path, bytes));
    }

    fn output_in_out(&mut self, name: &str, bytes: Vec<u8>) {
        let path = self.cfg.out.join(name);
        self.output(path, bytes);
    }

    fn image(&mut self, stem: &str, img: &ImageGrid) {
        self.output_in_out(&format!("{stem}.dtimg"), img.to_dtimg_bytes());
        self.output_in_out(&format!("{stem}.pgm"), img.to_pgm_bytes());
    }

    /// Paths inside the output directory are recorded relative to it.
    fn shown(&self, p: &Path) -> String {
        p.strip_prefix(&self.cfg.out).unwrap_or(p).display().to_string()
    }

    fn manifest(&self) -> String {
        let mut m = String::new();
        let _ = writeln!(m, "command={}", self.command);
        let _ = writeln!(m, "parallel={}", crate::is_parallel());
        m.push_str(&self.cfg.to_text());
        for (k, v) in &self.params {
            let _ = writeln!(m, "{k}={v}");
        }
        for (p, h) in &self.inputs {
            let _ = writeln!(m, "input.{}.sha256={h}", self.shown(p));
        }
        for (p, bytes) in &self.outputs {
            let _ = writeln!(m, "output.{}.sha256={}", self.shown(p), sha256_hex(bytes));
        }
        m
    }

    fn finish(self) -> Result<()> {
        std::fs::create_dir_all(&self.cfg.out)?;
        for (path, bytes) in &self.outputs {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, bytes)?;
        }
        let manifest = self.manifest();
        std::fs::write(self.cfg.out.join(format!("manifest-{}.txt", self.command)), manifest)?;
        Ok(())
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::read(path)?,
        None => RunConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::parse("set", format!("expected KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn sinogram_bytes(s: &DiscSinogram) -> Vec<u8> {
    s.to_csv().into_bytes()
}

fn smoothing_active(cfg: &RunConfig) -> bool {
    let s = cfg.smoothing();
    s.window > 1 || s.stride > 1 || s.shape != crate::signal::Shape::Free
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli)?;
    let run = match &cli.command {
        Command::Phantom(a) => {
            a.phantom.apply(&mut cfg)?;
            set_opt(&mut cfg, "size", &a.size)?;
            cfg.validate()?;
            let geom = cfg.geometry()?;
            let spec = cfg.phantom_spec(&geom)?;
            let img = spec.rasterize(cfg.size, cfg.size, ring_extent(&geom))?;
            let mut run = Run::new("phantom", cfg);
            run.output_in_out("phantom.txt", spec.to_text().into_bytes());
            run.image("phantom", &img);
            run
        }
        Command::Forward(a) => {
            a.phantom.apply(&mut cfg)?;
            a.grid.apply(&mut cfg)?;
            a.physics_opts.apply(&mut cfg)?;
            if a.physics {
                cfg.physics = true;
            }
            cfg.validate()?;
            let geom = cfg.geometry()?;
            let spec = cfg.phantom_spec(&geom)?;
            let data = disc_transform(&spec, &cfg.p_values(), &cfg.phi_values(), &geom)?;
            let mut run = Run::new("forward", cfg.clone());
            if cfg.physics {
                let params = cfg.physics_params()?;
                let atten = cfg.attenuation_model()?;
                let table = WeightTable::compute(&geom, &data.p_values, &data.phi_values, &params, &atten)?;
                let intensity = weight_measurements(&data, &table, &params)?;
                let normalized = normalize_with(&intensity, &table, &params)?;
                run.output_in_out("intensity.csv", sinogram_bytes(&intensity));
                run.output_in_out("p_avg.csv", table.to_csv().into_bytes());
                run.output_in_out("sinogram.csv", sinogram_bytes(&normalized));
            } else {
                run.output_in_out("sinogram.csv", sinogram_bytes(&data));
            }
            run
        }
        Command::Noise(a) => {
            set_opt(&mut cfg, "noise_percent", &a.percent)?;
            set_opt(&mut cfg, "seed", &a.seed)?;
            cfg.validate()?;
            let mut run = Run::new("noise", cfg.clone());
            let input = run.default_path(&a.input, "sinogram.csv");
            let data = DiscSinogram::from_csv(&run.read(&input)?)?;
            let noisy = add_noise(&data, cfg.noise())?;
            let output = run.default_path(&a.output, "noisy.csv");
            run.output(output, sinogram_bytes(&noisy));
            run
        }
        Command::Smooth(a) => {
            a.smooth.apply(&mut cfg)?;
            cfg.validate()?;
            let mut run = Run::new("smooth", cfg.clone());
            let input = run.default_path(&a.input, "noisy.csv");
            let data = DiscSinogram::from_csv(&run.read(&input)?)?;
            let smoothed = smooth_sinogram(&data, cfg.smoothing())?;
            let output = run.default_path(&a.output, "smoothed.csv");
            run.output(output, sinogram_bytes(&smoothed));
            run
        }
        Command::Reconstruct(a) => {
            a.recon.apply(&mut cfg)?;
            a.smooth.apply(&mut cfg)?;
            cfg.validate()?;
            let geom = cfg.geometry()?;
            let mut run = Run::new("reconstruct", cfg.clone());
            let input = run.default_path(&a.input, "sinogram.csv");
            let mut data = DiscSinogram::from_csv(&run.read(&input)?)?;
            if smoothing_active(&cfg) {
                data = smooth_sinogram(&data, cfg.smoothing())?;
            }
            // the difference step defaults to the spacing of the input grid
            let h = match cfg.h {
                Some(h) => h,
                None => uniform_step(&data.p_values)?,
            };
            run.param("h_used", h);
            let img = reconstruct_view_with(&data, &geom, cfg.filter_spec(), h, ReconGrid::square(cfg.size), cfg.scheme)?;
            run.image("recon", &img);
            run
        }
        Command::Average(a) => {
            a.phantom.apply(&mut cfg)?;
            a.grid.apply(&mut cfg)?;
            a.recon.apply(&mut cfg)?;
            a.smooth.apply(&mut cfg)?;
            set_opt(&mut cfg, "n_views", &a.views)?;
            set_opt(&mut cfg, "noise_percent", &a.percent)?;
            set_opt(&mut cfg, "seed", &a.seed)?;
            cfg.validate()?;
            let geom = cfg.geometry()?;
            let spec = cfg.phantom_spec(&geom)?;
            let img = average_views(&spec, &geom, cfg.n_views, &cfg.view_config())?;
            let mut run = Run::new("average", cfg);
            let f_avg = metrics::support_mean(&img, &spec).unwrap_or(f64::NAN);
            let mad = metrics::support_mad(&img, &spec).unwrap_or(f64::NAN);
            run.param("f_avg", f_avg);
            run.param("support_mad", mad);
            run.output_in_out("average_stats.txt", format!("f_avg={f_avg}\nsupport_mad={mad}\n").into_bytes());
            run.image("average", &img);
            run
        }
        Command::PhysicsWeight(a) => {
            a.grid.apply(&mut cfg)?;
            a.physics.apply(&mut cfg)?;
            cfg.validate()?;
            let geom = cfg.geometry()?;
            let params = cfg.physics_params()?;
            let atten = cfg.attenuation_model()?;
            let mut run = Run::new("physics-weight", cfg.clone());
            let (p, phi) = match &a.input {
                Some(path) => {
                    let s = DiscSinogram::from_csv(&run.read(path)?)?;
                    (s.p_values, s.phi_values)
                }
                None => (cfg.p_values(), cfg.phi_values()),
            };
            let table = WeightTable::compute(&geom, &p, &phi, &params, &atten)?;
            run.output_in_out("p_avg.csv", table.to_csv().into_bytes());
            run
        }
        Command::Normalize(a) => {
            a.physics.apply(&mut cfg)?;
            cfg.validate()?;
            let geom = cfg.geometry()?;
            let params = cfg.physics_params()?;
            let mut run = Run::new("normalize", cfg.clone());
            let input = run.default_path(&a.input, "intensity.csv");
            let intensity = DiscSinogram::from_csv(&run.read(&input)?)?;
            let normalized = match &a.weights {
                Some(path) => {
                    let table = WeightTable::from_csv(&run.read(path)?)?;
                    normalize_with(&intensity, &table, &params)?
                }
                None => {
                    let atten = cfg.attenuation_model()?;
                    let (n, table) = normalize_measurements(&intensity, &geom, &params, &atten)?;
                    run.output_in_out("p_avg.csv", table.to_csv().into_bytes());
                    n
                }
            };
            run.output_in_out("normalized.csv", sinogram_bytes(&normalized));
            run
        }
        Command::AtomicNumber(a) => {
            cfg.validate()?;
            if !(a.threshold > 0.0 && a.threshold < 1.0) {
                return Err(Error::parse("threshold", "must lie in (0, 1)"));
            }
            let mut run = Run::new("atomic-number", cfg);
            let fit = match &a.fit {
                Some(path) => SigmaFit::parse(&run.read(path)?)?,
                None => SigmaFit::kev100(),
            };
            let path = run.default_path(&a.image, "average.dtimg");
            let img = run.read_image(&path)?;
            let max = img.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(max > 0.0) {
                return Err(Error::parse("image", "no positive density"));
            }
            let cut = a.threshold * max;
            let inside: Vec<f64> = img.values.iter().cloned().filter(|v| *v > cut).collect();
            let n_e = inside.iter().sum::<f64>() / inside.len() as f64;
            let z = fit.estimate_z(a.mu, n_e)?;
            run.param("mu", a.mu);
            run.param("threshold", a.threshold);
            let report = format!(
                "n_e={n_e}\nmu={}\nsigma_e={}\nz={z}\npixels={}\n",
                a.mu,
                a.mu / n_e,
                inside.len()
            );
            run.output_in_out("atomic_number.txt", report.into_bytes());
            run
        }
        Command::SliceCheck(a) => {
            a.phantom.apply(&mut cfg)?;
            cfg.validate()?;
            let geom = cfg.geometry()?;
            let spec = cfg.phantom_spec(&geom)?;
            let p = default_p_grid(a.n_p.max(3));
            let limit = slice_band_limit(uniform_step(&p)?);
            let sigmas = if a.sigmas.is_empty() {
                (1..=8).map(|k| limit * k as f64 / 8.0).collect()
            } else {
                a.sigmas.clone()
            };
            let report = fourier_slice_check(
                &spec,
                &geom,
                a.phi,
                &sigmas,
                SliceCheckConfig {
                    n_p: a.n_p,
                    n_quad: a.n_quad,
                },
            )?;
            let mut csv = String::from("sigma,lhs_re,lhs_im,rhs_re,rhs_im\n");
            for ((s, l), r) in report.sigmas.iter().zip(&report.lhs).zip(&report.rhs) {
                let _ = writeln!(csv, "{s:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", l.re, l.im, r.re, r.im);
            }
            let mut run = Run::new("slice-check", cfg);
            run.param("phi", a.phi);
            run.param("n_p", a.n_p);
            run.param("n_quad", a.n_quad);
            run.param("max_relative_error", report.max_relative_error);
            run.output_in_out("slice_check.csv", csv.into_bytes());
            run
        }
        Command::ValidateRtt80(a) => {
            cfg.validate()?;
            let geom = cfg.geometry()?;
            let report = validate_rtt80(&geom, a.n_p, a.n_phi, a.cells)?;
            let mut run = Run::new("validate-rtt80", cfg);
            run.param("rtt_n_p", a.n_p);
            run.param("rtt_n_phi", a.n_phi);
            run.param("cells", a.cells);
            run.param("tolerance", a.tolerance);
            run.output_in_out("rtt80_areas.csv", report.to_csv().into_bytes());
            run.output_in_out("rtt80_report.txt", report.to_text().into_bytes());
            let rel = report.relative();
            run.finish()?;
            if !(rel < a.tolerance) {
                return Err(Error::InvalidInput(format!(
                    "rtt80: max-min area difference {rel:e} of the tunnel area exceeds {:e}",
                    a.tolerance
                )));
            }
            return Ok(());
        }
    };
    run.finish()
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 on a usage error, 2 on a validation or I/O failure.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
