//! Run configuration shared by the command-line subcommands.
//!
//! A config file holds `key=value` lines; `#` starts a comment. Command-line
//! flags override file values, which override the defaults below.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::ScannerGeometry;
use crate::phantom::{make_phantom, PhantomKind, PhantomParams, PhantomSpec};
use crate::physics::{AttenuationModel, PhysicsParams, Spectrum};
use crate::recon::{FilterKind, FilterSpec, ReconGrid, ViewConfig};
use crate::signal::{NoiseSpec, Shape, SmoothSpec};
use crate::transform::{default_p_grid, default_phi_grid, DiffScheme};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub r: f64,
    pub n_detectors: usize,
    pub tunnel_gap: f64,
    /// `water_bottle`, `hollow_tube`, or a path to a phantom text file.
    pub phantom: String,
    pub density: f64,
    pub edge: f64,
    pub n_p: usize,
    pub n_phi: usize,
    /// Difference step in p; defaults to the p spacing.
    pub h: Option<f64>,
    pub scheme: DiffScheme,
    pub noise_percent: f64,
    pub seed: u64,
    /// Defaults follow the noise level when unset.
    pub smooth_window: Option<usize>,
    pub smooth_stride: Option<usize>,
    pub smooth_shape: Shape,
    pub filter: FilterKind,
    pub cutoff: f64,
    pub size: usize,
    pub n_views: usize,
    pub physics: bool,
    pub e_max: f64,
    pub spectrum: Option<PathBuf>,
    pub quadrature_cells: usize,
    /// `none`, a `.dtimg` attenuation map, or a transmission table CSV (`angle,ratio`).
    pub attenuation: String,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            r: 6.75,
            n_detectors: 720,
            tunnel_gap: 0.375,
            phantom: "water_bottle".into(),
            density: 1.0,
            edge: 0.0,
            n_p: 100,
            n_phi: 360,
            h: None,
            scheme: DiffScheme::Forward,
            noise_percent: 0.0,
            seed: 7,
            smooth_window: None,
            smooth_stride: None,
            smooth_shape: Shape::Free,
            filter: FilterKind::RamLak,
            cutoff: 1.0,
            size: 256,
            n_views: 360,
            physics: false,
            e_max: 150.0,
            spectrum: None,
            quadrature_cells: 128,
            attenuation: "none".into(),
            out: PathBuf::from("out"),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::parse(key, format!("cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::parse(key, format!("expected a boolean, got '{v}'"))),
    }
}

pub fn parse_scheme(v: &str) -> Result<DiffScheme> {
    match v {
        "forward" => Ok(DiffScheme::Forward),
        "central" => Ok(DiffScheme::Central),
        _ => Err(Error::parse("scheme", format!("expected forward or central, got '{v}'"))),
    }
}

fn scheme_name(s: DiffScheme) -> &'static str {
    match s {
        DiffScheme::Forward => "forward",
        DiffScheme::Central => "central",
    }
}

pub fn parse_shape(v: &str) -> Result<Shape> {
    match v {
        "free" => Ok(Shape::Free),
        "non_increasing" => Ok(Shape::NonIncreasing),
        "non_decreasing" => Ok(Shape::NonDecreasing),
        _ => Err(Error::parse("smooth_shape", format!("unknown shape '{v}'"))),
    }
}

fn shape_name(s: Shape) -> &'static str {
    match s {
        Shape::Free => "free",
        Shape::NonIncreasing => "non_increasing",
        Shape::NonDecreasing => "non_decreasing",
    }
}

fn filter_name(f: FilterKind) -> &'static str {
    match f {
        FilterKind::RamLak => "ramlak",
        FilterKind::RamLakHamming => "ramlak_hamming",
    }
}

impl RunConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "r" => self.r = num(key, v)?,
            "n_detectors" => self.n_detectors = num(key, v)?,
            "tunnel_gap" => self.tunnel_gap = num(key, v)?,
            "phantom" => self.phantom = v.to_string(),
            "density" => self.density = num(key, v)?,
            "edge" => self.edge = num(key, v)?,
            "n_p" => self.n_p = num(key, v)?,
            "n_phi" => self.n_phi = num(key, v)?,
            "h" => self.h = if v == "auto" { None } else { Some(num(key, v)?) },
            "scheme" => self.scheme = parse_scheme(v)?,
            "noise_percent" => self.noise_percent = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "smooth_window" => self.smooth_window = if v == "auto" { None } else { Some(num(key, v)?) },
            "smooth_stride" => self.smooth_stride = if v == "auto" { None } else { Some(num(key, v)?) },
            "smooth_shape" => self.smooth_shape = parse_shape(v)?,
            "filter" => self.filter = v.parse()?,
            "cutoff" => self.cutoff = num(key, v)?,
            "size" => self.size = num(key, v)?,
            "n_views" => self.n_views = num(key, v)?,
            "physics" => self.physics = parse_bool(key, v)?,
            "e_max" => self.e_max = num(key, v)?,
            "spectrum" => self.spectrum = if v == "kramers" { None } else { Some(PathBuf::from(v)) },
            "quadrature_cells" => self.quadrature_cells = num(key, v)?,
            "attenuation" => self.attenuation = v.to_string(),
            "out" => self.out = PathBuf::from(v),
            other => return Err(Error::parse(other, "unknown config key")),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("config", format!("line {}: expected key=value", n + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// All settings as `key=value` lines in a fixed order.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("r", self.r.to_string());
        kv("n_detectors", self.n_detectors.to_string());
        kv("tunnel_gap", self.tunnel_gap.to_string());
        kv("phantom", self.phantom.clone());
        kv("density", self.density.to_string());
        kv("edge", self.edge.to_string());
        kv("n_p", self.n_p.to_string());
        kv("n_phi", self.n_phi.to_string());
        kv("h", opt(self.h.map(|v| v.to_string())));
        kv("scheme", scheme_name(self.scheme).into());
        kv("noise_percent", self.noise_percent.to_string());
        kv("seed", self.seed.to_string());
        kv("smooth_window", opt(self.smooth_window.map(|v| v.to_string())));
        kv("smooth_stride", opt(self.smooth_stride.map(|v| v.to_string())));
        kv("smooth_shape", shape_name(self.smooth_shape).into());
        kv("filter", filter_name(self.filter).into());
        kv("cutoff", self.cutoff.to_string());
        kv("size", self.size.to_string());
        kv("n_views", self.n_views.to_string());
        kv("physics", self.physics.to_string());
        kv("e_max", self.e_max.to_string());
        kv(
            "spectrum",
            self.spectrum
                .as_ref()
                .map_or("kramers".into(), |p| p.display().to_string()),
        );
        kv("quadrature_cells", self.quadrature_cells.to_string());
        kv("attenuation", self.attenuation.clone());
        kv("out", self.out.display().to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_p < 2 {
            return Err(Error::parse("n_p", "must be at least 2"));
        }
        if self.n_phi < 1 {
            return Err(Error::parse("n_phi", "must be at least 1"));
        }
        if self.n_views < 1 {
            return Err(Error::parse("n_views", "must be at least 1"));
        }
        if self.size < 2 {
            return Err(Error::parse("size", "must be at least 2"));
        }
        if let Some(h) = self.h {
            if !(h > 0.0) {
                return Err(Error::parse("h", "must be positive"));
            }
        }
        if !(self.noise_percent >= 0.0) {
            return Err(Error::parse("noise_percent", "must be non-negative"));
        }
        self.geometry()?;
        self.filter_spec().validate()?;
        self.smoothing().validate()
    }

    pub fn geometry(&self) -> Result<ScannerGeometry> {
        ScannerGeometry::with_uniform_detectors(self.r, self.n_detectors, self.n_views, self.tunnel_gap)
    }

    pub fn phantom_spec(&self, geom: &ScannerGeometry) -> Result<PhantomSpec> {
        let params = PhantomParams {
            density: self.density,
            edge: self.edge,
            ..PhantomParams::default()
        };
        match self.phantom.parse::<PhantomKind>() {
            Ok(kind) => make_phantom(&kind, geom, &params),
            Err(_) => {
                let text = std::fs::read_to_string(&self.phantom)
                    .map_err(|e| Error::parse("phantom", format!("'{}': {e}", self.phantom)))?;
                let spec = PhantomSpec::parse(&text)?;
                spec.validate(geom)?;
                Ok(spec)
            }
        }
    }

    pub fn p_values(&self) -> Vec<f64> {
        default_p_grid(self.n_p)
    }

    pub fn phi_values(&self) -> Vec<f64> {
        default_phi_grid(self.n_phi)
    }

    pub fn step(&self) -> f64 {
        self.h.unwrap_or(1.0 / (self.n_p - 1) as f64)
    }

    pub fn filter_spec(&self) -> FilterSpec {
        FilterSpec {
            kind: self.filter,
            cutoff: self.cutoff,
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            percent: self.noise_percent,
            seed: self.seed,
        }
    }

    pub fn smoothing(&self) -> SmoothSpec {
        let base = SmoothSpec::for_noise_percent(self.noise_percent);
        SmoothSpec::new(
            self.smooth_window.unwrap_or(base.window),
            self.smooth_stride.unwrap_or(base.stride),
        )
        .with_shape(self.smooth_shape)
    }

    /// View setup for averaging: noise and smoothing only when noise is on.
    pub fn view_config(&self) -> ViewConfig {
        let noisy = self.noise_percent > 0.0;
        ViewConfig {
            p_values: self.p_values(),
            phi_values: self.phi_values(),
            filter: self.filter_spec(),
            h: self.step(),
            scheme: self.scheme,
            grid: ReconGrid::square(self.size),
            noise: noisy.then(|| self.noise()),
            smoothing: noisy.then(|| self.smoothing()),
        }
    }

    pub fn physics_params(&self) -> Result<PhysicsParams> {
        let spectrum = match &self.spectrum {
            Some(path) => Spectrum::read_csv(path)?,
            None => Spectrum::default(),
        };
        let params = PhysicsParams {
            e_max: self.e_max,
            spectrum,
            quadrature_cells: self.quadrature_cells,
            ..PhysicsParams::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn attenuation_model(&self) -> Result<AttenuationModel> {
        let a = self.attenuation.as_str();
        let model = if a == "none" {
            AttenuationModel::None
        } else if a.ends_with(".dtimg") {
            AttenuationModel::KnownMu(crate::image::ImageGrid::read_dtimg(Path::new(a))?)
        } else {
            let text = std::fs::read_to_string(a).map_err(|e| Error::parse("attenuation", format!("'{a}': {e}")))?;
            let (mut angles, mut ratios) = (Vec::new(), Vec::new());
            for (n, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let parsed = line
                    .split_once(',')
                    .and_then(|(x, y)| Some((x.trim().parse::<f64>().ok()?, y.trim().parse::<f64>().ok()?)));
                match parsed {
                    Some((x, y)) => {
                        angles.push(x);
                        ratios.push(y);
                    }
                    None if n == 0 => continue,
                    None => return Err(Error::parse("attenuation", format!("line {}: expected angle,ratio", n + 1))),
                }
            }
            AttenuationModel::StraightThrough { angles, ratios }
        };
        model.validate()?;
        Ok(model)
    }
}
