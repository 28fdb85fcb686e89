//! Compton kinematics, cross sections and the intensity weight that turns
//! measured scattered intensities into disc integrals.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{circle_intersections, Disc, Point2, ScannerGeometry};
use crate::image::ImageGrid;
use crate::par;
use crate::sinogram::{DiscSinogram, Quantity};

/// Electron rest energy in keV.
pub const E0: f64 = 511.0;
/// `hc` in keV·Å.
pub const HC_KEV_ANGSTROM: f64 = 12.398;

/// Energy after scattering through `omega`.
pub fn scattered_energy(e_lambda: f64, omega: f64) -> Result<f64> {
    if !(e_lambda > 0.0) {
        return Err(Error::invalid(format!("photon energy must be positive, got {e_lambda}")));
    }
    Ok(e_lambda / (1.0 + (e_lambda / E0) * (1.0 - omega.cos())))
}

/// Incident energy that leaves `e_s` after scattering through `omega`.
pub fn incident_energy(e_s: f64, omega: f64) -> Result<f64> {
    if !(e_s > 0.0) {
        return Err(Error::invalid(format!("photon energy must be positive, got {e_s}")));
    }
    let denom = 1.0 - (e_s / E0) * (1.0 - omega.cos());
    if denom <= 0.0 {
        return Err(Error::NoPhysicalEnergy { e_s, omega });
    }
    Ok(e_s / denom)
}

/// Largest scattering angle that can leave energy `e_s` from a spectrum ending at `e_max`.
pub fn omega_max(e_max: f64, e_s: f64) -> Result<f64> {
    if !(e_s > 0.0) || !(e_max > 0.0) {
        return Err(Error::invalid("energies must be positive"));
    }
    if e_s > e_max {
        return Err(Error::invalid(format!("E_s = {e_s} exceeds E_max = {e_max}")));
    }
    let arg = 1.0 - E0 * (e_max - e_s) / (e_s * e_max);
    Ok(if arg < -1.0 { PI } else { arg.min(1.0).acos() })
}

/// Klein–Nishina differential cross section in units of `r₀²` per steradian.
pub fn klein_nishina(e_lambda: f64, omega: f64) -> Result<f64> {
    let ratio = scattered_energy(e_lambda, omega)? / e_lambda;
    let c = omega.cos();
    Ok(0.5 * ratio * ratio * (ratio + 1.0 / ratio - 1.0 + c * c))
}

/// Momentum transfer in Å⁻¹.
pub fn momentum_transfer(e_lambda: f64, omega: f64) -> f64 {
    e_lambda / HC_KEV_ANGSTROM * (0.5 * omega).sin().abs()
}

/// Coefficients `(a, b, c)` of `S(q) = 1 − a/(1 + b q)^c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for ScatterFit {
    fn default() -> Self {
        ScatterFit {
            a: 1.023,
            b: 0.458,
            c: 2.509,
        }
    }
}

impl ScatterFit {
    /// Incoherent scattering function, clamped to `[0, 1]`.
    pub fn eval(&self, q: f64) -> f64 {
        (1.0 - self.a / (1.0 + self.b * q).powf(self.c)).clamp(0.0, 1.0)
    }
}

/// `S(q(E_λ, ω))` with the default fit.
pub fn scatter_function(e_lambda: f64, omega: f64) -> f64 {
    ScatterFit::default().eval(momentum_transfer(e_lambda, omega))
}

/// Source spectrum `I₀(E)`, normalized to unit integral.
#[derive(Debug, Clone, PartialEq)]
pub enum Spectrum {
    /// `∝ E_max/E − 1` on `[e_min, E_max]`.
    Kramers { e_min: f64 },
    /// Linear interpolation of `(E, I)` pairs, zero outside.
    Tabulated { energies: Vec<f64>, values: Vec<f64> },
}

impl Default for Spectrum {
    fn default() -> Self {
        Spectrum::Kramers { e_min: 10.0 }
    }
}

impl Spectrum {
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut energies = Vec::new();
        let mut values = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(',');
            let (Some(e), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse("spectrum", format!("line {}: expected E_keV,relative_intensity", n + 1)));
            };
            match (e.trim().parse::<f64>(), v.trim().parse::<f64>()) {
                (Ok(e), Ok(v)) => {
                    energies.push(e);
                    values.push(v);
                }
                // a header row
                _ if energies.is_empty() && n == 0 => continue,
                _ => return Err(Error::parse("spectrum", format!("line {}: not a number", n + 1))),
            }
        }
        let s = Spectrum::Tabulated { energies, values };
        s.validate()?;
        Ok(s)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Spectrum::Kramers { e_min } => {
                if !(*e_min > 0.0) {
                    return Err(Error::invalid("Kramers spectrum needs a positive lower energy"));
                }
            }
            Spectrum::Tabulated { energies, values } => {
                if energies.len() < 2 || energies.len() != values.len() {
                    return Err(Error::parse("spectrum", "need at least two (E, I) rows"));
                }
                if energies.windows(2).any(|w| !(w[1] > w[0])) || !(energies[0] > 0.0) {
                    return Err(Error::parse("spectrum", "energies must be positive and increasing"));
                }
                if values.iter().any(|v| !(*v >= 0.0)) || values.iter().all(|v| *v == 0.0) {
                    return Err(Error::parse("spectrum", "intensities must be non-negative and not all zero"));
                }
            }
        }
        Ok(())
    }

    /// Normalized intensity at `e`; zero above `e_max`.
    pub fn intensity(&self, e: f64, e_max: f64) -> f64 {
        if !(e > 0.0) || e > e_max {
            return 0.0;
        }
        match self {
            Spectrum::Kramers { e_min } => {
                if e < *e_min || *e_min >= e_max {
                    return 0.0;
                }
                let norm = e_max * (e_max / e_min).ln() - (e_max - e_min);
                (e_max / e - 1.0) / norm
            }
            Spectrum::Tabulated { energies, values } => {
                let raw = |x: f64| -> f64 {
                    if x < energies[0] || x > energies[energies.len() - 1] {
                        return 0.0;
                    }
                    let k = energies.partition_point(|&q| q <= x).clamp(1, energies.len() - 1);
                    let t = (x - energies[k - 1]) / (energies[k] - energies[k - 1]);
                    values[k - 1] * (1.0 - t) + values[k] * t
                };
                let norm: f64 = energies
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(e, v)| 0.5 * (v[0] + v[1]) * (e[1] - e[0]))
                    .sum();
                raw(e) / norm
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorNormal {
    /// Outward normal of the detector ring at the detector.
    Radial,
    Fixed(Point2),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsParams {
    pub e_max: f64,
    pub r0: f64,
    pub z_avg: f64,
    pub s_fit: ScatterFit,
    pub slice_thickness: f64,
    pub detector_area: f64,
    pub detector_normal: DetectorNormal,
    pub spectrum: Spectrum,
    /// Distances to the detector below this are raised to it, which keeps the
    /// `1/|r|²` solid angle integrable over the region.
    pub min_distance: f64,
    /// Cells per axis for [`average_weight`].
    pub quadrature_cells: usize,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        PhysicsParams {
            e_max: 150.0,
            r0: 1.0,
            z_avg: 45.0,
            s_fit: ScatterFit::default(),
            slice_thickness: 1.0,
            detector_area: 1.0,
            detector_normal: DetectorNormal::Radial,
            spectrum: Spectrum::default(),
            min_distance: 0.05,
            quadrature_cells: 128,
        }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_max > 0.0) {
            return Err(Error::invalid("E_max must be positive"));
        }
        if !(self.r0 > 0.0) || !(self.slice_thickness > 0.0) || !(self.detector_area > 0.0) {
            return Err(Error::invalid("r0, slice thickness and detector area must be positive"));
        }
        if let DetectorNormal::Fixed(n) = self.detector_normal {
            if (n.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid("detector normal must be a unit vector"));
            }
        }
        if !(self.min_distance >= 0.0) || self.quadrature_cells == 0 {
            return Err(Error::invalid("min_distance must be non-negative and quadrature_cells positive"));
        }
        self.spectrum.validate()
    }
}

/// Line integral of an attenuation map sampled at half-pixel steps.
fn path_integral(mu: &ImageGrid, a: Point2, b: Point2) -> f64 {
    let len = a.distance(b);
    let step = 0.5 * mu.dx().min(mu.dy());
    let n = ((len / step).ceil() as usize).max(1);
    let h = len / n as f64;
    (0..n)
        .map(|k| mu.bilinear(a + (b - a) * ((k as f64 + 0.5) / n as f64)))
        .sum::<f64>()
        * h
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum AttenuationModel {
    #[default]
    None,
    /// Known attenuation map, applied along source→u and u→detector.
    KnownMu(ImageGrid),
    /// Transmission `I_v/I₀` of the straight ray from the source through u,
    /// tabulated over ray angle and interpolated linearly.
    StraightThrough { angles: Vec<f64>, ratios: Vec<f64> },
}

impl AttenuationModel {
    pub fn validate(&self) -> Result<()> {
        if let AttenuationModel::StraightThrough { angles, ratios } = self {
            if angles.is_empty() || angles.len() != ratios.len() {
                return Err(Error::invalid("transmission table needs matching, non-empty columns"));
            }
            if angles.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::invalid("transmission angles must increase"));
            }
            if ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
                return Err(Error::invalid("transmission ratios must lie in (0, 1]"));
            }
        }
        Ok(())
    }

    fn factor(&self, s: Point2, u: Point2, d: Point2) -> f64 {
        match self {
            AttenuationModel::None => 1.0,
            AttenuationModel::KnownMu(mu) => (-(path_integral(mu, s, u) + path_integral(mu, u, d))).exp(),
            AttenuationModel::StraightThrough { angles, ratios } => {
                let v = u - s;
                let a = v.y.atan2(v.x);
                let k = angles.partition_point(|&q| q <= a);
                if k == 0 {
                    ratios[0]
                } else if k == angles.len() {
                    ratios[k - 1]
                } else {
                    let t = (a - angles[k - 1]) / (angles[k] - angles[k - 1]);
                    ratios[k - 1] * (1.0 - t) + ratios[k] * t
                }
            }
        }
    }
}

/// The scattering region `D_{1/p,φ} ∩ D_r` for one sinogram entry, with the
/// detector and measured energy it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterGeometry {
    pub p: f64,
    pub phi: f64,
    /// `None` for `p = 0`, where the disc is the half-plane `x·Φ > 0`.
    pub disc: Option<Disc>,
    pub detector: Point2,
    /// The other crossing of the disc boundary with the ring.
    pub other: Point2,
    /// Scattering angle along the boundary arc through both crossings.
    pub omega_arc: f64,
    pub e_s: f64,
}

fn scatter_angle(s: Point2, u: Point2, d: Point2) -> f64 {
    let a = u - s;
    let b = d - u;
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

impl ScatterGeometry {
    /// The detector is the crossing to the left of `Φ`; `E_s` is the energy
    /// left by photons at `E_max` scattered along the boundary arc.
    pub fn new(geom: &ScannerGeometry, p: f64, phi: f64, e_max: f64) -> Result<Self> {
        if !(p >= 0.0) {
            return Err(Error::invalid(format!("p must be non-negative, got {p}")));
        }
        let ring = geom.ring();
        let (disc, crossings) = if p == 0.0 {
            // line x·Φ = 0 through the source, direction t
            let t = Point2::new(-phi.sin(), phi.cos());
            let b = t.dot(ring.center);
            let disc_term = b * b - (ring.center.norm_sq() - ring.radius * ring.radius);
            let pair = (disc_term > 0.0).then(|| {
                let r = disc_term.sqrt();
                (t * (b + r), t * (b - r))
            });
            (None, pair)
        } else {
            let d = Disc::through_origin(p, phi)?;
            (Some(d), circle_intersections(&d, &ring))
        };
        let (a, b) = crossings.ok_or(Error::EmptyRegion { p, phi })?;
        let dir = Point2::unit(phi);
        let (detector, other) = if dir.cross(a) >= dir.cross(b) { (a, b) } else { (b, a) };
        let omega_arc = scatter_angle(Point2::ORIGIN, other, detector);
        Ok(ScatterGeometry {
            p,
            phi,
            disc,
            detector,
            other,
            omega_arc,
            e_s: scattered_energy(e_max, omega_arc)?,
        })
    }

    pub fn in_region(&self, geom: &ScannerGeometry, u: Point2) -> bool {
        let inside = match self.disc {
            Some(d) => d.contains(u),
            None => u.dot(Point2::unit(self.phi)) > 0.0,
        };
        inside && geom.ring().contains(u)
    }

    /// Bounding box `(xmin, xmax, ymin, ymax)` of the region.
    pub fn bbox(&self, geom: &ScannerGeometry) -> (f64, f64, f64, f64) {
        let ring = geom.ring();
        let mut b = (
            ring.center.x - ring.radius,
            ring.center.x + ring.radius,
            ring.center.y - ring.radius,
            ring.center.y + ring.radius,
        );
        if let Some(d) = self.disc {
            b = (
                b.0.max(d.center.x - d.radius),
                b.1.min(d.center.x + d.radius),
                b.2.max(d.center.y - d.radius),
                b.3.min(d.center.y + d.radius),
            );
        }
        b
    }
}

/// `P(u; p, φ)`: scattered intensity per unit electron areal density at `u`.
pub fn point_weight(
    u: Point2,
    geom: &ScannerGeometry,
    p: f64,
    phi: f64,
    params: &PhysicsParams,
    atten: &AttenuationModel,
) -> Result<f64> {
    let sg = ScatterGeometry::new(geom, p, phi, params.e_max)?;
    weight_at(u, geom, &sg, params, atten)
}

fn weight_at(
    u: Point2,
    geom: &ScannerGeometry,
    sg: &ScatterGeometry,
    params: &PhysicsParams,
    atten: &AttenuationModel,
) -> Result<f64> {
    let s = Point2::ORIGIN;
    let d = sg.detector;
    let scale = geom.r.max(1.0);
    if u.distance(s) <= 1e-12 * scale || u.distance(d) <= 1e-12 * scale {
        return Err(Error::SingularConfiguration(format!(
            "scattering point ({}, {}) coincides with the source or detector",
            u.x, u.y
        )));
    }
    let omega = scatter_angle(s, u, d);
    let e_lambda = match incident_energy(sg.e_s, omega) {
        Ok(e) => e,
        Err(Error::NoPhysicalEnergy { .. }) => return Ok(0.0),
        Err(e) => return Err(e),
    };
    let i0 = params.spectrum.intensity(e_lambda, params.e_max);
    if i0 == 0.0 {
        return Ok(0.0);
    }
    let cross = params.r0 * params.r0 * klein_nishina(e_lambda, omega)?;
    let sq = params.s_fit.eval(momentum_transfer(e_lambda, omega));
    let r = d - u;
    let n = match params.detector_normal {
        DetectorNormal::Radial => (d - geom.ring_center()) * (1.0 / geom.ring_radius()),
        DetectorNormal::Fixed(n) => n,
    };
    let dist = r.norm().max(params.min_distance);
    let solid = (params.detector_area / (4.0 * PI) * r.dot(n) / (r.norm() * dist * dist)).max(0.0);
    Ok(i0 * atten.factor(s, u, d) * cross * sq * solid)
}

/// Region average of [`point_weight`] by the midpoint rule on
/// `quadrature_cells²` cells over the region's bounding box.
pub fn average_weight(
    geom: &ScannerGeometry,
    p: f64,
    phi: f64,
    params: &PhysicsParams,
    atten: &AttenuationModel,
) -> Result<f64> {
    let sg = ScatterGeometry::new(geom, p, phi, params.e_max)?;
    average_over(geom, &sg, params, |u| weight_at(u, geom, &sg, params, atten))
}

fn average_over<F>(
    geom: &ScannerGeometry,
    sg: &ScatterGeometry,
    params: &PhysicsParams,
    weight: F,
) -> Result<f64>
where
    F: Fn(Point2) -> Result<f64> + Sync + Send,
{
    let (x0, x1, y0, y1) = sg.bbox(geom);
    let n = params.quadrature_cells;
    let (dx, dy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    if !(dx > 0.0 && dy > 0.0) {
        return Err(Error::EmptyRegion { p: sg.p, phi: sg.phi });
    }
    // per-row sums and counts, reduced in row order
    let rows = par::try_map_indexed(n, |j| {
        let y = y0 + (j as f64 + 0.5) * dy;
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            let u = Point2::new(x0 + (i as f64 + 0.5) * dx, y);
            if sg.in_region(geom, u) {
                sum += weight(u)?;
                count += 1;
            }
        }
        Ok((sum, count))
    })?;
    let (sum, count) = rows.iter().fold((0.0, 0usize), |(s, c), (rs, rc)| (s + rs, c + rc));
    if count == 0 {
        return Err(Error::EmptyRegion { p: sg.p, phi: sg.phi });
    }
    Ok(sum / count as f64)
}

/// Region average of an arbitrary weight, for checks against known fields.
pub fn average_of<F>(geom: &ScannerGeometry, p: f64, phi: f64, params: &PhysicsParams, weight: F) -> Result<f64>
where
    F: Fn(Point2) -> f64 + Sync + Send,
{
    let sg = ScatterGeometry::new(geom, p, phi, params.e_max)?;
    average_over(geom, &sg, params, |u| Ok(weight(u)))
}

/// `P_avg` on a sinogram grid. Entries whose region misses the ring are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub p_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    /// Row per φ, like [`DiscSinogram`].
    pub values: Vec<f64>,
}

impl WeightTable {
    pub fn compute(
        geom: &ScannerGeometry,
        p_values: &[f64],
        phi_values: &[f64],
        params: &PhysicsParams,
        atten: &AttenuationModel,
    ) -> Result<Self> {
        params.validate()?;
        atten.validate()?;
        let n_p = p_values.len();
        let values = (0..n_p * phi_values.len())
            .map(|idx| {
                let (p, phi) = (p_values[idx % n_p], phi_values[idx / n_p]);
                match average_weight(geom, p, phi, params, atten) {
                    Err(Error::EmptyRegion { .. }) => Ok(0.0),
                    other => other,
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(WeightTable {
            p_values: p_values.to_vec(),
            phi_values: phi_values.to_vec(),
            values,
        })
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[j * self.p_values.len() + k]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,phi,p_avg\n");
        for (j, phi) in self.phi_values.iter().enumerate() {
            for (k, p) in self.p_values.iter().enumerate() {
                let _ = writeln!(out, "{p:.16e},{phi:.16e},{:.16e}", self.get(k, j));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<f64> = line
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse("p_avg table", format!("line {}: {e}", n + 1)))?;
            if f.len() != 3 {
                return Err(Error::parse("p_avg table", format!("line {}: expected p,phi,p_avg", n + 1)));
            }
            rows.push((f[0], f[1], f[2]));
        }
        let mut p_values: Vec<f64> = Vec::new();
        for r in &rows {
            if p_values.contains(&r.0) {
                break;
            }
            p_values.push(r.0);
        }
        if p_values.is_empty() || rows.len() % p_values.len() != 0 {
            return Err(Error::parse("p_avg table", "rows do not form a full grid"));
        }
        let phi_values: Vec<f64> = rows.iter().step_by(p_values.len()).map(|r| r.1).collect();
        for (idx, r) in rows.iter().enumerate() {
            if r.0 != p_values[idx % p_values.len()] || r.1 != phi_values[idx / p_values.len()] {
                return Err(Error::parse("p_avg table", format!("row {} is out of grid order", idx + 2)));
            }
        }
        Ok(WeightTable {
            p_values,
            phi_values,
            values: rows.iter().map(|r| r.2).collect(),
        })
    }

    fn matches(&self, s: &DiscSinogram) -> bool {
        self.p_values == s.p_values && self.phi_values == s.phi_values
    }
}

/// Simulated measurement `s · P_avg · 𝒟₁f`.
pub fn weight_measurements(data: &DiscSinogram, table: &WeightTable, params: &PhysicsParams) -> Result<DiscSinogram> {
    data.require(&[Quantity::DiscIntegral])?;
    if !table.matches(data) {
        return Err(Error::InvalidInput("weight table grid differs from the sinogram grid".into()));
    }
    let mut out = data.clone();
    out.quantity = Quantity::Intensity;
    for (v, w) in out.data.iter_mut().zip(&table.values) {
        *v *= params.slice_thickness * w;
    }
    Ok(out)
}

/// Divides measured intensities by `s · P_avg` to obtain disc integrals.
pub fn normalize_with(intensity: &DiscSinogram, table: &WeightTable, params: &PhysicsParams) -> Result<DiscSinogram> {
    intensity.require(&[Quantity::Intensity])?;
    if !table.matches(intensity) {
        return Err(Error::InvalidInput("weight table grid differs from the sinogram grid".into()));
    }
    let n_p = intensity.n_p();
    let mut out = intensity.clone();
    out.quantity = Quantity::DiscIntegral;
    for (idx, v) in out.data.iter_mut().enumerate() {
        let w = table.values[idx];
        if *v == 0.0 {
            *v = 0.0;
        } else if w > 0.0 {
            *v /= params.slice_thickness * w;
        } else {
            return Err(Error::Normalization {
                p: intensity.p_values[idx % n_p],
                phi: intensity.phi_values[idx / n_p],
                reason: "P_avg is zero where intensity is not".into(),
            });
        }
    }
    Ok(out)
}

/// Computes `P_avg` for the intensity grid and normalizes.
pub fn normalize_measurements(
    intensity: &DiscSinogram,
    geom: &ScannerGeometry,
    params: &PhysicsParams,
    atten: &AttenuationModel,
) -> Result<(DiscSinogram, WeightTable)> {
    intensity.require(&[Quantity::Intensity])?;
    let table = WeightTable::compute(geom, &intensity.p_values, &intensity.phi_values, params, atten)?;
    Ok((normalize_with(intensity, &table, params)?, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::scatter_region_area;

    #[test]
    fn scattered_energy_examples() {
        assert_eq!(scattered_energy(100.0, 0.0).unwrap(), 100.0);
        assert!((scattered_energy(100.0, PI / 2.0).unwrap() - 83.634).abs() < 1e-3);
        assert!((scattered_energy(511.0, PI).unwrap() - 170.333).abs() < 1e-3);
        assert!(scattered_energy(0.0, 1.0).is_err());
    }

    #[test]
    fn incident_energy_pole() {
        // (E_s/E0)(1 − cos ω) = 1 at E_s = 255.5, ω = π
        assert!(matches!(incident_energy(255.5, PI), Err(Error::NoPhysicalEnergy { .. })));
        assert!(matches!(incident_energy(400.0, PI), Err(Error::NoPhysicalEnergy { .. })));
        let e = incident_energy(83.634, PI / 2.0).unwrap();
        assert!((e - 100.0).abs() < 1e-2);
    }

    #[test]
    fn omega_max_examples() {
        assert_eq!(omega_max(150.0, 150.0).unwrap(), 0.0);
        assert!((omega_max(150.0, 100.0).unwrap() - 2.3499).abs() < 1e-3);
        assert_eq!(omega_max(150.0, 60.0).unwrap(), PI);
        assert!(omega_max(150.0, 160.0).is_err());
    }

    #[test]
    fn klein_nishina_examples() {
        assert!((klein_nishina(100.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let thomson = 0.5 * (1.0 + 0.3f64.cos().powi(2));
        assert!((klein_nishina(1e-3, 0.3).unwrap() / thomson - 1.0).abs() < 1e-4);
        assert!((klein_nishina(100.0, PI / 2.0).unwrap() - 0.36085).abs() < 1e-4);
    }

    #[test]
    fn scatter_function_examples() {
        let fit = ScatterFit::default();
        assert_eq!(fit.eval(0.0), 0.0);
        assert!((fit.eval(1.0) - 0.60292).abs() < 1e-3);
        assert!((fit.eval(1e9) - 1.0).abs() < 1e-12);
        assert!((momentum_transfer(12.398, PI) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kramers_is_normalized() {
        let s = Spectrum::default();
        let n = 20000;
        let (a, b) = (10.0, 150.0);
        let h = (b - a) / n as f64;
        let total: f64 = (0..n).map(|k| s.intensity(a + (k as f64 + 0.5) * h, b)).sum::<f64>() * h;
        assert!((total - 1.0).abs() < 1e-6);
        assert_eq!(s.intensity(151.0, 150.0), 0.0);
        assert_eq!(s.intensity(5.0, 150.0), 0.0);
    }

    #[test]
    fn tabulated_spectrum_csv() {
        let s = Spectrum::parse_csv("E_keV,relative_intensity\n20,1\n120,1\n").unwrap();
        assert!((s.intensity(50.0, 150.0) - 0.01).abs() < 1e-12);
        assert_eq!(s.intensity(130.0, 150.0), 0.0);
        assert!(Spectrum::parse_csv("20,1\n10,1\n").is_err());
        assert!(Spectrum::parse_csv("20,1\nabc,1\n").is_err());
    }

    fn flat() -> PhysicsParams {
        PhysicsParams {
            spectrum: Spectrum::Tabulated {
                energies: vec![1.0, 1000.0],
                values: vec![1.0, 1.0],
            },
            e_max: 1000.0,
            ..PhysicsParams::default()
        }
    }

    #[test]
    fn point_weight_composition() {
        // choose the region so that a point sees ω = π/2 with E_λ = 100 keV
        let geom = ScannerGeometry::rtt80();
        let (p, phi) = (0.25, 1.7);
        let mut params = flat();
        let sg0 = ScatterGeometry::new(&geom, p, phi, params.e_max).unwrap();
        let e_s = scattered_energy(100.0, PI / 2.0).unwrap();
        params.e_max = incident_energy(e_s, sg0.omega_arc).unwrap();
        let sg = ScatterGeometry::new(&geom, p, phi, params.e_max).unwrap();
        assert!((sg.e_s - e_s).abs() < 1e-9);
        // points with a right angle at u lie on the circle with diameter from source to detector
        let d = sg.detector;
        let mid = d * 0.5;
        let rad = 0.5 * d.norm();
        let u = (0..3600)
            .map(|k| mid + Point2::unit(k as f64 * PI / 1800.0) * rad)
            .find(|u| sg.in_region(&geom, *u))
            .expect("a right-angle point inside the region");
        let w = point_weight(u, &geom, p, phi, &params, &AttenuationModel::None).unwrap();
        let n = (d - geom.ring_center()) * (1.0 / geom.ring_radius());
        let r = d - u;
        let solid = params.detector_area / (4.0 * PI) * r.dot(n) / r.norm().powi(3);
        let i0 = params.spectrum.intensity(100.0, params.e_max);
        let want = i0 * 0.36085 * scatter_function(100.0, PI / 2.0) * solid;
        assert!((w / want - 1.0).abs() < 1e-3, "{w} vs {want}");
    }

    fn inside(geom: &ScannerGeometry, sg: &ScatterGeometry) -> Point2 {
        let (x0, x1, y0, y1) = sg.bbox(geom);
        let mid = Point2::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        if sg.in_region(geom, mid) {
            return mid;
        }
        (1..64)
            .flat_map(|j| (1..64).map(move |i| (i, j)))
            .map(|(i, j)| Point2::new(x0 + (x1 - x0) * i as f64 / 64.0, y0 + (y1 - y0) * j as f64 / 64.0))
            .find(|u| sg.in_region(geom, *u))
            .unwrap()
    }

    #[test]
    fn orthogonal_normal_gives_zero_and_area_scales() {
        let geom = ScannerGeometry::rtt80();
        let (p, phi) = (0.3, 1.4);
        let sg = ScatterGeometry::new(&geom, p, phi, 150.0).unwrap();
        let u = inside(&geom, &sg);
        let r = sg.detector - u;
        let perp = Point2::new(-r.y, r.x) * (1.0 / r.norm());
        let params = PhysicsParams {
            detector_normal: DetectorNormal::Fixed(perp),
            ..flat()
        };
        assert_eq!(point_weight(u, &geom, p, phi, &params, &AttenuationModel::None).unwrap(), 0.0);
        let one = point_weight(u, &geom, p, phi, &flat(), &AttenuationModel::None).unwrap();
        let two = PhysicsParams {
            detector_area: 2.0,
            ..flat()
        };
        let w2 = point_weight(u, &geom, p, phi, &two, &AttenuationModel::None).unwrap();
        assert!(one > 0.0);
        assert!((w2 / one - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_points_rejected() {
        let geom = ScannerGeometry::rtt80();
        let sg = ScatterGeometry::new(&geom, 0.3, 1.4, 150.0).unwrap();
        let params = PhysicsParams::default();
        let at = |u| point_weight(u, &geom, 0.3, 1.4, &params, &AttenuationModel::None);
        assert!(matches!(at(Point2::ORIGIN), Err(Error::SingularConfiguration(_))));
        assert!(matches!(at(sg.detector), Err(Error::SingularConfiguration(_))));
    }

    #[test]
    fn weight_decays_with_distance() {
        let geom = ScannerGeometry::rtt80();
        let sg = ScatterGeometry::new(&geom, 0.3, 1.4, 1000.0).unwrap();
        let u0 = inside(&geom, &sg);
        let d = sg.detector;
        let params = PhysicsParams {
            min_distance: 0.0,
            detector_normal: DetectorNormal::Fixed((d - u0) * (1.0 / d.distance(u0))),
            ..flat()
        };
        // the region is convex and d lies on its boundary, so the segment stays inside
        let ws: Vec<f64> = [0.05, 0.1, 0.2, 0.4, 0.8]
            .iter()
            .map(|t| weight_at(d + (u0 - d) * *t, &geom, &sg, &params, &AttenuationModel::None).unwrap())
            .collect();
        for w in ws.windows(2) {
            assert!(w[1] < w[0], "{ws:?}");
        }
        assert!(ws[4] < 0.05 * ws[0]);
    }

    #[test]
    fn average_of_constant_is_constant() {
        let geom = ScannerGeometry::rtt80();
        let params = PhysicsParams::default();
        let v = average_of(&geom, 0.3, 1.2, &params, |_| 2.5).unwrap();
        assert_eq!(v, 2.5);
        assert!(matches!(
            average_weight(&geom, 0.9, 3.0 * PI / 2.0, &params, &AttenuationModel::None),
            Err(Error::EmptyRegion { .. })
        ));
    }

    #[test]
    fn average_weight_converges() {
        let geom = ScannerGeometry::rtt80();
        let coarse = average_weight(&geom, 0.25, 1.3, &PhysicsParams::default(), &AttenuationModel::None).unwrap();
        let fine_params = PhysicsParams {
            quadrature_cells: 256,
            ..PhysicsParams::default()
        };
        let fine = average_weight(&geom, 0.25, 1.3, &fine_params, &AttenuationModel::None).unwrap();
        assert!(coarse > 0.0);
        assert!((coarse / fine - 1.0).abs() < 5e-3, "{coarse} {fine}");
    }

    #[test]
    fn small_region_average_is_point_value() {
        // the average of a smooth field over a shrinking region tends to its value there
        let geom = ScannerGeometry::rtt80();
        let sg = ScatterGeometry::new(&geom, 0.95, 1.6, 150.0).unwrap();
        let params = PhysicsParams {
            quadrature_cells: 64,
            ..PhysicsParams::default()
        };
        let (x0, x1, y0, y1) = sg.bbox(&geom);
        let centre = Point2::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let field = |u: Point2| 1.0 + 0.1 * u.x + 0.05 * u.y * u.y;
        let avg = average_of(&geom, 0.95, 1.6, &params, field).unwrap();
        assert!((avg / field(centre) - 1.0).abs() < 0.01);
    }

    #[test]
    fn normalization_round_trip() {
        let geom = ScannerGeometry::rtt80();
        let p = vec![0.15, 0.3, 0.45];
        let phi = vec![1.2, 1.6, 2.0];
        let params = PhysicsParams {
            quadrature_cells: 32,
            slice_thickness: 0.7,
            ..PhysicsParams::default()
        };
        let mut data = DiscSinogram::zeros(p.clone(), phi.clone(), Quantity::DiscIntegral, geom.r).unwrap();
        for (idx, v) in data.data.iter_mut().enumerate() {
            *v = 1.0 + idx as f64;
        }
        let table = WeightTable::compute(&geom, &p, &phi, &params, &AttenuationModel::None).unwrap();
        let meas = weight_measurements(&data, &table, &params).unwrap();
        let (back, table2) = normalize_measurements(&meas, &geom, &params, &AttenuationModel::None).unwrap();
        assert_eq!(table, table2);
        for (a, b) in back.data.iter().zip(&data.data) {
            assert!((a - b).abs() < 1e-12 * b);
        }
        let parsed = WeightTable::from_csv(&table.to_csv()).unwrap();
        assert_eq!(parsed, table);
    }

    #[test]
    fn constant_density_gives_area() {
        // with a constant weight P, intensity s·C·P·A(R) normalizes to C·A(R)
        let geom = ScannerGeometry::rtt80();
        let p = vec![0.2, 0.4];
        let phi = vec![1.5];
        let params = PhysicsParams::default();
        let table = WeightTable {
            p_values: p.clone(),
            phi_values: phi.clone(),
            values: vec![3.0, 3.0],
        };
        let c = 2.0;
        let mut meas = DiscSinogram::zeros(p.clone(), phi.clone(), Quantity::Intensity, geom.r).unwrap();
        for k in 0..2 {
            let area = scatter_region_area(&geom, p[k], phi[0]).unwrap();
            meas.set(k, 0, params.slice_thickness * c * 3.0 * area);
        }
        let out = normalize_with(&meas, &table, &params).unwrap();
        for k in 0..2 {
            let area = scatter_region_area(&geom, p[k], phi[0]).unwrap();
            assert!((out.get(k, 0) - c * area).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_intensity_and_zero_weight() {
        let p = vec![0.2, 0.4];
        let phi = vec![1.5];
        let table = WeightTable {
            p_values: p.clone(),
            phi_values: phi.clone(),
            values: vec![0.0, 1.0],
        };
        let params = PhysicsParams::default();
        let zero = DiscSinogram::zeros(p.clone(), phi.clone(), Quantity::Intensity, 6.75).unwrap();
        assert!(normalize_with(&zero, &table, &params).unwrap().data.iter().all(|v| *v == 0.0));
        let mut bad = zero.clone();
        bad.set(0, 0, 1.0);
        assert!(matches!(normalize_with(&bad, &table, &params), Err(Error::Normalization { .. })));
    }

    #[test]
    fn attenuation_models() {
        let geom = ScannerGeometry::rtt80();
        let (p, phi) = (0.3, 1.4);
        let params = PhysicsParams::default();
        let u = inside(&geom, &ScatterGeometry::new(&geom, p, phi, params.e_max).unwrap());
        let base = point_weight(u, &geom, p, phi, &params, &AttenuationModel::None).unwrap();
        let half = AttenuationModel::StraightThrough {
            angles: vec![0.0, PI],
            ratios: vec![0.5, 0.5],
        };
        let w = point_weight(u, &geom, p, phi, &params, &half).unwrap();
        assert!((w / base - 0.5).abs() < 1e-12);
        let mu = ImageGrid::from_values(
            64,
            64,
            crate::image::Extent::new(-8.0, 8.0, -1.0, 8.0).unwrap(),
            vec![0.1; 64 * 64],
        )
        .unwrap();
        let sg = ScatterGeometry::new(&geom, p, phi, params.e_max).unwrap();
        let path = u.norm() + u.distance(sg.detector);
        let w = point_weight(u, &geom, p, phi, &params, &AttenuationModel::KnownMu(mu)).unwrap();
        assert!((w / base - (-0.1 * path).exp()).abs() < 1e-2);
        let bad = AttenuationModel::StraightThrough {
            angles: vec![0.0],
            ratios: vec![1.5],
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn half_plane_entry() {
        let geom = ScannerGeometry::rtt80();
        let params = PhysicsParams {
            quadrature_cells: 32,
            ..PhysicsParams::default()
        };
        let sg = ScatterGeometry::new(&geom, 0.0, 0.2, params.e_max).unwrap();
        assert!(sg.disc.is_none());
        // the boundary is a straight line, so E_s = E_max and every interior
        // point would need a harder photon
        assert_eq!(sg.e_s, params.e_max);
        assert_eq!(average_weight(&geom, 0.0, 0.2, &params, &AttenuationModel::None).unwrap(), 0.0);
    }
}
