//! Test densities built from uniform discs, with exact disc and half-plane
//! integrals.
//!
//! A component with a positive `edge` is radially smoothed: its profile is
//! `density * S((R - rho) / edge)` where `S` is the integral of the compact
//! kernel `k(t) = 35/32 (1 - t^2)^3`. Writing the profile as a superposition
//! of sharp discs of radius `R + edge * s` weighted by `k(s)` keeps every
//! integral a one-dimensional quadrature over lens areas.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{half_plane_area, lens_area_unchecked, Disc, Point2, ScannerGeometry};
use crate::image::{Extent, ImageGrid};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub center: Point2,
    pub radius: f64,
    pub density: f64,
    /// Half-width of the smoothed rim; 0 for a sharp edge.
    pub edge: f64,
}

impl Component {
    pub fn sharp(center: Point2, radius: f64, density: f64) -> Self {
        Component {
            center,
            radius,
            density,
            edge: 0.0,
        }
    }

    pub fn outer_radius(&self) -> f64 {
        self.radius + self.edge
    }

    pub fn value_at(&self, q: Point2) -> f64 {
        let rho = q.distance(self.center);
        if self.edge == 0.0 {
            if rho < self.radius {
                self.density
            } else {
                0.0
            }
        } else {
            self.density * kernel_cdf((self.radius - rho) / self.edge)
        }
    }

    pub fn mass(&self) -> f64 {
        // the kernel's second moment is 1/9
        self.density * PI * (self.radius * self.radius + self.edge * self.edge / 9.0)
    }

    /// `density * ∫ k(s) area(R + edge s) ds`, where `area(rho)` is the
    /// measure of the target set inside the disc of radius `rho` about the
    /// center and `kinks` lists the radii at which `area` is not smooth.
    fn smoothed<F: Fn(f64) -> f64>(&self, area: F, kinks: &[f64]) -> f64 {
        if self.edge == 0.0 {
            return self.density * area(self.radius);
        }
        let mut cuts = vec![-1.0, 1.0];
        for &k in kinks {
            let s = (k - self.radius) / self.edge;
            if s > -1.0 && s < 1.0 {
                cuts.push(s);
            }
        }
        cuts.sort_by(f64::total_cmp);
        let rule = gauss_legendre_24();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for &(x, wt) in rule {
                let s = mid + half * x;
                total += wt * half * kernel(s) * area(self.radius + self.edge * s);
            }
        }
        self.density * total
    }

    pub fn disc_integral(&self, disc: &Disc) -> f64 {
        let d = self.center.distance(disc.center);
        let kinks = [d + disc.radius, (d - disc.radius).abs()];
        self.smoothed(
            |rho| lens_area_unchecked(self.center, rho, disc.center, disc.radius),
            &kinks,
        )
    }

    /// Integral over `{x : x·normal > offset}`.
    pub fn half_plane_integral(&self, normal: Point2, offset: f64) -> f64 {
        let t = (self.center.dot(normal) - offset).abs();
        self.smoothed(
            |rho| {
                let c = Disc {
                    center: self.center,
                    radius: rho,
                };
                half_plane_area(&c, normal, offset)
            },
            &[t],
        )
    }

    pub fn rotated_about(&self, pivot: Point2, angle: f64) -> Component {
        Component {
            center: self.center.rotate_about(pivot, angle),
            ..*self
        }
    }
}

pub(crate) fn kernel(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        let u = 1.0 - t * t;
        35.0 / 32.0 * u * u * u
    }
}

/// Integral of [`kernel`] from -1 to `t`.
pub(crate) fn kernel_cdf(t: f64) -> f64 {
    if t <= -1.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let t2 = t * t;
        0.5 + 35.0 / 32.0 * t * (1.0 - t2 + t2 * t2 * (3.0 / 5.0 - t2 / 7.0))
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

fn gauss_legendre_24() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(24))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PhantomSpec {
    pub components: Vec<Component>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhantomKind {
    WaterBottle,
    HollowTube,
    Custom(Vec<Component>),
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "water_bottle" => Ok(PhantomKind::WaterBottle),
            "hollow_tube" => Ok(PhantomKind::HollowTube),
            other => Err(Error::parse("phantom", format!("unknown kind '{other}'"))),
        }
    }
}

/// Overrides for the built-in phantoms. Unset fields take geometry-derived defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomParams {
    pub center: Option<Point2>,
    pub radius: Option<f64>,
    pub inner_radius: Option<f64>,
    pub density: f64,
    pub edge: f64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        PhantomParams {
            center: None,
            radius: None,
            inner_radius: None,
            density: 1.0,
            edge: 0.0,
        }
    }
}

pub fn make_phantom(kind: &PhantomKind, geom: &ScannerGeometry, params: &PhantomParams) -> Result<PhantomSpec> {
    let center = params.center.unwrap_or_else(|| geom.ring_center());
    let outer = params.radius.unwrap_or(0.25 * (geom.r - 1.0));
    let components = match kind {
        PhantomKind::WaterBottle => vec![Component {
            center,
            radius: outer,
            density: params.density,
            edge: params.edge,
        }],
        PhantomKind::HollowTube => {
            let inner = params.inner_radius.unwrap_or(0.125 * (geom.r - 1.0));
            if !(inner < outer) {
                return Err(Error::InvalidPhantom(format!(
                    "inner radius {inner} must be below outer radius {outer}"
                )));
            }
            vec![
                Component {
                    center,
                    radius: outer,
                    density: params.density,
                    edge: params.edge,
                },
                Component {
                    center,
                    radius: inner,
                    density: -params.density,
                    edge: params.edge,
                },
            ]
        }
        PhantomKind::Custom(c) => c.clone(),
    };
    let spec = PhantomSpec { components };
    spec.validate(geom)?;
    Ok(spec)
}

impl PhantomSpec {
    pub fn new(components: Vec<Component>) -> Self {
        PhantomSpec { components }
    }

    /// Every component must sit inside the detector ring and keep unit clearance from the source.
    pub fn validate(&self, geom: &ScannerGeometry) -> Result<()> {
        let ring = geom.ring();
        for (k, c) in self.components.iter().enumerate() {
            if !(c.radius > 0.0) || !(c.edge >= 0.0) || !c.density.is_finite() || !c.center.is_finite() {
                return Err(Error::InvalidPhantom(format!("component {k} has invalid parameters")));
            }
            if c.edge >= c.radius {
                return Err(Error::InvalidPhantom(format!(
                    "component {k}: edge {} must be below radius {}",
                    c.edge, c.radius
                )));
            }
            let reach = c.outer_radius();
            if c.center.distance(ring.center) + reach > ring.radius + 1e-12 {
                return Err(Error::InvalidPhantom(format!("component {k} leaves the detector ring")));
            }
            if c.center.norm() - reach < 1.0 - 1e-12 {
                return Err(Error::InvalidPhantom(format!(
                    "component {k} comes within unit distance of the source"
                )));
            }
        }
        Ok(())
    }

    pub fn density_at(&self, q: Point2) -> f64 {
        self.components.iter().map(|c| c.value_at(q)).sum()
    }

    /// `f~(x) = |x|^-4 f(x / |x|^2)`.
    pub fn inverted_density_at(&self, x: Point2) -> f64 {
        let n2 = x.norm_sq();
        if n2 == 0.0 {
            return 0.0;
        }
        self.density_at(x * (1.0 / n2)) / (n2 * n2)
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(Component::mass).sum()
    }

    pub fn rotated_about(&self, pivot: Point2, angle: f64) -> PhantomSpec {
        PhantomSpec {
            components: self.components.iter().map(|c| c.rotated_about(pivot, angle)).collect(),
        }
    }

    /// Whether `q` lies in the closed support of some component.
    pub fn in_support(&self, q: Point2) -> bool {
        self.density_at(q) != 0.0
    }

    /// Integral over the disc through the source with sinogram coordinate `p`.
    pub fn analytic_disc_integral(&self, p: f64, phi: f64) -> Result<f64> {
        let disc = Disc::through_origin(p, phi)?;
        Ok(self.disc_integral(&disc))
    }

    pub fn disc_integral(&self, disc: &Disc) -> f64 {
        self.components.iter().map(|c| c.disc_integral(disc)).sum()
    }

    /// Integral over the open half-plane `{x : x·Φ > 0}`, the limit of the
    /// disc integral as `p → 0+`.
    pub fn half_plane_integral(&self, phi: f64) -> f64 {
        let n = Point2::unit(phi);
        self.components.iter().map(|c| c.half_plane_integral(n, 0.0)).sum()
    }

    pub fn rasterize(&self, width: usize, height: usize, extent: Extent) -> Result<ImageGrid> {
        let mut img = ImageGrid::zeros(width, height, extent)?;
        let shape = img.clone();
        par::for_each_row(&mut img.values, width, |j, row| {
            let y = shape.y_center(j);
            for (i, v) in row.iter_mut().enumerate() {
                *v = self.density_at(Point2::new(shape.x_center(i), y));
            }
        });
        Ok(img)
    }

    /// One line per component: `disc cx cy radius density edge`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.components {
            let _ = writeln!(
                s,
                "disc {:?} {:?} {:?} {:?} {:?}",
                c.center.x, c.center.y, c.radius, c.density, c.edge
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut components = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let field = format!("phantom line {}", lineno + 1);
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts[0] != "disc" || !(parts.len() == 5 || parts.len() == 6) {
                return Err(Error::parse(field, "expected 'disc cx cy radius density [edge]'"));
            }
            let mut nums = [0.0; 5];
            for (k, tok) in parts[1..].iter().enumerate() {
                nums[k] = tok
                    .parse()
                    .map_err(|_| Error::parse(field.clone(), format!("bad number '{tok}'")))?;
            }
            components.push(Component {
                center: Point2::new(nums[0], nums[1]),
                radius: nums[2],
                density: nums[3],
                edge: nums[4],
            });
        }
        Ok(PhantomSpec { components })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::lens_area;
    use std::f64::consts::FRAC_PI_2;

    fn geom() -> ScannerGeometry {
        ScannerGeometry::with_uniform_detectors(6.75, 8, 1, 0.375).unwrap()
    }

    fn bottle(edge: f64) -> PhantomSpec {
        let params = PhantomParams {
            edge,
            ..Default::default()
        };
        make_phantom(&PhantomKind::WaterBottle, &geom(), &params).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(24);
        let w: f64 = rule.iter().map(|r| r.1).sum();
        assert!((w - 2.0).abs() < 1e-14);
        let x46: f64 = rule.iter().map(|&(x, w)| w * x.powi(46)).sum();
        assert!((x46 - 2.0 / 47.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_cdf_matches_quadrature() {
        let rule = gauss_legendre(24);
        for &t in &[-0.7, -0.1, 0.0, 0.3, 0.9] {
            let half = 0.5 * (t + 1.0);
            let q: f64 = rule.iter().map(|&(x, w)| w * half * kernel(-1.0 + half * (x + 1.0))).sum();
            assert!((q - kernel_cdf(t)).abs() < 1e-14);
        }
        assert_eq!(kernel_cdf(1.0), 1.0);
    }

    #[test]
    fn default_water_bottle() {
        let spec = bottle(0.0);
        assert_eq!(spec.components.len(), 1);
        let c = spec.components[0];
        assert_eq!(c.center, Point2::new(0.0, 3.875));
        assert_eq!(c.radius, 1.4375);
        assert_eq!(c.density, 1.0);
    }

    #[test]
    fn hollow_tube_signs() {
        let spec = make_phantom(&PhantomKind::HollowTube, &geom(), &PhantomParams::default()).unwrap();
        let d: Vec<f64> = spec.components.iter().map(|c| c.density).collect();
        assert_eq!(d, vec![1.0, -1.0]);
        let rc = geom().ring_center();
        assert_eq!(spec.density_at(rc), 0.0);
        assert_eq!(spec.density_at(rc + Point2::new(1.0, 0.0)), 1.0);
        assert_eq!(spec.density_at(rc + Point2::new(2.0, 0.0)), 0.0);
    }

    #[test]
    fn rejects_disc_near_source() {
        let kind = PhantomKind::Custom(vec![Component::sharp(Point2::new(0.0, 1.2), 0.5, 1.0)]);
        assert!(matches!(
            make_phantom(&kind, &geom(), &PhantomParams::default()),
            Err(Error::InvalidPhantom(_))
        ));
        let kind = PhantomKind::Custom(vec![Component::sharp(Point2::new(2.0, 3.875), 1.5, 1.0)]);
        assert!(make_phantom(&kind, &geom(), &PhantomParams::default()).is_err());
    }

    #[test]
    fn analytic_integral_composes_lens_area() {
        let spec = bottle(0.0);
        let got = spec.analytic_disc_integral(0.2, FRAC_PI_2).unwrap();
        let want = lens_area(Point2::new(0.0, 2.5), 2.5, Point2::new(0.0, 3.875), 1.4375).unwrap();
        assert!((got - want).abs() < 1e-14);
        let full = spec.analytic_disc_integral(1.0 / 50.0, FRAC_PI_2).unwrap();
        assert!((full - PI * 1.4375 * 1.4375).abs() < 1e-12);
        assert_eq!(spec.analytic_disc_integral(0.5, -FRAC_PI_2).unwrap(), 0.0);
        assert!(spec.analytic_disc_integral(0.0, 0.0).is_err());
    }

    #[test]
    fn smoothed_mass_matches_raster() {
        let spec = bottle(0.3);
        let img = spec.rasterize(800, 800, Extent::new(-2.0, 2.0, 1.875, 5.875).unwrap()).unwrap();
        let rel = (img.integral() - spec.total_mass()).abs() / spec.total_mass();
        assert!(rel < 1e-5, "{rel}");
        // containing disc sees the full smoothed mass
        let full = spec.analytic_disc_integral(0.01, FRAC_PI_2).unwrap();
        assert!((full - spec.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn smoothed_disc_integral_matches_raster_quadrature() {
        let spec = bottle(0.3);
        let ext = Extent::new(-2.0, 2.0, 1.875, 5.875).unwrap();
        let img = spec.rasterize(1024, 1024, ext).unwrap();
        for &(p, phi) in &[(0.2, FRAC_PI_2), (0.25, 1.9), (0.16, 1.2), (0.3, 1.4)] {
            let disc = Disc::through_origin(p, phi).unwrap();
            let mut q = 0.0;
            for j in 0..img.height {
                for i in 0..img.width {
                    if disc.contains(img.pixel_center(i, j)) {
                        q += img.get(i, j);
                    }
                }
            }
            q *= img.pixel_area();
            let exact = spec.analytic_disc_integral(p, phi).unwrap();
            assert!((q - exact).abs() < 2e-3 * spec.total_mass(), "p={p} phi={phi} q={q} exact={exact}");
        }
    }

    #[test]
    fn half_plane_limit() {
        let spec = bottle(0.2);
        let up = spec.half_plane_integral(FRAC_PI_2);
        assert!((up - spec.total_mass()).abs() < 1e-12);
        assert_eq!(spec.half_plane_integral(-FRAC_PI_2), 0.0);
        // through the center the bottle splits evenly
        let side = spec.half_plane_integral(0.0);
        assert!((side - 0.5 * spec.total_mass()).abs() < 1e-12);
        let tiny_p = spec.analytic_disc_integral(1e-7, 0.3).unwrap();
        assert!((tiny_p - spec.half_plane_integral(0.3)).abs() < 1e-5);
    }

    #[test]
    fn text_round_trip() {
        let spec = make_phantom(&PhantomKind::HollowTube, &geom(), &PhantomParams::default()).unwrap();
        assert_eq!(PhantomSpec::parse(&spec.to_text()).unwrap(), spec);
        assert!(PhantomSpec::parse("disc 1 2 x 1").is_err());
        assert!(PhantomSpec::parse("box 1 2 3 4").is_err());
    }
}
