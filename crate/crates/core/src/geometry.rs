//! Planar geometry of the scanner: discs whose boundary passes through the
//! source (placed at the origin), the detector ring, and circle–circle
//! intersection areas.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    /// Unit vector at polar angle `phi`.
    pub fn unit(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Point2 { x: c, y: s }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Rotation by `angle` (counter-clockwise) about `pivot`.
    pub fn rotate_about(self, pivot: Point2, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        let v = self - pivot;
        pivot + Point2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    /// Mirror image across the line through the origin with direction `dir`.
    pub fn reflect_through_origin_line(self, dir: Point2) -> Point2 {
        let u = dir * (1.0 / dir.norm());
        u * (2.0 * self.dot(u)) - self
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Point2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!("disc radius must be positive, got {radius}")));
        }
        if !center.is_finite() {
            return Err(Error::invalid("disc center must be finite"));
        }
        Ok(Disc { center, radius })
    }

    /// The disc whose boundary passes through the origin, with diameter `1/p`
    /// and center in direction `phi`.
    pub fn through_origin(p: f64, phi: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::invalid(format!("sinogram coordinate p must be positive, got {p}")));
        }
        let radius = 0.5 / p;
        Ok(Disc {
            center: Point2::unit(phi) * radius,
            radius,
        })
    }

    pub fn contains(&self, q: Point2) -> bool {
        (q - self.center).norm_sq() < self.radius * self.radius
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn intersection_area(&self, other: &Disc) -> f64 {
        lens_area_unchecked(self.center, self.radius, other.center, other.radius)
    }

    /// Mirror image across the line through the origin and `through`.
    pub fn reflect_across(&self, through: Point2) -> Disc {
        Disc {
            center: self.center.reflect_through_origin_line(through),
            radius: self.radius,
        }
    }
}

/// Scanner layout in source-local coordinates: the source sits at the origin
/// and the detector ring is the circle through `(0, 1)` and `(0, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScannerGeometry {
    pub r: f64,
    pub detector_angles: Vec<f64>,
    pub n_views: usize,
    pub tunnel_gap: f64,
}

impl ScannerGeometry {
    pub fn new(r: f64, detector_angles: Vec<f64>, n_views: usize, tunnel_gap: f64) -> Result<Self> {
        let g = ScannerGeometry {
            r,
            detector_angles,
            n_views,
            tunnel_gap,
        };
        g.validate()?;
        Ok(g)
    }

    /// Ring parameter `r` with `n_detectors` equally spaced detectors.
    pub fn with_uniform_detectors(r: f64, n_detectors: usize, n_views: usize, tunnel_gap: f64) -> Result<Self> {
        let angles = (0..n_detectors)
            .map(|j| 2.0 * PI * j as f64 / n_detectors as f64)
            .collect();
        Self::new(r, angles, n_views, tunnel_gap)
    }

    /// Relative dimensions of a switched-source airport scanner:
    /// `r = 6.75`, tunnel 0.375 inside the detector ring.
    pub fn rtt80() -> Self {
        Self::with_uniform_detectors(6.75, 720, 360, 0.375).expect("valid built-in geometry")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 1.0) || !self.r.is_finite() {
            return Err(Error::invalid(format!("ring parameter r must exceed 1, got {}", self.r)));
        }
        if self.n_views == 0 {
            return Err(Error::invalid("n_views must be positive"));
        }
        if !(self.tunnel_gap >= 0.0) || self.tunnel_gap >= self.ring_radius() {
            return Err(Error::invalid(format!(
                "tunnel gap must lie in [0, {}), got {}",
                self.ring_radius(),
                self.tunnel_gap
            )));
        }
        for w in self.detector_angles.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid("detector angles must be strictly increasing"));
            }
        }
        if let (Some(&first), Some(&last)) = (self.detector_angles.first(), self.detector_angles.last()) {
            if first < 0.0 || last >= 2.0 * PI {
                return Err(Error::invalid("detector angles must lie in [0, 2pi)"));
            }
        }
        Ok(())
    }

    pub fn ring_center(&self) -> Point2 {
        Point2::new(0.0, 0.5 * (self.r + 1.0))
    }

    pub fn ring_radius(&self) -> f64 {
        0.5 * (self.r - 1.0)
    }

    pub fn ring(&self) -> Disc {
        Disc {
            center: self.ring_center(),
            radius: self.ring_radius(),
        }
    }

    /// Scanning tunnel: the disc concentric with the ring, `tunnel_gap` inside it.
    pub fn tunnel(&self) -> Result<Disc> {
        Disc::new(self.ring_center(), self.ring_radius() - self.tunnel_gap)
    }

    /// Radius of the circular source path about the ring center.
    pub fn source_path_radius(&self) -> f64 {
        0.5 * (self.r + 1.0)
    }

    pub fn detectors(&self) -> Vec<Point2> {
        self.detector_angles
            .iter()
            .map(|&t| detector_position(self, t))
            .collect()
    }
}

/// g(t) = t - sin(t)cos(t); the area of a circular segment of half-angle t is r^2 g(t).
fn segment_factor(t: f64) -> f64 {
    if t < 0.05 {
        let t2 = t * t;
        let t3 = t2 * t;
        t3 * (2.0 / 3.0 - t2 * (2.0 / 15.0 - t2 * (4.0 / 315.0 - t2 * (2.0 / 2835.0))))
    } else {
        t - 0.5 * (2.0 * t).sin()
    }
}

pub(crate) fn lens_area_unchecked(c1: Point2, r1: f64, c2: Point2, r2: f64) -> f64 {
    let d = c1.distance(c2);
    let tol = 1e-12 * r1.max(r2).max(1.0);
    if d >= r1 + r2 - tol {
        return 0.0;
    }
    let rmin = r1.min(r2);
    if d <= (r1 - r2).abs() + tol {
        return PI * rmin * rmin;
    }
    let a1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let a2 = d - a1;
    let prod = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2);
    let h = prod.max(0.0).sqrt() / (2.0 * d);
    let t1 = h.atan2(a1);
    let t2 = h.atan2(a2);
    let area = r1 * r1 * segment_factor(t1) + r2 * r2 * segment_factor(t2);
    area.clamp(0.0, PI * rmin * rmin)
}

/// Area of the intersection of two discs.
pub fn lens_area(c1: Point2, r1: f64, c2: Point2, r2: f64) -> Result<f64> {
    if !(r1 > 0.0) || !(r2 > 0.0) {
        return Err(Error::invalid(format!("radii must be positive, got {r1} and {r2}")));
    }
    Ok(lens_area_unchecked(c1, r1, c2, r2))
}

/// Area of `disc ∩ {x : x·n > offset}` for a unit normal `n`.
pub fn half_plane_area(disc: &Disc, normal: Point2, offset: f64) -> f64 {
    let r = disc.radius;
    // signed distance of the center into the half-plane
    let t = disc.center.dot(normal) - offset;
    if t >= r {
        return PI * r * r;
    }
    if t <= -r {
        return 0.0;
    }
    // segment on the far side of the line, half-angle acos(t/r)
    let h = (r * r - t * t).max(0.0).sqrt();
    let cut = r * r * segment_factor(h.atan2(t));
    PI * r * r - cut
}

/// Point of the detector ring at ring-polar angle `theta`, measured about the ring center.
pub fn detector_position(geom: &ScannerGeometry, theta: f64) -> Point2 {
    let rho = geom.ring_radius();
    let (s, c) = theta.sin_cos();
    Point2::new(rho * c, geom.ring_center().y + rho * s)
}

/// Sinogram coordinate of the disc through the source, pointing along `phi`,
/// whose boundary passes through the detector at ring angle `theta`.
pub fn sample_p(geom: &ScannerGeometry, theta: f64, phi: f64) -> Result<f64> {
    let d = detector_position(geom, theta);
    let along = d.dot(Point2::unit(phi));
    if !(along > 0.0) {
        return Err(Error::NoDisc { x: d.x, y: d.y, phi });
    }
    Ok(along / d.norm_sq())
}

/// Area of the scattering region `D_{1/p,phi} ∩ D_r`.
pub fn scatter_region_area(geom: &ScannerGeometry, p: f64, phi: f64) -> Result<f64> {
    let disc = Disc::through_origin(p, phi)?;
    Ok(disc.intersection_area(&geom.ring()))
}

/// The two crossing points of two circles, if they cross transversally.
pub fn circle_intersections(a: &Disc, b: &Disc) -> Option<(Point2, Point2)> {
    let delta = b.center - a.center;
    let d = delta.norm();
    if !(d > 0.0) || d >= a.radius + b.radius || d <= (a.radius - b.radius).abs() {
        return None;
    }
    let along = (d * d + a.radius * a.radius - b.radius * b.radius) / (2.0 * d);
    let h2 = a.radius * a.radius - along * along;
    if !(h2 > 0.0) {
        return None;
    }
    let h = h2.sqrt();
    let u = delta * (1.0 / d);
    let perp = Point2::new(-u.y, u.x);
    let mid = a.center + u * along;
    Some((mid + perp * h, mid - perp * h))
}

/// A disc through the source together with its mirror images across the two
/// source–detector chords fixed by its crossings with the detector ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToricQuad {
    pub base: Disc,
    pub reflected1: Disc,
    pub reflected2: Disc,
    pub detector1: Point2,
    pub detector2: Point2,
}

impl ToricQuad {
    /// `None` when the base boundary does not cross the ring in two points.
    pub fn new(base: Disc, ring: &Disc) -> Option<Self> {
        let (d1, d2) = circle_intersections(&base, ring)?;
        Some(ToricQuad {
            base,
            reflected1: base.reflect_across(d1),
            reflected2: base.reflect_across(d2),
            detector1: d1,
            detector2: d2,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn geom() -> ScannerGeometry {
        ScannerGeometry::with_uniform_detectors(6.75, 16, 1, 0.375).unwrap()
    }

    #[test]
    fn lens_area_full_and_disjoint() {
        let o = Point2::ORIGIN;
        assert!((lens_area(o, 1.0, o, 1.0).unwrap() - PI).abs() < 1e-15);
        assert_eq!(lens_area(o, 1.0, Point2::new(3.0, 0.0), 1.0).unwrap(), 0.0);
    }

    #[test]
    fn lens_area_unit_offset() {
        // 2 acos(1/2) - sqrt(3)/2
        let expected = 2.0 * 0.5f64.acos() - 3f64.sqrt() / 2.0;
        let got = lens_area(Point2::ORIGIN, 1.0, Point2::new(1.0, 0.0), 1.0).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 1.228370).abs() < 1e-6);
    }

    #[test]
    fn lens_area_rejects_bad_radius() {
        assert!(lens_area(Point2::ORIGIN, 0.0, Point2::ORIGIN, 1.0).is_err());
        assert!(lens_area(Point2::ORIGIN, 1.0, Point2::ORIGIN, -2.0).is_err());
    }

    #[test]
    fn lens_area_tangency_snaps() {
        let o = Point2::ORIGIN;
        assert_eq!(lens_area(o, 1.0, Point2::new(2.0 - 1e-14, 0.0), 1.0).unwrap(), 0.0);
        let inner = lens_area(o, 2.0, Point2::new(1.0 - 1e-14, 0.0), 1.0).unwrap();
        assert!((inner - PI).abs() < 1e-15);
    }

    #[test]
    fn lens_area_large_disc_is_stable() {
        // a huge disc whose boundary is nearly a straight line through the small disc center
        let big_r = 1e4;
        let small = Point2::new(0.0, 0.0);
        let big_c = Point2::new(0.0, big_r);
        let a = lens_area(big_c, big_r, small, 1.0).unwrap();
        // the boundary bulges by x^2/(2R) across the small disc
        let expected = PI / 2.0 - 1.0 / (3.0 * big_r);
        assert!((a - expected).abs() < 1e-7, "{a}");
    }

    #[test]
    fn half_plane_area_matches_segment() {
        let d = Disc::new(Point2::new(0.0, 0.5), 1.0).unwrap();
        let n = Point2::new(0.0, 1.0);
        let a = half_plane_area(&d, n, 0.0);
        // area above y=0 is pi - segment below with half-angle acos(0.5)
        let t = 0.5f64.acos();
        let seg = t - t.sin() * t.cos();
        assert!((a - (PI - seg)).abs() < 1e-14);
        assert_eq!(half_plane_area(&d, n, 2.0), 0.0);
        assert!((half_plane_area(&d, n, -2.0) - PI).abs() < 1e-15);
    }

    #[test]
    fn detector_positions() {
        let g = geom();
        let top = detector_position(&g, FRAC_PI_2);
        assert!((top.x).abs() < 1e-15 && (top.y - 6.75).abs() < 1e-14);
        let bottom = detector_position(&g, -FRAC_PI_2);
        assert!(bottom.x.abs() < 1e-15 && (bottom.y - 1.0).abs() < 1e-14);
        let side = detector_position(&g, 0.0);
        assert!((side.x - 2.875).abs() < 1e-15 && (side.y - 3.875).abs() < 1e-15);
    }

    #[test]
    fn sample_p_values() {
        let g = geom();
        let p = sample_p(&g, FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!((p - 1.0 / 6.75).abs() < 1e-15);
        assert!((sample_p(&g, -FRAC_PI_2, FRAC_PI_2).unwrap() - 1.0).abs() < 1e-15);
        let p = sample_p(&g, 0.0, FRAC_PI_2).unwrap();
        assert!((p - 3.875 / 23.28125).abs() < 1e-15);
        assert!((p - 0.166443).abs() < 1e-6);
    }

    #[test]
    fn sample_p_rejects_detector_behind_source() {
        let g = geom();
        assert!(matches!(
            sample_p(&g, FRAC_PI_2, -FRAC_PI_2),
            Err(Error::NoDisc { .. })
        ));
    }

    #[test]
    fn sampled_disc_passes_through_detector() {
        let g = geom();
        for k in 0..64 {
            let theta = 2.0 * PI * k as f64 / 64.0;
            for m in 0..64 {
                let phi = 2.0 * PI * m as f64 / 64.0 + 0.01;
                let Ok(p) = sample_p(&g, theta, phi) else { continue };
                let disc = Disc::through_origin(p, phi).unwrap();
                let d = detector_position(&g, theta);
                let miss = (d.distance(disc.center) - disc.radius).abs();
                assert!(miss <= 1e-12 * disc.radius, "theta={theta} phi={phi} miss={miss}");
            }
        }
    }

    #[test]
    fn scatter_region_cases() {
        let g = geom();
        let ring = g.ring();
        // a disc of diameter 100 toward the ring swallows it
        let all = scatter_region_area(&g, 0.01, FRAC_PI_2).unwrap();
        assert!((all - ring.area()).abs() < 1e-9);
        assert_eq!(scatter_region_area(&g, 0.2, -FRAC_PI_2).unwrap(), 0.0);
        let mid = scatter_region_area(&g, 0.2, FRAC_PI_2).unwrap();
        let direct = lens_area(Point2::new(0.0, 2.5), 2.5, Point2::new(0.0, 3.875), 2.875).unwrap();
        assert_eq!(mid, direct);
        assert!(scatter_region_area(&g, 0.0, 0.0).is_err());
    }

    #[test]
    fn toric_reflection_is_involution() {
        let g = geom();
        let base = Disc::through_origin(1.0 / 4.0, 1.3).unwrap();
        let quad = ToricQuad::new(base, &g.ring()).expect("crosses ring");
        let back = quad.reflected1.reflect_across(quad.detector1);
        assert!(back.center.distance(base.center) < 1e-14);
        for d in [quad.detector1, quad.detector2] {
            for disc in [quad.base, quad.reflected1.reflect_across(quad.detector1)] {
                assert!((d.distance(disc.center) - disc.radius).abs() < 1e-12);
            }
        }
        // reflected discs still pass through the source and their detector
        assert!((quad.reflected1.center.norm() - quad.reflected1.radius).abs() < 1e-12);
        assert!((quad.detector1.distance(quad.reflected1.center) - quad.reflected1.radius).abs() < 1e-12);
    }

    #[test]
    fn geometry_validation() {
        assert!(ScannerGeometry::new(1.0, vec![], 1, 0.0).is_err());
        assert!(ScannerGeometry::new(3.0, vec![0.2, 0.1], 1, 0.0).is_err());
        assert!(ScannerGeometry::new(3.0, vec![0.1], 0, 0.0).is_err());
        assert!(ScannerGeometry::new(3.0, vec![0.1, 7.0], 1, 0.0).is_err());
        let g = ScannerGeometry::rtt80();
        assert_eq!(g.ring_center(), Point2::new(0.0, 3.875));
        assert_eq!(g.tunnel().unwrap().radius, 2.5);
    }
}
