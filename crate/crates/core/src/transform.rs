//! Disc transform, its continuation across `p = 0`, the p-derivative that
//! yields line integrals of the inverted density, a reference Radon
//! transform, the weighted plane inversion, and completion of partial data.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{Disc, Point2, ScannerGeometry};
use crate::image::{Extent, ImageGrid};
use crate::par;
use crate::phantom::PhantomSpec;
use crate::sinogram::{DiscSinogram, Quantity};

/// `n` uniform samples on `[0, 1]`.
pub fn default_p_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

/// `n` uniform angles on `[0, 2π)`.
pub fn default_phi_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

fn check_p(p_values: &[f64]) -> Result<()> {
    match p_values.iter().find(|p| !(**p >= 0.0)) {
        Some(p) => Err(Error::invalid(format!("disc transform needs p >= 0, got {p}"))),
        None => Ok(()),
    }
}

/// Exact disc integrals of a phantom. `p = 0` is read as the half-plane limit.
pub fn disc_transform(spec: &PhantomSpec, p_values: &[f64], phi_values: &[f64], geom: &ScannerGeometry) -> Result<DiscSinogram> {
    check_p(p_values)?;
    let mut s = DiscSinogram::zeros(p_values.to_vec(), phi_values.to_vec(), Quantity::DiscIntegral, geom.r)?;
    let n_p = p_values.len();
    par::for_each_row(&mut s.data, n_p, |j, row| {
        let phi = phi_values[j];
        for (k, v) in row.iter_mut().enumerate() {
            let p = p_values[k];
            *v = if p == 0.0 {
                spec.half_plane_integral(phi)
            } else {
                spec.analytic_disc_integral(p, phi).expect("p checked positive")
            };
        }
    });
    Ok(s)
}

/// Row prefix sums of an image for O(1) interval sums.
struct RowSums<'a> {
    img: &'a ImageGrid,
    prefix: Vec<f64>,
}

impl<'a> RowSums<'a> {
    fn new(img: &'a ImageGrid) -> Self {
        let w = img.width;
        let mut prefix = vec![0.0; (w + 1) * img.height];
        for j in 0..img.height {
            let row = &img.values[j * w..(j + 1) * w];
            let out = &mut prefix[j * (w + 1)..(j + 1) * (w + 1)];
            for i in 0..w {
                out[i + 1] = out[i] + row[i];
            }
        }
        RowSums { img, prefix }
    }

    /// Sum of pixels in row `j` whose centers lie strictly inside `(lo, hi)`.
    fn interval(&self, j: usize, lo: f64, hi: f64) -> f64 {
        let img = self.img;
        let dx = img.dx();
        let a = ((lo - img.extent.xmin) / dx - 0.5).floor() + 1.0;
        let b = ((hi - img.extent.xmin) / dx - 0.5).ceil() - 1.0;
        let a = a.max(0.0);
        let b = b.min(img.width as f64 - 1.0);
        if b < a {
            return 0.0;
        }
        let base = j * (img.width + 1);
        self.prefix[base + b as usize + 1] - self.prefix[base + a as usize]
    }

    fn disc(&self, disc: &Disc) -> f64 {
        let img = self.img;
        let r2 = disc.radius * disc.radius;
        let mut total = 0.0;
        for j in 0..img.height {
            let dy = img.y_center(j) - disc.center.y;
            let w2 = r2 - dy * dy;
            if w2 > 0.0 {
                let w = w2.sqrt();
                total += self.interval(j, disc.center.x - w, disc.center.x + w);
            }
        }
        total * img.pixel_area()
    }

    fn half_plane(&self, phi: f64) -> f64 {
        let img = self.img;
        let n = Point2::unit(phi);
        let mut total = 0.0;
        for j in 0..img.height {
            let y = img.y_center(j);
            if n.x.abs() < 1e-15 {
                if y * n.y > 0.0 {
                    total += self.interval(j, f64::NEG_INFINITY, f64::INFINITY);
                }
                continue;
            }
            let x0 = -y * n.y / n.x;
            total += if n.x > 0.0 {
                self.interval(j, x0, f64::INFINITY)
            } else {
                self.interval(j, f64::NEG_INFINITY, x0)
            };
        }
        total * img.pixel_area()
    }
}

/// Midpoint-rule disc integrals of a raster.
pub fn disc_transform_image(img: &ImageGrid, p_values: &[f64], phi_values: &[f64], geom: &ScannerGeometry) -> Result<DiscSinogram> {
    check_p(p_values)?;
    let mut s = DiscSinogram::zeros(p_values.to_vec(), phi_values.to_vec(), Quantity::DiscIntegral, geom.r)?;
    let sums = RowSums::new(img);
    par::for_each_row(&mut s.data, p_values.len(), |j, row| {
        let phi = phi_values[j];
        for (k, v) in row.iter_mut().enumerate() {
            let p = p_values[k];
            *v = if p == 0.0 {
                sums.half_plane(phi)
            } else {
                sums.disc(&Disc::through_origin(p, phi).expect("p checked positive"))
            };
        }
    });
    Ok(s)
}

fn angle_close(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(2.0 * PI);
    d < 1e-9 || 2.0 * PI - d < 1e-9
}

/// Index of the angle `phi_j + π`, for every `j`.
pub(crate) fn antipodal_indices(phi_values: &[f64]) -> Result<Vec<usize>> {
    phi_values
        .iter()
        .map(|&phi| {
            phi_values
                .iter()
                .position(|&q| angle_close(q, phi + PI))
                .ok_or_else(|| Error::Axis(format!("angle grid lacks the opposite of phi = {phi}")))
        })
        .collect()
}

/// Continues disc integrals to `p < 0` through `(p, φ) ↦ (−p, φ + π)` and
/// adds `c(φ)·sgn(p)`, which removes the jump at `p = 0`.
///
/// The input must hold the half-plane values at `p = 0`, as produced by
/// [`disc_transform`].
pub fn extend_sinogram(s: &DiscSinogram) -> Result<DiscSinogram> {
    s.require(&[Quantity::DiscIntegral])?;
    if s.p_values[0] != 0.0 {
        return Err(Error::Axis("extension needs a sample at p = 0".into()));
    }
    let opp = antipodal_indices(&s.phi_values)?;
    let n = s.n_p();
    let mut p_values: Vec<f64> = s.p_values[1..].iter().rev().map(|p| -p).collect();
    p_values.extend_from_slice(&s.p_values);
    let c: Vec<f64> = (0..s.n_phi())
        .map(|j| 0.5 * (s.get(0, opp[j]) - s.get(0, j)))
        .collect();
    let mut data = Vec::with_capacity(p_values.len() * s.n_phi());
    for j in 0..s.n_phi() {
        for k in (1..n).rev() {
            data.push(s.get(k, opp[j]) - c[j]);
        }
        data.push(0.5 * (s.get(0, j) + s.get(0, opp[j])));
        for k in 1..n {
            data.push(s.get(k, j) + c[j]);
        }
    }
    let out = DiscSinogram {
        p_values,
        phi_values: s.phi_values.clone(),
        data,
        quantity: Quantity::Extended,
        r: s.r,
        c: Some(c),
    };
    out.check_axes()?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiffScheme {
    #[default]
    Forward,
    Central,
}

/// Uniform spacing of an axis, or an error if the axis is not uniform.
pub(crate) fn uniform_step(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::invalid("need at least two p samples"));
    }
    let step = (values[values.len() - 1] - values[0]) / (values.len() - 1) as f64;
    for w in values.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * step {
            return Err(Error::Axis("p axis must be uniform for differencing".into()));
        }
    }
    Ok(step)
}

/// `−∂𝒟/∂p` by finite differences of step `h`; the result samples the Radon
/// transform of the inverted density.
pub fn derivative_p(s: &DiscSinogram, h: f64, scheme: DiffScheme) -> Result<DiscSinogram> {
    s.require(&[Quantity::DiscIntegral, Quantity::Extended])?;
    let n = s.n_p();
    if n < 2 {
        return Err(Error::invalid("derivative needs at least two p samples"));
    }
    let dp = uniform_step(&s.p_values)?;
    let ratio = h / dp;
    let m = ratio.round();
    if !(h > 0.0) || m < 1.0 || (ratio - m).abs() > 1e-6 * ratio {
        return Err(Error::invalid(format!("step h = {h} is not a positive multiple of the p spacing {dp}")));
    }
    let m = m as usize;
    if m >= n {
        return Err(Error::invalid(format!("step h = {h} spans the whole p axis")));
    }
    let mut out = DiscSinogram {
        data: vec![0.0; s.data.len()],
        quantity: Quantity::Radon,
        c: None,
        ..s.clone()
    };
    par::for_each_row(&mut out.data, n, |j, row| {
        let src = s.row(j);
        for (k, v) in row.iter_mut().enumerate() {
            let d = match scheme {
                DiffScheme::Central if k >= m && k + m < n => (src[k + m] - src[k - m]) / (2.0 * h),
                _ if k + m < n => (src[k + m] - src[k]) / h,
                _ => (src[k] - src[k - m]) / h,
            };
            *v = -d;
        }
    });
    Ok(out)
}

/// Line integrals over `{x·Φ = p}` by bilinear sampling at half-pixel steps.
pub fn radon_transform(img: &ImageGrid, p_values: &[f64], phi_values: &[f64], r: f64) -> Result<DiscSinogram> {
    let mut s = DiscSinogram::zeros(p_values.to_vec(), phi_values.to_vec(), Quantity::Radon, r)?;
    let e = img.extent;
    let mid = Point2::new(0.5 * (e.xmin + e.xmax), 0.5 * (e.ymin + e.ymax));
    let reach = 0.5 * e.width().hypot(e.height()) + img.dx().max(img.dy());
    let step = 0.5 * img.dx().min(img.dy());
    par::for_each_row(&mut s.data, p_values.len(), |j, row| {
        let n = Point2::unit(phi_values[j]);
        let t = Point2::new(-n.y, n.x);
        for (k, v) in row.iter_mut().enumerate() {
            let foot = n * p_values[k];
            // parameter range along the line that can meet the grid
            let t0 = (mid - foot).dot(t);
            let lo = ((t0 - reach) / step).floor() as i64;
            let hi = ((t0 + reach) / step).ceil() as i64;
            let mut acc = 0.0;
            for q in lo..=hi {
                acc += img.bilinear(foot + t * (q as f64 * step));
            }
            *v = acc * step;
        }
    });
    Ok(s)
}

/// Resamples `f` to `|x|^-4 f(x / |x|^2)` on a new grid. Pixels closer than
/// `eps0` to the origin are set to zero; `None` uses 10⁻³ of the target extent.
pub fn inversion_map(img: &ImageGrid, width: usize, height: usize, extent: Extent, eps0: Option<f64>) -> Result<ImageGrid> {
    let mut out = ImageGrid::zeros(width, height, extent)?;
    let eps0 = eps0.unwrap_or(1e-3 * extent.width().max(extent.height()));
    let shape = out.clone();
    par::for_each_row(&mut out.values, width, |j, row| {
        for (i, v) in row.iter_mut().enumerate() {
            let x = shape.pixel_center(i, j);
            let n2 = x.norm_sq();
            *v = if n2.sqrt() < eps0 {
                0.0
            } else {
                img.bilinear(x * (1.0 / n2)) / (n2 * n2)
            };
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    /// The scattering disc contains the whole detector ring region.
    Contains,
    Disjoint,
    /// The disc boundary crosses the ring; the value must be measured.
    Required,
}

pub fn coverage(geom: &ScannerGeometry, p: f64, phi: f64) -> Coverage {
    let ring = geom.ring();
    let tol = 1e-12 * geom.r;
    if p == 0.0 {
        let t = ring.center.dot(Point2::unit(phi));
        return if t >= ring.radius - tol {
            Coverage::Contains
        } else if t <= -ring.radius + tol {
            Coverage::Disjoint
        } else {
            Coverage::Required
        };
    }
    let disc = Disc::through_origin(p, phi).expect("p positive");
    let d = disc.center.distance(ring.center);
    if d + ring.radius <= disc.radius + tol {
        Coverage::Contains
    } else if d >= disc.radius + ring.radius - tol {
        Coverage::Disjoint
    } else {
        Coverage::Required
    }
}

/// Fills entries (marked NaN) whose disc either contains the ring region,
/// with the total mass, or misses it, with zero. Missing entries whose disc
/// boundary crosses the ring cannot be recovered.
pub fn complete_dataset(s: &DiscSinogram, geom: &ScannerGeometry) -> Result<DiscSinogram> {
    s.require(&[Quantity::DiscIntegral])?;
    s.check_axes()?;
    check_p(&s.p_values)?;
    let classes: Vec<Vec<Coverage>> = (0..s.n_phi())
        .map(|j| s.p_values.iter().map(|&p| coverage(geom, p, s.phi_values[j])).collect())
        .collect();
    let mut mass = None;
    for j in 0..s.n_phi() {
        for k in 0..s.n_p() {
            let v = s.get(k, j);
            match classes[j][k] {
                Coverage::Required if !v.is_finite() => {
                    return Err(Error::IncompleteData {
                        p: s.p_values[k],
                        phi: s.phi_values[j],
                    })
                }
                Coverage::Contains if v.is_finite() && mass.is_none() => mass = Some(v),
                _ => {}
            }
        }
    }
    if mass.is_none() {
        mass = tangent_disc_value(s, geom);
    }
    let mut out = s.clone();
    for j in 0..s.n_phi() {
        for k in 0..s.n_p() {
            if out.get(k, j).is_finite() {
                continue;
            }
            let fill = match classes[j][k] {
                Coverage::Disjoint => 0.0,
                Coverage::Contains => mass.ok_or(Error::IncompleteData {
                    p: s.p_values[k],
                    phi: s.phi_values[j],
                })?,
                Coverage::Required => unreachable!("checked above"),
            };
            out.set(k, j, fill);
        }
    }
    Ok(out)
}

/// Value of the disc `(1/r, π/2)`, internally tangent to the ring, when it is on the grid.
fn tangent_disc_value(s: &DiscSinogram, geom: &ScannerGeometry) -> Option<f64> {
    let k = s.p_values.iter().position(|&p| (p - 1.0 / geom.r).abs() < 1e-12)?;
    let j = s.phi_values.iter().position(|&phi| angle_close(phi, 0.5 * PI))?;
    let v = s.get(k, j);
    v.is_finite().then_some(v)
}
