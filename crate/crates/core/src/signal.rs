//! Multiplicative noise, moving-average smoothing with monotone cubic
//! resampling, and a numerical check of the Fourier-slice relation between
//! the extended disc transform and the inverted density.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Point2, ScannerGeometry};
use crate::par;
use crate::pchip::Pchip;
use crate::phantom::PhantomSpec;
use crate::sinogram::DiscSinogram;
use crate::transform::{default_p_grid, disc_transform, extend_sinogram, uniform_step};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub percent: f64,
    pub seed: u64,
}

/// Multiplies entry `(p_k, phi_j)` by a uniform draw from `[1 - a, 1 + a]`,
/// `a = percent / 100`. Row `j` uses its own ChaCha stream, so every draw is
/// fixed by `(seed, j, k)` whatever the schedule.
pub fn add_noise(s: &DiscSinogram, spec: NoiseSpec) -> Result<DiscSinogram> {
    if !(spec.percent >= 0.0) || !spec.percent.is_finite() {
        return Err(Error::invalid(format!("noise percent must be >= 0, got {}", spec.percent)));
    }
    let mut out = s.clone();
    if spec.percent == 0.0 {
        return Ok(out);
    }
    let a = spec.percent / 100.0;
    par::for_each_row(&mut out.data, s.n_p(), |j, row| {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(j as u64);
        for v in row.iter_mut() {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            *v *= 1.0 + a * (2.0 * u - 1.0);
        }
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Shape {
    #[default]
    Free,
    /// Project the subsample onto non-increasing sequences before interpolating.
    NonIncreasing,
    NonDecreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothSpec {
    pub window: usize,
    pub stride: usize,
    pub shape: Shape,
}

impl SmoothSpec {
    pub fn new(window: usize, stride: usize) -> Self {
        SmoothSpec {
            window,
            stride,
            shape: Shape::Free,
        }
    }

    pub fn with_shape(self, shape: Shape) -> Self {
        SmoothSpec { shape, ..self }
    }

    /// Window and stride used by the command-line tool for a noise level.
    /// Averaging over views carries most of the denoising, so the window stays
    /// narrow: wider windows flatten the steep part of each column.
    pub fn for_noise_percent(percent: f64) -> Self {
        if percent <= 0.0 {
            SmoothSpec::new(1, 1)
        } else {
            SmoothSpec::new(3, 1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window % 2 == 0 {
            return Err(Error::invalid(format!("smoothing window must be odd, got {}", self.window)));
        }
        if self.stride == 0 {
            return Err(Error::invalid("subsample stride must be positive"));
        }
        Ok(())
    }
}

/// Centered moving average; the window shrinks symmetrically near the ends.
pub fn moving_average(ys: &[f64], window: usize) -> Vec<f64> {
    let n = ys.len();
    let half = window / 2;
    (0..n)
        .map(|i| {
            let k = half.min(i).min(n - 1 - i);
            let seg = &ys[i - k..=i + k];
            seg.iter().sum::<f64>() / seg.len() as f64
        })
        .collect()
}

/// Least-squares projection onto non-decreasing sequences (pool adjacent violators).
pub fn isotonic_non_decreasing(ys: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(ys.len());
    for &y in ys {
        let mut cur = (y, 1usize);
        while let Some(&(m, w)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let total = w + cur.1;
            cur = ((m * w as f64 + cur.0 * cur.1 as f64) / total as f64, total);
        }
        blocks.push(cur);
    }
    blocks
        .into_iter()
        .flat_map(|(m, w)| std::iter::repeat(m).take(w))
        .collect()
}

fn subsample_indices(n: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().expect("n > 0") != n - 1 {
        idx.push(n - 1);
    }
    idx
}

/// Moving average, subsample, optional monotone projection, then
/// shape-preserving cubic interpolation at `query_xs`.
pub fn smooth_series(xs: &[f64], ys: &[f64], spec: SmoothSpec, query_xs: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::invalid("x and y must be non-empty and of equal length"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("x values must be strictly ascending"));
    }
    if spec.window > xs.len() {
        return Err(Error::invalid(format!(
            "window {} exceeds series length {}",
            spec.window,
            xs.len()
        )));
    }
    let smooth = moving_average(ys, spec.window);
    let idx = subsample_indices(xs.len(), spec.stride);
    let kx: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
    let mut ky: Vec<f64> = idx.iter().map(|&i| smooth[i]).collect();
    match spec.shape {
        Shape::Free => {}
        Shape::NonDecreasing => ky = isotonic_non_decreasing(&ky),
        Shape::NonIncreasing => {
            let neg: Vec<f64> = ky.iter().map(|v| -v).collect();
            ky = isotonic_non_decreasing(&neg).into_iter().map(|v| -v).collect();
        }
    }
    let f = Pchip::new(&kx, &ky)?;
    Ok(query_xs.iter().map(|&x| f.eval(x)).collect())
}

/// Smooths every angle's p-profile and resamples it on the original p grid.
pub fn smooth_sinogram(s: &DiscSinogram, spec: SmoothSpec) -> Result<DiscSinogram> {
    spec.validate()?;
    let mut out = s.clone();
    let rows = par::try_map_indexed(s.n_phi(), |j| smooth_series(&s.p_values, s.row(j), spec, &s.p_values))?;
    for (j, row) in rows.into_iter().enumerate() {
        let n = s.n_p();
        out.data[j * n..(j + 1) * n].copy_from_slice(&row);
    }
    Ok(out)
}

/// CSV with columns `p,raw,smoothed,exact` for one angle.
pub fn smoothing_diagnostics(p: &[f64], raw: &[f64], smoothed: &[f64], exact: &[f64]) -> String {
    let mut s = String::from("p,raw,smoothed,exact\n");
    for k in 0..p.len() {
        let _ = writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", p[k], raw[k], smoothed[k], exact[k]);
    }
    s
}

/// Resolution of the two quadratures in [`fourier_slice_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceCheckConfig {
    /// Samples of the disc transform on `p ∈ [0, 1]`.
    pub n_p: usize,
    /// Cells per axis of the midpoint rule for the 2-D transform.
    pub n_quad: usize,
}

impl Default for SliceCheckConfig {
    fn default() -> Self {
        SliceCheckConfig { n_p: 401, n_quad: 512 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceReport {
    pub sigmas: Vec<f64>,
    /// `−iσ 𝒟̂(σ, φ)` from the extended sinogram.
    pub lhs: Vec<Complex64>,
    /// `(2π)^{−1/2} ∫ f̃(x) e^{−iσ x·Φ} dx`.
    pub rhs: Vec<Complex64>,
    pub max_relative_error: f64,
}

/// Largest `|σ|` accepted for a p spacing `dp`: a quarter of the Nyquist frequency.
pub fn slice_band_limit(dp: f64) -> f64 {
    0.25 * PI / dp
}

/// Compares the two sides of the Fourier-slice relation at angle `phi`.
///
/// The extended transform is `𝒟 = 𝒟₂ + c·sgn(p)` with `𝒟₂` supported in
/// `[−1, 1]`, so `−iσ𝒟̂ = −iσ𝒟̂₂ − 2c(2π)^{−1/2}`. `𝒟̂₂` is a trapezoid sum
/// on each side of the jump at `p = 0`. The right side is evaluated after
/// the substitution `x = y/|y|²`, which turns it into a smooth integral of
/// `f` itself.
pub fn fourier_slice_check(
    spec: &PhantomSpec,
    geom: &ScannerGeometry,
    phi: f64,
    sigmas: &[f64],
    cfg: SliceCheckConfig,
) -> Result<SliceReport> {
    if cfg.n_p < 3 || cfg.n_quad == 0 {
        return Err(Error::invalid("slice check needs n_p >= 3 and n_quad >= 1"));
    }
    let p = default_p_grid(cfg.n_p);
    let dp = uniform_step(&p)?;
    let limit = slice_band_limit(dp);
    for &sigma in sigmas {
        if !(sigma != 0.0 && sigma.abs() <= limit) {
            return Err(Error::OutOfBand { sigma, limit });
        }
    }
    let phis = [phi.rem_euclid(2.0 * PI), (phi + PI).rem_euclid(2.0 * PI)];
    let phis = if phis[0] < phis[1] { phis } else { [phis[1], phis[0]] };
    let row = if phis[0] == phi.rem_euclid(2.0 * PI) { 0 } else { 1 };
    let ext = extend_sinogram(&disc_transform(spec, &p, &phis, geom)?)?;
    let c = ext.c.as_ref().expect("extended sinogram carries c")[row];
    let col = ext.row(row);
    let zero = cfg.n_p - 1;
    let lhs: Vec<Complex64> = sigmas
        .iter()
        .map(|&sigma| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &pk) in ext.p_values.iter().enumerate() {
                let e = Complex64::from_polar(1.0, -pk * sigma);
                if k == zero {
                    // half weights on the one-sided limits 𝒟(0) ± c
                    acc += e * col[k];
                } else {
                    let sgn = if pk > 0.0 { 1.0 } else { -1.0 };
                    let w = if k == 0 || k == ext.p_values.len() - 1 { 0.5 } else { 1.0 };
                    acc += e * (w * (col[k] - c * sgn));
                }
            }
            let d2_hat = acc * (dp / (2.0 * PI).sqrt());
            Complex64::new(0.0, -sigma) * d2_hat - 2.0 * c / (2.0 * PI).sqrt()
        })
        .collect();
    let rhs = inverted_fourier(spec, phi, sigmas, cfg.n_quad);
    let scale = rhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = (1e-3 * scale).max(f64::MIN_POSITIVE);
    let max_relative_error = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| (a - b).norm() / b.norm().max(floor))
        .fold(0.0, f64::max);
    let max_relative_error = if scale == 0.0 && lhs.iter().all(|z| z.norm() == 0.0) {
        0.0
    } else {
        max_relative_error
    };
    Ok(SliceReport {
        sigmas: sigmas.to_vec(),
        lhs,
        rhs,
        max_relative_error,
    })
}

/// `(2π)^{−1/2} ∫ f(y) exp(−iσ (y·Φ)/|y|²) dy` by the midpoint rule over each
/// component's bounding box.
fn inverted_fourier(spec: &PhantomSpec, phi: f64, sigmas: &[f64], n: usize) -> Vec<Complex64> {
    let dir = Point2::unit(phi);
    let mut out = vec![Complex64::new(0.0, 0.0); sigmas.len()];
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in &spec.components {
        let r = c.outer_radius();
        x0 = x0.min(c.center.x - r);
        x1 = x1.max(c.center.x + r);
        y0 = y0.min(c.center.y - r);
        y1 = y1.max(c.center.y + r);
    }
    if spec.components.is_empty() {
        return out;
    }
    let (hx, hy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    let rows = par::map_indexed(n, |j| {
        let y = y0 + (j as f64 + 0.5) * hy;
        let mut acc = vec![Complex64::new(0.0, 0.0); sigmas.len()];
        for i in 0..n {
            let q = Point2::new(x0 + (i as f64 + 0.5) * hx, y);
            let f = spec.density_at(q);
            if f == 0.0 {
                continue;
            }
            let t = q.dot(dir) / q.norm_sq();
            for (a, &s) in acc.iter_mut().zip(sigmas) {
                *a += Complex64::from_polar(f, -s * t);
            }
        }
        acc
    });
    for row in rows {
        for (o, a) in out.iter_mut().zip(row) {
            *o += a;
        }
    }
    let w = hx * hy / (2.0 * PI).sqrt();
    out.iter().map(|z| z * w).collect()
}
