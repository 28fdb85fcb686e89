//! Filtered backprojection of line-integral data, the map back from the
//! inverted density, and averaging over source positions.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{Point2, ScannerGeometry};
use crate::image::{Extent, ImageGrid};
use crate::par;
use crate::phantom::PhantomSpec;
use crate::signal::{add_noise, smooth_sinogram, NoiseSpec, SmoothSpec};
use crate::sinogram::{DiscSinogram, Quantity};
use crate::transform::{antipodal_indices, derivative_p, disc_transform, inversion_map, uniform_step, DiffScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterKind {
    #[default]
    RamLak,
    RamLakHamming,
}

impl std::str::FromStr for FilterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ramlak" => Ok(FilterKind::RamLak),
            "ramlak_hamming" | "hamming" => Ok(FilterKind::RamLakHamming),
            other => Err(Error::parse("filter", format!("unknown filter '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    /// Fraction of the Nyquist frequency kept, in (0, 1].
    pub cutoff: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            kind: FilterKind::RamLak,
            cutoff: 1.0,
        }
    }
}

impl FilterSpec {
    pub fn ramlak() -> Self {
        Self::default()
    }

    pub fn hamming() -> Self {
        FilterSpec {
            kind: FilterKind::RamLakHamming,
            cutoff: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff <= 1.0) {
            return Err(Error::invalid(format!("filter cutoff must lie in (0, 1], got {}", self.cutoff)));
        }
        Ok(())
    }

    /// Frequency response on an FFT grid of length `len` for sample spacing `dp`,
    /// already scaled by `dp` for the convolution sum.
    pub fn response(&self, len: usize, dp: f64) -> Vec<f64> {
        // spatial Ram-Lak kernel, wrapped onto the circular grid
        let mut kernel = vec![Complex64::new(0.0, 0.0); len];
        kernel[0] = Complex64::new(1.0 / (4.0 * dp * dp), 0.0);
        for k in 1..=len / 2 {
            if k % 2 == 1 {
                let v = -1.0 / ((k * k) as f64 * PI * PI * dp * dp);
                kernel[k] = Complex64::new(v, 0.0);
                kernel[len - k] = Complex64::new(v, 0.0);
            }
        }
        FftPlanner::new().plan_fft_forward(len).process(&mut kernel);
        (0..len)
            .map(|m| {
                let freq = m.min(len - m) as f64 / (len as f64 / 2.0);
                let base = kernel[m].re * dp;
                if freq > self.cutoff {
                    0.0
                } else {
                    match self.kind {
                        FilterKind::RamLak => base,
                        FilterKind::RamLakHamming => base * (0.54 + 0.46 * (PI * freq / self.cutoff).cos()),
                    }
                }
            })
            .collect()
    }
}

/// Default square extent of the inverted-density reconstruction.
pub fn inverted_extent() -> Extent {
    Extent::square(1.05)
}

/// Projections on a uniform p axis starting at `p0`, over angles in `[0, π)`
/// unless the input already covered negative p.
struct Folded {
    p0: f64,
    dp: f64,
    angles: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

/// Mirrors `p ≥ 0` data through `(p, φ) ↦ (−p, φ + π)` onto a symmetric axis.
/// The input axis may start at 0 or at any half-integer multiple of its step;
/// the samples missing between `−p_0` and `p_0` are linearly interpolated.
fn fold(s: &DiscSinogram) -> Result<Folded> {
    let dp = uniform_step(&s.p_values)?;
    let n = s.n_p();
    let first = s.p_values[0];
    if first < 0.0 {
        // negative p present: keep every angle, each line appears twice over [0, 2π)
        return Ok(Folded {
            p0: first,
            dp,
            angles: s.phi_values.clone(),
            rows: (0..s.n_phi()).map(|j| s.row(j).to_vec()).collect(),
        });
    }
    let halves = 2.0 * first / dp;
    if (halves - halves.round()).abs() > 1e-6 {
        return Err(Error::Axis(format!(
            "p axis must start at a multiple of half its step, got {first}"
        )));
    }
    let halves = halves.round() as usize;
    let last = first + (n - 1) as f64 * dp;
    // symmetric grid points s_i = (i − half_width)·dp with an extra 1/2 for odd `halves`
    let shift = if halves % 2 == 1 { 0.5 } else { 0.0 };
    let half_width = ((last / dp) - shift).round() as usize;
    let len = 2 * half_width + if shift == 0.0 { 1 } else { 2 };
    let grid: Vec<f64> = (0..len)
        .map(|i| (i as f64 - half_width as f64 - if shift == 0.0 { 0.0 } else { 0.5 }) * dp)
        .collect();
    let opp = antipodal_indices(&s.phi_values)?;
    let mut angles = Vec::new();
    let mut rows = Vec::new();
    for (j, &phi) in s.phi_values.iter().enumerate() {
        if phi >= PI - 1e-12 {
            continue;
        }
        let (pos, neg) = (s.row(j), s.row(opp[j]));
        let row = grid
            .iter()
            .map(|&q| {
                let a = q.abs();
                if a < first - 1e-9 * dp {
                    let w = (q + first) / (2.0 * first);
                    neg[0] * (1.0 - w) + pos[0] * w
                } else if q.abs() <= 1e-9 * dp {
                    0.5 * (pos[0] + neg[0])
                } else {
                    let k = ((a - first) / dp).round() as usize;
                    if q > 0.0 {
                        pos[k]
                    } else {
                        neg[k]
                    }
                }
            })
            .collect();
        angles.push(phi);
        rows.push(row);
    }
    Ok(Folded {
        p0: grid[0],
        dp,
        angles,
        rows,
    })
}

/// Parallel-beam filtered backprojection onto a `width × height` grid over `extent`.
pub fn fbp(radon: &DiscSinogram, filter: FilterSpec, width: usize, height: usize, extent: Extent) -> Result<ImageGrid> {
    radon.require(&[Quantity::Radon])?;
    filter.validate()?;
    let folded = fold(radon)?;
    let mut img = ImageGrid::zeros(width, height, extent)?;
    let n = folded.rows.first().map_or(0, |r| r.len());
    let len = (2 * n).next_power_of_two();
    let response = filter.response(len, folded.dp);
    let mut planner = FftPlanner::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(len);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(len);
    let filtered: Vec<Vec<f64>> = par::map_indexed(folded.rows.len(), |a| {
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for (b, &v) in buf.iter_mut().zip(&folded.rows[a]) {
            b.re = v;
        }
        fwd.process(&mut buf);
        for (b, &h) in buf.iter_mut().zip(&response) {
            *b *= h;
        }
        inv.process(&mut buf);
        buf[..n].iter().map(|c| c.re / len as f64).collect()
    });
    let weight = PI / folded.angles.len() as f64;
    let dirs: Vec<Point2> = folded.angles.iter().map(|&t| Point2::unit(t)).collect();
    let shape = img.clone();
    par::for_each_row(&mut img.values, width, |j, row| {
        let y = shape.y_center(j);
        for (i, v) in row.iter_mut().enumerate() {
            let x = Point2::new(shape.x_center(i), y);
            let mut acc = 0.0;
            for (d, q) in dirs.iter().zip(&filtered) {
                let t = (x.dot(*d) - folded.p0) / folded.dp;
                if t < 0.0 || t > (n - 1) as f64 {
                    continue;
                }
                let k = (t.floor() as usize).min(n - 2);
                let w = t - k as f64;
                acc += q[k] * (1.0 - w) + q[k + 1] * w;
            }
            *v = acc * weight;
        }
    });
    Ok(img)
}

/// Raster sizes of the two stages of a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReconGrid {
    /// Output grid over the bounding box of the detector ring region.
    pub size: usize,
    /// Intermediate grid for the inverted density over `[−1.05, 1.05]²`.
    pub inverted_size: usize,
}

impl ReconGrid {
    pub fn square(size: usize) -> Self {
        ReconGrid {
            size,
            inverted_size: size,
        }
    }
}

/// Bounding box of the ring region `D_r` in source-local coordinates.
pub fn ring_extent(geom: &ScannerGeometry) -> Extent {
    let half = geom.ring_radius();
    Extent {
        xmin: -half,
        xmax: half,
        ymin: 1.0,
        ymax: geom.r,
    }
}

/// Moves forward differences to the midpoints of their stencils, where they
/// are second-order accurate, and drops the trailing backward differences.
fn centre_differences(radon: &mut DiscSinogram, h: f64) {
    let n = radon.n_p();
    let m = ((h / (radon.p_values[1] - radon.p_values[0])).round() as usize).min(n - 1);
    let keep = n - m;
    radon.p_values.truncate(keep);
    radon.p_values.iter_mut().for_each(|p| *p += 0.5 * h);
    radon.data = (0..radon.n_phi())
        .flat_map(|j| radon.data[j * n..j * n + keep].to_vec())
        .collect();
}

/// Differentiates in p, backprojects to the inverted density, maps back to
/// the density and clears everything outside the ring region.
pub fn reconstruct_view(
    data: &DiscSinogram,
    geom: &ScannerGeometry,
    filter: FilterSpec,
    h: f64,
    grid: ReconGrid,
) -> Result<ImageGrid> {
    reconstruct_view_with(data, geom, filter, h, grid, DiffScheme::Forward)
}

/// [`reconstruct_view`] with a choice of difference scheme.
pub fn reconstruct_view_with(
    data: &DiscSinogram,
    geom: &ScannerGeometry,
    filter: FilterSpec,
    h: f64,
    grid: ReconGrid,
    scheme: DiffScheme,
) -> Result<ImageGrid> {
    data.require(&[Quantity::DiscIntegral])?;
    let mut radon = derivative_p(data, h, scheme)?;
    if scheme == DiffScheme::Forward {
        centre_differences(&mut radon, h);
    }
    let inverted = fbp(&radon, filter, grid.inverted_size, grid.inverted_size, inverted_extent())?;
    let mut f = inversion_map(&inverted, grid.size, grid.size, ring_extent(geom), None)?;
    let ring = geom.ring();
    let shape = f.clone();
    par::for_each_row(&mut f.values, grid.size, |j, row| {
        for (i, v) in row.iter_mut().enumerate() {
            if !ring.contains(shape.pixel_center(i, j)) {
                *v = 0.0;
            }
        }
    });
    Ok(f)
}

/// Everything needed to simulate and reconstruct one source position.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewConfig {
    pub p_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub filter: FilterSpec,
    pub h: f64,
    pub scheme: DiffScheme,
    pub grid: ReconGrid,
    pub noise: Option<NoiseSpec>,
    pub smoothing: Option<SmoothSpec>,
}

impl ViewConfig {
    /// Noise-free Ram-Lak setup on the default uniform grids, `h` equal to the p spacing.
    pub fn uniform(n_p: usize, n_phi: usize, size: usize) -> Self {
        ViewConfig {
            p_values: crate::transform::default_p_grid(n_p),
            phi_values: crate::transform::default_phi_grid(n_phi),
            filter: FilterSpec::ramlak(),
            h: 1.0 / (n_p.max(2) - 1) as f64,
            scheme: DiffScheme::Forward,
            grid: ReconGrid::square(size),
            noise: None,
            smoothing: None,
        }
    }
}

/// Source angle of view `k` out of `n` on the source path.
pub fn view_angle(k: usize, n: usize) -> f64 {
    2.0 * PI * k as f64 / n as f64
}

/// Seed of view `k`, so views carry independent noise.
pub fn view_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Simulated data of one view: the phantom is expressed in the frame of a
/// source rotated by `α` about the ring center.
pub fn simulate_view(spec: &PhantomSpec, geom: &ScannerGeometry, cfg: &ViewConfig, k: usize, n_views: usize) -> Result<DiscSinogram> {
    let alpha = view_angle(k, n_views);
    let local = if alpha == 0.0 {
        spec.clone()
    } else {
        spec.rotated_about(geom.ring_center(), -alpha)
    };
    let mut data = disc_transform(&local, &cfg.p_values, &cfg.phi_values, geom)?;
    if let Some(noise) = cfg.noise {
        data = add_noise(
            &data,
            NoiseSpec {
                seed: view_seed(noise.seed, k),
                ..noise
            },
        )?;
    }
    if let Some(sm) = cfg.smoothing {
        data = smooth_sinogram(&data, sm)?;
    }
    Ok(data)
}

/// Rotates an image by `alpha` about `pivot` with bilinear resampling.
pub fn rotate_image(img: &ImageGrid, pivot: Point2, alpha: f64) -> ImageGrid {
    if alpha == 0.0 {
        return img.clone();
    }
    let mut out = img.blank_like();
    par::for_each_row(&mut out.values, img.width, |j, row| {
        for (i, v) in row.iter_mut().enumerate() {
            let x = img.pixel_center(i, j);
            *v = img.bilinear(x.rotate_about(pivot, -alpha));
        }
    });
    out
}

/// Views reconstructed per batch; bounds memory while keeping the sum order fixed.
const VIEW_BATCH: usize = 16;

/// Mean over `n_views` source positions of the per-view reconstructions,
/// each rotated back into the frame of view 0. Views are summed in index
/// order regardless of how they were scheduled.
pub fn average_views(spec: &PhantomSpec, geom: &ScannerGeometry, n_views: usize, cfg: &ViewConfig) -> Result<ImageGrid> {
    if n_views < 1 {
        return Err(Error::invalid("n_views must be at least 1"));
    }
    let mut sum: Option<ImageGrid> = None;
    for start in (0..n_views).step_by(VIEW_BATCH) {
        let count = VIEW_BATCH.min(n_views - start);
        let batch = par::try_map_indexed(count, |b| {
            let k = start + b;
            let data = simulate_view(spec, geom, cfg, k, n_views)?;
            let local = reconstruct_view_with(&data, geom, cfg.filter, cfg.h, cfg.grid, cfg.scheme)?;
            Ok(rotate_image(&local, geom.ring_center(), view_angle(k, n_views)))
        })?;
        for img in batch {
            match sum.as_mut() {
                None => sum = Some(img),
                Some(acc) => acc.values.iter_mut().zip(&img.values).for_each(|(a, b)| *a += b),
            }
        }
    }
    let mut avg = sum.expect("n_views >= 1");
    let inv = 1.0 / n_views as f64;
    avg.values.iter_mut().for_each(|v| *v *= inv);
    Ok(avg)
}

/// Summary numbers of a reconstruction against its phantom.
pub mod metrics {
    use super::*;

    /// Mean over pixels within `frac` of a component radius from its center.
    pub fn disc_mean(img: &ImageGrid, center: Point2, radius: f64, frac: f64) -> Option<f64> {
        let lim = frac * radius;
        img.mean_where(|q| q.distance(center) < lim)
    }

    /// Mean over the annulus between `inner + t/4` and `outer − t/4`, `t` the wall thickness.
    pub fn wall_mean(img: &ImageGrid, center: Point2, inner: f64, outer: f64) -> Option<f64> {
        let t = outer - inner;
        let (a, b) = (inner + 0.25 * t, outer - 0.25 * t);
        img.mean_where(|q| {
            let d = q.distance(center);
            d > a && d < b
        })
    }

    /// Mean over pixels where the phantom is non-zero.
    pub fn support_mean(img: &ImageGrid, spec: &PhantomSpec) -> Option<f64> {
        img.mean_where(|q| spec.density_at(q) != 0.0)
    }

    /// Mean of `|img − f|` over the support divided by the mean of `|f|` there.
    pub fn support_mad(img: &ImageGrid, spec: &PhantomSpec) -> Option<f64> {
        let mut dev = 0.0;
        let mut mag = 0.0;
        for j in 0..img.height {
            for i in 0..img.width {
                let q = img.pixel_center(i, j);
                let f = spec.density_at(q);
                if f != 0.0 {
                    dev += (img.get(i, j) - f).abs();
                    mag += f.abs();
                }
            }
        }
        (mag > 0.0).then(|| dev / mag)
    }

    /// Mean over pixels with a non-zero value, the default region for Z estimation.
    pub fn nonzero_mean(img: &ImageGrid) -> Option<f64> {
        let vals: Vec<f64> = img.values.iter().cloned().filter(|v| *v != 0.0).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// Energy above half the Nyquist frequency along image rows.
    pub fn high_frequency_power(img: &ImageGrid) -> f64 {
        let n = img.width;
        let fft = FftPlanner::new().plan_fft_forward(n);
        let mut total = 0.0;
        for j in 0..img.height {
            let mut buf: Vec<Complex64> = (0..n).map(|i| Complex64::new(img.get(i, j), 0.0)).collect();
            fft.process(&mut buf);
            for (m, c) in buf.iter().enumerate() {
                if m.min(n - m) * 4 > n {
                    total += c.norm_sqr();
                }
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{make_phantom, Component, PhantomKind, PhantomParams};
    use crate::transform::{default_p_grid, default_phi_grid, radon_transform};

    fn disc_radon(a: f64, n_p: usize, n_phi: usize) -> DiscSinogram {
        let p = default_p_grid(n_p);
        let mut s = DiscSinogram::zeros(p.clone(), default_phi_grid(n_phi), Quantity::Radon, 6.75).unwrap();
        for j in 0..n_phi {
            for k in 0..n_p {
                let v = if p[k] < a { 2.0 * (a * a - p[k] * p[k]).sqrt() } else { 0.0 };
                s.set(k, j, v);
            }
        }
        s
    }

    #[test]
    fn ramlak_response_is_ramp_like() {
        let r = FilterSpec::ramlak().response(256, 0.01);
        // DC is the positive Ram-Lak correction, the top bin is close to the Nyquist ramp 1/(2Δ)
        assert!(r[0] > 0.0 && r[0] < 0.05 * r[128]);
        assert!((r[128] - 1.0 / (2.0 * 0.01)).abs() < 1e-2 * r[128]);
        assert!((r[64] - 0.5 * r[128]).abs() < 0.01 * r[128]);
        let hm = FilterSpec::hamming().response(256, 0.01);
        assert!(hm[128].abs() < 0.09 * r[128]);
        assert!(FilterSpec { kind: FilterKind::RamLak, cutoff: 0.0 }.validate().is_err());
    }

    #[test]
    fn zero_sinogram_zero_image() {
        let s = DiscSinogram::zeros(default_p_grid(20), default_phi_grid(36), Quantity::Radon, 6.75).unwrap();
        let img = fbp(&s, FilterSpec::ramlak(), 32, 32, inverted_extent()).unwrap();
        assert!(img.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrong_quantity_rejected() {
        let s = DiscSinogram::zeros(default_p_grid(20), default_phi_grid(36), Quantity::DiscIntegral, 6.75).unwrap();
        assert!(matches!(
            fbp(&s, FilterSpec::ramlak(), 8, 8, inverted_extent()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn centered_disc_from_chord_data() {
        let a = 0.6;
        let s = disc_radon(a, 256, 720);
        let img = fbp(&s, FilterSpec::ramlak(), 256, 256, inverted_extent()).unwrap();
        let truth = PhantomSpec::new(vec![Component::sharp(Point2::ORIGIN, a, 1.0)])
            .rasterize(256, 256, inverted_extent())
            .unwrap();
        let rel = img.relative_l2(&truth);
        assert!(rel < 0.08, "{rel}");
        let interior = metrics::disc_mean(&img, Point2::ORIGIN, a, 0.75).unwrap();
        assert!((interior - 1.0).abs() < 0.03, "{interior}");
    }

    #[test]
    fn fbp_is_linear() {
        let a = disc_radon(0.4, 64, 72);
        let b = disc_radon(0.7, 64, 72);
        let mut c = a.clone();
        for (x, (u, v)) in c.data.iter_mut().zip(a.data.iter().zip(&b.data)) {
            *x = 2.0 * u - 0.5 * v;
        }
        let fa = fbp(&a, FilterSpec::hamming(), 48, 48, inverted_extent()).unwrap();
        let fb = fbp(&b, FilterSpec::hamming(), 48, 48, inverted_extent()).unwrap();
        let fc = fbp(&c, FilterSpec::hamming(), 48, 48, inverted_extent()).unwrap();
        for k in 0..fc.values.len() {
            let want = 2.0 * fa.values[k] - 0.5 * fb.values[k];
            assert!((fc.values[k] - want).abs() < 1e-9 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn fold_matches_symmetric_axis() {
        // the same data on a symmetric p axis over [0, 2π) reconstructs identically
        let bump = PhantomSpec::new(vec![Component {
            center: Point2::new(0.2, -0.1),
            radius: 0.3,
            density: 1.0,
            edge: 0.15,
        }]);
        let img = bump.rasterize(256, 256, inverted_extent()).unwrap();
        let phi = default_phi_grid(90);
        let half = radon_transform(&img, &default_p_grid(41), &phi, 6.75).unwrap();
        let sym_p: Vec<f64> = (-40..=40).map(|k| k as f64 / 40.0).collect();
        let full = radon_transform(&img, &sym_p, &phi, 6.75).unwrap();
        let a = fbp(&half, FilterSpec::ramlak(), 64, 64, inverted_extent()).unwrap();
        let b = fbp(&full, FilterSpec::ramlak(), 64, 64, inverted_extent()).unwrap();
        let rel = a.relative_l2(&b);
        assert!(rel < 1e-2, "{rel}");
    }

    #[test]
    fn zero_data_reconstructs_to_zero() {
        let g = ScannerGeometry::rtt80();
        let s = DiscSinogram::zeros(default_p_grid(100), default_phi_grid(36), Quantity::DiscIntegral, g.r).unwrap();
        let img = reconstruct_view(&s, &g, FilterSpec::ramlak(), 1.0 / 99.0, ReconGrid::square(32)).unwrap();
        assert!(img.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_view_average_is_reconstruction() {
        let g = ScannerGeometry::rtt80();
        let spec = make_phantom(&PhantomKind::WaterBottle, &g, &PhantomParams::default()).unwrap();
        let cfg = ViewConfig {
            p_values: default_p_grid(50),
            phi_values: default_phi_grid(72),
            filter: FilterSpec::ramlak(),
            h: 1.0 / 49.0,
            scheme: DiffScheme::Forward,
            grid: ReconGrid::square(48),
            noise: None,
            smoothing: None,
        };
        let avg = average_views(&spec, &g, 1, &cfg).unwrap();
        let data = disc_transform(&spec, &cfg.p_values, &cfg.phi_values, &g).unwrap();
        let one = reconstruct_view(&data, &g, cfg.filter, cfg.h, cfg.grid).unwrap();
        assert_eq!(avg, one);
        assert!(average_views(&spec, &g, 0, &cfg).is_err());
    }

    #[test]
    fn rotation_about_pivot() {
        let spec = PhantomSpec::new(vec![Component {
            center: Point2::new(1.0, 0.0),
            radius: 0.3,
            density: 1.0,
            edge: 0.2,
        }]);
        let ext = Extent::square(2.0);
        let img = spec.rasterize(200, 200, ext).unwrap();
        let rot = rotate_image(&img, Point2::ORIGIN, PI / 2.0);
        let want = spec.rotated_about(Point2::ORIGIN, PI / 2.0).rasterize(200, 200, ext).unwrap();
        assert!(rot.relative_l2(&want) < 0.02);
    }

    #[test]
    fn half_step_axis_folds() {
        // data sampled at p = (k + 1/2)Δ reconstructs like data on the integer grid
        let bump = PhantomSpec::new(vec![Component {
            center: Point2::new(-0.1, 0.25),
            radius: 0.3,
            density: 1.0,
            edge: 0.15,
        }]);
        let img = bump.rasterize(256, 256, inverted_extent()).unwrap();
        let phi = default_phi_grid(120);
        let whole = radon_transform(&img, &default_p_grid(61), &phi, 6.75).unwrap();
        let half_p: Vec<f64> = (0..60).map(|k| (k as f64 + 0.5) / 60.0).collect();
        let half = radon_transform(&img, &half_p, &phi, 6.75).unwrap();
        let a = fbp(&whole, FilterSpec::ramlak(), 64, 64, inverted_extent()).unwrap();
        let b = fbp(&half, FilterSpec::ramlak(), 64, 64, inverted_extent()).unwrap();
        assert!(a.relative_l2(&img_at(&bump, 64)) < 0.1);
        assert!(b.relative_l2(&img_at(&bump, 64)) < 0.1);
        let mut odd = half.clone();
        odd.p_values.iter_mut().for_each(|p| *p += 0.3 / 60.0);
        assert!(matches!(fbp(&odd, FilterSpec::ramlak(), 8, 8, inverted_extent()), Err(Error::Axis(_))));
    }

    fn img_at(spec: &PhantomSpec, n: usize) -> ImageGrid {
        spec.rasterize(n, n, inverted_extent()).unwrap()
    }

    #[test]
    fn water_bottle_single_view() {
        let g = ScannerGeometry::rtt80();
        let spec = make_phantom(&PhantomKind::WaterBottle, &g, &PhantomParams::default()).unwrap();
        let img = average_views(&spec, &g, 1, &ViewConfig::uniform(100, 360, 128)).unwrap();
        let c = spec.components[0];
        let interior = metrics::disc_mean(&img, c.center, c.radius, 0.75).unwrap();
        assert!((interior - 1.0).abs() < 0.05, "{interior}");
        // mass is conserved, the deficit of the support mean is edge blur
        assert!((img.integral() / spec.total_mass() - 1.0).abs() < 0.01);
    }

    #[test]
    fn symmetric_phantom_views_agree() {
        // a phantom symmetric about the ring center looks the same from every source
        let g = ScannerGeometry::rtt80();
        let spec = make_phantom(&PhantomKind::HollowTube, &g, &PhantomParams::default()).unwrap();
        let cfg = ViewConfig::uniform(60, 120, 64);
        let first = simulate_view(&spec, &g, &cfg, 0, 1).unwrap();
        let local0 = reconstruct_view(&first, &g, cfg.filter, cfg.h, cfg.grid).unwrap();
        for (k, n) in [(1, 4), (1, 3), (5, 12)] {
            let data = simulate_view(&spec, &g, &cfg, k, n).unwrap();
            for (a, b) in data.data.iter().zip(&first.data) {
                assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
            }
            let local = reconstruct_view(&data, &g, cfg.filter, cfg.h, cfg.grid).unwrap();
            assert!(local.relative_l2(&local0) < 1e-9);
        }
    }

    #[test]
    fn single_view_resolution_is_position_dependent() {
        // the far side of the ring is resolved more coarsely, so a single view is not
        // rotationally symmetric even for a symmetric phantom
        let g = ScannerGeometry::rtt80();
        let params = PhantomParams {
            edge: 0.6,
            ..PhantomParams::default()
        };
        let spec = make_phantom(&PhantomKind::WaterBottle, &g, &params).unwrap();
        let img = average_views(&spec, &g, 1, &ViewConfig::uniform(100, 360, 96)).unwrap();
        let turned = rotate_image(&img, g.ring_center(), PI / 2.0);
        let rel = turned.relative_l2(&img);
        assert!(rel > 0.05 && rel < 0.15, "{rel}");
    }

    #[test]
    fn smoothing_helps_a_noisy_view() {
        let g = ScannerGeometry::rtt80();
        let spec = make_phantom(&PhantomKind::WaterBottle, &g, &PhantomParams::default()).unwrap();
        let truth = spec.rasterize(96, 96, ring_extent(&g)).unwrap();
        let mut cfg = ViewConfig::uniform(100, 360, 96);
        cfg.noise = Some(NoiseSpec { percent: 10.0, seed: 3 });
        let raw = average_views(&spec, &g, 1, &cfg).unwrap().relative_l2(&truth);
        cfg.smoothing = Some(SmoothSpec::for_noise_percent(10.0));
        let smoothed = average_views(&spec, &g, 1, &cfg).unwrap().relative_l2(&truth);
        assert!(smoothed < raw, "{smoothed} vs {raw}");
    }

    #[test]
    fn central_scheme_is_available() {
        let g = ScannerGeometry::rtt80();
        let spec = make_phantom(&PhantomKind::WaterBottle, &g, &PhantomParams::default()).unwrap();
        let mut cfg = ViewConfig::uniform(100, 180, 64);
        cfg.scheme = DiffScheme::Central;
        let img = average_views(&spec, &g, 1, &cfg).unwrap();
        let c = spec.components[0];
        let interior = metrics::disc_mean(&img, c.center, c.radius, 0.75).unwrap();
        assert!((interior - 1.0).abs() < 0.05, "{interior}");
    }
}
