//! Checks whether disc integrals over the scanning tunnel coincide with
//! integrals over one of the four toric sections built from the disc and its
//! mirror images across the two source–detector chords.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Disc, Point2, ScannerGeometry, ToricQuad};
use crate::par;

/// Areas for one sampled disc. All areas are restricted to the tunnel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscAreas {
    pub diameter: f64,
    pub phi: f64,
    pub base: f64,
    /// `D ∩ D¹`, `D ∩ D²`, `D ∪ D¹`, `D ∪ D²`.
    pub toric: [f64; 4],
    pub min_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rtt80Report {
    pub n_discs: usize,
    pub n_skipped: usize,
    pub quadrature_cells: usize,
    pub tunnel_area: f64,
    /// Largest `min_i |A(D∩T) − A(Tⁱ∩T)|` over the sample.
    pub max_min_diff: f64,
    /// Diameter and angle of the disc attaining the maximum.
    pub argmax: Option<(f64, f64)>,
    pub rows: Vec<DiscAreas>,
}

impl Rtt80Report {
    pub fn relative(&self) -> f64 {
        self.max_min_diff / self.tunnel_area
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p_diam,phi,area_base,area_t1,area_t2,area_t3,area_t4,min_abs_diff\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.10},{:.10},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.6e}",
                r.diameter, r.phi, r.base, r.toric[0], r.toric[1], r.toric[2], r.toric[3], r.min_abs_diff
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "discs            {}", self.n_discs);
        let _ = writeln!(out, "skipped          {}", self.n_skipped);
        let _ = writeln!(out, "quadrature_cells {}", self.quadrature_cells);
        let _ = writeln!(out, "tunnel_area      {:.12}", self.tunnel_area);
        let _ = writeln!(out, "max_min_diff     {:.6e}", self.max_min_diff);
        let _ = writeln!(out, "relative         {:.6e}", self.relative());
        match self.argmax {
            Some((d, phi)) => {
                let _ = writeln!(out, "argmax           diameter={d:.10} phi={phi:.10}");
            }
            None => {
                let _ = writeln!(out, "argmax           none");
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("rtt80_areas.csv"), self.to_csv())?;
        std::fs::write(dir.join("rtt80_report.txt"), self.to_text())?;
        Ok(())
    }
}

/// Diameter of sample `i` (0-based) out of `n_p`, spanning [1.375, 6.375].
pub fn sample_diameter(i: usize, n_p: usize) -> f64 {
    if n_p == 1 {
        return 1.375;
    }
    1.375 + 5.0 * i as f64 / (n_p - 1) as f64
}

/// Angle of sample `j` (0-based) out of `n_phi`: `2π(j+1)/n_phi`.
pub fn sample_phi(j: usize, n_phi: usize) -> f64 {
    2.0 * PI * (j + 1) as f64 / n_phi as f64
}

/// Midpoint-rule grid over the tunnel bounding box.
struct Grid {
    x0: f64,
    y0: f64,
    step: f64,
    cells: usize,
}

impl Grid {
    fn y(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + 0.5) * self.step
    }

    /// Number of cell centers with `a < x < b`.
    fn count(&self, (a, b): (f64, f64)) -> usize {
        if !(b > a) {
            return 0;
        }
        // centers x_i = x0 + (i + 1/2)·step
        let lo = ((a - self.x0) / self.step - 0.5).floor() as i64 + 1;
        let hi = ((b - self.x0) / self.step - 0.5).ceil() as i64 - 1;
        let lo = lo.max(0);
        let hi = hi.min(self.cells as i64 - 1);
        if hi < lo {
            0
        } else {
            (hi - lo + 1) as usize
        }
    }
}

/// Open x-interval of `disc` on the line at height `y`, empty when it misses.
fn chord(disc: &Disc, y: f64) -> (f64, f64) {
    let dy = y - disc.center.y;
    let h2 = disc.radius * disc.radius - dy * dy;
    if h2 <= 0.0 {
        return (0.0, 0.0);
    }
    let h = h2.sqrt();
    (disc.center.x - h, disc.center.x + h)
}

fn meet(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.max(b.0), a.1.min(b.1))
}

fn areas(quad: &ToricQuad, tunnel: &Disc, grid: &Grid) -> (f64, [f64; 4]) {
    // counts of D∩T, D¹∩T, D²∩T, D∩D¹∩T, D∩D²∩T
    let mut n = [0usize; 5];
    for j in 0..grid.cells {
        let y = grid.y(j);
        let t = chord(tunnel, y);
        if !(t.1 > t.0) {
            continue;
        }
        let d = meet(chord(&quad.base, y), t);
        let d1 = meet(chord(&quad.reflected1, y), t);
        let d2 = meet(chord(&quad.reflected2, y), t);
        n[0] += grid.count(d);
        n[1] += grid.count(d1);
        n[2] += grid.count(d2);
        n[3] += grid.count(meet(d, d1));
        n[4] += grid.count(meet(d, d2));
    }
    let cell = grid.step * grid.step;
    let a = n.map(|c| c as f64 * cell);
    (a[0], [a[3], a[4], a[0] + a[1] - a[3], a[0] + a[2] - a[4]])
}

fn grid_for(tunnel: &Disc, cells: usize) -> Grid {
    Grid {
        x0: tunnel.center.x - tunnel.radius,
        y0: tunnel.center.y - tunnel.radius,
        step: 2.0 * tunnel.radius / cells as f64,
        cells,
    }
}

fn evaluate(ring: &Disc, tunnel: &Disc, grid: &Grid, diameter: f64, phi: f64) -> Result<Option<DiscAreas>> {
    let base = Disc::new(Point2::unit(phi) * (0.5 * diameter), 0.5 * diameter)?;
    Ok(ToricQuad::new(base, ring).map(|quad| {
        let (base, toric) = areas(&quad, tunnel, grid);
        let min_abs_diff = toric.iter().map(|t| (base - t).abs()).fold(f64::INFINITY, f64::min);
        DiscAreas {
            diameter,
            phi,
            base,
            toric,
            min_abs_diff,
        }
    }))
}

/// Areas for a single disc of the given diameter through the source, or
/// `None` when its boundary does not cross the ring twice.
pub fn disc_areas(geom: &ScannerGeometry, diameter: f64, phi: f64, quadrature_cells: usize) -> Result<Option<DiscAreas>> {
    geom.validate()?;
    if quadrature_cells < 1 {
        return Err(Error::invalid("quadrature cells must be positive"));
    }
    let tunnel = geom.tunnel()?;
    evaluate(&geom.ring(), &tunnel, &grid_for(&tunnel, quadrature_cells), diameter, phi)
}

/// Runs the toric-section comparison over `n_p × n_phi` discs through the source.
pub fn validate_rtt80(geom: &ScannerGeometry, n_p: usize, n_phi: usize, quadrature_cells: usize) -> Result<Rtt80Report> {
    geom.validate()?;
    if n_p < 1 || n_phi < 1 || quadrature_cells < 1 {
        return Err(Error::invalid("sample sizes and quadrature cells must be positive"));
    }
    let tunnel = geom.tunnel()?;
    let ring = geom.ring();
    let grid = grid_for(&tunnel, quadrature_cells);
    let results: Vec<Option<DiscAreas>> = par::try_map_indexed(n_p * n_phi, |idx| {
        let (i, j) = (idx / n_phi, idx % n_phi);
        evaluate(&ring, &tunnel, &grid, sample_diameter(i, n_p), sample_phi(j, n_phi))
    })?;
    let n_skipped = results.iter().filter(|r| r.is_none()).count();
    let rows: Vec<DiscAreas> = results.into_iter().flatten().collect();
    let mut max_min_diff = 0.0;
    let mut argmax = None;
    for r in &rows {
        if argmax.is_none() || r.min_abs_diff > max_min_diff {
            max_min_diff = r.min_abs_diff;
            argmax = Some((r.diameter, r.phi));
        }
    }
    Ok(Rtt80Report {
        n_discs: n_p * n_phi,
        n_skipped,
        quadrature_cells,
        tunnel_area: tunnel.area(),
        max_min_diff,
        argmax,
        rows,
    })
}
