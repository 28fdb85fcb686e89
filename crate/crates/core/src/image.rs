//! Rasters over a physical rectangle, with the DTIMG and PGM file formats.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Extent {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let e = Extent { xmin, xmax, ymin, ymax };
        e.validate()?;
        Ok(e)
    }

    pub fn square(half: f64) -> Self {
        Extent {
            xmin: -half,
            xmax: half,
            ymin: -half,
            ymax: half,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.xmin, self.xmax, self.ymin, self.ymax]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.xmax > self.xmin) || !(self.ymax > self.ymin) {
            return Err(Error::invalid(format!("degenerate extent {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }
}

/// Row-major raster; row 0 is the bottom row (smallest y).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub width: usize,
    pub height: usize,
    pub extent: Extent,
    pub values: Vec<f64>,
}

impl ImageGrid {
    pub fn zeros(width: usize, height: usize, extent: Extent) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        extent.validate()?;
        Ok(ImageGrid {
            width,
            height,
            extent,
            values: vec![0.0; width * height],
        })
    }

    pub fn from_values(width: usize, height: usize, extent: Extent, values: Vec<f64>) -> Result<Self> {
        let mut img = Self::zeros(width, height, extent)?;
        if values.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image values must be finite"));
        }
        img.values = values;
        Ok(img)
    }

    /// Same shape and extent, all zero.
    pub fn blank_like(&self) -> Self {
        ImageGrid {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn dx(&self) -> f64 {
        self.extent.width() / self.width as f64
    }

    pub fn dy(&self) -> f64 {
        self.extent.height() / self.height as f64
    }

    pub fn pixel_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn x_center(&self, i: usize) -> f64 {
        self.extent.xmin + (i as f64 + 0.5) * self.dx()
    }

    pub fn y_center(&self, j: usize) -> f64 {
        self.extent.ymin + (j as f64 + 0.5) * self.dy()
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(self.x_center(i), self.y_center(j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.width + i] = v;
    }

    /// Bilinear interpolation between pixel centers; the image is treated as
    /// zero outside its extent.
    pub fn bilinear(&self, q: Point2) -> f64 {
        let fx = (q.x - self.extent.xmin) / self.dx() - 0.5;
        let fy = (q.y - self.extent.ymin) / self.dy() - 0.5;
        if !(fx > -1.0 && fy > -1.0 && fx < self.width as f64 && fy < self.height as f64) {
            return 0.0;
        }
        let i0 = fx.floor();
        let j0 = fy.floor();
        let tx = fx - i0;
        let ty = fy - j0;
        let (i0, j0) = (i0 as isize, j0 as isize);
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= self.width as isize || j >= self.height as isize {
                0.0
            } else {
                self.values[j as usize * self.width + i as usize]
            }
        };
        let bottom = at(i0, j0) * (1.0 - tx) + at(i0 + 1, j0) * tx;
        let top = at(i0, j0 + 1) * (1.0 - tx) + at(i0 + 1, j0 + 1) * tx;
        bottom * (1.0 - ty) + top * ty
    }

    /// Midpoint-rule integral over the whole grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.pixel_area()
    }

    /// Mean over pixels whose center satisfies `mask`; `None` if no pixel does.
    pub fn mean_where<F: Fn(Point2) -> bool>(&self, mask: F) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for j in 0..self.height {
            for i in 0..self.width {
                if mask(self.pixel_center(i, j)) {
                    sum += self.get(i, j);
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    pub fn same_shape(&self, other: &ImageGrid) -> bool {
        self.width == other.width && self.height == other.height && self.extent == other.extent
    }

    /// Relative L2 distance `||self - reference|| / ||reference||`.
    pub fn relative_l2(&self, reference: &ImageGrid) -> f64 {
        let num: f64 = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den: f64 = reference.values.iter().map(|b| b * b).sum();
        (num / den.max(f64::MIN_POSITIVE)).sqrt()
    }

    pub fn to_dtimg_bytes(&self) -> Vec<u8> {
        let e = &self.extent;
        let mut out = format!(
            "DTIMG {} {} {} {} {} {}\n",
            self.width, self.height, e.xmin, e.xmax, e.ymin, e.ymax
        )
        .into_bytes();
        out.reserve(4 * self.values.len());
        for v in &self.values {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    pub fn from_dtimg_bytes(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse("DTIMG header", "missing newline"))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::parse("DTIMG header", "not ASCII"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 7 || fields[0] != "DTIMG" {
            return Err(Error::parse("DTIMG header", format!("expected 7 fields, got '{header}'")));
        }
        let dim = |k: usize, name: &str| -> Result<usize> {
            fields[k].parse().map_err(|_| Error::parse(name, format!("bad value '{}'", fields[k])))
        };
        let num = |k: usize, name: &str| -> Result<f64> {
            fields[k].parse().map_err(|_| Error::parse(name, format!("bad value '{}'", fields[k])))
        };
        let width = dim(1, "width")?;
        let height = dim(2, "height")?;
        let extent = Extent::new(num(3, "xmin")?, num(4, "xmax")?, num(5, "ymin")?, num(6, "ymax")?)
            .map_err(|e| Error::parse("extent", e.to_string()))?;
        let body = &bytes[nl + 1..];
        if width == 0 || height == 0 || body.len() != 4 * width * height {
            return Err(Error::parse(
                "DTIMG body",
                format!("expected {} bytes, got {}", 4 * width * height, body.len()),
            ));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        ImageGrid::from_values(width, height, extent, values).map_err(|e| Error::parse("DTIMG body", e.to_string()))
    }

    pub fn write_dtimg(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_dtimg_bytes())?;
        Ok(())
    }

    pub fn read_dtimg(path: &Path) -> Result<Self> {
        Self::from_dtimg_bytes(&fs::read(path)?)
    }

    /// 8-bit binary PGM, min–max scaled, top row first.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let lo = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        for j in (0..self.height).rev() {
            for i in 0..self.width {
                let v = if span > 0.0 {
                    ((self.get(i, j) - lo) / span * 255.0).round()
                } else {
                    0.0
                };
                out.push(v as u8);
            }
        }
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_pgm_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> ImageGrid {
        let e = Extent::new(0.0, 4.0, 0.0, 2.0).unwrap();
        let vals = (0..8).map(|k| k as f64).collect();
        ImageGrid::from_values(4, 2, e, vals).unwrap()
    }

    #[test]
    fn pixel_centers() {
        let img = ramp();
        assert_eq!(img.pixel_center(0, 0), Point2::new(0.5, 0.5));
        assert_eq!(img.pixel_center(3, 1), Point2::new(3.5, 1.5));
    }

    #[test]
    fn bilinear_hits_centers_and_midpoints() {
        let img = ramp();
        assert_eq!(img.bilinear(Point2::new(1.5, 0.5)), 1.0);
        assert_eq!(img.bilinear(Point2::new(2.0, 1.0)), 0.25 * (1.0 + 2.0 + 5.0 + 6.0));
        assert_eq!(img.bilinear(Point2::new(10.0, 1.0)), 0.0);
        // half a pixel past the edge blends toward zero
        assert_eq!(img.bilinear(Point2::new(0.0, 1.5)), 0.5 * 4.0);
    }

    #[test]
    fn dtimg_round_trip() {
        let img = ramp();
        let back = ImageGrid::from_dtimg_bytes(&img.to_dtimg_bytes()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn dtimg_rejects_bad_header() {
        assert!(ImageGrid::from_dtimg_bytes(b"DTIMG 2 2 0 1 0\n").is_err());
        assert!(ImageGrid::from_dtimg_bytes(b"DTIMG 1 1 0 1 0 1\n\0\0").is_err());
        assert!(ImageGrid::from_dtimg_bytes(b"IMG 1 1 0 1 0 1\n\0\0\0\0").is_err());
    }

    #[test]
    fn pgm_header_and_scaling() {
        let img = ramp();
        let pgm = img.to_pgm_bytes();
        let header = b"P5\n4 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        let body = &pgm[header.len()..];
        // top row (values 4..7) comes first
        assert_eq!(body[0], ((4.0 / 7.0) * 255.0f64).round() as u8);
        assert_eq!(body[4], 0);
        assert_eq!(body[3], 255);
    }
}
