//! Values sampled on a `(p, phi)` grid, stored one row per angle.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Integrals over discs through the source.
    DiscIntegral,
    /// Disc integrals continued to `p < 0` with the jump at `p = 0` removed.
    Extended,
    /// Line integrals of the inverted density.
    Radon,
    /// Raw scattered intensities before normalization.
    Intensity,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::DiscIntegral => "disc_integral",
            Quantity::Extended => "extended",
            Quantity::Radon => "radon",
            Quantity::Intensity => "intensity",
        }
    }
}

impl std::str::FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disc_integral" => Ok(Quantity::DiscIntegral),
            "extended" => Ok(Quantity::Extended),
            "radon" => Ok(Quantity::Radon),
            "intensity" => Ok(Quantity::Intensity),
            other => Err(Error::parse("quantity", format!("unknown tag '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscSinogram {
    pub p_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    /// Row-major, `data[j * n_p + k]` holds the value at `(p_k, phi_j)`.
    pub data: Vec<f64>,
    pub quantity: Quantity,
    /// Ring parameter of the scanner the data belongs to.
    pub r: f64,
    /// Per-angle jump correction of extended sinograms.
    pub c: Option<Vec<f64>>,
}

fn strictly_ascending(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

impl DiscSinogram {
    pub fn zeros(p_values: Vec<f64>, phi_values: Vec<f64>, quantity: Quantity, r: f64) -> Result<Self> {
        let s = DiscSinogram {
            data: vec![0.0; p_values.len() * phi_values.len()],
            p_values,
            phi_values,
            quantity,
            r,
            c: None,
        };
        s.check_axes()?;
        Ok(s)
    }

    pub fn check_axes(&self) -> Result<()> {
        if self.p_values.is_empty() || self.phi_values.is_empty() {
            return Err(Error::Axis("sinogram axes must be non-empty".into()));
        }
        if !strictly_ascending(&self.p_values) || self.p_values.iter().any(|p| !p.is_finite()) {
            return Err(Error::Axis("p values must be finite and strictly ascending".into()));
        }
        if !strictly_ascending(&self.phi_values) || self.phi_values.iter().any(|p| !p.is_finite()) {
            return Err(Error::Axis("phi values must be finite and strictly ascending".into()));
        }
        if self.data.len() != self.p_values.len() * self.phi_values.len() {
            return Err(Error::Axis("data size does not match axes".into()));
        }
        if let Some(c) = &self.c {
            if c.len() != self.phi_values.len() {
                return Err(Error::Axis("c must have one entry per angle".into()));
            }
        }
        Ok(())
    }

    /// Axis checks plus finiteness of every value.
    pub fn validate(&self) -> Result<()> {
        self.check_axes()?;
        if let Some(k) = self.data.iter().position(|v| !v.is_finite()) {
            let (j, i) = (k / self.n_p(), k % self.n_p());
            return Err(Error::IncompleteData {
                p: self.p_values[i],
                phi: self.phi_values[j],
            });
        }
        Ok(())
    }

    pub fn n_p(&self) -> usize {
        self.p_values.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi_values.len()
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.data[j * self.n_p() + k]
    }

    pub fn set(&mut self, k: usize, j: usize, v: f64) {
        let n = self.n_p();
        self.data[j * n + k] = v;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.n_p();
        &self.data[j * n..(j + 1) * n]
    }

    pub fn require(&self, allowed: &[Quantity]) -> Result<()> {
        if allowed.contains(&self.quantity) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "sinogram quantity '{}' not accepted here",
                self.quantity.as_str()
            )))
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# quantity={}", self.quantity.as_str());
        let _ = writeln!(s, "# r={:.16e}", self.r);
        let _ = writeln!(s, "# p={}", join(&self.p_values));
        if let Some(c) = &self.c {
            let _ = writeln!(s, "# c={}", join(c));
        }
        for (j, phi) in self.phi_values.iter().enumerate() {
            let _ = writeln!(s, "{:.16e},{}", phi, join(self.row(j)));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut quantity = None;
        let mut r = None;
        let mut p_values = None;
        let mut c = None;
        let mut phi_values = Vec::new();
        let mut data = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| Error::parse("sinogram header", format!("line {}: expected key=value", lineno + 1)))?;
                match key.trim() {
                    "quantity" => quantity = Some(value.trim().parse::<Quantity>()?),
                    "r" => r = Some(parse_num("r", value)?),
                    "p" => p_values = Some(parse_list("p", value)?),
                    "c" => c = Some(parse_list("c", value)?),
                    _ => {}
                }
                continue;
            }
            let row = parse_list(&format!("sinogram row {}", lineno + 1), line)?;
            phi_values.push(row[0]);
            data.extend_from_slice(&row[1..]);
            if let Some(p) = &p_values {
                let p: &Vec<f64> = p;
                if row.len() != p.len() + 1 {
                    return Err(Error::parse(
                        format!("sinogram row {}", lineno + 1),
                        format!("expected {} values, got {}", p.len(), row.len() - 1),
                    ));
                }
            } else {
                return Err(Error::parse("p", "data row before '# p=' header"));
            }
        }
        let s = DiscSinogram {
            p_values: p_values.ok_or_else(|| Error::parse("p", "missing '# p=' header"))?,
            phi_values,
            data,
            quantity: quantity.ok_or_else(|| Error::parse("quantity", "missing '# quantity=' header"))?,
            r: r.ok_or_else(|| Error::parse("r", "missing '# r=' header"))?,
            c,
        };
        s.check_axes().map_err(|e| Error::parse("sinogram axes", e.to_string()))?;
        Ok(s)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }
}

fn join(values: &[f64]) -> String {
    let mut s = String::with_capacity(24 * values.len());
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        let _ = write!(s, "{v:.16e}");
    }
    s
}

fn parse_num(field: &str, tok: &str) -> Result<f64> {
    tok.trim()
        .parse()
        .map_err(|_| Error::parse(field, format!("bad number '{}'", tok.trim())))
}

fn parse_list(field: &str, text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|t| parse_num(field, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mut s = DiscSinogram::zeros(vec![0.1, 0.2, 1.0 / 3.0], vec![0.0, 1.0], Quantity::Extended, 6.75).unwrap();
        for (k, v) in s.data.iter_mut().enumerate() {
            *v = (k as f64 + 0.1).sqrt() * std::f64::consts::PI - 1e-300;
        }
        s.c = Some(vec![-0.5, 1.0 / 7.0]);
        let back = DiscSinogram::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
        for (a, b) in back.data.iter().zip(&s.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_errors_name_field() {
        let err = DiscSinogram::from_csv("# quantity=radon\n# r=2\n0,1\n").unwrap_err();
        assert!(err.to_string().contains("p"));
        let err = DiscSinogram::from_csv("# quantity=radon\n# r=2\n# p=0,1\n0,1\n").unwrap_err();
        assert!(err.to_string().contains("row 4"));
        let err = DiscSinogram::from_csv("# quantity=blob\n").unwrap_err();
        assert!(err.to_string().contains("quantity"));
    }

    #[test]
    fn axes_must_ascend() {
        assert!(DiscSinogram::zeros(vec![0.2, 0.1], vec![0.0], Quantity::Radon, 2.0).is_err());
        assert!(DiscSinogram::zeros(vec![0.1], vec![], Quantity::Radon, 2.0).is_err());
    }
}
