//! Electron cross section fit and effective atomic number estimation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// `σ_e(Z) = c_p·Z^(a_p − b_p ln Z) + c0_s + c1_s·(1 − Z^(−e1_s))·Z^e2_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaFit {
    pub energy_kev: f64,
    pub c_p: f64,
    pub a_p: f64,
    pub b_p: f64,
    pub c0_s: f64,
    pub c1_s: f64,
    pub e1_s: f64,
    pub e2_s: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl SigmaFit {
    /// The fit at 100 keV.
    pub fn kev100() -> Self {
        SigmaFit {
            energy_kev: 100.0,
            c_p: 1.51e-6,
            a_p: 4.72,
            b_p: 0.22,
            c0_s: 0.49,
            c1_s: 7.90e-4,
            e1_s: 0.50,
            e2_s: 1.57,
            z_min: 1.0,
            z_max: 86.0,
        }
    }

    /// Checks the range and that σ_e increases strictly on a 0.1 grid.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.energy_kev,
            self.c_p,
            self.a_p,
            self.b_p,
            self.c0_s,
            self.c1_s,
            self.e1_s,
            self.e2_s,
            self.z_min,
            self.z_max,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("fit coefficients must be finite"));
        }
        if !(self.z_min > 0.0 && self.z_max > self.z_min) || !(self.energy_kev > 0.0) {
            return Err(Error::invalid("fit needs 0 < z_min < z_max and a positive energy"));
        }
        let steps = ((self.z_max - self.z_min) / 0.1).floor() as usize;
        let mut grid: Vec<f64> = (0..=steps).map(|k| self.z_min + 0.1 * k as f64).collect();
        if self.z_max - grid[steps] > 1e-9 {
            grid.push(self.z_max);
        }
        if let Some(w) = grid.windows(2).find(|w| !(self.eval(w[1]) > self.eval(w[0]))) {
            return Err(Error::invalid(format!("sigma_e is not increasing near Z = {:.1}", w[1])));
        }
        Ok(())
    }

    fn eval(&self, z: f64) -> f64 {
        self.c_p * z.powf(self.a_p - self.b_p * z.ln())
            + self.c0_s
            + self.c1_s * (1.0 - z.powf(-self.e1_s)) * z.powf(self.e2_s)
    }

    /// σ_e in barns per electron.
    pub fn sigma_e(&self, z: f64) -> Result<f64> {
        if !(z >= self.z_min && z <= self.z_max) {
            return Err(Error::OutOfRange {
                z,
                min: self.z_min,
                max: self.z_max,
            });
        }
        Ok(self.eval(z))
    }

    pub fn mu_from(&self, n_e: f64, z: f64) -> Result<f64> {
        if !(n_e >= 0.0) {
            return Err(Error::invalid(format!("electron density must be non-negative, got {n_e}")));
        }
        Ok(n_e * self.sigma_e(z)?)
    }

    /// Solves `σ_e(Z) = μ/n_e` by bisection to `|ΔZ| ≤ 1e-6`.
    pub fn estimate_z(&self, mu: f64, n_e: f64) -> Result<f64> {
        if !(n_e > 0.0) || !mu.is_finite() {
            return Err(Error::invalid(format!("need n_e > 0 and finite mu, got n_e = {n_e}, mu = {mu}")));
        }
        let ratio = mu / n_e;
        let (lo_v, hi_v) = (self.eval(self.z_min), self.eval(self.z_max));
        if ratio < lo_v {
            return Err(Error::OutOfGamut {
                ratio,
                clamped: self.z_min,
            });
        }
        if ratio > hi_v {
            return Err(Error::OutOfGamut {
                ratio,
                clamped: self.z_max,
            });
        }
        let (mut lo, mut hi) = (self.z_min, self.z_max);
        while hi - lo > 1e-7 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) < ratio {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.pairs() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    fn pairs(&self) -> [(&'static str, f64); 10] {
        [
            ("energy_keV", self.energy_kev),
            ("c_p", self.c_p),
            ("a_p", self.a_p),
            ("b_p", self.b_p),
            ("c0_s", self.c0_s),
            ("c1_s", self.c1_s),
            ("e1_s", self.e1_s),
            ("e2_s", self.e2_s),
            ("z_min", self.z_min),
            ("z_max", self.z_max),
        ]
    }

    /// Parses a `key=value` coefficient file. Every key is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 10] = [None; 10];
        let keys = SigmaFit::kev100().pairs().map(|(k, _)| k);
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("fit", format!("expected key=value, got {line:?}")))?;
            let k = k.trim();
            let idx = keys
                .iter()
                .position(|x| *x == k)
                .ok_or_else(|| Error::parse(k, "unknown key"))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::parse(k, "not a number"))?;
            vals[idx] = Some(v);
        }
        let mut get = keys.iter().zip(vals).map(|(k, v)| v.ok_or_else(|| Error::parse(*k, "missing")));
        let mut next = || get.next().unwrap();
        let fit = SigmaFit {
            energy_kev: next()?,
            c_p: next()?,
            a_p: next()?,
            b_p: next()?,
            c0_s: next()?,
            c1_s: next()?,
            e1_s: next()?,
            e2_s: next()?,
            z_min: next()?,
            z_max: next()?,
        };
        fit.validate()?;
        Ok(fit)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

impl Default for SigmaFit {
    fn default() -> Self {
        Self::kev100()
    }
}

/// σ_e with the 100 keV fit.
pub fn sigma_e(z: f64) -> Result<f64> {
    SigmaFit::kev100().sigma_e(z)
}

pub fn mu_from(n_e: f64, z: f64) -> Result<f64> {
    SigmaFit::kev100().mu_from(n_e, z)
}

pub fn estimate_z(mu: f64, n_e: f64) -> Result<f64> {
    SigmaFit::kev100().estimate_z(mu, n_e)
}

/// Largest atomic number the fit is trusted for at energy `e` (keV), capped at 100.
pub fn z_max(e: f64) -> Result<f64> {
    if !(e > 0.0) {
        return Err(Error::invalid(format!("energy must be positive, got {e}")));
    }
    Ok((86.0 * (e / 100.0).sqrt()).min(100.0))
}
