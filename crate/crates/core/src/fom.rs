//! Nonlinear coupling rates from normalized mode volumes.
//!
//! χ⁽²⁾ second-harmonic rates in the classical and quantum quantization
//! conventions (which differ by √2), the 31-tensor variant, and the χ⁽³⁾
//! self-phase-modulation rate with its normalized mode volume.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants; SI by default, replaceable for unit audits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub hbar: f64,
    pub eps0: f64,
    pub c: f64,
}

impl Constants {
    pub const SI: Constants = Constants {
        hbar: 1.054_571_817e-34,
        eps0: 8.854_187_812_8e-12,
        c: 299_792_458.0,
    };

    /// Angular frequency of vacuum wavelength `lambda`.
    pub fn omega(&self, lambda: f64) -> f64 {
        2.0 * PI * self.c / lambda
    }
}

impl Default for Constants {
    fn default() -> Self {
        Constants::SI
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tensor {
    #[serde(rename = "33")]
    T33,
    #[serde(rename = "31", alias = "13")]
    T31,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Energy-normalized classical coupled-mode theory.
    Classical,
    /// Displacement-field quantization.
    Quantum,
}

/// A χ⁽²⁾ platform; `beta_bar` or `v_shg` (or both, consistently) is required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chi2Platform {
    #[serde(default)]
    pub name: String,
    /// Contracted tensor component χ̃ [m/V].
    pub chi2: f64,
    pub tensor: Tensor,
    pub n: f64,
    /// Fundamental vacuum wavelength [m].
    pub lambda1: f64,
    #[serde(default)]
    pub beta_bar: Option<f64>,
    #[serde(default)]
    pub v_shg: Option<f64>,
    #[serde(default)]
    pub source: String,
}

impl Chi2Platform {
    pub fn validate(&self) -> Result<()> {
        if !(self.chi2 > 0.0) {
            return Err(Error::invalid(format!("{}: chi2 must be > 0", self.name)));
        }
        if !(self.n > 1.0) {
            return Err(Error::invalid(format!("{}: n must be > 1", self.name)));
        }
        if !(self.lambda1 > 0.0) {
            return Err(Error::invalid(format!("{}: lambda1 must be > 0", self.name)));
        }
        match (self.beta_bar, self.v_shg) {
            (None, None) => Err(Error::invalid(format!("{}: beta_bar or v_shg is required", self.name))),
            (_, Some(v)) if !(v > 0.0) => Err(Error::invalid(format!("{}: v_shg must be > 0", self.name))),
            (Some(b), Some(v)) if (b * b * v - 1.0).abs() > 1e-12 => {
                Err(Error::invalid(format!("{}: beta_bar² · v_shg = {} ≠ 1", self.name, b * b * v)))
            }
            _ => Ok(()),
        }
    }

    /// Normalized overlap β̄, from V̄_shg = 1/β̄² when not given directly.
    pub fn overlap(&self) -> f64 {
        self.beta_bar.unwrap_or_else(|| 1.0 / self.v_shg.unwrap_or(f64::INFINITY).sqrt())
    }

    /// Normalized SHG mode volume 1/β̄².
    pub fn normalized_volume(&self) -> f64 {
        self.v_shg.unwrap_or_else(|| 1.0 / self.overlap().powi(2))
    }

    /// Physical SHG mode volume V̄ (λ₁/n)³ [m³].
    pub fn volume(&self) -> f64 {
        self.normalized_volume() * (self.lambda1 / self.n).powi(3)
    }
}

/// SHG coupling rate for a given angular frequency and wavelength.
pub fn shg_rate(k: &Constants, omega1: f64, lambda1: f64, chi: f64, beta_bar: f64, convention: Convention) -> f64 {
    let denom = match convention {
        Convention::Classical => 2.0,
        Convention::Quantum => 4.0,
    };
    (k.hbar * omega1.powi(3) / (denom * k.eps0 * lambda1.powi(3))).sqrt() * chi * beta_bar
}

/// SHG rate [1/s] of a 33-tensor platform.
pub fn gamma_nl_shg(p: &Chi2Platform, convention: Convention, k: &Constants) -> Result<f64> {
    p.validate()?;
    if p.tensor != Tensor::T33 {
        return Err(Error::invalid(format!("{}: 31 tensor component needs gamma_nl_z31", p.name)));
    }
    Ok(shg_rate(k, k.omega(p.lambda1), p.lambda1, p.chi2, p.overlap(), convention))
}

/// SHG rate [1/s] of a 31-tensor platform with the two-term overlap β̄₁₃.
pub fn gamma_nl_z31(p: &Chi2Platform, k: &Constants) -> Result<f64> {
    p.validate()?;
    let w = k.omega(p.lambda1);
    Ok(0.5 * (k.hbar * w.powi(3) / (k.eps0 * p.lambda1.powi(3))).sqrt() * p.chi2 * p.overlap())
}

/// A χ⁽³⁾ platform; `v_spm` or the pair `q`, `q_lambda3_over_v` is required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chi3Platform {
    #[serde(default)]
    pub name: String,
    /// χ⁽³⁾ [m²/V²].
    pub chi3: f64,
    pub n: f64,
    /// Vacuum wavelength [m].
    pub lambda: f64,
    /// Normalized SPM mode volume V_spm (n/λ)³.
    #[serde(default)]
    pub v_spm: Option<f64>,
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub q_lambda3_over_v: Option<f64>,
    #[serde(default)]
    pub source: String,
}

impl Chi3Platform {
    pub fn validate(&self) -> Result<()> {
        if !(self.chi3 >= 0.0) || !(self.n > 0.0) || !(self.lambda > 0.0) {
            return Err(Error::invalid(format!("{}: chi3 >= 0, n > 0 and lambda > 0 are required", self.name)));
        }
        self.normalized_volume().map(|_| ())
    }

    /// V̄_spm, directly or as Q n³ / (Qλ³/V).
    pub fn normalized_volume(&self) -> Result<f64> {
        let v = match (self.v_spm, self.q, self.q_lambda3_over_v) {
            (Some(v), _, _) => v,
            (None, Some(q), Some(r)) => q * self.n.powi(3) / r,
            _ => return Err(Error::invalid(format!("{}: v_spm or (q, q_lambda3_over_v) is required", self.name))),
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{}: mode volume must be positive", self.name)));
        }
        Ok(v)
    }

    /// Physical SPM mode volume [m³].
    pub fn volume(&self) -> Result<f64> {
        Ok(self.normalized_volume()? * (self.lambda / self.n).powi(3))
    }
}

/// η of H = ħη(n̂−1)n̂ [rad/s], from the physical mode volume and ε_r = n².
pub fn spm_eta(p: &Chi3Platform, k: &Constants) -> Result<f64> {
    p.validate()?;
    let w = k.omega(p.lambda);
    let eps_r = p.n * p.n;
    Ok(-3.0 * k.hbar * w * w / (4.0 * k.eps0 * eps_r * eps_r) * p.chi3 / p.volume()?)
}

/// χ₃ SPM rate [rad/s], from the normalized mode volume.
pub fn spm_rate(p: &Chi3Platform, k: &Constants) -> Result<f64> {
    p.validate()?;
    let w = k.omega(p.lambda);
    Ok(-3.0 * k.hbar * w * w / (k.eps0 * p.n * p.lambda.powi(3)) * p.chi3 / p.normalized_volume()?)
}

/// Platforms read from JSON.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformTable {
    #[serde(default)]
    pub chi2: Vec<Chi2Platform>,
    #[serde(default)]
    pub chi3: Vec<Chi3Platform>,
}

const BUNDLED: &str = include_str!("../data/materials.json");

impl PlatformTable {
    pub fn bundled() -> Result<Self> {
        Ok(serde_json::from_str(BUNDLED)?)
    }
}

/// One evaluated platform.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub name: String,
    pub kind: &'static str,
    /// Normalized mode volume.
    pub normalized_volume: f64,
    /// Classical-convention (33) or z31 rate; χ₃ for SPM.
    pub rate: f64,
    /// Quantum-convention rate for 33 platforms; η for SPM.
    pub alt_rate: Option<f64>,
}

/// Evaluate every platform of a table.
pub fn rate_table(t: &PlatformTable, k: &Constants) -> Result<Vec<RateRow>> {
    let mut rows = Vec::new();
    for p in &t.chi2 {
        let (kind, rate, alt) = match p.tensor {
            Tensor::T33 => ("shg33", gamma_nl_shg(p, Convention::Classical, k)?, Some(gamma_nl_shg(p, Convention::Quantum, k)?)),
            Tensor::T31 => ("shg31", gamma_nl_z31(p, k)?, None),
        };
        rows.push(RateRow {
            name: p.name.clone(),
            kind,
            normalized_volume: p.normalized_volume(),
            rate,
            alt_rate: alt,
        });
    }
    for p in &t.chi3 {
        rows.push(RateRow {
            name: p.name.clone(),
            kind: "spm",
            normalized_volume: p.normalized_volume()?,
            rate: spm_rate(p, k)?,
            alt_rate: Some(spm_eta(p, k)?),
        });
    }
    Ok(rows)
}
