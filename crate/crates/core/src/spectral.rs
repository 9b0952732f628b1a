//! Model parameters and continuum spectral densities.
//!
//! All densities use a hard cutoff: they vanish for `ω ≤ 0` and `ω > ω_c`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bare physical constants of the qubit, cavity and both baths (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Bare qubit splitting Δ.
    pub delta: f64,
    /// Bare cavity frequency Ω.
    pub omega: f64,
    /// Qubit–cavity coupling g.
    pub g: f64,
    /// Qubit–bath strength α.
    pub alpha: f64,
    /// Cavity–bath strength α_cav.
    pub alpha_cav: f64,
    /// Hard ultraviolet cutoff ω_c.
    pub omega_c: f64,
}

impl ModelParams {
    pub fn new(
        delta: f64,
        omega: f64,
        g: f64,
        alpha: f64,
        alpha_cav: f64,
        omega_c: f64,
    ) -> Result<Self> {
        let p = ModelParams {
            delta,
            omega,
            g,
            alpha,
            alpha_cav,
            omega_c,
        };
        p.validate()?;
        Ok(p)
    }

    /// Uses the default cutoff `ω_c = 10·max(Δ, Ω)`.
    pub fn with_default_cutoff(
        delta: f64,
        omega: f64,
        g: f64,
        alpha: f64,
        alpha_cav: f64,
    ) -> Result<Self> {
        Self::new(
            delta,
            omega,
            g,
            alpha,
            alpha_cav,
            default_cutoff(delta, omega),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("delta", self.delta),
            ("omega", self.omega),
            ("g", self.g),
            ("alpha", self.alpha),
            ("alpha_cav", self.alpha_cav),
            ("omega_c", self.omega_c),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        if self.delta <= 0.0 {
            return Err(Error::invalid("delta", "must be positive"));
        }
        if self.omega <= 0.0 {
            return Err(Error::invalid("omega", "must be positive"));
        }
        if self.omega_c <= self.delta.max(self.omega) {
            return Err(Error::invalid("omega_c", "must exceed max(delta, omega)"));
        }
        for (field, v) in [
            ("g", self.g),
            ("alpha", self.alpha),
            ("alpha_cav", self.alpha_cav),
        ] {
            if v < 0.0 {
                return Err(Error::invalid(field, "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Bare qubit emission rate γ = παΔ.
    pub fn gamma(&self) -> f64 {
        PI * self.alpha * self.delta
    }

    /// Cavity loss rate κ = πα_cavΩ.
    pub fn kappa(&self) -> f64 {
        PI * self.alpha_cav * self.omega
    }

    /// Copy with a different cavity frequency, keeping κ/Ω fixed.
    pub fn with_omega(&self, omega: f64) -> Self {
        ModelParams { omega, ..*self }
    }
}

pub fn default_cutoff(delta: f64, omega: f64) -> f64 {
    10.0 * delta.max(omega)
}

fn in_support(w: f64, p: &ModelParams) -> bool {
    w > 0.0 && w <= p.omega_c
}

/// `J₁(ω) = παω` on `(0, ω_c]`.
pub fn ohmic_j(w: f64, p: &ModelParams) -> f64 {
    if in_support(w, p) {
        PI * p.alpha * w
    } else {
        0.0
    }
}

/// Cavity-peaked density `4g²κΩω / ((Ω²−ω²)² + (κω)²)` on `(0, ω_c]`.
pub fn peaked_j(w: f64, p: &ModelParams) -> f64 {
    if !in_support(w, p) || p.g == 0.0 {
        return 0.0;
    }
    let k = p.kappa();
    let d = p.omega * p.omega - w * w;
    4.0 * p.g * p.g * k * p.omega * w / (d * d + (k * w).powi(2))
}

pub fn combined_j(w: f64, p: &ModelParams) -> f64 {
    ohmic_j(w, p) + peaked_j(w, p)
}

/// Near-resonance Lorentzian `g²κ / ((Ω−ω)² + (κ/2)²)` on `(0, ω_c]`.
pub fn lorentzian_j(w: f64, p: &ModelParams) -> f64 {
    if !in_support(w, p) || p.g == 0.0 {
        return 0.0;
    }
    let k = p.kappa();
    p.g * p.g * k / ((p.omega - w).powi(2) + 0.25 * k * k)
}

/// A spectral density that quadrature routines can integrate.
pub trait SpectralFunction: Sync {
    fn eval(&self, w: f64) -> f64;
    /// Upper end of the support.
    fn cutoff(&self) -> f64;
    /// Interior points where the integrand needs extra resolution.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralKind {
    Ohmic,
    Peaked,
    Combined,
    LorentzianApprox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    pub kind: SpectralKind,
    pub params: ModelParams,
}

impl SpectralDensity {
    pub fn new(kind: SpectralKind, params: ModelParams) -> Self {
        SpectralDensity { kind, params }
    }
}

impl SpectralFunction for SpectralDensity {
    fn eval(&self, w: f64) -> f64 {
        let p = &self.params;
        match self.kind {
            SpectralKind::Ohmic => ohmic_j(w, p),
            SpectralKind::Peaked => peaked_j(w, p),
            SpectralKind::Combined => combined_j(w, p),
            SpectralKind::LorentzianApprox => lorentzian_j(w, p),
        }
    }

    fn cutoff(&self) -> f64 {
        self.params.omega_c
    }

    fn breakpoints(&self) -> Vec<f64> {
        let p = &self.params;
        if self.kind == SpectralKind::Ohmic || p.g == 0.0 {
            return Vec::new();
        }
        let k = p.kappa();
        [p.omega - 5.0 * k, p.omega, p.omega + 5.0 * k]
            .into_iter()
            .filter(|&b| b > 0.0 && b < p.omega_c)
            .collect()
    }
}
