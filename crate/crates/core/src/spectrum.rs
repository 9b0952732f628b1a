//! Emission spectrum of the qubit from the self-energy of the excited state.
//!
//! With the displacement density `ρ(ν) = J(ν)/(4(ν+Δ_r)²)` the kernel is
//! `𝒦(ω) = 𝒦′ − i𝒦″`, `𝒦′ = π(2Δ_r)²ρ(ω)`, `𝒦″ = (2Δ_r)² P∫ρ(ν)/(ν−ω) dν`.
//! Resumming the rank-one polaron correction gives the self-energy
//! `Σ = R − iΓ = −i𝒦 / (1 + i𝒦/(2Δ_r))`.

use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::DiscreteBath;
use crate::csv;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::polaron::PolaronFrame;
use crate::quad::{principal_value, QuadOptions};
use crate::spectral::{ModelParams, SpectralDensity, SpectralFunction, SpectralKind};

/// Exact continuum kernel at `0 < ω < ω_c`.
pub fn kernel_exact<J: SpectralFunction>(
    omega: f64,
    j: &J,
    delta_r: f64,
    opts: &QuadOptions,
) -> Result<Complex64> {
    let wc = j.cutoff();
    let margin = 1e-9 * wc;
    if !(omega > margin && omega < wc - margin) {
        return Err(Error::OutOfSupport { omega, omega_c: wc });
    }
    let pref = 4.0 * delta_r * delta_r;
    let rho = |v: f64| j.eval(v) / (4.0 * (v + delta_r) * (v + delta_r));
    let pv = principal_value(rho, 0.0, wc, omega, &j.breakpoints(), opts)?;
    Ok(Complex64::new(
        std::f64::consts::PI * pref * rho(omega),
        -pref * pv.value,
    ))
}

/// Lorentzian width given to each mode of the discrete kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Broadening {
    /// `ε_k = 2Δω_k`, twice the local spacing at the mode.
    LocalSpacing,
    /// `ε = 2·max_k Δω_k` for every mode.
    MaxSpacing,
    Fixed(f64),
}

impl Broadening {
    pub fn widths(self, bath: &DiscreteBath) -> Vec<f64> {
        let spacing = bath.local_spacing();
        match self {
            Broadening::LocalSpacing => spacing.into_iter().map(|d| 2.0 * d).collect(),
            Broadening::MaxSpacing => {
                let m = 2.0 * spacing.iter().copied().fold(0.0, f64::max);
                vec![m; spacing.len()]
            }
            Broadening::Fixed(e) => vec![e; spacing.len()],
        }
    }
}

/// Finite-bath kernel `Σ_k (2Δ_r f_k)² / (ε_k + i(ω_k − ω))`.
pub fn kernel_discrete(
    omega: f64,
    bath: &DiscreteBath,
    frame: &PolaronFrame,
    broadening: Broadening,
) -> Complex64 {
    kernel_discrete_with(omega, bath, frame, &broadening.widths(bath))
}

/// [`kernel_discrete`] with precomputed widths.
pub fn kernel_discrete_with(
    omega: f64,
    bath: &DiscreteBath,
    frame: &PolaronFrame,
    widths: &[f64],
) -> Complex64 {
    let two_dr = 2.0 * frame.delta_r;
    bath.frequencies()
        .iter()
        .zip(&frame.displacements)
        .zip(widths)
        .map(|((&w, &f), &eps)| (two_dr * f).powi(2) / Complex64::new(eps, w - omega))
        .sum()
}

/// Level shift `R` and width `Γ` of the self-energy for a kernel value.
pub fn level_shift_and_width(kernel: Complex64, delta_r: f64, omega: f64) -> Result<(f64, f64)> {
    let (a, b) = (kernel.re, -kernel.im);
    let two_dr = 2.0 * delta_r;
    let den = (two_dr + b).powi(2) + a * a;
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Pole { omega });
    }
    let r = -two_dr * (a * a + b * b + two_dr * b) / den;
    let gamma = two_dr * two_dr * a / den;
    Ok((r, gamma))
}

/// Markovian cavity-QED limit:
/// `Γ = g²(κ/2)/((ω−Ω)²+(κ/2)²) + παΔ`, `R = g²(ω−Ω)/((ω−Ω)²+(κ/2)²)`.
pub fn markov_limit(omega: f64, p: &ModelParams) -> (f64, f64) {
    let k = p.kappa();
    let d = omega - p.omega;
    let den = d * d + 0.25 * k * k;
    let g2 = p.g * p.g;
    (
        g2 * d / den,
        g2 * 0.5 * k / den + std::f64::consts::PI * p.alpha * p.delta,
    )
}

/// Closed-form kernel for a good cavity: the peaked density is replaced by its
/// Lorentzian with `ν+Δ_r → Ω+Δ_r`, and the Ohmic principal value is done
/// analytically over `(0, ∞)`.
pub fn good_cavity_kernel(omega: f64, p: &ModelParams, delta_r: f64) -> Result<Complex64> {
    if !(omega > 0.0) {
        return Err(Error::OutOfSupport {
            omega,
            omega_c: p.omega_c,
        });
    }
    use std::f64::consts::PI;
    let dr2 = delta_r * delta_r;
    let k = p.kappa();
    let det = omega - p.omega;
    let lor_den = det * det + 0.25 * k * k;
    let r2 = p.g * p.g * det / lor_den;
    let cav = (p.omega + delta_r).powi(2);
    let ohm = (omega + delta_r).powi(2);
    let gamma2 = 0.5 * p.g * p.g * k / lor_den;
    let k_re = PI * dr2 * (2.0 * gamma2 / cav + PI * p.alpha * omega / ohm);
    let k_im = dr2
        * (-2.0 * PI * r2 / cav
            + PI * p.alpha * (delta_r + omega + omega * (delta_r / omega).ln()) / ohm);
    Ok(Complex64::new(k_re, -k_im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    ExactKernel,
    DiscreteKernel,
    Markov,
    GoodCavity,
}

impl SpectrumMethod {
    pub const ALL: [SpectrumMethod; 4] = [
        SpectrumMethod::ExactKernel,
        SpectrumMethod::DiscreteKernel,
        SpectrumMethod::Markov,
        SpectrumMethod::GoodCavity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpectrumMethod::ExactKernel => "exact_kernel",
            SpectrumMethod::DiscreteKernel => "discrete_kernel",
            SpectrumMethod::Markov => "markov",
            SpectrumMethod::GoodCavity => "good_cavity",
        }
    }
}

impl fmt::Display for SpectrumMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether the width enters the spectrum linearly or squared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    #[default]
    Linear,
    Squared,
}

#[derive(Debug, Clone)]
pub struct SpectrumInputs<'a> {
    pub params: ModelParams,
    pub delta_r: f64,
    /// Bath and converged frame, needed by the discrete kernel.
    pub discrete: Option<(&'a DiscreteBath, &'a PolaronFrame)>,
    pub broadening: Broadening,
    pub denominator: Denominator,
    pub quad: QuadOptions,
    pub execution: Execution,
}

impl<'a> SpectrumInputs<'a> {
    pub fn new(params: ModelParams, delta_r: f64) -> Self {
        SpectrumInputs {
            params,
            delta_r,
            discrete: None,
            broadening: Broadening::LocalSpacing,
            denominator: Denominator::Linear,
            quad: QuadOptions::default(),
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub omegas: Vec<f64>,
    pub s_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub method: SpectrumMethod,
}

impl SpectrumResult {
    /// Interior local maxima of `S` as `(ω, S)` pairs, ascending in ω.
    pub fn peaks(&self) -> Vec<(f64, f64)> {
        let s = &self.s_values;
        (1..s.len().saturating_sub(1))
            .filter(|&i| s[i] > s[i - 1] && s[i] >= s[i + 1])
            .map(|i| (self.omegas[i], s[i]))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        csv::write_header(w, &["omega", "S", "R", "Gamma", "method"])?;
        for i in 0..self.omegas.len() {
            csv::write_row(
                w,
                &[
                    csv::format_float(self.omegas[i]),
                    csv::format_float(self.s_values[i]),
                    csv::format_float(self.r_values[i]),
                    csv::format_float(self.gamma_values[i]),
                    self.method.name().to_string(),
                ],
            )?;
        }
        Ok(())
    }
}

/// `(R, Γ)` at one frequency.
pub fn self_energy(
    omega: f64,
    method: SpectrumMethod,
    inputs: &SpectrumInputs<'_>,
) -> Result<(f64, f64)> {
    let p = &inputs.params;
    let dr = inputs.delta_r;
    let kernel = match method {
        SpectrumMethod::Markov => return Ok(markov_limit(omega, p)),
        SpectrumMethod::ExactKernel => {
            let j = SpectralDensity::new(SpectralKind::Combined, *p);
            kernel_exact(omega, &j, dr, &inputs.quad)?
        }
        SpectrumMethod::DiscreteKernel => {
            let (bath, frame) = inputs.discrete.ok_or_else(|| {
                Error::invalid("discrete", "the discrete kernel needs a bath and frame")
            })?;
            kernel_discrete(omega, bath, frame, inputs.broadening)
        }
        SpectrumMethod::GoodCavity => good_cavity_kernel(omega, p, dr)?,
    };
    level_shift_and_width(kernel, dr, omega)
}

/// `S(ω) ∝ 1/((ω − Δ_r − R)² + Γ)` (or `Γ²`), normalized to a unit peak.
pub fn s_omega(
    omegas: &[f64],
    method: SpectrumMethod,
    inputs: &SpectrumInputs<'_>,
) -> Result<SpectrumResult> {
    let pairs = inputs
        .execution
        .map(omegas, |&w| self_energy(w, method, inputs));
    let pairs: Vec<(f64, f64)> = pairs.into_iter().collect::<Result<_>>()?;
    let (r_values, gamma_values): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let mut s_values: Vec<f64> = omegas
        .iter()
        .zip(r_values.iter().zip(&gamma_values))
        .map(|(&w, (&r, &g))| {
            let width = match inputs.denominator {
                Denominator::Linear => g,
                Denominator::Squared => g * g,
            };
            1.0 / ((w - inputs.delta_r - r).powi(2) + width)
        })
        .collect();
    let peak = s_values.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 && peak.is_finite() {
        s_values.iter_mut().for_each(|s| *s /= peak);
    }
    Ok(SpectrumResult {
        omegas: omegas.to_vec(),
        s_values,
        r_values,
        gamma_values,
        method,
    })
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
