//! Single-excitation dynamics from an initially excited qubit.
//!
//! The default propagator diagonalizes `H` once and is exact at any time. The
//! Taylor stepper only needs matrix-vector products and serves as an
//! independent check.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csv;
use crate::error::{Error, Result};
use crate::polaron::SingleExcitationHamiltonian;

/// Norm drift above which a propagation is reported as failed.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationState {
    pub psi: Complex64,
    pub psi_k: Vec<Complex64>,
    pub time: f64,
}

impl ExcitationState {
    pub fn initial(n_modes: usize) -> Self {
        ExcitationState {
            psi: Complex64::new(1.0, 0.0),
            psi_k: vec![Complex64::new(0.0, 0.0); n_modes],
            time: 0.0,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.norm_sqr() + self.psi_k.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

/// `|ψ|²`, the polaron-frame excitation probability.
pub fn pe_polaron(state: &ExcitationState) -> f64 {
    state.psi.norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    Eigen,
    Taylor,
}

/// Exact propagator from a dense eigendecomposition.
#[derive(Debug, Clone)]
pub struct EigenPropagator {
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl EigenPropagator {
    pub fn new(h: &SingleExcitationHamiltonian) -> Self {
        let eig = SymmetricEigen::new(h.matrix.clone());
        EigenPropagator {
            energies: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// Overlap of each eigenvector with the excited qubit.
    pub fn qubit_overlaps(&self) -> Vec<f64> {
        self.vectors.row(0).iter().copied().collect()
    }

    /// `ψ(t) = Σ_n |⟨0|n⟩|² e^{−iE_n t}`.
    pub fn qubit_amplitude(&self, t: f64) -> Complex64 {
        self.vectors
            .row(0)
            .iter()
            .zip(self.energies.iter())
            .map(|(&u, &e)| Complex64::from_polar(u * u, -e * t))
            .sum()
    }

    pub fn state_at(&self, t: f64) -> ExcitationState {
        let n = self.energies.len();
        let coeff: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(self.vectors[(0, j)], -self.energies[j] * t))
            .collect();
        let amp = |i: usize| -> Complex64 { (0..n).map(|j| coeff[j] * self.vectors[(i, j)]).sum() };
        ExcitationState {
            psi: amp(0),
            psi_k: (1..n).map(amp).collect(),
            time: t,
        }
    }

    pub fn pe_series(&self, times: &[f64]) -> Vec<f64> {
        times
            .iter()
            .map(|&t| self.qubit_amplitude(t).norm_sqr())
            .collect()
    }

    /// Infinite-time average of `|ψ|²`, `Σ_n |⟨0|n⟩|⁴`.
    pub fn long_time_average(&self) -> f64 {
        self.vectors.row(0).iter().map(|u| u.powi(4)).sum()
    }
}

/// Explicit Taylor-series stepper with steps bounded by `‖H‖·h ≤ 1`.
#[derive(Debug, Clone)]
pub struct TaylorStepper<'a> {
    h: &'a SingleExcitationHamiltonian,
    max_step: f64,
    /// Series truncation relative to the state norm.
    pub term_tolerance: f64,
}

impl<'a> TaylorStepper<'a> {
    pub fn new(h: &'a SingleExcitationHamiltonian) -> Self {
        let bound = h.norm_bound().max(f64::MIN_POSITIVE);
        TaylorStepper {
            h,
            max_step: 1.0 / bound,
            term_tolerance: 1e-17,
        }
    }

    fn step(
        &self,
        v: &mut [Complex64],
        dt: f64,
        term: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        term.copy_from_slice(v);
        let minus_i_dt = Complex64::new(0.0, -dt);
        for m in 1..=60 {
            self.h.apply(term, scratch);
            let factor = minus_i_dt / m as f64;
            let mut size = 0.0;
            for (t, s) in term.iter_mut().zip(scratch.iter()) {
                *t = s * factor;
                size += t.norm_sqr();
            }
            for (x, t) in v.iter_mut().zip(term.iter()) {
                *x += t;
            }
            if size.sqrt() < self.term_tolerance {
                break;
            }
        }
    }

    /// States on an ascending time grid starting at or after zero.
    pub fn propagate(&self, times: &[f64]) -> Result<Vec<ExcitationState>> {
        let n = self.h.dim();
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[0] = Complex64::new(1.0, 0.0);
        let mut term = v.clone();
        let mut scratch = v.clone();
        let mut now = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let span = t - now;
            if span < 0.0 {
                return Err(Error::invalid(
                    "times",
                    "must be ascending and non-negative",
                ));
            }
            let steps = (span / self.max_step).ceil() as usize;
            if steps > 0 {
                let dt = span / steps as f64;
                for _ in 0..steps {
                    self.step(&mut v, dt, &mut term, &mut scratch);
                }
            }
            now = t;
            let state = ExcitationState {
                psi: v[0],
                psi_k: v[1..].to_vec(),
                time: t,
            };
            check_norm(&state)?;
            out.push(state);
        }
        Ok(out)
    }
}

fn check_norm(state: &ExcitationState) -> Result<()> {
    let drift = (1.0 - state.norm_sqr()).abs();
    if drift > NORM_DRIFT_LIMIT {
        return Err(Error::NormDrift {
            drift,
            time: state.time,
        });
    }
    Ok(())
}

/// Full states on the grid, starting from the excited qubit.
pub fn propagate(
    h: &SingleExcitationHamiltonian,
    times: &[f64],
    method: Propagator,
) -> Result<Vec<ExcitationState>> {
    SingleExcitationHamiltonian::from_matrix(h.matrix.clone())?;
    match method {
        Propagator::Eigen => {
            let prop = EigenPropagator::new(h);
            times
                .iter()
                .map(|&t| {
                    let s = prop.state_at(t);
                    check_norm(&s)?;
                    Ok(s)
                })
                .collect()
        }
        Propagator::Taylor => TaylorStepper::new(h).propagate(times),
    }
}

/// Uniform grid `0, dt, …` up to and including `t_max` (to rounding).
pub fn time_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|i| i as f64 * dt).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub pe: Vec<f64>,
    pub pe_app: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, pe: Vec<f64>) -> Result<Self> {
        if times.len() != pe.len() {
            return Err(Error::invalid("pe", "length differs from times"));
        }
        Ok(TimeSeries {
            times,
            pe,
            pe_app: None,
        })
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let app = self.pe_app.as_deref();
        csv::write_float_rows(
            w,
            &["t", "pe_polaron", "pe_app"],
            (0..self.times.len())
                .map(|i| vec![self.times[i], self.pe[i], app.map_or(f64::NAN, |a| a[i])]),
        )
    }
}

/// `P_e^app = (1−P_e^eq)·P̃_e + P_e^eq`.
pub fn pe_lab_estimate(series: &TimeSeries, pe_eq: f64) -> TimeSeries {
    TimeSeries {
        pe_app: Some(
            series
                .pe
                .iter()
                .map(|p| (1.0 - pe_eq) * p + pe_eq)
                .collect(),
        ),
        ..series.clone()
    }
}

/// `η = √((γ−κ)² − 16g²)`, real below the Rabi onset and imaginary above it.
pub fn eta(g: f64, gamma: f64, kappa: f64) -> Complex64 {
    Complex64::new((gamma - kappa).powi(2) - 16.0 * g * g, 0.0).sqrt()
}

/// Wigner–Weisskopf amplitude of a qubit coupled to a Lorentzian cavity mode.
///
/// Solves `ψ̈ + ((γ+κ)/2 − iδ)ψ̇ + (g² + γκ/4 − iδγ/2)ψ = 0` with `ψ(0) = 1`,
/// `ψ̇(0) = −γ/2`, where `δ` is the qubit–cavity detuning.
pub fn analytic_amplitude(g: f64, gamma: f64, kappa: f64, detuning: f64, t: f64) -> Complex64 {
    let i = Complex64::i();
    let b = Complex64::new(0.5 * (gamma + kappa), 0.0) - i * detuning;
    let c = Complex64::new(g * g + 0.25 * gamma * kappa, 0.0) - i * (0.5 * detuning * gamma);
    let disc = (b * b - 4.0 * c).sqrt();
    let r1 = 0.5 * (-b + disc);
    let r2 = 0.5 * (-b - disc);
    let d0 = Complex64::new(-0.5 * gamma, 0.0);
    let scale = b.norm().max(c.norm().sqrt()).max(f64::MIN_POSITIVE);
    if disc.norm() <= 1e-9 * scale {
        // repeated root
        let r = -0.5 * b;
        return (1.0 + (d0 - r) * t) * (r * t).exp();
    }
    let a = (d0 - r2) / (r1 - r2);
    a * (r1 * t).exp() + (1.0 - a) * (r2 * t).exp()
}

/// `g ≅ |κ − γ_r|/4`.
pub fn rabi_onset_g(gamma_r: f64, kappa: f64) -> f64 {
    0.25 * (kappa - gamma_r).abs()
}

/// Largest positive centered-difference derivative of `P_e`, or 0.
pub fn max_dpe_dt(series: &TimeSeries) -> Result<f64> {
    let (t, p) = (&series.times, &series.pe);
    if t.len() < 3 {
        return Err(Error::invalid("series", "needs at least three samples"));
    }
    Ok((1..t.len() - 1)
        .map(|i| (p[i + 1] - p[i - 1]) / (t[i + 1] - t[i - 1]))
        .fold(0.0, f64::max))
}

/// Angular frequency in `[omega_min, omega_max]` maximizing the Fourier
/// magnitude of the mean-subtracted signal.
pub fn dominant_frequency(
    times: &[f64],
    values: &[f64],
    omega_min: f64,
    omega_max: f64,
    samples: usize,
) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let power = |w: f64| {
        let z: Complex64 = times
            .iter()
            .zip(values)
            .map(|(&t, &v)| Complex64::from_polar(v - mean, -w * t))
            .sum();
        z.norm_sqr()
    };
    let h = (omega_max - omega_min) / samples as f64;
    let grid: Vec<f64> = (0..=samples).map(|k| omega_min + h * k as f64).collect();
    let mut best = grid[0];
    let mut best_p = f64::NEG_INFINITY;
    for &w in &grid {
        let pw = power(w);
        if pw > best_p {
            best_p = pw;
            best = w;
        }
    }
    // golden-section refinement within one grid cell on either side
    let (mut a, mut b) = ((best - h).max(omega_min), (best + h).min(omega_max));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if power(x1) > power(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    0.5 * (a + b)
}

/// Time average of `values` over the final `fraction` of the series.
pub fn tail_mean(values: &[f64], fraction: f64) -> f64 {
    let start = ((1.0 - fraction) * values.len() as f64).floor() as usize;
    let tail = &values[start.min(values.len().saturating_sub(1))..];
    tail.iter().sum::<f64>() / tail.len() as f64
}
