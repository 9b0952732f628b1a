//! Silbey–Harris polaron frame.
//!
//! For a bath with spectral weights `w_k` (`J = Σ w_k δ(ω−ω_k)`) the optimal
//! displacements are `f_k = −√w_k / (2(Δ_r+ω_k))` and the renormalized
//! splitting solves `Δ_r = Δ·exp(−2Σ f_k²)`. In the continuum this is
//! `Δ_r = Δ·exp(−½∫ J(ω)/(ω+Δ_r)² dω)`, so discrete and continuum solvers
//! converge to the same value as the bath is refined.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bath::DiscreteBath;
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::spectral::SpectralFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    /// Mixing weight λ of the damped update.
    pub damping: f64,
    /// Convergence threshold on the residual, relative to Δ.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Δ_r below this fraction of Δ is reported as localized.
    pub localization_threshold: f64,
    pub quad: QuadSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl From<QuadSettings> for QuadOptions {
    fn from(q: QuadSettings) -> Self {
        QuadOptions {
            rel_tol: q.rel_tol,
            max_intervals: q.max_intervals,
            ..QuadOptions::default()
        }
    }
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            damping: 0.5,
            tolerance: 1e-10,
            max_iterations: 100_000,
            localization_threshold: 1e-8,
            quad: QuadSettings {
                rel_tol: 1e-9,
                max_intervals: 4000,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolaronFrame {
    #[serde(skip)]
    pub displacements: Vec<f64>,
    pub delta: f64,
    pub delta_r: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub localized: bool,
}

/// `f_k = −√w_k / (2(Δ_r+ω_k))`.
pub fn displacements(bath: &DiscreteBath, delta_r: f64) -> Vec<f64> {
    bath.frequencies()
        .iter()
        .zip(bath.spectral_weights())
        .map(|(&w, s)| -s.sqrt() / (2.0 * (delta_r + w)))
        .collect()
}

fn validate_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("delta", "must be finite and positive"))
    }
}

struct FixedPoint {
    delta_r: f64,
    residual: f64,
    iterations: usize,
    localized: bool,
}

/// Damped iteration `x ← (1−λ)x + λ·T(x)` from `x = Δ`.
fn solve_fixed_point<T>(delta: f64, opts: &FixedPointOptions, mut map: T) -> Result<FixedPoint>
where
    T: FnMut(f64) -> Result<f64>,
{
    validate_delta(delta)?;
    let lam = opts.damping;
    if !(lam > 0.0 && lam <= 1.0) {
        return Err(Error::invalid("damping", "must lie in (0, 1]"));
    }
    let floor = opts.localization_threshold * delta;
    let mut x = delta;
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iterations {
        let tx = map(x)?;
        residual = (tx - x).abs();
        if residual < opts.tolerance * delta {
            return Ok(FixedPoint {
                delta_r: tx,
                residual,
                iterations: it + 1,
                localized: tx < floor,
            });
        }
        x = (1.0 - lam) * x + lam * tx;
        if x < floor {
            return Ok(FixedPoint {
                delta_r: x,
                residual,
                iterations: it + 1,
                localized: true,
            });
        }
    }
    Err(Error::NoConvergence {
        last: x,
        residual,
        iterations: opts.max_iterations,
    })
}

pub fn solve_delta_r_discrete(
    bath: &DiscreteBath,
    delta: f64,
    opts: &FixedPointOptions,
) -> Result<PolaronFrame> {
    let weights = bath.spectral_weights();
    let freqs = bath.frequencies();
    let fp = solve_fixed_point(delta, opts, |x| {
        let s: f64 = freqs
            .iter()
            .zip(&weights)
            .map(|(&w, &c)| c / (4.0 * (x + w) * (x + w)))
            .sum();
        Ok(delta * (-2.0 * s).exp())
    })?;
    Ok(PolaronFrame {
        displacements: displacements(bath, fp.delta_r),
        delta,
        delta_r: fp.delta_r,
        residual: fp.residual,
        iterations: fp.iterations,
        converged: true,
        localized: fp.localized,
    })
}

/// A frame at a prescribed Δ_r, without solving for self-consistency.
pub fn frame_at(bath: &DiscreteBath, delta: f64, delta_r: f64) -> PolaronFrame {
    let f = displacements(bath, delta_r);
    let target = delta * (-2.0 * f.iter().map(|x| x * x).sum::<f64>()).exp();
    PolaronFrame {
        displacements: f,
        delta,
        delta_r,
        residual: (target - delta_r).abs(),
        iterations: 0,
        converged: false,
        localized: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumSolution {
    pub delta_r: f64,
    pub residual: f64,
    pub iterations: usize,
    pub localized: bool,
}

impl From<FixedPoint> for ContinuumSolution {
    fn from(fp: FixedPoint) -> Self {
        ContinuumSolution {
            delta_r: fp.delta_r,
            residual: fp.residual,
            iterations: fp.iterations,
            localized: fp.localized,
        }
    }
}

/// `Δ_r = Δ·exp(−½∫₀^{ω_c} J(ω)/(ω+Δ_r)² dω)`.
pub fn solve_delta_r_continuum<J: SpectralFunction>(
    j: &J,
    delta: f64,
    opts: &FixedPointOptions,
) -> Result<ContinuumSolution> {
    let q: QuadOptions = opts.quad.into();
    let bps = j.breakpoints();
    let wc = j.cutoff();
    solve_fixed_point(delta, opts, |x| {
        let r = integrate(|w| j.eval(w) / ((w + x) * (w + x)), 0.0, wc, &bps, &q)?;
        Ok(delta * (-0.5 * r.value).exp())
    })
    .map(Into::into)
}

/// Adiabatic renormalization: `Δ_r = Δ·exp(−½∫_{Δ_r}^{ω_c} J(ω)/ω² dω)`.
pub fn adiabatic_rg_delta_r<J: SpectralFunction>(
    j: &J,
    delta: f64,
    opts: &FixedPointOptions,
) -> Result<ContinuumSolution> {
    let q: QuadOptions = opts.quad.into();
    let bps = j.breakpoints();
    let wc = j.cutoff();
    solve_fixed_point(delta, opts, |x| {
        if x >= wc {
            return Ok(delta);
        }
        let r = integrate(|w| j.eval(w) / (w * w), x, wc, &bps, &q)?;
        Ok(delta * (-0.5 * r.value).exp())
    })
    .map(Into::into)
}

/// `Δ(Δ/ω_c)^{α/(1−α)}`; zero at and beyond the localization transition.
pub fn ohmic_closed_form(delta: f64, alpha: f64, omega_c: f64) -> f64 {
    if alpha >= 1.0 {
        return 0.0;
    }
    delta * (delta / omega_c).powf(alpha / (1.0 - alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub sz: f64,
    pub pe: f64,
}

/// `⟨σ_z⟩ = −Δ_r/Δ` and `P_e = (1 + ⟨σ_z⟩)/2`.
pub fn equilibrium_observables(delta_r: f64, delta: f64) -> Equilibrium {
    let sz = -delta_r / delta;
    Equilibrium {
        sz,
        pe: 0.5 * (1.0 + sz),
    }
}

/// Polaron Hamiltonian restricted to one excitation. Index 0 is the excited
/// qubit, index `k+1` the `k`-th excited mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleExcitationHamiltonian {
    pub matrix: DMatrix<f64>,
    structure: Option<Structure>,
}

#[derive(Debug, Clone, PartialEq)]
struct Structure {
    delta_r: f64,
    frequencies: Vec<f64>,
    displacements: Vec<f64>,
}

impl SingleExcitationHamiltonian {
    /// Wraps an arbitrary matrix, rejecting non-symmetric input.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NonHermitian {
                asymmetry: f64::INFINITY,
            });
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        let asymmetry = (&matrix - matrix.transpose()).amax();
        if asymmetry > 1e-12 * scale {
            return Err(Error::NonHermitian { asymmetry });
        }
        Ok(SingleExcitationHamiltonian {
            matrix,
            structure: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `out = H·v`, in O(N) when the polaron structure is known.
    pub fn apply(&self, v: &[num_complex::Complex64], out: &mut [num_complex::Complex64]) {
        match &self.structure {
            Some(s) => {
                let two_dr = 2.0 * s.delta_r;
                let proj: num_complex::Complex64 = s
                    .displacements
                    .iter()
                    .zip(&v[1..])
                    .map(|(&f, &x)| x * f)
                    .sum();
                out[0] = v[0] * s.delta_r + proj * two_dr;
                for k in 0..s.frequencies.len() {
                    let f = s.displacements[k];
                    out[k + 1] = v[k + 1] * s.frequencies[k] + (v[0] + proj) * (two_dr * f);
                }
            }
            None => {
                let n = self.dim();
                for i in 0..n {
                    out[i] = (0..n).map(|j| v[j] * self.matrix[(i, j)]).sum();
                }
            }
        }
    }

    /// Gershgorin bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// `H₀₀ = Δ_r`, `H₀k = 2Δ_r f_k`, `H_kk′ = ω_k δ_kk′ + 2Δ_r f_k f_k′`.
pub fn build_h_p1(
    bath: &DiscreteBath,
    frame: &PolaronFrame,
) -> Result<SingleExcitationHamiltonian> {
    let n = bath.n_modes();
    if frame.displacements.len() != n {
        return Err(Error::invalid(
            "frame",
            "displacement count differs from bath size",
        ));
    }
    let dr = frame.delta_r;
    let f = &frame.displacements;
    let mut h = DMatrix::zeros(n + 1, n + 1);
    h[(0, 0)] = dr;
    for k in 0..n {
        h[(0, k + 1)] = 2.0 * dr * f[k];
        h[(k + 1, 0)] = 2.0 * dr * f[k];
        for p in k..n {
            let v = 2.0 * dr * f[k] * f[p];
            h[(k + 1, p + 1)] = v;
            h[(p + 1, k + 1)] = v;
        }
        h[(k + 1, k + 1)] += bath.frequencies()[k];
    }
    Ok(SingleExcitationHamiltonian {
        matrix: h,
        structure: Some(Structure {
            delta_r: dr,
            frequencies: bath.frequencies().to_vec(),
            displacements: f.clone(),
        }),
    })
}
