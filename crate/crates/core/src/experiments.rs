//! Composed runs: each function takes physical parameters and numerics and
//! returns plain data for the command line tool to serialize.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bath::{
    combined_bath, diagonalize_cavity_bath, discretize_cavity_bath, discretize_ohmic,
    residue_identity_check, DiscreteBath,
};
use crate::chain::{chain_spectral_check, lanczos_chain_map, ChainHamiltonian};
use crate::dynamics::{
    analytic_amplitude, max_dpe_dt, pe_lab_estimate, rabi_onset_g, time_grid, EigenPropagator,
    TimeSeries,
};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::polaron::{
    adiabatic_rg_delta_r, build_h_p1, equilibrium_observables, solve_delta_r_continuum,
    solve_delta_r_discrete, FixedPointOptions, PolaronFrame,
};
use crate::spectral::{ohmic_j, peaked_j, ModelParams, SpectralDensity, SpectralKind};
use crate::spectrum::{
    s_omega, Broadening, Denominator, SpectrumInputs, SpectrumMethod, SpectrumResult,
};

/// Renormalized qubit emission rate `γ_r = J_Ohmic(Δ_r) = παΔ_r`.
pub fn gamma_r(p: &ModelParams, delta_r: f64) -> f64 {
    ohmic_j(delta_r, p)
}

/// A solved model: merged bath and its converged polaron frame.
#[derive(Debug, Clone)]
pub struct Solved {
    pub params: ModelParams,
    pub bath: DiscreteBath,
    pub frame: PolaronFrame,
}

pub fn solve(p: &ModelParams, n_modes: usize, opts: &FixedPointOptions) -> Result<Solved> {
    let bath = combined_bath(p, n_modes)?;
    let frame = solve_delta_r_discrete(&bath, p.delta, opts)?;
    Ok(Solved {
        params: *p,
        bath,
        frame,
    })
}

const RETUNE_TOLERANCE: f64 = 1e-10;
const RETUNE_MAX_ITERATIONS: usize = 200;

/// Moves the cavity onto the renormalized qubit, `Ω = Δ_r(Ω)`, keeping α_cav
/// (hence κ/Ω) and ω_c fixed.
pub fn retune_to_resonance(
    p: &ModelParams,
    n_modes: usize,
    opts: &FixedPointOptions,
) -> Result<Solved> {
    let mut omega = p.omega;
    for _ in 0..RETUNE_MAX_ITERATIONS {
        let s = solve(&p.with_omega(omega), n_modes, opts)?;
        let next = s.frame.delta_r;
        if s.frame.localized {
            return Err(Error::invalid(
                "omega",
                "qubit localizes; no resonance exists",
            ));
        }
        if (next - omega).abs() < RETUNE_TOLERANCE * p.delta {
            return Ok(s);
        }
        omega = next;
    }
    Err(Error::NoConvergence {
        last: omega,
        residual: f64::NAN,
        iterations: RETUNE_MAX_ITERATIONS,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    G,
    AlphaCav,
}

impl SweepParameter {
    pub fn apply(self, p: &ModelParams, value: f64) -> ModelParams {
        match self {
            SweepParameter::Alpha => ModelParams { alpha: value, ..*p },
            SweepParameter::G => ModelParams { g: value, ..*p },
            SweepParameter::AlphaCav => ModelParams {
                alpha_cav: value,
                ..*p
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::G => "g",
            SweepParameter::AlphaCav => "alpha_cav",
        }
    }
}

/// Δ_r from the discrete solver, the continuum solver and the adiabatic RG.
/// Failed solves are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaRPoint {
    pub value: f64,
    pub delta_r_polaron: f64,
    pub delta_r_continuum: f64,
    pub delta_r_arg: f64,
    pub localized: bool,
    pub converged: bool,
}

pub fn delta_r_point(p: &ModelParams, n_modes: usize, opts: &FixedPointOptions) -> DeltaRPoint {
    let j = SpectralDensity::new(SpectralKind::Combined, *p);
    let discrete = solve(p, n_modes, opts);
    let continuum = solve_delta_r_continuum(&j, p.delta, opts);
    let arg = adiabatic_rg_delta_r(&j, p.delta, opts);
    DeltaRPoint {
        value: f64::NAN,
        delta_r_polaron: discrete.as_ref().map_or(f64::NAN, |s| s.frame.delta_r),
        delta_r_continuum: continuum.as_ref().map_or(f64::NAN, |s| s.delta_r),
        delta_r_arg: arg.as_ref().map_or(f64::NAN, |s| s.delta_r),
        localized: discrete.as_ref().is_ok_and(|s| s.frame.localized),
        converged: discrete.is_ok() && continuum.is_ok() && arg.is_ok(),
    }
}

pub fn delta_r_sweep(
    base: &ModelParams,
    parameter: SweepParameter,
    values: &[f64],
    n_modes: usize,
    opts: &FixedPointOptions,
    execution: Execution,
) -> Result<Vec<DeltaRPoint>> {
    for &v in values {
        parameter.apply(base, v).validate()?;
    }
    Ok(execution.map(values, |&v| DeltaRPoint {
        value: v,
        ..delta_r_point(&parameter.apply(base, v), n_modes, opts)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        time_grid(self.t_max, self.dt)
    }
}

/// Numerical and analytic excitation probabilities for one coupling.
#[derive(Debug, Clone)]
pub struct DynamicsRun {
    pub params: ModelParams,
    pub delta_r: f64,
    pub gamma_r: f64,
    pub kappa: f64,
    pub pe_eq: f64,
    pub onset_g: f64,
    /// `|ψ|²` and its affine lab-frame estimate.
    pub series: TimeSeries,
    /// Lab-frame estimate built on the analytic Wigner–Weisskopf amplitude.
    pub analytic_pe_app: Vec<f64>,
    pub long_time_average: f64,
}

impl DynamicsRun {
    pub fn pe_app(&self) -> &[f64] {
        self.series.pe_app.as_deref().unwrap_or(&[])
    }
}

pub fn run_dynamics(
    p: &ModelParams,
    n_modes: usize,
    grid: &TimeGrid,
    opts: &FixedPointOptions,
) -> Result<DynamicsRun> {
    let solved = solve(p, n_modes, opts)?;
    let h = build_h_p1(&solved.bath, &solved.frame)?;
    let prop = EigenPropagator::new(&h);
    let times = grid.points();
    let pe = prop.pe_series(&times);
    let delta_r = solved.frame.delta_r;
    let pe_eq = equilibrium_observables(delta_r, p.delta).pe;
    let series = pe_lab_estimate(&TimeSeries::new(times.clone(), pe)?, pe_eq);
    let g_r = gamma_r(p, delta_r);
    let kappa = p.kappa();
    let detuning = delta_r - p.omega;
    let analytic_pe_app = times
        .iter()
        .map(|&t| {
            (1.0 - pe_eq) * analytic_amplitude(p.g, g_r, kappa, detuning, t).norm_sqr() + pe_eq
        })
        .collect();
    Ok(DynamicsRun {
        params: *p,
        delta_r,
        gamma_r: g_r,
        kappa,
        pe_eq,
        onset_g: rabi_onset_g(g_r, kappa),
        series,
        analytic_pe_app,
        long_time_average: prop.long_time_average(),
    })
}

/// `max dP_e/dt` above which the dynamics counts as oscillating.
pub const ONSET_DERIVATIVE_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetRow {
    pub g: f64,
    pub max_dpe_dt: f64,
    pub g_threshold_prediction: f64,
    pub delta_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnsetScan {
    /// Cavity frequency, tuned onto Δ_r at the predicted threshold.
    pub omega: f64,
    pub alpha: f64,
    pub g_prediction: f64,
    pub rows: Vec<OnsetRow>,
}

impl OnsetScan {
    /// First coupling whose derivative exceeds [`ONSET_DERIVATIVE_FLOOR`]·Δ.
    pub fn first_oscillation_g(&self, delta: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.max_dpe_dt > ONSET_DERIVATIVE_FLOOR * delta)
            .map(|r| r.g)
    }
}

/// Cavity frequency that is resonant with Δ_r at the predicted onset coupling.
pub fn onset_resonance(
    p: &ModelParams,
    n_modes: usize,
    opts: &FixedPointOptions,
) -> Result<(ModelParams, f64)> {
    let mut q = ModelParams { g: 0.0, ..*p };
    for _ in 0..RETUNE_MAX_ITERATIONS {
        let s = solve(&q, n_modes, opts)?;
        let dr = s.frame.delta_r;
        let g_pred = rabi_onset_g(gamma_r(&q, dr), q.kappa());
        let next = ModelParams {
            g: g_pred,
            ..q.with_omega(dr)
        };
        if (next.omega - q.omega).abs() < RETUNE_TOLERANCE * p.delta
            && (next.g - q.g).abs() < RETUNE_TOLERANCE * p.delta
        {
            return Ok((next, g_pred));
        }
        q = next;
    }
    Err(Error::NoConvergence {
        last: q.omega,
        residual: f64::NAN,
        iterations: RETUNE_MAX_ITERATIONS,
    })
}

/// Scans `max dP_e/dt` over couplings with `T = 50/Δ_r` and the given step.
pub fn onset_scan(
    p: &ModelParams,
    g_values: &[f64],
    n_modes: usize,
    dt: f64,
    opts: &FixedPointOptions,
    execution: Execution,
) -> Result<OnsetScan> {
    let (tuned, g_prediction) = onset_resonance(p, n_modes, opts)?;
    let rows = execution.map(g_values, |&g| -> Result<OnsetRow> {
        let q = ModelParams { g, ..tuned };
        let solved = solve(&q, n_modes, opts)?;
        let dr = solved.frame.delta_r;
        let h = build_h_p1(&solved.bath, &solved.frame)?;
        let times = time_grid(50.0 / dr, dt);
        let pe = EigenPropagator::new(&h).pe_series(&times);
        Ok(OnsetRow {
            g,
            max_dpe_dt: max_dpe_dt(&TimeSeries::new(times, pe)?)?,
            g_threshold_prediction: g_prediction,
            delta_r: dr,
        })
    });
    Ok(OnsetScan {
        omega: tuned.omega,
        alpha: p.alpha,
        g_prediction,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub params: ModelParams,
    pub delta_r: f64,
    pub results: Vec<SpectrumResult>,
}

pub struct SpectrumRequest<'a> {
    pub omegas: &'a [f64],
    pub methods: &'a [SpectrumMethod],
    /// Retune the cavity onto Δ_r before computing.
    pub resonant: bool,
    pub denominator: Denominator,
    pub broadening: Broadening,
    pub execution: Execution,
}

pub fn run_spectrum(
    p: &ModelParams,
    n_modes: usize,
    req: &SpectrumRequest<'_>,
    opts: &FixedPointOptions,
) -> Result<SpectrumRun> {
    let solved = if req.resonant {
        retune_to_resonance(p, n_modes, opts)?
    } else {
        solve(p, n_modes, opts)?
    };
    let params = solved.params;
    let delta_r = solved.frame.delta_r;
    let inputs = SpectrumInputs {
        discrete: Some((&solved.bath, &solved.frame)),
        broadening: req.broadening,
        denominator: req.denominator,
        execution: req.execution,
        ..SpectrumInputs::new(params, delta_r)
    };
    let results = req
        .methods
        .iter()
        .map(|&m| s_omega(req.omegas, m, &inputs))
        .collect::<Result<_>>()?;
    Ok(SpectrumRun {
        params,
        delta_r,
        results,
    })
}

/// Fidelity figures of the discretized baths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BathCheck {
    /// Max relative deviation of the reconstructed qubit bath over `[0.1, 0.9]ω_c`.
    pub ohmic_deviation: f64,
    pub cavity_bath_deviation: f64,
    /// Same for the cavity normal modes against the peaked density, excluding
    /// `|ω−Ω| < 10κ`.
    pub effective_deviation: f64,
    /// Relative error of the normal-mode weight within `|ω−Ω| ≤ 10κ`.
    pub resonance_weight_error: f64,
    /// Relative error of `Σ w_k` against `∫J` for the qubit bath.
    pub sum_rule_error: f64,
    pub residue_deviation: f64,
    pub orthogonality_error: f64,
    /// Distance of the normal-mode density peak from Ω.
    pub peak_offset: f64,
    pub peak_spacing: f64,
    #[serde(skip)]
    pub ohmic: Option<DiscreteBath>,
    #[serde(skip)]
    pub cavity_bath: Option<DiscreteBath>,
    #[serde(skip)]
    pub effective: Option<DiscreteBath>,
}

fn max_rel_dev<F: Fn(f64) -> bool, T: Fn(f64) -> f64>(
    bath: &DiscreteBath,
    keep: F,
    target: T,
) -> f64 {
    bath.reconstruct_density()
        .into_iter()
        .filter(|&(w, _)| keep(w))
        .map(|(w, j)| (j / target(w) - 1.0).abs())
        .fold(0.0, f64::max)
}

pub fn bath_check(p: &ModelParams, n_modes: usize) -> Result<BathCheck> {
    let wc = p.omega_c;
    let window = |w: f64| w >= 0.1 * wc && w <= 0.9 * wc;
    let ohmic = discretize_ohmic(p.alpha, wc, n_modes)?;
    let cav = discretize_cavity_bath(p.alpha_cav, p.omega, wc, n_modes)?;
    let modes = diagonalize_cavity_bath(p.omega, p.g, &cav)?;
    let eff = modes.to_bath()?;
    let kappa = p.kappa();
    let ohmic_target = |w: f64| PI * p.alpha * w;
    let cav_target = |w: f64| PI * p.alpha_cav * w;
    let (peak_w, _) = eff.reconstruct_density().into_iter().fold(
        (f64::NAN, f64::NEG_INFINITY),
        |best, (w, j)| if j > best.1 { (w, j) } else { best },
    );
    let idx = eff
        .frequencies()
        .iter()
        .position(|&w| w == peak_w)
        .unwrap_or(0);
    let lo = p.omega - 10.0 * kappa;
    let hi = p.omega + 10.0 * kappa;
    let j_peak = SpectralDensity::new(SpectralKind::Peaked, *p);
    let band_target = crate::quad::integrate(
        |w| peaked_j(w, p),
        lo.max(0.0),
        hi,
        &crate::spectral::SpectralFunction::breakpoints(&j_peak),
        &crate::quad::QuadOptions::default(),
    )?
    .value;
    Ok(BathCheck {
        ohmic_deviation: if p.alpha > 0.0 {
            max_rel_dev(&ohmic, window, ohmic_target)
        } else {
            0.0
        },
        cavity_bath_deviation: if p.alpha_cav > 0.0 {
            max_rel_dev(&cav, window, cav_target)
        } else {
            0.0
        },
        effective_deviation: if p.g > 0.0 {
            max_rel_dev(
                &eff,
                |w| window(w) && (w - p.omega).abs() > 10.0 * kappa,
                |w| peaked_j(w, p),
            )
        } else {
            0.0
        },
        resonance_weight_error: if p.g > 0.0 {
            (eff.band_weight(lo, hi) / band_target - 1.0).abs()
        } else {
            0.0
        },
        sum_rule_error: if p.alpha > 0.0 {
            (ohmic.total_weight() / (0.5 * PI * p.alpha * wc * wc) - 1.0).abs()
        } else {
            0.0
        },
        residue_deviation: residue_identity_check(&modes, &cav),
        orthogonality_error: (modes.weight_sum() - 1.0).abs(),
        peak_offset: (peak_w - p.omega).abs(),
        peak_spacing: eff.local_spacing().get(idx).copied().unwrap_or(f64::NAN),
        ohmic: Some(ohmic),
        cavity_bath: Some(cav),
        effective: Some(eff),
    })
}

#[derive(Debug, Clone)]
pub struct ChainRun {
    pub solved: Solved,
    pub chain: ChainHamiltonian,
    pub spectral_deviation: f64,
    /// `Σ f_k² ω_k / Σ f_k²`.
    pub weighted_mean_frequency: f64,
}

pub fn run_chain_map(
    p: &ModelParams,
    n_modes: usize,
    opts: &FixedPointOptions,
) -> Result<ChainRun> {
    let solved = solve(p, n_modes, opts)?;
    let chain = lanczos_chain_map(&solved.bath, &solved.frame)?;
    let spectral_deviation = chain_spectral_check(&chain, &solved.bath);
    let f = &solved.frame.displacements;
    let norm: f64 = f.iter().map(|x| x * x).sum();
    let weighted_mean_frequency = f
        .iter()
        .zip(solved.bath.frequencies())
        .map(|(x, w)| x * x * w)
        .sum::<f64>()
        / norm;
    Ok(ChainRun {
        solved,
        chain,
        spectral_deviation,
        weighted_mean_frequency,
    })
}
