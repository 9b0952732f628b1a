//! Discrete baths, the Caldeira–Leggett cavity block and its exact
//! normal-mode decomposition.
//!
//! A bath is stored as frequencies and non-negative couplings together with the
//! convention the couplings are expressed in. Annihilation-operator couplings
//! `c_k` give `J(ω) = 2π Σ c_k² δ(ω−ω_k)`; position couplings of a
//! Caldeira–Leggett bath attached to an oscillator of frequency `Ω` give
//! `J(ω) = (π/2Ω) Σ c_k²/ω_k δ(ω−ω_k)`.

use std::f64::consts::PI;
use std::io::{self, BufRead, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::csv;
use crate::error::{Error, Result};
use crate::spectral::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingConvention {
    Annihilation,
    Position { omega: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    frequencies: Vec<f64>,
    couplings: Vec<f64>,
    convention: CouplingConvention,
}

impl DiscreteBath {
    /// Sorts the modes and merges frequencies closer than `1e-12·max ω_k`,
    /// adding their couplings in quadrature.
    pub fn new(
        frequencies: Vec<f64>,
        couplings: Vec<f64>,
        convention: CouplingConvention,
    ) -> Result<Self> {
        if frequencies.len() != couplings.len() {
            return Err(Error::invalid(
                "couplings",
                "length differs from frequencies",
            ));
        }
        if frequencies.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid("frequencies", "must be finite and positive"));
        }
        if couplings.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid(
                "couplings",
                "must be finite and non-negative",
            ));
        }
        let mut modes: Vec<(f64, f64)> = frequencies.into_iter().zip(couplings).collect();
        modes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let tol = 1e-12 * modes.last().map_or(0.0, |m| m.0);
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(modes.len());
        for (w, c) in modes {
            match merged.last_mut() {
                Some(last) if w - last.0 < tol => last.1 = last.1.hypot(c),
                _ => merged.push((w, c)),
            }
        }
        let (frequencies, couplings) = merged.into_iter().unzip();
        Ok(DiscreteBath {
            frequencies,
            couplings,
            convention,
        })
    }

    pub fn empty() -> Self {
        DiscreteBath {
            frequencies: Vec::new(),
            couplings: Vec::new(),
            convention: CouplingConvention::Annihilation,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn convention(&self) -> CouplingConvention {
        self.convention
    }

    /// Weights `w_k` with `J(ω) = Σ w_k δ(ω−ω_k)`.
    pub fn spectral_weights(&self) -> Vec<f64> {
        self.frequencies
            .iter()
            .zip(&self.couplings)
            .map(|(&w, &c)| match self.convention {
                CouplingConvention::Annihilation => 2.0 * PI * c * c,
                CouplingConvention::Position { omega } => PI * c * c / (2.0 * omega * w),
            })
            .collect()
    }

    /// `∫ J dω` of the discrete bath.
    pub fn total_weight(&self) -> f64 {
        self.spectral_weights().iter().sum()
    }

    /// Sum of the weights of modes with `lo ≤ ω_k ≤ hi`.
    pub fn band_weight(&self, lo: f64, hi: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(self.spectral_weights())
            .filter(|(&w, _)| w >= lo && w <= hi)
            .map(|(_, s)| s)
            .sum()
    }

    /// Centered differences in the interior, one-sided at the ends. A single
    /// mode is assigned its own frequency as spacing.
    pub fn local_spacing(&self) -> Vec<f64> {
        let w = &self.frequencies;
        let n = w.len();
        match n {
            0 => Vec::new(),
            1 => vec![w[0]],
            _ => (0..n)
                .map(|k| match k {
                    0 => w[1] - w[0],
                    k if k == n - 1 => w[n - 1] - w[n - 2],
                    k => 0.5 * (w[k + 1] - w[k - 1]),
                })
                .collect(),
        }
    }

    /// Pairs `(ω_k, w_k/Δω_k)` sampling the spectral density the bath represents.
    pub fn reconstruct_density(&self) -> Vec<(f64, f64)> {
        self.frequencies
            .iter()
            .zip(self.spectral_weights())
            .zip(self.local_spacing())
            .map(|((&w, s), dw)| (w, s / dw))
            .collect()
    }

    /// Density `Σ w_k K(ω − ω_k)` with a unit-area hat kernel of half-width
    /// `width`. Merged baths interleave two grids, so pointwise
    /// reconstruction fails; a width of at least the coarser grid spacing
    /// recovers a smooth estimate.
    pub fn smoothed_density(&self, omegas: &[f64], width: f64) -> Vec<f64> {
        let weights = self.spectral_weights();
        omegas
            .iter()
            .map(|&w| {
                let lo = self.frequencies.partition_point(|&x| x <= w - width);
                let hi = self.frequencies.partition_point(|&x| x < w + width);
                (lo..hi)
                    .map(|k| weights[k] * (1.0 - (w - self.frequencies[k]).abs() / width).max(0.0))
                    .sum::<f64>()
                    / width
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        csv::write_header(w, &["index", "omega_k", "c_k"])?;
        for (k, (&om, &c)) in self.frequencies.iter().zip(&self.couplings).enumerate() {
            csv::write_row(
                w,
                &[k.to_string(), csv::format_float(om), csv::format_float(c)],
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R, convention: CouplingConvention) -> Result<Self> {
        let mut freqs = Vec::new();
        let mut coups = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::invalid("csv", e.to_string()))?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 3 {
                return Err(Error::invalid(
                    "csv",
                    format!("line {} has {} columns", i + 1, cells.len()),
                ));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid("csv", format!("line {}: {e}", i + 1)))
            };
            freqs.push(parse(cells[1])?);
            coups.push(parse(cells[2])?);
        }
        DiscreteBath::new(freqs, coups, convention)
    }
}

/// Sine-dispersion grid of a transmission line with `2N+1` sites:
/// `ω_n = ω_c sin(πn/(2N+1))`, `n = 1..=N`, with the analytic spacing `dω/dn`.
pub fn sine_grid(omega_c: f64, n_modes: usize) -> (Vec<f64>, Vec<f64>) {
    let dk = PI / (2 * n_modes + 1) as f64;
    (1..=n_modes)
        .map(|n| {
            let theta = dk * n as f64;
            (omega_c * theta.sin(), omega_c * dk * theta.cos())
        })
        .unzip()
}

fn check_discretization(alpha: f64, omega_c: f64, n_modes: usize) -> Result<()> {
    if n_modes == 0 {
        return Err(Error::invalid("n_modes", "must be at least 1"));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid("alpha", "must be finite and non-negative"));
    }
    if !(omega_c > 0.0 && omega_c.is_finite()) {
        return Err(Error::invalid("omega_c", "must be finite and positive"));
    }
    Ok(())
}

/// Ohmic qubit bath `J = παω` on the sine grid, `c_k² = J(ω_k)·Δω_k/(2π)`.
pub fn discretize_ohmic(alpha: f64, omega_c: f64, n_modes: usize) -> Result<DiscreteBath> {
    check_discretization(alpha, omega_c, n_modes)?;
    let (freqs, spacing) = sine_grid(omega_c, n_modes);
    let couplings = freqs
        .iter()
        .zip(&spacing)
        .map(|(&w, &dw)| (0.5 * alpha * w * dw).sqrt())
        .collect();
    DiscreteBath::new(freqs, couplings, CouplingConvention::Annihilation)
}

/// Caldeira–Leggett bath of the cavity with `J_cav = πα_cav ω`, position
/// couplings `c_k² = 2Ωα_cav ω_k² Δω_k`.
pub fn discretize_cavity_bath(
    alpha_cav: f64,
    omega: f64,
    omega_c: f64,
    n_modes: usize,
) -> Result<DiscreteBath> {
    check_discretization(alpha_cav, omega_c, n_modes)?;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid("omega", "must be finite and positive"));
    }
    let (freqs, spacing) = sine_grid(omega_c, n_modes);
    let couplings = freqs
        .iter()
        .zip(&spacing)
        .map(|(&w, &dw)| (2.0 * omega * alpha_cav * w * w * dw).sqrt())
        .collect();
    DiscreteBath::new(freqs, couplings, CouplingConvention::Position { omega })
}

/// Arrowhead matrix of the cavity plus its bath, including the counter-term:
/// `B₀₀ = Ω² + Σc_k²/ω_k²`, `B₀k = −c_k`, `B_kk = ω_k²`.
pub fn build_cl_matrix(omega: f64, bath: &DiscreteBath) -> DMatrix<f64> {
    let n = bath.n_modes();
    let mut b = DMatrix::zeros(n + 1, n + 1);
    let mut counter = 0.0;
    for (k, (&w, &c)) in bath.frequencies().iter().zip(bath.couplings()).enumerate() {
        counter += c * c / (w * w);
        b[(0, k + 1)] = -c;
        b[(k + 1, 0)] = -c;
        b[(k + 1, k + 1)] = w * w;
    }
    b[(0, 0)] = omega * omega + counter;
    b
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeDecomposition {
    /// `ω̂_j`, ascending.
    pub eigenfrequencies: Vec<f64>,
    /// Cavity row `U_{0j}` of the orthogonal transform.
    pub cavity_weights: Vec<f64>,
    /// Spin-boson couplings `g·U_{0j}·√(Ω/ω̂_j)`.
    pub effective_couplings: Vec<f64>,
}

impl NormalModeDecomposition {
    pub fn weight_sum(&self) -> f64 {
        self.cavity_weights.iter().map(|u| u * u).sum()
    }

    /// The normal modes as an annihilation-convention bath seen by the qubit.
    pub fn to_bath(&self) -> Result<DiscreteBath> {
        DiscreteBath::new(
            self.eigenfrequencies.clone(),
            self.effective_couplings.iter().map(|c| c.abs()).collect(),
            CouplingConvention::Annihilation,
        )
    }
}

pub fn diagonalize_cavity_bath(
    omega: f64,
    g: f64,
    bath: &DiscreteBath,
) -> Result<NormalModeDecomposition> {
    let b = build_cl_matrix(omega, bath);
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let smallest = eig.eigenvalues[order[0]];
    if !(smallest > 0.0) {
        return Err(Error::NotPositiveDefinite {
            eigenvalue: smallest,
        });
    }
    let eigenfrequencies: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j].sqrt()).collect();
    let cavity_weights: Vec<f64> = order.iter().map(|&j| eig.eigenvectors[(0, j)]).collect();
    let effective_couplings = cavity_weights
        .iter()
        .zip(&eigenfrequencies)
        .map(|(&u, &w)| g * u * (omega / w).sqrt())
        .collect();
    Ok(NormalModeDecomposition {
        eigenfrequencies,
        cavity_weights,
        effective_couplings,
    })
}

/// Largest relative deviation between `U_{0j}²` and the residue of the
/// cavity propagator, `2ω̂_j / (d g⁻¹/dω)` with
/// `d g⁻¹/dω = 2ω(1 + Σ c_k²/(ω²−ω_k²)²)`.
pub fn residue_identity_check(decomposition: &NormalModeDecomposition, bath: &DiscreteBath) -> f64 {
    decomposition
        .eigenfrequencies
        .iter()
        .zip(&decomposition.cavity_weights)
        .map(|(&wh, &u)| {
            let w2 = wh * wh;
            let sum: f64 = bath
                .frequencies()
                .iter()
                .zip(bath.couplings())
                .map(|(&wk, &c)| c * c / (w2 - wk * wk).powi(2))
                .sum();
            let residue = 1.0 / (1.0 + sum);
            let numeric = u * u;
            if residue == numeric {
                0.0
            } else {
                (numeric - residue).abs() / residue.abs().max(numeric.abs())
            }
        })
        .fold(0.0, f64::max)
}

/// Concatenates the qubit bath with the cavity normal modes. Modes with
/// vanishing coupling are dynamically inert and are dropped.
pub fn merge_baths(
    spin_bath: &DiscreteBath,
    decomposition: &NormalModeDecomposition,
) -> Result<DiscreteBath> {
    if spin_bath.convention() != CouplingConvention::Annihilation && !spin_bath.is_empty() {
        return Err(Error::invalid(
            "spin_bath",
            "couplings must use the annihilation convention",
        ));
    }
    let cavity = decomposition.to_bath()?;
    let (freqs, coups): (Vec<f64>, Vec<f64>) = spin_bath
        .frequencies()
        .iter()
        .zip(spin_bath.couplings())
        .chain(cavity.frequencies().iter().zip(cavity.couplings()))
        .filter(|(_, &c)| c != 0.0)
        .map(|(&w, &c)| (w, c))
        .unzip();
    DiscreteBath::new(freqs, coups, CouplingConvention::Annihilation)
}

/// The single spin-boson bath seen by the qubit: `N` Ohmic modes plus the
/// `N+1` normal modes of the cavity and its `N`-mode bath.
pub fn combined_bath(p: &ModelParams, n_modes: usize) -> Result<DiscreteBath> {
    p.validate()?;
    let spin = discretize_ohmic(p.alpha, p.omega_c, n_modes)?;
    let cavity = discretize_cavity_bath(p.alpha_cav, p.omega, p.omega_c, n_modes)?;
    let modes = diagonalize_cavity_bath(p.omega, p.g, &cavity)?;
    merge_baths(&spin, &modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_modes_rejected() {
        assert!(discretize_ohmic(0.1, 10.0, 0).is_err());
        assert!(discretize_cavity_bath(0.01, 1.0, 10.0, 0).is_err());
    }

    #[test]
    fn zero_strength_gives_zero_couplings() {
        assert!(discretize_ohmic(0.0, 10.0, 16)
            .unwrap()
            .couplings()
            .iter()
            .all(|&c| c == 0.0));
        assert!(discretize_cavity_bath(0.0, 1.0, 10.0, 16)
            .unwrap()
            .couplings()
            .iter()
            .all(|&c| c == 0.0));
    }

    #[test]
    fn grid_stays_below_cutoff_and_ascends() {
        let b = discretize_ohmic(0.1, 10.0, 64).unwrap();
        assert_eq!(b.n_modes(), 64);
        assert!(b.frequencies().windows(2).all(|w| w[0] < w[1]));
        assert!(*b.frequencies().last().unwrap() < 10.0);
    }

    #[test]
    fn cavity_coupling_spot_value() {
        // c² = 2Ωα_cav ω² Δω at ω = 1, Δω = 0.05
        let c2 = 2.0 * 1.0 * 0.01 * 1.0 * 0.05;
        assert_relative_eq!(c2, 0.001, max_relative = 1e-15);
        let b = discretize_cavity_bath(0.01, 1.0, 10.0, 128).unwrap();
        let (w, dw) = sine_grid(10.0, 128);
        for k in 0..128 {
            let expect = 2.0 * 0.01 * w[k] * w[k] * dw[k];
            assert_relative_eq!(b.couplings()[k].powi(2), expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn cl_matrix_examples() {
        let empty =
            DiscreteBath::new(vec![], vec![], CouplingConvention::Position { omega: 1.3 }).unwrap();
        let b = build_cl_matrix(1.3, &empty);
        assert_eq!(b.shape(), (1, 1));
        assert_relative_eq!(b[(0, 0)], 1.69, max_relative = 1e-15);

        let one = DiscreteBath::new(
            vec![2.0],
            vec![0.1],
            CouplingConvention::Position { omega: 1.0 },
        )
        .unwrap();
        let b = build_cl_matrix(1.0, &one);
        let expect = DMatrix::from_row_slice(2, 2, &[1.0025, -0.1, -0.1, 4.0]);
        assert!((b - expect).abs().max() < 1e-15);
    }

    #[test]
    fn empty_bath_leaves_cavity_untouched() {
        let empty = DiscreteBath::empty();
        let d = diagonalize_cavity_bath(1.2, 0.3, &empty).unwrap();
        assert_relative_eq!(d.eigenfrequencies[0], 1.2, max_relative = 1e-15);
        assert_relative_eq!(d.effective_couplings[0], 0.3, max_relative = 1e-15);
        assert_eq!(residue_identity_check(&d, &empty), 0.0);
        let merged = merge_baths(&DiscreteBath::empty(), &d).unwrap();
        assert_eq!(merged.frequencies(), &[1.2]);
        assert_relative_eq!(merged.couplings()[0], 0.3, max_relative = 1e-15);
    }

    #[test]
    fn residue_identity_two_by_two() {
        let bath = DiscreteBath::new(
            vec![2.0],
            vec![0.4],
            CouplingConvention::Position { omega: 1.0 },
        )
        .unwrap();
        let d = diagonalize_cavity_bath(1.0, 0.2, &bath).unwrap();
        assert!(residue_identity_check(&d, &bath) < 1e-10);
        // closed form: eigenvalues of [[a, -c], [-c, d]]
        let (a, c, dd): (f64, f64, f64) = (1.0 + 0.16 / 4.0, 0.4, 4.0);
        let mean = 0.5 * (a + dd);
        let split = (0.25 * (a - dd).powi(2) + c * c).sqrt();
        assert_relative_eq!(
            d.eigenfrequencies[0],
            (mean - split).sqrt(),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            d.eigenfrequencies[1],
            (mean + split).sqrt(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn decoupled_cavity_has_zero_effective_couplings() {
        let cav = discretize_cavity_bath(0.01, 1.0, 10.0, 32).unwrap();
        let d = diagonalize_cavity_bath(1.0, 0.0, &cav).unwrap();
        assert!(d.effective_couplings.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn merge_counts_and_drops_inert_modes() {
        let p = ModelParams::new(1.0, 1.0, 0.2, 0.1, 0.01, 10.0).unwrap();
        assert_eq!(combined_bath(&p, 32).unwrap().n_modes(), 65);
        let no_qubit_bath = ModelParams { alpha: 0.0, ..p };
        let cav = discretize_cavity_bath(0.01, 1.0, 10.0, 32).unwrap();
        let d = diagonalize_cavity_bath(1.0, 0.2, &cav).unwrap();
        let merged = combined_bath(&no_qubit_bath, 32).unwrap();
        assert_eq!(merged.frequencies(), d.to_bath().unwrap().frequencies());
    }

    #[test]
    fn degenerate_modes_merge_in_quadrature() {
        let b = DiscreteBath::new(
            vec![1.0, 2.0, 1.0],
            vec![0.3, 0.1, 0.4],
            CouplingConvention::Annihilation,
        )
        .unwrap();
        assert_eq!(b.frequencies(), &[1.0, 2.0]);
        assert_relative_eq!(b.couplings()[0], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn invalid_modes_rejected() {
        assert!(
            DiscreteBath::new(vec![1.0], vec![-0.1], CouplingConvention::Annihilation).is_err()
        );
        assert!(DiscreteBath::new(vec![0.0], vec![0.1], CouplingConvention::Annihilation).is_err());
        assert!(
            DiscreteBath::new(vec![1.0, 2.0], vec![0.1], CouplingConvention::Annihilation).is_err()
        );
    }

    #[test]
    fn csv_round_trip() {
        let b = discretize_ohmic(0.1, 10.0, 8).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        let back =
            DiscreteBath::read_csv(buf.as_slice(), CouplingConvention::Annihilation).unwrap();
        assert_eq!(back, b);
    }
}
