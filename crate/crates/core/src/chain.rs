//! Star-to-chain mapping of the polaron bath by Lanczos recursion.
//!
//! Starting from the collective mode `c₀ ∝ Σ f_k b_k`, the recursion on
//! `diag(ω_k)` yields on-site energies `α_i` and hoppings `β_i ≥ 0` of a
//! nearest-neighbour chain whose spectrum is that of the reachable bath modes.

use std::io::{self, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bath::DiscreteBath;
use crate::csv;
use crate::error::{Error, Result};
use crate::polaron::PolaronFrame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainHamiltonian {
    /// `θ = ‖f‖`.
    pub theta: f64,
    pub onsite: Vec<f64>,
    pub hopping: Vec<f64>,
}

impl ChainHamiltonian {
    pub fn n_sites(&self) -> usize {
        self.onsite.len()
    }

    /// Eigenvalues of the tridiagonal matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.n_sites();
        let mut t = DMatrix::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = self.onsite[i];
        }
        for (i, &b) in self.hopping.iter().enumerate() {
            t[(i, i + 1)] = b;
            t[(i + 1, i)] = b;
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        csv::write_header(w, &["i", "alpha_i", "beta_i"])?;
        for (i, &a) in self.onsite.iter().enumerate() {
            let b = self.hopping.get(i).copied().unwrap_or(f64::NAN);
            csv::write_row(
                w,
                &[i.to_string(), csv::format_float(a), csv::format_float(b)],
            )?;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn lanczos_chain_map(bath: &DiscreteBath, frame: &PolaronFrame) -> Result<ChainHamiltonian> {
    let w = bath.frequencies();
    let f = &frame.displacements;
    if f.len() != w.len() {
        return Err(Error::invalid(
            "frame",
            "displacement count differs from bath size",
        ));
    }
    let theta = dot(f, f).sqrt();
    if theta == 0.0 {
        return Err(Error::NoCollectiveMode);
    }
    let stop = 1e-13 * w.last().copied().unwrap_or(0.0);
    let mut basis: Vec<Vec<f64>> = vec![f.iter().map(|x| x / theta).collect()];
    let mut onsite = Vec::new();
    let mut hopping = Vec::new();
    for i in 0..w.len() {
        let v = &basis[i];
        let mut r: Vec<f64> = v.iter().zip(w).map(|(x, om)| x * om).collect();
        let a = dot(v, &r);
        onsite.push(a);
        // Two passes of Gram–Schmidt against the full basis.
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&r, &r).sqrt();
        if i + 1 == w.len() || b < stop {
            break;
        }
        hopping.push(b);
        basis.push(r.into_iter().map(|x| x / b).collect());
    }
    Ok(ChainHamiltonian {
        theta,
        onsite,
        hopping,
    })
}

/// Largest distance between a chain eigenvalue and the bath frequencies. For a
/// full-length chain the sorted spectra are compared pairwise; an early
/// terminated chain is compared against its nearest bath frequency.
pub fn chain_spectral_check(chain: &ChainHamiltonian, bath: &DiscreteBath) -> f64 {
    let ev = chain.eigenvalues();
    let w = bath.frequencies();
    if ev.len() == w.len() {
        ev.iter()
            .zip(w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    } else {
        ev.iter()
            .map(|e| {
                w.iter()
                    .map(|x| (x - e).abs())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}
