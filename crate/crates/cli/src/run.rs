//! Executes one configured experiment into an output directory.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use polaron_core::bath::DiscreteBath;
use polaron_core::csv::write_float_rows;
use polaron_core::dynamics::max_dpe_dt;
use polaron_core::experiments::{
    bath_check, delta_r_sweep, gamma_r, onset_scan, run_chain_map, run_dynamics, run_spectrum,
    SpectrumRequest,
};
use polaron_core::polaron::equilibrium_observables;
use polaron_core::spectral::{ohmic_j, peaked_j};
use polaron_core::{Execution, ModelParams};

use crate::config::{Experiment, RunConfig};
use crate::manifest::{Convergence, Derived, RunManifest, Stage};
use crate::{CliError, Provenance};

/// Scalars reported by a finished run, also used for sweep summaries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub derived: Derived,
    pub convergence: Convergence,
}

/// Decimal label for file names, e.g. `0.3`.
fn label(x: f64) -> String {
    format!("{x}")
}

pub fn run(cfg: &RunConfig, out: &Path, execution: Execution) -> Result<RunSummary, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut stage = Stage::new(out)?;
    let summary = match &cfg.experiment {
        Experiment::DeltaRSweep { parameter, values } => {
            let points = delta_r_sweep(
                &cfg.model,
                *parameter,
                values,
                cfg.numeric.n_modes,
                &cfg.numeric.fixed_point(),
                execution,
            )
            .stage("delta_r_sweep")?;
            stage.write("delta_r_sweep.csv", |w| {
                write_float_rows(
                    w,
                    &[
                        parameter.name(),
                        "delta_r_polaron",
                        "delta_r_arg",
                        "delta_r_continuum",
                        "localized",
                    ],
                    points.iter().map(|p| {
                        vec![
                            p.value,
                            p.delta_r_polaron,
                            p.delta_r_arg,
                            p.delta_r_continuum,
                            f64::from(u8::from(p.localized)),
                        ]
                    }),
                )
            })?;
            let mut derived = Derived::default();
            if let [p] = points.as_slice() {
                let q = parameter.apply(&cfg.model, p.value);
                derived.delta_r = Some(p.delta_r_polaron);
                derived.gamma_r = Some(gamma_r(&q, p.delta_r_polaron));
                derived.pe_eq = Some(equilibrium_observables(p.delta_r_polaron, q.delta).pe);
            }
            RunSummary {
                derived,
                convergence: Convergence {
                    converged: points.iter().all(|p| p.converged),
                    localized: points.iter().any(|p| p.localized),
                    ..Convergence::default()
                },
            }
        }
        Experiment::Dynamics { couplings, time } => {
            let gs = couplings.clone().unwrap_or_else(|| vec![cfg.model.g]);
            let opts = cfg.numeric.fixed_point();
            let runs = execution.map(&gs, |&g| {
                run_dynamics(
                    &ModelParams { g, ..cfg.model },
                    cfg.numeric.n_modes,
                    time,
                    &opts,
                )
            });
            let runs = runs
                .into_iter()
                .collect::<polaron_core::Result<Vec<_>>>()
                .stage("dynamics")?;
            let mut derived = Derived::default();
            let mut localized = false;
            for (g, r) in gs.iter().zip(&runs) {
                let name = format!("dynamics_g{}", label(*g));
                stage.write(&format!("{name}.csv"), |w| r.series.write_csv(w))?;
                stage.write(&format!("{name}_analytic.csv"), |w| {
                    write_float_rows(
                        w,
                        &["t", "pe_app"],
                        r.series
                            .times
                            .iter()
                            .zip(&r.analytic_pe_app)
                            .map(|(&t, &p)| vec![t, p]),
                    )
                })?;
                let dpe = max_dpe_dt(&r.series).stage("dynamics")?;
                localized |= r.delta_r < opts.localization_threshold * r.params.delta;
                if gs.len() == 1 {
                    derived.delta_r = Some(r.delta_r);
                    derived.gamma_r = Some(r.gamma_r);
                    derived.onset_g = Some(r.onset_g);
                    derived.pe_eq = Some(r.pe_eq);
                    derived.max_dpe_dt = Some(dpe);
                    derived
                        .extra
                        .insert("long_time_average".to_string(), r.long_time_average);
                } else {
                    let g = label(*g);
                    derived.extra.extend([
                        (format!("g={g}:delta_r"), r.delta_r),
                        (format!("g={g}:gamma_r"), r.gamma_r),
                        (format!("g={g}:onset_g"), r.onset_g),
                        (format!("g={g}:pe_eq"), r.pe_eq),
                        (format!("g={g}:max_dpe_dt"), dpe),
                        (format!("g={g}:long_time_average"), r.long_time_average),
                    ]);
                }
            }
            RunSummary {
                derived,
                convergence: Convergence {
                    converged: true,
                    localized,
                    ..Convergence::default()
                },
            }
        }
        Experiment::OnsetScan {
            alphas,
            g_values,
            dt,
        } => {
            let alphas = alphas.clone().unwrap_or_else(|| vec![cfg.model.alpha]);
            let gs = g_values.map_or_else(|| vec![cfg.model.g], |g| g.values());
            let mut derived = Derived::default();
            for &alpha in &alphas {
                let p = ModelParams { alpha, ..cfg.model };
                let scan = onset_scan(
                    &p,
                    &gs,
                    cfg.numeric.n_modes,
                    *dt,
                    &cfg.numeric.fixed_point(),
                    execution,
                )
                .stage("onset_scan")?;
                stage.write(&format!("onset_alpha{}.csv", label(alpha)), |w| {
                    write_float_rows(
                        w,
                        &["g", "max_dpe_dt", "g_threshold_prediction", "delta_r"],
                        scan.rows
                            .iter()
                            .map(|r| vec![r.g, r.max_dpe_dt, r.g_threshold_prediction, r.delta_r]),
                    )
                })?;
                let first = scan.first_oscillation_g(p.delta).unwrap_or(f64::NAN);
                if alphas.len() == 1 {
                    derived.onset_g = Some(scan.g_prediction);
                    derived
                        .extra
                        .insert("first_oscillation_g".to_string(), first);
                    derived.extra.insert("omega".to_string(), scan.omega);
                    if let [row] = scan.rows.as_slice() {
                        derived.delta_r = Some(row.delta_r);
                        derived.max_dpe_dt = Some(row.max_dpe_dt);
                        derived.pe_eq = Some(equilibrium_observables(row.delta_r, p.delta).pe);
                    }
                } else {
                    let a = label(alpha);
                    derived.extra.extend([
                        (format!("alpha={a}:onset_g"), scan.g_prediction),
                        (format!("alpha={a}:first_oscillation_g"), first),
                        (format!("alpha={a}:omega"), scan.omega),
                    ]);
                }
            }
            RunSummary {
                derived,
                convergence: Convergence {
                    converged: true,
                    ..Convergence::default()
                },
            }
        }
        Experiment::Spectrum {
            omega_grid,
            methods,
            resonant,
            denominator,
            broadening,
        } => {
            let omegas = omega_grid.values();
            let req = SpectrumRequest {
                omegas: &omegas,
                methods,
                resonant: *resonant,
                denominator: *denominator,
                broadening: *broadening,
                execution,
            };
            let run = run_spectrum(
                &cfg.model,
                cfg.numeric.n_modes,
                &req,
                &cfg.numeric.fixed_point(),
            )
            .stage("spectrum")?;
            for r in &run.results {
                stage.write(&format!("spectrum_{}.csv", r.method), |w| r.write_csv(w))?;
            }
            RunSummary {
                derived: Derived {
                    delta_r: Some(run.delta_r),
                    gamma_r: Some(gamma_r(&run.params, run.delta_r)),
                    pe_eq: Some(equilibrium_observables(run.delta_r, run.params.delta).pe),
                    extra: BTreeMap::from([("omega".to_string(), run.params.omega)]),
                    ..Derived::default()
                },
                convergence: Convergence {
                    converged: true,
                    ..Convergence::default()
                },
            }
        }
        Experiment::BathCheck => {
            let p = &cfg.model;
            let check = bath_check(p, cfg.numeric.n_modes).stage("bath_check")?;
            let baths: [(&str, &Option<DiscreteBath>, &dyn Fn(f64) -> f64); 3] = [
                ("qubit", &check.ohmic, &|w| ohmic_j(w, p)),
                ("cavity_bath", &check.cavity_bath, &|w| {
                    ohmic_j(
                        w,
                        &ModelParams {
                            alpha: p.alpha_cav,
                            ..*p
                        },
                    )
                }),
                ("modes", &check.effective, &|w| peaked_j(w, p)),
            ];
            for (name, bath, target) in baths {
                let Some(bath) = bath else { continue };
                stage.write(&format!("bath_{name}.csv"), |w| bath.write_csv(w))?;
                stage.write(&format!("density_{name}.csv"), |w| {
                    write_float_rows(
                        w,
                        &["omega", "j_discrete", "j_target"],
                        bath.reconstruct_density()
                            .into_iter()
                            .map(|(om, j)| vec![om, j, target(om)]),
                    )
                })?;
            }
            RunSummary {
                derived: Derived {
                    extra: BTreeMap::from([
                        ("ohmic_deviation".to_string(), check.ohmic_deviation),
                        (
                            "cavity_bath_deviation".to_string(),
                            check.cavity_bath_deviation,
                        ),
                        ("effective_deviation".to_string(), check.effective_deviation),
                        (
                            "resonance_weight_error".to_string(),
                            check.resonance_weight_error,
                        ),
                        ("sum_rule_error".to_string(), check.sum_rule_error),
                        ("residue_deviation".to_string(), check.residue_deviation),
                        ("orthogonality_error".to_string(), check.orthogonality_error),
                        ("peak_offset".to_string(), check.peak_offset),
                        ("peak_spacing".to_string(), check.peak_spacing),
                    ]),
                    ..Derived::default()
                },
                convergence: Convergence {
                    converged: true,
                    ..Convergence::default()
                },
            }
        }
        Experiment::ChainMap => {
            let run = run_chain_map(&cfg.model, cfg.numeric.n_modes, &cfg.numeric.fixed_point())
                .stage("chain_map")?;
            stage.write("chain.csv", |w| run.chain.write_csv(w))?;
            let frame = &run.solved.frame;
            RunSummary {
                derived: Derived {
                    delta_r: Some(frame.delta_r),
                    gamma_r: Some(gamma_r(&cfg.model, frame.delta_r)),
                    pe_eq: Some(equilibrium_observables(frame.delta_r, cfg.model.delta).pe),
                    extra: BTreeMap::from([
                        ("theta".to_string(), run.chain.theta),
                        ("spectral_deviation".to_string(), run.spectral_deviation),
                        (
                            "weighted_mean_frequency".to_string(),
                            run.weighted_mean_frequency,
                        ),
                    ]),
                    ..Derived::default()
                },
                convergence: Convergence {
                    converged: frame.converged,
                    localized: frame.localized,
                    residual: Some(frame.residual),
                    iterations: Some(frame.iterations),
                },
            }
        }
    };
    stage.commit(RunManifest {
        experiment: cfg.experiment.name().to_string(),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        derived: summary.derived.clone(),
        convergence: summary.convergence.clone(),
        files: Vec::new(),
    })?;
    Ok(summary)
}
