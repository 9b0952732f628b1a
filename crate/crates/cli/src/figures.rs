//! Configurations reproducing the published figures.

use std::fs;
use std::path::Path;

use polaron_core::experiments::{SweepParameter, TimeGrid};
use polaron_core::spectrum::{linspace, Broadening, Denominator, SpectrumMethod};
use polaron_core::ModelParams;
use serde_json::Value;

use crate::config::{Experiment, GridAxis, ModelField, Numeric, RunConfig, SweepConfig, ValueGrid};
use crate::CliError;

fn model(omega: f64, g: f64, alpha: f64, alpha_cav: f64) -> ModelParams {
    ModelParams {
        delta: 1.0,
        omega,
        g,
        alpha,
        alpha_cav,
        omega_c: 10.0,
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("configs serialize")
}

fn delta_r(parameter: SweepParameter, values: Vec<f64>, p: ModelParams) -> RunConfig {
    RunConfig {
        experiment: Experiment::DeltaRSweep { parameter, values },
        model: p,
        numeric: Numeric::new(256),
        output_dir: None,
    }
}

/// `(file name, config)` for every figure, in figure order.
pub fn figure_configs() -> Vec<(&'static str, Value)> {
    let alphas = linspace(0.0, 0.6, 31);
    let couplings = linspace(0.0, 0.6, 31);
    let fig3_model = model(0.68, 0.3, 0.1, 0.01);
    let onset = RunConfig {
        experiment: Experiment::OnsetScan {
            alphas: Some(vec![0.1, 0.2, 0.3]),
            g_values: Some(ValueGrid {
                min: 0.0,
                max: 0.3,
                points: 61,
            }),
            dt: 0.05,
        },
        model: model(1.0, 0.0, 0.1, 0.01),
        numeric: Numeric::new(256),
        output_dir: None,
    };
    let onset_sweep = SweepConfig {
        base: RunConfig {
            experiment: Experiment::OnsetScan {
                alphas: None,
                g_values: None,
                dt: 0.05,
            },
            ..onset.clone()
        },
        grid: vec![
            GridAxis {
                parameter: ModelField::G,
                values: linspace(0.0, 0.3, 61),
            },
            GridAxis {
                parameter: ModelField::Alpha,
                values: vec![0.1, 0.2, 0.3],
            },
        ],
        output_dir: None,
    };
    vec![
        (
            "fig2a.json",
            to_value(&delta_r(
                SweepParameter::Alpha,
                alphas.clone(),
                model(1.0, 0.2, 0.0, 0.01),
            )),
        ),
        (
            "fig2a_inset.json",
            to_value(&delta_r(
                SweepParameter::G,
                couplings.clone(),
                model(1.0, 0.0, 0.1, 0.01),
            )),
        ),
        (
            "fig2a_chain.json",
            to_value(&RunConfig {
                experiment: Experiment::ChainMap,
                model: model(1.0, 0.2, 0.1, 0.01),
                numeric: Numeric::new(256),
                output_dir: None,
            }),
        ),
        (
            "fig2b.json",
            to_value(&delta_r(
                SweepParameter::Alpha,
                alphas.clone(),
                model(1.0, 0.4, 0.0, 0.8),
            )),
        ),
        (
            "fig2b_inset.json",
            to_value(&delta_r(
                SweepParameter::Alpha,
                alphas,
                model(1.0, 0.6, 0.0, 1.5),
            )),
        ),
        (
            "fig3a.json",
            to_value(&SweepConfig {
                base: RunConfig {
                    experiment: Experiment::Dynamics {
                        couplings: None,
                        time: TimeGrid {
                            t_max: 100.0,
                            dt: 0.1,
                        },
                    },
                    model: fig3_model,
                    numeric: Numeric::new(512),
                    output_dir: None,
                },
                grid: vec![GridAxis {
                    parameter: ModelField::G,
                    values: couplings,
                }],
                output_dir: None,
            }),
        ),
        (
            "fig3b.json",
            to_value(&RunConfig {
                experiment: Experiment::Dynamics {
                    couplings: Some(vec![0.05, 0.3, 0.6]),
                    time: TimeGrid {
                        t_max: 100.0,
                        dt: 0.05,
                    },
                },
                model: fig3_model,
                numeric: Numeric::new(512),
                output_dir: None,
            }),
        ),
        ("fig4.json", to_value(&onset)),
        ("fig4_sweep.json", to_value(&onset_sweep)),
        (
            "fig5.json",
            to_value(&RunConfig {
                experiment: Experiment::Spectrum {
                    omega_grid: ValueGrid {
                        min: 0.05,
                        max: 1.6,
                        points: 3101,
                    },
                    methods: SpectrumMethod::ALL.to_vec(),
                    resonant: true,
                    denominator: Denominator::Linear,
                    broadening: Broadening::LocalSpacing,
                },
                model: fig3_model,
                numeric: Numeric::new(256),
                output_dir: None,
            }),
        ),
        (
            "fig6.json",
            to_value(&RunConfig {
                experiment: Experiment::BathCheck,
                model: model(1.0, 0.2, 0.1, 0.01),
                numeric: Numeric::new(128),
                output_dir: None,
            }),
        ),
        (
            "fig7.json",
            to_value(&RunConfig {
                experiment: Experiment::BathCheck,
                model: model(1.0, 0.2, 0.1, 0.01 / std::f64::consts::PI),
                numeric: Numeric::new(128),
                output_dir: None,
            }),
        ),
    ]
}

/// Pretty JSON text of a figure config, as written by `--seed-figures`.
pub fn render(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("values serialize");
    s.push('\n');
    s
}

pub fn write_figures(dir: &Path) -> Result<Vec<String>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut names = Vec::new();
    for (name, value) in figure_configs() {
        let path = dir.join(name);
        fs::write(&path, render(&value)).map_err(|e| CliError::io(&path, e))?;
        names.push(name.to_string());
    }
    Ok(names)
}
