//! Grid sweeps: every point is an independent run in its own directory,
//! executed on the current worker pool and summarized in grid order.

use std::path::Path;
use std::time::Instant;

use polaron_core::csv::{format_float, write_header, write_row};
use polaron_core::Execution;
use serde::Serialize;

use crate::config::SweepConfig;
use crate::manifest::{write_json_atomic, Stage, MANIFEST_NAME};
use crate::run::{run, RunSummary};
use crate::CliError;

pub const SUMMARY_NAME: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub coordinates: Vec<f64>,
    pub dir: String,
    pub outcome: Result<RunSummary, String>,
}

#[derive(Debug, Serialize)]
struct PointEntry<'a> {
    dir: &'a str,
    coordinates: &'a [f64],
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

#[derive(Debug, Serialize)]
struct SweepManifest<'a> {
    experiment: &'static str,
    version: &'static str,
    config: &'a SweepConfig,
    wall_time_seconds: f64,
    parameters: Vec<&'static str>,
    points: Vec<PointEntry<'a>>,
    files: Vec<String>,
}

/// Cartesian product of the axes, sorted lexicographically by coordinate.
pub fn grid_points(cfg: &SweepConfig) -> Vec<Vec<f64>> {
    if cfg.grid.is_empty() {
        return Vec::new();
    }
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &cfg.grid {
        points = points
            .iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    points
}

fn run_point(cfg: &SweepConfig, coords: &[f64], out: &Path) -> Result<RunSummary, String> {
    let mut point = cfg.base.clone();
    point.output_dir = None;
    for (axis, &v) in cfg.grid.iter().zip(coords) {
        axis.parameter.apply(&mut point, v);
    }
    run(&point, out, Execution::Sequential).map_err(|e| e.to_string())
}

/// Runs every grid point on the current rayon pool. Point failures are
/// recorded in the summary; only configuration and I/O problems of the sweep
/// itself are returned as errors.
pub fn sweep(cfg: &SweepConfig, out: &Path) -> Result<Vec<PointResult>, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut stage = Stage::new(out)?;
    let points = grid_points(cfg);
    let width = points.len().to_string().len().max(4);
    let dirs: Vec<String> = (0..points.len())
        .map(|i| format!("point_{i:0width$}"))
        .collect();
    let jobs: Vec<(&Vec<f64>, &String)> = points.iter().zip(&dirs).collect();
    let outcomes = Execution::Parallel.map(&jobs, |(coords, dir)| {
        run_point(cfg, coords, &out.join(dir))
    });
    let results: Vec<PointResult> = points
        .iter()
        .zip(dirs)
        .zip(outcomes)
        .map(|((c, dir), outcome)| PointResult {
            coordinates: c.clone(),
            dir,
            outcome,
        })
        .collect();

    let names: Vec<&'static str> = cfg.grid.iter().map(|a| a.parameter.name()).collect();
    stage.write(SUMMARY_NAME, |w| {
        let mut header = vec!["point"];
        header.extend(&names);
        header.extend([
            "status",
            "delta_r",
            "gamma_r",
            "onset_g",
            "pe_eq",
            "max_dpe_dt",
        ]);
        write_header(w, &header)?;
        for r in &results {
            let mut cells = vec![r.dir.clone()];
            cells.extend(r.coordinates.iter().map(|&v| format_float(v)));
            let d = r.outcome.as_ref().ok().map(|s| &s.derived);
            cells.push(if d.is_some() { "ok" } else { "failed" }.to_string());
            for f in [
                d.and_then(|d| d.delta_r),
                d.and_then(|d| d.gamma_r),
                d.and_then(|d| d.onset_g),
                d.and_then(|d| d.pe_eq),
                d.and_then(|d| d.max_dpe_dt),
            ] {
                cells.push(format_float(f.unwrap_or(f64::NAN)));
            }
            write_row(w, &cells)?;
        }
        Ok(())
    })?;

    let entries = results
        .iter()
        .map(|r| PointEntry {
            dir: &r.dir,
            coordinates: &r.coordinates,
            status: if r.outcome.is_ok() { "ok" } else { "failed" },
            error: r.outcome.as_ref().err().map(String::as_str),
        })
        .collect();
    let manifest = SweepManifest {
        experiment: "sweep",
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        parameters: names,
        points: entries,
        files: vec![SUMMARY_NAME.to_string()],
    };
    stage.commit_with(|out| write_json_atomic(&out.join(MANIFEST_NAME), &manifest))?;
    Ok(results)
}
