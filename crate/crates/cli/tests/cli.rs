use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polaron_cli::figures::{figure_configs, render};
use serde_json::{json, Value};

fn polaron(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polaron"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn model() -> Value {
    json!({"delta": 1.0, "omega": 1.0, "g": 0.2, "alpha": 0.1, "alpha_cav": 0.01, "omega_c": 10.0})
}

fn run_ok(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![
        sub,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend(extra);
    let o = polaron(&args);
    assert!(
        o.status.success(),
        "{sub} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

/// Relative path -> bytes for every file below `dir`, manifests excluded.
fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn zero_modes_is_a_config_error_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({"experiment": "chain_map", "model": model(), "numeric": {"n_modes": 0}}),
    );
    let out = tmp.path().join("out");
    let o = polaron(&[
        "chainmap",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numeric.n_modes"));
    assert!(!out.exists());
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_model = write_config(
        tmp.path(),
        "m.json",
        &json!({"experiment": "chain_map", "model": {"delta": -1.0, "omega": 1.0, "g": 0.2, "alpha": 0.1, "alpha_cav": 0.01, "omega_c": 10.0}, "numeric": {"n_modes": 8}}),
    );
    let missing = write_config(
        tmp.path(),
        "x.json",
        &json!({"experiment": "spectrum", "model": model(), "numeric": {"n_modes": 8}}),
    );
    let o = polaron(&[
        "chainmap",
        "--config",
        bad_model.to_str().unwrap(),
        "--out",
        "unused",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.delta"));
    let o = polaron(&[
        "spectrum",
        "--config",
        missing.to_str().unwrap(),
        "--out",
        "unused",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("omega_grid"));
    // Subcommand and experiment disagree.
    let o = polaron(&["deltar", "--config", bad_model.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = polaron(&["--jobs", "0", "chainmap"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_exits_with_three_and_leaves_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({"experiment": "chain_map", "model": model(), "numeric": {"n_modes": 16, "max_iterations": 1}}),
    );
    let out = tmp.path().join("out");
    let o = polaron(&[
        "chainmap",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("chain_map"));
    assert_eq!(fs::read_dir(&out).unwrap().count(), 0);
}

#[test]
fn chain_run_writes_csv_and_complete_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({"experiment": "chain_map", "model": model(), "numeric": {"n_modes": 32}}),
    );
    let out = tmp.path().join("out");
    run_ok("chainmap", &cfg, &out, &[]);
    let m = manifest(&out);
    assert_eq!(m["experiment"], "chain_map");
    assert_eq!(m["files"], json!(["chain.csv"]));
    assert_eq!(m["config"]["numeric"]["n_modes"], 32);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["derived"]["extra"]["theta"].as_f64().unwrap() > 0.0);
    let dr = m["derived"]["delta_r"].as_f64().unwrap();
    let pe = m["derived"]["pe_eq"].as_f64().unwrap();
    assert!((pe - 0.5 * (1.0 - dr)).abs() < 1e-15);
    assert_eq!(m["convergence"]["converged"], true);

    let csv = fs::read_to_string(out.join("chain.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("i,alpha_i,beta_i"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    // 17 significant digits: one leading digit and 16 decimals.
    let mantissa = row[1].split('e').next().unwrap();
    assert_eq!(mantissa.trim_start_matches('-').len(), 18, "{mantissa}");
}

#[test]
fn every_data_file_belongs_to_exactly_one_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let base = json!({
        "experiment": "dynamics",
        "model": model(),
        "numeric": {"n_modes": 16},
        "time": {"t_max": 5.0, "dt": 0.5}
    });
    let cfg = write_config(
        tmp.path(),
        "s.json",
        &json!({"base": base, "grid": [{"parameter": "g", "values": [0.1, 0.2]}, {"parameter": "alpha", "values": [0.05]}]}),
    );
    let out = tmp.path().join("out");
    run_ok("sweep", &cfg, &out, &[]);

    let mut referenced: BTreeMap<String, usize> = BTreeMap::new();
    let mut stack = vec![out.clone()];
    while let Some(d) = stack.pop() {
        if d.join("manifest.json").exists() {
            let m = manifest(&d);
            for f in m["files"].as_array().unwrap() {
                let rel = d.join(f.as_str().unwrap());
                let rel = rel.strip_prefix(&out).unwrap().display().to_string();
                *referenced.entry(rel).or_default() += 1;
            }
        }
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            }
        }
    }
    let files: Vec<String> = data_files(&out).into_keys().collect();
    assert_eq!(files.len(), 1 + 2 * 2);
    for f in &files {
        assert_eq!(referenced.get(f), Some(&1), "{f}");
    }
    assert_eq!(referenced.len(), files.len());
}

#[test]
fn sweep_is_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let base = json!({
        "experiment": "delta_r_sweep",
        "model": model(),
        "numeric": {"n_modes": 24},
        "parameter": "alpha",
        "values": [0.05, 0.1]
    });
    // Axis values deliberately unsorted.
    let cfg = write_config(
        tmp.path(),
        "s.json",
        &json!({"base": base, "grid": [{"parameter": "g", "values": [0.3, 0.1, 0.2]}, {"parameter": "alpha_cav", "values": [0.02, 0.01]}]}),
    );
    let one = tmp.path().join("one");
    let four = tmp.path().join("four");
    run_ok("sweep", &cfg, &one, &["--jobs", "1"]);
    run_ok("sweep", &cfg, &four, &["--jobs", "4"]);
    let a = data_files(&one);
    assert_eq!(a, data_files(&four));

    let summary = String::from_utf8(a["summary.csv"].clone()).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("point,g,alpha_cav,status,delta_r,gamma_r,onset_g,pe_eq,max_dpe_dt")
    );
    let coords: Vec<(f64, f64)> = lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            assert_eq!(c[3], "ok");
            (c[1].parse().unwrap(), c[2].parse().unwrap())
        })
        .collect();
    assert_eq!(coords.len(), 6);
    let mut sorted = coords.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(coords, sorted);
}

#[test]
fn rerunning_reproduces_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "s.json",
        &json!({
            "experiment": "spectrum",
            "model": model(),
            "numeric": {"n_modes": 32},
            "omega_grid": {"min": 0.5, "max": 1.5, "points": 21},
            "methods": ["exact_kernel", "discrete_kernel", "markov", "good_cavity"]
        }),
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_ok("spectrum", &cfg, &a, &[]);
    run_ok("spectrum", &cfg, &b, &["--jobs", "2"]);
    let fa = data_files(&a);
    assert_eq!(fa.len(), 4);
    assert_eq!(fa, data_files(&b));
    let text = String::from_utf8(fa["spectrum_markov.csv"].clone()).unwrap();
    assert_eq!(text.lines().next(), Some("omega,S,R,Gamma,method"));
    assert_eq!(text.lines().count(), 22);
}

#[test]
fn failed_points_are_recorded_without_aborting() {
    let tmp = tempfile::tempdir().unwrap();
    let base = json!({"experiment": "chain_map", "model": model(), "numeric": {"n_modes": 16}});
    // Negative g is invalid, so that point fails while the others run.
    let cfg = write_config(
        tmp.path(),
        "s.json",
        &json!({"base": base, "grid": [{"parameter": "g", "values": [0.1, -0.1, 0.2]}]}),
    );
    let out = tmp.path().join("out");
    run_ok("sweep", &cfg, &out, &[]);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let status: Vec<&str> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(status, ["failed", "ok", "ok"]);
    let m = manifest(&out);
    let points = m["points"].as_array().unwrap();
    assert!(points[0]["error"].as_str().unwrap().contains("model.g"));
    assert!(points[1].get("error").is_none());
    assert!(!out.join("point_0000").join("manifest.json").exists());
}

#[test]
fn empty_grid_gives_empty_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let base = json!({"experiment": "chain_map", "model": model(), "numeric": {"n_modes": 16}});
    let cfg = write_config(
        tmp.path(),
        "s.json",
        &json!({"base": base, "grid": [{"parameter": "g", "values": []}]}),
    );
    let out = tmp.path().join("out");
    run_ok("sweep", &cfg, &out, &[]);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
    assert_eq!(manifest(&out)["points"], json!([]));
}

#[test]
fn one_point_grid_matches_a_plain_run() {
    let tmp = tempfile::tempdir().unwrap();
    let base = json!({
        "experiment": "onset_scan",
        "model": model(),
        "numeric": {"n_modes": 16},
        "dt": 0.5
    });
    let run_cfg = write_config(tmp.path(), "r.json", &base);
    let sweep_cfg = write_config(
        tmp.path(),
        "s.json",
        &json!({"base": base, "grid": [{"parameter": "g", "values": [0.2]}]}),
    );
    let r = tmp.path().join("r");
    let s = tmp.path().join("s");
    run_ok("onset", &run_cfg, &r, &[]);
    run_ok("sweep", &sweep_cfg, &s, &[]);
    assert_eq!(data_files(&r), data_files(&s.join("point_0000")));
    let m = manifest(&r);
    let summary = fs::read_to_string(s.join("summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let dpe: f64 = row[7].parse().unwrap();
    assert_eq!(dpe, m["derived"]["max_dpe_dt"].as_f64().unwrap());
    assert_eq!(
        row[5].parse::<f64>().unwrap(),
        m["derived"]["onset_g"].as_f64().unwrap()
    );
}

#[test]
fn shipped_figure_configs_match_seed_output() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let configs = figure_configs();
    assert!(configs.len() >= 10);
    for (name, value) in &configs {
        let shipped =
            fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("{name} missing"));
        assert_eq!(shipped, render(value), "{name} differs from --seed-figures");
    }
    let shipped = fs::read_dir(&dir).unwrap().count();
    assert_eq!(shipped, configs.len());

    let tmp = tempfile::tempdir().unwrap();
    let o = polaron(&["--seed-figures", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    for (name, value) in &configs {
        assert_eq!(
            fs::read_to_string(tmp.path().join(name)).unwrap(),
            render(value)
        );
    }
}

#[test]
fn shipped_figure_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    for (name, value) in figure_configs() {
        let path = dir.join(name);
        if value.get("grid").is_some() {
            polaron_cli::config::SweepConfig::load(&path).unwrap();
        } else {
            polaron_cli::config::RunConfig::load(&path).unwrap();
        }
    }
}
