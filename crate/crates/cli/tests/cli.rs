//! End-to-end harness tests: file round trips, determinism, ingestion and
//! exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use tempfile::TempDir;

use iht_bench::commands;
use iht_bench::config::ExperimentConfig;
use iht_bench::csvio::format_f64;
use iht_bench::runner;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iht-bench"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, json).unwrap();
    path
}

const SMALL_LINEAR: &str = r#"{
    "name": "small-linear",
    "gen": {"dim": 100, "s_star": 10, "samples": {"alpha": 5.0},
            "omega": 0.5, "noise_var": 0.25, "model": "linear", "seed": 11},
    "budget": 20,
    "runs": [
        {"label": "sparse-polyak",
         "solver": {"budget": 20, "f_target": "oracle", "max_iters": 80,
                    "step_rule": {"rule": "sparse-polyak"}}},
        {"label": "fixed-theory",
         "solver": {"budget": 20, "f_target": 0.0, "max_iters": 80,
                    "step_rule": {"rule": "fixed", "gamma": "theory"}}}
    ],
    "repeats": 2
}"#;

#[test]
fn generate_is_byte_deterministic() {
    let dir_a = TempDir::new().unwrap();
    let dir_b = TempDir::new().unwrap();
    let cfg = write_config(dir_a.path(), "cfg.json", SMALL_LINEAR);
    for out in [dir_a.path().join("out"), dir_b.path().join("out")] {
        let status = bin()
            .args(["generate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for file in ["design.csv", "responses.csv", "theta_star.csv", "manifest.json"] {
        let a = fs::read(dir_a.path().join("out").join(file)).unwrap();
        let b = fs::read(dir_b.path().join("out").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }
}

#[test]
fn manifest_records_alpha_sized_sample_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SMALL_LINEAR);
    let out = dir.path().join("out");
    assert!(bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let expect = (5.0 * 20.0 * (100.0f64).ln()).ceil() as u64;
    assert_eq!(manifest["n"].as_u64().unwrap(), expect);
    assert_eq!(manifest["budget"].as_u64().unwrap(), 20);
    assert!(manifest["f_star"].is_number());
}

#[test]
fn schema_violation_names_the_field_and_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = SMALL_LINEAR.replace(r#""s_star": 10"#, r#""s_star": 200"#);
    let cfg = write_config(dir.path(), "cfg.json", &bad);
    let out = bin()
        .args(["generate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("s_star"), "{stderr}");
}

#[test]
fn missing_config_field_is_named() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", r#"{"name": "x"}"#);
    let out = bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("runs"));
}

#[test]
fn solve_on_files_matches_in_memory_bitwise() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write_config(dir.path(), "cfg.json", SMALL_LINEAR);
    let config = ExperimentConfig::load(&cfg_path).unwrap();

    // In-memory route: single repeat of the same seed.
    let mut one_shot = config.clone();
    one_shot.repeats = 1;
    let memory_rows = commands::solve::collect_rows(&one_shot, 0).unwrap();

    // File route: generate then solve on the persisted instance.
    let inst_dir = dir.path().join("inst");
    commands::generate::run(&config, &inst_dir, 0).unwrap();
    let mut from_files = config.clone();
    from_files.gen = None;
    from_files.repeats = 1;
    from_files.instance = Some(inst_dir.join("manifest.json").display().to_string());
    let file_rows = commands::solve::collect_rows(&from_files, 0).unwrap();

    assert_eq!(memory_rows.len(), file_rows.len());
    for (a, b) in memory_rows.iter().zip(&file_rows) {
        assert_eq!(a.label, b.label);
        assert_eq!((a.seed, a.t), (b.seed, b.t));
        assert_eq!(a.f.to_bits(), b.f.to_bits(), "f at t={}", a.t);
        assert_eq!(a.gamma.to_bits(), b.gamma.to_bits());
        assert_eq!(
            a.grad_ht_norm_sq.to_bits(),
            b.grad_ht_norm_sq.to_bits()
        );
        assert_eq!(
            a.err_sq_to_star.unwrap().to_bits(),
            b.err_sq_to_star.unwrap().to_bits()
        );
        assert_eq!((a.tp, a.fp, a.fn_), (b.tp, b.fp, b.fn_));
    }
}

#[test]
fn stalled_run_emits_exactly_one_row() {
    // Target the starting value: the step clamps to zero immediately.
    let dir = TempDir::new().unwrap();
    let json = r#"{
        "name": "stall",
        "gen": {"dim": 40, "s_star": 4, "samples": {"n": 60},
                "omega": 0.5, "noise_var": 0.25, "model": "linear", "seed": 5},
        "budget": 8,
        "runs": [{"label": "sparse-polyak",
                  "solver": {"budget": 8, "f_target": 1e12, "max_iters": 50,
                             "step_rule": {"rule": "sparse-polyak"}}}]
    }"#;
    let cfg = write_config(dir.path(), "cfg.json", json);
    let out = dir.path().join("out");
    assert!(bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 2, "header plus one stalled row:\n{trace}");
    assert!(lines[0].starts_with("label,seed,t,f,gamma,"));
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells[2], "0");
    assert_eq!(cells[4].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn two_labels_partition_the_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SMALL_LINEAR);
    let out = dir.path().join("out");
    assert!(bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut labels: Vec<&str> = trace
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    labels.dedup();
    // Sorted by label then seed: each label appears in one contiguous block
    // per seed.
    assert_eq!(labels, vec!["fixed-theory", "sparse-polyak"]);
}

#[test]
fn noiseless_fixed_step_run_reaches_machine_zero() {
    let dir = TempDir::new().unwrap();
    let json = r#"{
        "name": "noiseless",
        "gen": {"dim": 30, "s_star": 3, "samples": {"n": 120},
                "omega": 0.5, "noise_var": 0.0, "model": "linear", "seed": 7},
        "budget": 6,
        "runs": [{"label": "fixed-theory",
                  "solver": {"budget": 6, "f_target": 0.0, "max_iters": 4000,
                             "tol_f": 1e-21,
                             "step_rule": {"rule": "fixed", "gamma": 0.2}}}]
    }"#;
    let cfg = write_config(dir.path(), "cfg.json", json);
    let out = dir.path().join("out");
    assert!(bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let last = trace.lines().last().unwrap();
    let f: f64 = last.split(',').nth(3).unwrap().parse().unwrap();
    assert!(f <= 1e-20, "final objective {f}");
}

#[test]
fn ingest_accepts_paper_sized_real_data() {
    // 120 samples, 149 features.
    let dir = TempDir::new().unwrap();
    let mut rng = iht_core::rng::Xoshiro256PlusPlus::seed_from_u64(1);
    let mut design = String::new();
    for _ in 0..120 {
        let row: Vec<String> = (0..149).map(|_| format_f64(rng.next_normal())).collect();
        design.push_str(&row.join(","));
        design.push('\n');
    }
    let mut responses = String::from("y\n");
    for _ in 0..120 {
        responses.push_str(&format_f64(rng.next_normal()));
        responses.push('\n');
    }
    let design_path = dir.path().join("design.csv");
    let responses_path = dir.path().join("responses.csv");
    fs::write(&design_path, design).unwrap();
    fs::write(&responses_path, responses).unwrap();

    let out = dir.path().join("out");
    assert!(bin()
        .args(["ingest", "--design"])
        .arg(&design_path)
        .arg("--responses")
        .arg(&responses_path)
        .args(["--model", "linear", "--out"])
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["n"].as_u64().unwrap(), 120);
    assert_eq!(manifest["ambient_dim"].as_u64().unwrap(), 149);
    assert!(manifest.get("f_star").is_none());

    // Solving the ingested instance works and omits truth columns.
    let solve_json = format!(
        r#"{{
            "name": "real",
            "instance": "{}",
            "runs": [{{"label": "adaptive-bound",
                      "adaptive": {{"budget": 20, "f_lower": 0.0,
                                    "inner_iters": 10, "outer_epochs": 2}}}}]
        }}"#,
        out.join("manifest.json").display()
    );
    let cfg = write_config(dir.path(), "solve.json", &solve_json);
    let solve_out = dir.path().join("solve-out");
    assert!(bin()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&solve_out)
        .status()
        .unwrap()
        .success());
    let trace = fs::read_to_string(solve_out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("label,seed,t,f,gamma,grad_ht_norm_sq,support_size\n"));
}

#[test]
fn ingest_rejects_bad_cells_and_labels() {
    let dir = TempDir::new().unwrap();
    let design_path = dir.path().join("design.csv");
    let responses_path = dir.path().join("responses.csv");

    fs::write(&design_path, "1.0,2.0\n3.0,zap\n").unwrap();
    fs::write(&responses_path, "1.0\n0.0\n").unwrap();
    let out = bin()
        .args(["ingest", "--design"])
        .arg(&design_path)
        .arg("--responses")
        .arg(&responses_path)
        .args(["--model", "linear", "--out"])
        .arg(dir.path().join("o1"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row 2") && stderr.contains("column 2"), "{stderr}");

    fs::write(&design_path, "1.0,2.0\n3.0,4.0\n").unwrap();
    fs::write(&responses_path, "1.0\n2.0\n").unwrap();
    let out = bin()
        .args(["ingest", "--design"])
        .arg(&design_path)
        .arg("--responses")
        .arg(&responses_path)
        .args(["--model", "logistic", "--out"])
        .arg(dir.path().join("o2"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside {0, 1}"));
}

#[test]
fn bench_summary_has_zero_iqr_for_single_repeat() {
    let dir = TempDir::new().unwrap();
    let json = r#"{
        "name": "mini-bench",
        "gen": {"dim": 60, "s_star": 6, "samples": {"alpha": 5.0},
                "omega": 0.5, "noise_var": 0.25, "model": "linear", "seed": 3},
        "budget": 12,
        "runs": [
            {"label": "sparse-polyak",
             "solver": {"budget": 12, "f_target": "oracle", "max_iters": 150,
                        "step_rule": {"rule": "sparse-polyak"}}},
            {"label": "classical-polyak",
             "solver": {"budget": 12, "f_target": "oracle", "max_iters": 150,
                        "step_rule": {"rule": "classical-polyak"}}}
        ],
        "repeats": 1,
        "sweep": [40, 60],
        "threshold": {"mode": "long-run-relative", "factor": 1.05,
                      "reference": "sparse-polyak"}
    }"#;
    let cfg = write_config(dir.path(), "cfg.json", json);
    let out = dir.path().join("out");
    assert!(bin()
        .args(["bench", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--threads", "1"])
        .status()
        .unwrap()
        .success());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(
        lines[0],
        "d,label,n,s_star,budget,seeds,iters_median,iters_iqr,final_gap_median,final_err_sq_median,support_f1_median,rate_ratio"
    );
    assert_eq!(lines.len(), 5); // header + 2 dims x 2 labels
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[5], "1"); // seeds
        let iqr: f64 = cells[7].parse().unwrap();
        assert_eq!(iqr, 0.0);
        // Budgets scale with the sweep dimension.
        let d: usize = cells[0].parse().unwrap();
        let budget: usize = cells[4].parse().unwrap();
        assert_eq!(budget, 12 * d / 60);
    }
    // Reference label reaches its own floor: finite iterations and unit
    // rate ratio at the base dimension.
    let sparse_base = lines[1..]
        .iter()
        .find(|l| l.starts_with("40,sparse-polyak"))
        .unwrap();
    let cells: Vec<&str> = sparse_base.split(',').collect();
    assert!(cells[6].parse::<f64>().unwrap().is_finite());
    assert_eq!(cells[11].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn solve_rows_match_binary_output_bytes() {
    // The library row path and the binary CSV path agree.
    let dir = TempDir::new().unwrap();
    let cfg_path = write_config(dir.path(), "cfg.json", SMALL_LINEAR);
    let config = ExperimentConfig::load(&cfg_path).unwrap();
    let rows = commands::solve::collect_rows(&config, 0).unwrap();
    let lib_path = dir.path().join("lib-trace.csv");
    commands::write_trace_csv(&lib_path, rows).unwrap();

    let out = dir.path().join("out");
    assert!(bin()
        .args(["solve", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    assert_eq!(
        fs::read(&lib_path).unwrap(),
        fs::read(out.join("trace.csv")).unwrap()
    );
}

#[test]
fn seed_offset_shifts_instances() {
    let dir = TempDir::new().unwrap();
    let cfg_path = write_config(dir.path(), "cfg.json", SMALL_LINEAR);
    let config = ExperimentConfig::load(&cfg_path).unwrap();
    let base = commands::solve::collect_rows(&config, 0).unwrap();
    let shifted = commands::solve::collect_rows(&config, 1).unwrap();
    // Offset 1 re-seeds: repeat 0 of the shifted run equals repeat 1 of the
    // base run.
    let base_seed_12: Vec<_> = base.iter().filter(|r| r.seed == 12).collect();
    let shifted_seed_12: Vec<_> = shifted.iter().filter(|r| r.seed == 12).collect();
    assert!(!base_seed_12.is_empty());
    assert_eq!(base_seed_12.len(), shifted_seed_12.len());
    for (a, b) in base_seed_12.iter().zip(&shifted_seed_12) {
        assert_eq!(a.f.to_bits(), b.f.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn emitted_floats_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let back: f64 = format_f64(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }
}

#[test]
fn trace_rows_sort_deterministically() {
    // Row ordering is (label, seed, t) regardless of collection order.
    let mk = |label: &str, seed: u64, t: usize| runner::TraceRow {
        label: label.into(),
        seed,
        t,
        f: 1.0,
        gamma: 0.5,
        grad_ht_norm_sq: 1.0,
        err_sq_to_star: None,
        support_size: 1,
        tp: None,
        fp: None,
        fn_: None,
    };
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("t.csv");
    commands::write_trace_csv(
        &path,
        vec![mk("b", 1, 0), mk("a", 2, 1), mk("a", 2, 0), mk("a", 1, 0)],
    )
    .unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let keys: Vec<String> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(keys, vec!["a,1,0", "a,2,0", "a,2,1", "b,1,0"]);
}
