use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retrobell"))
        .args(args)
        .env_remove("RETROBELL_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn bell_verification_passes() {
    let o = run(&["verify", "--model", "bell", "--checks", "si,nosignal,recovery"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["tool"], "retrobell");
    assert_eq!(v["backend"], "float");
    assert_eq!(v["tolerance"], 1e-12);
    assert_eq!(v["result"]["grid_points"], 256);
    // si + one nosignal per label + recovery
    assert_eq!(v["result"]["checks"].as_array().unwrap().len(), 6);
}

#[test]
fn counterexample_fails_si() {
    let o = run(&["verify", "--model", "counterexample", "--checks", "si"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["result"]["checks"][0]["max_deviation"], 0.25);
}

#[test]
fn counterexample_recovery_is_a_usage_error() {
    assert_eq!(code(&run(&["verify", "--model", "counterexample", "--checks", "recovery"])), 2);
}

#[test]
fn ghz_rational_is_exact() {
    let o = run(&["verify", "--model", "ghz", "--backend", "rational"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    for c in v["result"]["checks"].as_array().unwrap() {
        assert_eq!(c["max_deviation_exact"], "0", "{c}");
        assert_eq!(c["backend"], "rational");
    }
}

#[test]
fn ghz_float_backend_also_passes() {
    let o = run(&["verify", "--model", "ghz", "--backend", "float"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["backend"], "float");
}

#[test]
fn rational_angle_models_are_rejected() {
    for args in [
        &["verify", "--model", "bell", "--backend", "rational"][..],
        &["chsh", "--scan", "--backend", "rational"],
        &["emit-curve", "--backend", "rational"],
        &["sample", "--model", "counterexample", "--backend", "rational", "--n", "10"],
    ] {
        assert_eq!(code(&run(args)), 2, "{args:?}");
    }
}

#[test]
fn chsh_values_and_bounds() {
    let o = run(&["chsh", "--model", "bell", "--state", "1", "--angles", "0,1.5707963,0.7853982,2.3561945"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let s = v["result"]["backward_s"].as_f64().unwrap();
    assert!((s - 2.828427).abs() < 1e-6, "{s}");
    assert_eq!(v["result"]["bounds"]["lhv"], 2);
    assert_eq!(v["result"]["bounds"]["pr_box"], 4);
    assert_eq!(v["result"]["bounds"]["tsirelson"], 2.0 * std::f64::consts::SQRT_2);

    let pr = json(&run(&["chsh", "--model", "prbox"]));
    assert_eq!(pr["result"]["s_exact"], "4");
    assert_eq!(pr["result"]["s"], 4.0);

    let lhv = json(&run(&["chsh", "--lhv"]));
    assert_eq!(lhv["result"]["max_s"], 2);
    assert_eq!(lhv["result"]["strategies"], 16);

    let scan = run(&["chsh", "--scan", "--resolution", "8"]);
    assert_eq!(code(&scan), 0);
    assert_eq!(json(&scan)["result"]["within_bound"], true);
}

#[test]
fn chsh_rejects_bad_combinations() {
    assert_eq!(code(&run(&["chsh", "--model", "ghz"])), 2);
    assert_eq!(code(&run(&["chsh", "--model", "prbox", "--angles", "0,1,2,3"])), 2);
    assert_eq!(code(&run(&["chsh", "--angles", "0,1"])), 2);
    assert_eq!(code(&run(&["chsh", "--state", "5"])), 2);
}

#[test]
fn exhaustion_report() {
    let o = run(&["ghz-exhaust"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["result"]["satisfying_all"], 0);
    assert_eq!(v["result"]["per_constraint"], serde_json::json!([32, 32, 32, 32]));
    assert!(v["result"].get("near_misses").is_none());

    let v = json(&run(&["ghz-exhaust", "--list-near-misses"]));
    let misses = v["result"]["near_misses"].as_array().unwrap();
    assert_eq!(misses.len() as u64, v["result"]["satisfying_exactly_three"].as_u64().unwrap());
}

#[test]
fn sampling_is_reproducible_and_gated() {
    let args = ["sample", "--model", "bell", "--label", "1", "--alpha1", "0", "--alpha2", "1.0471976", "--n", "200000", "--seed", "42"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 42);
    assert_eq!(v["result"]["rng"], "ChaCha20Rng");
    assert_eq!(v["result"]["accepted"], 200000);
}

#[test]
fn shard_count_not_thread_count_drives_results() {
    let base = ["sample", "--n", "20000", "--seed", "3", "--shards", "4"];
    let one = run(&[&base[..], &["--threads", "1"]].concat());
    let four = run(&[&base[..], &["--threads", "4"]].concat());
    let strip = |o: &Output| {
        let mut v = json(o);
        v["config"]["threads"] = Value::Null;
        v
    };
    assert_eq!(strip(&one), strip(&four));
}

#[test]
fn ghz_sampling_never_hits_disallowed_triples() {
    let o = run(&["sample", "--model", "ghz", "--label", "0", "--alpha1", "1", "--alpha2", "0", "--alpha3", "1", "--n", "50000"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["result"]["disallowed_triples"], 0);
}

#[test]
fn sample_settings_must_fit_the_model() {
    assert_eq!(code(&run(&["sample", "--model", "ghz", "--alpha1", "0.5", "--n", "10"])), 2);
    assert_eq!(code(&run(&["sample", "--model", "bell", "--alpha3", "0", "--n", "10"])), 2);
    assert_eq!(code(&run(&["sample", "--label", "nope", "--n", "10"])), 2);
}

#[test]
fn cap_exhaustion_exits_three() {
    let o = run(&["sample", "--n", "1000", "--cap", "10"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
}

#[test]
fn seed_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_retrobell"))
        .args(["sample", "--n", "1000"])
        .env("RETROBELL_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(json(&o)["seed"], 99);
    let o = Command::new(env!("CARGO_BIN_EXE_retrobell"))
        .args(["sample", "--n", "1000", "--seed", "5"])
        .env("RETROBELL_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(json(&o)["seed"], 5);
}

#[test]
fn config_file_sits_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("recipe.cfg");
    fs::write(&cfg, "# ghz recipe\nmodel = ghz\nn = 500\nseed = 11\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let v = json(&run(&["sample", "--config", cfg]));
    assert_eq!(v["config"]["model"], "ghz");
    assert_eq!(v["config"]["n"], 500);
    assert_eq!(v["seed"], 11);
    assert_eq!(v["config"]["config_file"], cfg);

    let v = json(&run(&["sample", "--config", cfg, "--seed", "12", "--model", "bell"]));
    assert_eq!(v["seed"], 12);
    assert_eq!(v["config"]["model"], "bell");

    fs::write(dir.path().join("bad.cfg"), "bogus = 1\n").unwrap();
    assert_eq!(code(&run(&["sample", "--config", dir.path().join("bad.cfg").to_str().unwrap()])), 2);
    assert_eq!(code(&run(&["sample", "--config", "/nonexistent/x.cfg"])), 2);
}

#[test]
fn output_file_is_newline_terminated() {
    let dir = tempfile::tempdir().unwrap();
    for (fmt, name) in [("json", "r.json"), ("csv", "r.csv"), ("human", "r.txt")] {
        let path = dir.path().join(name);
        let o = run(&["verify", "--model", "prbox", "--format", fmt, "--output", path.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        assert!(o.stdout.is_empty());
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.ends_with('\n') && !text.ends_with("\n\n"), "{fmt}");
    }
}

#[test]
fn human_and_json_show_the_same_numbers() {
    let j = json(&run(&["chsh", "--lhv"]));
    let h = String::from_utf8(run(&["chsh", "--lhv", "--format", "human"]).stdout).unwrap();
    assert!(h.contains(&format!("result.max_s: {}", j["result"]["max_s"])));
    let j = json(&run(&["sample", "--n", "777", "--seed", "1"]));
    let h = String::from_utf8(run(&["sample", "--n", "777", "--seed", "1", "--format", "human"]).stdout).unwrap();
    assert!(h.contains(&format!("result.tv_distance: {}", j["result"]["tv_distance"])));
}

#[test]
fn curve_table() {
    let o = run(&["emit-curve", "--resolution", "8", "--state", "2"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "delta,quantum_E,backward_E");
    assert_eq!(lines.len(), 10);
    assert_eq!(lines[1], "0.0,-1.0,-1.0");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["verify", "--model", "nope"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}
