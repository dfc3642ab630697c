use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn fixture(rel: &str) -> String {
    root().join(rel).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridflex")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes `body` as a config file in a fresh temp dir and returns both.
fn config(name: &str, body: &str) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    (dir, path)
}

fn toy_config(profile: &str, extra: &str) -> String {
    format!(
        "case = {:?}\nprofiles = {:?}\n{extra}\n",
        fixture("cases/toy2.json"),
        fixture(&format!("profiles/{profile}"))
    )
}

fn cmd(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn solve_toy_writes_bundle() {
    let (dir, cfg) = config("run.toml", &toy_config("toy2_2mw.csv", ""));
    let out = dir.path().join("out");
    let o = cmd("solve", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("total"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!((summary["total_cost"].as_f64().unwrap() - 6.0).abs() < 1e-9);
    for f in ["dispatch.csv", "flows.csv", "shifts.csv", "backlog.csv", "shed.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let dispatch = fs::read_to_string(out.join("dispatch.csv")).unwrap();
    assert!(dispatch.starts_with("hour,g1,g2\n"));
}

#[test]
fn solve_json_config_and_flag_overrides() {
    let body = format!(
        r#"{{"case": {:?}, "profiles": {:?}, "expansion": {{"shed_mode": "forbidden"}}}}"#,
        fixture("cases/toy2.json"),
        fixture("profiles/toy2_3mw.csv")
    );
    let (dir, cfg) = config("run.json", &body);
    let out = dir.path().join("out");
    let o = cmd("solve", &cfg, &out, &["--feas-tol", "1e-8", "--opt-tol", "1e-8"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!((summary["total_cost"].as_f64().unwrap() - 111.0).abs() < 1e-9);
}

#[test]
fn infeasible_solve_exits_two() {
    let body = format!(
        "case = {:?}\nprofiles = {:?}\n[expansion]\nshed_mode = \"forbidden\"\n",
        fixture("cases/toy2_fixed.json"),
        fixture("profiles/toy2_3mw.csv")
    );
    let (dir, cfg) = config("run.toml", &body);
    let o = cmd("solve", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("infeasible"));
}

#[test]
fn missing_case_file_names_path() {
    let (dir, cfg) = config("run.toml", "case = \"nowhere/case.json\"\nprofiles = \"p.csv\"\n");
    let o = cmd("solve", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nowhere/case.json"), "{}", stderr(&o));
}

#[test]
fn missing_config_file() {
    let o = run(&["solve", "--config", "/definitely/not/here.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("/definitely/not/here.toml"));
}

#[test]
fn config_errors_exit_one() {
    let cases = [
        ("run.yaml", toy_config("toy2_2mw.csv", "")),
        ("run.toml", toy_config("toy2_2mw.csv", "colour = \"blue\"")),
        ("run.toml", format!("case = {:?}\n", fixture("cases/toy2.json"))),
        ("run.toml", "case = [1, 2\n".to_string()),
    ];
    for (name, body) in cases {
        let (dir, cfg) = config(name, &body);
        let o = cmd("solve", &cfg, &dir.path().join("out"), &[]);
        assert_eq!(code(&o), 1, "{name}: {body}");
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn invalid_case_and_profiles_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let case = fs::read_to_string(fixture("cases/toy2.json")).unwrap().replace("\"to\": \"b2\"", "\"to\": \"b9\"");
    fs::write(dir.path().join("bad.json"), case).unwrap();
    fs::write(dir.path().join("bad.csv"), "hour,b1,b9\n0,1,1\n").unwrap();
    fs::write(dir.path().join("neg.csv"), "hour,b1,b2\n0,1,-1\n").unwrap();
    fs::write(dir.path().join("ragged.csv"), "hour,b1,b2\n0,1\n").unwrap();

    let cfg = dir.path().join("a.toml");
    fs::write(&cfg, format!("case = \"bad.json\"\nprofiles = {:?}\n", fixture("profiles/toy2_2mw.csv"))).unwrap();
    let o = cmd("solve", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("b9"));

    for bad in ["bad.csv", "neg.csv", "ragged.csv"] {
        let cfg = dir.path().join("b.toml");
        fs::write(&cfg, format!("case = {:?}\nprofiles = {bad:?}\n", fixture("cases/toy2.json"))).unwrap();
        let o = cmd("solve", &cfg, &dir.path().join("out"), &[]);
        assert_eq!(code(&o), 1, "{bad}");
    }
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["solve"])), 1);
    assert_eq!(code(&run(&["frobnicate", "--config", "x.toml"])), 1);
    assert_eq!(code(&run(&["solve", "--config", "x.toml", "--workers", "many"])), 1);
    let help = run(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("gen-profiles"));
}

#[test]
fn export_mps_writes_model_instead_of_solving() {
    let (dir, cfg) = config("run.toml", &toy_config("toy2_2mw.csv", ""));
    let out = dir.path().join("out");
    let o = cmd("solve", &cfg, &out, &["--export-mps", "--dump-lp"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mps = fs::read_to_string(out.join("model.mps")).unwrap();
    assert!(mps.starts_with("NAME"));
    assert!(mps.trim_end().ends_with("ENDATA"));
    assert!(out.join("model.names").exists());
    assert!(fs::read_to_string(out.join("model.lp")).unwrap().contains("subject to"));
    assert!(!out.join("result.json").exists());
}

fn ieee_sweep_config(sweep: &str, workers: usize) -> String {
    format!(
        "case = {:?}\nprofiles = {:?}\nflex = {:?}\nworkers = {workers}\n[sweep]\n{sweep}\n",
        fixture("cases/ieee14.json"),
        fixture("profiles/ieee14_diurnal.csv"),
        fixture("flex/ieee14_dc.json")
    )
}

#[test]
fn one_point_sweep_has_one_row() {
    let (dir, cfg) = config("s.toml", &ieee_sweep_config("kind = \"flexibility\"\ngeo_portions = [0.6]", 1));
    let out = dir.path().join("out");
    let o = cmd("sweep", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().contains("optimal"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(stderr(&o).contains("[1/1]"));
}

#[test]
fn sweep_is_deterministic_across_runs_and_workers() {
    let grid = "kind = \"flexibility\"\ngeo_portions = [0.0, 0.5, 1.0]\nline_factors = [1.0, 1.2]";
    let mut outputs = Vec::new();
    for workers in [1, 4, 4] {
        let (dir, cfg) = config("s.toml", &ieee_sweep_config(grid, workers));
        let out = dir.path().join("out");
        let o = cmd("sweep", &cfg, &out, &[]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(fs::read(out.join("sweep.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn resumed_sweep_matches_uninterrupted_run() {
    let grid = "kind = \"penetration\"\ngrowth_ratios = [0.0, 0.5, 1.0, 1.5]";
    let (dir, cfg) = config("s.toml", &ieee_sweep_config(grid, 2));
    let out = dir.path().join("out");
    assert_eq!(code(&cmd("sweep", &cfg, &out, &[])), 0);
    let full = fs::read(out.join("sweep.csv")).unwrap();

    // Simulate a crash: keep three finished points and a torn fourth line.
    let journal = fs::read_to_string(out.join("sweep.journal.jsonl")).unwrap();
    let lines: Vec<&str> = journal.lines().collect();
    assert_eq!(lines.len(), 8);
    let torn = format!("{}\n{}", lines[..3].join("\n"), &lines[3][..lines[3].len() / 2]);
    fs::write(out.join("sweep.journal.jsonl"), torn).unwrap();
    fs::remove_file(out.join("sweep.csv")).unwrap();

    let o = cmd("sweep", &cfg, &out, &["--resume"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("3 of 8 points already done"));
    assert_eq!(fs::read(out.join("sweep.csv")).unwrap(), full);
}

#[test]
fn sweep_config_errors() {
    let (dir, cfg) = config("s.toml", &toy_config("toy2_2mw.csv", ""));
    assert_eq!(code(&cmd("sweep", &cfg, &dir.path().join("out"), &[])), 1);
    let (dir, cfg) = config("s.toml", &ieee_sweep_config("kind = \"penetration\"", 1));
    assert_eq!(code(&cmd("sweep", &cfg, &dir.path().join("out"), &[])), 1);
    let (dir, cfg) = config("s.toml", &ieee_sweep_config("kind = \"sideways\"", 1));
    assert_eq!(code(&cmd("sweep", &cfg, &dir.path().join("out"), &[])), 1);
}

fn toy_search(section: &str) -> String {
    format!(
        "case = {:?}\nprofiles = {:?}\nflex = {:?}\n[search]\n{section}\n",
        fixture("cases/toy2.json"),
        fixture("profiles/toy2_empty.csv"),
        fixture("flex/toy2_geo.json")
    )
}

#[test]
fn search_reports_minimal_portion() {
    let (dir, cfg) = config("q.toml", &toy_search("knob = \"geo_portion\"\ninvestment_cap = 0.0"));
    let out = dir.path().join("out");
    let o = cmd("search", &cfg, &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("search.json")).unwrap()).unwrap();
    assert!((r["value"].as_f64().unwrap() - 1.0 / 3.0).abs() <= 0.01);

    // A budget above the firm investment (100) needs no flexibility.
    let (dir, cfg) = config("q.toml", &toy_search("knob = \"geo_portion\"\ninvestment_cap = 150.0"));
    let out = dir.path().join("out");
    assert_eq!(code(&cmd("search", &cfg, &out, &[])), 0);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("search.json")).unwrap()).unwrap();
    assert_eq!(r["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn search_failures() {
    // Zero added capacity cannot serve 3 MW through a 1 MW line when nothing may shift.
    let body = format!(
        "case = {:?}\nprofiles = {:?}\n[search]\nknob = \"window\"\ncapacity_cap = 0.0\n",
        fixture("cases/toy2.json"),
        fixture("profiles/toy2_3mw.csv")
    );
    let (dir, cfg) = config("q.toml", &body);
    let o = cmd("search", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("INFEASIBLE_AT_MAX"));

    let (dir, cfg) = config("q.toml", &toy_search("knob = \"geo_portion\""));
    assert_eq!(code(&cmd("search", &cfg, &dir.path().join("out"), &[])), 1);
    let (dir, cfg) = config("q.toml", &toy_config("toy2_2mw.csv", ""));
    assert_eq!(code(&cmd("search", &cfg, &dir.path().join("out"), &[])), 1);
}

fn gen_config(shape: &str, peak_hour: usize) -> String {
    format!(
        "seed = 3\n[gen_profiles]\nhorizon = 24\nshape = \"{shape}\"\npeak_hour = {peak_hour}\nnoise = 0.0\n\
         peaks = [{{ bus = \"a\", mw = 10.0 }}, {{ bus = \"b\", mw = 4.0 }}]\n"
    )
}

#[test]
fn gen_profiles_is_deterministic_and_shaped() {
    let (dir, cfg) = config("g.toml", &gen_config("flat", 18));
    let out = dir.path().join("out");
    assert_eq!(code(&cmd("gen-profiles", &cfg, &out, &[])), 0);
    let text = fs::read_to_string(out.join("profiles.csv")).unwrap();
    assert!(text.starts_with("hour,a,b\n"));
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("10")));

    let noisy = gen_config("sinusoidal", 7).replace("noise = 0.0", "noise = 0.1");
    let (dir, cfg) = config("g.toml", &noisy);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&cmd("gen-profiles", &cfg, &a, &[])), 0);
    assert_eq!(code(&cmd("gen-profiles", &cfg, &b, &[])), 0);
    assert_eq!(fs::read(a.join("profiles.csv")).unwrap(), fs::read(b.join("profiles.csv")).unwrap());

    let (dir, cfg) = config("g.toml", &gen_config("sinusoidal", 30));
    assert_eq!(code(&cmd("gen-profiles", &cfg, &dir.path().join("out"), &[])), 1);
    let (dir, cfg) = config("g.toml", "seed = 1\n");
    assert_eq!(code(&cmd("gen-profiles", &cfg, &dir.path().join("out"), &[])), 1);
}

#[test]
fn bundled_profiles_match_their_generator_configs() {
    for name in ["ieee14_diurnal", "ieee14_evening"] {
        let dir = tempfile::tempdir().unwrap();
        let cfg = root().join(format!("configs/gen_{name}.toml"));
        let o = cmd("gen-profiles", &cfg, dir.path(), &[]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(
            fs::read(dir.path().join("profiles.csv")).unwrap(),
            fs::read(root().join(format!("profiles/{name}.csv"))).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn validate_reports_status() {
    let body = format!(
        "case = {:?}\nprofiles = {:?}\nflex = {:?}\n",
        fixture("cases/ieee14.json"),
        fixture("profiles/ieee14_diurnal.csv"),
        fixture("flex/ieee14_dc.json")
    );
    let (dir, cfg) = config("v.toml", &body);
    let o = cmd("validate", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("14 buses, 20 lines, 5 generators"));

    let dir = tempfile::tempdir().unwrap();
    let case = fs::read_to_string(fixture("cases/toy2.json"))
        .unwrap()
        .replace("{\"id\": \"b2\"}", "{\"id\": \"b2\", \"reference\": true}");
    fs::write(dir.path().join("c.json"), case).unwrap();
    fs::write(dir.path().join("v.toml"), "case = \"c.json\"\n").unwrap();
    let o = cmd("validate", &dir.path().join("v.toml"), &dir.path().join("out"), &[]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("MULTIPLE_REFERENCE"));
}
