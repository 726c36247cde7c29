use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dissipa_cli::config;
use dissipa_cli::Failure;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dissipa"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_SWEEP: &str = r#"
system = "eqn1"

[grid]
lo = [-3.0, -3.0]
hi = [3.0, 3.0]
divisions = 64

[lambda]
values = [0.5, 0.4]

[options]
bloat = 1
polarity_levels = [1.0]
attraction_samples = 16
attraction_time = 100.0
"#;

#[test]
fn malformed_box_exits_2_naming_the_axis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.toml",
        "system = \"eqn1\"\n[grid]\nlo = [-1.0, 2.0]\nhi = [1.0, 2.0]\ndivisions = 8\n[lambda]\nvalues = [0.5]\n",
    );
    let out = run(&["analyze", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("axis 1"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown system", "system = \"nope\"\n[grid]\nlo=[0.0]\nhi=[1.0]\ndivisions=4\n[lambda]\nvalues=[0.5]\n"),
        ("lambda out of range", "system = \"eqn1\"\n[grid]\nlo=[-1.0,-1.0]\nhi=[1.0,1.0]\ndivisions=4\n[lambda]\nvalues=[1.5]\n"),
        ("unknown key", "system = \"eqn1\"\nspeed = 3\n[grid]\nlo=[-1.0,-1.0]\nhi=[1.0,1.0]\ndivisions=4\n[lambda]\nvalues=[0.5]\n"),
        ("bad tau", "system = \"eqn1\"\n[grid]\nlo=[-1.0,-1.0]\nhi=[1.0,1.0]\ndivisions=4\n[lambda]\nvalues=[0.5]\n[options]\ntau = -1.0\n"),
        ("two lambdas for analyze", "system = \"eqn1\"\n[grid]\nlo=[-1.0,-1.0]\nhi=[1.0,1.0]\ndivisions=4\n[lambda]\nvalues=[0.5, 0.25]\n"),
        ("not toml", "system = \n"),
    ];
    for (name, body) in cases {
        let cfg = write_config(dir.path(), "c.toml", body);
        let out = run(&["analyze", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "), "{name}");
    }
    let out = run(&["analyze", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_needs_two_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "one.toml", &SMALL_SWEEP.replace("[0.5, 0.4]", "[0.5]"));
    let out = run(&["sweep", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_at_zero_finds_the_global_attractor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.toml",
        "system = \"eqn1\"\n[grid]\nlo=[-3.0,-3.0]\nhi=[3.0,3.0]\ndivisions=64\n[lambda]\nvalues=[0.0]\n",
    );
    let out_dir = dir.path().join("nested/out");
    let out = run(&["analyze", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("verdict.json")).unwrap()).unwrap();
    let seed = &doc["seed"];
    assert_eq!(seed["role"], "global_attractor_candidate");
    let ranks: Vec<u64> = seed["index"]["cohomological"].as_array().unwrap().iter().map(|g| g["rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, vec![1, 0, 0]);
    assert!(out_dir.join("cells_lambda_0.svg").exists());
    assert!(String::from_utf8_lossy(&out.stdout).contains("CH = (Z, 0, 0)"));
}

#[test]
fn analyze_above_zero_reports_the_ring() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "half.toml", &SMALL_SWEEP.replace("[0.5, 0.4]", "[0.5]"));
    let out_dir = dir.path().join("o");
    let out = run(&["analyze", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--no-svg"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("verdict.json")).unwrap()).unwrap();
    let rep = &doc["per_lambda"][0];
    assert!(rep["attractor"]["cells"].as_u64().unwrap() > 0);
    let c = &rep["separator"]["record"];
    assert!(c["cells"].as_u64().unwrap() > 0);
    // Unsharpened, the set is a thick annulus around the circle of radius 2.
    for (lo, hi) in c["bbox_lo"].as_array().unwrap().iter().zip(c["bbox_hi"].as_array().unwrap()) {
        assert!((-3.0..-2.0).contains(&lo.as_f64().unwrap()));
        assert!((2.0..3.0).contains(&hi.as_f64().unwrap()));
    }
    assert_eq!(rep["signature"]["separates"], true);
    assert!(fs::read_dir(&out_dir).unwrap().all(|e| !e.unwrap().path().to_string_lossy().ends_with(".svg")));
}

#[test]
fn quiet_sweep_prints_nothing_and_writes_everything() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SMALL_SWEEP);
    let out_dir = dir.path().join("o");
    let out = run(&["--quiet", "sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty() && out.stderr.is_empty());
    for f in ["verdict.json", "sweep.csv", "diameter.svg", "cells_lambda_0.4.svg", "cells_lambda_0.5.svg"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "lambda,k_cells,c_cells,diameter,index_trivial,separates,sphere_homology,coercive,polar");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn sweep_output_does_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "s.toml", SMALL_SWEEP);
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let o = dir.path().join(format!("t{threads}"));
        let out = run(&["--threads", threads, "sweep", "--config", &cfg, "--out", o.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        outputs.push((fs::read(o.join("verdict.json")).unwrap(), fs::read(o.join("sweep.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn selftest_passes_and_repeats_byte_for_byte() {
    let a = run(&["selftest"]);
    let b = run(&["selftest"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let table = String::from_utf8_lossy(&a.stdout);
    assert_eq!(table.lines().count(), 5);
    assert!(!table.contains("FAIL"));
}

#[test]
fn lambda_range_is_evenly_spaced() {
    let cfg = config::parse(
        "system = \"lorenz\"\n[grid]\nfit_trapping_ellipsoid = 0.05\ndivisions = 4\n[lambda]\nmin = 0.0\nmax = 1.0\ncount = 9\n",
    )
    .unwrap();
    let run = cfg.resolve(Path::new("."), Some(Path::new("unused"))).unwrap();
    assert_eq!(run.lambdas, (0..9).map(|i| i as f64 / 8.0).collect::<Vec<_>>());
    assert_eq!(run.grid.dim(), 3);
    let (lo, hi) = run.flow.trapping_ellipsoid().unwrap().bounding_box();
    for a in 0..3 {
        assert!(run.grid.lo()[a] < lo[a] && run.grid.hi()[a] > hi[a]);
    }
}

#[test]
fn expression_files_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spiral.txt"), "x1' = -x1 - x2\nx2' = x1 - x2\n").unwrap();
    let cfg = config::parse(
        "system = \"spiral.txt\"\n[grid]\nlo=[-1.0,-1.0]\nhi=[1.0,1.0]\ndivisions=8\n[lambda]\nvalues=[0.0]\n",
    )
    .unwrap();
    let run = cfg.resolve(dir.path(), None).unwrap();
    assert_eq!(run.flow.name(), "spiral");
    assert_eq!(run.flow.velocity(&[1.0, 0.0], 0.0), vec![-1.0, 1.0]);
    match config::parse("system = \"x\"\n[grid]\ndivisions=8\n[lambda]\nvalues=[0.0]\n").unwrap().resolve(dir.path(), None) {
        Err(Failure::Config(m)) => assert!(m.contains("neither a built-in")),
        _ => panic!("expected a config error"),
    }
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in fs::read_dir(&root).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "toml") {
            config::load(&p).unwrap().resolve(&root, None).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 4);
}
