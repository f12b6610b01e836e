//! End-to-end tests of the compiled binary: exit codes, configuration
//! semantics, artifact shapes, and determinism.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_surfpde"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Pull the float that follows `marker` in a summary line.
fn number_after(text: &str, marker: &str) -> f64 {
    let rest = &text[text.find(marker).expect("marker present") + marker.len()..];
    let token: String = rest
        .chars()
        .take_while(|c| !matches!(c, ',' | ' ' | '\n'))
        .collect();
    token.parse().expect("numeric token")
}

#[test]
fn help_and_version_exit_zero() {
    let help = run(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("surfpde"));
    assert!(stdout(&help).contains("nodes"));
    let version = run(&["--version"]);
    assert_eq!(code(&version), 0);
}

#[test]
fn unknown_flag_exits_one_with_usage() {
    let out = run(&["nodes", "--frobnicate"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn nodes_csv_has_header_and_row_per_node() {
    let dir = tmp("nodes_csv");
    let path = dir.join("v.csv");
    let out = run(&[
        "nodes",
        "--surface",
        "sphere",
        "--n",
        "1000",
        "--out",
        path.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,z,nx,ny,nz");
    assert_eq!(lines.len(), 1001);
    assert!(dir.join("manifest").exists());
}

#[test]
fn nodes_ply_vertex_count_near_target() {
    let dir = tmp("nodes_ply");
    let path = dir.join("t.ply");
    let out = run(&[
        "nodes",
        "--surface",
        "torus",
        "--n",
        "2000",
        "--out",
        path.to_str().unwrap(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&path).unwrap();
    let vertex_line = text
        .lines()
        .find(|l| l.starts_with("element vertex"))
        .expect("vertex element");
    let count: usize = vertex_line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((1900..=2100).contains(&count), "vertex count {count}");
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tmp("config_override");
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, "# comment\nsurface = sphere\nn = 500\nl = 2\n").unwrap();
    let out = run(&[
        "poisson",
        "--config",
        cfg.to_str().unwrap(),
        "--l",
        "4",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest = fs::read_to_string(dir.join("manifest")).unwrap();
    assert!(manifest.contains("l = 4"), "flag overrides file:\n{manifest}");
    assert!(manifest.contains("n = 500"), "file value survives:\n{manifest}");
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tmp("config_unknown");
    let cfg = dir.join("bad.cfg");
    fs::write(&cfg, "surface = sphere\nbogus_key = 3\n").unwrap();
    let out = run(&["poisson", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("bogus_key"), "{err}");
    assert!(err.contains(":2"), "line number reported: {err}");
}

#[test]
fn config_type_mismatch_names_key() {
    let dir = tmp("config_type");
    let cfg = dir.join("bad.cfg");
    fs::write(&cfg, "n = many\n").unwrap();
    let out = run(&["poisson", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("'n'"), "{}", stderr(&out));
}

#[test]
fn missing_config_file_exits_one() {
    let out = run(&["poisson", "--config", "/nonexistent/file.cfg"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn odd_extension_count_is_a_constraint_error() {
    let out = run(&[
        "poisson",
        "--surface",
        "sphere",
        "--n",
        "400",
        "--l",
        "2",
        "--n-perp",
        "3",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("n_perp must be even"), "{}", stderr(&out));
}

#[test]
fn too_thin_extension_cites_the_rule() {
    let out = run(&[
        "poisson",
        "--surface",
        "sphere",
        "--n",
        "400",
        "--l",
        "2",
        "--n-perp",
        "2",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("extension rule"), "{}", stderr(&out));
}

#[test]
fn numerical_failure_exits_two() {
    let out = run(&["weights", "--surface", "sphere", "--n", "10", "--n-s", "50"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("stencil neighbors"), "{}", stderr(&out));
}

#[test]
fn bad_thread_env_exits_one() {
    let out = bin()
        .args(["nodes", "--surface", "sphere", "--n", "50"])
        .env("SURFPDE_THREADS", "abc")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("SURFPDE_THREADS"), "{}", stderr(&out));
}

#[test]
fn thread_cap_flag_is_accepted() {
    let dir = tmp("threads_flag");
    let out = run(&[
        "nodes",
        "--surface",
        "sphere",
        "--n",
        "50",
        "--threads",
        "1",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn seeded_reruns_are_byte_identical() {
    let dir_a = tmp("rerun_a");
    let dir_b = tmp("rerun_b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "turing",
            "--surface",
            "torus",
            "--n",
            "300",
            "--l",
            "2",
            "--t-final",
            "1.0",
            "--dt",
            "0.1",
            "--seed",
            "3",
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let a = fs::read(dir_a.join("solution.csv")).unwrap();
    let b = fs::read(dir_b.join("solution.csv")).unwrap();
    assert_eq!(a, b, "seeded reruns diverge");
    assert!(fs::read_to_string(dir_a.join("pattern.ply"))
        .unwrap()
        .contains("element vertex"));
}

#[test]
fn different_seed_changes_the_field() {
    let dir_a = tmp("seed_a");
    let dir_b = tmp("seed_b");
    for (dir, seed) in [(&dir_a, "3"), (&dir_b, "4")] {
        let out = run(&[
            "turing",
            "--surface",
            "torus",
            "--n",
            "300",
            "--l",
            "2",
            "--t-final",
            "0.5",
            "--dt",
            "0.1",
            "--seed",
            seed,
            "--out-dir",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let a = fs::read(dir_a.join("solution.csv")).unwrap();
    let b = fs::read(dir_b.join("solution.csv")).unwrap();
    assert_ne!(a, b, "seed has no effect");
}

#[test]
fn poisson_degree_two_solution_reaches_machine_precision() {
    let dir = tmp("poisson_exact");
    let out = run(&[
        "poisson",
        "--surface",
        "sphere",
        "--n",
        "800",
        "--l",
        "2",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(number_after(&text, "Linf = ") <= 1e-9, "{text}");
    let solution = fs::read_to_string(dir.join("solution.csv")).unwrap();
    assert!(solution.starts_with("x,y,z,u,u_exact"));
}

#[test]
fn converge_poisson_quadratic_test_is_exact() {
    let dir = tmp("converge_poisson");
    let out = run(&[
        "converge",
        "poisson",
        "--surface",
        "sphere",
        "--test",
        "u2",
        "--l",
        "2",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(number_after(&text, "-> ") <= 1e-10, "{text}");
    let table = fs::read_to_string(dir.join("convergence.csv")).unwrap();
    assert!(table.starts_with("resolution,error,eoc"));
    assert_eq!(table.lines().count(), 5, "four ladder levels:\n{table}");
}

#[test]
fn unknown_surface_and_targets_are_usage_errors() {
    let out = run(&["nodes", "--surface", "klein", "--n", "100"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("klein"), "{}", stderr(&out));

    let out = run(&["converge", "everything"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("everything"), "{}", stderr(&out));

    let out = run(&["turing", "--pattern", "plaid", "--n", "200"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("plaid"), "{}", stderr(&out));
}

#[test]
fn manifest_echoes_resolved_method_parameters() {
    let dir = tmp("manifest_echo");
    let out = run(&[
        "heat",
        "--surface",
        "sphere",
        "--n",
        "400",
        "--l",
        "2",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest = fs::read_to_string(dir.join("manifest")).unwrap();
    for key in ["command = heat", "m = ", "l = 2", "n_s = ", "n_perp = ", "eps_normal = ", "dt = ", "steps = "] {
        assert!(manifest.contains(key), "missing {key}:\n{manifest}");
    }
}
