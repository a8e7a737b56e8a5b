//! End-to-end runs of the `bdnoma` binary.

use std::path::Path;
use std::process::{Command, Output};

fn bdnoma(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdnoma")).args(args).current_dir(dir).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn solve_writes_tables_and_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "targets = [[1.0, 0.1]]\n");
    let o = bdnoma(&["solve", "--config", &cfg, "--out", "res", "--seed", "3"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let res = dir.path().join("res");
    let csv = std::fs::read_to_string(res.join("solve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
    assert!(res.join("beams.csv").exists());
    let echo = std::fs::read_to_string(res.join("config.toml")).unwrap();
    assert!(echo.contains("seed = 3"), "{echo}");
}

#[test]
fn same_seed_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "targets = [[1.0, 0.1]]\n");
    for out in ["a", "b"] {
        assert_eq!(code(&bdnoma(&["solve", "--config", &cfg, "--out", out], dir.path())), 0);
    }
    let read = |d: &str| std::fs::read(dir.path().join(d).join("solve.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn json_and_svg_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trials = 2\n[grids]\ntarget = { start = 0.0, stop = 0.5, step = 0.5 }\n");
    let o = bdnoma(&["region", "--config", &cfg, "--out", "res", "--format", "json", "--emit-svg"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("res/region.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().map(Vec::len), Some(2), "{json}");
    let svg = std::fs::read_to_string(dir.path().join("res/region.svg")).unwrap();
    assert!(svg.contains("<svg ") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn dump_subproblem_writes_text() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "targets = [[1.0, 0.1]]\n");
    let o = bdnoma(&["solve", "--config", &cfg, "--out", "res", "--dump-subproblem", "sub.txt"], dir.path());
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("sub.txt")).unwrap();
    assert!(text.starts_with("subproblem m=4"), "{text}");
    assert!(text.contains("objective=max_omega"));
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[profile]\nalfa = 0.3\n");
    let o = bdnoma(&["solve", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("profile.alfa"));
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&bdnoma(&["solve", "--config", "nope.toml"], dir.path())), 2);
}

#[test]
fn unreachable_targets_exit_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "targets = [[100.0, 0.1]]\n");
    let o = bdnoma(&["solve", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("file"), "").unwrap();
    let cfg = write_config(dir.path(), "targets = [[1.0, 0.1]]\n");
    assert_eq!(code(&bdnoma(&["solve", "--config", &cfg, "--out", "file/sub"], dir.path())), 1);
}
