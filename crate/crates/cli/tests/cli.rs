use clap::CommandFactory;
use ellgraph_cli::args::Cli;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn ellgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ellgraph")).args(args).current_dir(fixtures()).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn spectrum_reports_schema_and_eigenvalue() {
    let out = ellgraph(&["spectrum", "--graph", "path5.txt", "--region", "ball:2:1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "spectrum");
    // interior {2} of the path: L_U = [2]
    assert_eq!(v["lambda0"].as_f64().unwrap(), 2.0);
}

#[test]
fn ground_state_monotone_on_lattice() {
    let out = ellgraph(&["ground-state", "--generator", "lattice:1", "--origin", "0", "--levels", "1..50"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let lambdas: Vec<f64> = v["levels"].as_array().unwrap().iter().map(|l| l["lambda"].as_f64().unwrap()).collect();
    assert_eq!(lambdas.len(), 50);
    assert!(lambdas.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn output_file_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = ellgraph(&["heat-kernel", "--graph", "lattice:1", "--source", "0", "--t", "1", "--output", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn csv_for_tables_only() {
    let out = ellgraph(&["ground-state", "--generator", "tree:3", "--levels", "2,4", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# schema_version=1 command=ground-state\n"));
    let nested = ellgraph(&["verify", "--format", "csv"]);
    assert_eq!(nested.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let cases: [(&[&str], i32); 8] = [
        (&["verify"], 0),
        (&["spectrum", "--graph", "negative/loop.txt"], 2),
        (&["verify", "--graph", "negative/negative-weight.txt"], 2),
        (&["run", "negative/bad-config.toml"], 2),
        (&["spectrum", "--graph", "path5.txt", "--tol", "fast"], 2),
        (&["spectrum", "--graph", "missing.txt"], 2),
        (&["verify", "--graph", "path5.txt", "--check", "harnack", "--function", "negative/not-supersolution.function"], 1),
        (&["verify", "--graph", "path5.txt", "--check", "envelope", "--function", "negative/steep.function"], 3),
    ];
    for (args, code) in cases {
        let out = ellgraph(args);
        assert_eq!(out.status.code(), Some(code), "ellgraph {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn loop_diagnostic_names_line() {
    let out = ellgraph(&["spectrum", "--graph", "negative/loop.txt"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line"), "{err}");
}

#[test]
fn violation_still_emits_report() {
    let out = ellgraph(&["verify", "--graph", "path5.txt", "--check", "envelope", "--function", "negative/steep.function"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["passed"], false);
}

#[test]
fn every_command_has_a_config_fixture() {
    let mut covered = std::collections::BTreeSet::new();
    for entry in std::fs::read_dir(fixtures().join("configs")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let table: toml::Table = text.parse().unwrap();
        covered.insert(table["command"].as_str().unwrap().to_string());
    }
    for sub in Cli::command().get_subcommands() {
        let name = sub.get_name();
        if name != "run" {
            assert!(covered.contains(name), "no config fixture exercises `{name}`");
        }
    }
}

#[test]
fn config_translation() {
    let argv = ellgraph_cli::config_to_argv("command = \"cheeger\"\nstrategy = \"balls:0:3\"\nlevels = [1, 2]\nflag = true\noff = false\n").unwrap();
    assert_eq!(argv, ["ellgraph", "cheeger", "--flag", "--levels", "1,2", "--strategy", "balls:0:3"]);
    assert!(ellgraph_cli::config_to_argv("command = \"run\"").is_err());
    assert!(ellgraph_cli::config_to_argv("graph = \"x\"").is_err());
}
