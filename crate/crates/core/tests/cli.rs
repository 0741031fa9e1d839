use std::io::Write;
use std::process::{Command, Output, Stdio};

use rde_lab::cli::dispatch_to;
use rde_lab::io::{read_trajectory_csv, read_trajectory_json};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rde-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn config(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn equilibria_output() {
    let o = run(&["equilibria", "--A", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "{\"x\":4,\"y\":4,\"z\":4,\"kind\":\"isolated\"}\n");

    let o = run(&["equilibria", "--A", "1", "--mu", "2"]);
    assert_eq!(stdout(&o), "{\"x\":2,\"y\":2,\"z\":2,\"kind\":\"family\",\"mu\":2}\n");

    assert_eq!(run(&["equilibria", "--A", "1"]).status.code(), Some(1));
    assert_eq!(run(&["equilibria", "--A", "-1"]).status.code(), Some(1));
    assert_eq!(run(&["equilibria", "--A", "2", "--mu", "3"]).status.code(), Some(1));
}

#[test]
fn stability_output() {
    let o = run(&["stability", "--A", "2", "--m", "1", "--method", "both"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let norm = v["scaled_norm"].as_f64().unwrap();
    let rho = v["rho_estimate"].as_f64().unwrap();
    assert!(rho < norm && norm < 1.0);
    assert_eq!(v["verdict"], "LAS");

    let o = run(&["stability", "--A", "2", "--m", "1", "--epsilon", "0.16666666666666666"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["scaled_norm"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-12);

    let o = run(&["stability", "--A", "0.5", "--m", "2", "--method", "power"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "Unstable");
    assert!(v["scaled_norm"].is_null());

    assert_eq!(run(&["stability", "--A", "2", "--m", "1", "--epsilon", "3"]).status.code(), Some(1));
    assert_eq!(run(&["stability", "--A", "1", "--m", "1"]).status.code(), Some(1));
    assert_eq!(run(&["stability", "--A", "2", "--m", "0"]).status.code(), Some(1));
}

#[test]
fn simulate_round_trips() {
    let cfg = config("A = 2\nm = 1\nseed = 7\ninit_range = 0.1,10\nsteps = 40\n");
    let path = cfg.path().to_str().unwrap();
    let csv = run(&["simulate", "--config", path]);
    assert_eq!(csv.status.code(), Some(0));
    let text = stdout(&csv);
    assert!(text.starts_with("n,x,y,z\n-1,"));
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 1 + 2 + 40);

    let json = run(&["simulate", "--config", path, "--format", "json"]);
    let traj = read_trajectory_json(&stdout(&json)).unwrap();
    assert_eq!(read_trajectory_csv(&text).unwrap(), traj.samples());

    let again = run(&["simulate", "--config", path]);
    assert_eq!(again.stdout, csv.stdout);
}

#[test]
fn simulate_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let cfg = config("A = 1\nm = 1\nx[-1]=2\nx[0]=2\ny[-1]=2\ny[0]=2\nz[-1]=2\nz[0]=2\nsteps=2\n");
    let o = run(&["simulate", "--config", cfg.path().to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(out).unwrap(), "n,x,y,z\n-1,2,2,2\n0,2,2,2\n1,2,2,2\n2,2,2,2\n");
}

#[test]
fn simulate_reads_stdin() {
    let mut child = bin()
        .args(["simulate", "--config", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"A = 3\nm = 2\nseed = 1\ninit_range = 1,1\nsteps = 1\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(stdout(&o), "n,x,y,z\n-2,1,1,1\n-1,1,1,1\n0,1,1,1\n1,4,4,4\n");
}

#[test]
fn classify_reports() {
    let cfg = config("A = 0.5\nm = 1\nx[-1]=0.5\nx[0]=3\ny[-1]=0.5\ny[0]=3\nz[-1]=0.5\nz[0]=3\nsteps = 1000000\n");
    let o = run(&["classify", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["label"], "ParityUnbounded");
    assert_eq!(v["diverging_parity"], "even");
    assert_eq!(v["point"]["x"], 0.5);
    assert_eq!(v["parity"]["growth_violations"], 0);

    let cfg = config("A = 2\nm = 3\nseed = 5\ninit_range = 0.1,10\n");
    let o = run(&["classify", "--config", cfg.path().to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["label"], "Converged");
    assert_eq!(v["envelope"]["containment"], 1);
}

#[test]
fn sweep_is_schedule_independent() {
    let args = ["sweep", "--A", "0.75,1,1.5", "--m", "1,2", "--trials", "6", "--seed", "9"];
    let outputs: Vec<Vec<u8>> = ["1", "3", "0"]
        .iter()
        .map(|t| bin().args(args).env("RDE_LAB_THREADS", t).output().unwrap().stdout)
        .collect();
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    let text = String::from_utf8(outputs[0].clone()).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2 * 6);

    let summary = run(&["sweep", "--A", "2", "--m", "1", "--trials", "20", "--summary"]);
    let text = stdout(&summary);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("2,1,20,20,0,0,0,0,"), "{row}");
}

#[test]
fn verify_exit_codes() {
    let o = run(&["verify-theorem", "--id", "T1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("PASS T1"));

    let o = run(&["verify-theorem", "--id", "T8"]);
    assert_eq!(o.status.code(), Some(0));

    let o = run(&["verify-theorem", "--id", "T6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("FAIL T6"));

    assert_eq!(run(&["verify-theorem", "--id", "T9"]).status.code(), Some(1));
}

#[test]
fn malformed_input_maps_to_exit_codes() {
    for args in [
        &["nope"][..],
        &["equilibria"],
        &["equilibria", "--A", "abc"],
        &["stability", "--A", "2"],
        &["simulate", "--config", "/definitely/missing.cfg"],
        &["sweep", "--m", "0"],
        &["sweep", "--init-range", "5,1"],
        &["sweep", "--init-range", "1,2,3"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    for text in ["A = 2\n", "A = 2\nm = 1\nx[-1] = 1\n", "A = 2\nm = 1\nx[-1]=1\nseed=7\ninit_range=0.1,10\n", "A = 2\nm = 1\nx[-5] = 1\n", "A = -1\nm = 1\nseed=1\ninit_range=1,2\n"] {
        let cfg = config(text);
        let o = run(&["simulate", "--config", cfg.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{text:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn dispatch_in_process() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = dispatch_to(["rde-lab", "equilibria", "--A", "0.5"], &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(String::from_utf8(out).unwrap(), "{\"x\":1.5,\"y\":1.5,\"z\":1.5,\"kind\":\"isolated\"}\n");
    assert!(err.is_empty());
}
