use std::process::{Command, ExitCode};
use std::time::Instant;

use rde_lab::verify::{acceptance_suite, CheckReport};

/// Runs the `sweep` subcommand with a given thread setting and returns stdout.
fn cli_sweep(threads: &str) -> Option<Vec<u8>> {
    let out = Command::new(env!("CARGO_BIN_EXE_rde-lab"))
        .args([
            "sweep", "--A", "0.5,1,2", "--m", "1,2,3", "--trials", "10", "--seed", "42",
        ])
        .env("RDE_LAB_THREADS", threads)
        .output()
        .ok()?;
    out.status.success().then_some(out.stdout)
}

fn cli_determinism() -> CheckReport {
    let runs: Vec<(&str, Option<Vec<u8>>)> = ["1", "4", "0", "1"].iter().map(|t| (*t, cli_sweep(t))).collect();
    let reference = runs[0].1.clone().filter(|b| !b.is_empty());
    let mut evidence = Vec::new();
    let mut failures = 0;
    for (threads, bytes) in &runs {
        let same = reference.is_some() && *bytes == reference;
        failures += (!same) as usize;
        evidence.push(format!(
            "cli RDE_LAB_THREADS={threads}: {}",
            if same { "identical" } else { "differs or failed" }
        ));
    }
    CheckReport {
        name: "sweep-determinism-cli",
        passed: failures == 0,
        cases: runs.len(),
        failures,
        evidence,
    }
}

fn main() -> ExitCode {
    let mut all_passed = true;
    for (number, check) in acceptance_suite() {
        let start = Instant::now();
        let mut reports = vec![check()];
        if number == 8 {
            reports.push(cli_determinism());
        }
        let passed = reports.iter().all(|r| r.passed);
        all_passed &= passed;
        let names: Vec<&str> = reports.iter().map(|r| r.name).collect();
        println!(
            "criterion {number}: {} [{}] in {:.2}s",
            if passed { "PASS" } else { "FAIL" },
            names.join(", "),
            start.elapsed().as_secs_f64()
        );
        for r in &reports {
            println!("    {r}");
            for line in &r.evidence {
                println!("      {line}");
            }
        }
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
