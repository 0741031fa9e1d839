//! Seeded Monte-Carlo sweeps over `(A, m, initial block)`.
//!
//! Every trial draws its initial block from a ChaCha stream selected by
//! `(cell, trial)`, so results do not depend on which worker ran a trial or
//! in what order. Rows come back sorted by `(A, m, trial)` in grid order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::analyze::{classify_regime, semicycle_reference, semicycle_report, RegimeLabel};
use crate::dynamics::{iterate, InitBlock, Params, Parity, Triple, DEFAULT_CAP};

/// Environment variable capping sweep worker threads; `0` or unset means one
/// per available core.
pub const THREADS_ENV: &str = "RDE_LAB_THREADS";

/// Default `A` values of the shipped regime map.
pub const DEFAULT_A_VALUES: [f64; 8] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 5.0];
pub const DEFAULT_M_VALUES: [usize; 6] = [1, 2, 3, 4, 5, 6];
pub const DEFAULT_TRIALS: usize = 50;
pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_INIT_RANGE: (f64, f64) = (0.1, 10.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least one A value and one m value")]
    EmptyAxis,
    #[error("A values must be positive and finite, got {0}")]
    BadA(f64),
    #[error("m values must be at least 1")]
    BadM,
    #[error("trials per cell must be at least 1")]
    NoTrials,
    #[error("horizon must be at least 1")]
    NoHorizon,
    #[error("init range needs 0 < lo <= hi, got ({lo}, {hi})")]
    BadRange { lo: f64, hi: f64 },
    #[error("cap {cap} must exceed every A value")]
    BadCap { cap: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub a_values: Vec<f64>,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub init_range: (f64, f64),
    pub seed: u64,
    pub horizon: usize,
    pub cap: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            a_values: DEFAULT_A_VALUES.to_vec(),
            m_values: DEFAULT_M_VALUES.to_vec(),
            trials: DEFAULT_TRIALS,
            init_range: DEFAULT_INIT_RANGE,
            seed: 0,
            horizon: DEFAULT_HORIZON,
            cap: DEFAULT_CAP,
        }
    }
}

impl SweepGrid {
    /// Checks the grid invariants. A degenerate range `lo == hi` is allowed and
    /// yields constant blocks.
    pub fn validate(&self) -> Result<(), GridError> {
        if self.a_values.is_empty() || self.m_values.is_empty() {
            return Err(GridError::EmptyAxis);
        }
        if let Some(&a) = self.a_values.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(GridError::BadA(a));
        }
        if self.m_values.contains(&0) {
            return Err(GridError::BadM);
        }
        if self.trials == 0 {
            return Err(GridError::NoTrials);
        }
        if self.horizon == 0 {
            return Err(GridError::NoHorizon);
        }
        let (lo, hi) = self.init_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(GridError::BadRange { lo, hi });
        }
        if self.a_values.iter().any(|&a| !(self.cap > a)) {
            return Err(GridError::BadCap { cap: self.cap });
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.a_values.len() * self.m_values.len()
    }
}

/// Stream selector for `(cell, trial)`.
pub fn stream_id(cell: usize, trial: usize) -> u64 {
    ((cell as u64) << 32) | (trial as u64 & 0xffff_ffff)
}

/// Draws the `3(m+1)` initial values for one trial, uniformly from
/// `[lo, hi)` (exactly `lo` when the range is degenerate).
pub fn generate_initials(seed: u64, cell: usize, trial: usize, m: usize, range: (f64, f64)) -> InitBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(cell, trial));
    let (lo, hi) = range;
    let mut draw = || {
        let u: f64 = rng.random();
        lo + (hi - lo) * u
    };
    let x = (0..=m).map(|_| draw()).collect();
    let y = (0..=m).map(|_| draw()).collect();
    let z = (0..=m).map(|_| draw()).collect();
    InitBlock::new(x, y, z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub a: f64,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
    pub label: String,
    /// Converged point, or the finite-parity limit for parity-unbounded runs.
    pub point: Option<Triple>,
    pub diverging: Option<Parity>,
    pub max_spread: Option<f64>,
    pub overflow_at: Option<i64>,
    /// Distance of a converged point from `(A+1, A+1, A+1)`.
    pub equilibrium_error: Option<f64>,
    pub max_semicycle: Option<usize>,
    /// Why a row is `Undetermined`.
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub rows: Vec<SweepRow>,
}

/// Reads [`THREADS_ENV`]; unset, empty or unparsable values mean auto (`0`).
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

fn run_trial(grid: &SweepGrid, cell: usize, trial: usize) -> SweepRow {
    let a = grid.a_values[cell / grid.m_values.len()];
    let m = grid.m_values[cell % grid.m_values.len()];
    let mut row = SweepRow {
        a,
        m,
        trial,
        seed: grid.seed,
        stream: stream_id(cell, trial),
        label: String::new(),
        point: None,
        diverging: None,
        max_spread: None,
        overflow_at: None,
        equilibrium_error: None,
        max_semicycle: None,
        note: String::new(),
    };
    let init = generate_initials(grid.seed, cell, trial, m, grid.init_range);
    let traj = Params::new(a, m).and_then(|p| iterate(&p, &init, grid.horizon, grid.cap));
    let traj = match traj {
        Ok(t) => t,
        Err(e) => {
            row.label = "Undetermined".into();
            row.note = e.to_string();
            return row;
        }
    };
    let report = classify_regime(&traj);
    row.label = report.label.name().into();
    row.max_spread = report.max_spread();
    row.overflow_at = traj.overflow_at();
    row.equilibrium_error = report.equilibrium_error;
    match &report.label {
        RegimeLabel::Converged(p) => row.point = Some(*p),
        RegimeLabel::ParityUnbounded { diverging, other_limit } => {
            row.point = Some(*other_limit);
            row.diverging = Some(*diverging);
        }
        RegimeLabel::Undetermined(reason) => row.note = reason.clone(),
        _ => {}
    }
    if !traj.overflowed() {
        if let Some(reference) = semicycle_reference(&traj) {
            row.max_semicycle = semicycle_report(&traj, &reference, grid.horizon / 10).max_len();
        }
    }
    row
}

/// Runs every `(cell, trial)` of the grid on `threads` workers (`0` = auto).
pub fn run_sweep(grid: &SweepGrid, threads: usize) -> Result<SweepResult, GridError> {
    grid.validate()?;
    let jobs: Vec<(usize, usize)> = (0..grid.cells())
        .flat_map(|c| (0..grid.trials).map(move |t| (c, t)))
        .collect();
    let work = || -> Vec<SweepRow> {
        jobs.par_iter().map(|&(c, t)| run_trial(grid, c, t)).collect()
    };
    let rows = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    };
    Ok(SweepResult {
        grid: grid.clone(),
        rows,
    })
}

/// Label names in histogram order.
pub const LABELS: [&str; 5] = [
    "Converged",
    "ParityUnbounded",
    "BoundedOscillatory",
    "NumericOverflow",
    "Undetermined",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub a: f64,
    pub m: usize,
    pub trials: usize,
    pub histogram: BTreeMap<String, usize>,
    /// Mean of `equilibrium_error` over rows that report one.
    pub mean_convergence_error: Option<f64>,
    pub max_semicycle: Option<usize>,
}

impl CellSummary {
    pub fn count(&self, label: &str) -> usize {
        self.histogram.get(label).copied().unwrap_or(0)
    }
}

/// One summary per `(A, m)` cell present in the rows, in row order.
pub fn aggregate(result: &SweepResult) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    let mut errors: Vec<Vec<f64>> = Vec::new();
    for row in &result.rows {
        let same = out
            .last()
            .is_some_and(|c| c.a.to_bits() == row.a.to_bits() && c.m == row.m);
        if !same {
            out.push(CellSummary {
                a: row.a,
                m: row.m,
                trials: 0,
                histogram: BTreeMap::new(),
                mean_convergence_error: None,
                max_semicycle: None,
            });
            errors.push(Vec::new());
        }
        let cell = out.last_mut().expect("cell pushed above");
        cell.trials += 1;
        *cell.histogram.entry(row.label.clone()).or_insert(0) += 1;
        cell.max_semicycle = cell.max_semicycle.max(row.max_semicycle);
        if let Some(e) = row.equilibrium_error {
            errors.last_mut().expect("pushed with cell").push(e);
        }
    }
    for (cell, errs) in out.iter_mut().zip(errors) {
        if !errs.is_empty() {
            cell.mean_convergence_error = Some(errs.iter().sum::<f64>() / errs.len() as f64);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: &[f64], m: &[usize], trials: usize) -> SweepGrid {
        SweepGrid {
            a_values: a.to_vec(),
            m_values: m.to_vec(),
            trials,
            seed: 11,
            ..SweepGrid::default()
        }
    }

    #[test]
    fn initials_are_keyed() {
        let a = generate_initials(5, 2, 3, 2, (0.1, 10.0));
        assert_eq!(a, generate_initials(5, 2, 3, 2, (0.1, 10.0)));
        assert_ne!(a, generate_initials(5, 2, 4, 2, (0.1, 10.0)));
        assert_ne!(a, generate_initials(5, 3, 3, 2, (0.1, 10.0)));
        assert!(a.triples().all(|t| t.min() >= 0.1 && t.max() < 10.0));
        let ones = generate_initials(5, 0, 0, 3, (1.0, 1.0));
        assert!(ones.triples().all(|t| t == Triple::splat(1.0)));
    }

    #[test]
    fn grid_validation() {
        assert!(grid(&[2.0], &[1], 1).validate().is_ok());
        assert_eq!(grid(&[], &[1], 1).validate(), Err(GridError::EmptyAxis));
        assert_eq!(grid(&[2.0], &[0], 1).validate(), Err(GridError::BadM));
        assert_eq!(grid(&[2.0], &[1], 0).validate(), Err(GridError::NoTrials));
        let mut g = grid(&[2.0], &[1], 1);
        g.init_range = (0.0, 1.0);
        assert!(matches!(g.validate(), Err(GridError::BadRange { .. })));
    }

    #[test]
    fn converging_cell() {
        let res = run_sweep(&grid(&[2.0], &[1], 20), 2).unwrap();
        assert_eq!(res.rows.len(), 20);
        for (i, r) in res.rows.iter().enumerate() {
            assert_eq!(r.trial, i);
            assert_eq!(r.label, "Converged");
            assert!(r.point.unwrap().max_abs_diff(&Triple::splat(3.0)) < 1e-6);
        }
        let cells = aggregate(&res);
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].count("Converged"), 20);
        assert!(cells[0].mean_convergence_error.unwrap() < 1e-6);
    }

    #[test]
    fn unity_cells_never_overflow() {
        let res = run_sweep(&grid(&[1.0], &[1, 2], 20), 0).unwrap();
        assert_eq!(res.rows.len(), 40);
        assert!(res.rows.iter().all(|r| r.label != "NumericOverflow"));
        for cell in aggregate(&res) {
            assert_eq!(cell.histogram.values().sum::<usize>(), 20);
        }
    }

    #[test]
    fn schedule_independent() {
        let g = grid(&[0.5, 1.0, 2.0], &[1, 2], 4);
        let one = run_sweep(&g, 1).unwrap();
        let many = run_sweep(&g, 4).unwrap();
        assert_eq!(one, many);
    }
}
