//! Run configurations, number formatting, and CSV/JSON emission.
//!
//! Every real is written in its shortest round-trip decimal form, so parsing
//! an emitted file reproduces the original `f64` values bit for bit.
//!
//! # Config grammar
//!
//! One `key = value` per line; `#` starts a comment; later keys override
//! earlier ones. Keys: `A`, `m`, `steps`, `cap`, `seed`, `init_range`
//! (`lo,hi`) and indexed initial values such as `x[-1]`, `y[0]`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::analyze::{Envelope, ParityLimits, Persistence, RegimeLabel, RegimeReport, SemicycleReport};
use crate::dynamics::{
    iterate, validate, Component, InitBlock, InputError, Params, Sample, Trajectory,
    TrajectoryShapeError, Triple, DEFAULT_CAP,
};
use crate::equilibria::{Equilibrium, EquilibriumKind};
use crate::linearize::{Method, StabilityCertificate};
use crate::sweep::{generate_initials, CellSummary, SweepResult, LABELS};

pub const DEFAULT_STEPS: usize = 10_000;

/// Shortest decimal string that parses back to `v`, with integral values
/// written without a fractional part (`4`, not `4.0`).
pub fn format_real(v: f64) -> String {
    let s = format!("{v:?}");
    match s.strip_suffix(".0") {
        Some(int) => int.to_string(),
        None => s,
    }
}

/// A real that serializes as a JSON integer when it is integral and exactly
/// representable, and as a shortest round-trip float otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
            s.serialize_i64(v as i64)
        } else {
            s.serialize_f64(v)
        }
    }
}

fn real(v: f64) -> Real {
    Real(v)
}

fn opt_real(v: Option<f64>) -> Option<Real> {
    v.map(Real)
}

// ---------------------------------------------------------------------------
// configs

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("initial block incomplete: {0}")]
    IncompleteInitialBlock(String),
    #[error("explicit initial values cannot be combined with seed/init_range")]
    ConflictingInitSources,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSource {
    Explicit(InitBlock),
    /// Uniform draws from `range`, keyed by `seed`.
    Generated { seed: u64, range: (f64, f64) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub a: f64,
    pub m: usize,
    pub steps: usize,
    pub cap: f64,
    pub init: InitSource,
}

impl RunConfig {
    pub fn init_block(&self) -> InitBlock {
        match &self.init {
            InitSource::Explicit(b) => b.clone(),
            InitSource::Generated { seed, range } => generate_initials(*seed, 0, 0, self.m, *range),
        }
    }

    pub fn validated(&self) -> Result<(Params, InitBlock), InputError> {
        validate(self.a, self.m, self.init_block())
    }

    pub fn run(&self) -> Result<Trajectory, InputError> {
        let (params, init) = self.validated()?;
        iterate(&params, &init, self.steps, self.cap)
    }

    /// Canonical config text; [`parse_config`] maps it back to `self`.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "A = {}\nm = {}\nsteps = {}\ncap = {}\n",
            format_real(self.a),
            self.m,
            self.steps,
            format_real(self.cap)
        );
        match &self.init {
            InitSource::Explicit(b) => {
                for c in Component::ALL {
                    for (k, v) in b.list(c).iter().enumerate() {
                        let n = k as i64 - b.m() as i64;
                        out.push_str(&format!("{}[{n}] = {}\n", c.name(), format_real(*v)));
                    }
                }
            }
            InitSource::Generated { seed, range } => {
                out.push_str(&format!(
                    "seed = {seed}\ninit_range = {},{}\n",
                    format_real(range.0),
                    format_real(range.1)
                ));
            }
        }
        out
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        parse_config(s)
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        reason: reason.into(),
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| parse_err(line, format!("invalid value `{value}` for `{key}`")))
}

fn parse_index(key: &str) -> Option<(Component, &str)> {
    let (name, rest) = key.split_once('[')?;
    let idx = rest.strip_suffix(']')?;
    let c = Component::ALL.into_iter().find(|c| c.name() == name.trim())?;
    Some((c, idx.trim()))
}

/// Parses a run configuration.
///
/// ```
/// use rde_lab::io::{parse_config, InitSource};
///
/// let cfg = parse_config("A = 2\nm = 1\nseed = 7\ninit_range = 0.1,10\nsteps=100").unwrap();
/// assert_eq!(cfg.steps, 100);
/// assert!(matches!(cfg.init, InitSource::Generated { seed: 7, .. }));
/// ```
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut a = None;
    let mut m: Option<usize> = None;
    let mut steps = DEFAULT_STEPS;
    let mut cap = DEFAULT_CAP;
    let mut seed: Option<u64> = None;
    let mut range: Option<(f64, f64)> = None;
    let mut indexed: BTreeMap<(usize, i64), (f64, usize)> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(parse_err(line, format!("missing value for `{key}`")));
        }
        match key {
            "A" => a = Some(parse_value::<f64>(line, key, value)?),
            "m" => m = Some(parse_value(line, key, value)?),
            "steps" => steps = parse_value(line, key, value)?,
            "cap" => cap = parse_value(line, key, value)?,
            "seed" => seed = Some(parse_value(line, key, value)?),
            "init_range" => {
                let (lo, hi) = value
                    .split_once(',')
                    .ok_or_else(|| parse_err(line, "init_range expects `lo,hi`"))?;
                let lo: f64 = parse_value(line, key, lo.trim())?;
                let hi: f64 = parse_value(line, key, hi.trim())?;
                if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                    return Err(parse_err(line, "init_range needs 0 < lo <= hi"));
                }
                range = Some((lo, hi));
            }
            _ => {
                let (c, idx) = parse_index(key).ok_or_else(|| parse_err(line, format!("unknown key `{key}`")))?;
                let n: i64 = idx
                    .parse()
                    .map_err(|_| parse_err(line, format!("invalid index in `{key}`")))?;
                if n > 0 {
                    return Err(parse_err(line, format!("initial index must be <= 0 in `{key}`")));
                }
                let v: f64 = parse_value(line, key, value)?;
                indexed.insert((c as usize, n), (v, line));
            }
        }
    }

    let a = a.ok_or(ConfigError::MissingKey("A"))?;
    let m = m.ok_or(ConfigError::MissingKey("m"))?;

    let init = if indexed.is_empty() {
        match (seed, range) {
            (Some(seed), Some(range)) => InitSource::Generated { seed, range },
            (None, _) => return Err(ConfigError::IncompleteInitialBlock("no initial values and no seed".into())),
            (Some(_), None) => return Err(ConfigError::IncompleteInitialBlock("seed given without init_range".into())),
        }
    } else {
        if seed.is_some() || range.is_some() {
            return Err(ConfigError::ConflictingInitSources);
        }
        let lowest = -(m as i64);
        if let Some((&(_, n), &(_, line))) = indexed.iter().find(|((_, n), _)| *n < lowest) {
            return Err(parse_err(line, format!("index {n} is outside -{m}..=0")));
        }
        let mut lists: [Vec<f64>; 3] = Default::default();
        for c in Component::ALL {
            for n in lowest..=0 {
                match indexed.get(&(c as usize, n)) {
                    Some(&(v, _)) => lists[c as usize].push(v),
                    None => {
                        return Err(ConfigError::IncompleteInitialBlock(format!("missing {}[{n}]", c.name())));
                    }
                }
            }
        }
        let [x, y, z] = lists;
        InitSource::Explicit(InitBlock::new(x, y, z))
    };

    Ok(RunConfig {
        a,
        m,
        steps,
        cap,
        init,
    })
}

// ---------------------------------------------------------------------------
// trajectories

#[derive(Debug, Error)]
#[error("could not write output: {0}")]
pub struct SinkError(#[from] pub std::io::Error);

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad CSV header, expected `n,x,y,z`")]
    Header,
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid parameters: {0}")]
    Params(#[from] InputError),
    #[error("inconsistent samples: {0}")]
    Shape(#[from] TrajectoryShapeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ParamsJson {
    #[serde(rename = "A")]
    a: Real,
    m: usize,
    cap: Real,
}

#[derive(Serialize, Deserialize)]
struct SampleJson {
    n: i64,
    x: Real,
    y: Real,
    z: Real,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryJson {
    params: ParamsJson,
    overflow_at: Option<i64>,
    samples: Vec<SampleJson>,
}

fn csv_writer(buf: &mut Vec<u8>) -> csv::Writer<&mut Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(buf)
}

fn finish(mut w: csv::Writer<&mut Vec<u8>>) -> Result<(), SinkError> {
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> SinkError {
    SinkError(std::io::Error::other(e))
}

/// Serializes a trajectory (initial block included) to bytes.
pub fn trajectory_bytes(traj: &Trajectory, format: Format) -> Result<Vec<u8>, SinkError> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => {
            let mut w = csv_writer(&mut buf);
            w.write_record(["n", "x", "y", "z"]).map_err(csv_io)?;
            for s in traj.samples() {
                w.write_record([s.n.to_string(), format_real(s.x), format_real(s.y), format_real(s.z)])
                    .map_err(csv_io)?;
            }
            finish(w)?;
        }
        Format::Json => {
            let doc = TrajectoryJson {
                params: ParamsJson {
                    a: real(traj.params().a()),
                    m: traj.params().m(),
                    cap: real(traj.cap()),
                },
                overflow_at: traj.overflow_at(),
                samples: traj
                    .samples()
                    .iter()
                    .map(|s| SampleJson {
                        n: s.n,
                        x: real(s.x),
                        y: real(s.y),
                        z: real(s.z),
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut buf, &doc).map_err(|e| SinkError(e.into()))?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

/// Writes a trajectory and returns the number of bytes written.
pub fn emit_trajectory(traj: &Trajectory, format: Format, sink: &mut dyn Write) -> Result<usize, SinkError> {
    let bytes = trajectory_bytes(traj, format)?;
    sink.write_all(&bytes)?;
    sink.flush()?;
    Ok(bytes.len())
}

/// Reads the samples of a trajectory CSV.
pub fn read_trajectory_csv(text: &str) -> Result<Vec<Sample>, ReadError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    if rdr.headers()? != vec!["n", "x", "y", "z"] {
        return Err(ReadError::Header);
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |reason: String| ReadError::Row { row: i + 1, reason };
        if rec.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", rec.len())));
        }
        let n: i64 = rec[0].parse().map_err(|_| bad(format!("bad index `{}`", &rec[0])))?;
        let mut vals = [0.0; 3];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = rec[k + 1].parse().map_err(|_| bad(format!("bad value `{}`", &rec[k + 1])))?;
        }
        out.push(Sample::new(n, Triple::new(vals[0], vals[1], vals[2])));
    }
    Ok(out)
}

/// Reads a trajectory JSON document back into a [`Trajectory`].
pub fn read_trajectory_json(text: &str) -> Result<Trajectory, ReadError> {
    let doc: TrajectoryJson = serde_json::from_str(text)?;
    let params = Params::new(doc.params.a.0, doc.params.m)?;
    let samples = doc
        .samples
        .into_iter()
        .map(|s| Sample::new(s.n, Triple::new(s.x.0, s.y.0, s.z.0)))
        .collect();
    Ok(Trajectory::from_parts(params, samples, doc.overflow_at, doc.params.cap.0)?)
}

// ---------------------------------------------------------------------------
// reports

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumJson {
    pub x: Real,
    pub y: Real,
    pub z: Real,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Real>,
}

impl From<&Equilibrium> for EquilibriumJson {
    fn from(eq: &Equilibrium) -> Self {
        EquilibriumJson {
            x: real(eq.x),
            y: real(eq.y),
            z: real(eq.z),
            kind: match eq.kind {
                EquilibriumKind::Isolated => "isolated",
                EquilibriumKind::Family { .. } => "family",
            },
            mu: opt_real(eq.mu()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityJson {
    #[serde(rename = "A")]
    pub a: Real,
    pub m: usize,
    pub equilibrium: EquilibriumJson,
    pub method: &'static str,
    pub epsilon_used: Option<Real>,
    pub epsilon_bound: Option<Real>,
    pub scaled_norm: Option<Real>,
    pub rho_estimate: Option<Real>,
    pub rho_converged: bool,
    pub verdict: &'static str,
}

impl StabilityJson {
    pub fn new(a: f64, m: usize, eq: &Equilibrium, method: Method, cert: &StabilityCertificate) -> Self {
        StabilityJson {
            a: real(a),
            m,
            equilibrium: eq.into(),
            method: method.name(),
            epsilon_used: opt_real(cert.epsilon_used),
            epsilon_bound: opt_real(cert.epsilon_bound),
            scaled_norm: opt_real(cert.scaled_norm),
            rho_estimate: opt_real(cert.rho_estimate),
            rho_converged: cert.rho_converged,
            verdict: cert.verdict.as_str(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TripleJson {
    pub x: Real,
    pub y: Real,
    pub z: Real,
}

impl From<Triple> for TripleJson {
    fn from(t: Triple) -> Self {
        TripleJson {
            x: real(t.x),
            y: real(t.y),
            z: real(t.z),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailJson {
    pub component: &'static str,
    pub limsup: Real,
    pub liminf: Real,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeJson {
    pub rule: &'static str,
    #[serde(rename = "M")]
    pub lower: Real,
    pub upper: Real,
    pub alpha: Real,
    pub beta: Real,
    pub containment: Real,
}

impl From<&Envelope> for EnvelopeJson {
    fn from(e: &Envelope) -> Self {
        EnvelopeJson {
            rule: e.rule.name(),
            lower: real(e.lower),
            upper: real(e.upper),
            alpha: real(e.alpha),
            beta: real(e.beta),
            containment: real(e.containment),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParityJson {
    pub diverging: &'static str,
    pub finite_limit: TripleJson,
    pub finite_spread: Real,
    pub settled: bool,
    pub growth_checks: usize,
    pub growth_violations: usize,
}

impl From<&ParityLimits> for ParityJson {
    fn from(p: &ParityLimits) -> Self {
        ParityJson {
            diverging: p.diverging.name(),
            finite_limit: p.finite_limit.into(),
            finite_spread: real(p.finite_spread),
            settled: p.settled,
            growth_checks: p.growth_checks,
            growth_violations: p.growth_violations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PersistenceJson {
    pub holds: bool,
    pub min_tail: Real,
    pub absorbed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemicycleJson {
    pub reference: EquilibriumJson,
    pub transient: usize,
    /// Longest complete run over all components; `null` means every
    /// component shows a single semicycle after the transient.
    pub max_len: Option<usize>,
    pub runs_per_component: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeJson {
    #[serde(rename = "A")]
    pub a: Real,
    pub m: usize,
    pub steps: usize,
    pub label: &'static str,
    pub point: Option<TripleJson>,
    pub diverging_parity: Option<&'static str>,
    pub note: Option<String>,
    pub overflow_at: Option<i64>,
    pub tail_window: usize,
    pub tails: Vec<TailJson>,
    pub max_spread: Option<Real>,
    pub equilibrium_error: Option<Real>,
    pub envelope: Option<EnvelopeJson>,
    pub parity: Option<ParityJson>,
    pub persistence: PersistenceJson,
    pub semicycles: Option<SemicycleJson>,
}

impl RegimeJson {
    pub fn new(
        traj: &Trajectory,
        steps: usize,
        report: &RegimeReport,
        persistence: &Persistence,
        semicycles: Option<(&SemicycleReport, usize)>,
    ) -> Self {
        let (point, diverging_parity, note) = match &report.label {
            RegimeLabel::Converged(p) => (Some((*p).into()), None, None),
            RegimeLabel::ParityUnbounded { diverging, other_limit } => {
                (Some((*other_limit).into()), Some(diverging.name()), None)
            }
            RegimeLabel::Undetermined(reason) => (None, None, Some(reason.clone())),
            _ => (None, None, None),
        };
        RegimeJson {
            a: real(traj.params().a()),
            m: traj.params().m(),
            steps,
            label: report.label.name(),
            point,
            diverging_parity,
            note,
            overflow_at: traj.overflow_at(),
            tail_window: report.tail_window,
            tails: report
                .tails
                .iter()
                .map(|t| TailJson {
                    component: t.component.name(),
                    limsup: real(t.limsup),
                    liminf: real(t.liminf),
                })
                .collect(),
            max_spread: opt_real(report.max_spread()),
            equilibrium_error: opt_real(report.equilibrium_error),
            envelope: report.envelope.as_ref().map(Into::into),
            parity: report.parity.as_ref().map(Into::into),
            persistence: PersistenceJson {
                holds: persistence.holds,
                min_tail: real(persistence.min_tail),
                absorbed: persistence.absorbed,
            },
            semicycles: semicycles.map(|(s, transient)| SemicycleJson {
                reference: (&s.reference).into(),
                transient,
                max_len: s.max_len(),
                runs_per_component: s.components.iter().map(|c| c.runs.len()).collect(),
            }),
        }
    }
}

/// Compact JSON followed by a newline.
pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("report types always serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// sweeps

pub const SWEEP_HEADER: [&str; 15] = [
    "A",
    "m",
    "trial",
    "seed",
    "stream",
    "label",
    "px",
    "py",
    "pz",
    "diverging",
    "max_spread",
    "overflow_at",
    "equilibrium_error",
    "max_semicycle",
    "note",
];

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

/// One CSV row per trial, in canonical order.
pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>, SinkError> {
    let mut buf = Vec::new();
    let mut w = csv_writer(&mut buf);
    w.write_record(SWEEP_HEADER).map_err(csv_io)?;
    for r in &result.rows {
        w.write_record([
            format_real(r.a),
            r.m.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.stream.to_string(),
            r.label.clone(),
            opt(r.point, |p| format_real(p.x)),
            opt(r.point, |p| format_real(p.y)),
            opt(r.point, |p| format_real(p.z)),
            opt(r.diverging, |p| p.name().to_string()),
            opt(r.max_spread, format_real),
            opt(r.overflow_at, |n| n.to_string()),
            opt(r.equilibrium_error, format_real),
            opt(r.max_semicycle, |n| n.to_string()),
            r.note.clone(),
        ])
        .map_err(csv_io)?;
    }
    finish(w)?;
    Ok(buf)
}

/// One CSV row per `(A, m)` cell with the label histogram.
pub fn summary_csv(cells: &[CellSummary]) -> Result<Vec<u8>, SinkError> {
    let mut buf = Vec::new();
    let mut w = csv_writer(&mut buf);
    let mut header = vec!["A", "m", "trials"];
    header.extend(LABELS);
    header.extend(["mean_convergence_error", "max_semicycle"]);
    w.write_record(&header).map_err(csv_io)?;
    for c in cells {
        let mut rec = vec![format_real(c.a), c.m.to_string(), c.trials.to_string()];
        rec.extend(LABELS.iter().map(|l| c.count(l).to_string()));
        rec.push(opt(c.mean_convergence_error, format_real));
        rec.push(opt(c.max_semicycle, |n| n.to_string()));
        w.write_record(&rec).map_err(csv_io)?;
    }
    finish(w)?;
    Ok(buf)
}
