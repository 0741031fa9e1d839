//! Classifiers over trajectories: persistence, boundedness envelopes,
//! semicycles, parity limits for `0 < A < 1`, limsup/liminf estimates, an
//! empirical local-stability probe and the overall regime label.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::{
    advance, Component, InitBlock, Orbit, Params, Parity, Sample, Trajectory, Triple,
};
use crate::equilibria::{estimate_mu, isolated_equilibrium, Equilibrium};

/// Limsup - liminf below which a tail counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Spread below which a parity tail "has a limit".
pub const LIMIT_TOL: f64 = 1e-9;
/// Same-parity samples that must keep growing before divergence is declared.
pub const DIVERGENCE_RUN: usize = 20;
/// Relative slack for envelope containment; covers rounding in the bounds.
pub const ENVELOPE_REL_SLACK: f64 = 1e-12;
/// Deviation from a semicycle reference below which a sample is not resolvable.
pub const SEMICYCLE_RESOLUTION: f64 = 1e-9;
/// Horizon for [`probe_local_stability`] orbits.
pub const PROBE_HORIZON: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyzeError {
    #[error("envelope lower bound {lower} does not exceed A = {a}; upper bound undefined")]
    DegenerateEnvelope { lower: f64, a: f64 },
    #[error("operation needs A in {expected}, got A = {a}")]
    AOutOfRange { a: f64, expected: &'static str },
    #[error("need at least {needed} iterates, have {found}")]
    TooShort { needed: usize, found: usize },
    #[error("no diverging parity subsequence detected")]
    NoDivergenceDetected,
    #[error("window {window} needs a series of length >= {needed}, have {found}")]
    WindowTooLarge {
        window: usize,
        needed: usize,
        found: usize,
    },
}

// ---------------------------------------------------------------------------
// persistence

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Persistence {
    pub holds: bool,
    /// Smallest component over all iterates.
    pub min_tail: f64,
    /// Iterates that round to exactly `A` although their increment is positive.
    pub absorbed: usize,
}

/// Checks that every stored iterate lies strictly above `A`.
///
/// In binary64 `A + q` rounds to `A` once `q` drops below half an ulp of `A`,
/// which happens on the collapsing parity of a diverging orbit. Such a sample
/// is accepted when the increment recomputed from the stored window is
/// positive, and counted in `absorbed`.
pub fn persistence_check(traj: &Trajectory) -> Persistence {
    let a = traj.params().a();
    let m = traj.params().m() as i64;
    let mut holds = true;
    let mut absorbed = 0;
    let mut min_tail = f64::INFINITY;
    for s in traj.iterates() {
        min_tail = min_tail.min(s.triple().min());
        let t = s.triple();
        if t.min() > a {
            continue;
        }
        let oldest = traj.get(s.n - 1 - m).map(Sample::triple);
        let newest = traj.get(s.n - 1).map(Sample::triple);
        let ok = match (oldest, newest) {
            (Some(o), Some(w)) => {
                let increments = [o.x / w.z, o.y / w.z, o.z / w.y];
                let exact = advance(a, o, w) == t;
                exact
                    && Component::ALL
                        .iter()
                        .zip(increments)
                        .all(|(&c, q)| t.get(c) > a || (t.get(c) == a && q > 0.0))
            }
            _ => false,
        };
        if ok {
            absorbed += 1;
        } else {
            holds = false;
        }
    }
    Persistence {
        holds,
        min_tail,
        absorbed,
    }
}

// ---------------------------------------------------------------------------
// envelopes

/// How the envelope lower bound `M` is formed from `alpha` (minimum) and
/// `beta` (maximum) of the first `m + 1` iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeRule {
    /// `M = min{alpha, beta/(beta-1)}`, upper `M/(M-A)`.
    Literal,
    /// `M = min{alpha, beta/(beta-A)}`, upper `M/(M-A)`.
    Shifted,
    /// `M = min{alpha, A beta/(beta-1)}`, upper `M/(M-A)`. This choice makes
    /// `beta <= M/(M-A)` and `A < M <= A+1`, which is exactly what the
    /// induction step needs, so the interval is forward invariant.
    Invariant,
}

impl EnvelopeRule {
    pub const ALL: [EnvelopeRule; 3] = [
        EnvelopeRule::Literal,
        EnvelopeRule::Shifted,
        EnvelopeRule::Invariant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvelopeRule::Literal => "literal",
            EnvelopeRule::Shifted => "shifted",
            EnvelopeRule::Invariant => "invariant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub rule: EnvelopeRule,
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Fraction of iterates (`n >= 1`) inside `[lower, upper]`.
    pub containment: f64,
}

impl Envelope {
    pub fn contains(&self, v: f64) -> bool {
        let slack = ENVELOPE_REL_SLACK * self.upper.abs().max(1.0);
        v >= self.lower - slack && v <= self.upper + slack
    }
}

/// `(alpha, beta)` over iterates `1..=m+1`.
pub fn envelope_seed(traj: &Trajectory) -> Result<(f64, f64), AnalyzeError> {
    let w = traj.params().window_len();
    let it = traj.iterates();
    if it.len() < w {
        return Err(AnalyzeError::TooShort {
            needed: w,
            found: it.len(),
        });
    }
    let first = &it[..w];
    let alpha = first.iter().map(|s| s.triple().min()).fold(f64::INFINITY, f64::min);
    let beta = first.iter().map(|s| s.triple().max()).fold(f64::NEG_INFINITY, f64::max);
    Ok((alpha, beta))
}

pub fn boundedness_envelope(traj: &Trajectory, rule: EnvelopeRule) -> Result<Envelope, AnalyzeError> {
    let a = traj.params().a();
    if a < 1.0 {
        return Err(AnalyzeError::AOutOfRange { a, expected: "[1, inf)" });
    }
    let (alpha, beta) = envelope_seed(traj)?;
    let candidate = match rule {
        EnvelopeRule::Literal => beta / (beta - 1.0),
        EnvelopeRule::Shifted => beta / (beta - a),
        EnvelopeRule::Invariant => a * beta / (beta - 1.0),
    };
    let lower = alpha.min(candidate);
    if !(lower > a) {
        return Err(AnalyzeError::DegenerateEnvelope { lower, a });
    }
    let upper = lower / (lower - a);
    let mut env = Envelope {
        rule,
        lower,
        upper,
        alpha,
        beta,
        containment: 0.0,
    };
    let it = traj.iterates();
    let inside = it
        .iter()
        .filter(|s| Component::ALL.iter().all(|&c| env.contains(s.get(c))))
        .count();
    env.containment = inside as f64 / it.len() as f64;
    Ok(env)
}

// ---------------------------------------------------------------------------
// semicycles

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// Term at or above the reference.
    Positive,
    Negative,
}

impl Sign {
    pub fn of(value: f64, reference: f64) -> Sign {
        if value >= reference {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Positive => '+',
            Sign::Negative => '-',
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub sign: Sign,
    /// Offset of the first term within the analysed series.
    pub start: usize,
    pub len: usize,
}

/// Maximal runs of terms `>= reference` (positive) or `< reference`.
pub fn semicycles(series: &[f64], reference: f64) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (i, &v) in series.iter().enumerate() {
        let sign = Sign::of(v, reference);
        match runs.last_mut() {
            Some(r) if r.sign == sign => r.len += 1,
            _ => runs.push(Run { sign, start: i, len: 1 }),
        }
    }
    runs
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSemicycles {
    pub component: Component,
    pub reference: f64,
    /// Index `n` of the first analysed term.
    pub first_n: i64,
    /// Index `n` of the last analysed term; the range stops at the last term
    /// still resolvable from the reference.
    pub last_n: i64,
    pub runs: Vec<Run>,
    /// Longest run that is cut by neither end of the range, if any.
    pub max_complete: Option<usize>,
}

impl ComponentSemicycles {
    /// True when the analysed range shows at most one sign change, i.e. no
    /// complete semicycle.
    pub fn single_semicycle(&self) -> bool {
        self.max_complete.is_none()
    }

    pub fn analysed_len(&self) -> usize {
        if self.last_n < self.first_n {
            0
        } else {
            (self.last_n - self.first_n + 1) as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemicycleReport {
    pub reference: Equilibrium,
    pub components: Vec<ComponentSemicycles>,
}

impl SemicycleReport {
    /// Longest complete run over all components.
    pub fn max_len(&self) -> Option<usize> {
        self.components.iter().filter_map(|c| c.max_complete).max()
    }
}

/// Semicycles of each component relative to `reference`, skipping the first
/// `transient` iterates and trimming the tail once the orbit is no longer
/// resolvable from the reference (deviation `<= SEMICYCLE_RESOLUTION` scaled
/// by the reference).
pub fn semicycle_report(traj: &Trajectory, reference: &Equilibrium, transient: usize) -> SemicycleReport {
    let it = traj.iterates();
    let body = if transient < it.len() { &it[transient..] } else { &[][..] };
    let components = Component::ALL
        .iter()
        .map(|&c| {
            let r = reference.triple().get(c);
            let res = SEMICYCLE_RESOLUTION * r.abs().max(1.0);
            let end = body
                .iter()
                .rposition(|s| (s.get(c) - r).abs() > res)
                .map_or(0, |p| p + 1);
            let series: Vec<f64> = body[..end].iter().map(|s| s.get(c)).collect();
            let runs = semicycles(&series, r);
            let max_complete = if runs.len() >= 3 {
                runs[1..runs.len() - 1].iter().map(|r| r.len).max()
            } else {
                None
            };
            let first_n = body.first().map_or(traj.last_index() + 1, |s| s.n);
            ComponentSemicycles {
                component: c,
                reference: r,
                first_n,
                last_n: first_n + end as i64 - 1,
                runs,
                max_complete,
            }
        })
        .collect();
    SemicycleReport {
        reference: *reference,
        components,
    }
}

// ---------------------------------------------------------------------------
// parity behaviour for 0 < A < 1

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Odd-indexed initials small, even-indexed large.
    I,
    /// Even-indexed initials small, odd-indexed large.
    II,
}

impl Variant {
    /// Parity expected to diverge.
    pub fn diverging(self) -> Parity {
        match self {
            Variant::I => Parity::Even,
            Variant::II => Parity::Odd,
        }
    }
}

fn require_sub_unit(a: f64) -> Result<(), AnalyzeError> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(AnalyzeError::AOutOfRange { a, expected: "(0, 1)" })
    }
}

/// Whether `init` meets the parity hypotheses for unbounded solutions: `m`
/// odd, one parity of the initial block in `(0, 1)` and the other above
/// `1/(1-A)`.
pub fn parity_hypothesis_check(
    init: &InitBlock,
    a: f64,
    m: usize,
    variant: Variant,
) -> Result<bool, AnalyzeError> {
    require_sub_unit(a)?;
    if m % 2 == 0 || init.m() != m {
        return Ok(false);
    }
    let threshold = 1.0 / (1.0 - a);
    let small_parity = variant.diverging().other();
    Ok((-(m as i64)..=0).all(|n| {
        let t = init.at(n);
        Component::ALL.iter().all(|&c| {
            let v = t.get(c);
            if Parity::of(n) == small_parity {
                v > 0.0 && v < 1.0
            } else {
                v > threshold
            }
        })
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityLimits {
    pub diverging: Parity,
    /// Last value of each component on the other parity.
    pub finite_limit: Triple,
    /// Max - min over the final `10(m+1)` samples of the other parity.
    pub finite_spread: f64,
    pub settled: bool,
    /// Indices `j >= m+2` of the diverging parity checked against
    /// `v[j] > 2A + v[j-2m-2]`, per component.
    pub growth_checks: usize,
    pub growth_violations: usize,
}

/// Detects a diverging parity subsequence and the limit of the other one.
///
/// Divergence requires a cap breach and, over the last `DIVERGENCE_RUN`
/// stored samples of that parity, growth along the delay lag:
/// `v[j] > v[j-(m+1)]` for every component. The lag matters because for
/// `m >= 3` one parity interleaves `(m+1)/2` independent chains.
pub fn parity_limits(traj: &Trajectory) -> Result<ParityLimits, AnalyzeError> {
    let a = traj.params().a();
    require_sub_unit(a)?;
    let m = traj.params().m();
    let lag = (m + 1) as i64;
    let at = traj.overflow_at().ok_or(AnalyzeError::NoDivergenceDetected)?;
    let diverging = Parity::of(at);

    let div: Vec<&Sample> = traj
        .iterates()
        .iter()
        .filter(|s| Parity::of(s.n) == diverging)
        .collect();
    if div.len() < DIVERGENCE_RUN {
        return Err(AnalyzeError::NoDivergenceDetected);
    }
    let growing = div[div.len() - DIVERGENCE_RUN..].iter().all(|s| {
        traj.get(s.n - lag).is_some_and(|p| {
            Component::ALL.iter().all(|&c| s.get(c) > p.get(c))
        })
    });
    if !growing {
        return Err(AnalyzeError::NoDivergenceDetected);
    }

    let window = 10 * (m + 1);
    let other: Vec<&Sample> = traj
        .iterates()
        .iter()
        .filter(|s| Parity::of(s.n) == diverging.other())
        .collect();
    if other.len() < window {
        return Err(AnalyzeError::NoDivergenceDetected);
    }
    let tail = &other[other.len() - window..];
    let finite_limit = tail[tail.len() - 1].triple();
    let finite_spread = Component::ALL
        .iter()
        .map(|&c| {
            let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.get(c)), hi.max(s.get(c)))
            });
            hi - lo
        })
        .fold(0.0, f64::max);

    let (growth_checks, growth_violations) = growth_law(traj, diverging);
    Ok(ParityLimits {
        diverging,
        finite_limit,
        finite_spread,
        settled: finite_spread <= LIMIT_TOL,
        growth_checks,
        growth_violations,
    })
}

/// Counts `(checks, violations)` of `v[j] > 2A + v[j-2m-2]` over indices
/// `j >= m+2` of the given parity, per component.
pub fn growth_law(traj: &Trajectory, parity: Parity) -> (usize, usize) {
    let a = traj.params().a();
    let m = traj.params().m() as i64;
    let mut checks = 0;
    let mut violations = 0;
    for s in traj.iterates() {
        if Parity::of(s.n) != parity || s.n < m + 2 {
            continue;
        }
        let Some(back) = traj.get(s.n - 2 * m - 2) else {
            continue;
        };
        for c in Component::ALL {
            checks += 1;
            if !(s.get(c) > 2.0 * a + back.get(c)) {
                violations += 1;
            }
        }
    }
    (checks, violations)
}

// ---------------------------------------------------------------------------
// limsup / liminf

/// `(max, min)` over the final `window` values; the series must hold at
/// least `2 * window` values.
pub fn limsup_liminf(series: &[f64], window: usize) -> Result<(f64, f64), AnalyzeError> {
    let needed = 2 * window;
    if window == 0 || series.len() < needed {
        return Err(AnalyzeError::WindowTooLarge {
            window,
            needed,
            found: series.len(),
        });
    }
    let tail = &series[series.len() - window..];
    let sup = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf = tail.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((sup, inf))
}

// ---------------------------------------------------------------------------
// local stability probe

/// Fraction of perturbed starts whose orbits stay within `eps` of `eq`.
///
/// Each trial perturbs every initial entry by a uniform draw from
/// `(-h, h)` with `h = delta / (m+1)` (capped at half the equilibrium
/// component), so each component list is within `delta` of the equilibrium in
/// the 1-norm. Orbits are followed for `horizon` steps.
pub fn probe_local_stability(
    eq: &Equilibrium,
    params: &Params,
    delta: f64,
    eps: f64,
    trials: usize,
    seed: u64,
    horizon: usize,
) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let m = params.m();
    let target = eq.triple();
    let half_width = |c: Component| (delta / (m + 1) as f64).min(0.5 * target.get(c)).max(0.0);
    let mut stable = 0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let mut draw = |c: Component| {
            let h = half_width(c);
            let base = target.get(c);
            if h == 0.0 {
                base
            } else {
                base + rng.random_range(-h..h)
            }
        };
        let init = InitBlock::from_fn(m, |_| {
            Triple::new(draw(Component::X), draw(Component::Y), draw(Component::Z))
        });
        let ok = Orbit::new(params, &init)
            .take(horizon)
            .all(|s| s.triple().max_abs_diff(&target) < eps);
        if ok {
            stable += 1;
        }
    }
    stable as f64 / trials as f64
}

// ---------------------------------------------------------------------------
// regime classification

#[derive(Debug, Clone, PartialEq)]
pub enum RegimeLabel {
    Converged(Triple),
    ParityUnbounded { diverging: Parity, other_limit: Triple },
    BoundedOscillatory,
    NumericOverflow,
    Undetermined(String),
}

impl RegimeLabel {
    pub fn name(&self) -> &'static str {
        match self {
            RegimeLabel::Converged(_) => "Converged",
            RegimeLabel::ParityUnbounded { .. } => "ParityUnbounded",
            RegimeLabel::BoundedOscillatory => "BoundedOscillatory",
            RegimeLabel::NumericOverflow => "NumericOverflow",
            RegimeLabel::Undetermined(_) => "Undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailStats {
    pub component: Component,
    pub limsup: f64,
    pub liminf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub label: RegimeLabel,
    pub tail_window: usize,
    /// Per-component limsup/liminf over the tail window (empty when the run
    /// is too short).
    pub tails: Vec<TailStats>,
    pub envelope: Option<Envelope>,
    pub parity: Option<ParityLimits>,
    /// Distance of the converged point from the isolated equilibrium (`A != 1`).
    pub equilibrium_error: Option<f64>,
}

impl RegimeReport {
    /// Largest `limsup - liminf` over the components.
    pub fn max_spread(&self) -> Option<f64> {
        self.tails
            .iter()
            .map(|t| t.limsup - t.liminf)
            .reduce(f64::max)
    }
}

/// Tail window used by [`classify_regime`]: `max(100, 10(m+1))`.
pub fn tail_window(m: usize) -> usize {
    (10 * (m + 1)).max(100)
}

pub fn classify_regime(traj: &Trajectory) -> RegimeReport {
    let a = traj.params().a();
    let m = traj.params().m();
    let window = tail_window(m);
    let tails: Vec<TailStats> = Component::ALL
        .iter()
        .filter_map(|&c| {
            limsup_liminf(&traj.series(c), window).ok().map(|(limsup, liminf)| TailStats {
                component: c,
                limsup,
                liminf,
            })
        })
        .collect();
    let envelope = if a >= 1.0 {
        boundedness_envelope(traj, EnvelopeRule::Invariant).ok()
    } else {
        None
    };
    let mut report = RegimeReport {
        label: RegimeLabel::Undetermined(String::new()),
        tail_window: window,
        tails,
        envelope,
        parity: None,
        equilibrium_error: None,
    };

    if traj.overflowed() {
        if a < 1.0 {
            if let Ok(p) = parity_limits(traj) {
                report.parity = Some(p);
                report.label = RegimeLabel::ParityUnbounded {
                    diverging: p.diverging,
                    other_limit: p.finite_limit,
                };
                return report;
            }
        }
        report.label = RegimeLabel::NumericOverflow;
        return report;
    }

    if report.tails.len() != 3 {
        report.label = RegimeLabel::Undetermined(format!(
            "need {} iterates for a tail window of {window}",
            2 * window
        ));
        return report;
    }

    let spread = report.max_spread().unwrap_or(f64::INFINITY);
    if spread < CONVERGENCE_TOL {
        let t = &report.tails;
        let point = Triple::new(
            0.5 * (t[0].limsup + t[0].liminf),
            0.5 * (t[1].limsup + t[1].liminf),
            0.5 * (t[2].limsup + t[2].liminf),
        );
        if let Ok(eq) = isolated_equilibrium(a) {
            report.equilibrium_error = Some(point.max_abs_diff(&eq.triple()));
        }
        report.label = RegimeLabel::Converged(point);
        return report;
    }

    if a >= 1.0 {
        report.label = RegimeLabel::BoundedOscillatory;
        return report;
    }

    // 0 < A < 1 without a cap breach: call it bounded unless the last window
    // still sets new highs relative to the one before it
    let it = traj.iterates();
    let max_of = |s: &[Sample]| s.iter().map(|s| s.triple().max()).fold(f64::NEG_INFINITY, f64::max);
    let last = max_of(&it[it.len() - window..]);
    let before = max_of(&it[it.len() - 2 * window..it.len() - window]);
    report.label = if last > before * (1.0 + 1e-9) {
        RegimeLabel::Undetermined("tail maxima still increasing".into())
    } else {
        RegimeLabel::BoundedOscillatory
    };
    report
}

/// Semicycle reference for a trajectory: the isolated equilibrium when
/// `A != 1`, otherwise the family member at the tail-mean estimate.
pub fn semicycle_reference(traj: &Trajectory) -> Option<Equilibrium> {
    let a = traj.params().a();
    if a == 1.0 {
        estimate_mu(traj).ok().and_then(|e| e.equilibrium().ok())
    } else {
        isolated_equilibrium(a).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{iterate, DEFAULT_CAP};
    use crate::equilibria::family_equilibrium;

    fn run(a: f64, m: usize, init: InitBlock, steps: usize) -> Trajectory {
        iterate(&Params::new(a, m).unwrap(), &init, steps, DEFAULT_CAP).unwrap()
    }

    fn parity_block(m: usize, small: f64, large: f64, variant: Variant) -> InitBlock {
        InitBlock::from_fn(m, |n| {
            let small_here = Parity::of(n) != variant.diverging();
            Triple::splat(if small_here { small } else { large })
        })
    }

    #[test]
    fn persistence_examples() {
        let p = persistence_check(&run(2.0, 1, InitBlock::constant(1, Triple::splat(1.0)), 200));
        assert!(p.holds);
        assert!(p.min_tail > 2.0);

        let p = persistence_check(&run(1.0, 1, InitBlock::constant(1, Triple::splat(2.0)), 50));
        assert!(p.holds);
        assert_eq!(p.min_tail, 2.0);
        assert_eq!(p.absorbed, 0);

        let t = run(0.5, 1, parity_block(1, 0.5, 3.0, Variant::I), 1_000_000);
        assert!(t.overflowed());
        let p = persistence_check(&t);
        assert!(p.holds);
        // the odd parity collapses onto A in binary64 long before the cap
        assert!(p.absorbed > 0);
    }

    #[test]
    fn envelope_of_constant_run() {
        let t = run(1.0, 1, InitBlock::constant(1, Triple::splat(2.0)), 100);
        for rule in EnvelopeRule::ALL {
            let e = boundedness_envelope(&t, rule).unwrap();
            assert_eq!((e.alpha, e.beta), (2.0, 2.0));
            assert_eq!((e.lower, e.upper), (2.0, 2.0));
            assert_eq!(e.containment, 1.0);
        }
    }

    #[test]
    fn envelope_unity_block() {
        let t = run(1.0, 1, InitBlock::constant(1, Triple::splat(1.5)), 10_000);
        let e = boundedness_envelope(&t, EnvelopeRule::Literal).unwrap();
        assert_eq!(e.containment, 1.0);
    }

    #[test]
    fn literal_envelope_degenerates_for_large_a() {
        // beta > A >= 2 forces beta/(beta-1) < 2 <= A
        let t = run(2.0, 1, InitBlock::constant(1, Triple::splat(1.0)), 100);
        assert!(matches!(
            boundedness_envelope(&t, EnvelopeRule::Literal),
            Err(AnalyzeError::DegenerateEnvelope { .. })
        ));
        let e = boundedness_envelope(&t, EnvelopeRule::Invariant).unwrap();
        assert_eq!(e.containment, 1.0);
    }

    #[test]
    fn envelope_rejects_small_a() {
        let t = run(0.5, 1, InitBlock::constant(1, Triple::splat(1.0)), 100);
        assert!(matches!(
            boundedness_envelope(&t, EnvelopeRule::Invariant),
            Err(AnalyzeError::AOutOfRange { .. })
        ));
    }

    #[test]
    fn semicycle_examples() {
        let runs = semicycles(&[2.0; 7], 2.0);
        assert_eq!(runs, vec![Run { sign: Sign::Positive, start: 0, len: 7 }]);

        let runs = semicycles(&[1.0, 3.0, 1.0, 3.0], 2.0);
        let signs: String = runs.iter().map(|r| r.sign.symbol()).collect();
        assert_eq!(signs, "-+-+");
        assert!(runs.iter().all(|r| r.len == 1));
        assert!(semicycles(&[], 1.0).is_empty());
    }

    #[test]
    fn semicycle_report_trims_unresolvable_tail() {
        let t = run(2.0, 1, InitBlock::constant(1, Triple::new(1.0, 2.0, 5.0)), 3_000);
        let eq = isolated_equilibrium(2.0).unwrap();
        let rep = semicycle_report(&t, &eq, 0);
        for c in &rep.components {
            assert!(c.last_n < 3_000, "converged tail should be trimmed");
            let total: usize = c.runs.iter().map(|r| r.len).sum();
            assert_eq!(total, c.analysed_len());
        }
    }

    #[test]
    fn hypothesis_examples() {
        let block = parity_block(1, 0.5, 3.0, Variant::I);
        assert!(parity_hypothesis_check(&block, 0.5, 1, Variant::I).unwrap());
        assert!(!parity_hypothesis_check(&block, 0.5, 1, Variant::II).unwrap());
        let even = InitBlock::constant(2, Triple::splat(0.5));
        assert!(!parity_hypothesis_check(&even, 0.5, 2, Variant::I).unwrap());
        assert!(matches!(
            parity_hypothesis_check(&block, 1.5, 1, Variant::I),
            Err(AnalyzeError::AOutOfRange { .. })
        ));
        // threshold 1/(1-A) = 2 is strict
        let edge = parity_block(1, 0.5, 2.0, Variant::I);
        assert!(!parity_hypothesis_check(&edge, 0.5, 1, Variant::I).unwrap());
    }

    #[test]
    fn parity_limits_variant_one() {
        let t = run(0.5, 1, parity_block(1, 0.5, 3.0, Variant::I), 1_000_000);
        let p = parity_limits(&t).unwrap();
        assert_eq!(p.diverging, Parity::Even);
        assert!(p.settled);
        assert!(p.finite_limit.max_abs_diff(&Triple::splat(0.5)) <= 1e-6);
        assert!(p.growth_checks > 0);
        assert_eq!(p.growth_violations, 0);
    }

    #[test]
    fn parity_limits_variant_two() {
        let t = run(0.5, 3, parity_block(3, 0.3, 4.0, Variant::II), 1_000_000);
        let p = parity_limits(&t).unwrap();
        assert_eq!(p.diverging, Parity::Odd);
        assert!(p.finite_limit.max_abs_diff(&Triple::splat(0.5)) <= 1e-6);
        assert_eq!(p.growth_violations, 0);
    }

    #[test]
    fn parity_limits_without_overflow() {
        let t = run(0.5, 2, InitBlock::constant(2, Triple::splat(1.5)), 2_000);
        assert_eq!(parity_limits(&t), Err(AnalyzeError::NoDivergenceDetected));
    }

    #[test]
    fn limsup_liminf_examples() {
        assert_eq!(limsup_liminf(&[3.0; 10], 5).unwrap(), (3.0, 3.0));
        let alt: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 1.0 } else { 3.0 }).collect();
        assert_eq!(limsup_liminf(&alt, 4).unwrap(), (3.0, 1.0));
        assert!(matches!(
            limsup_liminf(&[1.0; 5], 3),
            Err(AnalyzeError::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn probe_examples() {
        let p = Params::new(2.0, 1).unwrap();
        let eq = isolated_equilibrium(2.0).unwrap();
        assert_eq!(probe_local_stability(&eq, &p, 1e-3, 1e-1, 50, 9, PROBE_HORIZON), 1.0);
        assert_eq!(probe_local_stability(&eq, &p, 0.0, 1e-12, 5, 9, PROBE_HORIZON), 1.0);
    }

    #[test]
    fn probe_unstable_equilibrium() {
        let p = Params::new(0.5, 1).unwrap();
        let eq = isolated_equilibrium(0.5).unwrap();
        let f = probe_local_stability(&eq, &p, 1e-3, 1e-1, 20, 3, PROBE_HORIZON);
        assert!(f < 1.0);
    }

    #[test]
    fn classify_examples() {
        let t = run(2.0, 1, InitBlock::constant(1, Triple::new(0.5, 7.0, 2.0)), 10_000);
        let r = classify_regime(&t);
        match r.label {
            RegimeLabel::Converged(pt) => assert!(pt.max_abs_diff(&Triple::splat(3.0)) < 1e-6),
            other => panic!("expected convergence, got {other:?}"),
        }

        let t = run(0.5, 1, parity_block(1, 0.5, 3.0, Variant::I), 1_000_000);
        match classify_regime(&t).label {
            RegimeLabel::ParityUnbounded { diverging, other_limit } => {
                assert_eq!(diverging, Parity::Even);
                assert!(other_limit.max_abs_diff(&Triple::splat(0.5)) <= 1e-6);
            }
            other => panic!("expected parity divergence, got {other:?}"),
        }

        let t = run(1.0, 1, InitBlock::constant(1, Triple::new(1.5, 4.0, 2.5)), 10_000);
        let label = classify_regime(&t).label;
        assert!(matches!(
            label,
            RegimeLabel::BoundedOscillatory | RegimeLabel::Converged(_)
        ));
    }

    #[test]
    fn semicycle_reference_selection() {
        let t = run(1.0, 2, InitBlock::constant(2, Triple::splat(2.0)), 400);
        let r = semicycle_reference(&t).unwrap();
        assert_eq!(r, family_equilibrium(2.0).unwrap());
        let t = run(3.0, 2, InitBlock::constant(2, Triple::splat(2.0)), 10);
        assert_eq!(semicycle_reference(&t).unwrap().triple(), Triple::splat(4.0));
    }
}
