//! Forward iteration of the delayed system
//!
//! ```text
//! x[n+1] = A + x[n-m] / z[n]
//! y[n+1] = A + y[n-m] / z[n]
//! z[n+1] = A + z[n-m] / y[n]
//! ```
//!
//! Samples carry the signed index `n`; the initial block occupies
//! `n = -m..=0` and iterates start at `n = 1`.

use std::fmt;

use thiserror::Error;

/// Default numeric guard used when the caller does not pick one.
pub const DEFAULT_CAP: f64 = 1e100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InputError {
    #[error("A must be a positive real number, got {0}")]
    NonPositiveA(f64),
    #[error("delay m must be at least 1, got {0}")]
    DelayLessThanOne(usize),
    #[error("initial value {component}[{n}] = {value} is not positive")]
    NonPositiveInitial {
        component: Component,
        n: i64,
        value: f64,
    },
    #[error("initial list for {component} has {found} entries, expected {expected}")]
    WrongBlockLength {
        component: Component,
        expected: usize,
        found: usize,
    },
    #[error("cap {cap} must exceed A = {a}")]
    CapNotAboveA { cap: f64, a: f64 },
    #[error("at least one step is required")]
    NoSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    X,
    Y,
    Z,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Z];

    pub fn name(self) -> &'static str {
        match self {
            Component::X => "x",
            Component::Y => "y",
            Component::Z => "z",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: i64) -> Parity {
        if n.rem_euclid(2) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn other(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One state `(x, y, z)` of the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Triple {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Triple { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Triple { x: v, y: v, z: v }
    }

    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::X => self.x,
            Component::Y => self.y,
            Component::Z => self.z,
        }
    }

    pub fn min(&self) -> f64 {
        self.x.min(self.y).min(self.z)
    }

    pub fn max(&self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &Triple) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Validated parameter pair `(A, m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    a: f64,
    m: usize,
}

impl Params {
    pub fn new(a: f64, m: usize) -> Result<Self, InputError> {
        // `!(a > 0)` also rejects NaN
        if !(a > 0.0) || !a.is_finite() {
            return Err(InputError::NonPositiveA(a));
        }
        if m < 1 {
            return Err(InputError::DelayLessThanOne(m));
        }
        Ok(Params { a, m })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Length of the delay window, `m + 1`.
    pub fn window_len(&self) -> usize {
        self.m + 1
    }
}

/// The initial values for `n = -m..=0`, stored oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct InitBlock {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl InitBlock {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Self {
        InitBlock { x, y, z }
    }

    /// Every initial triple equal to `t`.
    pub fn constant(m: usize, t: Triple) -> Self {
        Self::from_fn(m, |_| t)
    }

    /// Builds the block from a function of the signed index `n = -m..=0`.
    pub fn from_fn(m: usize, mut f: impl FnMut(i64) -> Triple) -> Self {
        let mut block = InitBlock {
            x: Vec::with_capacity(m + 1),
            y: Vec::with_capacity(m + 1),
            z: Vec::with_capacity(m + 1),
        };
        for n in -(m as i64)..=0 {
            let t = f(n);
            block.x.push(t.x);
            block.y.push(t.y);
            block.z.push(t.z);
        }
        block
    }

    /// Delay implied by the length of the `x` list.
    pub fn m(&self) -> usize {
        self.x.len().saturating_sub(1)
    }

    pub fn list(&self, c: Component) -> &[f64] {
        match c {
            Component::X => &self.x,
            Component::Y => &self.y,
            Component::Z => &self.z,
        }
    }

    /// Initial triple at signed index `n` (`-m <= n <= 0`).
    pub fn at(&self, n: i64) -> Triple {
        let i = (n + self.m() as i64) as usize;
        Triple::new(self.x[i], self.y[i], self.z[i])
    }

    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        (0..self.x.len()).map(move |i| Triple::new(self.x[i], self.y[i], self.z[i]))
    }
}

/// Checks `A > 0`, `m >= 1` and that the block holds `3(m+1)` positive reals.
pub fn validate(a: f64, m: usize, init: InitBlock) -> Result<(Params, InitBlock), InputError> {
    let params = Params::new(a, m)?;
    for c in Component::ALL {
        let list = init.list(c);
        if list.len() != m + 1 {
            return Err(InputError::WrongBlockLength {
                component: c,
                expected: m + 1,
                found: list.len(),
            });
        }
    }
    for c in Component::ALL {
        for (i, &v) in init.list(c).iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(InputError::NonPositiveInitial {
                    component: c,
                    n: i as i64 - m as i64,
                    value: v,
                });
            }
        }
    }
    Ok((params, init))
}

/// Applies the map once given the oldest (`n - m`) and newest (`n`) triples.
#[inline]
pub fn advance(a: f64, oldest: Triple, newest: Triple) -> Triple {
    Triple {
        x: a + oldest.x / newest.z,
        y: a + oldest.y / newest.z,
        z: a + oldest.z / newest.y,
    }
}

/// One step of the system from a window ordered `n - m, ..., n`.
///
/// Panics if the window length is not `m + 1`.
pub fn step(params: &Params, window: &[Triple]) -> Triple {
    assert_eq!(
        window.len(),
        params.window_len(),
        "window must hold m + 1 triples"
    );
    advance(params.a, window[0], window[params.m])
}

/// A single row of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub n: i64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Sample {
    pub fn new(n: i64, t: Triple) -> Self {
        Sample {
            n,
            x: t.x,
            y: t.y,
            z: t.z,
        }
    }

    pub fn triple(&self) -> Triple {
        Triple::new(self.x, self.y, self.z)
    }

    pub fn get(&self, c: Component) -> f64 {
        self.triple().get(c)
    }
}

/// Streaming orbit over a ring buffer of the last `m + 1` triples.
///
/// Yields `(n, state)` for `n = 1, 2, ...` without retaining history, which
/// keeps long runs at `O(m)` memory.
#[derive(Debug, Clone)]
pub struct Orbit {
    a: f64,
    ring: Vec<Triple>,
    // slot holding the oldest triple, index n - m
    head: usize,
    n: i64,
}

impl Orbit {
    pub fn new(params: &Params, init: &InitBlock) -> Self {
        Orbit {
            a: params.a,
            ring: init.triples().collect(),
            head: 0,
            n: 0,
        }
    }

    /// Index of the most recent state.
    pub fn index(&self) -> i64 {
        self.n
    }

    /// Current window ordered oldest first.
    pub fn window(&self) -> Vec<Triple> {
        let len = self.ring.len();
        (0..len).map(|k| self.ring[(self.head + k) % len]).collect()
    }
}

impl Iterator for Orbit {
    type Item = Sample;

    fn next(&mut self) -> Option<Sample> {
        let len = self.ring.len();
        let newest = self.ring[(self.head + len - 1) % len];
        let next = advance(self.a, self.ring[self.head], newest);
        self.ring[self.head] = next;
        self.head = (self.head + 1) % len;
        self.n += 1;
        Some(Sample::new(self.n, next))
    }
}

/// A retained solution from `n = -m` up to the last stored index.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    params: Params,
    init: InitBlock,
    samples: Vec<Sample>,
    overflow_at: Option<i64>,
    cap: f64,
}

/// Iterates `steps` times from the initial block.
///
/// Iteration stops early when a component exceeds `cap` (or stops being
/// finite). The offending index is recorded in [`Trajectory::overflow_at`] and
/// that state is not stored, so every retained sample is finite and `<= cap`.
pub fn iterate(
    params: &Params,
    init: &InitBlock,
    steps: usize,
    cap: f64,
) -> Result<Trajectory, InputError> {
    if steps == 0 {
        return Err(InputError::NoSteps);
    }
    if !(cap > params.a) {
        return Err(InputError::CapNotAboveA { cap, a: params.a });
    }
    let m = params.m as i64;
    let mut samples = Vec::with_capacity(steps.min(1 << 16) + params.window_len());
    samples.extend(
        init.triples()
            .enumerate()
            .map(|(i, t)| Sample::new(i as i64 - m, t)),
    );
    let mut overflow_at = None;
    for s in Orbit::new(params, init).take(steps) {
        let t = s.triple();
        if !t.is_finite() || t.max() > cap {
            overflow_at = Some(s.n);
            break;
        }
        samples.push(s);
    }
    Ok(Trajectory {
        params: *params,
        init: init.clone(),
        samples,
        overflow_at,
        cap,
    })
}

impl Trajectory {
    /// Reassembles a trajectory from stored samples, checking that they start
    /// at `-m`, are gap-free, and agree with `init`.
    pub fn from_parts(
        params: Params,
        samples: Vec<Sample>,
        overflow_at: Option<i64>,
        cap: f64,
    ) -> Result<Self, TrajectoryShapeError> {
        let m = params.m as i64;
        if samples.len() < params.window_len() {
            return Err(TrajectoryShapeError::MissingInitialBlock);
        }
        for (i, s) in samples.iter().enumerate() {
            let expected = i as i64 - m;
            if s.n != expected {
                return Err(TrajectoryShapeError::Gap {
                    expected,
                    found: s.n,
                });
            }
        }
        let init = InitBlock::from_fn(params.m, |n| samples[(n + m) as usize].triple());
        Ok(Trajectory {
            params,
            init,
            samples,
            overflow_at,
            cap,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn init(&self) -> &InitBlock {
        &self.init
    }

    /// All samples, `n = -m` first.
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Samples with `n >= 1`.
    pub fn iterates(&self) -> &[Sample] {
        &self.samples[self.params.window_len()..]
    }

    pub fn overflow_at(&self) -> Option<i64> {
        self.overflow_at
    }

    pub fn overflowed(&self) -> bool {
        self.overflow_at.is_some()
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// Index of the last stored sample.
    pub fn last_index(&self) -> i64 {
        self.samples.last().map_or(0, |s| s.n)
    }

    pub fn last(&self) -> Triple {
        self.samples[self.samples.len() - 1].triple()
    }

    /// Sample at signed index `n`, if stored.
    pub fn get(&self, n: i64) -> Option<&Sample> {
        let i = n + self.params.m as i64;
        if i < 0 {
            return None;
        }
        self.samples.get(i as usize)
    }

    /// Values of one component for `n >= 1`, in order.
    pub fn series(&self, c: Component) -> Vec<f64> {
        self.iterates().iter().map(|s| s.get(c)).collect()
    }

    /// `(n, value)` pairs of one component restricted to a parity, `n >= 1`.
    pub fn subsequence(&self, parity: Parity, c: Component) -> Vec<(i64, f64)> {
        self.iterates()
            .iter()
            .filter(|s| Parity::of(s.n) == parity)
            .map(|s| (s.n, s.get(c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrajectoryShapeError {
    #[error("trajectory does not contain the full initial block")]
    MissingInitialBlock,
    #[error("sample index gap: expected n = {expected}, found n = {found}")]
    Gap { expected: i64, found: i64 },
}
