//! Linearization about an equilibrium and stability certificates.
//!
//! The state vector is ordered in three blocks of length `m + 1`:
//!
//! ```text
//! (x[n], ..., x[n-m], y[n], ..., y[n-m], z[n], ..., z[n-m])
//! ```
//!
//! Indices in this module are 0-based. In 1-based terms the six coupling
//! entries sit at `(1, m+1)`, `(1, 2m+3)`, `(m+2, 2m+2)`, `(m+2, 2m+3)`,
//! `(2m+3, m+2)` and `(2m+3, 3m+3)`; every other nonzero is a unit shift
//! `(i, i-1)` inside a block.
//!
//! Two independent routes bound the spectral radius: the infinity norm of a
//! diagonally scaled similarity `D B D^-1` (an upper bound) and a power
//! iteration on `B` itself.

use std::fmt;

use thiserror::Error;

use crate::dynamics::{advance, Triple};
use crate::equilibria::Equilibrium;

pub const DEFAULT_POWER_TOL: f64 = 1e-10;
pub const DEFAULT_POWER_MAX_ITER: usize = 100_000;
/// Band around the unit circle treated as undecided by [`classify_stability`].
pub const DEFAULT_VERDICT_TOL: f64 = 1e-6;
/// Points in the geometric epsilon grid used when no epsilon is given.
pub const EPSILON_GRID_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinearizeError {
    #[error("epsilon {epsilon} must lie in (0, 1/m) for m = {m}")]
    EpsilonOutOfRange { epsilon: f64, m: usize },
    #[error("no diagonal scaling certificate is available for A = {0} (only A >= 1)")]
    UnsupportedRegime(f64),
    #[error("A = 1 certificate needs a family equilibrium")]
    MissingFamilyParameter,
    #[error("power iteration did not converge in {max_iter} iterations (last estimate {last_estimate})")]
    NoConvergence { max_iter: usize, last_estimate: f64 },
    #[error("dimension mismatch: jacobian {jacobian}, scaling {scaling}")]
    DimensionMismatch { jacobian: usize, scaling: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// Sparse Jacobian in triplet form.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianSpec {
    pub dim: usize,
    pub m: usize,
    pub eq: Equilibrium,
    pub entries: Vec<Entry>,
}

/// Row of the `x[n+1]` equation.
pub fn x_row(_m: usize) -> usize {
    0
}

/// Row of the `y[n+1]` equation.
pub fn y_row(m: usize) -> usize {
    m + 1
}

/// Row of the `z[n+1]` equation.
pub fn z_row(m: usize) -> usize {
    2 * m + 2
}

/// Position of the `(row, col)` coupling for `z[n+1]` with respect to `y[n]`.
pub fn z_y_coupling(m: usize) -> (usize, usize) {
    (z_row(m), y_row(m))
}

pub fn build_jacobian(eq: &Equilibrium, m: usize) -> JacobianSpec {
    let dim = 3 * m + 3;
    let (xb, yb, zb) = (eq.x, eq.y, eq.z);
    let mut entries = Vec::with_capacity(3 * m + 6);
    let mut push = |row, col, value| entries.push(Entry { row, col, value });

    // x[n+1] = A + x[n-m] / z[n]
    push(x_row(m), m, 1.0 / zb);
    push(x_row(m), z_row(m), -xb / (zb * zb));
    // y[n+1] = A + y[n-m] / z[n]
    push(y_row(m), y_row(m) + m, 1.0 / zb);
    push(y_row(m), z_row(m), -yb / (zb * zb));
    // z[n+1] = A + z[n-m] / y[n]
    push(z_row(m), y_row(m), -zb / (yb * yb));
    push(z_row(m), z_row(m) + m, 1.0 / yb);

    for start in [x_row(m), y_row(m), z_row(m)] {
        for k in 1..=m {
            push(start + k, start + k - 1, 1.0);
        }
    }
    JacobianSpec { dim, m, eq: *eq, entries }
}

/// The `A = 1` Jacobian with the `z`-row `y[n]` coupling replaced by
/// `-1/(mu (mu-1)^2)`.
///
/// The analytic partial is `-z/y^2 = -1/(mu (mu-1))`; the two agree only at
/// `mu = 2`. This variant exists so reports can show how much the certificate
/// depends on that entry.
pub fn alternate_family_jacobian(mu: f64, eq: &Equilibrium, m: usize) -> JacobianSpec {
    let mut jac = build_jacobian(eq, m);
    let (r, c) = z_y_coupling(m);
    jac.set(r, c, alternate_family_entry(mu));
    jac
}

pub fn alternate_family_entry(mu: f64) -> f64 {
    -1.0 / (mu * (mu - 1.0) * (mu - 1.0))
}

/// Stacked state `(x[n], .., x[n-m], y[n], .., y[n-m], z[n], .., z[n-m])`
/// sitting at `eq`.
pub fn equilibrium_state(eq: &Equilibrium, m: usize) -> Vec<f64> {
    [eq.x, eq.y, eq.z]
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, m + 1))
        .collect()
}

/// One step of the system on the stacked state used by [`build_jacobian`].
pub fn step_state(a: f64, m: usize, state: &[f64]) -> Vec<f64> {
    assert_eq!(state.len(), 3 * m + 3, "state length must be 3(m+1)");
    let block = |b: usize| &state[b * (m + 1)..(b + 1) * (m + 1)];
    let (x, y, z) = (block(0), block(1), block(2));
    let next = advance(
        a,
        Triple::new(x[m], y[m], z[m]),
        Triple::new(x[0], y[0], z[0]),
    );
    let mut out = Vec::with_capacity(state.len());
    for (head, list) in [(next.x, x), (next.y, y), (next.z, z)] {
        out.push(head);
        out.extend_from_slice(&list[..m]);
    }
    out
}

/// Central-difference Jacobian of [`step_state`] at `state`, with step
/// `h * max(1, |s_j|)` in coordinate `j`.
pub fn finite_difference_jacobian(a: f64, m: usize, state: &[f64], h: f64) -> Vec<Vec<f64>> {
    let dim = state.len();
    let mut jac = vec![vec![0.0; dim]; dim];
    let mut probe = state.to_vec();
    for j in 0..dim {
        let step = h * state[j].abs().max(1.0);
        probe[j] = state[j] + step;
        let plus = step_state(a, m, &probe);
        probe[j] = state[j] - step;
        let minus = step_state(a, m, &probe);
        probe[j] = state[j];
        for i in 0..dim {
            jac[i][j] = (plus[i] - minus[i]) / (2.0 * step);
        }
    }
    jac
}

impl JacobianSpec {
    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|e| e.value != 0.0).count()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.row == row && e.col == col)
            .map(|e| e.value)
            .sum()
    }

    /// Overwrites an existing entry or appends a new one.
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        match self.entries.iter_mut().find(|e| e.row == row && e.col == col) {
            Some(e) => e.value = value,
            None => self.entries.push(Entry { row, col, value }),
        }
    }

    /// Sparse product `B v`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for e in &self.entries {
            out[e.row] += e.value * v[e.col];
        }
    }

    /// Entries of `D B D^-1`.
    pub fn scaled(&self, scal: &ScalingSpec) -> Result<JacobianSpec, LinearizeError> {
        self.check_dim(scal)?;
        let d = &scal.diag;
        Ok(JacobianSpec {
            entries: self
                .entries
                .iter()
                .map(|e| Entry {
                    value: d[e.row] * e.value / d[e.col],
                    ..*e
                })
                .collect(),
            ..self.clone()
        })
    }

    /// Copy with only the unit shift entries.
    pub fn shifts_only(&self) -> JacobianSpec {
        let entries = self
            .entries
            .iter()
            .copied()
            .filter(|e| e.row == e.col + 1 && e.value == 1.0)
            .collect();
        JacobianSpec { entries, ..self.clone() }
    }

    /// Dense row-major copy. Intended for small matrices in tests and reports.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.dim]; self.dim];
        for e in &self.entries {
            rows[e.row][e.col] += e.value;
        }
        rows
    }

    fn check_dim(&self, scal: &ScalingSpec) -> Result<(), LinearizeError> {
        if scal.diag.len() != self.dim {
            return Err(LinearizeError::DimensionMismatch {
                jacobian: self.dim,
                scaling: scal.diag.len(),
            });
        }
        Ok(())
    }
}

/// Diagonal scaling `D` with `d = 1, 1-eps, ..., 1-m eps` repeated per block.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSpec {
    pub epsilon: f64,
    pub diag: Vec<f64>,
}

pub fn scaling_matrix(m: usize, epsilon: f64) -> Result<ScalingSpec, LinearizeError> {
    if !(epsilon > 0.0) || !(epsilon * (m as f64) < 1.0) {
        return Err(LinearizeError::EpsilonOutOfRange { epsilon, m });
    }
    let block: Vec<f64> = (0..=m).map(|k| 1.0 - k as f64 * epsilon).collect();
    let diag = block.iter().chain(&block).chain(&block).copied().collect();
    Ok(ScalingSpec { epsilon, diag })
}

/// Upper end `U` of the admissible epsilon window for the certificate.
///
/// * `A > 1`, `c = A + 1`: `U = min{1/m, (c-2)/(c m)}`.
/// * `A = 1` at `(mu, mu, mu/(mu-1))`: `U = min{q/(m mu), q/(m mu (mu-1))}`
///   with `q = mu^2 - 2mu + 2`. This never exceeds `1/m`, so `D` stays positive.
pub fn epsilon_bound(eq: &Equilibrium, a: f64, m: usize) -> Result<f64, LinearizeError> {
    let mf = m as f64;
    if a > 1.0 {
        let c = a + 1.0;
        Ok((1.0 / mf).min((c - 2.0) / (c * mf)))
    } else if a == 1.0 {
        let mu = eq.mu().ok_or(LinearizeError::MissingFamilyParameter)?;
        let q = mu * mu - 2.0 * mu + 2.0;
        Ok((q / (mf * mu)).min(q / (mf * mu * (mu - 1.0))))
    } else {
        Err(LinearizeError::UnsupportedRegime(a))
    }
}

/// Absolute row sums of `D B D^-1`.
pub fn scaled_row_sums(jac: &JacobianSpec, scal: &ScalingSpec) -> Result<Vec<f64>, LinearizeError> {
    jac.check_dim(scal)?;
    let d = &scal.diag;
    let mut sums = vec![0.0; jac.dim];
    for e in &jac.entries {
        sums[e.row] += (d[e.row] * e.value / d[e.col]).abs();
    }
    Ok(sums)
}

/// `||D B D^-1||_inf`, an upper bound on the spectral radius of `B`.
pub fn norm_certificate(jac: &JacobianSpec, scal: &ScalingSpec) -> Result<f64, LinearizeError> {
    Ok(scaled_row_sums(jac, scal)?
        .into_iter()
        .fold(0.0, f64::max))
}

/// Epsilon values `0.05 U .. 0.95 U` spaced geometrically.
pub fn epsilon_grid(upper: f64) -> Vec<f64> {
    let lo = 0.05 * upper;
    let ratio: f64 = 0.95 / 0.05;
    let last = (EPSILON_GRID_POINTS - 1) as f64;
    (0..EPSILON_GRID_POINTS)
        .map(|k| {
            if k + 1 == EPSILON_GRID_POINTS {
                0.95 * upper
            } else {
                lo * ratio.powf(k as f64 / last)
            }
        })
        .collect()
}

/// Smallest certificate over [`epsilon_grid`], as `(epsilon, norm)`.
pub fn best_certificate(jac: &JacobianSpec, upper: f64) -> Result<(f64, f64), LinearizeError> {
    let mut best: Option<(f64, f64)> = None;
    for eps in epsilon_grid(upper) {
        let scal = scaling_matrix(jac.m, eps)?;
        let norm = norm_certificate(jac, &scal)?;
        if best.map_or(true, |(_, b)| norm < b) {
            best = Some((eps, norm));
        }
    }
    Ok(best.expect("grid is nonempty"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub rho: f64,
    pub iterations: usize,
    pub restarts: usize,
}

/// Estimates the spectral radius of `B` by power iteration.
///
/// Each step forms the two-dimensional Krylov space `{v, B v}` of the current
/// iterate and takes the largest Ritz value modulus, so a dominant real
/// eigenvalue, a `+-rho` pair and a complex-conjugate pair all converge. The
/// start vector is all ones plus a fixed perturbation; on stagnation the run
/// restarts once from a second fixed perturbation. Exact nilpotency (the
/// iterate vanishes) returns `0`.
pub fn spectral_radius(
    jac: &JacobianSpec,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralEstimate, LinearizeError> {
    const ATTEMPTS: usize = 2;
    let budget = (max_iter / ATTEMPTS).max(1);
    let mut last_estimate = f64::NAN;
    for attempt in 0..ATTEMPTS {
        match power_run(jac, tol, budget, attempt) {
            PowerOutcome::Converged(rho, iterations) => {
                return Ok(SpectralEstimate {
                    rho,
                    iterations: attempt * budget + iterations,
                    restarts: attempt,
                })
            }
            PowerOutcome::Stalled(est) => last_estimate = est,
        }
    }
    Err(LinearizeError::NoConvergence {
        max_iter,
        last_estimate,
    })
}

enum PowerOutcome {
    Converged(f64, usize),
    Stalled(f64),
}

fn start_vector(dim: usize, attempt: usize) -> Vec<f64> {
    let salt = [7usize, 13][attempt % 2];
    (0..dim)
        .map(|i| 1.0 + 0.25 * (((i + 1) * salt) % 11) as f64 / 11.0)
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn power_run(jac: &JacobianSpec, tol: f64, budget: usize, attempt: usize) -> PowerOutcome {
    let dim = jac.dim;
    let mut v = start_vector(dim, attempt);
    let n0 = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut w = vec![0.0; dim];
    let mut u = vec![0.0; dim];
    let mut prev = f64::NAN;
    let mut settled = 0;

    for it in 1..=budget {
        jac.apply(&v, &mut w);
        let bw = norm2(&w);
        if bw == 0.0 {
            return PowerOutcome::Converged(0.0, it);
        }

        // Arnoldi with two vectors: basis {v, q}, Hessenberg h
        let h11 = dot(&v, &w);
        let mut q: Vec<f64> = w.iter().zip(&v).map(|(wi, vi)| wi - h11 * vi).collect();
        let h21 = norm2(&q);
        let est = if h21 <= 1e-13 * bw {
            h11.abs()
        } else {
            q.iter_mut().for_each(|x| *x /= h21);
            jac.apply(&q, &mut u);
            let h12 = dot(&v, &u);
            let h22 = dot(&q, &u);
            ritz_radius(h11, h12, h21, h22)
        };

        if (est - prev).abs() <= tol * est.max(f64::MIN_POSITIVE) {
            settled += 1;
            if settled >= 3 {
                return PowerOutcome::Converged(est, it);
            }
        } else {
            settled = 0;
        }
        prev = est;

        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / bw;
        }
    }
    PowerOutcome::Stalled(prev)
}

/// Largest eigenvalue modulus of `[[h11, h12], [h21, h22]]`.
fn ritz_radius(h11: f64, h12: f64, h21: f64, h22: f64) -> f64 {
    let tr = h11 + h22;
    let det = h11 * h22 - h12 * h21;
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        ((tr + s) / 2.0).abs().max(((tr - s) / 2.0).abs())
    } else {
        det.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Locally asymptotically stable.
    Las,
    Unstable,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Las => "LAS",
            Verdict::Unstable => "Unstable",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// LAS when the certificate is below one or the spectral radius is clearly
/// inside the unit disk; unstable when it is clearly outside; otherwise
/// undecided (this band includes suspected nonhyperbolic points).
pub fn classify_stability(cert_norm: f64, rho: f64, tol: f64) -> Verdict {
    if cert_norm < 1.0 || rho < 1.0 - tol {
        Verdict::Las
    } else if rho > 1.0 + tol {
        Verdict::Unstable
    } else {
        Verdict::Inconclusive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Norm,
    Power,
    Both,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Norm => "norm",
            Method::Power => "power",
            Method::Both => "both",
        }
    }

    fn uses_norm(self) -> bool {
        matches!(self, Method::Norm | Method::Both)
    }

    fn uses_power(self) -> bool {
        matches!(self, Method::Power | Method::Both)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub epsilon: Option<f64>,
    pub method: Method,
    pub power_tol: f64,
    pub max_iter: usize,
    pub verdict_tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            epsilon: None,
            method: Method::Both,
            power_tol: DEFAULT_POWER_TOL,
            max_iter: DEFAULT_POWER_MAX_ITER,
            verdict_tol: DEFAULT_VERDICT_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityCertificate {
    /// `||D B D^-1||_inf`, absent when not requested or unavailable for the regime.
    pub scaled_norm: Option<f64>,
    pub epsilon_used: Option<f64>,
    pub epsilon_bound: Option<f64>,
    pub rho_estimate: Option<f64>,
    pub rho_converged: bool,
    pub verdict: Verdict,
}

/// Runs the requested certificate routes at `eq` and classifies the result.
pub fn certify(
    eq: &Equilibrium,
    a: f64,
    m: usize,
    opts: &CertifyOptions,
) -> Result<StabilityCertificate, LinearizeError> {
    certify_jacobian(&build_jacobian(eq, m), a, opts)
}

/// As [`certify`], for an explicitly supplied Jacobian.
pub fn certify_jacobian(
    jac: &JacobianSpec,
    a: f64,
    opts: &CertifyOptions,
) -> Result<StabilityCertificate, LinearizeError> {
    let mut cert = StabilityCertificate {
        scaled_norm: None,
        epsilon_used: None,
        epsilon_bound: None,
        rho_estimate: None,
        rho_converged: false,
        verdict: Verdict::Inconclusive,
    };

    if opts.method.uses_norm() {
        match epsilon_bound(&jac.eq, a, jac.m) {
            Ok(upper) => {
                cert.epsilon_bound = Some(upper);
                let (eps, norm) = match opts.epsilon {
                    Some(eps) => (eps, norm_certificate(jac, &scaling_matrix(jac.m, eps)?)?),
                    None => best_certificate(jac, upper)?,
                };
                cert.epsilon_used = Some(eps);
                cert.scaled_norm = Some(norm);
            }
            // no window for 0 < A < 1; the power route still runs when asked
            Err(LinearizeError::UnsupportedRegime(_)) => {}
            Err(e) => return Err(e),
        }
    }

    if opts.method.uses_power() {
        match spectral_radius(jac, opts.power_tol, opts.max_iter) {
            Ok(est) => {
                cert.rho_estimate = Some(est.rho);
                cert.rho_converged = true;
            }
            Err(LinearizeError::NoConvergence { last_estimate, .. }) => {
                cert.rho_estimate = Some(last_estimate);
            }
            Err(e) => return Err(e),
        }
    }

    let norm = cert.scaled_norm.unwrap_or(f64::INFINITY);
    // an unconverged power estimate never decides the verdict on its own
    let rho = match (cert.rho_estimate, cert.rho_converged) {
        (Some(r), true) => r,
        _ => 1.0,
    };
    cert.verdict = classify_stability(norm, rho, opts.verdict_tol);
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{family_equilibrium, isolated_equilibrium};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn jacobian_a3_m1() {
        let eq = isolated_equilibrium(3.0).unwrap();
        let j = build_jacobian(&eq, 1);
        assert_eq!(j.dim, 6);
        assert_eq!(j.nnz(), 9);
        // 1-based (1,2), (1,5), (3,4), (3,5), (5,3), (5,6)
        assert_eq!(j.get(0, 1), 0.25);
        assert_eq!(j.get(0, 4), -0.25);
        assert_eq!(j.get(2, 3), 0.25);
        assert_eq!(j.get(2, 4), -0.25);
        assert_eq!(j.get(4, 2), -0.25);
        assert_eq!(j.get(4, 5), 0.25);
        for (r, c) in [(1, 0), (3, 2), (5, 4)] {
            assert_eq!(j.get(r, c), 1.0);
        }
    }

    #[test]
    fn jacobian_family_mu2() {
        let eq = family_equilibrium(2.0).unwrap();
        let j = build_jacobian(&eq, 1);
        assert_eq!(j.get(0, 1), 0.5);
        assert_eq!(j.get(0, 4), -0.5);
        assert_eq!(j.get(4, 2), -0.5);
        assert_eq!(j.get(4, 5), 0.5);
    }

    #[test]
    fn family_z_coupling_is_minus_one_over_mu_mu_minus_one() {
        for mu in [1.5, 2.0, 3.0, 7.0] {
            let eq = family_equilibrium(mu).unwrap();
            let (r, c) = z_y_coupling(3);
            let got = build_jacobian(&eq, 3).get(r, c);
            assert!(close(got, -1.0 / (mu * (mu - 1.0)), 1e-15));
            let alt = alternate_family_jacobian(mu, &eq, 3).get(r, c);
            assert!(close(alt, -1.0 / (mu * (mu - 1.0) * (mu - 1.0)), 1e-15));
        }
    }

    #[test]
    fn scaling_examples() {
        let s = scaling_matrix(1, 1.0 / 6.0).unwrap();
        let five_sixths = 1.0 - 1.0 / 6.0;
        assert_eq!(s.diag, vec![1.0, five_sixths, 1.0, five_sixths, 1.0, five_sixths]);

        let s = scaling_matrix(2, 0.1).unwrap();
        let expect = [1.0, 0.9, 1.0 - 2.0 * 0.1];
        for (i, d) in s.diag.iter().enumerate() {
            assert_eq!(*d, expect[i % 3]);
        }
        assert!(close(s.diag[2], 0.8, 1e-15));

        assert!(matches!(
            scaling_matrix(1, 1.0),
            Err(LinearizeError::EpsilonOutOfRange { .. })
        ));
        assert!(scaling_matrix(3, 0.0).is_err());
    }

    #[test]
    fn epsilon_bound_examples() {
        let e2 = isolated_equilibrium(2.0).unwrap();
        assert!(close(epsilon_bound(&e2, 2.0, 1).unwrap(), 1.0 / 3.0, 1e-16));
        let f2 = family_equilibrium(2.0).unwrap();
        assert_eq!(epsilon_bound(&f2, 1.0, 1).unwrap(), 1.0);
        let e3 = isolated_equilibrium(3.0).unwrap();
        assert_eq!(epsilon_bound(&e3, 3.0, 2).unwrap(), 0.25);
        let e_half = isolated_equilibrium(0.5).unwrap();
        assert_eq!(
            epsilon_bound(&e_half, 0.5, 1),
            Err(LinearizeError::UnsupportedRegime(0.5))
        );
        // mu = 10, m = 2: q = 82, min{82/20, 82/180}
        let f10 = family_equilibrium(10.0).unwrap();
        assert!(close(epsilon_bound(&f10, 1.0, 2).unwrap(), 82.0 / 180.0, 1e-16));
        for mu in [1.01, 1.5, 2.0, 3.0, 50.0] {
            let f = family_equilibrium(mu).unwrap();
            assert!(epsilon_bound(&f, 1.0, 3).unwrap() <= 1.0 / 3.0 + 1e-16);
        }
    }

    #[test]
    fn norm_a2_m1_eps_sixth() {
        let eq = isolated_equilibrium(2.0).unwrap();
        let j = build_jacobian(&eq, 1);
        let s = scaling_matrix(1, 1.0 / 6.0).unwrap();
        let rows = scaled_row_sums(&j, &s).unwrap();
        // coupling rows: (1/3)(6/5) + 1/3 = 11/15; shift rows: 5/6
        for r in [0, 2, 4] {
            assert!(close(rows[r], 11.0 / 15.0, 1e-15), "row {r}: {}", rows[r]);
        }
        for r in [1, 3, 5] {
            assert!(close(rows[r], 5.0 / 6.0, 1e-15));
        }
        let norm = norm_certificate(&j, &s).unwrap();
        assert!(close(norm, 5.0 / 6.0, 1e-15));
    }

    #[test]
    fn norm_of_shift_only_matrix() {
        let eq = isolated_equilibrium(2.0).unwrap();
        let j = build_jacobian(&eq, 2).shifts_only();
        assert_eq!(j.nnz(), 6);
        let s = scaling_matrix(2, 0.1).unwrap();
        // ratios d[k+1]/d[k]: 0.9 and 0.8/0.9
        assert!(close(norm_certificate(&j, &s).unwrap(), 0.9, 1e-15));
    }

    #[test]
    fn family_certificate_cannot_drop_below_one() {
        // mu = 2, m = 1, eps = 1/4: coupling rows (1/2)(4/3) + 1/2 = 7/6
        let eq = family_equilibrium(2.0).unwrap();
        let j = build_jacobian(&eq, 1);
        let s = scaling_matrix(1, 0.25).unwrap();
        assert!(close(norm_certificate(&j, &s).unwrap(), 7.0 / 6.0, 1e-15));
    }

    #[test]
    fn nilpotent_shift_matrix_has_zero_radius() {
        let eq = isolated_equilibrium(2.0).unwrap();
        for m in 1..6 {
            let j = build_jacobian(&eq, m).shifts_only();
            let est = spectral_radius(&j, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
            assert_eq!(est.rho, 0.0);
        }
    }

    #[test]
    fn radius_a2_m1() {
        // characteristic factors 3l^2 +- l - 1 and 3l^2 - 1: rho = (1 + sqrt 13)/6
        let eq = isolated_equilibrium(2.0).unwrap();
        let j = build_jacobian(&eq, 1);
        let est = spectral_radius(&j, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        let exact = (1.0 + 13f64.sqrt()) / 6.0;
        assert!(close(est.rho, exact, 1e-8), "{} vs {exact}", est.rho);
        // the coupling rows alone (11/15) do not bound rho; the shift rows do
        assert!(est.rho > 11.0 / 15.0);
        let norm = norm_certificate(&j, &scaling_matrix(1, 1.0 / 6.0).unwrap()).unwrap();
        assert!(est.rho <= norm + DEFAULT_POWER_TOL);
    }

    #[test]
    fn radius_a15_m2_inside_unit_disk() {
        let eq = isolated_equilibrium(1.5).unwrap();
        let j = build_jacobian(&eq, 2);
        let est = spectral_radius(&j, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER).unwrap();
        assert!(est.rho < 1.0);
    }

    #[test]
    fn verdict_examples() {
        assert_eq!(classify_stability(0.733, 0.70, 1e-6), Verdict::Las);
        assert_eq!(classify_stability(1.8, 1.2, 1e-6), Verdict::Unstable);
        assert_eq!(classify_stability(1.05, 1.0000001, 1e-3), Verdict::Inconclusive);
    }

    #[test]
    fn certify_regimes() {
        let opts = CertifyOptions::default();
        let e = isolated_equilibrium(2.0).unwrap();
        let c = certify(&e, 2.0, 1, &opts).unwrap();
        assert_eq!(c.verdict, Verdict::Las);
        assert!(c.rho_estimate.unwrap() < c.scaled_norm.unwrap());

        let e = isolated_equilibrium(0.5).unwrap();
        let c = certify(&e, 0.5, 1, &opts).unwrap();
        assert_eq!(c.scaled_norm, None);
        assert_eq!(c.verdict, Verdict::Unstable);

        let f = family_equilibrium(2.0).unwrap();
        let c = certify(&f, 1.0, 1, &opts).unwrap();
        assert_eq!(c.verdict, Verdict::Inconclusive);
        assert!(close(c.rho_estimate.unwrap(), 1.0, 1e-8));
    }

    #[test]
    fn epsilon_grid_shape() {
        let g = epsilon_grid(1.0);
        assert_eq!(g.len(), 16);
        assert!(close(g[0], 0.05, 1e-15));
        assert_eq!(g[15], 0.95);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn finite_differences_match_analytic() {
        for (eq, a, m) in [
            (isolated_equilibrium(2.0).unwrap(), 2.0, 1),
            (isolated_equilibrium(0.5).unwrap(), 0.5, 3),
            (family_equilibrium(3.0).unwrap(), 1.0, 2),
        ] {
            let state = equilibrium_state(&eq, m);
            assert_eq!(step_state(a, m, &state), state);
            let fd = finite_difference_jacobian(a, m, &state, 1e-6);
            let exact = build_jacobian(&eq, m).to_dense();
            for (r1, r2) in fd.iter().zip(&exact) {
                for (u, v) in r1.iter().zip(r2) {
                    assert!(close(*u, *v, 1e-7 * v.abs().max(1.0)), "{u} vs {v}");
                }
            }
        }
    }
}
