//! Simulation and analysis of a three-component delayed rational difference
//! system.
//!
//! ```text
//! x[n+1] = A + x[n-m] / z[n]
//! y[n+1] = A + y[n-m] / z[n]
//! z[n+1] = A + z[n-m] / y[n]
//! ```
//!
//! The modules follow a run from start to report:
//!
//! - [`dynamics`] iterates the system with an overflow guard.
//! - [`equilibria`] computes fixed points and the `A = 1` family.
//! - [`linearize`] builds Jacobians and stability certificates.
//! - [`analyze`] measures persistence, envelopes, semicycles and regimes.
//! - [`sweep`] runs seeded parameter grids in parallel.
//! - [`io`] and [`cli`] hold the formats and the `rde-lab` binary.
//! - [`verify`] bundles the seeded experiment suites.
//!
//! ```
//! use rde_lab::equilibria::isolated_equilibrium;
//! use rde_lab::linearize::{certify, CertifyOptions, Verdict};
//!
//! let eq = isolated_equilibrium(2.0).unwrap();
//! let cert = certify(&eq, 2.0, 3, &CertifyOptions::default()).unwrap();
//! assert_eq!(cert.verdict, Verdict::Las);
//! ```

pub mod analyze;
pub mod cli;
pub mod dynamics;
pub mod equilibria;
pub mod io;
pub mod linearize;
pub mod sweep;
pub mod verify;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/system.md")]
    mod system {}
    #[doc = include_str!("../../../book/src/equilibria.md")]
    mod equilibria {}
    #[doc = include_str!("../../../book/src/stability.md")]
    mod stability {}
    #[doc = include_str!("../../../book/src/long-run.md")]
    mod long_run {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
