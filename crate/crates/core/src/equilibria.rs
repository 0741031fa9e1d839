//! Positive equilibria.
//!
//! For `A != 1` the only positive fixed point is `(A+1, A+1, A+1)`. For
//! `A = 1` there is a one-parameter family `(mu, mu, mu/(mu-1))`, `mu > 1`,
//! lying on the hyperboloid `y z = y + z`.

use thiserror::Error;

use crate::dynamics::{Trajectory, Triple};

/// Minimum number of tail samples used by [`estimate_mu`].
pub const MU_TAIL_MIN: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("A = 1 has a one-parameter family of equilibria; a family parameter mu > 1 is required")]
    AEqualsOne,
    #[error("A must be positive, got {0}")]
    NonPositiveA(f64),
    #[error("family parameter mu must exceed 1, got {0}")]
    MuOutOfRange(f64),
    #[error("mu estimation needs A = 1, got {0}")]
    NotUnityA(f64),
    #[error("trajectory overflowed at n = {0}")]
    OverflowedTrajectory(i64),
    #[error("need at least {needed} iterates for a tail estimate, have {found}")]
    InsufficientSamples { needed: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquilibriumKind {
    Isolated,
    Family { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub kind: EquilibriumKind,
}

impl Equilibrium {
    pub fn triple(&self) -> Triple {
        Triple::new(self.x, self.y, self.z)
    }

    pub fn mu(&self) -> Option<f64> {
        match self.kind {
            EquilibriumKind::Family { mu } => Some(mu),
            EquilibriumKind::Isolated => None,
        }
    }
}

pub fn isolated_equilibrium(a: f64) -> Result<Equilibrium, EquilibriumError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(EquilibriumError::NonPositiveA(a));
    }
    if a == 1.0 {
        return Err(EquilibriumError::AEqualsOne);
    }
    let c = a + 1.0;
    Ok(Equilibrium {
        x: c,
        y: c,
        z: c,
        kind: EquilibriumKind::Isolated,
    })
}

pub fn family_equilibrium(mu: f64) -> Result<Equilibrium, EquilibriumError> {
    if !(mu > 1.0) || !mu.is_finite() {
        return Err(EquilibriumError::MuOutOfRange(mu));
    }
    Ok(Equilibrium {
        x: mu,
        y: mu,
        z: mu / (mu - 1.0),
        kind: EquilibriumKind::Family { mu },
    })
}

/// The equilibrium for `A`, using `mu` to choose a family member when `A = 1`.
pub fn equilibrium_for(a: f64, mu: Option<f64>) -> Result<Equilibrium, EquilibriumError> {
    if a == 1.0 {
        match mu {
            Some(mu) => family_equilibrium(mu),
            None => Err(EquilibriumError::AEqualsOne),
        }
    } else {
        isolated_equilibrium(a)
    }
}

/// Signed defects of the three fixed-point equations at `eq`.
pub fn residual(eq: &Equilibrium, a: f64) -> Triple {
    Triple::new(
        eq.x - a - eq.x / eq.z,
        eq.y - a - eq.y / eq.z,
        eq.z - a - eq.z / eq.y,
    )
}

/// Tail-mean reference point for an `A = 1` trajectory.
///
/// This is an empirical stand-in: nothing guarantees that an `A = 1` orbit
/// settles on one family member, so the hyperboloid residual of the tail
/// means is always reported with it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuEstimate {
    pub mu_hat: f64,
    pub y_mean: f64,
    pub z_mean: f64,
    pub hyperboloid_residual: f64,
    pub tail_len: usize,
}

impl MuEstimate {
    /// Family member at `mu_hat`.
    pub fn equilibrium(&self) -> Result<Equilibrium, EquilibriumError> {
        family_equilibrium(self.mu_hat)
    }
}

pub fn estimate_mu(traj: &Trajectory) -> Result<MuEstimate, EquilibriumError> {
    let a = traj.params().a();
    if a != 1.0 {
        return Err(EquilibriumError::NotUnityA(a));
    }
    if let Some(n) = traj.overflow_at() {
        return Err(EquilibriumError::OverflowedTrajectory(n));
    }
    let iterates = traj.iterates();
    if iterates.len() < MU_TAIL_MIN {
        return Err(EquilibriumError::InsufficientSamples {
            needed: MU_TAIL_MIN,
            found: iterates.len(),
        });
    }
    let tail_len = (iterates.len() / 4).max(MU_TAIL_MIN);
    let tail = &iterates[iterates.len() - tail_len..];
    let k = tail_len as f64;
    let mu_hat = tail.iter().map(|s| s.x).sum::<f64>() / k;
    let y_mean = tail.iter().map(|s| s.y).sum::<f64>() / k;
    let z_mean = tail.iter().map(|s| s.z).sum::<f64>() / k;
    Ok(MuEstimate {
        mu_hat,
        y_mean,
        z_mean,
        hyperboloid_residual: (y_mean * z_mean - y_mean - z_mean).abs(),
        tail_len,
    })
}
