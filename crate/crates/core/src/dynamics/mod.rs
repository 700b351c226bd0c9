//! Trajectory integration, Poincare-section limit-cycle detection, canard
//! and relaxation sweeps, and Hausdorff comparison against singular cycles.
//!
//! All integration runs on the fast time scale of the full field; slow-time
//! quantities carry the factor `eps` explicitly.

mod cycle;
mod hausdorff;
mod integrator;
mod sweeps;

pub use cycle::{find_limit_cycle, CycleStability, LimitCycle, Section};
pub use hausdorff::hausdorff;
pub use integrator::{integrate, Trajectory};
pub use sweeps::{canard_sweep, relaxation_check, CanardRecord, RelaxationRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("step size underflow at t = {t} (h = {h:.3e}): dynamics too stiff for the tolerance")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
    #[error("no limit cycle found after {} section returns", returns.len())]
    NoConvergence { returns: Vec<f64> },
    #[error("invalid tolerance {0}: expected 1e-12 <= tol <= 1e-4")]
    InvalidTolerance(f64),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Stability(#[from] crate::stability::StabilityError),
}
