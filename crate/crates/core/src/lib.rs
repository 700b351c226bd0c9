//! Numerical analysis engine for a slow-fast modified Leslie-Gower
//! predator-prey model with a weak Allee effect on the prey.
//!
//! The rescaled model on the fast time scale is
//!
//! ```text
//! u' = u (u + C) ((u + A)(1 - u)(u - M) - v)
//! v' = eps * v (u + A) (u + C - Q v)
//! ```
//!
//! with `0 < A < 1`, `-1 < M < 0` (weak Allee), `C >= 0`, `Q > 0` and
//! `0 < eps << 1`. The crate computes coexistence equilibria and their
//! stability, Hopf thresholds, the criticality of the singular Hopf point,
//! blow-up chart dynamics at the degenerate transcritical point, entry-exit
//! exit heights, limit cycles (canard explosion, relaxation oscillations)
//! and bifurcation loci (Hopf, limit point, cusp, Takens-Bogdanov).

pub mod blowup;
pub mod criticality;
pub mod dynamics;
pub mod equilibria;
pub mod geometry;
pub mod loci;
pub mod model;
pub mod stability;
pub mod sweep;

pub use model::{FieldValue, ModelParams, State};
