//! Step-count policy shared by the fixed-step RK4 integrators.
//!
//! For a linear system with largest angular rate ω over a window T, classical RK4 loses
//! norm at `(ωh)^6/72` per step. With `Φ = ωT` and `N` steps the accumulated loss is
//! `Φ^6 / (72 N^5)`, so the step count is chosen large enough to keep both the phase per
//! step and the accumulated norm loss below the configured tolerances.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepPolicy {
    /// Largest phase `ω·h` allowed in one step.
    pub max_phase_per_step: f64,
    /// Target bound on the accumulated RK4 norm loss.
    pub norm_tolerance: f64,
    pub min_steps: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { max_phase_per_step: 0.05, norm_tolerance: 1e-10, min_steps: 4000 }
    }
}

impl StepPolicy {
    /// Default for the real-space BdG solver, whose unitarity invariant is 1e-7.
    pub fn bdg_default() -> Self {
        Self { max_phase_per_step: 0.05, norm_tolerance: 1e-8, min_steps: 2000 }
    }

    /// Number of steps for a total phase `Φ = ω_max·T` (radians).
    pub fn steps(&self, total_phase: f64) -> usize {
        let phase = total_phase.abs();
        let by_phase = (phase / self.max_phase_per_step).ceil();
        let by_norm = (phase.powi(6) / (72.0 * self.norm_tolerance)).powf(0.2).ceil();
        let n = by_phase.max(by_norm);
        if n.is_finite() {
            (n as usize).max(self.min_steps).max(1)
        } else {
            usize::MAX
        }
    }

    /// The same policy with the step count doubled, used for convergence checks.
    pub fn refined(&self) -> Self {
        Self {
            max_phase_per_step: self.max_phase_per_step / 2.0,
            norm_tolerance: self.norm_tolerance / 32.0,
            min_steps: self.min_steps * 2,
        }
    }
}
