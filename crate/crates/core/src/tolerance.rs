//! Process-wide numerical tolerances.
//!
//! Every threshold used by the crate lives here. Defaults can be replaced once
//! at start-up (the CLI reads a JSON object of overrides from the
//! `EQUILIB_TOL_OVERRIDES` environment variable); afterwards the values are
//! read-only.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative Hermiticity tolerance, scaled by `max(1, max|m_ij|)`.
    pub hermitian: f64,
    /// Reconstruction / orthonormality residual required from the eigensolver.
    pub eig_residual: f64,
    /// Maximum number of cyclic Jacobi sweeps.
    pub eig_max_sweeps: usize,
    /// Smallest eigenvalue accepted for positive semidefinite operators.
    pub psd: f64,
    /// Unit-trace tolerance for density matrices.
    pub trace: f64,
    /// Unit-norm tolerance for pure states.
    pub norm: f64,
    /// Completeness and positivity tolerance for POVMs.
    pub povm: f64,
    /// Relative degeneracy tolerance, scaled by `max(1, spectral range)`.
    pub degeneracy_rel: f64,
    /// Slack allowed when comparing a measured value with a bound.
    pub bound_slack: f64,
    /// Energy-level weights below this are dropped from the effective description.
    pub population_floor: f64,
    /// Gap labels with `|v_beta|` below this are dropped from the gap matrix.
    pub support_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            eig_residual: 1e-10,
            eig_max_sweeps: 100,
            psd: 1e-10,
            trace: 1e-12,
            norm: 1e-12,
            povm: 1e-10,
            degeneracy_rel: 1e-9,
            bound_slack: 1e-9,
            population_floor: 1e-14,
            support_floor: 1e-16,
        }
    }
}

impl Tolerances {
    /// Applies a JSON object of overrides on top of the defaults.
    pub fn from_overrides(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

static TOLERANCES: OnceLock<Tolerances> = OnceLock::new();

/// The active tolerances. Falls back to the defaults if none were installed.
pub fn tolerances() -> &'static Tolerances {
    TOLERANCES.get_or_init(Tolerances::default)
}

/// Installs process-wide tolerances. Returns `false` if they were already fixed.
pub fn install(tol: Tolerances) -> bool {
    TOLERANCES.set(tol).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_overrides_keep_defaults() {
        let t = Tolerances::from_overrides(r#"{"bound_slack": 1e-6}"#).unwrap();
        assert_eq!(t.bound_slack, 1e-6);
        assert_eq!(t.eig_max_sweeps, 100);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Tolerances::from_overrides(r#"{"bogus": 1}"#).is_err());
    }
}
