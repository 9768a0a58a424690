//! Run manifest written next to every solve.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dopf_core::admm::{RunOutcome, SolverConfig};
use dopf_core::verify::ExactnessReport;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConfigEcho {
    pub rho: f64,
    pub tol_scale: f64,
    pub max_iters: usize,
    pub mode: String,
    pub pin_root_phasors: bool,
    pub weighted_dual_step: bool,
}

impl From<&SolverConfig> for ConfigEcho {
    fn from(c: &SolverConfig) -> Self {
        ConfigEcho {
            rho: c.rho,
            tol_scale: c.tol_scale,
            max_iters: c.max_iters,
            mode: c.mode.to_string(),
            pin_root_phasors: c.pin_root_phasors,
            weighted_dual_step: c.weighted_dual_step,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Residuals {
    pub r: f64,
    pub s: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Exactness {
    pub max_ratio: f64,
    pub threshold: f64,
    pub exact: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub config: ConfigEcho,
    pub network: String,
    /// SHA-256 of the network file as read.
    pub model_sha256: String,
    pub buses: usize,
    pub status: String,
    pub iterations: usize,
    pub objective: f64,
    pub wall_time_total_s: f64,
    /// Total wall time divided by the number of buses.
    pub wall_time_per_bus_s: f64,
    pub x_update_s: f64,
    pub y_update_s: f64,
    pub final_residuals: Residuals,
    pub exactness: Exactness,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(
        config: &SolverConfig,
        network: &str,
        network_bytes: &[u8],
        buses: usize,
        outcome: &RunOutcome,
        objective: f64,
        exactness: &ExactnessReport,
    ) -> Self {
        let total = outcome.timing.total.as_secs_f64();
        let (r, s) = outcome.last().map_or((f64::NAN, f64::NAN), |h| (h.r, h.s));
        RunManifest {
            config: config.into(),
            network: network.to_string(),
            model_sha256: sha256_hex(network_bytes),
            buses,
            status: outcome.status.to_string(),
            iterations: outcome.iterations(),
            objective,
            wall_time_total_s: total,
            wall_time_per_bus_s: total / buses as f64,
            x_update_s: outcome.timing.x_update.as_secs_f64(),
            y_update_s: outcome.timing.y_update.as_secs_f64(),
            final_residuals: Residuals {
                r,
                s,
                tolerance: config.tol_scale * (buses as f64).sqrt(),
            },
            exactness: Exactness {
                max_ratio: exactness.max_ratio,
                threshold: exactness.threshold,
                exact: exactness.exact,
            },
        }
    }
}
