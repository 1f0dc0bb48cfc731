//! Newtonian capacity: exact ball values, a walk-on-spheres hitting
//! estimator, and an equilibrium-energy estimator.

mod energy;
mod kernel;
mod wos;

pub use energy::{cap_energy, cap_energy_with_constant, cube_surface_cloud, sphere_cloud, C_PANEL};
pub use wos::{
    cap_voxelset, cap_wos, hitting_decay_check, DistanceOracle, HitDecayRow, VoxelOracle,
    WosParams,
};

use crate::scaling::{unit_ball_capacity, Dim};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CapacityError {
    #[error("shape (bounding radius {bounding}) does not fit inside the enclosing sphere of radius {enclose}")]
    ShapeOutsideEnclosure { bounding: f64, enclose: f64 },
    #[error("{fraction:.3} of walkers exhausted max_steps (gate is 1%)")]
    TooManyCensored { fraction: f64 },
    #[error("energy method needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("duplicate boundary points at indices {0} and {1}")]
    DuplicatePoints(usize, usize),
    #[error("kernel matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("active-set energy minimisation degenerated")]
    Degenerate,
    #[error("shape dimension {0} does not match requested dimension {1}")]
    DimensionMismatch(usize, usize),
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("{0}")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Wos,
    Energy,
}

/// A capacity estimate with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub value: f64,
    /// Standard error; 0 for analytic values and for the deterministic
    /// energy quadrature.
    pub stderr: f64,
    pub method: Method,
    pub samples: usize,
    /// Walkers that hit the step limit (counted as misses, gated at 1%).
    pub censored: usize,
}

/// Exact capacity of a ball: `kappa_d radius^{d-2}`.
pub fn cap_ball(d: Dim, radius: f64) -> Result<CapacityEstimate, CapacityError> {
    if radius < 0.0 {
        return Err(CapacityError::NegativeRadius(radius));
    }
    Ok(CapacityEstimate {
        value: unit_ball_capacity(d) * radius.powf(d.f64() - 2.0),
        stderr: 0.0,
        method: Method::Analytic,
        samples: 0,
        censored: 0,
    })
}
