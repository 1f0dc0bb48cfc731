//! Brownian motion on the torus: path simulation, Wiener sausage
//! rasterization, excursion counting, inradius and cover-time observables,
//! and the local-limit experiment.

mod cover;
mod excursion;
mod local;
mod path;
mod sausage;

pub use cover::{cover_time, largest_vacant_inradius, CoverResult};
pub use excursion::{
    count_excursions_in_samples, simulate_excursions, ExcursionOpts, ExcursionRecord,
    ExcursionSummary,
};
pub use local::{local_limit_experiment, LocalLimitResult};
pub use path::{simulate_path, walk_segments, BrownianPath, Segment};
pub use sausage::{rasterize_polyline_sausage, rasterize_sausage};

use crate::scaling::{hole_scale, Dim, ScalingError};
use crate::torus::{GridSpec, TorusError, TorusPoint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BrownianError {
    #[error("time step {dt} exceeds the anti-tunneling bound {bound} ({context})")]
    StepTooCoarse {
        dt: f64,
        bound: f64,
        context: &'static str,
    },
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("horizon must be nonnegative, got {0}")]
    BadHorizon(f64),
    #[error("sausage radius must be nonnegative, got {0}")]
    BadRadius(f64),
    #[error("annulus needs 0 < r < R < 1/2, got r={r}, R={big_r}")]
    BadAnnulus { r: f64, big_r: f64 },
    #[error("epsilon must lie in (0,1), got {0}")]
    BadEps(f64),
    #[error("start point has dimension {0}, config has {1}")]
    DimensionMismatch(usize, usize),
    #[error("path would take {steps} steps, above the materialisation cap {cap}; stream it instead")]
    TooManySteps { steps: u64, cap: u64 },
    #[error("scaling: {0}")]
    Scaling(#[from] ScalingError),
    #[error("geometry: {0}")]
    Torus(#[from] TorusError),
}

/// Full description of a seeded simulation run. The seed determines the
/// path exactly; replaying a config reproduces it bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub d: Dim,
    pub t_max: f64,
    pub dt: f64,
    /// Sausage radius; 0 rasterizes the bare path.
    pub rho: f64,
    pub seed: u64,
    /// Raster resolution (cells per axis).
    pub grid_n: usize,
    pub start: TorusPoint,
}

impl SimConfig {
    pub fn new(
        d: Dim,
        t_max: f64,
        dt: f64,
        rho: f64,
        seed: u64,
        grid_n: usize,
        start: TorusPoint,
    ) -> Result<Self, BrownianError> {
        if !(dt > 0.0) {
            return Err(BrownianError::BadStep(dt));
        }
        if !(t_max >= 0.0) {
            return Err(BrownianError::BadHorizon(t_max));
        }
        if rho < 0.0 {
            return Err(BrownianError::BadRadius(rho));
        }
        if start.dim() != d.usize() {
            return Err(BrownianError::DimensionMismatch(start.dim(), d.usize()));
        }
        let bound = Self::step_bound(rho, grid_n);
        if dt > bound * (1.0 + 1e-12) {
            return Err(BrownianError::StepTooCoarse {
                dt,
                bound,
                context: if rho > 0.0 {
                    "dt <= rho^2/16"
                } else {
                    "dt <= (1/n)^2/16"
                },
            });
        }
        Ok(SimConfig {
            d,
            t_max,
            dt,
            rho,
            seed,
            grid_n,
            start,
        })
    }

    /// The anti-tunneling bound: `rho^2/16` for sausages, `(1/n)^2/16` for
    /// bare paths.
    pub fn step_bound(rho: f64, grid_n: usize) -> f64 {
        if rho > 0.0 {
            rho * rho / 16.0
        } else {
            let h = 1.0 / grid_n as f64;
            h * h / 16.0
        }
    }

    /// Config with the step chosen at the anti-tunneling bound and the path
    /// started at the origin.
    pub fn auto(
        d: Dim,
        t_max: f64,
        rho: f64,
        seed: u64,
        grid_n: usize,
    ) -> Result<Self, BrownianError> {
        let dt = Self::step_bound(rho, grid_n);
        Self::new(d, t_max, dt, rho, seed, grid_n, TorusPoint::origin(d.usize()))
    }

    pub fn grid(&self) -> Result<GridSpec, TorusError> {
        GridSpec::new(self.d.usize(), self.grid_n)
    }

    pub fn steps(&self) -> u64 {
        (self.t_max / self.dt).ceil() as u64
    }
}

/// The default sausage radius window: the geometric midpoint
/// `phi_d(t) / (log t)^{1/(2d)}` of the admissible band between
/// `phi_d(t)/(log t)^{1/d}` and `phi_d(t)`.
pub fn default_sausage_radius(d: Dim, t: f64) -> Result<f64, ScalingError> {
    let phi = hole_scale(d, t)?;
    Ok(phi / t.ln().powf(1.0 / (2.0 * d.f64())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> Dim {
        Dim::new(3).unwrap()
    }

    #[test]
    fn config_validation() {
        let start = TorusPoint::origin(3);
        // Sausage bound: rho = 0.1 allows dt <= 6.25e-4.
        assert!(SimConfig::new(d3(), 1.0, 1e-3, 0.1, 0, 64, start.clone()).is_err());
        assert!(SimConfig::new(d3(), 1.0, 6e-4, 0.1, 0, 64, start.clone()).is_ok());
        // Bare-path bound is grid-based.
        assert!(SimConfig::new(d3(), 1.0, 1e-4, 0.0, 0, 64, start.clone()).is_err());
        assert!(SimConfig::new(d3(), 1.0, 1e-5, 0.0, 0, 64, start.clone()).is_ok());
        assert!(SimConfig::new(d3(), 1.0, -1.0, 0.0, 0, 64, start.clone()).is_err());
        assert!(SimConfig::new(d3(), -1.0, 1e-5, 0.0, 0, 64, start).is_err());
    }

    #[test]
    fn default_radius_sits_in_the_window() {
        for t in [20.0, 50.0, 100.0] {
            let phi = hole_scale(d3(), t).unwrap();
            let rho = default_sausage_radius(d3(), t).unwrap();
            assert!(rho < phi);
            assert!(rho > phi / t.ln().powf(1.0 / 3.0));
        }
    }
}
