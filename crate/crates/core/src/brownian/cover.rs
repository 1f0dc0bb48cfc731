//! The inradius observable and the epsilon-cover time.
//!
//! The largest inradius of the vacant set is read off the periodic distance
//! transform of the occupied raster. The cover time runs the path forward
//! with incremental cell marking, checks coverage on a geometric checkpoint
//! schedule, and then narrows the bracket by bisection, resuming from
//! snapshots of the generator state (the counter-based stream makes resumed
//! segments identical to a fresh replay).

use super::path::PATH_STREAM;
use super::{BrownianError, SimConfig};
use crate::rng::StreamRng;
use crate::torus::{squared_cell_distances, TorusError, VoxelSet};
use serde::{Deserialize, Serialize};

/// Largest inradius of the complement of `occupied`: the maximum over cell
/// centres of the distance to the nearest occupied centre, with one cell
/// diagonal of uncertainty. Errors when nothing is occupied; returns 0 when
/// everything is.
pub fn largest_vacant_inradius(occupied: &VoxelSet) -> Result<(f64, f64), BrownianError> {
    if occupied.is_empty_set() {
        return Err(BrownianError::Torus(TorusError::EmptySet));
    }
    let n = occupied.grid().n();
    let diag = (occupied.grid().d() as f64).sqrt() / n as f64;
    let sq = squared_cell_distances(occupied)?;
    let max = sq.iter().copied().max().unwrap_or(0);
    Ok(((max as f64).sqrt() / n as f64, diag))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverResult {
    pub covered: bool,
    /// First checkpoint time at which every cell centre sits within eps of
    /// the path raster; the horizon (a lower bound) when not covered.
    pub time: f64,
    /// Enclosing bracket (last uncovered, first covered).
    pub bracket: (f64, f64),
    /// Coverage evaluations performed.
    pub checks: usize,
}

/// Stepping state that can be snapshotted for bisection replays.
#[derive(Clone)]
struct Stepper {
    rng: StreamRng,
    pos: Vec<f64>,
    time: f64,
    marks: VoxelSet,
}

impl Stepper {
    fn new(cfg: &SimConfig) -> Result<Self, BrownianError> {
        let grid = cfg.grid()?;
        let mut marks = VoxelSet::empty(grid);
        let pos: Vec<f64> = cfg.start.coords().to_vec();
        let mut idx = vec![0i64; cfg.d.usize()];
        super::sausage::mark_cell_of(&mut marks, &pos, &mut idx);
        Ok(Stepper {
            rng: StreamRng::new(cfg.seed, PATH_STREAM),
            pos,
            time: 0.0,
            marks,
        })
    }

    /// Advances to the target time in whole steps, marking traversed cells.
    fn advance(&mut self, cfg: &SimConfig, target: f64) {
        let d = cfg.d.usize();
        let n = cfg.grid_n;
        let sigma = cfg.dt.sqrt();
        let mut next = vec![0.0; d];
        let mut idx = vec![0i64; d];
        while self.time < target {
            for k in 0..d {
                next[k] = self.pos[k] + sigma * self.rng.standard_normal();
            }
            super::sausage::mark_segment_pub(&mut self.marks, &self.pos, &next, n, &mut idx);
            self.pos.copy_from_slice(&next);
            self.time += cfg.dt;
        }
    }

    fn covered(&self, eps_cells_sq: f64) -> bool {
        match squared_cell_distances(&self.marks) {
            Ok(sq) => sq.iter().all(|&s| (s as f64) <= eps_cells_sq),
            Err(_) => false,
        }
    }
}

/// First time every grid cell centre lies within `eps` of the path raster,
/// bracketed on a geometric schedule `t_k = t_0 1.25^k` and bisected by
/// replay. Distances carry the raster's half-diagonal bias. If the horizon
/// `cfg.t_max` passes without coverage the result is flagged and the
/// horizon returned as a lower bound.
pub fn cover_time(cfg: &SimConfig, eps: f64) -> Result<CoverResult, BrownianError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(BrownianError::BadEps(eps));
    }
    let d = cfg.d.usize();
    if eps >= (d as f64).sqrt() / 2.0 {
        // A single point is within eps of everything.
        return Ok(CoverResult {
            covered: true,
            time: 0.0,
            bracket: (0.0, 0.0),
            checks: 0,
        });
    }
    let eps_cells_sq = (eps * cfg.grid_n as f64).powi(2);
    let mut checks = 0usize;

    let mut state = Stepper::new(cfg)?;
    let mut prev_t = 0.0;
    let mut prev_state = state.clone();
    let start = 0.5f64.min(cfg.t_max.max(0.25));
    let mut target = start;
    let (mut lo, mut hi);
    loop {
        if target >= cfg.t_max {
            state.advance(cfg, cfg.t_max);
            checks += 1;
            if state.covered(eps_cells_sq) {
                lo = prev_t;
                hi = cfg.t_max;
                break;
            }
            return Ok(CoverResult {
                covered: false,
                time: cfg.t_max,
                bracket: (cfg.t_max, f64::INFINITY),
                checks,
            });
        }
        prev_state = state.clone();
        prev_t = state.time;
        state.advance(cfg, target);
        checks += 1;
        if state.covered(eps_cells_sq) {
            lo = prev_t;
            hi = state.time;
            break;
        }
        target *= 1.25;
    }

    // Bisect (lo, hi] by resuming from the snapshot at lo.
    while hi - lo > (2.0 * cfg.dt).max(0.004 * hi) {
        let mid = 0.5 * (lo + hi);
        let mut probe = prev_state.clone();
        probe.advance(cfg, mid);
        checks += 1;
        if probe.covered(eps_cells_sq) {
            hi = probe.time;
        } else {
            lo = probe.time;
            prev_state = probe;
        }
    }
    Ok(CoverResult {
        covered: true,
        time: hi,
        bracket: (lo, hi),
        checks,
    })
}
