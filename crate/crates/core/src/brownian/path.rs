//! Path stepping: exact Gaussian increments at fixed step size, streamed as
//! segments in unwrapped coordinates.

use super::{BrownianError, SimConfig};
use crate::rng::StreamRng;
use crate::torus::{wrap_unit, TorusPoint};
use serde::{Deserialize, Serialize};

/// RNG stream id reserved for path increments.
pub(crate) const PATH_STREAM: u64 = 0;

/// One step of the sampled path, in unwrapped (cumulative) coordinates.
pub struct Segment<'a> {
    pub t0: f64,
    pub t1: f64,
    pub from: &'a [f64],
    pub to: &'a [f64],
}

/// Streams the path of `cfg` as segments, allocation-free. The visitor
/// returns `false` to stop early. Unwrapped coordinates start at `start`;
/// wrap with `x - floor(x)` where torus positions are needed.
pub fn walk_segments(cfg: &SimConfig, mut visit: impl FnMut(Segment<'_>) -> bool) {
    let d = cfg.d.usize();
    let mut rng = StreamRng::new(cfg.seed, PATH_STREAM);
    let mut from: Vec<f64> = cfg.start.coords().to_vec();
    let mut to = vec![0.0; d];
    let sigma = cfg.dt.sqrt();
    let steps = cfg.steps();
    let mut t0 = 0.0;
    for step in 0..steps {
        let t1 = ((step + 1) as f64 * cfg.dt).min(cfg.t_max);
        // The final step is shortened to land exactly on the horizon.
        let scale = if t1 - t0 < cfg.dt * (1.0 - 1e-12) {
            (t1 - t0).max(0.0).sqrt()
        } else {
            sigma
        };
        for k in 0..d {
            to[k] = from[k] + scale * rng.standard_normal();
        }
        let go_on = visit(Segment {
            t0,
            t1,
            from: &from,
            to: &to,
        });
        std::mem::swap(&mut from, &mut to);
        t0 = t1;
        if !go_on {
            return;
        }
    }
}

/// A materialised path: wrapped samples at uniform times, plus the final
/// unwrapped displacement for wrap bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrownianPath {
    pub d: usize,
    pub dt: f64,
    /// Wrapped positions, `d` per sample, sample 0 = start.
    pub samples: Vec<f64>,
    /// Unwrapped displacement accumulated over the whole path.
    pub displacement: Vec<f64>,
}

impl BrownianPath {
    pub fn len(&self) -> usize {
        self.samples.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_of(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.d..(i + 1) * self.d]
    }

    pub fn point(&self, i: usize) -> TorusPoint {
        TorusPoint::new(self.sample(i).to_vec())
    }
}

const MATERIALISE_CAP: u64 = 1 << 26;

/// Materialises the sampled path. Deterministic in the seed; a second call
/// with the same config returns the identical path. Long runs are refused:
/// stream with [`walk_segments`] instead.
pub fn simulate_path(cfg: &SimConfig) -> Result<BrownianPath, BrownianError> {
    let steps = cfg.steps();
    if steps > MATERIALISE_CAP {
        return Err(BrownianError::TooManySteps {
            steps,
            cap: MATERIALISE_CAP,
        });
    }
    let d = cfg.d.usize();
    let mut samples = Vec::with_capacity(((steps + 1) as usize) * d);
    samples.extend(cfg.start.coords().iter().copied());
    let mut last_unwrapped = cfg.start.coords().to_vec();
    walk_segments(cfg, |seg| {
        for &x in seg.to {
            samples.push(wrap_unit(x));
        }
        last_unwrapped.copy_from_slice(seg.to);
        true
    });
    let displacement = last_unwrapped
        .iter()
        .zip(cfg.start.coords())
        .map(|(a, b)| a - b)
        .collect();
    Ok(BrownianPath {
        d,
        dt: cfg.dt,
        samples,
        displacement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::Dim;

    fn d3() -> Dim {
        Dim::new(3).unwrap()
    }

    fn cfg(seed: u64, t_max: f64) -> SimConfig {
        SimConfig::new(
            d3(),
            t_max,
            1e-3,
            0.2,
            seed,
            16,
            TorusPoint::origin(3),
        )
        .unwrap()
    }

    #[test]
    fn zero_horizon_is_just_the_start() {
        let path = simulate_path(&cfg(1, 0.0)).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path.sample(0), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn same_seed_same_path() {
        let a = simulate_path(&cfg(7, 0.5)).unwrap();
        let b = simulate_path(&cfg(7, 0.5)).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = simulate_path(&cfg(8, 0.5)).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn samples_are_wrapped_and_displacement_tracks() {
        let path = simulate_path(&cfg(3, 1.0)).unwrap();
        assert!(path.samples.iter().all(|&x| (0.0..1.0).contains(&x)));
        // Re-walk to accumulate the displacement independently.
        let mut last = vec![0.0; 3];
        walk_segments(&cfg(3, 1.0), |seg| {
            last.copy_from_slice(seg.to);
            true
        });
        for k in 0..3 {
            assert!((path.displacement[k] - last[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn displacement_variance_matches_time() {
        // Unwrapped per-axis displacement at t = 1 is exactly N(0,1); the
        // sample variance over 1e4 seeds must sit within 5%.
        let n = 10_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for seed in 0..n {
            let c = SimConfig::new(
                d3(),
                1.0,
                1.0 / 128.0,
                0.5,
                seed as u64,
                8,
                TorusPoint::origin(3),
            )
            .unwrap();
            let mut last = [0.0; 3];
            walk_segments(&c, |seg| {
                last.copy_from_slice(seg.to);
                true
            });
            sum += last[0];
            sumsq += last[0] * last[0];
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn horizon_lands_exactly() {
        // t_max not a multiple of dt: the last segment is shortened.
        let c = SimConfig::new(d3(), 0.0105, 1e-3, 0.2, 5, 16, TorusPoint::origin(3)).unwrap();
        let mut end_time = 0.0;
        walk_segments(&c, |seg| {
            end_time = seg.t1;
            true
        });
        assert!((end_time - 0.0105).abs() < 1e-15);
    }
}
