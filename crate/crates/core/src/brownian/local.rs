//! The local-limit experiment: the vacant set seen from a typical point.
//!
//! For `X` uniform on the torus, the probability that the shrunken translate
//! `X + t^{-1/(d-2)} E` misses the path converges to `exp(-Cap E)`, the
//! non-intersection probability of the limiting occupation set. The
//! experiment streams the path once against a fixed panel of probe points.

use super::path::walk_segments;
use super::{BrownianError, SimConfig};
use crate::rng::StreamRng;
use crate::torus::{wrap_unit, wrapped_delta, Primitive, ShapeSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalLimitResult {
    pub survivors: usize,
    pub trials: usize,
    /// Fraction of probes whose translate missed the path.
    pub probability: f64,
    /// Binomial standard error.
    pub stderr: f64,
    /// The shrink factor t^{-1/(d-2)} applied to the shape.
    pub scale: f64,
}

struct Probe {
    x: Vec<f64>,
    hit: bool,
}

/// Runs the experiment for one seeded path against `trials` uniform probes
/// (drawn from `probe_seed`, independent of the path stream).
pub fn local_limit_experiment(
    cfg: &SimConfig,
    shape: &ShapeSpec,
    trials: usize,
    probe_seed: u64,
) -> Result<LocalLimitResult, BrownianError> {
    let d = cfg.d.usize();
    if shape.d() != d {
        return Err(BrownianError::DimensionMismatch(shape.d(), d));
    }
    if !(cfg.t_max > 1.0) {
        return Err(BrownianError::BadHorizon(cfg.t_max));
    }
    let scale = cfg.t_max.powf(-1.0 / (cfg.d.f64() - 2.0));
    let mut rng = StreamRng::new(probe_seed, 2);
    let mut probes: Vec<Probe> = (0..trials)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.uniform()).collect();
            Probe { x, hit: false }
        })
        .collect();

    // Reach of a probe: the scaled shape's extent about its anchor.
    let reach = scale * shape.bounding_radius();
    // Bucket probes so a segment only tests the ones it can decide.
    let nb = if reach > 0.0 {
        ((0.25 / reach).floor() as usize).clamp(2, 128)
    } else {
        64
    };
    let mut buckets: std::collections::HashMap<usize, Vec<u32>> = std::collections::HashMap::new();
    let bucket_index = |coord: f64| -> i64 { (coord * nb as f64).floor() as i64 };
    for (i, probe) in probes.iter().enumerate() {
        let mut lin = 0usize;
        for k in (0..d).rev() {
            lin = lin * nb + bucket_index(probe.x[k]).rem_euclid(nb as i64) as usize;
        }
        buckets.entry(lin).or_default().push(i as u32);
    }

    // Fast path: a single ball primitive reduces to a point-segment test.
    let ball_fast = match shape.primitives() {
        [Primitive::Ball { center, radius }] => {
            Some((center.clone(), (radius + shape.inflate_radius()) * scale))
        }
        _ => None,
    };

    let mut remaining = trials;
    let mut rel_a = vec![0.0; d];
    let mut rel_b = vec![0.0; d];
    let mut rel = vec![0.0; d];
    let mut bco = vec![0i64; d];
    walk_segments(cfg, |seg| {
        // Buckets overlapped by the segment box inflated by the reach.
        let mut lo = vec![0i64; d];
        let mut hi = vec![0i64; d];
        for k in 0..d {
            let a = seg.from[k].min(seg.to[k]) - reach;
            let b = seg.from[k].max(seg.to[k]) + reach;
            lo[k] = bucket_index(a);
            hi[k] = bucket_index(b);
            if hi[k] - lo[k] >= nb as i64 {
                lo[k] = 0;
                hi[k] = nb as i64 - 1;
            }
        }
        let mid: Vec<f64> = seg
            .from
            .iter()
            .zip(seg.to)
            .map(|(&a, &b)| 0.5 * (a + b))
            .collect();
        for k in 0..d {
            rel_a[k] = seg.from[k] - mid[k];
            rel_b[k] = seg.to[k] - mid[k];
        }
        bco.copy_from_slice(&lo);
        'boxes: loop {
            let mut blin = 0usize;
            for k in (0..d).rev() {
                blin = blin * nb + bco[k].rem_euclid(nb as i64) as usize;
            }
            if let Some(ids) = buckets.get(&blin) {
                for &id in ids {
                    let probe = &mut probes[id as usize];
                    if probe.hit {
                        continue;
                    }
                    // Segment endpoints relative to the probe anchor,
                    // minimal image through the segment midpoint.
                    for k in 0..d {
                        rel[k] = wrapped_delta(wrap_unit(mid[k]), probe.x[k]);
                    }
                    let hit = if let Some((center, radius)) = &ball_fast {
                        // Distance from the scaled ball centre to the segment.
                        let mut ab2 = 0.0;
                        let mut dot = 0.0;
                        for k in 0..d {
                            let e = rel_b[k] - rel_a[k];
                            let c = scale * center[k];
                            ab2 += e * e;
                            dot += (c - (rel[k] + rel_a[k])) * e;
                        }
                        let t = if ab2 > 0.0 {
                            (dot / ab2).clamp(0.0, 1.0)
                        } else {
                            0.0
                        };
                        let mut d2 = 0.0;
                        for k in 0..d {
                            let q = rel[k] + rel_a[k] + t * (rel_b[k] - rel_a[k]);
                            let c = scale * center[k];
                            d2 += (q - c) * (q - c);
                        }
                        d2.sqrt() <= *radius
                    } else {
                        // Generic shapes: sample points along the segment
                        // and test membership of the rescaled offset. The
                        // sampling gap is far below the polyline's own
                        // discretisation error.
                        let samples = 8;
                        (0..=samples).any(|i| {
                            let t = i as f64 / samples as f64;
                            let mut inside = true;
                            let mut q = vec![0.0; d];
                            for k in 0..d {
                                q[k] = (rel[k] + rel_a[k] + t * (rel_b[k] - rel_a[k])) / scale;
                                if !q[k].is_finite() {
                                    inside = false;
                                }
                            }
                            inside && shape.contains(&q)
                        })
                    };
                    if hit {
                        probe.hit = true;
                        remaining -= 1;
                    }
                }
            }
            if remaining == 0 {
                return false;
            }
            for k in 0..d {
                bco[k] += 1;
                if bco[k] <= hi[k] {
                    continue 'boxes;
                }
                bco[k] = lo[k];
            }
            break;
        }
        true
    });

    let survivors = probes.iter().filter(|p| !p.hit).count();
    let p = survivors as f64 / trials as f64;
    Ok(LocalLimitResult {
        survivors,
        trials,
        probability: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        scale,
    })
}
