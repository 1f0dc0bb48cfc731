//! Walk-on-spheres estimation of hitting probabilities and capacities.
//!
//! Capacity from hitting probabilities: for a set `E` inside `B(0, r0)`,
//! the spherical average of the hitting probability over `x` uniform on the
//! sphere of radius `r0` equals `Cap E / (kappa_d r0^{d-2})`, exactly. The
//! estimator launches walkers uniformly on that sphere, walks on spheres of
//! radius equal to the distance to `E` while inside, absorbs within a thin
//! shell of `E`, and when outside the enclosing sphere either escapes (the
//! exact probability `1 - (r0/s)^{d-2}`) or re-enters through the exact
//! harmonic entry law.

use super::kernel::sample_reentry;
use super::{CapacityError, CapacityEstimate, Method};
use crate::rng::StreamRng;
use crate::scaling::{unit_ball_capacity, Dim};
use crate::torus::ShapeSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Geometry queried by the walkers: Euclidean distance to the target set,
/// zero inside.
pub trait DistanceOracle: Sync {
    fn distance(&self, x: &[f64]) -> f64;
}

impl DistanceOracle for ShapeSpec {
    fn distance(&self, x: &[f64]) -> f64 {
        ShapeSpec::distance(self, x)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WosParams {
    /// Radius of the sphere containing the target set.
    pub enclose_radius: f64,
    pub walkers: usize,
    /// Absorption distance; `None` picks 1e-4 of the set diameter for
    /// analytic shapes and half a cell diagonal for voxel sets.
    pub epsilon_shell: Option<f64>,
    pub max_steps: usize,
}

impl WosParams {
    pub fn new(enclose_radius: f64, walkers: usize) -> Self {
        WosParams {
            enclose_radius,
            walkers,
            epsilon_shell: None,
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Outcome {
    Hit,
    Miss,
    Censored,
}

/// One walker from `start`; estimates whether Brownian motion from `start`
/// hits the set before escaping to infinity.
fn walk(
    oracle: &impl DistanceOracle,
    d: usize,
    dm2: f64,
    r0: f64,
    eps: f64,
    max_steps: usize,
    pos: &mut Vec<f64>,
    rng: &mut StreamRng,
) -> Outcome {
    let mut dir = vec![0.0; d];
    let mut entry = vec![0.0; d];
    for _ in 0..max_steps {
        let s2: f64 = pos.iter().map(|x| x * x).sum();
        let s = s2.sqrt();
        if s > r0 * (1.0 + 1e-12) {
            // Exterior: escape or re-enter through the harmonic law.
            let p_hit_sphere = (r0 / s).powf(dm2);
            if rng.uniform() >= p_hit_sphere {
                return Outcome::Miss;
            }
            sample_reentry(pos, r0, rng, &mut entry);
            pos.copy_from_slice(&entry);
            continue;
        }
        let dist = oracle.distance(pos);
        if dist <= eps {
            return Outcome::Hit;
        }
        rng.unit_vector(d, &mut dir);
        for k in 0..d {
            pos[k] += dist * dir[k];
        }
    }
    Outcome::Censored
}

pub(crate) struct WosTally {
    pub hits: usize,
    pub total: usize,
    pub censored: usize,
}

/// Runs `walkers` independent walkers with the given launch rule. Walkers
/// are keyed by index, so the tally does not depend on thread scheduling.
pub(crate) fn run_walkers(
    oracle: &(impl DistanceOracle + Sync),
    d: Dim,
    params: &WosParams,
    eps: f64,
    seed: u64,
    launch: impl Fn(&mut StreamRng, &mut Vec<f64>) + Sync,
    parallel: bool,
) -> Result<WosTally, CapacityError> {
    let dm2 = d.f64() - 2.0;
    let dd = d.usize();
    let r0 = params.enclose_radius;
    let one = |w: usize| -> (usize, usize) {
        let mut rng = StreamRng::new(seed, w as u64);
        let mut pos = vec![0.0; dd];
        launch(&mut rng, &mut pos);
        match walk(oracle, dd, dm2, r0, eps, params.max_steps, &mut pos, &mut rng) {
            Outcome::Hit => (1, 0),
            Outcome::Miss => (0, 0),
            Outcome::Censored => (0, 1),
        }
    };
    let (hits, censored) = if parallel {
        (0..params.walkers)
            .into_par_iter()
            .map(one)
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    } else {
        let mut acc = (0, 0);
        for w in 0..params.walkers {
            let r = one(w);
            acc.0 += r.0;
            acc.1 += r.1;
        }
        acc
    };
    let frac = censored as f64 / params.walkers as f64;
    if frac > 0.01 {
        return Err(CapacityError::TooManyCensored { fraction: frac });
    }
    Ok(WosTally {
        hits,
        total: params.walkers,
        censored,
    })
}

/// Capacity of an analytic shape by walk-on-spheres. Censored walkers (under
/// the 1% gate) count as misses.
pub fn cap_wos(
    shape: &ShapeSpec,
    d: Dim,
    params: &WosParams,
    seed: u64,
) -> Result<CapacityEstimate, CapacityError> {
    if shape.d() != d.usize() {
        return Err(CapacityError::DimensionMismatch(shape.d(), d.usize()));
    }
    let bound = shape.bounding_radius();
    if bound >= params.enclose_radius {
        return Err(CapacityError::ShapeOutsideEnclosure {
            bounding: bound,
            enclose: params.enclose_radius,
        });
    }
    let eps = params
        .epsilon_shell
        .unwrap_or(1e-4 * shape.diameter_bound().max(1e-12));
    cap_from_sphere_launch(shape, d, params, eps, seed)
}

pub(crate) fn cap_from_sphere_launch(
    oracle: &(impl DistanceOracle + Sync),
    d: Dim,
    params: &WosParams,
    eps: f64,
    seed: u64,
) -> Result<CapacityEstimate, CapacityError> {
    if eps <= 0.0 {
        return Err(CapacityError::BadParams("epsilon shell must be positive".into()));
    }
    let r0 = params.enclose_radius;
    let dd = d.usize();
    let tally = run_walkers(
        oracle,
        d,
        params,
        eps,
        seed,
        |rng, pos| {
            rng.unit_vector(dd, pos);
            for x in pos.iter_mut() {
                *x *= r0;
            }
        },
        true,
    )?;
    let scale = unit_ball_capacity(d) * r0.powf(d.f64() - 2.0);
    let p = tally.hits as f64 / tally.total as f64;
    let stderr = scale * (p * (1.0 - p) / tally.total as f64).sqrt();
    Ok(CapacityEstimate {
        value: scale * p,
        stderr,
        method: Method::Wos,
        samples: tally.total,
        censored: tally.censored,
    })
}

/// Row of the hitting-probability decay table: launch distance, estimated
/// hit probability, and the capacity-normalised product `s^{d-2} p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HitDecayRow {
    pub distance: f64,
    pub hit_probability: f64,
    pub stderr: f64,
    pub scaled: f64,
    pub scaled_stderr: f64,
}

/// Monte Carlo hitting probabilities from single launch points at the given
/// distances: `s^{d-2} P_x(hit E)` stabilises at `Cap E / kappa_d`.
pub fn hitting_decay_check(
    shape: &ShapeSpec,
    d: Dim,
    distances: &[f64],
    walkers: usize,
    seed: u64,
) -> Result<Vec<HitDecayRow>, CapacityError> {
    if shape.d() != d.usize() {
        return Err(CapacityError::DimensionMismatch(shape.d(), d.usize()));
    }
    let r0 = 1.25 * shape.bounding_radius().max(1e-9);
    let eps = 1e-4 * shape.diameter_bound().max(1e-12);
    let dd = d.usize();
    let mut rows = Vec::with_capacity(distances.len());
    for (i, &s) in distances.iter().enumerate() {
        let mut launch_point = vec![0.0; dd];
        launch_point[0] = s;
        if shape.distance(&launch_point) <= 0.0 {
            return Err(CapacityError::BadParams(format!(
                "launch point at distance {s} lies inside the shape"
            )));
        }
        let params = WosParams {
            enclose_radius: r0,
            walkers,
            epsilon_shell: Some(eps),
            max_steps: 100_000,
        };
        let tally = run_walkers(
            shape,
            d,
            &params,
            eps,
            seed.wrapping_add(i as u64).wrapping_mul(0x9e3779b97f4a7c15),
            |_rng, pos| {
                pos.fill(0.0);
                pos[0] = s;
            },
            true,
        )?;
        let p = tally.hits as f64 / tally.total as f64;
        let se = (p * (1.0 - p) / tally.total as f64).sqrt();
        let pow = s.powf(d.f64() - 2.0);
        rows.push(HitDecayRow {
            distance: s,
            hit_probability: p,
            stderr: se,
            scaled: pow * p,
            scaled_stderr: pow * se,
        });
    }
    Ok(rows)
}

/// Distance oracle for a lifted voxel component: the target is the union of
/// closed cubes of side `h` at the given integer cells. Far queries use a
/// precomputed box distance transform (conservative by half a diagonal);
/// near queries switch to exact point-to-cube scans over expanding shells.
pub struct VoxelOracle {
    d: usize,
    h: f64,
    dims: Vec<usize>,
    strides: Vec<usize>,
    min: Vec<i64>,
    occ: Vec<bool>,
    /// sqrt of squared cell-centre distances, in cell units.
    dist_cells: Vec<f32>,
    /// Offset mapping external (centred) coordinates to cell coordinates.
    centre_shift: Vec<f64>,
    bounding: f64,
}

impl VoxelOracle {
    /// `cells`: flattened integer coordinates, stride `d`. Coordinates are
    /// re-centred so the bounding box midpoint maps to the origin.
    pub fn new(d: usize, cells: &[i64], h: f64) -> Result<Self, CapacityError> {
        if cells.is_empty() || cells.len() % d != 0 {
            return Err(CapacityError::BadParams("empty or ragged cell list".into()));
        }
        let mut min = vec![i64::MAX; d];
        let mut max = vec![i64::MIN; d];
        for c in cells.chunks_exact(d) {
            for k in 0..d {
                min[k] = min[k].min(c[k]);
                max[k] = max[k].max(c[k]);
            }
        }
        const MARGIN: usize = 4;
        let dims: Vec<usize> = (0..d)
            .map(|k| (max[k] - min[k]) as usize + 1 + 2 * MARGIN)
            .collect();
        let total: usize = dims.iter().product();
        if total > 1 << 28 {
            return Err(CapacityError::BadParams("component too large".into()));
        }
        let mut strides = vec![1usize; d];
        for k in 1..d {
            strides[k] = strides[k - 1] * dims[k - 1];
        }
        let shifted_min: Vec<i64> = min.iter().map(|&m| m - MARGIN as i64).collect();
        let mut occ = vec![false; total];
        for c in cells.chunks_exact(d) {
            let mut lin = 0;
            for k in 0..d {
                lin += (c[k] - shifted_min[k]) as usize * strides[k];
            }
            occ[lin] = true;
        }
        let sq = crate::torus::box_squared_distances(&dims, &occ);
        let dist_cells: Vec<f32> = sq.iter().map(|&s| (s as f64).sqrt() as f32).collect();
        // Centre of the bounding box of cube corners, in external units.
        let centre_shift: Vec<f64> = (0..d)
            .map(|k| (min[k] + max[k] + 1) as f64 / 2.0 * h)
            .collect();
        let bounding = cells
            .chunks_exact(d)
            .map(|c| {
                (0..d)
                    .map(|k| {
                        let lo = c[k] as f64 * h - centre_shift[k];
                        let hi = lo + h;
                        lo.abs().max(hi.abs()).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max);
        Ok(VoxelOracle {
            d,
            h,
            dims,
            strides,
            min: shifted_min,
            occ,
            dist_cells,
            centre_shift,
            bounding,
        })
    }

    /// Radius about the origin (of the centred frame) containing all cubes.
    pub fn bounding_radius(&self) -> f64 {
        self.bounding
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Exact distance from cell-frame point `y` (cell units) to the cube
    /// with low corner at integer `cell`.
    fn cube_distance(&self, y: &[f64], cell: &[i64]) -> f64 {
        let mut d2 = 0.0;
        for k in 0..self.d {
            let lo = cell[k] as f64;
            let g = (lo - y[k]).max(0.0).max(y[k] - (lo + 1.0));
            d2 += g * g;
        }
        d2.sqrt()
    }
}

impl DistanceOracle for VoxelOracle {
    fn distance(&self, x: &[f64]) -> f64 {
        let d = self.d;
        // Cell-frame coordinates: cube k spans [cell_k, cell_k + 1).
        let mut y = vec![0.0; d];
        let mut inside_box = true;
        let mut clamped = vec![0i64; d];
        let mut out2 = 0.0;
        for k in 0..d {
            y[k] = (x[k] + self.centre_shift[k]) / self.h - self.min[k] as f64;
            let idx = (y[k] - 0.5).round() as i64;
            let max_idx = self.dims[k] as i64 - 1;
            let c = idx.clamp(0, max_idx);
            if c != idx {
                inside_box = false;
                let edge = if idx < 0 { 0.0 } else { self.dims[k] as f64 };
                let gap = if idx < 0 { edge - y[k] } else { y[k] - edge };
                out2 += gap.max(0.0).powi(2);
            }
            clamped[k] = c;
        }
        let mut lin = 0;
        for k in 0..d {
            lin += clamped[k] as usize * self.strides[k];
        }
        let centre_dist = self.dist_cells[lin] as f64;
        let sqrt_d = (d as f64).sqrt();
        // Lower bound: centre distance less the offset to the clamped
        // centre, less half a diagonal for the cube extent.
        let mut off2 = 0.0;
        for k in 0..d {
            let centre = clamped[k] as f64 + 0.5;
            off2 += (y[k] - centre) * (y[k] - centre);
        }
        let lower_cells = centre_dist - off2.sqrt() - 0.5 * sqrt_d;
        if !inside_box {
            // Far outside: distance at least the gap to the padded box.
            let fallback = (out2.sqrt() - 1.0).max(0.0);
            let bound = lower_cells.max(fallback);
            if bound > 2.0 {
                return bound * self.h;
            }
        } else if lower_cells > 2.0 {
            return lower_cells * self.h;
        }
        // Near field: exact scan over expanding Chebyshev shells around the
        // clamped cell. Any cube beyond shell r is at distance > r - 1 cells.
        let mut best = f64::INFINITY;
        let max_ring = self
            .dims
            .iter()
            .map(|&n| n)
            .max()
            .unwrap_or(1) as i64;
        let mut cell = vec![0i64; d];
        for ring in 0..=max_ring {
            if best <= (ring - 1).max(0) as f64 {
                break;
            }
            scan_ring(&self.dims, &clamped, ring, &mut cell, &mut |cand: &[i64]| {
                let mut lin = 0;
                for k in 0..d {
                    lin += cand[k] as usize * self.strides[k];
                }
                if self.occ[lin] {
                    let dcand = self.cube_distance(&y, cand);
                    if dcand < best {
                        best = dcand;
                    }
                }
            });
        }
        if best.is_infinite() {
            // No cube found inside the scan (cannot happen for nonempty
            // components); fall back to the conservative bound.
            return (lower_cells.max(0.0)) * self.h;
        }
        best * self.h
    }
}

/// Visits all in-box cells at Chebyshev distance exactly `ring` from `base`.
fn scan_ring(
    dims: &[usize],
    base: &[i64],
    ring: i64,
    cell: &mut [i64],
    f: &mut impl FnMut(&[i64]),
) {
    let d = dims.len();
    fn rec(
        dims: &[usize],
        base: &[i64],
        ring: i64,
        k: usize,
        on_boundary: bool,
        cell: &mut [i64],
        f: &mut impl FnMut(&[i64]),
    ) {
        let d = dims.len();
        if k == d {
            if on_boundary || ring == 0 {
                f(cell);
            }
            return;
        }
        let lo = (base[k] - ring).max(0);
        let hi = (base[k] + ring).min(dims[k] as i64 - 1);
        for v in lo..=hi {
            cell[k] = v;
            let at_edge = (v - base[k]).abs() == ring;
            rec(dims, base, ring, k + 1, on_boundary || at_edge, cell, f);
        }
    }
    rec(dims, base, ring, 0, false, cell, &mut *f);
    let _ = d;
}

/// Capacity of a lifted voxel component (a union of cubes in `R^d`).
/// The caller is responsible for lifting only non-wrapping components.
pub fn cap_voxelset(
    d: Dim,
    cells: &[i64],
    h: f64,
    walkers: usize,
    seed: u64,
) -> Result<CapacityEstimate, CapacityError> {
    if cells.is_empty() {
        return Ok(CapacityEstimate {
            value: 0.0,
            stderr: 0.0,
            method: Method::Analytic,
            samples: 0,
            censored: 0,
        });
    }
    let oracle = VoxelOracle::new(d.usize(), cells, h)?;
    let r0 = 1.5 * oracle.bounding_radius();
    let eps = 0.5 * (d.f64()).sqrt() * h;
    let params = WosParams {
        enclose_radius: r0,
        walkers,
        epsilon_shell: Some(eps),
        max_steps: 100_000,
    };
    cap_from_sphere_launch(&oracle, d, &params, eps, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn d3() -> Dim {
        Dim::new(3).unwrap()
    }

    #[test]
    fn unit_ball_capacity_recovered() {
        let shape = ShapeSpec::ball_at_origin(3, 1.0).unwrap();
        let params = WosParams::new(2.0, 15_000);
        let est = cap_wos(&shape, d3(), &params, 11).unwrap();
        let want = 2.0 * PI;
        assert!(
            (est.value - want).abs() < 3.5 * est.stderr.max(0.02),
            "value {} vs {want} (sigma {})",
            est.value,
            est.stderr
        );
    }

    #[test]
    fn shape_must_fit_in_the_enclosure() {
        let shape = ShapeSpec::ball_at_origin(3, 1.0).unwrap();
        let params = WosParams::new(0.9, 100);
        assert!(matches!(
            cap_wos(&shape, d3(), &params, 1),
            Err(CapacityError::ShapeOutsideEnclosure { .. })
        ));
    }

    #[test]
    fn censoring_gate_fires() {
        let shape = ShapeSpec::ball_at_origin(3, 1.0).unwrap();
        let mut params = WosParams::new(2.0, 200);
        params.max_steps = 1;
        assert!(matches!(
            cap_wos(&shape, d3(), &params, 1),
            Err(CapacityError::TooManyCensored { .. })
        ));
    }

    #[test]
    fn ball_hit_probability_is_inverse_distance() {
        // For the unit ball in d=3, P_x(hit) = 1/s exactly.
        let shape = ShapeSpec::ball_at_origin(3, 1.0).unwrap();
        let rows = hitting_decay_check(&shape, d3(), &[1.5, 2.5, 4.0], 20_000, 3).unwrap();
        for row in &rows {
            let want = 1.0 / row.distance;
            assert!(
                (row.hit_probability - want).abs() < 4.0 * row.stderr.max(1e-4),
                "s={}: p={} vs {want}",
                row.distance,
                row.hit_probability
            );
            // s^{d-2} p stabilises at Cap/kappa_d = 1.
            assert!((row.scaled - 1.0).abs() < (0.015f64).max(3.5 * row.scaled_stderr));
        }
    }

    #[test]
    fn voxel_ball_capacity() {
        // Ball of radius 0.1 rasterized at spacing 1/256.
        let h: f64 = 1.0 / 256.0;
        let r: f64 = 0.1;
        let rc = (r / h).ceil() as i64 + 1;
        let mut cells = Vec::new();
        for x in -rc..=rc {
            for y in -rc..=rc {
                for z in -rc..=rc {
                    let cx = (x as f64 + 0.5) * h;
                    let cy = (y as f64 + 0.5) * h;
                    let cz = (z as f64 + 0.5) * h;
                    if (cx * cx + cy * cy + cz * cz).sqrt() <= r {
                        cells.extend([x, y, z]);
                    }
                }
            }
        }
        let est = cap_voxelset(d3(), &cells, h, 10_000, 5).unwrap();
        let want = 2.0 * PI * r;
        assert!(
            (est.value - want).abs() < 0.05 * want,
            "voxel ball capacity {} vs {want}",
            est.value
        );
    }

    #[test]
    fn empty_component_capacity_is_zero() {
        let est = cap_voxelset(d3(), &[], 0.01, 100, 1).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn voxel_oracle_distances_are_safe_and_tight() {
        // Single cube [0,1]^3 scaled by h: distance from outside points.
        let h = 0.25;
        let oracle = VoxelOracle::new(3, &[0, 0, 0], h).unwrap();
        // Oracle frame centres the cube at the origin: its corners are at
        // +/- h/2.
        let exact = |x: &[f64]| -> f64 {
            let mut d2 = 0.0_f64;
            for &v in x {
                let g = (v.abs() - h / 2.0).max(0.0);
                d2 += g * g;
            }
            d2.sqrt()
        };
        let mut rng = crate::rng::StreamRng::new(3, 1);
        for _ in 0..2000 {
            let x = [
                rng.uniform_range(-1.0, 1.0),
                rng.uniform_range(-1.0, 1.0),
                rng.uniform_range(-1.0, 1.0),
            ];
            let got = DistanceOracle::distance(&oracle, &x);
            let want = exact(&x);
            // Never overestimates (safety) and is exact in the near field.
            assert!(got <= want + 1e-9, "overestimate at {x:?}: {got} > {want}");
            if want < 2.0 * h {
                assert!((got - want).abs() < 1e-9, "near field at {x:?}");
            }
        }
    }
}
