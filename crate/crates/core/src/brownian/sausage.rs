//! Rasterizing the Wiener sausage: a cell is occupied iff its centre lies
//! within `rho` of some sampled segment (capsule semantics along segments,
//! not just endpoints).
//!
//! The kernel marks the cells traversed by the polyline, takes the periodic
//! distance transform, classifies cells more than half a diagonal away from
//! the threshold on either side, and resolves the remaining shell cells by
//! exact point-to-segment distances in a second streaming pass.

use super::path::walk_segments;
use super::{BrownianError, SimConfig};
use crate::torus::{squared_cell_distances, wrap_unit, wrapped_delta, GridSpec, VoxelSet};

/// Marks the cell containing a point.
pub(crate) fn mark_cell_of(marks: &mut VoxelSet, pos: &[f64], idx: &mut [i64]) {
    let n = marks.grid().n();
    let d = pos.len();
    for k in 0..d {
        idx[k] = (pos[k] * n as f64).floor() as i64;
    }
    let mut lin = 0usize;
    for k in (0..d).rev() {
        lin = lin * n + idx[k].rem_euclid(n as i64) as usize;
    }
    marks.set(lin, true);
}

/// Supercover traversal of one segment in unwrapped cell coordinates,
/// marking wrapped cells.
pub(crate) fn mark_segment_pub(
    marks: &mut VoxelSet,
    from: &[f64],
    to: &[f64],
    n: usize,
    idx: &mut [i64],
) {
    mark_segment(marks, from, to, n, idx)
}

fn mark_segment(marks: &mut VoxelSet, from: &[f64], to: &[f64], n: usize, idx: &mut [i64]) {
    let d = from.len();
    let nf = n as f64;
    for k in 0..d {
        idx[k] = (from[k] * nf).floor() as i64;
    }
    let mut t_max = vec![f64::INFINITY; d];
    let mut t_delta = vec![f64::INFINITY; d];
    let mut step = vec![0i64; d];
    let mut end = vec![0i64; d];
    for k in 0..d {
        let a = from[k] * nf;
        let b = to[k] * nf;
        end[k] = b.floor() as i64;
        let dir = b - a;
        if dir > 0.0 {
            step[k] = 1;
            t_max[k] = ((idx[k] + 1) as f64 - a) / dir;
            t_delta[k] = 1.0 / dir;
        } else if dir < 0.0 {
            step[k] = -1;
            t_max[k] = (idx[k] as f64 - a) / dir;
            t_delta[k] = -1.0 / dir;
        }
    }
    loop {
        let mut lin = 0usize;
        for k in (0..d).rev() {
            lin = lin * n + idx[k].rem_euclid(n as i64) as usize;
        }
        marks.set(lin, true);
        if idx == end {
            return;
        }
        let mut axis = 0;
        for k in 1..d {
            if t_max[k] < t_max[axis] {
                axis = k;
            }
        }
        if !t_max[axis].is_finite() {
            return;
        }
        idx[axis] += step[axis];
        t_max[axis] += t_delta[axis];
    }
}

struct ShellCell {
    lin: usize,
    centre: Vec<f64>,
    confirmed: bool,
}

/// Exact squared distance from a point to a segment, all in the local frame
/// of the segment midpoint.
fn point_segment_dist2(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let d = p.len();
    let mut ab2 = 0.0;
    let mut dot = 0.0;
    for k in 0..d {
        let e = b[k] - a[k];
        ab2 += e * e;
        dot += (p[k] - a[k]) * e;
    }
    let t = if ab2 > 0.0 {
        (dot / ab2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut d2 = 0.0;
    for k in 0..d {
        let q = a[k] + t * (b[k] - a[k]);
        d2 += (p[k] - q) * (p[k] - q);
    }
    d2
}

fn rasterize_segments(
    grid: GridSpec,
    rho: f64,
    stream: impl Fn(&mut dyn FnMut(&[f64], &[f64]) -> bool),
) -> Result<VoxelSet, BrownianError> {
    let d = grid.d();
    let n = grid.n();
    let mut marks = VoxelSet::empty(grid.clone());
    let mut idx = vec![0i64; d];
    stream(&mut |from, to| {
        mark_segment(&mut marks, from, to, n, &mut idx);
        true
    });
    if rho == 0.0 {
        return Ok(marks);
    }

    let h = 1.0 / n as f64;
    let sqrt_d = (d as f64).sqrt();
    let sq = squared_cell_distances(&marks)?;
    let rn = rho * n as f64;
    let certain = (rn - sqrt_d / 2.0).max(0.0).powi(2);
    let outer = (rn + sqrt_d / 2.0).powi(2);

    let mut out = VoxelSet::empty(grid.clone());
    let mut shell: Vec<ShellCell> = Vec::new();
    let mut cidx = vec![0usize; d];
    for (lin, &s) in sq.iter().enumerate() {
        let sf = s as f64;
        if sf <= certain {
            out.set(lin, true);
        } else if sf <= outer {
            grid.unlinear(lin, &mut cidx);
            let centre: Vec<f64> = cidx
                .iter()
                .zip(grid.offset())
                .map(|(&i, &o)| wrap_unit(o + i as f64 * h))
                .collect();
            shell.push(ShellCell {
                lin,
                centre,
                confirmed: false,
            });
        }
    }

    if !shell.is_empty() {
        // Bucket shell cells on a coarse grid; a segment can only decide
        // cells whose centre lies within rho of it, so it visits the buckets
        // overlapped by its bounding box inflated by rho.
        let nb = ((1.0 / (rho + sqrt_d * h)).floor() as usize).clamp(2, 256);
        let bucket_of = |x: &[f64]| -> usize {
            let mut lin = 0usize;
            for k in (0..d).rev() {
                let b = ((x[k] * nb as f64).floor() as i64).rem_euclid(nb as i64) as usize;
                lin = lin * nb + b;
            }
            lin
        };
        let mut buckets: std::collections::HashMap<usize, Vec<u32>> =
            std::collections::HashMap::new();
        for (i, cell) in shell.iter().enumerate() {
            buckets.entry(bucket_of(&cell.centre)).or_default().push(i as u32);
        }
        let mut remaining = shell.len();
        let mut rel_a = vec![0.0; d];
        let mut rel_b = vec![0.0; d];
        let mut rel_c = vec![0.0; d];
        let mut bco = vec![0i64; d];
        let rho2 = rho * rho;
        let reach = rho + sqrt_d * h / 2.0;
        stream(&mut |from, to| {
            // Bucket ranges covered by the inflated segment box.
            let mut lo = vec![0i64; d];
            let mut hi = vec![0i64; d];
            for k in 0..d {
                let a = from[k].min(to[k]) - reach;
                let b = from[k].max(to[k]) + reach;
                lo[k] = (a * nb as f64).floor() as i64;
                hi[k] = (b * nb as f64).floor() as i64;
                if hi[k] - lo[k] >= nb as i64 {
                    lo[k] = 0;
                    hi[k] = nb as i64 - 1;
                }
            }
            let mid: Vec<f64> = from.iter().zip(to).map(|(&a, &b)| 0.5 * (a + b)).collect();
            for k in 0..d {
                rel_a[k] = from[k] - mid[k];
                rel_b[k] = to[k] - mid[k];
            }
            bco.copy_from_slice(&lo);
            'boxes: loop {
                let mut blin = 0usize;
                for k in (0..d).rev() {
                    blin = blin * nb + bco[k].rem_euclid(nb as i64) as usize;
                }
                if let Some(ids) = buckets.get(&blin) {
                    for &id in ids {
                        let cell = &mut shell[id as usize];
                        if cell.confirmed {
                            continue;
                        }
                        for k in 0..d {
                            rel_c[k] = wrapped_delta(cell.centre[k], wrap_unit(mid[k]));
                        }
                        if point_segment_dist2(&rel_c, &rel_a, &rel_b) <= rho2 {
                            cell.confirmed = true;
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
        for cell in &shell {
            if cell.confirmed {
                out.set(cell.lin, true);
            }
        }
    }
    out.coarse_warning = h > rho / 2.0;
    Ok(out)
}

/// Rasterizes the sausage of the configured run by streaming its segments.
pub fn rasterize_sausage(cfg: &SimConfig) -> Result<VoxelSet, BrownianError> {
    let grid = cfg.grid()?;
    rasterize_segments(grid, cfg.rho, |visit| {
        walk_segments(cfg, |seg| visit(seg.from, seg.to));
    })
}

/// Rasterizes the sausage of an explicit polyline (wrapped samples, stride
/// `d`); consecutive samples are joined by their minimal-image segment.
pub fn rasterize_polyline_sausage(
    d: usize,
    samples: &[f64],
    rho: f64,
    grid: GridSpec,
) -> Result<VoxelSet, BrownianError> {
    if rho < 0.0 {
        return Err(BrownianError::BadRadius(rho));
    }
    assert_eq!(grid.d(), d);
    assert_eq!(samples.len() % d, 0);
    let count = samples.len() / d;
    rasterize_segments(grid, rho, |visit| {
        if count == 0 {
            return;
        }
        // Unwrap incrementally so each segment takes the shortest image.
        let mut from: Vec<f64> = samples[0..d].to_vec();
        let mut to = vec![0.0; d];
        if count == 1 {
            visit(&from, &from);
            return;
        }
        for i in 1..count {
            for k in 0..d {
                let delta = wrapped_delta(samples[i * d + k], wrap_unit(from[k]));
                to[k] = from[k] + delta;
            }
            if !visit(&from, &to) {
                return;
            }
            from.copy_from_slice(&to);
        }
    })
}
