//! Lattice animals: connected finite unions of closed unit cubes with
//! integer centres. Cubes are adjacent when their centres are at
//! l-infinity distance 1 (corner-touching closed cubes share a point, so
//! the union is connected exactly when the centre graph is).
//!
//! Animals are the discretization currency: a bounded connected set `E` is
//! sandwiched as `E <= E(A) <= E_{rho/phi}` by [`approximate_set`], where
//! `E(A)` is the rescaling of the animal by `1/(n phi)`.

use crate::torus::{ShapeSpec, TorusError};
use std::collections::HashMap;
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnimalError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("max cube count must be at least 1")]
    ZeroCubes,
    #[error("enumeration of {requested} cubes exceeds the budget of {budget} animals; partial enumeration refused")]
    BudgetExceeded { requested: usize, budget: usize },
    #[error("approximation needs rho * n >= 2 sqrt(d); with rho = {rho} use n >= {required}")]
    GridTooCoarseForSandwich { rho: f64, required: usize },
    #[error("scale factors must be positive")]
    BadScale,
    #[error("approximated set is not connected; the input set must be connected")]
    Disconnected,
    #[error("geometry: {0}")]
    Torus(#[from] TorusError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad animal file: {0}")]
    BadFormat(String),
}

/// A lattice animal: the set of integer cube centres, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeAnimal {
    d: usize,
    /// Flattened centres, `d` coordinates per cube, lexicographically sorted.
    centres: Vec<i64>,
}

impl LatticeAnimal {
    pub fn new(d: usize, mut centres: Vec<i64>) -> Result<Self, AnimalError> {
        if d < 2 {
            return Err(AnimalError::DimensionTooSmall(d));
        }
        if centres.is_empty() || centres.len() % d != 0 {
            return Err(AnimalError::BadFormat(
                "centre list empty or not a multiple of d".into(),
            ));
        }
        sort_cells(d, &mut centres);
        let a = LatticeAnimal { d, centres };
        if !a.is_connected() {
            return Err(AnimalError::Disconnected);
        }
        Ok(a)
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn cube_count(&self) -> usize {
        self.centres.len() / self.d
    }

    pub fn centres(&self) -> impl Iterator<Item = &[i64]> + '_ {
        self.centres.chunks_exact(self.d)
    }

    pub fn contains_origin(&self) -> bool {
        self.centres().any(|c| c.iter().all(|&x| x == 0))
    }

    pub fn contains_cell(&self, cell: &[i64]) -> bool {
        self.centres().any(|c| c == cell)
    }

    /// Connectivity of the centre graph under l-infinity adjacency.
    pub fn is_connected(&self) -> bool {
        let count = self.cube_count();
        if count <= 1 {
            return true;
        }
        let index: HashMap<&[i64], usize> =
            self.centres().enumerate().map(|(i, c)| (c, i)).collect();
        let mut seen = vec![false; count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reached = 1;
        let mut nb = vec![0i64; self.d];
        while let Some(i) = stack.pop() {
            let cell: Vec<i64> = self.centres[i * self.d..(i + 1) * self.d].to_vec();
            for_each_linf_neighbor(&cell, &mut nb, &mut |nb| {
                if let Some(&j) = index.get(nb) {
                    if !seen[j] {
                        seen[j] = true;
                        reached += 1;
                        stack.push(j);
                    }
                }
            });
        }
        reached == count
    }

    pub fn bounding_box(&self) -> (Vec<i64>, Vec<i64>) {
        let mut min = vec![i64::MAX; self.d];
        let mut max = vec![i64::MIN; self.d];
        for c in self.centres() {
            for k in 0..self.d {
                min[k] = min[k].min(c[k]);
                max[k] = max[k].max(c[k]);
            }
        }
        (min, max)
    }

    /// Does the rescaled animal `(1/scale) A` contain the point `x`? The
    /// animal is a union of closed unit cubes `[c - 1/2, c + 1/2]`.
    pub fn rescaled_contains(&self, scale: f64, x: &[f64]) -> bool {
        let mut cell = vec![0i64; self.d];
        for (k, &xi) in x.iter().enumerate() {
            cell[k] = (xi * scale).round() as i64;
        }
        // Points on a cube face belong to the closed cubes on both sides;
        // the rounded cell is one of them.
        self.contains_cell(&cell)
            || self.centres().any(|c| {
                c.iter()
                    .zip(x)
                    .all(|(&ci, &xi)| (xi * scale - ci as f64).abs() <= 0.5 + 1e-12)
            })
    }

    /// Cubes of the rescaled set `(1/scale) A`: (low corner, side).
    pub fn rescaled_cubes(&self, scale: f64) -> Vec<(Vec<f64>, f64)> {
        let side = 1.0 / scale;
        self.centres()
            .map(|c| {
                (
                    c.iter().map(|&ci| (ci as f64 - 0.5) * side).collect(),
                    side,
                )
            })
            .collect()
    }
}

fn sort_cells(d: usize, centres: &mut Vec<i64>) {
    let mut cells: Vec<Vec<i64>> = centres.chunks_exact(d).map(|c| c.to_vec()).collect();
    cells.sort();
    cells.dedup();
    centres.clear();
    for c in cells {
        centres.extend(c);
    }
}

fn for_each_linf_neighbor(cell: &[i64], scratch: &mut [i64], f: &mut impl FnMut(&[i64])) {
    let d = cell.len();
    let total = 3usize.pow(d as u32);
    for code in 0..total {
        let mut rem = code;
        let mut all_zero = true;
        for k in 0..d {
            let o = (rem % 3) as i64 - 1;
            rem /= 3;
            scratch[k] = cell[k] + o;
            all_zero &= o == 0;
        }
        if !all_zero {
            f(scratch);
        }
    }
}

/// All lattice animals that contain the origin cube and consist of at most
/// `max_cubes` cubes, one representative per animal (translates are distinct
/// sets, fixed by the origin-cube constraint). Returned sorted by size, then
/// lexicographically.
///
/// Refuses (rather than truncates) when the enumeration would exceed
/// `budget` animals.
pub fn enumerate_animals(
    d: usize,
    max_cubes: usize,
    budget: usize,
) -> Result<Vec<LatticeAnimal>, AnimalError> {
    if d < 2 {
        return Err(AnimalError::DimensionTooSmall(d));
    }
    if max_cubes == 0 {
        return Err(AnimalError::ZeroCubes);
    }
    // Dense "seen" grid over the reachable box [-Q, Q]^d.
    let side = 2 * max_cubes + 1;
    let total = side.pow(d as u32);
    let mut seen = vec![false; total];
    let to_lin = |cell: &[i64]| -> usize {
        let mut lin = 0usize;
        for &x in cell.iter().rev() {
            lin = lin * side + (x + max_cubes as i64) as usize;
        }
        lin
    };

    let origin = vec![0i64; d];
    seen[to_lin(&origin)] = true;
    let mut first_ext = Vec::new();
    let mut nb = vec![0i64; d];
    for_each_linf_neighbor(&origin, &mut nb, &mut |nbcell| {
        first_ext.push(nbcell.to_vec());
        seen[to_lin(nbcell)] = true;
    });

    let mut out: Vec<Vec<Vec<i64>>> = Vec::new();
    let mut current = vec![origin.clone()];
    out.push(current.clone());
    if out.len() > budget {
        return Err(AnimalError::BudgetExceeded {
            requested: max_cubes,
            budget,
        });
    }

    // Binary branch on the head candidate: include it (extending the
    // frontier with its unseen neighbours) or forbid it for the rest of the
    // subtree. Each connected superset of the origin cube appears on exactly
    // one root-to-node path.
    struct Ctx {
        d: usize,
        max_cubes: usize,
        budget: usize,
        side: usize,
    }
    fn rec(
        ctx: &Ctx,
        current: &mut Vec<Vec<i64>>,
        ext: &[Vec<i64>],
        seen: &mut [bool],
        out: &mut Vec<Vec<Vec<i64>>>,
    ) -> Result<(), AnimalError> {
        if ext.is_empty() || current.len() >= ctx.max_cubes {
            return Ok(());
        }
        let head = ext[0].clone();
        // Include.
        current.push(head.clone());
        out.push(current.clone());
        if out.len() > ctx.budget {
            return Err(AnimalError::BudgetExceeded {
                requested: ctx.max_cubes,
                budget: ctx.budget,
            });
        }
        if current.len() < ctx.max_cubes {
            let mut newext: Vec<Vec<i64>> = ext[1..].to_vec();
            let mut added = Vec::new();
            let mut nb = vec![0i64; ctx.d];
            let side = ctx.side;
            let to_lin = |cell: &[i64]| -> usize {
                let mut lin = 0usize;
                for &x in cell.iter().rev() {
                    lin = lin * side + (x + (side as i64 - 1) / 2) as usize;
                }
                lin
            };
            for_each_linf_neighbor(&head, &mut nb, &mut |nbcell| {
                let lin = to_lin(nbcell);
                if !seen[lin] {
                    seen[lin] = true;
                    added.push(lin);
                    newext.push(nbcell.to_vec());
                }
            });
            rec(ctx, current, &newext, seen, out)?;
            for lin in added {
                seen[lin] = false;
            }
        }
        current.pop();
        // Exclude: head stays seen (forbidden) for this subtree.
        rec(ctx, current, &ext[1..], seen, out)
    }

    let ctx = Ctx {
        d,
        max_cubes,
        budget,
        side,
    };
    rec(&ctx, &mut current, &first_ext, &mut seen, &mut out)?;

    let mut animals: Vec<LatticeAnimal> = out
        .into_iter()
        .map(|cells| {
            let mut flat = Vec::with_capacity(cells.len() * d);
            for c in cells {
                flat.extend(c);
            }
            sort_cells(d, &mut flat);
            LatticeAnimal { d, centres: flat }
        })
        .collect();
    animals.sort_by(|a, b| {
        a.cube_count()
            .cmp(&b.cube_count())
            .then_with(|| a.centres.cmp(&b.centres))
    });
    Ok(animals)
}

/// Counts per size (index q-1 holds the number of animals with exactly q
/// cubes).
pub fn counts_by_size(animals: &[LatticeAnimal], max_cubes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; max_cubes];
    for a in animals {
        counts[a.cube_count() - 1] += 1;
    }
    counts
}

/// The growth-bound constant: max over Q of `log(cumulative count of
/// animals up to Q cubes) / Q`. Finiteness of this constant is the
/// exponential growth bound for the animal counts.
pub fn growth_bound_check(counts: &[usize]) -> f64 {
    let mut cumulative = 0usize;
    let mut best: f64 = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        cumulative += c;
        let q = (i + 1) as f64;
        best = best.max((cumulative as f64).ln() / q);
    }
    best
}

/// The sandwich approximation: the animal of all unit cubes meeting
/// `n phi E_{rho/(4 phi)}`, which satisfies `E <= E(A) <= E_{rho/phi}` with
/// `E(A) = (1/(n phi)) A`, provided `rho n >= 2 sqrt(d)`.
pub fn approximate_set(
    shape: &ShapeSpec,
    n: usize,
    phi: f64,
    rho: f64,
) -> Result<LatticeAnimal, AnimalError> {
    let d = shape.d();
    if !(phi > 0.0) || !(rho > 0.0) || n == 0 {
        return Err(AnimalError::BadScale);
    }
    let needed = 2.0 * (d as f64).sqrt();
    if (rho * n as f64) < needed - 1e-12 {
        return Err(AnimalError::GridTooCoarseForSandwich {
            rho,
            required: (needed / rho).ceil() as usize,
        });
    }
    // A cube [z - 1/2, z + 1/2] meets n phi E_{rho/(4 phi)} exactly when its
    // preimage cube in E-coordinates lies within rho/(4 phi) of E. The cube
    // test is analytic per primitive; no sampling.
    let scale = n as f64 * phi;
    let margin = rho / (4.0 * phi);
    let (mut bmin, mut bmax) = shape.bounding_box();
    for k in 0..d {
        bmin[k] = bmin[k] * scale - (margin * scale + 1.0);
        bmax[k] = bmax[k] * scale + (margin * scale + 1.0);
    }
    let lo: Vec<i64> = bmin.iter().map(|&x| x.floor() as i64).collect();
    let hi: Vec<i64> = bmax.iter().map(|&x| x.ceil() as i64).collect();
    let side = 1.0 / scale;
    let mut centres = Vec::new();
    let mut idx = lo.clone();
    let mut corner = vec![0.0f64; d];
    'outer: loop {
        for k in 0..d {
            corner[k] = (idx[k] as f64 - 0.5) * side;
        }
        if shape.distance_to_cube(&corner, side) <= margin + 1e-12 {
            centres.extend_from_slice(&idx);
        }
        // Odometer increment over the candidate box.
        for k in 0..d {
            idx[k] += 1;
            if idx[k] <= hi[k] {
                continue 'outer;
            }
            idx[k] = lo[k];
        }
        break;
    }
    if centres.is_empty() {
        return Err(AnimalError::BadFormat(
            "shape produced no cubes; is it empty?".into(),
        ));
    }
    // Connectivity of A is guaranteed for connected E; a disconnect here
    // means the input violated the precondition.
    LatticeAnimal::new(d, centres)
}

/// Adjoins every bounded component of the complement, producing an animal
/// whose complement is connected.
pub fn fill_holes(animal: &LatticeAnimal) -> LatticeAnimal {
    let d = animal.d();
    let (min, max) = animal.bounding_box();
    // One-cell margin: the outside region is connected through it.
    let dims: Vec<usize> = (0..d)
        .map(|k| (max[k] - min[k]) as usize + 3)
        .collect();
    let total: usize = dims.iter().product();
    let mut strides = vec![1usize; d];
    for k in 1..d {
        strides[k] = strides[k - 1] * dims[k - 1];
    }
    let to_lin = |cell: &[i64]| -> usize {
        let mut lin = 0;
        for k in 0..d {
            lin += ((cell[k] - min[k]) as usize + 1) * strides[k];
        }
        lin
    };
    let mut occ = vec![false; total];
    for c in animal.centres() {
        occ[to_lin(c)] = true;
    }
    // Flood the complement from the box corner under face adjacency (the
    // complement of a closed cube union connects only through faces).
    let mut outside = vec![false; total];
    let mut stack = vec![0usize];
    outside[0] = true;
    while let Some(cur) = stack.pop() {
        let mut rem = cur;
        for k in 0..d {
            let ik = rem % dims[k];
            rem /= dims[k];
            for nb in [
                (ik > 0).then(|| cur - strides[k]),
                (ik + 1 < dims[k]).then(|| cur + strides[k]),
            ]
            .into_iter()
            .flatten()
            {
                if !outside[nb] && !occ[nb] {
                    outside[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }
    let mut centres = Vec::new();
    let mut idx = vec![0usize; d];
    for lin in 0..total {
        if occ[lin] || !outside[lin] {
            let mut rem = lin;
            for (k, slot) in idx.iter_mut().enumerate() {
                *slot = rem % dims[k];
                rem /= dims[k];
            }
            for k in 0..d {
                centres.push(idx[k] as i64 - 1 + min[k]);
            }
        }
    }
    LatticeAnimal::new(d, centres).expect("filling holes preserves connectivity")
}

/// One line per animal, centres as comma-separated integer tuples divided by
/// spaces, e.g. `0,0 1,0 1,1`.
pub fn write_animals(w: &mut impl Write, animals: &[LatticeAnimal]) -> Result<(), AnimalError> {
    for a in animals {
        let line: Vec<String> = a
            .centres()
            .map(|c| {
                c.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_animals(r: &mut impl BufRead, d: usize) -> Result<Vec<LatticeAnimal>, AnimalError> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut centres = Vec::new();
        for tuple in line.split_whitespace() {
            let coords: Result<Vec<i64>, _> = tuple.split(',').map(|t| t.parse()).collect();
            let coords = coords.map_err(|e| AnimalError::BadFormat(format!("{e}")))?;
            if coords.len() != d {
                return Err(AnimalError::BadFormat(format!(
                    "tuple {tuple} has {} coordinates, wanted {d}",
                    coords.len()
                )));
            }
            centres.extend(coords);
        }
        out.push(LatticeAnimal::new(d, centres)?);
    }
    Ok(out)
}
