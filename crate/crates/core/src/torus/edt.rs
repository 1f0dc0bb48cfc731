//! Exact Euclidean distance transform with periodic boundaries.
//!
//! Per-axis lower-envelope sweeps over squared distances in integer cell
//! units. Periodicity is handled by letting each sweep see every source
//! twice, at extended positions `[-n, n)`: the true wrapped offset along an
//! axis never exceeds `n/2`, so the doubled window loses nothing and the
//! result is exact.

use super::{TorusError, VoxelSet};
use rayon::prelude::*;

const INF: i64 = i64::MAX / 4;

/// Squared distance, in cell units, from every cell centre to the nearest
/// occupied cell centre, with wrap on all axes.
pub fn squared_cell_distances(v: &VoxelSet) -> Result<Vec<i64>, TorusError> {
    if v.is_empty_set() {
        return Err(TorusError::EmptySet);
    }
    let n = v.grid().n();
    let d = v.grid().d();
    let cells = v.grid().cell_count();

    let mut field: Vec<i64> = (0..cells).map(|i| if v.get(i) { 0 } else { INF }).collect();
    let mut next: Vec<i64> = vec![0; cells];

    for axis in 0..d {
        let stride = n.pow(axis as u32);
        let rows = cells / n;
        {
            let src = &field;
            let dst = SyncWriter::new(&mut next);
            (0..rows).into_par_iter().for_each_init(
                || Scratch::new(n),
                |scratch, row| {
                    // Row `row` decomposes as hi * stride + lo; its cells sit
                    // at base + j * stride. Distinct rows touch disjoint
                    // index sets, which is what makes the parallel writes
                    // sound.
                    let hi = row / stride;
                    let lo = row % stride;
                    let base = hi * stride * n + lo;
                    for j in 0..n {
                        scratch.f[j] = src[base + j * stride];
                    }
                    envelope_periodic(&scratch.f, &mut scratch.g, &mut scratch.hull);
                    for j in 0..n {
                        // Safety: (base, stride) index sets are pairwise
                        // disjoint across rows of this axis.
                        unsafe { dst.write(base + j * stride, scratch.g[j]) };
                    }
                },
            );
        }
        std::mem::swap(&mut field, &mut next);
    }
    Ok(field)
}

/// Distance, in torus units, from every cell centre to the nearest occupied
/// cell centre. Errors on an empty set: there are no sites to measure from.
pub fn distance_transform(v: &VoxelSet) -> Result<Vec<f64>, TorusError> {
    let inv = 1.0 / v.grid().n() as f64;
    Ok(squared_cell_distances(v)?
        .into_iter()
        .map(|s| (s as f64).sqrt() * inv)
        .collect())
}

/// Minkowski enlargement `E_r` on the raster: a cell joins the result when
/// its centre is within `r` of an occupied centre. `r = 0` is the identity;
/// an empty set stays empty.
pub fn enlarge_voxels(v: &VoxelSet, r: f64) -> Result<VoxelSet, TorusError> {
    if r < 0.0 {
        return Err(TorusError::NegativeRadius(r));
    }
    if v.is_empty_set() || r == 0.0 {
        return Ok(v.clone());
    }
    let sq = squared_cell_distances(v)?;
    let rn2 = (r * v.grid().n() as f64).powi(2);
    let mut out = VoxelSet::empty(v.grid().clone());
    for (lin, &s) in sq.iter().enumerate() {
        if (s as f64) <= rn2 {
            out.set(lin, true);
        }
    }
    out.coarse_warning = v.coarse_warning;
    Ok(out)
}

/// Shrinking `E_{-r} = [ (E^c)_r ]^c` on the raster.
pub fn shrink_voxels(v: &VoxelSet, r: f64) -> Result<VoxelSet, TorusError> {
    if r < 0.0 {
        return Err(TorusError::NegativeRadius(r));
    }
    let comp = v.complement();
    if comp.is_empty_set() {
        // Shrinking the full torus leaves the full torus.
        return Ok(v.clone());
    }
    Ok(enlarge_voxels(&comp, r)?.complement())
}

struct Scratch {
    f: Vec<i64>,
    g: Vec<i64>,
    hull: Hull,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            f: vec![0; n],
            g: vec![0; n],
            hull: Hull {
                pos: Vec::with_capacity(2 * n),
                val: Vec::with_capacity(2 * n),
                cut: Vec::with_capacity(2 * n),
            },
        }
    }
}

struct Hull {
    pos: Vec<i64>,
    val: Vec<i64>,
    cut: Vec<f64>,
}

/// One periodic lower-envelope sweep: `g[j] = min_i (j-i)^2 + f[i mod n]`
/// with the parabola sites `i` ranging over `[-n/2-1, n+n/2]`. A wrapped
/// offset never exceeds `n/2`, so every target `j` in `[0,n)` sees a
/// representative of every source class inside that doubled window.
fn envelope_periodic(f: &[i64], g: &mut [i64], hull: &mut Hull) {
    let n = f.len() as i64;
    hull.pos.clear();
    hull.val.clear();
    hull.cut.clear();
    for q in (-n / 2 - 1)..=(n + n / 2) {
        let fq = f[(q.rem_euclid(n)) as usize];
        if fq >= INF {
            continue;
        }
        loop {
            match hull.pos.last() {
                None => {
                    hull.pos.push(q);
                    hull.val.push(fq);
                    hull.cut.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let fp = *hull.val.last().unwrap();
                    // Crossover of the parabolas rooted at p and q. Inputs
                    // are integers well inside f64's exact range.
                    let s = ((fq + q * q) - (fp + p * p)) as f64 / (2 * (q - p)) as f64;
                    if s <= *hull.cut.last().unwrap() {
                        hull.pos.pop();
                        hull.val.pop();
                        hull.cut.pop();
                    } else {
                        hull.pos.push(q);
                        hull.val.push(fq);
                        hull.cut.push(s);
                        break;
                    }
                }
            }
        }
    }
    if hull.pos.is_empty() {
        for slot in g.iter_mut() {
            *slot = INF;
        }
        return;
    }
    let mut k = 0;
    for (j, slot) in g.iter_mut().enumerate() {
        let jf = j as f64;
        while k + 1 < hull.pos.len() && hull.cut[k + 1] < jf {
            k += 1;
        }
        let dj = j as i64 - hull.pos[k];
        *slot = dj * dj + hull.val[k];
    }
}

/// Squared distances (cell units) to the nearest occupied cell inside a
/// plain dense box, no wrap. Same sweeps as the periodic transform with the
/// window restricted to the row. Used for lifted components.
pub(crate) fn box_squared_distances(dims: &[usize], occupied: &[bool]) -> Vec<i64> {
    let total: usize = dims.iter().product();
    debug_assert_eq!(occupied.len(), total);
    let mut field: Vec<i64> = occupied
        .iter()
        .map(|&o| if o { 0 } else { INF })
        .collect();
    let mut next = vec![0i64; total];
    for (axis, &n) in dims.iter().enumerate() {
        let stride: usize = dims[..axis].iter().product();
        let rows = total / n;
        {
            let src = &field;
            let dst = SyncWriter::new(&mut next);
            (0..rows).into_par_iter().for_each_init(
                || Scratch::new(n),
                |scratch, row| {
                    let hi = row / stride;
                    let lo = row % stride;
                    let base = hi * stride * n + lo;
                    for j in 0..n {
                        scratch.f[j] = src[base + j * stride];
                    }
                    envelope_linear(&scratch.f, &mut scratch.g, &mut scratch.hull);
                    for j in 0..n {
                        // Safety: rows write disjoint index sets.
                        unsafe { dst.write(base + j * stride, scratch.g[j]) };
                    }
                },
            );
        }
        std::mem::swap(&mut field, &mut next);
    }
    field
}

/// Non-periodic lower-envelope sweep: sources only in `[0, n)`.
fn envelope_linear(f: &[i64], g: &mut [i64], hull: &mut Hull) {
    let n = f.len() as i64;
    hull.pos.clear();
    hull.val.clear();
    hull.cut.clear();
    for q in 0..n {
        let fq = f[q as usize];
        if fq >= INF {
            continue;
        }
        loop {
            match hull.pos.last() {
                None => {
                    hull.pos.push(q);
                    hull.val.push(fq);
                    hull.cut.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let fp = *hull.val.last().unwrap();
                    let s = ((fq + q * q) - (fp + p * p)) as f64 / (2 * (q - p)) as f64;
                    if s <= *hull.cut.last().unwrap() {
                        hull.pos.pop();
                        hull.val.pop();
                        hull.cut.pop();
                    } else {
                        hull.pos.push(q);
                        hull.val.push(fq);
                        hull.cut.push(s);
                        break;
                    }
                }
            }
        }
    }
    if hull.pos.is_empty() {
        for slot in g.iter_mut() {
            *slot = INF;
        }
        return;
    }
    let mut k = 0;
    for (j, slot) in g.iter_mut().enumerate() {
        let jf = j as f64;
        while k + 1 < hull.pos.len() && hull.cut[k + 1] < jf {
            k += 1;
        }
        let dj = j as i64 - hull.pos[k];
        *slot = dj * dj + hull.val[k];
    }
}

/// Shared-slice wrapper for disjoint parallel row writes.
struct SyncWriter<T> {
    ptr: *mut T,
    len: usize,
}

unsafe impl<T: Send> Sync for SyncWriter<T> {}

impl<T> SyncWriter<T> {
    fn new(slice: &mut [T]) -> Self {
        SyncWriter {
            ptr: slice.as_mut_ptr(),
            len: slice.len(),
        }
    }

    /// Caller must guarantee no two concurrent writers use the same index.
    #[inline]
    unsafe fn write(&self, idx: usize, value: T) {
        debug_assert!(idx < self.len);
        unsafe { self.ptr.add(idx).write(value) };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{torus_dist, GridSpec, TorusPoint};
    use proptest::prelude::*;

    fn grid(d: usize, n: usize) -> GridSpec {
        GridSpec::new(d, n).unwrap()
    }

    /// O(cells^2) reference: wrapped squared cell distance by direct search.
    fn brute_force(v: &VoxelSet) -> Vec<i64> {
        let n = v.grid().n() as i64;
        let d = v.grid().d();
        let cells = v.grid().cell_count();
        let occ = v.occupied_cells();
        let mut idx = vec![0usize; d];
        let mut oidx = vec![0usize; d];
        (0..cells)
            .map(|lin| {
                v.grid().unlinear(lin, &mut idx);
                occ.iter()
                    .map(|&o| {
                        v.grid().unlinear(o, &mut oidx);
                        idx.iter()
                            .zip(&oidx)
                            .map(|(&a, &b)| {
                                let mut dx = (a as i64 - b as i64).rem_euclid(n);
                                if dx > n / 2 {
                                    dx = n - dx;
                                }
                                dx * dx
                            })
                            .sum::<i64>()
                    })
                    .min()
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn all_occupied_is_zero() {
        let v = VoxelSet::full(grid(3, 4));
        let sq = squared_cell_distances(&v).unwrap();
        assert!(sq.iter().all(|&s| s == 0));
    }

    #[test]
    fn empty_set_is_an_error() {
        let v = VoxelSet::empty(grid(2, 4));
        assert!(matches!(
            squared_cell_distances(&v),
            Err(TorusError::EmptySet)
        ));
        assert!(distance_transform(&v).is_err());
    }

    #[test]
    fn single_cell_wraps() {
        // One occupied cell at (0,0) on an 8x8 torus: the farthest centre is
        // (4,4) at wrapped offset (4,4), i.e. distance sqrt(32)/8 = 0.7071.
        let g = grid(2, 8);
        let mut v = VoxelSet::empty(g.clone());
        v.set(g.linear(&[0, 0]), true);
        let dist = distance_transform(&v).unwrap();
        let at = dist[g.linear(&[4, 4])];
        assert!((at - 32.0_f64.sqrt() / 8.0).abs() < 1e-12);
        let max = dist.iter().cloned().fold(0.0, f64::max);
        assert!((max - 0.7071067811865476).abs() < 1e-12);
    }

    #[test]
    fn two_antipodal_cells_shrink_the_max() {
        // Adding the antipodal cell (4,4) moves the farthest point to e.g.
        // (0,4), equidistant from both sites at 4 cells: max drops from
        // sqrt(32)/8 to 4/8, a factor 1/sqrt(2). (Brute force agrees.)
        let g = grid(2, 8);
        let mut one = VoxelSet::empty(g.clone());
        one.set(g.linear(&[0, 0]), true);
        let mut two = one.clone();
        two.set(g.linear(&[4, 4]), true);
        let max1 = distance_transform(&one)
            .unwrap()
            .into_iter()
            .fold(0.0, f64::max);
        let max2 = distance_transform(&two)
            .unwrap()
            .into_iter()
            .fold(0.0, f64::max);
        assert!((max2 - 0.5).abs() < 1e-12);
        assert!((max2 - max1 / 2.0_f64.sqrt()).abs() < 1e-12);
        let sq = squared_cell_distances(&two).unwrap();
        assert_eq!(sq, brute_force(&two));
    }

    #[test]
    fn matches_brute_force_on_small_grids() {
        // Deterministic pseudo-random fixtures across d = 2, 3 and n <= 16.
        let mut state = 0x243F6A8885A308D3u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for d in [2usize, 3] {
            for n in [3usize, 5, 8, 16] {
                if d == 3 && n == 16 {
                    continue; // 4096 cells is plenty; keep the suite quick
                }
                let g = grid(d, n);
                let mut v = VoxelSet::empty(g);
                for lin in 0..v.len() {
                    if next() % 11 == 0 {
                        v.set(lin, true);
                    }
                }
                if v.is_empty_set() {
                    v.set(0, true);
                }
                assert_eq!(
                    squared_cell_distances(&v).unwrap(),
                    brute_force(&v),
                    "mismatch at d={d} n={n}"
                );
            }
        }
    }

    #[test]
    fn box_distances_match_direct_search() {
        let dims = [5usize, 4, 3];
        let total: usize = dims.iter().product();
        let mut occ = vec![false; total];
        for lin in [0usize, 17, 33, 59] {
            occ[lin] = true;
        }
        let got = box_squared_distances(&dims, &occ);
        let unpack = |mut lin: usize| {
            let mut c = [0i64; 3];
            for k in 0..3 {
                c[k] = (lin % dims[k]) as i64;
                lin /= dims[k];
            }
            c
        };
        let sites: Vec<[i64; 3]> = [0usize, 17, 33, 59].iter().map(|&l| unpack(l)).collect();
        for lin in 0..total {
            let c = unpack(lin);
            let want = sites
                .iter()
                .map(|s| (0..3).map(|k| (c[k] - s[k]) * (c[k] - s[k])).sum::<i64>())
                .min()
                .unwrap();
            assert_eq!(got[lin], want, "at {c:?}");
        }
    }

    #[test]
    fn enlarge_zero_is_identity_and_shrink_enlarge_covers() {
        let g = grid(2, 12);
        let mut v = VoxelSet::empty(g.clone());
        for lin in [5usize, 40, 77, 100] {
            v.set(lin, true);
        }
        assert_eq!(enlarge_voxels(&v, 0.0).unwrap(), v);
        // r equal to one cell diagonal: shrink(enlarge(V,r),r) contains V.
        let r = 2.0_f64.sqrt() / 12.0;
        let round = shrink_voxels(&enlarge_voxels(&v, r).unwrap(), r).unwrap();
        assert!(v.is_subset_of(&round));
    }

    #[test]
    fn enlarged_voxel_ball_matches_analytic_ball() {
        // Voxel ball radius 0.1 at n=256, enlarged by 0.05, against the
        // analytic radius-0.15 rasterization: Hausdorff gap below one cell.
        let g = grid(2, 256);
        let c = TorusPoint::new(vec![0.5, 0.5]);
        let ball = |radius: f64| {
            VoxelSet::rasterize(g.clone(), |p| torus_dist(p, &c).unwrap() <= radius)
        };
        let grown = enlarge_voxels(&ball(0.1), 0.05).unwrap();
        let target = ball(0.15);
        let diag = 2.0_f64.sqrt() / 256.0;
        assert!(grown.is_subset_of(&enlarge_voxels(&target, diag).unwrap()));
        assert!(target.is_subset_of(&enlarge_voxels(&grown, diag).unwrap()));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn enlarge_is_monotone(bits in proptest::collection::vec(0u8..=1, 64), extra in 0usize..64, r in 0.0f64..0.4) {
            let g = grid(2, 8);
            let mut small = VoxelSet::empty(g.clone());
            for (lin, &b) in bits.iter().enumerate() {
                if b == 1 {
                    small.set(lin, true);
                }
            }
            let mut big = small.clone();
            big.set(extra, true);
            let es = enlarge_voxels(&small, r).unwrap();
            let eb = enlarge_voxels(&big, r).unwrap();
            prop_assert!(es.is_subset_of(&eb));
            // Ordering by radius as well: shrink is antitone through the
            // complement, so enlarge monotone in r covers both.
            let es2 = enlarge_voxels(&small, r + 0.1).unwrap();
            prop_assert!(es.is_subset_of(&es2));
        }
    }
}
