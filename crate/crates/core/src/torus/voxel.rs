//! Voxel occupancy sets over a torus grid.
//!
//! A cell is occupied iff its centre lies within the continuum set being
//! rasterized. That convention is used everywhere in the crate; the induced
//! rasterization bias is half a cell diagonal.

use super::{GridSpec, TorusError, TorusPoint};
use std::io::{Read, Write};

/// Occupancy bitmap over the `n^d` cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelSet {
    grid: GridSpec,
    words: Vec<u64>,
    /// Set by producers when the grid resolution undersamples the feature
    /// being rasterized (e.g. sausage radius under two cells).
    pub coarse_warning: bool,
}

impl VoxelSet {
    pub fn empty(grid: GridSpec) -> Self {
        let cells = grid.cell_count();
        VoxelSet {
            grid,
            words: vec![0u64; cells.div_ceil(64)],
            coarse_warning: false,
        }
    }

    pub fn full(grid: GridSpec) -> Self {
        let mut v = Self::empty(grid);
        for w in &mut v.words {
            *w = u64::MAX;
        }
        v.mask_tail();
        v
    }

    fn mask_tail(&mut self) {
        let cells = self.grid.cell_count();
        let rem = cells % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.grid.cell_count()
    }

    #[inline]
    pub fn is_empty_set(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn get(&self, lin: usize) -> bool {
        (self.words[lin >> 6] >> (lin & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, lin: usize, value: bool) {
        let w = &mut self.words[lin >> 6];
        let bit = 1u64 << (lin & 63);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    pub fn count_occupied(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Fraction of the torus volume covered: `count / n^d`.
    pub fn volume(&self) -> f64 {
        self.count_occupied() as f64 / self.len() as f64
    }

    pub fn complement(&self) -> VoxelSet {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out.mask_tail();
        out
    }

    /// Bitwise union, used to merge rasterized path chunks.
    pub fn union_with(&mut self, other: &VoxelSet) -> Result<(), TorusError> {
        if self.grid != other.grid {
            return Err(TorusError::BadFormat("grid mismatch in union".into()));
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    pub fn is_subset_of(&self, other: &VoxelSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// Linear indices of occupied cells.
    pub fn occupied_cells(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count_occupied());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                out.push(wi * 64 + b);
                bits &= bits - 1;
            }
        }
        out
    }

    /// Centre of a cell as a torus point.
    pub fn cell_center(&self, lin: usize) -> TorusPoint {
        let mut idx = vec![0usize; self.grid.d()];
        self.grid.unlinear(lin, &mut idx);
        self.grid.point(&idx)
    }

    /// Rasterizes a continuum membership predicate: cell occupied iff its
    /// centre satisfies the predicate.
    pub fn rasterize(grid: GridSpec, mut inside: impl FnMut(&TorusPoint) -> bool) -> VoxelSet {
        let mut v = VoxelSet::empty(grid);
        let mut idx = vec![0usize; v.grid.d()];
        for lin in 0..v.len() {
            v.grid.unlinear(lin, &mut idx);
            if inside(&v.grid.point(&idx)) {
                v.set(lin, true);
            }
        }
        v
    }
}

const MAGIC: &[u8; 4] = b"VXS1";

/// Writes the documented binary layout: magic `VXS1`, `u32` dimension,
/// `u64` cells per axis, `d` little-endian `f64` grid offsets, then the
/// occupancy bitmap packed LSB-first in axis-0-fastest cell order.
pub fn write_voxelset(w: &mut impl Write, v: &VoxelSet) -> Result<(), TorusError> {
    w.write_all(MAGIC)?;
    w.write_all(&(v.grid.d() as u32).to_le_bytes())?;
    w.write_all(&(v.grid.n() as u64).to_le_bytes())?;
    for &o in v.grid.offset() {
        w.write_all(&o.to_le_bytes())?;
    }
    let cells = v.len();
    let mut byte = 0u8;
    let mut filled = 0;
    let mut buf = Vec::with_capacity(cells.div_ceil(8));
    for lin in 0..cells {
        if v.get(lin) {
            byte |= 1 << filled;
        }
        filled += 1;
        if filled == 8 {
            buf.push(byte);
            byte = 0;
            filled = 0;
        }
    }
    if filled > 0 {
        buf.push(byte);
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_voxelset(r: &mut impl Read) -> Result<VoxelSet, TorusError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(TorusError::BadFormat("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut offset = Vec::with_capacity(d);
    for _ in 0..d {
        r.read_exact(&mut b8)?;
        offset.push(f64::from_le_bytes(b8));
    }
    let grid = GridSpec::with_offset(d, n, offset)?;
    let cells = grid.cell_count();
    let mut bytes = vec![0u8; cells.div_ceil(8)];
    r.read_exact(&mut bytes)?;
    let mut v = VoxelSet::empty(grid);
    for lin in 0..cells {
        if (bytes[lin >> 3] >> (lin & 7)) & 1 == 1 {
            v.set(lin, true);
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(d: usize, n: usize) -> GridSpec {
        GridSpec::new(d, n).unwrap()
    }

    #[test]
    fn complement_is_involutive() {
        let mut v = VoxelSet::empty(grid(3, 5));
        for lin in [0usize, 7, 31, 64, 124] {
            v.set(lin, true);
        }
        assert_eq!(v.complement().complement(), v);
        assert_eq!(v.complement().count_occupied(), 125 - 5);
    }

    #[test]
    fn full_and_empty() {
        let v = VoxelSet::full(grid(2, 3));
        assert_eq!(v.count_occupied(), 9);
        assert!(VoxelSet::empty(grid(2, 3)).is_empty_set());
    }

    #[test]
    fn serialization_roundtrip() {
        let mut v = VoxelSet::empty(grid(3, 6));
        for lin in (0..v.len()).step_by(7) {
            v.set(lin, true);
        }
        let mut buf = Vec::new();
        write_voxelset(&mut buf, &v).unwrap();
        let back = read_voxelset(&mut buf.as_slice()).unwrap();
        assert_eq!(back, v);
        // Header is 4 + 4 + 8 + 3*8 bytes, bitmap 216 bits -> 27 bytes.
        assert_eq!(buf.len(), 16 + 24 + 27);
    }

    #[test]
    fn serialization_rejects_garbage() {
        let buf = b"NOPE".to_vec();
        assert!(read_voxelset(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn rasterize_ball_occupancy_convention() {
        // Cell occupied iff its centre is inside the ball.
        let g = grid(2, 8);
        let c = TorusPoint::new(vec![0.5, 0.5]);
        let v = VoxelSet::rasterize(g, |p| super::super::torus_dist(p, &c).unwrap() <= 0.25);
        // Centres on the 8x8 grid are at (i+0.5)/8; brute-check the count.
        let mut expect = 0;
        for i in 0..8 {
            for j in 0..8 {
                let p = TorusPoint::new(vec![(i as f64 + 0.5) / 8.0, (j as f64 + 0.5) / 8.0]);
                if super::super::torus_dist(&p, &c).unwrap() <= 0.25 {
                    expect += 1;
                }
            }
        }
        assert_eq!(v.count_occupied(), expect);
        assert!(expect > 0);
    }
}
