//! Geometry of the flat unit torus `[0,1)^d`: wrapped distances, grids,
//! voxel occupancy sets, shapes, and periodic distance transforms.

mod edt;
mod shape;
mod voxel;

pub use edt::{distance_transform, enlarge_voxels, shrink_voxels, squared_cell_distances};
pub(crate) use edt::box_squared_distances;
pub use shape::{Primitive, SetClass, ShapeSpec};
pub use voxel::{read_voxelset, write_voxelset, VoxelSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TorusError {
    #[error("points have mismatched dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("grid needs at least 2 cells per axis, got {0}")]
    GridTooCoarse(u64),
    #[error("torus geometry needs dimension at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("grid of {n}^{d} cells exceeds the addressable budget")]
    GridTooLarge { n: u64, d: u32 },
    #[error("voxel set is empty")]
    EmptySet,
    #[error("shrink is only exact for single balls, single boxes and voxel sets")]
    UnsupportedShrink,
    #[error("shape has no primitives")]
    EmptyShape,
    #[error("invalid primitive: {0}")]
    BadPrimitive(String),
    #[error("enlargement radius must be nonnegative, got {0}")]
    NegativeRadius(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad voxel file: {0}")]
    BadFormat(String),
}

/// A point of the unit torus: `d` coordinates, each normalised into `[0,1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    /// Wraps arbitrary real coordinates into `[0,1)` per axis.
    pub fn new(coords: Vec<f64>) -> Self {
        let coords = coords.into_iter().map(wrap_unit).collect();
        TorusPoint { coords }
    }

    pub fn origin(d: usize) -> Self {
        TorusPoint {
            coords: vec![0.0; d],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Translation by a real vector, re-normalising into `[0,1)`.
    pub fn translate(&self, shift: &[f64]) -> Result<TorusPoint, TorusError> {
        if shift.len() != self.dim() {
            return Err(TorusError::DimensionMismatch(self.dim(), shift.len()));
        }
        Ok(TorusPoint::new(
            self.coords.iter().zip(shift).map(|(a, b)| a + b).collect(),
        ))
    }
}

#[inline]
pub(crate) fn wrap_unit(x: f64) -> f64 {
    let y = x - x.floor();
    // x.floor() for x slightly below an integer can round the fraction to 1.0.
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Signed representative of `a - b` in `[-1/2, 1/2)`.
#[inline]
pub fn wrapped_delta(a: f64, b: f64) -> f64 {
    let mut dx = a - b;
    dx -= dx.round();
    dx
}

/// The induced (geodesic) distance on the torus: the minimum over integer
/// shifts of the Euclidean distance. Always in `[0, sqrt(d)/2]`.
pub fn torus_dist(x: &TorusPoint, y: &TorusPoint) -> Result<f64, TorusError> {
    if x.dim() != y.dim() {
        return Err(TorusError::DimensionMismatch(x.dim(), y.dim()));
    }
    let mut sum = 0.0;
    for (a, b) in x.coords().iter().zip(y.coords()) {
        let dx = wrapped_delta(*a, *b);
        sum += dx * dx;
    }
    Ok(sum.sqrt())
}

/// A cubic grid of `n^d` points (equivalently cells of side `1/n`) on the
/// torus. The default alignment puts grid points at cell centres, so cell
/// `i` covers `[i/n, (i+1)/n)` with its grid point at `(i + 1/2)/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    n: usize,
    offset: Vec<f64>,
}

impl GridSpec {
    pub fn new(d: usize, n: usize) -> Result<Self, TorusError> {
        let offset = vec![0.5 / n as f64; d];
        Self::with_offset(d, n, offset)
    }

    pub fn with_offset(d: usize, n: usize, offset: Vec<f64>) -> Result<Self, TorusError> {
        if d < 2 {
            return Err(TorusError::DimensionTooSmall(d));
        }
        if n < 2 {
            return Err(TorusError::GridTooCoarse(n as u64));
        }
        if offset.len() != d {
            return Err(TorusError::DimensionMismatch(d, offset.len()));
        }
        // Reject grids whose linear cell count cannot be addressed.
        let mut cells: u128 = 1;
        for _ in 0..d {
            cells = cells.saturating_mul(n as u128);
            if cells > (1u128 << 40) {
                return Err(TorusError::GridTooLarge { n: n as u64, d: d as u32 });
            }
        }
        let offset = offset.into_iter().map(wrap_unit).collect();
        Ok(GridSpec { d, n, offset })
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn cell_side(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn cell_count(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Grid point of the cell with the given per-axis indices.
    pub fn point(&self, idx: &[usize]) -> TorusPoint {
        debug_assert_eq!(idx.len(), self.d);
        TorusPoint::new(
            idx.iter()
                .zip(&self.offset)
                .map(|(&i, &o)| o + i as f64 / self.n as f64)
                .collect(),
        )
    }

    /// Linear index of per-axis indices; axis 0 varies fastest.
    #[inline]
    pub fn linear(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for &i in idx.iter().rev() {
            debug_assert!(i < self.n);
            lin = lin * self.n + i;
        }
        lin
    }

    /// Per-axis indices of a linear index.
    pub fn unlinear(&self, mut lin: usize, idx: &mut [usize]) {
        for slot in idx.iter_mut() {
            *slot = lin % self.n;
            lin /= self.n;
        }
    }

    /// Index of the cell containing a torus point.
    pub fn cell_of(&self, p: &TorusPoint) -> Vec<usize> {
        p.coords()
            .iter()
            .map(|&c| {
                let i = (c * self.n as f64).floor() as isize;
                (i.rem_euclid(self.n as isize)) as usize
            })
            .collect()
    }

    /// Lazily enumerates all `n^d` grid points in linear-index order.
    pub fn points(&self) -> impl Iterator<Item = TorusPoint> + '_ {
        let total = self.cell_count();
        let mut idx = vec![0usize; self.d];
        (0..total).map(move |lin| {
            self.unlinear(lin, &mut idx);
            self.point(&idx)
        })
    }
}
