//! Analytic shape templates in `R^d`.
//!
//! A [`ShapeSpec`] is a finite union of balls, axis boxes and segments,
//! optionally inflated by a Minkowski radius. Shapes are the sets `E` whose
//! scaled translates `x + phi E` are probed against the vacant set; they
//! support exact distance queries (for walk-on-spheres and for cube
//! intersection tests) and point sampling (for sandwich checks).

use super::TorusError;
use crate::rng::StreamRng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    Ball { center: Vec<f64>, radius: f64 },
    AxisBox { min: Vec<f64>, max: Vec<f64> },
    Segment { a: Vec<f64>, b: Vec<f64> },
}

impl Primitive {
    fn dim(&self) -> usize {
        match self {
            Primitive::Ball { center, .. } => center.len(),
            Primitive::AxisBox { min, .. } => min.len(),
            Primitive::Segment { a, .. } => a.len(),
        }
    }

    fn validate(&self) -> Result<(), TorusError> {
        match self {
            Primitive::Ball { radius, .. } => {
                if !radius.is_finite() || *radius < 0.0 {
                    return Err(TorusError::BadPrimitive(format!("ball radius {radius}")));
                }
            }
            Primitive::AxisBox { min, max } => {
                if min.len() != max.len() {
                    return Err(TorusError::DimensionMismatch(min.len(), max.len()));
                }
                if min.iter().zip(max).any(|(a, b)| a > b) {
                    return Err(TorusError::BadPrimitive("box with min > max".into()));
                }
            }
            Primitive::Segment { a, b } => {
                if a.len() != b.len() {
                    return Err(TorusError::DimensionMismatch(a.len(), b.len()));
                }
            }
        }
        Ok(())
    }

    /// Euclidean distance from a point to the primitive (0 inside).
    fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Primitive::Ball { center, radius } => {
                let d2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2.sqrt() - radius).max(0.0)
            }
            Primitive::AxisBox { min, max } => {
                let mut d2 = 0.0;
                for ((&xi, &lo), &hi) in x.iter().zip(min).zip(max) {
                    let g = (lo - xi).max(0.0).max(xi - hi);
                    d2 += g * g;
                }
                d2.sqrt()
            }
            Primitive::Segment { a, b } => point_segment_distance(x, a, b),
        }
    }

    /// Exact distance from the primitive to an axis-aligned cube
    /// `[lo, lo+side]^d`.
    fn distance_to_cube(&self, lo: &[f64], side: f64) -> f64 {
        match self {
            Primitive::Ball { center, radius } => {
                let mut d2 = 0.0;
                for (&c, &l) in center.iter().zip(lo) {
                    let g = (l - c).max(0.0).max(c - (l + side));
                    d2 += g * g;
                }
                (d2.sqrt() - radius).max(0.0)
            }
            Primitive::AxisBox { min, max } => {
                let mut d2 = 0.0;
                for ((&a, &b), &l) in min.iter().zip(max).zip(lo) {
                    let g = (l - b).max(0.0).max(a - (l + side));
                    d2 += g * g;
                }
                d2.sqrt()
            }
            Primitive::Segment { a, b } => segment_box_distance(a, b, lo, side),
        }
    }

    fn bounding_box(&self, min: &mut [f64], max: &mut [f64]) {
        match self {
            Primitive::Ball { center, radius } => {
                for (k, &c) in center.iter().enumerate() {
                    min[k] = min[k].min(c - radius);
                    max[k] = max[k].max(c + radius);
                }
            }
            Primitive::AxisBox { min: lo, max: hi } => {
                for k in 0..lo.len() {
                    min[k] = min[k].min(lo[k]);
                    max[k] = max[k].max(hi[k]);
                }
            }
            Primitive::Segment { a, b } => {
                for k in 0..a.len() {
                    min[k] = min[k].min(a[k].min(b[k]));
                    max[k] = max[k].max(a[k].max(b[k]));
                }
            }
        }
    }

    fn sample_point(&self, rng: &mut StreamRng, out: &mut Vec<f64>) {
        out.clear();
        match self {
            Primitive::Ball { center, radius } => {
                let d = center.len();
                let mut dir = vec![0.0; d];
                rng.unit_vector(d, &mut dir);
                let r = radius * rng.uniform().powf(1.0 / d as f64);
                out.extend(center.iter().zip(&dir).map(|(c, u)| c + r * u));
            }
            Primitive::AxisBox { min, max } => {
                out.extend(
                    min.iter()
                        .zip(max)
                        .map(|(&a, &b)| rng.uniform_range(a, b)),
                );
            }
            Primitive::Segment { a, b } => {
                let t = rng.uniform();
                out.extend(a.iter().zip(b).map(|(&p, &q)| p + t * (q - p)));
            }
        }
    }
}

fn point_segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut dot = 0.0;
    for k in 0..x.len() {
        let e = b[k] - a[k];
        ab2 += e * e;
        dot += (x[k] - a[k]) * e;
    }
    let t = if ab2 > 0.0 { (dot / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let mut d2 = 0.0;
    for k in 0..x.len() {
        let p = a[k] + t * (b[k] - a[k]);
        d2 += (x[k] - p) * (x[k] - p);
    }
    d2.sqrt()
}

/// Exact segment-to-cube distance: the squared distance is piecewise
/// quadratic in the segment parameter, with breakpoints where a coordinate
/// crosses a cube face; minimise each piece in closed form.
fn segment_box_distance(a: &[f64], b: &[f64], lo: &[f64], side: f64) -> f64 {
    let d = a.len();
    let mut ts = vec![0.0, 1.0];
    for k in 0..d {
        let e = b[k] - a[k];
        if e.abs() > 0.0 {
            for bound in [lo[k], lo[k] + side] {
                let t = (bound - a[k]) / e;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ts.dedup();
    let dist2_at = |t: f64| -> f64 {
        let mut d2 = 0.0;
        for k in 0..d {
            let p = a[k] + t * (b[k] - a[k]);
            let g = (lo[k] - p).max(0.0).max(p - (lo[k] + side));
            d2 += g * g;
        }
        d2
    };
    let mut best = f64::INFINITY;
    for w in ts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        // On (t0, t1) each per-axis gap is affine: alpha_k + beta_k t.
        let tmid = 0.5 * (t0 + t1);
        let mut qa = 0.0; // sum beta^2
        let mut qb = 0.0; // sum 2 alpha beta
        for k in 0..d {
            let e = b[k] - a[k];
            let p = a[k] + tmid * e;
            let (alpha, beta) = if p < lo[k] {
                (lo[k] - a[k], -e)
            } else if p > lo[k] + side {
                (a[k] - lo[k] - side, e)
            } else {
                (0.0, 0.0)
            };
            qa += beta * beta;
            qb += 2.0 * alpha * beta;
        }
        let mut candidates = vec![t0, t1];
        if qa > 0.0 {
            let tstar = -qb / (2.0 * qa);
            if tstar > t0 && tstar < t1 {
                candidates.push(tstar);
            }
        }
        for t in candidates {
            best = best.min(dist2_at(t));
        }
    }
    best.min(dist2_at(0.0)).min(dist2_at(1.0)).sqrt()
}

/// Declared set-class attributes. Membership of the capacity-regular class
/// cannot be decided from a rasterization, so it is always caller-declared;
/// the compact-connected flag is only set by [`ShapeSpec::verify_compact_connected`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetClass {
    /// Compact, connected, with connected complement (verified on a raster).
    pub compact_connected: bool,
    /// Capacity of interior and closure agree (declared, never inferred).
    pub capacity_regular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    d: usize,
    primitives: Vec<Primitive>,
    /// Minkowski inflation radius: the shape is all points within `inflate`
    /// of the primitive union. Enlargement is exact through this field.
    inflate: f64,
    pub class: SetClass,
}

impl ShapeSpec {
    pub fn new(d: usize, primitives: Vec<Primitive>) -> Result<Self, TorusError> {
        if d < 2 {
            return Err(TorusError::DimensionTooSmall(d));
        }
        if primitives.is_empty() {
            return Err(TorusError::EmptyShape);
        }
        for p in &primitives {
            p.validate()?;
            if p.dim() != d {
                return Err(TorusError::DimensionMismatch(d, p.dim()));
            }
        }
        Ok(ShapeSpec {
            d,
            primitives,
            inflate: 0.0,
            class: SetClass::default(),
        })
    }

    pub fn ball(d: usize, center: Vec<f64>, radius: f64) -> Result<Self, TorusError> {
        Self::new(d, vec![Primitive::Ball { center, radius }])
    }

    pub fn ball_at_origin(d: usize, radius: f64) -> Result<Self, TorusError> {
        Self::ball(d, vec![0.0; d], radius)
    }

    pub fn axis_box(d: usize, min: Vec<f64>, max: Vec<f64>) -> Result<Self, TorusError> {
        Self::new(d, vec![Primitive::AxisBox { min, max }])
    }

    pub fn segment(d: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self, TorusError> {
        Self::new(d, vec![Primitive::Segment { a, b }])
    }

    pub fn add(&mut self, p: Primitive) -> Result<(), TorusError> {
        p.validate()?;
        if p.dim() != self.d {
            return Err(TorusError::DimensionMismatch(self.d, p.dim()));
        }
        self.primitives.push(p);
        Ok(())
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    pub fn inflate_radius(&self) -> f64 {
        self.inflate
    }

    /// Distance from a point to the shape; 0 inside.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let core = self
            .primitives
            .iter()
            .map(|p| p.distance(x))
            .fold(f64::INFINITY, f64::min);
        (core - self.inflate).max(0.0)
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance(x) <= 0.0
    }

    /// Exact distance from the shape to the axis cube `[lo, lo+side]^d`.
    pub fn distance_to_cube(&self, lo: &[f64], side: f64) -> f64 {
        let core = self
            .primitives
            .iter()
            .map(|p| p.distance_to_cube(lo, side))
            .fold(f64::INFINITY, f64::min);
        (core - self.inflate).max(0.0)
    }

    /// Minkowski enlargement `E_r`, exact for any shape.
    pub fn enlarge(&self, r: f64) -> Result<ShapeSpec, TorusError> {
        if r < 0.0 {
            return Err(TorusError::NegativeRadius(r));
        }
        let mut out = self.clone();
        out.inflate += r;
        // Enlargements of compact sets are capacity-regular.
        if r > 0.0 {
            out.class.capacity_regular = true;
        }
        Ok(out)
    }

    /// Shrinking `E_{-r}`. Exact only where the geometry makes it so: a
    /// single (possibly inflated) ball, or a single uninflated box.
    pub fn shrink(&self, r: f64) -> Result<ShapeSpec, TorusError> {
        if r < 0.0 {
            return Err(TorusError::NegativeRadius(r));
        }
        if r == 0.0 {
            return Ok(self.clone());
        }
        if self.primitives.len() != 1 {
            return Err(TorusError::UnsupportedShrink);
        }
        let mut out = self.clone();
        match &mut out.primitives[0] {
            Primitive::Ball { radius, .. } => {
                let total = *radius + out.inflate;
                if total < r {
                    return Err(TorusError::BadPrimitive(
                        "shrink radius exceeds ball radius".into(),
                    ));
                }
                if out.inflate >= r {
                    out.inflate -= r;
                } else {
                    *radius -= r - out.inflate;
                    out.inflate = 0.0;
                }
            }
            Primitive::AxisBox { min, max } if out.inflate == 0.0 => {
                for k in 0..min.len() {
                    min[k] += r;
                    max[k] -= r;
                    if min[k] > max[k] {
                        return Err(TorusError::BadPrimitive(
                            "shrink radius exceeds box half-width".into(),
                        ));
                    }
                }
            }
            _ => return Err(TorusError::UnsupportedShrink),
        }
        Ok(out)
    }

    /// Axis-aligned bounding box (including inflation).
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.d;
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for p in &self.primitives {
            p.bounding_box(&mut min, &mut max);
        }
        for k in 0..d {
            min[k] -= self.inflate;
            max[k] += self.inflate;
        }
        (min, max)
    }

    /// Radius of a ball about the origin containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        let (min, max) = self.bounding_box();
        min.iter()
            .zip(&max)
            .map(|(&a, &b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Upper bound on the diameter: the bounding-box diagonal.
    pub fn diameter_bound(&self) -> f64 {
        let (min, max) = self.bounding_box();
        min.iter()
            .zip(&max)
            .map(|(&a, &b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// A random point of the shape (supported on all of it, not uniform).
    pub fn sample_point(&self, rng: &mut StreamRng) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.d);
        let which = rng.index(self.primitives.len());
        self.primitives[which].sample_point(rng, &mut out);
        if self.inflate > 0.0 {
            let d = self.d;
            let mut dir = vec![0.0; d];
            rng.unit_vector(d, &mut dir);
            let r = self.inflate * rng.uniform().powf(1.0 / d as f64);
            for k in 0..d {
                out[k] += r * dir[k];
            }
        }
        out
    }

    /// Rasterizes the shape in its bounding box at the given resolution and
    /// checks that both the shape cells and the complement cells are face
    /// connected. On success sets (and returns) the compact-connected flag.
    /// This is a raster verification: a pass certifies the flag at this
    /// resolution only.
    pub fn verify_compact_connected(&mut self, resolution: usize) -> bool {
        let d = self.d;
        let (min, max) = self.bounding_box();
        let extent = max
            .iter()
            .zip(&min)
            .map(|(b, a)| b - a)
            .fold(0.0f64, f64::max);
        if extent <= 0.0 {
            return false;
        }
        let h = extent / resolution as f64;
        // Two cells of margin so the complement wraps around the shape.
        let dims: Vec<usize> = (0..d)
            .map(|k| ((max[k] - min[k]) / h).ceil() as usize + 4)
            .collect();
        let total: usize = dims.iter().product();
        if total > 1 << 24 {
            return false;
        }
        let mut occ = vec![false; total];
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        for lin in 0..total {
            let mut rem = lin;
            for k in 0..d {
                idx[k] = rem % dims[k];
                rem /= dims[k];
            }
            for k in 0..d {
                x[k] = min[k] + (idx[k] as f64 - 1.5) * h;
            }
            occ[lin] = self.contains(&x);
        }
        let shape_ok = face_connected(&occ, &dims, true);
        let comp_ok = face_connected(&occ, &dims, false);
        let verified = shape_ok && comp_ok && occ.iter().any(|&b| b);
        self.class.compact_connected = verified;
        verified
    }
}

/// Single-component check for cells with the given occupancy value, under
/// face adjacency in a dense box (no wrap).
fn face_connected(occ: &[bool], dims: &[usize], value: bool) -> bool {
    let total = occ.len();
    let start = match (0..total).find(|&i| occ[i] == value) {
        Some(s) => s,
        None => return true,
    };
    let mut seen = vec![false; total];
    let mut stack = vec![start];
    seen[start] = true;
    let d = dims.len();
    let mut strides = vec![1usize; d];
    for k in 1..d {
        strides[k] = strides[k - 1] * dims[k - 1];
    }
    while let Some(cur) = stack.pop() {
        let mut rem = cur;
        for k in 0..d {
            let ik = rem % dims[k];
            rem /= dims[k];
            if ik > 0 {
                let nb = cur - strides[k];
                if !seen[nb] && occ[nb] == value {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
            if ik + 1 < dims[k] {
                let nb = cur + strides[k];
                if !seen[nb] && occ[nb] == value {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }
    (0..total).all(|i| occ[i] != value || seen[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> usize {
        3
    }

    #[test]
    fn ball_distance_and_membership() {
        let s = ShapeSpec::ball_at_origin(d3(), 0.5).unwrap();
        assert_eq!(s.distance(&[0.0, 0.0, 0.0]), 0.0);
        assert!((s.distance(&[1.0, 0.0, 0.0]) - 0.5).abs() < 1e-12);
        assert!(s.contains(&[0.3, 0.3, 0.2]));
        assert!(!s.contains(&[0.5, 0.5, 0.0]));
    }

    #[test]
    fn enlarge_then_shrink_ball_roundtrips() {
        let s = ShapeSpec::ball_at_origin(d3(), 0.3).unwrap();
        let grown = s.enlarge(0.2).unwrap();
        assert!((grown.distance(&[1.0, 0.0, 0.0]) - 0.5).abs() < 1e-12);
        let back = grown.shrink(0.2).unwrap();
        for x in [[0.29, 0.0, 0.0], [0.31, 0.0, 0.0], [0.2, 0.2, 0.1]] {
            assert_eq!(back.contains(&x), s.contains(&x));
        }
        assert_eq!(s.enlarge(0.0).unwrap(), s);
    }

    #[test]
    fn shrink_unsupported_for_unions() {
        let mut s = ShapeSpec::ball_at_origin(d3(), 0.3).unwrap();
        s.add(Primitive::Ball {
            center: vec![1.0, 0.0, 0.0],
            radius: 0.2,
        })
        .unwrap();
        assert!(matches!(s.shrink(0.1), Err(TorusError::UnsupportedShrink)));
    }

    #[test]
    fn box_geometry() {
        let s = ShapeSpec::axis_box(d3(), vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert!(s.contains(&[0.5, 0.5, 0.5]));
        assert!((s.distance(&[2.0, 0.5, 0.5]) - 1.0).abs() < 1e-12);
        let shrunk = s.shrink(0.25).unwrap();
        assert!(shrunk.contains(&[0.5, 0.5, 0.5]));
        assert!(!shrunk.contains(&[0.1, 0.5, 0.5]));
        assert!((s.diameter_bound() - 3.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn segment_box_distance_matches_sampling() {
        let a = vec![-1.0, 0.3, 0.0];
        let b = vec![2.0, 1.4, 0.9];
        let lo = vec![0.2, -0.5, -0.3];
        let side = 0.4;
        let exact = segment_box_distance(&a, &b, &lo, side);
        // Dense parameter scan as an independent check.
        let mut best = f64::INFINITY;
        for i in 0..=20000 {
            let t = i as f64 / 20000.0;
            let p: Vec<f64> = a.iter().zip(&b).map(|(&x, &y)| x + t * (y - x)).collect();
            let mut d2 = 0.0;
            for k in 0..3 {
                let g = (lo[k] - p[k]).max(0.0).max(p[k] - (lo[k] + side));
                d2 += g * g;
            }
            best = best.min(d2.sqrt());
        }
        assert!((exact - best).abs() < 1e-6, "exact {exact} vs scan {best}");
        assert!(exact <= best + 1e-12);
    }

    #[test]
    fn cube_distance_for_ball() {
        let s = ShapeSpec::ball_at_origin(d3(), 0.5).unwrap();
        // Cube well away along the x axis.
        let got = s.distance_to_cube(&[2.0, -0.5, -0.5], 1.0);
        assert!((got - 1.5).abs() < 1e-12);
        // Cube containing the origin intersects.
        assert_eq!(s.distance_to_cube(&[-0.1, -0.1, -0.1], 0.2), 0.0);
    }

    #[test]
    fn sampled_points_lie_inside() {
        let mut s = ShapeSpec::ball_at_origin(d3(), 0.4).unwrap();
        s.add(Primitive::Segment {
            a: vec![0.0, 0.0, 0.0],
            b: vec![1.0, 0.0, 0.0],
        })
        .unwrap();
        let s = s.enlarge(0.05).unwrap();
        let mut rng = StreamRng::new(11, 0);
        for _ in 0..500 {
            let p = s.sample_point(&mut rng);
            assert!(s.distance(&p) <= 1e-12);
        }
    }

    #[test]
    fn class_verification() {
        let mut ball = ShapeSpec::ball_at_origin(d3(), 0.5).unwrap();
        assert!(ball.verify_compact_connected(24));
        assert!(ball.class.compact_connected);

        let mut split = ShapeSpec::ball_at_origin(d3(), 0.2).unwrap();
        split
            .add(Primitive::Ball {
                center: vec![2.0, 0.0, 0.0],
                radius: 0.2,
            })
            .unwrap();
        assert!(!split.verify_compact_connected(24));
        assert!(!split.class.compact_connected);
    }
}
