use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform grid of `prod(divisions)` closed cells over the box `[lo, hi]`.
///
/// Cell indices run with axis 0 fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicalGrid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    divisions: Vec<usize>,
    #[serde(skip)]
    strides: Vec<usize>,
    #[serde(skip)]
    len: usize,
}

impl CubicalGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, divisions: Vec<usize>) -> Result<Self> {
        let n = lo.len();
        if n == 0 || hi.len() != n || divisions.len() != n {
            return Err(Error::InvalidArgument(format!(
                "box and divisions must share one positive dimension (lo {}, hi {}, divisions {})",
                lo.len(),
                hi.len(),
                divisions.len()
            )));
        }
        for axis in 0..n {
            if !(lo[axis].is_finite() && hi[axis].is_finite() && lo[axis] < hi[axis]) {
                return Err(Error::InvalidArgument(format!(
                    "axis {axis}: lo {} must be below hi {}",
                    lo[axis], hi[axis]
                )));
            }
            if divisions[axis] == 0 {
                return Err(Error::InvalidArgument(format!("axis {axis}: divisions must be positive")));
            }
        }
        let mut strides = Vec::with_capacity(n);
        let mut len = 1usize;
        for &d in &divisions {
            strides.push(len);
            len = len
                .checked_mul(d)
                .filter(|&l| l < u32::MAX as usize)
                .ok_or_else(|| Error::InvalidArgument("grid has too many cells".into()))?;
        }
        Ok(Self { lo, hi, divisions, strides, len })
    }

    /// `divisions` cells on every axis of `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64, divisions: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], vec![divisions; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn divisions(&self) -> &[usize] {
        &self.divisions
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn cell_size(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.divisions[axis] as f64
    }

    pub fn cell_sizes(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.cell_size(a)).collect()
    }

    /// Largest side length over all axes.
    pub fn max_cell_size(&self) -> f64 {
        (0..self.dim()).map(|a| self.cell_size(a)).fold(0.0, f64::max)
    }

    pub fn cell_diagonal(&self) -> f64 {
        (0..self.dim()).map(|a| self.cell_size(a).powi(2)).sum::<f64>().sqrt()
    }

    pub fn coords(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        self.coords_into(index, &mut out);
        out
    }

    #[inline]
    pub fn coords_into(&self, mut index: usize, out: &mut [usize]) {
        for (o, &d) in out.iter_mut().zip(&self.divisions) {
            *o = index % d;
            index /= d;
        }
    }

    #[inline]
    pub fn index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    pub fn cell_center(&self, index: usize) -> Vec<f64> {
        let c = self.coords(index);
        (0..self.dim()).map(|a| self.lo[a] + (c[a] as f64 + 0.5) * self.cell_size(a)).collect()
    }

    /// Closed box of a cell as `(lo, hi)`.
    pub fn cell_bounds(&self, index: usize) -> (Vec<f64>, Vec<f64>) {
        let c = self.coords(index);
        let lo: Vec<f64> = (0..self.dim()).map(|a| self.lo[a] + c[a] as f64 * self.cell_size(a)).collect();
        let hi: Vec<f64> = (0..self.dim()).map(|a| lo[a] + self.cell_size(a)).collect();
        (lo, hi)
    }

    /// The cell containing `p`, or `None` outside the box. Points on an
    /// interior face go to the upper cell, points on `hi` to the last one.
    pub fn cell_of_point(&self, p: &[f64]) -> Option<usize> {
        self.locate(p).map(|(c, _)| c)
    }

    /// Cell containing `p` plus a bit mask of the axes along which `p` sits
    /// on the cell's lower face, shared with the lower neighbor.
    pub fn locate(&self, p: &[f64]) -> Option<(usize, u64)> {
        let mut index = 0;
        let mut mask = 0u64;
        for axis in 0..self.dim() {
            let v = p[axis];
            if !(v >= self.lo[axis] && v <= self.hi[axis]) {
                return None;
            }
            let d = self.divisions[axis];
            let t = (v - self.lo[axis]) / (self.hi[axis] - self.lo[axis]) * d as f64;
            // Points within roundoff of a face count as lying on it.
            let r = t.round();
            let on_face = (t - r).abs() < 1e-9;
            let t = if on_face { r } else { t };
            let k = (t.floor() as usize).min(d - 1);
            if on_face && k > 0 && k as f64 == t && axis < 64 {
                mask |= 1 << axis;
            }
            index += k * self.strides[axis];
        }
        Some((index, mask))
    }

    /// True if `other` is `cell` or a lower neighbor of it across the faces
    /// in `mask`, i.e. the closed cells share the located point.
    pub fn shares_lower_faces(&self, cell: usize, mask: u64, other: usize) -> bool {
        if cell == other {
            return true;
        }
        if mask == 0 || other > cell {
            return false;
        }
        let (mut a, mut b) = (cell, other);
        for (axis, &d) in self.divisions.iter().enumerate() {
            let (ca, cb) = (a % d, b % d);
            a /= d;
            b /= d;
            if ca != cb && !(mask >> axis & 1 == 1 && cb + 1 == ca) {
                return false;
            }
        }
        true
    }

    /// Each cell split into `factor` cells per axis.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("refinement factor must be positive".into()));
        }
        Self::new(self.lo.clone(), self.hi.clone(), self.divisions.iter().map(|d| d * factor).collect())
    }

    /// True if the cell has a face on the boundary of the box.
    pub fn touches_edge(&self, index: usize) -> bool {
        let mut rest = index;
        for &d in &self.divisions {
            let c = rest % d;
            rest /= d;
            if c == 0 || c + 1 == d {
                return true;
            }
        }
        false
    }

    /// Face neighbors (sharing an (n-1)-face) inside the grid, appended to `out`.
    pub fn face_neighbors(&self, index: usize, out: &mut Vec<usize>) {
        let mut rest = index;
        for axis in 0..self.dim() {
            let d = self.divisions[axis];
            let c = rest % d;
            rest /= d;
            let s = self.strides[axis];
            if c > 0 {
                out.push(index - s);
            }
            if c + 1 < d {
                out.push(index + s);
            }
        }
    }

    /// Number of face neighbors that fall outside the grid.
    pub fn missing_face_neighbors(&self, index: usize) -> usize {
        let mut rest = index;
        let mut missing = 0;
        for &d in &self.divisions {
            let c = rest % d;
            rest /= d;
            missing += (c == 0) as usize + (c + 1 == d) as usize;
        }
        missing
    }

    /// All cells within Chebyshev distance `radius` (including `index`),
    /// in ascending order. Also reports whether the full neighborhood would
    /// have reached past the box.
    pub fn chebyshev_ball(&self, index: usize, radius: usize, out: &mut Vec<usize>) -> bool {
        let n = self.dim();
        let c = self.coords(index);
        let mut lo = vec![0usize; n];
        let mut hi = vec![0usize; n];
        let mut clipped = false;
        for a in 0..n {
            lo[a] = c[a].saturating_sub(radius);
            hi[a] = (c[a] + radius).min(self.divisions[a] - 1);
            clipped |= c[a] < radius || c[a] + radius >= self.divisions[a];
        }
        let mut cur = lo.clone();
        loop {
            out.push(self.index(&cur));
            let mut a = 0;
            loop {
                if a == n {
                    return clipped;
                }
                if cur[a] < hi[a] {
                    cur[a] += 1;
                    break;
                }
                cur[a] = lo[a];
                a += 1;
            }
        }
    }

    /// Euclidean distance between two cell centers.
    pub fn center_distance(&self, a: usize, b: usize) -> f64 {
        let ca = self.coords(a);
        let cb = self.coords(b);
        (0..self.dim())
            .map(|ax| ((ca[ax] as f64 - cb[ax] as f64) * self.cell_size(ax)).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}
