use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::grid::CubicalGrid;
use crate::error::{Error, Result};

/// A set of cells of one grid.
#[derive(Clone)]
pub struct CellSet {
    grid: Arc<CubicalGrid>,
    bits: FixedBitSet,
}

impl fmt::Debug for CellSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CellSet").field("divisions", &self.grid.divisions()).field("len", &self.len()).finish()
    }
}

impl PartialEq for CellSet {
    fn eq(&self, other: &Self) -> bool {
        self.same_grid(other) && self.bits == other.bits
    }
}

impl Eq for CellSet {}

impl CellSet {
    pub fn empty(grid: &Arc<CubicalGrid>) -> Self {
        Self { grid: Arc::clone(grid), bits: FixedBitSet::with_capacity(grid.len()) }
    }

    pub fn full(grid: &Arc<CubicalGrid>) -> Self {
        let mut s = Self::empty(grid);
        s.bits.insert_range(..);
        s
    }

    pub fn from_indices(grid: &Arc<CubicalGrid>, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = Self::empty(grid);
        for i in indices {
            if i >= grid.len() {
                return Err(Error::InvalidArgument(format!("cell {i} outside a grid of {} cells", grid.len())));
            }
            s.bits.insert(i);
        }
        Ok(s)
    }

    /// Cells whose center satisfies `pred`.
    pub fn from_centers(grid: &Arc<CubicalGrid>, pred: impl Fn(&[f64]) -> bool) -> Self {
        let mut s = Self::empty(grid);
        for i in 0..grid.len() {
            if pred(&grid.cell_center(i)) {
                s.bits.insert(i);
            }
        }
        s
    }

    /// Cells meeting the region `pred`, judged on the center and all corners,
    /// so cells straddling the region boundary are included.
    pub fn covering(grid: &Arc<CubicalGrid>, pred: impl Fn(&[f64]) -> bool) -> Self {
        let n = grid.dim();
        let mut s = Self::empty(grid);
        let mut p = vec![0.0; n];
        for i in 0..grid.len() {
            let (lo, hi) = grid.cell_bounds(i);
            let mut hit = pred(&grid.cell_center(i));
            let mut corner = 0usize;
            while !hit && corner < (1 << n) {
                for a in 0..n {
                    p[a] = if corner >> a & 1 == 1 { hi[a] } else { lo[a] };
                }
                hit = pred(&p);
                corner += 1;
            }
            if hit {
                s.bits.insert(i);
            }
        }
        s
    }

    pub(crate) fn from_bits(grid: &Arc<CubicalGrid>, bits: FixedBitSet) -> Self {
        debug_assert_eq!(bits.len(), grid.len());
        Self { grid: Arc::clone(grid), bits }
    }

    pub fn grid(&self) -> &Arc<CubicalGrid> {
        &self.grid
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits.contains(i)
    }

    pub fn insert(&mut self, i: usize) {
        self.bits.insert(i);
    }

    pub fn remove(&mut self, i: usize) {
        self.bits.set(i, false);
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        Ok(Self::from_bits(&self.grid, bits))
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mut bits = self.bits.clone();
        bits.intersect_with(&other.bits);
        Ok(Self::from_bits(&self.grid, bits))
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        Ok(Self::from_bits(&self.grid, bits))
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        Self::from_bits(&self.grid, bits)
    }

    pub fn is_subset(&self, other: &Self) -> Result<bool> {
        self.check_grid(other)?;
        Ok(self.bits.is_subset(&other.bits))
    }

    pub fn is_disjoint(&self, other: &Self) -> Result<bool> {
        self.check_grid(other)?;
        Ok(self.bits.is_disjoint(&other.bits))
    }

    /// Chebyshev dilation by `width` layers, clipped to the grid.
    pub fn dilate(&self, width: usize) -> Self {
        let g = &self.grid;
        let mut cur = self.bits.clone();
        // Box dilation is separable: one 1-D pass per axis.
        for axis in 0..g.dim() {
            if width == 0 {
                break;
            }
            let d = g.divisions()[axis];
            let s = g.strides()[axis];
            let mut next = cur.clone();
            for i in cur.ones() {
                let c = (i / s) % d;
                let lo = c.saturating_sub(width);
                let hi = (c + width).min(d - 1);
                for k in lo..=hi {
                    next.insert(i - c * s + k * s);
                }
            }
            cur = next;
        }
        Self::from_bits(g, cur)
    }

    /// Whether the `width`-dilation of the set would leave the box.
    pub fn dilation_leaves_grid(&self, width: usize) -> bool {
        let g = &self.grid;
        self.iter().any(|i| {
            let c = g.coords(i);
            c.iter().zip(g.divisions()).any(|(&ci, &d)| ci < width || ci + width >= d)
        })
    }

    /// The set plus `width` layers of surrounding cells.
    pub fn collar(&self, width: usize) -> Self {
        self.dilate(width)
    }

    /// Cells of the set with a face neighbor outside it; faces on the box
    /// boundary count as outside.
    pub fn boundary_layer(&self) -> Self {
        let g = &self.grid;
        let mut out = FixedBitSet::with_capacity(g.len());
        let mut nb = Vec::with_capacity(2 * g.dim());
        for i in self.bits.ones() {
            if g.missing_face_neighbors(i) > 0 {
                out.insert(i);
                continue;
            }
            nb.clear();
            g.face_neighbors(i, &mut nb);
            if nb.iter().any(|&j| !self.bits.contains(j)) {
                out.insert(i);
            }
        }
        Self::from_bits(g, out)
    }

    pub fn touches_grid_edge(&self) -> bool {
        self.iter().any(|i| self.grid.touches_edge(i))
    }

    /// Centers of all members, ascending by index.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        self.iter().map(|i| self.grid.cell_center(i)).collect()
    }

    /// The same region on a grid refined by `factor`.
    pub fn refine(&self, fine: &Arc<CubicalGrid>, factor: usize) -> Result<Self> {
        let g = &self.grid;
        if fine.divisions().iter().zip(g.divisions()).any(|(f, c)| *f != c * factor)
            || fine.lo() != g.lo()
            || fine.hi() != g.hi()
        {
            return Err(Error::GridMismatch);
        }
        let n = g.dim();
        let mut out = FixedBitSet::with_capacity(fine.len());
        let mut fc = vec![0usize; n];
        for j in 0..fine.len() {
            fine.coords_into(j, &mut fc);
            for v in fc.iter_mut() {
                *v /= factor;
            }
            if self.bits.contains(g.index(&fc)) {
                out.insert(j);
            }
        }
        Ok(Self::from_bits(fine, out))
    }
}
