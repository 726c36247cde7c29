//! Cubical chain complexes of cell sets, in doubled coordinates.
//!
//! An elementary cube of a grid with `d_a` cells on axis `a` has doubled
//! coordinates `x_a in 0..=2 d_a`: odd entries are unit intervals, even ones
//! degenerate points. Top cell `c` has coordinates `2 c_a + 1`.

use std::collections::HashMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::cubegrid::{CellSet, CubicalGrid};
use crate::error::{Error, Result};

/// Finite chain complex with integer boundary columns, indexed by dimension.
#[derive(Debug, Clone)]
pub struct ChainComplex {
    /// `boundary[k][j]`: boundary of generator `j` of dimension `k` as
    /// `(index in dimension k - 1, coefficient)` pairs.
    pub boundary: Vec<Vec<Vec<(usize, i64)>>>,
}

impl ChainComplex {
    pub fn top_dim(&self) -> usize {
        self.boundary.len().saturating_sub(1)
    }

    pub fn counts(&self) -> Vec<usize> {
        self.boundary.iter().map(|b| b.len()).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.counts().iter().enumerate().map(|(k, &n)| if k % 2 == 0 { n as i64 } else { -(n as i64) }).sum()
    }

    /// Checks that the composite of consecutive boundaries vanishes.
    pub fn boundary_squared_vanishes(&self) -> bool {
        for k in 2..self.boundary.len() {
            for col in &self.boundary[k] {
                let mut acc: HashMap<usize, i64> = HashMap::new();
                for &(f, c) in col {
                    for &(g, d) in &self.boundary[k - 1][f] {
                        *acc.entry(g).or_insert(0) += c * d;
                    }
                }
                if acc.values().any(|&v| v != 0) {
                    return false;
                }
            }
        }
        true
    }
}

/// The cubes of `|N| \ |E|` for a pair of cell sets, with the relative
/// boundary (faces inside `|E|` dropped).
#[derive(Debug, Clone)]
pub struct CubicalComplex {
    grid: Arc<CubicalGrid>,
    radix: Vec<usize>,
    stride: Vec<usize>,
    /// Sorted codes of the cubes in each dimension.
    cubes: Vec<Vec<usize>>,
}

impl CubicalComplex {
    pub fn relative(n: &CellSet, exit: &CellSet) -> Result<Self> {
        if !exit.is_subset(n)? {
            return Err(Error::InvalidPair("exit set is not contained in N".into()));
        }
        let grid = Arc::clone(n.grid());
        let dim = grid.dim();
        let radix: Vec<usize> = grid.divisions().iter().map(|d| 2 * d + 1).collect();
        let mut stride = Vec::with_capacity(dim);
        let mut total = 1usize;
        for &r in &radix {
            stride.push(total);
            total = total
                .checked_mul(r)
                .ok_or_else(|| Error::InvalidArgument("grid too large for a cubical complex".into()))?;
        }
        let cx = Self { grid, radix, stride, cubes: vec![Vec::new(); dim + 1] };
        let closure_n = cx.closure(n, total);
        let closure_e = cx.closure(exit, total);
        let mut cubes = vec![Vec::new(); dim + 1];
        for code in closure_n.ones() {
            if !closure_e.contains(code) {
                cubes[cx.cube_dim(code)].push(code);
            }
        }
        Ok(Self { cubes, ..cx })
    }

    pub fn absolute(s: &CellSet) -> Result<Self> {
        Self::relative(s, &CellSet::empty(s.grid()))
    }

    fn closure(&self, set: &CellSet, total: usize) -> FixedBitSet {
        let n = self.grid.dim();
        let mut bits = FixedBitSet::with_capacity(total);
        let mut coords = vec![0usize; n];
        let faces = 3usize.pow(n as u32);
        for cell in set.iter() {
            self.grid.coords_into(cell, &mut coords);
            let base: usize = (0..n).map(|a| 2 * coords[a] * self.stride[a]).sum();
            for f in 0..faces {
                let mut rest = f;
                let mut code = base;
                for a in 0..n {
                    code += (rest % 3) * self.stride[a];
                    rest /= 3;
                }
                bits.insert(code);
            }
        }
        bits
    }

    #[inline]
    fn cube_dim(&self, code: usize) -> usize {
        let mut rest = code;
        let mut k = 0;
        for &r in &self.radix {
            k += (rest % r) & 1;
            rest /= r;
        }
        k
    }

    pub fn grid(&self) -> &Arc<CubicalGrid> {
        &self.grid
    }

    pub fn counts(&self) -> Vec<usize> {
        self.cubes.iter().map(|c| c.len()).collect()
    }

    pub fn cubes(&self, k: usize) -> &[usize] {
        &self.cubes[k]
    }

    /// Doubled coordinates of a cube code.
    pub fn doubled_coords(&self, code: usize) -> Vec<usize> {
        let mut rest = code;
        self.radix
            .iter()
            .map(|&r| {
                let x = rest % r;
                rest /= r;
                x
            })
            .collect()
    }

    /// Full boundary of a cube as `(face code, coefficient)`, before any
    /// relative truncation.
    pub fn cube_boundary(&self, code: usize) -> Vec<(usize, i64)> {
        let x = self.doubled_coords(code);
        let mut out = Vec::new();
        let mut m = 0;
        for (a, &xa) in x.iter().enumerate() {
            if xa & 1 == 1 {
                let sign = if m % 2 == 0 { 1 } else { -1 };
                out.push((code + self.stride[a], sign));
                out.push((code - self.stride[a], -sign));
                m += 1;
            }
        }
        out
    }

    /// The relative chain complex with generators ordered by cube code.
    pub fn chain_complex(&self) -> ChainComplex {
        let mut boundary = Vec::with_capacity(self.cubes.len());
        for k in 0..self.cubes.len() {
            if k == 0 {
                boundary.push(vec![Vec::new(); self.cubes[0].len()]);
                continue;
            }
            let faces = &self.cubes[k - 1];
            let cols = self.cubes[k]
                .iter()
                .map(|&code| {
                    let mut col: Vec<(usize, i64)> = self
                        .cube_boundary(code)
                        .into_iter()
                        .filter_map(|(f, c)| faces.binary_search(&f).ok().map(|i| (i, c)))
                        .collect();
                    col.sort_unstable();
                    col
                })
                .collect();
            boundary.push(cols);
        }
        ChainComplex { boundary }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_square_faces() {
        let g = Arc::new(CubicalGrid::cube(2, 0.0, 1.0, 3).unwrap());
        let s = CellSet::from_indices(&g, [4]).unwrap();
        let cx = CubicalComplex::absolute(&s).unwrap();
        assert_eq!(cx.counts(), vec![4, 4, 1]);
        let cc = cx.chain_complex();
        assert!(cc.boundary_squared_vanishes());
        assert_eq!(cc.euler_characteristic(), 1);
    }

    #[test]
    fn hollow_block_counts() {
        let g = Arc::new(CubicalGrid::cube(3, 0.0, 1.0, 5).unwrap());
        let shell = CellSet::from_centers(&g, |p| {
            let inside = |v: f64| v > 0.2 && v < 0.8;
            let centre = |v: f64| v > 0.4 && v < 0.6;
            p.iter().all(|&v| inside(v)) && !p.iter().all(|&v| centre(v))
        });
        assert_eq!(shell.len(), 26);
        let cx = CubicalComplex::absolute(&shell).unwrap();
        // The solid 3x3x3 block minus the open middle cube keeps every face
        // of the block: 64 vertices, 144 edges, 108 squares, 26 cubes.
        assert_eq!(cx.counts(), vec![64, 144, 108, 26]);
        let cc = cx.chain_complex();
        assert!(cc.boundary_squared_vanishes());
        assert_eq!(cc.euler_characteristic(), 2);
    }

    #[test]
    fn relative_drops_exit_closure() {
        let g = Arc::new(CubicalGrid::cube(1, 0.0, 1.0, 3).unwrap());
        let n = CellSet::full(&g);
        let e = CellSet::from_indices(&g, [0]).unwrap();
        let cx = CubicalComplex::relative(&n, &e).unwrap();
        assert_eq!(cx.counts(), vec![2, 2]);
        assert!(CubicalComplex::relative(&e, &n).is_err());
    }
}
