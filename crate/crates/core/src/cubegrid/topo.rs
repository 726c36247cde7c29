use super::cellset::CellSet;
use crate::error::{Error, Result};

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Face-connected components, ordered by their smallest cell index.
pub fn components(s: &CellSet) -> Vec<CellSet> {
    let grid = s.grid();
    let members = s.to_vec();
    if members.is_empty() {
        return Vec::new();
    }
    // Union-find over positions in `members`; cells are looked up by binary
    // search, so memory stays proportional to the set.
    let pos = |c: usize| members.binary_search(&c).ok();
    let mut parent: Vec<usize> = (0..members.len()).collect();
    for (i, &c) in members.iter().enumerate() {
        // Only the upper neighbor along each axis; the lower one links back.
        let mut rest = c;
        for axis in 0..grid.dim() {
            let d = grid.divisions()[axis];
            let coord = rest % d;
            rest /= d;
            if coord + 1 < d {
                if let Some(j) = pos(c + grid.strides()[axis]) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        // Root at the smaller position keeps ordering stable.
                        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                        parent[hi] = lo;
                    }
                }
            }
        }
    }
    let mut label = vec![usize::MAX; members.len()];
    let mut out: Vec<CellSet> = Vec::new();
    for i in 0..members.len() {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = out.len();
            out.push(CellSet::empty(grid));
        }
        out[label[r]].insert(members[i]);
    }
    out
}

/// Largest distance between two cell centers of `s`.
///
/// A cell lying between two members along some axis has its center at their
/// midpoint and cannot realize the maximum, so only cells missing a neighbor
/// along every axis are compared.
pub fn diameter(s: &CellSet) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    let grid = s.grid();
    let n = grid.dim();
    let candidates: Vec<Vec<f64>> = s
        .iter()
        .filter(|&c| {
            let coords = grid.coords(c);
            (0..n).all(|a| {
                let st = grid.strides()[a];
                let lower = coords[a] > 0 && s.contains(c - st);
                let upper = coords[a] + 1 < grid.divisions()[a] && s.contains(c + st);
                !(lower && upper)
            })
        })
        .map(|c| grid.cell_center(c))
        .collect();
    let mut best = 0.0f64;
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            let d2: f64 = candidates[i].iter().zip(&candidates[j]).map(|(a, b)| (a - b).powi(2)).sum();
            best = best.max(d2);
        }
    }
    Ok(best.sqrt())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::cubegrid::CubicalGrid;

    #[test]
    fn two_blobs() {
        let g = Arc::new(CubicalGrid::cube(2, 0.0, 4.0, 4).unwrap());
        let s = CellSet::from_indices(&g, [0, 1, 4, 10, 11, 15]).unwrap();
        let cs = components(&s);
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].to_vec(), vec![0, 1, 4]);
        assert_eq!(cs[1].to_vec(), vec![10, 11, 15]);
        // Diagonal contact does not connect.
        let d = CellSet::from_indices(&g, [0, 5]).unwrap();
        assert_eq!(components(&d).len(), 2);
        assert!(components(&CellSet::empty(&g)).is_empty());
    }

    #[test]
    fn diameters() {
        let g = Arc::new(CubicalGrid::cube(2, 0.0, 4.0, 4).unwrap());
        assert_eq!(diameter(&CellSet::from_indices(&g, [5]).unwrap()).unwrap(), 0.0);
        let d = diameter(&CellSet::from_indices(&g, [0, 14]).unwrap()).unwrap();
        assert!((d - 13f64.sqrt()).abs() < 1e-12);
        assert_eq!(diameter(&CellSet::empty(&g)), Err(Error::EmptySet));
        let full = diameter(&CellSet::full(&g)).unwrap();
        assert!((full - 18f64.sqrt()).abs() < 1e-12);
    }
}
