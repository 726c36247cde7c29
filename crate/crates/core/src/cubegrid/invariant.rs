use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use super::cellset::CellSet;
use super::map::MultivaluedMap;
use crate::error::{Error, Result};

/// Largest subset of `s` in which every cell has both a successor and a
/// predecessor: the cells on bi-infinite itineraries inside `s`. Escaping
/// cells are never included.
pub fn invariant_part(map: &MultivaluedMap, s: &CellSet) -> Result<CellSet> {
    map.check_set(s)?;
    let grid = map.grid();
    let mut alive = s.bits().clone();
    alive.difference_with(&map.escaping().bits().clone());

    let n = grid.len();
    let mut out_deg = vec![0u32; n];
    let mut in_deg = vec![0u32; n];
    for c in alive.ones() {
        for &t in map.image(c) {
            if alive.contains(t as usize) {
                out_deg[c] += 1;
                in_deg[t as usize] += 1;
            }
        }
    }

    let mut queue: VecDeque<usize> = alive.ones().filter(|&c| out_deg[c] == 0 || in_deg[c] == 0).collect();
    let mut queued = FixedBitSet::with_capacity(n);
    for &c in &queue {
        queued.insert(c);
    }
    while let Some(c) = queue.pop_front() {
        alive.set(c, false);
        for &t in map.image(c) {
            let t = t as usize;
            if alive.contains(t) {
                in_deg[t] -= 1;
                if in_deg[t] == 0 && !queued.put(t) {
                    queue.push_back(t);
                }
            }
        }
        for &p in map.predecessors(c) {
            let p = p as usize;
            if alive.contains(p) {
                out_deg[p] -= 1;
                if out_deg[p] == 0 && !queued.put(p) {
                    queue.push_back(p);
                }
            }
        }
    }
    Ok(CellSet::from_bits(grid, alive))
}

/// Whether `Inv(n)` stays off the boundary layer of `n`; returns the
/// invariant part too.
pub fn is_isolating(map: &MultivaluedMap, n: &CellSet) -> Result<(bool, CellSet)> {
    let inv = invariant_part(map, n)?;
    let isolated = inv.is_disjoint(&n.boundary_layer())?;
    Ok((isolated, inv))
}

/// Cells reachable from `start` through images, staying inside `within`.
pub fn forward_closure(map: &MultivaluedMap, start: &CellSet, within: &CellSet) -> Result<CellSet> {
    map.check_set(start)?;
    map.check_set(within)?;
    let mut seen = start.intersection(within)?;
    let mut stack: Vec<usize> = seen.to_vec();
    while let Some(c) = stack.pop() {
        for &t in map.image(c) {
            let t = t as usize;
            if within.contains(t) && !seen.contains(t) {
                seen.insert(t);
                stack.push(t);
            }
        }
    }
    Ok(seen)
}

/// Cells of `n` that reach `target` through images staying inside `n`.
pub fn backward_closure(map: &MultivaluedMap, target: &CellSet, within: &CellSet) -> Result<CellSet> {
    map.check_set(target)?;
    map.check_set(within)?;
    let mut seen = target.intersection(within)?;
    let mut stack: Vec<usize> = seen.to_vec();
    while let Some(c) = stack.pop() {
        for &p in map.predecessors(c) {
            let p = p as usize;
            if within.contains(p) && !seen.contains(p) {
                seen.insert(p);
                stack.push(p);
            }
        }
    }
    Ok(seen)
}

/// Combinatorial isolating block: `n` with its exit set and entrance set.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexPair {
    pub n: CellSet,
    pub exit: CellSet,
    pub entrance: CellSet,
    /// The invariant set the pair was built for.
    pub invariant: CellSet,
    /// Width of the isolating collar `N0 = K + collar`.
    pub collar: usize,
}

/// Short description of an index pair for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairProvenance {
    pub invariant_cells: usize,
    pub n_cells: usize,
    pub exit_cells: usize,
    pub entrance_cells: usize,
    pub collar: usize,
}

impl IndexPair {
    pub fn provenance(&self) -> PairProvenance {
        PairProvenance {
            invariant_cells: self.invariant.len(),
            n_cells: self.n.len(),
            exit_cells: self.exit.len(),
            entrance_cells: self.entrance.len(),
            collar: self.collar,
        }
    }

    /// Cells of `N \ exit` whose image leaves `N` (empty for a valid pair).
    pub fn positive_invariance_violations(&self, map: &MultivaluedMap) -> Vec<usize> {
        self.n
            .iter()
            .filter(|&c| !self.exit.contains(c))
            .filter(|&c| map.is_escaping(c) || map.image(c).iter().any(|&t| !self.n.contains(t as usize)))
            .collect()
    }
}

/// Index pair for the isolated invariant set `k`.
///
/// `N0` is `k` plus at least `collar` layers, widened until it holds the
/// image of `k`, and must satisfy `Inv(N0) = k`. Then `N` is the forward
/// closure of `k` inside `N0`, and the exit set is the forward closure
/// (inside `N`) of the cells whose image leaves `N`. The pair is rejected
/// when the exit set reaches `k`.
pub fn index_pair(map: &MultivaluedMap, k: &CellSet, collar: usize) -> Result<IndexPair> {
    map.check_set(k)?;
    if collar == 0 {
        return Err(Error::InvalidArgument("index pair collar must be at least one cell".into()));
    }
    let image = map.image_of(k)?;
    let mut width = collar;
    let mut n0 = k.collar(width);
    loop {
        if k.dilation_leaves_grid(width) {
            return Err(Error::NotIsolated("the isolating collar reaches the edge of the grid".into()));
        }
        if image.is_subset(&n0)? {
            break;
        }
        width += 1;
        n0 = n0.dilate(1);
    }
    let collar = width;
    let inv = invariant_part(map, &n0)?;
    if inv != *k {
        return Err(Error::NotIsolated(format!(
            "invariant part of the collar has {} cells, expected {}",
            inv.len(),
            k.len()
        )));
    }

    let n = forward_closure(map, k, &n0)?;
    let mut exit = CellSet::empty(map.grid());
    for c in n.iter() {
        if map.is_escaping(c) || map.image(c).iter().any(|&t| !n.contains(t as usize)) {
            exit.insert(c);
        }
    }
    let exit = forward_closure(map, &exit, &n)?;
    if !exit.is_disjoint(k)? {
        return Err(Error::NotIsolated("the exit set reaches the invariant set".into()));
    }
    let entrance = n.boundary_layer().difference(&exit)?;
    Ok(IndexPair { n, exit, entrance, invariant: k.clone(), collar })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::cubegrid::CubicalGrid;

    fn line_map(images: Vec<Vec<usize>>) -> MultivaluedMap {
        let g = Arc::new(CubicalGrid::cube(1, 0.0, 1.0, images.len()).unwrap());
        let esc: Vec<bool> = images.iter().map(|i| i.is_empty()).collect();
        MultivaluedMap::from_images(&g, images, &esc).unwrap()
    }

    #[test]
    fn cycle_survives_tail_is_pruned() {
        // 0 -> 1 -> 2 -> 1, 3 -> 3, 4 escapes.
        let m = line_map(vec![vec![1], vec![2], vec![1], vec![3], vec![]]);
        let all = CellSet::full(m.grid());
        assert_eq!(invariant_part(&m, &all).unwrap().to_vec(), vec![1, 2, 3]);
        let sub = CellSet::from_indices(m.grid(), [0, 1, 3]).unwrap();
        assert_eq!(invariant_part(&m, &sub).unwrap().to_vec(), vec![3]);
        assert!(invariant_part(&m, &CellSet::empty(m.grid())).unwrap().is_empty());
    }

    #[test]
    fn attracting_point_has_empty_exit() {
        // 1-D sink toward cell 4 on 9 cells.
        let imgs = (0..9).map(|i: usize| if i < 4 { vec![i + 1] } else if i > 4 { vec![i - 1] } else { vec![4] }).collect();
        let m = line_map(imgs);
        let k = CellSet::from_indices(m.grid(), [4]).unwrap();
        let p = index_pair(&m, &k, 2).unwrap();
        assert!(p.exit.is_empty());
        assert_eq!(p.n.to_vec(), vec![4]);
        assert!(p.positive_invariance_violations(&m).is_empty());
    }

    #[test]
    fn repelling_point_exits_on_both_sides() {
        let imgs = (0..9).map(|i: usize| if i < 4 { vec![i.saturating_sub(1)] } else if i > 4 { vec![(i + 1).min(8)] } else { vec![3, 4, 5] }).collect();
        let m = line_map(imgs);
        let k = CellSet::from_indices(m.grid(), [4]).unwrap();
        let p = index_pair(&m, &k, 2).unwrap();
        assert_eq!(p.n.to_vec(), vec![2, 3, 4, 5, 6]);
        assert_eq!(p.exit.to_vec(), vec![2, 6]);
        assert!(p.entrance.is_empty());
        assert!(p.positive_invariance_violations(&m).is_empty());
    }

    #[test]
    fn rejects_sets_at_the_edge() {
        let m = line_map(vec![vec![0], vec![0], vec![1]]);
        let k = CellSet::from_indices(m.grid(), [0]).unwrap();
        assert!(matches!(index_pair(&m, &k, 1), Err(Error::NotIsolated(_))));
    }
}
