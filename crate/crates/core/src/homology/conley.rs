use serde::Serialize;

use super::group::GradedGroup;
use super::relative_homology;
use crate::cubegrid::{index_pair, is_isolating, Direction, IndexPair, MultivaluedMap, PairProvenance};
use crate::error::{Error, Result};
use crate::CellSet;

/// Conley index of an isolated invariant set, as (co)homology of an index
/// pair.
#[derive(Debug, Clone, Serialize)]
pub struct ConleyIndex {
    pub direction: Direction,
    pub homological: GradedGroup,
    pub cohomological: GradedGroup,
    pub pair: PairProvenance,
    /// Index of the same set under the reversed map, when computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reverse: Option<Box<ConleyIndex>>,
    /// Ranks of `CH^n` forward vs `CH_0` reverse and `CH^0` forward vs
    /// `CH_n` reverse agree.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_duality: Option<bool>,
}

impl ConleyIndex {
    /// Zero cohomology in every degree, in both directions when the reverse
    /// index is present.
    pub fn is_trivial(&self) -> bool {
        self.cohomological.is_trivial() && self.reverse.as_ref().map_or(true, |r| r.cohomological.is_trivial())
    }

    /// Index read off an already built pair.
    pub fn from_pair(direction: Direction, pair: &IndexPair) -> Result<Self> {
        let homological = relative_homology(pair)?;
        let cohomological = homological.cohomology();
        Ok(Self { direction, homological, cohomological, pair: pair.provenance(), reverse: None, time_duality: None })
    }
}

fn direction_of(map: &MultivaluedMap, fallback: Direction) -> Direction {
    map.meta().map_or(fallback, |m| m.direction)
}

/// Index of `k` under a single map, with an index pair of the given collar.
pub fn conley_index_one(map: &MultivaluedMap, k: &CellSet, collar: usize) -> Result<(ConleyIndex, IndexPair)> {
    let pair = index_pair(map, k, collar)?;
    let idx = ConleyIndex::from_pair(direction_of(map, Direction::Forward), &pair)?;
    Ok((idx, pair))
}

/// Forward index of `k` together with the index under `reverse_map`.
///
/// Combinatorial invariant parts depend on the direction, so the reverse
/// index is taken for `Inv(N)` under the reverse map, where `N` is the
/// narrowest collar of `k` (at least `collar` wide) that isolates it.
pub fn conley_index(
    map: &MultivaluedMap,
    reverse_map: &MultivaluedMap,
    k: &CellSet,
    collar: usize,
) -> Result<ConleyIndex> {
    let (mut fwd, _) = conley_index_one(map, k, collar)?;
    let k_rev = reverse_invariant_set(reverse_map, k, collar)?;
    let pair = index_pair(reverse_map, &k_rev, collar)?;
    let rev = ConleyIndex::from_pair(direction_of(reverse_map, Direction::Reverse), &pair)?;
    let n = map.grid().dim();
    let dual = fwd.cohomological.rank(n) == rev.homological.rank(0)
        && fwd.cohomological.rank(0) == rev.homological.rank(n);
    fwd.time_duality = Some(dual);
    fwd.reverse = Some(Box::new(rev));
    Ok(fwd)
}

fn reverse_invariant_set(reverse_map: &MultivaluedMap, k: &CellSet, collar: usize) -> Result<CellSet> {
    let mut width = collar;
    let mut n = k.collar(width);
    while !k.dilation_leaves_grid(width) {
        let (isolated, inv) = is_isolating(reverse_map, &n)?;
        if isolated && !inv.is_empty() {
            return Ok(inv);
        }
        width += 1;
        n = n.dilate(1);
    }
    Err(Error::NotIsolated("no collar of K isolates an invariant set of the reverse map".into()))
}
