use std::sync::Arc;

use serde::Serialize;

use super::{AnalysisOptions, InvariantSetRecord, Role};
use crate::cubegrid::{
    diameter, forward_closure, invariant_part, outer_approximation, CellSet, CubicalGrid, Direction, IndexPair,
    MultivaluedMap,
};
use crate::dynamics::ParametrizedFlow;
use crate::error::{Error, Result};
use crate::homology::{conley_index_one, ConleyIndex};

/// A global attractor candidate with the map and region it was computed on.
#[derive(Debug)]
pub struct GlobalAttractor {
    pub record: InvariantSetRecord,
    pub map: MultivaluedMap,
    /// Forward-invariant region whose invariant part is the attractor.
    pub region: CellSet,
}

/// Forward closure of the starting region: the cells covering the flow's
/// trapping ellipsoid when it has one, the whole grid otherwise. Fails when
/// the closure meets a cell whose image leaves the box.
pub fn trapping_region(flow: &ParametrizedFlow, map: &MultivaluedMap) -> Result<CellSet> {
    let grid = map.grid();
    let start = match flow.trapping_ellipsoid() {
        Some(e) => CellSet::covering(grid, |p| e.contains(p)),
        None => CellSet::full(grid),
    };
    if start.is_empty() {
        return Err(Error::NotTrapping { offending: Vec::new() });
    }
    let w = forward_closure(map, &start, &CellSet::full(grid))?;
    let offending: Vec<usize> = w.iter().filter(|&c| map.is_escaping(c)).collect();
    if !offending.is_empty() {
        return Err(Error::NotTrapping { offending });
    }
    Ok(w)
}

/// `A = Inv(W)` for the trapping region `W` of the time-`tau` map.
pub fn find_global_attractor(
    flow: &ParametrizedFlow,
    lambda: f64,
    grid: &Arc<CubicalGrid>,
    opts: &AnalysisOptions,
) -> Result<GlobalAttractor> {
    let map = outer_approximation(flow, lambda, grid, &opts.map_options())?;
    let (record, region) = attractor_on(flow, lambda, &map, opts)?;
    Ok(GlobalAttractor { record, map, region })
}

/// Global attractor record and trapping region for an existing map.
pub(crate) fn attractor_on(
    flow: &ParametrizedFlow,
    lambda: f64,
    map: &MultivaluedMap,
    opts: &AnalysisOptions,
) -> Result<(InvariantSetRecord, CellSet)> {
    let region = trapping_region(flow, map)?;
    let cells = invariant_part(map, &region)?;
    if cells.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut record = InvariantSetRecord::new(lambda, Role::GlobalAttractorCandidate, cells);
    record.index = Some(attractor_index(map, &record.cells, &region, opts.pair_collar)?);
    record.diameter = Some(diameter(&record.cells)?);
    record.basin = Some(region.clone());
    Ok((record, region))
}

/// `Inv(grid)` as an ambient attractor when the box is not trapping but the
/// invariant part still stays off the box edge.
pub(crate) fn box_attractor(lambda: f64, map: &MultivaluedMap, opts: &AnalysisOptions) -> Result<Option<InvariantSetRecord>> {
    let full = CellSet::full(map.grid());
    let cells = invariant_part(map, &full)?;
    if cells.is_empty() || cells.touches_grid_edge() {
        return Ok(None);
    }
    let mut record = InvariantSetRecord::new(lambda, Role::AmbientAttractor, cells);
    record.index = conley_index_one(map, &record.cells, opts.pair_collar).ok().map(|(i, _)| i);
    record.diameter = Some(diameter(&record.cells)?);
    Ok(Some(record))
}

/// Index of an attractor `a = Inv(w)` for forward-invariant `w`. A collar
/// pair is preferred; when the collar runs into the box edge, `(w, empty)`
/// is itself an index pair.
pub(crate) fn attractor_index(map: &MultivaluedMap, a: &CellSet, w: &CellSet, collar: usize) -> Result<ConleyIndex> {
    match conley_index_one(map, a, collar) {
        Ok((idx, _)) => Ok(idx),
        Err(e) => {
            if !a.is_disjoint(&w.boundary_layer())? {
                return Err(e);
            }
            let pair = IndexPair {
                n: w.clone(),
                exit: CellSet::empty(map.grid()),
                entrance: w.boundary_layer(),
                invariant: a.clone(),
                collar: 0,
            };
            ConleyIndex::from_pair(map.meta().map_or(Direction::Forward, |m| m.direction), &pair)
        }
    }
}

/// Whether one box traps every member of the family on the sampled grid.
#[derive(Debug, Clone, Serialize)]
pub struct UniformDissipativity {
    pub verdict: bool,
    /// The trapping box `(lo, hi)`, when the verdict is true.
    pub witness_box: Option<(Vec<f64>, Vec<f64>)>,
    /// Parameters whose trapping check failed, with offending cell counts.
    pub offending: Vec<(f64, usize)>,
    /// Attractor cell counts per parameter, for the parameters that passed.
    pub attractor_cells: Vec<(f64, usize)>,
}

/// Checks the trapping property of `grid`'s box for every parameter.
pub fn uniform_dissipativity(
    flow: &ParametrizedFlow,
    lambdas: &[f64],
    grid: &Arc<CubicalGrid>,
    opts: &AnalysisOptions,
) -> Result<UniformDissipativity> {
    let mut offending = Vec::new();
    let mut attractor_cells = Vec::new();
    for &lambda in lambdas {
        let map = outer_approximation(flow, lambda, grid, &opts.map_options())?;
        match trapping_region(flow, &map) {
            Ok(w) => attractor_cells.push((lambda, invariant_part(&map, &w)?.len())),
            Err(Error::NotTrapping { offending: cells }) => offending.push((lambda, cells.len())),
            Err(e) => return Err(e),
        }
    }
    let verdict = offending.is_empty() && !lambdas.is_empty();
    let witness_box = verdict.then(|| (grid.lo().to_vec(), grid.hi().to_vec()));
    Ok(UniformDissipativity { verdict, witness_box, offending, attractor_cells })
}
