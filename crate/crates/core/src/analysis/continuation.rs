use std::sync::Arc;

use serde::Serialize;

use super::attractor::attractor_on;
use super::{AnalysisOptions, InvariantSetRecord, Role};
use crate::cubegrid::{diameter, is_isolating, outer_approximation, CellSet, CubicalGrid, MultivaluedMap};
use crate::dynamics::ParametrizedFlow;
use crate::error::{Error, Result};
use crate::homology::{conley_index_one, ConleyIndex};

/// Output of [`track_continuation`].
#[derive(Debug, Clone, Serialize)]
pub struct Continuation {
    /// One record per parameter, ascending; the seed's parameter included.
    pub records: Vec<InvariantSetRecord>,
    /// Parameter at which the grid had to be refined, if any.
    pub refined_at: Option<f64>,
    /// Every recorded index equals the seed's.
    pub index_constant: bool,
}

impl Continuation {
    pub fn at(&self, lambda: f64) -> Option<&InvariantSetRecord> {
        self.records.iter().find(|r| r.lambda == lambda)
    }
}

fn same_index(a: &ConleyIndex, b: &ConleyIndex) -> bool {
    a.cohomological.same_as(&b.cohomological)
}

struct Tracker<'a> {
    flow: &'a ParametrizedFlow,
    opts: &'a AnalysisOptions,
    refined_at: Option<f64>,
}

impl Tracker<'_> {
    fn map_near(&self, lambda: f64, k: &CellSet) -> Result<MultivaluedMap> {
        let domain = k.collar(self.opts.collar + self.opts.pair_collar + 2);
        outer_approximation(self.flow, lambda, k.grid(), &self.opts.map_options().domain(domain))
    }

    /// Continues `k` to `lambda` through `N = collar(k)`, refining once when
    /// `N` does not isolate.
    fn step(&mut self, lambda: f64, k: &CellSet) -> Result<(CellSet, MultivaluedMap)> {
        let width = self.opts.collar;
        if !k.dilation_leaves_grid(width) {
            let n = k.collar(width);
            let map = self.map_near(lambda, k)?;
            let (iso, inv) = is_isolating(&map, &n)?;
            if iso && !inv.is_empty() {
                return Ok((inv, map));
            }
            if self.refined_at.is_none() {
                let fine = Arc::new(k.grid().refine(2)?);
                let kf = k.refine(&fine, 2)?;
                let nf = n.refine(&fine, 2)?;
                let map = self.map_near(lambda, &kf)?;
                let (iso, inv) = is_isolating(&map, &nf)?;
                if iso && !inv.is_empty() {
                    self.refined_at = Some(lambda);
                    return Ok((inv, map));
                }
            }
        }
        Err(Error::ContinuationBroken { lambda })
    }
}

/// Follows the isolated invariant set of `seed` through `lambdas`, moving
/// outward from the seed's parameter in both directions. At each step the
/// previous collar must still isolate; its invariant part becomes the new
/// set.
pub fn track_continuation(
    flow: &ParametrizedFlow,
    lambdas: &[f64],
    seed: &InvariantSetRecord,
    opts: &AnalysisOptions,
) -> Result<Continuation> {
    if seed.cells.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut tr = Tracker { flow, opts, refined_at: None };
    let seed_index = match &seed.index {
        Some(i) => i.clone(),
        None => conley_index_one(&tr.map_near(seed.lambda, &seed.cells)?, &seed.cells, opts.pair_collar)?.0,
    };
    let mut seed_rec = seed.clone();
    seed_rec.role = Role::ContinuedAttractor;
    seed_rec.index = Some(seed_index.clone());
    if seed_rec.diameter.is_none() {
        seed_rec.diameter = Some(diameter(&seed.cells)?);
    }

    let mut sorted: Vec<f64> = lambdas.iter().copied().filter(|l| *l != seed.lambda).collect();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let above: Vec<f64> = sorted.iter().copied().filter(|&l| l > seed.lambda).collect();
    let below: Vec<f64> = sorted.iter().rev().copied().filter(|&l| l < seed.lambda).collect();

    let mut records = vec![seed_rec];
    let mut index_constant = true;
    for branch in [above, below] {
        let mut k = seed.cells.clone();
        for lambda in branch {
            let (next, map) = tr.step(lambda, &k)?;
            let mut rec = InvariantSetRecord::new(lambda, Role::ContinuedAttractor, next.clone());
            rec.diameter = Some(diameter(&next)?);
            match conley_index_one(&map, &next, opts.pair_collar) {
                Ok((idx, _)) => {
                    index_constant &= same_index(&idx, &seed_index);
                    rec.index = Some(idx);
                }
                Err(_) => index_constant = false,
            }
            records.push(rec);
            k = next;
        }
    }
    records.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(Continuation { records, refined_at: tr.refined_at, index_constant })
}

/// Whether the global attractors at consecutive parameters continue one
/// another.
#[derive(Debug, Clone, Serialize)]
pub struct GlobalTrack {
    pub unbroken: bool,
    /// First parameter at which the previous attractor's collar no longer
    /// isolates the new global attractor.
    pub broken_at: Option<f64>,
    pub reason: Option<String>,
    /// `(lambda, cells, diameter)` of each global attractor found.
    pub attractors: Vec<(f64, usize, f64)>,
}

/// Computes the global attractor `A` at each parameter (ascending) and asks
/// whether some collar of the previous `A` isolates exactly the new one.
pub fn track_global_attractors(
    flow: &ParametrizedFlow,
    lambdas: &[f64],
    grid: &Arc<CubicalGrid>,
    opts: &AnalysisOptions,
) -> Result<GlobalTrack> {
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut attractors = Vec::new();
    let mut prev: Option<CellSet> = None;
    for lambda in sorted {
        let map = outer_approximation(flow, lambda, grid, &opts.map_options())?;
        let (record, _) = match attractor_on(flow, lambda, &map, opts) {
            Ok(ga) => ga,
            Err(e @ (Error::NotTrapping { .. } | Error::EmptySet)) => {
                return Ok(GlobalTrack {
                    unbroken: false,
                    broken_at: Some(lambda),
                    reason: Some(format!("no global attractor certified: {e}")),
                    attractors,
                })
            }
            Err(e) => return Err(e),
        };
        let a = record.cells;
        attractors.push((lambda, a.len(), record.diameter.unwrap_or(0.0)));
        if let Some(p) = &prev {
            if !global_continues(p, &map, &a, opts) {
                return Ok(GlobalTrack {
                    unbroken: false,
                    broken_at: Some(lambda),
                    reason: Some(format!(
                        "no collar of the previous global attractor ({} cells) isolates the new one ({} cells)",
                        p.len(),
                        a.len()
                    )),
                    attractors,
                });
            }
        }
        prev = Some(a);
    }
    Ok(GlobalTrack { unbroken: true, broken_at: None, reason: None, attractors })
}

/// Some collar of `prev` (a few widths are tried) isolates exactly `a`
/// under `map`.
pub(crate) fn global_continues(prev: &CellSet, map: &MultivaluedMap, a: &CellSet, opts: &AnalysisOptions) -> bool {
    (opts.collar..opts.collar + 4).any(|w| matches!(is_isolating(map, &prev.collar(w)), Ok((true, inv)) if inv == *a))
}
