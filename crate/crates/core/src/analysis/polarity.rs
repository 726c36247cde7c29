use std::sync::Arc;

use serde::Serialize;

use super::attractor::find_global_attractor;
use super::continuation::track_continuation;
use super::AnalysisOptions;
use crate::cubegrid::{backward_closure, invariant_part, outer_approximation, CellSet, CubicalGrid, MultivaluedMap};
use crate::dynamics::{circumradius, integrate, EscapePolicy, ParametrizedFlow, Trajectory};
use crate::error::{Error, Result};

/// A bounded orbit whose backward tail stays beyond norm `level`.
#[derive(Debug, Clone, Serialize)]
pub struct PolarityWitness {
    pub lambda: f64,
    pub level: f64,
    pub x0: Vec<f64>,
    #[serde(skip)]
    pub trajectory: Trajectory,
    /// Every sample at or before this (negative) time has norm above `level`.
    pub t_lambda: f64,
    pub min_tail_norm: f64,
    pub t_span: (f64, f64),
}

impl PolarityWitness {
    /// Recomputes the tail condition from the stored samples.
    pub fn tail_exceeds_level(&self) -> bool {
        self.t_lambda < 0.0
            && self
                .trajectory
                .samples()
                .filter(|(t, _)| *t <= self.t_lambda)
                .all(|(_, x)| norm(x) > self.level)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct PolarityResult {
    pub verdict: bool,
    /// For each level, the largest parameter below which every sampled
    /// parameter has a witness.
    pub lambda_hat: Vec<(f64, Option<f64>)>,
    pub witnesses: Vec<PolarityWitness>,
    /// `(lambda, level)` pairs without a witness.
    pub missing: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

fn inside_box(grid: &CubicalGrid, x: &[f64]) -> bool {
    x.iter().enumerate().all(|(a, &v)| v >= grid.lo()[a] && v <= grid.hi()[a])
}

/// Integrates from `x0` both ways and keeps the orbit if it stays in the box
/// and its backward part ends beyond `level`.
fn witness_from(
    flow: &ParametrizedFlow,
    lambda: f64,
    level: f64,
    x0: Vec<f64>,
    grid: &CubicalGrid,
    policy: &EscapePolicy,
    opts: &AnalysisOptions,
) -> Result<Option<PolarityWitness>> {
    let back = integrate(flow, lambda, &x0, -opts.polarity_time, policy, opts.tol)?;
    if back.escaped() || back.samples().any(|(_, x)| !inside_box(grid, x)) {
        return Ok(None);
    }
    // Walk backward from t = 0; `t_lambda` is the latest time after which
    // (going back) the norm never drops to `level`.
    let mut t_lambda = None;
    for (t, x) in back.samples().skip(1) {
        if norm(x) > level {
            t_lambda.get_or_insert(t);
        } else {
            t_lambda = None;
        }
    }
    let Some(t_lambda) = t_lambda else { return Ok(None) };
    let fwd = integrate(flow, lambda, &x0, opts.polarity_time, policy, opts.tol)?;
    if fwd.escaped() || fwd.samples().any(|(_, x)| !inside_box(grid, x)) {
        return Ok(None);
    }
    let trajectory = Trajectory::join(&back, &fwd)?;
    let min_tail_norm =
        trajectory.samples().filter(|(t, _)| *t <= t_lambda).map(|(_, x)| norm(x)).fold(f64::INFINITY, f64::min);
    let t_span = (trajectory.times()[0], trajectory.final_time());
    Ok(Some(PolarityWitness { lambda, level, x0, trajectory, t_lambda, min_tail_norm, t_span }))
}

/// Searches for witnesses at one parameter, given the main map and the
/// continued attractor.
pub(crate) fn witnesses_at(
    flow: &ParametrizedFlow,
    lambda: f64,
    map: &MultivaluedMap,
    k: &CellSet,
    levels: &[f64],
    opts: &AnalysisOptions,
) -> Result<Vec<(f64, Option<PolarityWitness>)>> {
    let grid = map.grid();
    let policy = match opts.escape_radius {
        Some(r) => EscapePolicy::new(r)?,
        None => EscapePolicy::for_box(grid.lo(), grid.hi()),
    };
    let region = k.collar(opts.collar).complement();
    let c = invariant_part(map, &region)?;
    if c.is_empty() {
        return Ok(levels.iter().map(|&l| (l, None)).collect());
    }
    let reach = backward_closure(map, &c, &region)?;
    let mut by_norm: Vec<(f64, usize)> = reach.iter().map(|i| (norm(&grid.cell_center(i)), i)).collect();
    by_norm.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut out = Vec::new();
    for &level in levels {
        let mut found = None;
        for &(_, cell) in by_norm.iter().filter(|(r, _)| *r > level).take(64) {
            if let Some(w) = witness_from(flow, lambda, level, grid.cell_center(cell), grid, &policy, opts)? {
                found = Some(w);
                break;
            }
        }
        out.push((level, found));
    }
    Ok(out)
}

/// Turns per-parameter witness searches into the verdict: for every level
/// the parameters with witnesses must include all sampled parameters up to
/// some positive threshold.
pub(crate) fn assemble(
    mut per_lambda: Vec<(f64, Vec<(f64, Option<PolarityWitness>)>)>,
    levels: &[f64],
    notes: Vec<String>,
) -> PolarityResult {
    per_lambda.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut witnesses = Vec::new();
    let mut missing = Vec::new();
    let mut lambda_hat = Vec::new();
    for (li, &level) in levels.iter().enumerate() {
        let mut hat = None;
        let mut prefix = true;
        for (lambda, found) in &per_lambda {
            let has = found.get(li).is_some_and(|f| f.1.is_some());
            if !has {
                missing.push((*lambda, level));
                prefix = false;
            } else if prefix {
                hat = Some(*lambda);
            }
        }
        lambda_hat.push((level, hat));
    }
    for (_, found) in per_lambda {
        witnesses.extend(found.into_iter().filter_map(|f| f.1));
    }
    let verdict = !levels.is_empty() && lambda_hat.iter().all(|(_, h)| h.is_some());
    PolarityResult { verdict, lambda_hat, witnesses, missing, notes }
}

/// Polarity of the family on the sampled parameters `lambdas` above the
/// bottom of its range. The continued attractor `K` is tracked from the
/// global attractor at the bottom of the range.
pub fn polarity_test(
    flow: &ParametrizedFlow,
    lambdas: &[f64],
    levels: &[f64],
    grid: &Arc<CubicalGrid>,
    opts: &AnalysisOptions,
) -> Result<PolarityResult> {
    let max_level = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_level >= circumradius(grid.lo(), grid.hi()) {
        return Err(Error::InvalidArgument(format!("level {max_level} does not fit inside the grid box")));
    }
    let bottom = flow.param_range().0;
    let mut small: Vec<f64> = lambdas.iter().copied().filter(|&l| l > bottom).collect();
    small.sort_by(f64::total_cmp);
    small.dedup();
    let seed = find_global_attractor(flow, bottom, grid, opts)?.record;
    let mut notes = Vec::new();
    let track = match track_continuation(flow, &small, &seed, opts) {
        Ok(t) => Some(t),
        Err(e) => {
            notes.push(format!("continued attractor unavailable: {e}"));
            None
        }
    };
    let mut per_lambda = Vec::new();
    for &lambda in &small {
        let Some(k) = track.as_ref().and_then(|t| t.at(lambda)) else {
            per_lambda.push((lambda, levels.iter().map(|&l| (l, None)).collect()));
            continue;
        };
        let kg = k.cells.grid().clone();
        let map = outer_approximation(flow, lambda, &kg, &opts.map_options())?;
        per_lambda.push((lambda, witnesses_at(flow, lambda, &map, &k.cells, levels, opts)?));
    }
    Ok(assemble(per_lambda, levels, notes))
}
