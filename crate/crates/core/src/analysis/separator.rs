use std::sync::Arc;

use serde::Serialize;

use super::{AnalysisOptions, InvariantSetRecord, Role};
use crate::cubegrid::{
    components, diameter, invariant_part, is_isolating, outer_approximation, CellSet, CubicalGrid, MapOptions,
    MultivaluedMap,
};
use crate::dynamics::{integrate, EscapePolicy, ParametrizedFlow, Trajectory};
use crate::error::{Error, Result};
use crate::homology::{conley_index, conley_index_one, homology, GradedGroup};

/// One thinning pass of the separator with a longer flow time.
#[derive(Debug, Clone, Serialize)]
pub struct SharpenStep {
    pub tau: f64,
    pub cells: usize,
    pub isolated: bool,
}

/// The largest invariant set away from the continued attractor.
#[derive(Debug, Clone, Serialize)]
pub struct Separator {
    /// Final (possibly sharpened) cells, with the index of the coarse set.
    pub record: InvariantSetRecord,
    /// Invariant part of `grid \ collar(K)` under the main map.
    #[serde(skip)]
    pub coarse: CellSet,
    pub coarse_cells: usize,
    /// The coarse set stays off the boundary layer of its region.
    pub isolated: bool,
    pub collar: usize,
    pub sharpening: Vec<SharpenStep>,
    /// Why no index was attached, when none was.
    pub index_error: Option<String>,
}

fn sharpen(
    flow: &ParametrizedFlow,
    lambda: f64,
    start: &CellSet,
    region: &CellSet,
    opts: &AnalysisOptions,
) -> Result<(CellSet, Vec<SharpenStep>)> {
    let mut cur = start.clone();
    let mut steps = Vec::new();
    for (i, &tau) in opts.sharpen_taus.iter().enumerate() {
        let domain = cur.collar(opts.sharpen_collar).intersection(region)?;
        let samples = if i + 1 == opts.sharpen_taus.len() { opts.sharpen_final_samples } else { opts.samples_per_axis };
        let mut mo = MapOptions::new(tau).samples(samples).bloat(0).tol(opts.sharpen_tol).domain(domain.clone());
        if let Some(r) = opts.escape_radius {
            mo = mo.policy(EscapePolicy::new(r)?);
        }
        let map = outer_approximation(flow, lambda, start.grid(), &mo)?;
        let (iso, inv) = is_isolating(&map, &domain)?;
        let ok = iso && !inv.is_empty();
        steps.push(SharpenStep { tau, cells: inv.len(), isolated: ok });
        if !ok {
            break;
        }
        cur = inv;
    }
    Ok((cur, steps))
}

/// `C = Inv(grid \ collar(K))` under `map`, its Conley index (two-sided when
/// `reverse_map` is given), and an optional thinning by longer flow times
/// for shape and diameter.
pub fn extract_separator_with(
    flow: &ParametrizedFlow,
    lambda: f64,
    k: &CellSet,
    map: &MultivaluedMap,
    reverse_map: Option<&MultivaluedMap>,
    opts: &AnalysisOptions,
) -> Result<Separator> {
    let region = k.collar(opts.collar).complement();
    let coarse = invariant_part(map, &region)?;
    let isolated = coarse.is_disjoint(&region.boundary_layer())?;
    let mut record = InvariantSetRecord::new(lambda, Role::SeparatingSet, coarse.clone());
    let mut sep = Separator {
        coarse_cells: coarse.len(),
        coarse,
        isolated,
        collar: opts.collar,
        sharpening: Vec::new(),
        index_error: None,
        record: record.clone(),
    };
    if sep.coarse.is_empty() {
        return Ok(sep);
    }
    let index = match reverse_map {
        Some(rev) => conley_index(map, rev, &sep.coarse, opts.pair_collar),
        None => conley_index_one(map, &sep.coarse, opts.pair_collar).map(|(i, _)| i),
    };
    match index {
        Ok(i) => record.index = Some(i),
        Err(e) => sep.index_error = Some(e.to_string()),
    }
    let (cells, steps) = if isolated { sharpen(flow, lambda, &sep.coarse, &region, opts)? } else { (sep.coarse.clone(), Vec::new()) };
    record.diameter = Some(diameter(&cells)?);
    record.cells = cells;
    sep.sharpening = steps;
    sep.record = record;
    Ok(sep)
}

/// Builds the forward and reverse maps at `lambda` and extracts the
/// separator outside `k`.
pub fn extract_separator(
    flow: &ParametrizedFlow,
    lambda: f64,
    k: &InvariantSetRecord,
    grid: &Arc<CubicalGrid>,
    opts: &AnalysisOptions,
) -> Result<Separator> {
    let map = outer_approximation(flow, lambda, grid, &opts.map_options())?;
    let rev = outer_approximation(flow, lambda, grid, &opts.reverse_map_options())?;
    extract_separator_with(flow, lambda, &k.cells, &map, Some(&rev), opts)
}

/// Outcome of the sampled attraction or repulsion check on one side.
#[derive(Debug, Clone, Serialize)]
pub struct SideCheck {
    pub samples: usize,
    pub passed: usize,
    /// Largest entry time into the separator's collar over all samples.
    pub entry_time_bound: Option<f64>,
    /// A few initial conditions that failed.
    pub failures: Vec<Vec<f64>>,
}

impl SideCheck {
    pub fn ok(&self) -> bool {
        self.samples > 0 && self.passed == self.samples
    }
}

/// Item-by-item check that a separator has the shape and dynamics of a
/// coercive family's separating sphere.
#[derive(Debug, Clone, Serialize)]
pub struct CoercivitySignature {
    pub complement_components: usize,
    pub k_in_bounded_component: bool,
    pub separates: bool,
    pub homology: Option<GradedGroup>,
    pub sphere_homology: bool,
    pub outside: Option<SideCheck>,
    pub inside: Option<SideCheck>,
    pub attracts_outside_repels_inside: bool,
    pub diameter: f64,
    /// Separation, shape and dynamics all hold.
    pub valid: bool,
}

/// Every `ceil(len / want)`-th member, so at least `min(len, want)` cells.
fn spread(s: &CellSet, want: usize) -> Vec<usize> {
    let all = s.to_vec();
    if all.is_empty() || want == 0 {
        return Vec::new();
    }
    let stride = all.len().div_ceil(want).max(1);
    let mut picked: Vec<usize> = all.iter().copied().step_by(stride).collect();
    if picked.len() < want.min(all.len()) {
        picked = all.iter().copied().take(want).collect();
    }
    picked
}

fn in_set(s: &CellSet, p: &[f64]) -> bool {
    s.grid().cell_of_point(p).is_some_and(|c| s.contains(c))
}

/// First sample time inside `band` after which the orbit never leaves it.
fn settles_in(traj: &Trajectory, band: &CellSet) -> Option<f64> {
    let mut entry = None;
    for (t, x) in traj.samples() {
        if in_set(band, x) {
            entry.get_or_insert(t);
        } else {
            entry = None;
        }
    }
    if traj.escaped() {
        None
    } else {
        entry
    }
}

fn first_entry(traj: &Trajectory, band: &CellSet) -> Option<f64> {
    traj.samples().find(|(_, x)| in_set(band, x)).map(|(t, _)| t)
}

/// Checks separation, sphere homology, sampled attraction from outside and
/// repulsion inside, and records the diameter.
pub fn coercivity_signature(
    flow: &ParametrizedFlow,
    lambda: f64,
    c: &CellSet,
    k: &CellSet,
    opts: &AnalysisOptions,
) -> Result<CoercivitySignature> {
    if c.is_empty() {
        return Err(Error::EmptySet);
    }
    let grid = c.grid();
    let n = grid.dim();
    let comps = components(&c.complement());
    let bounded: Vec<&CellSet> = comps.iter().filter(|s| !s.touches_grid_edge()).collect();
    let k_in_bounded = bounded.len() == 1 && !k.is_empty() && k.is_subset(bounded[0])?;
    let separates = comps.len() == 2 && k_in_bounded;

    let h = homology(c)?;
    let sphere_homology = h.same_as(&GradedGroup::sphere(n - 1, n));

    let (mut outside, mut inside) = (None, None);
    if separates {
        let policy = match opts.escape_radius {
            Some(r) => EscapePolicy::new(r)?,
            None => EscapePolicy::for_box(grid.lo(), grid.hi()),
        };
        let band = c.collar(opts.attraction_collar);
        let k_near = k.collar(opts.collar);
        let outer = comps.iter().find(|s| s.touches_grid_edge()).expect("two components, one bounded");
        let outer = outer.difference(&band)?;
        let inner = bounded[0].difference(&band)?.difference(&k_near)?;
        let t = opts.attraction_time;

        let mut check = SideCheck { samples: 0, passed: 0, entry_time_bound: None, failures: Vec::new() };
        for cell in spread(&outer, opts.attraction_samples) {
            let x0 = grid.cell_center(cell);
            check.samples += 1;
            let traj = integrate(flow, lambda, &x0, t, &policy, opts.tol)?;
            match settles_in(&traj, &band) {
                Some(te) => {
                    check.passed += 1;
                    check.entry_time_bound = Some(check.entry_time_bound.map_or(te, |b: f64| b.max(te)));
                }
                None if check.failures.len() < 5 => check.failures.push(x0),
                None => {}
            }
        }
        outside = Some(check);

        let mut check = SideCheck { samples: 0, passed: 0, entry_time_bound: None, failures: Vec::new() };
        for cell in spread(&inner, opts.attraction_samples) {
            let x0 = grid.cell_center(cell);
            check.samples += 1;
            let fwd = integrate(flow, lambda, &x0, t, &policy, opts.tol)?;
            // Repelled: the forward orbit ends next to K, away from every
            // collar of C; the backward orbit comes back to the band.
            let leaves = !fwd.escaped() && in_set(&k_near, fwd.final_state());
            let back = integrate(flow, lambda, &x0, -t, &policy, opts.tol)?;
            let approach = if back.escaped() { None } else { first_entry(&back, &band) };
            match approach {
                Some(te) if leaves => {
                    check.passed += 1;
                    check.entry_time_bound = Some(check.entry_time_bound.map_or(-te, |b: f64| b.max(-te)));
                }
                _ if check.failures.len() < 5 => check.failures.push(x0),
                _ => {}
            }
        }
        inside = Some(check);
    }
    let dynamics_ok = outside.as_ref().is_some_and(SideCheck::ok) && inside.as_ref().is_some_and(SideCheck::ok);
    Ok(CoercivitySignature {
        complement_components: comps.len(),
        k_in_bounded_component: k_in_bounded,
        separates,
        homology: Some(h),
        sphere_homology,
        outside,
        inside,
        attracts_outside_repels_inside: dynamics_ok,
        diameter: diameter(c)?,
        valid: separates && sphere_homology && dynamics_ok,
    })
}
