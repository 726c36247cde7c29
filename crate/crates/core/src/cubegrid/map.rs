use std::fmt;
use std::sync::{Arc, OnceLock};

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::Serialize;

use super::cellset::CellSet;
use super::grid::CubicalGrid;
use crate::dynamics::{EscapePolicy, IntegratorSettings, ParametrizedFlow, Stepper};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Debug, Clone)]
pub struct MapOptions {
    /// Flow time of the discretized map.
    pub tau: f64,
    /// Sample points per cell edge, corners included.
    pub samples_per_axis: usize,
    /// Chebyshev layers added around every image. `None` derives it from the
    /// flow's Lipschitz hint, or uses one layer without a hint.
    pub bloat: Option<usize>,
    /// Integrator tolerance for the sample orbits.
    pub tol: f64,
    /// Escape ball; `None` uses twice the box circumradius.
    pub policy: Option<EscapePolicy>,
    pub direction: Direction,
    /// Only cells of this set are integrated; the rest are marked escaping
    /// and unevaluated.
    pub domain: Option<CellSet>,
}

impl MapOptions {
    pub fn new(tau: f64) -> Self {
        Self { tau, samples_per_axis: 2, bloat: None, tol: 1e-6, policy: None, direction: Direction::Forward, domain: None }
    }

    pub fn samples(mut self, s: usize) -> Self {
        self.samples_per_axis = s;
        self
    }

    pub fn bloat(mut self, b: usize) -> Self {
        self.bloat = Some(b);
        self
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn policy(mut self, p: EscapePolicy) -> Self {
        self.policy = Some(p);
        self
    }

    pub fn direction(mut self, d: Direction) -> Self {
        self.direction = d;
        self
    }

    pub fn domain(mut self, d: CellSet) -> Self {
        self.domain = Some(d);
        self
    }

    pub fn reversed(&self) -> Self {
        let mut o = self.clone();
        o.direction = match self.direction {
            Direction::Forward => Direction::Reverse,
            Direction::Reverse => Direction::Forward,
        };
        o
    }
}

/// Parameters a map was built with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapMeta {
    pub lambda: f64,
    pub tau: f64,
    pub samples_per_axis: usize,
    pub bloat: usize,
    pub tol: f64,
    pub escape_radius: f64,
    pub direction: Direction,
}

/// Cell-to-cell-set map over a grid, plus an escape sink.
pub struct MultivaluedMap {
    grid: Arc<CubicalGrid>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    escaping: FixedBitSet,
    failed: FixedBitSet,
    unevaluated: FixedBitSet,
    preds: OnceLock<(Vec<usize>, Vec<u32>)>,
    meta: Option<MapMeta>,
}

impl fmt::Debug for MultivaluedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultivaluedMap")
            .field("cells", &self.grid.len())
            .field("edges", &self.targets.len())
            .field("escaping", &self.escaping.count_ones(..))
            .field("meta", &self.meta)
            .finish()
    }
}

impl MultivaluedMap {
    /// A map from explicit images. Cells with an empty image must be escaping.
    pub fn from_images(grid: &Arc<CubicalGrid>, images: Vec<Vec<usize>>, escaping: &[bool]) -> Result<Self> {
        let n = grid.len();
        if images.len() != n || escaping.len() != n {
            return Err(Error::InvalidArgument(format!("expected {n} images and escape flags")));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut esc = FixedBitSet::with_capacity(n);
        offsets.push(0);
        for (i, mut img) in images.into_iter().enumerate() {
            img.sort_unstable();
            img.dedup();
            if img.iter().any(|&j| j >= n) {
                return Err(Error::InvalidArgument(format!("image of cell {i} leaves the grid")));
            }
            if img.is_empty() && !escaping[i] {
                return Err(Error::InvalidArgument(format!("cell {i} has an empty image but is not escaping")));
            }
            esc.set(i, escaping[i]);
            targets.extend(img.into_iter().map(|j| j as u32));
            offsets.push(targets.len());
        }
        Ok(Self {
            grid: Arc::clone(grid),
            offsets,
            targets,
            escaping: esc,
            failed: FixedBitSet::with_capacity(n),
            unevaluated: FixedBitSet::with_capacity(n),
            preds: OnceLock::new(),
            meta: None,
        })
    }

    pub fn grid(&self) -> &Arc<CubicalGrid> {
        &self.grid
    }

    pub fn meta(&self) -> Option<&MapMeta> {
        self.meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Image of a cell inside the grid, sorted ascending.
    #[inline]
    pub fn image(&self, cell: usize) -> &[u32] {
        &self.targets[self.offsets[cell]..self.offsets[cell + 1]]
    }

    #[inline]
    pub fn is_escaping(&self, cell: usize) -> bool {
        self.escaping.contains(cell)
    }

    /// Cells whose sample orbits hit an integrator error.
    pub fn is_failed(&self, cell: usize) -> bool {
        self.failed.contains(cell)
    }

    pub fn is_evaluated(&self, cell: usize) -> bool {
        !self.unevaluated.contains(cell)
    }

    pub fn escaping(&self) -> CellSet {
        CellSet::from_bits(&self.grid, self.escaping.clone())
    }

    pub fn failed(&self) -> CellSet {
        CellSet::from_bits(&self.grid, self.failed.clone())
    }

    /// Cells whose image contains `cell`, ascending.
    pub fn predecessors(&self, cell: usize) -> &[u32] {
        let (off, src) = self.preds.get_or_init(|| self.build_predecessors());
        &src[off[cell]..off[cell + 1]]
    }

    fn build_predecessors(&self) -> (Vec<usize>, Vec<u32>) {
        let n = self.len();
        let mut counts = vec![0usize; n + 1];
        for &t in &self.targets {
            counts[t as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut src = vec![0u32; self.targets.len()];
        for c in 0..n {
            for &t in self.image(c) {
                src[fill[t as usize]] = c as u32;
                fill[t as usize] += 1;
            }
        }
        (counts, src)
    }

    /// Union of the images of `set` (the escape sink is not a cell).
    pub fn image_of(&self, set: &CellSet) -> Result<CellSet> {
        if !set.grid().as_ref().eq(self.grid.as_ref()) {
            return Err(Error::GridMismatch);
        }
        let mut out = CellSet::empty(&self.grid);
        for c in set.iter() {
            for &t in self.image(c) {
                out.insert(t as usize);
            }
        }
        Ok(out)
    }

    pub(crate) fn check_set(&self, set: &CellSet) -> Result<()> {
        if Arc::ptr_eq(set.grid(), &self.grid) || **set.grid() == *self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

const ESCAPED: u32 = u32::MAX;
const FAILED: u32 = u32::MAX - 1;
const UNUSED: u32 = u32::MAX - 2;

/// Sufficient bloat from a Lipschitz bound: `ceil(Lip * tau * diag / side)`.
pub fn auto_bloat(lipschitz: f64, tau: f64, grid: &CubicalGrid) -> usize {
    let side = (0..grid.dim()).map(|a| grid.cell_size(a)).fold(f64::INFINITY, f64::min);
    (lipschitz * tau * grid.cell_diagonal() / side).ceil() as usize
}

/// Combinatorial outer approximation of the time-`tau` map of `flow` at
/// `lambda`: every cell maps to the cells hit by its sample orbits, fattened
/// by `bloat` layers.
///
/// Samples form one lattice shared by neighboring cells, so each point is
/// integrated once. Work is split across the rayon pool; the result does not
/// depend on the number of workers.
pub fn outer_approximation(
    flow: &ParametrizedFlow,
    lambda: f64,
    grid: &Arc<CubicalGrid>,
    opts: &MapOptions,
) -> Result<MultivaluedMap> {
    let n = grid.dim();
    if flow.dim() != n {
        return Err(Error::InvalidArgument(format!("flow dimension {} differs from grid dimension {n}", flow.dim())));
    }
    if !(opts.tau.is_finite() && opts.tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau {} must be positive", opts.tau)));
    }
    if opts.samples_per_axis < 2 {
        return Err(Error::InvalidArgument("samples_per_axis must be at least 2".into()));
    }
    if !flow.contains_param(lambda) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside the family's parameter range")));
    }
    let policy = opts.policy.unwrap_or_else(|| EscapePolicy::for_box(grid.lo(), grid.hi()));
    policy.validate_for_box(grid.lo(), grid.hi())?;
    if let Some(d) = &opts.domain {
        if **d.grid() != **grid {
            return Err(Error::GridMismatch);
        }
    }
    let bloat = match (opts.bloat, flow.lipschitz_hint()) {
        (Some(b), _) => b,
        (None, Some(lip)) => auto_bloat(lip, opts.tau, grid),
        (None, None) => 1,
    };
    let field = match opts.direction {
        Direction::Forward => flow.clone(),
        Direction::Reverse => flow.reversed(),
    };
    let settings = IntegratorSettings::with_tol(opts.tol);

    // Lattice of sample points: (s - 1) * d + 1 per axis.
    let s = opts.samples_per_axis;
    let lat_dims: Vec<usize> = grid.divisions().iter().map(|d| (s - 1) * d + 1).collect();
    let mut lat_strides = Vec::with_capacity(n);
    let mut lat_len = 1usize;
    for &m in &lat_dims {
        lat_strides.push(lat_len);
        lat_len = lat_len
            .checked_mul(m)
            .ok_or_else(|| Error::InvalidArgument("sample lattice too large".into()))?;
    }
    let spacing: Vec<f64> = (0..n).map(|a| grid.cell_size(a) / (s - 1) as f64).collect();

    // Offsets of a cell's samples relative to its lowest lattice point.
    let mut local = Vec::with_capacity(s.pow(n as u32));
    let mut cur = vec![0usize; n];
    loop {
        local.push(cur.iter().zip(&lat_strides).map(|(c, st)| c * st).sum::<usize>());
        let mut a = 0;
        while a < n && cur[a] + 1 == s {
            cur[a] = 0;
            a += 1;
        }
        if a == n {
            break;
        }
        cur[a] += 1;
    }
    let base_of = |cell: usize| -> usize {
        let mut rest = cell;
        let mut b = 0;
        for a in 0..n {
            let d = grid.divisions()[a];
            b += (rest % d) * (s - 1) * lat_strides[a];
            rest /= d;
        }
        b
    };

    let mut needed = FixedBitSet::with_capacity(lat_len);
    match &opts.domain {
        None => needed.insert_range(..),
        Some(d) => {
            for c in d.iter() {
                let b = base_of(c);
                for &o in &local {
                    needed.insert(b + o);
                }
            }
        }
    }
    let points: Vec<usize> = needed.ones().collect();

    const CHUNK: usize = 256;
    let results: Vec<Vec<(u32, u64)>> = points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut stepper = Stepper::new(n);
            let mut x = vec![0.0; n];
            let mut out = Vec::with_capacity(chunk.len());
            for &p in chunk {
                let mut rest = p;
                for a in 0..n {
                    let k = rest % lat_dims[a];
                    rest /= lat_dims[a];
                    x[a] = grid.lo()[a] + k as f64 * spacing[a];
                }
                let code = match stepper.advance(&field, lambda, &mut x, opts.tau, &policy, &settings, |_, _| {}) {
                    Ok(o) if o.escaped => (ESCAPED, 0),
                    Ok(_) => grid.locate(&x).map_or((ESCAPED, 0), |(c, m)| (c as u32, m)),
                    Err(_) => (FAILED, 0),
                };
                out.push(code);
            }
            out
        })
        .collect();
    let mut endpoint = vec![(UNUSED, 0u64); lat_len];
    for (p, code) in points.iter().zip(results.into_iter().flatten()) {
        endpoint[*p] = code;
    }

    let len = grid.len();
    let evaluated: Option<&CellSet> = opts.domain.as_ref();
    let per_cell: Vec<(Vec<u32>, u8)> = (0..len)
        .into_par_iter()
        .with_min_len(512)
        .map(|cell| {
            if let Some(d) = evaluated {
                if !d.contains(cell) {
                    return (Vec::new(), 4);
                }
            }
            let b = base_of(cell);
            let mut hits: Vec<u32> = Vec::with_capacity(local.len());
            let mut flags = 0u8;
            for &o in &local {
                match endpoint[b + o] {
                    (ESCAPED, _) => flags |= 1,
                    (FAILED, _) => flags |= 1 | 2,
                    // A point on a face shared with the source cell stays
                    // in the source cell.
                    (c, m) if grid.shares_lower_faces(c as usize, m, cell) => hits.push(cell as u32),
                    (c, _) => hits.push(c),
                }
            }
            hits.sort_unstable();
            hits.dedup();
            if bloat > 0 {
                let mut ball = Vec::new();
                let mut fat = Vec::with_capacity(hits.len() * (2 * bloat + 1).pow(n as u32));
                for &h in &hits {
                    ball.clear();
                    if grid.chebyshev_ball(h as usize, bloat, &mut ball) {
                        flags |= 1;
                    }
                    fat.extend(ball.iter().map(|&c| c as u32));
                }
                fat.sort_unstable();
                fat.dedup();
                hits = fat;
            }
            (hits, flags)
        })
        .collect();

    let mut offsets = Vec::with_capacity(len + 1);
    let mut targets = Vec::with_capacity(per_cell.iter().map(|(h, _)| h.len()).sum());
    let mut escaping = FixedBitSet::with_capacity(len);
    let mut failed = FixedBitSet::with_capacity(len);
    let mut unevaluated = FixedBitSet::with_capacity(len);
    offsets.push(0);
    for (cell, (hits, flags)) in per_cell.into_iter().enumerate() {
        if flags & 4 != 0 {
            unevaluated.insert(cell);
            escaping.insert(cell);
        }
        if flags & 1 != 0 || hits.is_empty() {
            escaping.insert(cell);
        }
        if flags & 2 != 0 {
            failed.insert(cell);
        }
        targets.extend(hits);
        offsets.push(targets.len());
    }

    Ok(MultivaluedMap {
        grid: Arc::clone(grid),
        offsets,
        targets,
        escaping,
        failed,
        unevaluated,
        preds: OnceLock::new(),
        meta: Some(MapMeta {
            lambda,
            tau: opts.tau,
            samples_per_axis: s,
            bloat,
            tol: opts.tol,
            escape_radius: policy.radius,
            direction: opts.direction,
        }),
    })
}
