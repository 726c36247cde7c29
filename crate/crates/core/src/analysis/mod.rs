//! Family-level verdicts built from the combinatorial machinery: global
//! attractors, uniform dissipativity, continuation, separators, coercivity
//! and polarity.

mod attractor;
mod continuation;
mod pipeline;
mod polarity;
pub mod report;
mod separator;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

pub use attractor::{find_global_attractor, trapping_region, uniform_dissipativity, GlobalAttractor, UniformDissipativity};
pub use continuation::{track_continuation, track_global_attractors, Continuation, GlobalTrack};
pub use pipeline::{separator_pipeline, FamilyVerdict, LambdaReport, PolarVerdict, SeparatorAnalysis};
pub use polarity::{polarity_test, PolarityResult, PolarityWitness};
pub use separator::{coercivity_signature, extract_separator, extract_separator_with, CoercivitySignature, Separator, SideCheck};

use crate::cubegrid::{CellSet, Direction, MapOptions};
use crate::dynamics::EscapePolicy;
use crate::homology::ConleyIndex;

/// Knobs shared by every analysis.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisOptions {
    /// Flow time of the main multivalued map.
    pub tau: f64,
    pub samples_per_axis: usize,
    /// Bloat of the main map; `None` uses the flow's Lipschitz hint or one
    /// layer.
    pub bloat: Option<usize>,
    pub tol: f64,
    pub escape_radius: Option<f64>,
    /// Cells between the continued attractor and separator candidates.
    pub collar: usize,
    /// Minimum collar of index pairs.
    pub pair_collar: usize,
    /// Extra flow times used to thin the separator, longest last.
    pub sharpen_taus: Vec<f64>,
    /// Domain collar around the previous separator at each sharpening step.
    pub sharpen_collar: usize,
    pub sharpen_tol: f64,
    /// Samples per cell edge on the last thinning pass, where sparse samples
    /// leave holes in the thin set.
    pub sharpen_final_samples: usize,
    /// Sample trajectories per side in the attraction check.
    pub attraction_samples: usize,
    /// Time horizon of the attraction check.
    pub attraction_time: f64,
    /// Collar around the separator that attracted orbits must enter.
    pub attraction_collar: usize,
    /// Norm thresholds for the polarity test.
    pub polarity_levels: Vec<f64>,
    /// Time horizon of polarity witnesses in each direction.
    pub polarity_time: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            tau: 0.5,
            samples_per_axis: 2,
            bloat: None,
            tol: 1e-6,
            escape_radius: None,
            collar: 2,
            pair_collar: 2,
            sharpen_taus: Vec::new(),
            sharpen_collar: 3,
            sharpen_tol: 1e-5,
            sharpen_final_samples: 3,
            attraction_samples: 128,
            attraction_time: 400.0,
            attraction_collar: 4,
            polarity_levels: Vec::new(),
            polarity_time: 50.0,
        }
    }
}

impl AnalysisOptions {
    pub fn map_options(&self) -> MapOptions {
        let mut o = MapOptions::new(self.tau).samples(self.samples_per_axis).tol(self.tol);
        o.bloat = self.bloat;
        if let Some(r) = self.escape_radius {
            o.policy = EscapePolicy::new(r).ok();
        }
        o
    }

    pub fn reverse_map_options(&self) -> MapOptions {
        self.map_options().direction(Direction::Reverse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    GlobalAttractorCandidate,
    ContinuedAttractor,
    SeparatingSet,
    AmbientAttractor,
}

/// An invariant set found at one parameter value.
#[derive(Debug, Clone)]
pub struct InvariantSetRecord {
    pub lambda: f64,
    pub role: Role,
    pub cells: CellSet,
    pub index: Option<ConleyIndex>,
    pub diameter: Option<f64>,
    pub basin: Option<CellSet>,
}

impl InvariantSetRecord {
    pub fn new(lambda: f64, role: Role, cells: CellSet) -> Self {
        Self { lambda, role, cells, index: None, diameter: None, basin: None }
    }
}

/// Axis-aligned bounds of the closed cells of `s`.
pub fn bounding_box(s: &CellSet) -> Option<(Vec<f64>, Vec<f64>)> {
    let g = s.grid();
    let mut it = s.iter();
    let first = it.next()?;
    let (mut lo, mut hi) = g.cell_bounds(first);
    for c in it {
        let (l, h) = g.cell_bounds(c);
        for a in 0..g.dim() {
            lo[a] = lo[a].min(l[a]);
            hi[a] = hi[a].max(h[a]);
        }
    }
    Some((lo, hi))
}

impl Serialize for InvariantSetRecord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("lambda", &self.lambda)?;
        m.serialize_entry("role", &self.role)?;
        m.serialize_entry("cells", &self.cells.len())?;
        let bbox = bounding_box(&self.cells);
        m.serialize_entry("bbox_lo", &bbox.as_ref().map(|b| &b.0))?;
        m.serialize_entry("bbox_hi", &bbox.as_ref().map(|b| &b.1))?;
        m.serialize_entry("diameter", &self.diameter)?;
        m.serialize_entry("basin_cells", &self.basin.as_ref().map(CellSet::len))?;
        m.serialize_entry("index", &self.index)?;
        m.end()
    }
}
