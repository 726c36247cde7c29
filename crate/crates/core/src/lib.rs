//! Combinatorial Conley-index analysis of parametrized dissipative flows.
//!
//! The pipeline: a [`ParametrizedFlow`] is discretized on a [`CubicalGrid`]
//! into a [`MultivaluedMap`]; invariant parts, index pairs and components are
//! computed on [`CellSet`]s; integer (co)homology of index pairs gives Conley
//! indices; the [`analysis`] module turns all of it into family-level
//! verdicts (global attractors, continuation, separators, polarity).

pub mod analysis;
pub mod cubegrid;
pub mod dynamics;
pub mod error;
pub mod homology;

pub use cubegrid::{CellSet, CubicalGrid, IndexPair, MapOptions, MultivaluedMap};
pub use dynamics::{EscapePolicy, ParametrizedFlow, Trajectory};
pub use error::{Error, Result};
pub use homology::{ConleyIndex, GradedGroup};
