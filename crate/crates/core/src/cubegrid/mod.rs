//! Cubical grids, cell sets, and the combinatorial dynamics built on them.

mod cellset;
mod grid;
pub mod invariant;
pub mod io;
pub mod map;
pub mod topo;

pub use cellset::CellSet;
pub use grid::CubicalGrid;
pub use invariant::{backward_closure, forward_closure, index_pair, invariant_part, is_isolating, IndexPair, PairProvenance};
pub use map::{auto_bloat, outer_approximation, Direction, MapMeta, MapOptions, MultivaluedMap};
pub use topo::{components, diameter};
