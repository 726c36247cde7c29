//! Integer (co)homology of cubical pairs and Conley indices.

mod complex;
mod conley;
mod exact;
mod group;
mod reduce;

pub use complex::{ChainComplex, CubicalComplex};
pub use conley::{conley_index, conley_index_one, ConleyIndex};
pub use exact::{check_exact_sequence, ExactnessVerdict, SequenceLabels};
pub use group::{GradedGroup, Group};
pub use reduce::{homology_of, smith_normal_form};

use crate::cubegrid::{CellSet, IndexPair};
use crate::error::{Error, Result};

/// `H_*(N, exit)` of an index pair.
pub fn relative_homology(pair: &IndexPair) -> Result<GradedGroup> {
    relative_homology_sets(&pair.n, &pair.exit)
}

/// `H_*(|n|, |exit|)` for cell sets with `exit` inside `n`.
pub fn relative_homology_sets(n: &CellSet, exit: &CellSet) -> Result<GradedGroup> {
    let cx = CubicalComplex::relative(n, exit)?;
    Ok(homology_of(&cx.chain_complex()))
}

/// Homology of the union of the closed cells of `s`.
pub fn homology(s: &CellSet) -> Result<GradedGroup> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    relative_homology_sets(s, &CellSet::empty(s.grid()))
}
