//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use dissipa::CubicalGrid;

pub fn square(half: f64, n: usize) -> Arc<CubicalGrid> {
    Arc::new(CubicalGrid::cube(2, -half, half, n).expect("valid grid"))
}
