//! Epsilon self-join over FP64 points with distance refinement expressed as
//! fixed-shape matrix multiply-accumulate tiles.
//!
//! - [`tile`]: 8x4 / 4x8 / 8x8 fragments with strided load/store and `mma`.
//! - [`kernels`]: tile and scalar squared-distance kernels, chunk norms.
//! - [`grid`]: sparse epsilon grid and candidate enumeration.
//! - [`join`]: batch planning, refinement kernels and the join driver.
//! - [`dataset`]: generators, file formats, dimension reordering.
//! - [`oracle`]: brute-force references used for verification.

pub mod dataset;
pub mod error;
pub mod grid;
pub mod join;
pub mod kernels;
pub mod oracle;
pub mod tile;
pub mod verify;

pub use dataset::{generate, Dataset, Distribution01, GenSpec};
pub use error::{Error, Result};
pub use grid::{CellCoord, GridIndex};
pub use join::{
    run_join, selectivity, self_join, self_join_with, JoinConfig, JoinResult, JoinStats,
    KernelRegistry, Pair,
};
