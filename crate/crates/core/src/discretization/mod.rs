//! Uniform per-edge grids, grid functions, and finite-difference assembly.

mod grid;
mod system;

pub use grid::{build_grid, EdgeGrid, EdgeResolution, GridFunction, NetworkGrid, NodeRef, Resolution};
pub(crate) use system::kirchhoff_row;
pub use system::{
    assemble_linear, assemble_linear_with, KirchhoffBranch, LinearCoefficients, RowKind, SparseSystem, TriRow,
    VertexRow,
};
