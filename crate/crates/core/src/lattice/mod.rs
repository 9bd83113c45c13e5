//! Toroidal lattices at every scale: cells, blocks, paths and polymers.

mod path;
mod polymer;
mod torus;

pub use path::{line_sum, staircase_path, straight_path};
pub use polymer::{CubeGrid, Polymer};
pub use torus::{
    enumerate_cells, Bond, Cells, OrientedBond, Plaquette, Site, TorusSpec, DEFAULT_CELL_CAP,
    PLANES,
};
