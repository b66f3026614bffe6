//! Egocentric perception and allocentric memory.
//!
//! A planar 90-degree range scan substitutes for the depth camera: rays are
//! cast over the true grid, backprojected into a 3x3 m local occupancy
//! patch at 0.1 m/cell, and registered into the allocentric geometric map
//! as a per-cell running mean. The acoustic map keeps a cumulative mean of
//! direct-sound intensity at visited cells at environment resolution.
//! Egocentric crops rotate both maps so the agent sits at the center facing
//! up; all rotations are exact 90-degree index permutations.

mod acoustic;
mod geometric;
mod scan;

pub use acoustic::AcousticMap;
pub use geometric::{frontiers, CellKnowledge, GeometricMap, OCCUPIED_THRESHOLD};
pub use scan::{local_occupancy_from_scan, simulate_scan, LocalOccupancy, RangeScan, ScanConfig};

/// Geometric map resolution in meters per cell.
pub const MAP_RESOLUTION: f64 = 0.1;
/// Geometric map side length in cells (20 m coverage at 0.1 m/cell).
pub const GEOMETRIC_MAP_SIZE: usize = 200;
/// Acoustic map side length in cells at environment resolution; matches the
/// geometric map's physical coverage at a 0.5 m environment grid.
pub const ACOUSTIC_MAP_SIZE: usize = 40;
