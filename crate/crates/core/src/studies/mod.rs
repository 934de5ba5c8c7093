//! Experiment drivers for N = 4, D = 2 designs: phase sweeps with
//! geometric classification, twin-separation profiles, hue grids and
//! tornado data.

mod classify;
mod grids;
mod profile;
mod sweep;

pub use classify::{classify, ClassifyTol, PhaseLabel};
pub use grids::{grid_axis, half_spread, hue_grid, tornado_data, HueNode, TornadoPoint, COINCIDENT_GAP};
pub use profile::{loglog_slope, richardson, twin_profile, EvenFit, ProfilePoint};
pub use sweep::{
    labels_monotone, lines, phase_boundaries, phase_sweep, rectangle_width_at_level, sequence_position,
    PhaseBoundary, PhaseRecord, SweepOptions,
};
