//! Synthetic curve stimuli and orientation/radius tuning analysis.

mod plot;
mod probe;
mod render;
mod tuning;

pub use plot::{radial_plot, RadialPlot};
pub use probe::{probe_response, ActivationSource, ProbeBank, RecordedActivations};
pub use render::{arc_half_angle, grid_orientations, render_curve, stimulus_grid, CurveStimulus, StimulusGrid, MIN_SIZE};
pub use tuning::{
    gap_report, raw_responses, tuning_curve, tuning_curve_self_baseline, Baseline, BaselineSource, GapReport,
    TuningCurve,
};

pub const DEFAULT_ORIENTATIONS: usize = 72;
pub const DEFAULT_RADII: [f64; 4] = [8.0, 16.0, 32.0, 64.0];
pub const DEFAULT_SIZE: usize = 128;
pub const DEFAULT_THICKNESS: f64 = 3.0;
