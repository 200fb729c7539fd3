//! Distortion-matrix analysis: aberration laws, isoplanatic patches,
//! image correction and focusing diagnostics.

mod correlate;
mod dmatrix;
pub mod metrics;
mod speed;
mod transmission;
mod window;

pub use correlate::{correlate, correlate_columns, decompose_entropy, CorrelationResult, EntropySummary};
pub use dmatrix::{build_distortion, build_rkx, DistortionMatrix, FovWindow, DARK_COLUMN_REL};
pub use speed::{soundspeed_entropy_sweep, SpeedSweep, SweepSetup};
pub use transmission::{
    correct_reflection, estimate_t_iso, phase_only, strehl_map, strehl_of, Provenance, StrehlMap, TransmissionEstimate,
};
pub use window::{
    align_gauge, local_window_sweep, window_size_guidance, NodeReport, SweepOptions, WindowSpec, WindowSweep, MIN_WINDOW_COLUMNS,
};
