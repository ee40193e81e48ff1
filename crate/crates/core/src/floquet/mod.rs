//! Coupled Floquet-channel scattering solver.

mod channels;
mod propagate;
mod solve;

pub use channels::{build_grid, free_solutions, momentum, ChannelGrid, FreeSolutionPair, THRESHOLD_NUDGE};
pub use solve::{
    adaptive_channel_count, adaptive_from, extract_result, integrate_channels, relative_enhancement, solve,
    static_transmission, time_averaged_transmission, total_transmission, AdaptiveSolve, AmplitudeMatrices,
    ComplexMatrix, ScatteringProblem, ScatteringResult, SolverOptions, CHANNEL_STEP, DEFAULT_MAX_CUTOFF,
    RESULT_SCHEMA,
};
