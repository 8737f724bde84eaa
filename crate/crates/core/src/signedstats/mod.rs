//! Signed subgraph statistics and calibrated tests built on them.

mod pattern;
mod registry;
mod statistics;
mod testing;

pub use pattern::{signed_weight_of_pattern, PatternGraph};
pub use registry::{
    MaskedSignedFourCycles, MaskedSignedWedges, SignedFourCycles, SignedWedges, StatisticRegistry, TestStatistic,
};
pub use statistics::{signed_four_cycles, signed_four_cycles_masked, signed_wedges, signed_wedges_masked};
pub use testing::{
    calibrate_null, empirical_quantile, estimate_power, estimate_power_many, min_null_trials, null_statistics,
    run_test, MaskMode, NullInterval, PowerEstimate, TestReport,
};
