//! Dataset statistics, runtime benchmarking, the post-processing ablation
//! driver and the synthetic corpus generator.

mod ablation;
mod bench;
mod plot;
mod stats;
pub mod synthetic;

pub use ablation::{ablation_run, AblationRow, AblationTable};
pub use bench::{benchmark_runtime, BenchmarkReport, Clip, ClipTiming, Clock, ManualClock, SystemClock};
pub use plot::{format_plot_data, write_plot_data, PlotSeries};
pub use stats::{
    confidence_bin, confidence_histogram, missing_stats, AbsentPolicy, ConfidenceHistogram, MissingStats,
};
pub use synthetic::{gen_synthetic, GapModel, StyleJitter, SyntheticCorpusConfig};
