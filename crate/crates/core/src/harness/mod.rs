//! Capture I/O, synchronization, resampling and sweep orchestration.

pub mod capture;
pub mod config;
pub mod oracle;
pub mod paramfile;
pub mod resample;
pub mod sweep;
pub mod sync;

pub use capture::{read_capture, write_capture, Capture, CaptureMeta};
pub use paramfile::{read_params, write_params, ParamFile};
pub use resample::{resample_to_2sps, Resampled};
pub use sweep::{run_rate_point, run_sweep, RatePoint, SweepConfig, SweepResult, SweepRow};
pub use sync::{synchronize, SyncEstimate};
