//! Monte-Carlo harnesses: estimator MSE against SNR, SER against Eb/N0 and
//! the multipath receive-diversity demo.
//!
//! Every trial draws from its own counter-based stream keyed by
//! `(seed, grid point, trial)`, and per-trial results are reduced in trial
//! order, so outputs are bit-identical for any thread count.

pub mod config;
pub mod mse;
pub mod multipath;
pub mod ser;
pub mod table;

pub use config::{ChannelSource, CodeSource, ExperimentConfig, Knowledge, RadarSpec};
pub use mse::{run_mse, run_mse_in, with_config_meta, MsePoint, MseReport};
pub use multipath::{run_multipath_demo, MultipathReport, RepairedHop, SpectrumSnapshot};
pub use ser::{ebn0_db, gamma0_db_for, required_ebn0, run_ser, run_ser_in, SerCurve, SerReport};
pub use table::CurveTable;
