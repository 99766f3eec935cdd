//! Decoy-state measurement-device-independent QKD security analysis.
//!
//! The pipeline runs from gains and QBERs (measured, or simulated by
//! [`physics`]) through the decoy linear programs in [`decoy_lp`] to a secure
//! key rate in [`protocol`]. [`optimizer`] searches protocol parameters and
//! [`cli`] drives everything from files.

pub mod cli;
pub mod decoy_lp;
pub mod error;
pub mod finite_size;
pub mod optimizer;
pub mod physics;
pub mod protocol;
pub mod simplex;

pub use decoy_lp::{estimate_bounds, InfeasibleLp};
pub use error::{Error, Result};
pub use physics::{simulate_measurements, SystemModel};
pub use protocol::{
    secure_key_rate, AnalysisVariant, KeyRateReport, MeasurementSet, ProtocolParameters,
    SecurityAnalysis, YieldBounds,
};
