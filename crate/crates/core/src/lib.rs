//! Phase-noise aware OFDM radar simulation for integrated sensing and
//! communication at mmWave and D-band carriers.
//!
//! The pipeline of one Monte-Carlo trial:
//!
//! ```text
//! 16-QAM grid -> point-target echo -> [CP-OFDM + differential phase noise]
//!   -> AWGN -> divide out tx symbols -> 2D FFT map -> peak + parabolic refinement
//!   -> range / velocity estimate, Doppler-cut PSLR / ISLR
//! ```
//!
//! [`experiment::run_sweep`] repeats this over SNR points and phase-noise
//! variants and aggregates RMSE, sidelobe ratios and Cramer-Rao bounds.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod numerology;
pub mod ofdm;
pub mod phase_noise;
pub mod radar;
pub mod report;
pub mod seed;

pub use channel::{ChannelConfig, PnMode, TargetScenario};
pub use config::{SystemConfig, Window};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, PnVariant, SweepResult, SweepRow, SweepSpec, TrialOutcome};
pub use metrics::{CrbPoint, SidelobeReport};
pub use numerology::{Numerology, ResolutionRow};
pub use ofdm::{SymbolGrid, TimeFrame};
pub use phase_noise::{PhaseNoiseModel, PnSamplePath, Preset};
pub use radar::{RangeDopplerMap, SensingEstimate};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
