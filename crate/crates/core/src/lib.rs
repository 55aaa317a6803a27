//! Hankel (time-delay) dynamic mode decomposition for periodic
//! trajectories.
//!
//! The crate builds delay-embedded snapshot matrices, fits exact-DMD
//! surrogates, and checks them against an autoregressive/Vandermonde oracle.
//! It also ships the generators and sweep drivers used to study pendulum and
//! Earth-orbit datasets.

pub mod ar_oracle;
pub mod dmd;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hankel;
pub mod io;
pub mod numerics;
pub mod parallel;
pub mod presets;
pub mod spectral;
pub mod tle;
pub mod trajectory;

pub use dmd::{fit, fit_with, DmdModel, DmdOptions, TruncationPolicy};
pub use error::{Error, Result};
pub use hankel::{build_hankel, minimal_delays, HankelPair, MinimalDelays};
pub use parallel::Execution;
pub use trajectory::{Groups, Trajectory};
