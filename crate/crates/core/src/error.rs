use crate::io::FormatError;
use crate::numerics::LinalgError;
use crate::tle::TleError;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Tle(#[from] TleError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("trajectory too short: {required} samples required, {available} available")]
    TooShort { required: usize, available: usize },
    #[error("Hankel rank still growing at l_max = {l_max} (rank {rank}); increase l_max")]
    RankNotSaturated { l_max: usize, rank: usize },
    #[error("empty model: no singular value survives truncation")]
    EmptyModel,
    #[error("spectral basis contains duplicate frequency {0} rad/step (mod 2π)")]
    DuplicateFrequency(f64),
    #[error("rank-deficient system: rank {rank}, {required} required")]
    RankDeficient { rank: usize, required: usize },
    #[error("undefined normalization: truth group `{0}` is identically zero")]
    UndefinedNormalization(String),
    #[error("orbit is not elliptic (e = {0})")]
    UnboundOrbit(f64),
    #[error("position radius {radius} km is below the body surface ({surface} km)")]
    BelowSurface { radius: f64, surface: f64 },
    #[error("integration step size underflow at t = {t} s")]
    StepUnderflow { t: f64 },
    #[error("Kepler equation did not converge for M = {mean_anomaly} rad, e = {e}")]
    KeplerNoConvergence { mean_anomaly: f64, e: f64 },
}

impl Error {
    /// True for failures of the numerical machinery rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Linalg(_)
                | Error::RankNotSaturated { .. }
                | Error::EmptyModel
                | Error::RankDeficient { .. }
                | Error::StepUnderflow { .. }
                | Error::KeplerNoConvergence { .. }
        )
    }
}
