//! Photon counting under atmospheric turbulence: per-window Monte Carlo,
//! heralding efficiency and its standard error, g2 histograms, the
//! δ_Df sensitivity solver and the pass simulator.

pub mod g2;
pub mod heralding;
pub mod pass;
pub mod rates;
pub mod sensitivity;
pub mod turbulence;

pub use g2::{g2_histogram, G2Config, G2Histogram, PeakFit};
pub use heralding::{
    accidental_rate, bin_collision_probability, data_volume, heralding_efficiency,
    heralding_standard_error, implied_collision_rate, propagated_standard_error, CountComponents,
    DataVolumeAssumptions, HeraldingEstimate,
};
pub use pass::{simulate_pass, PassCurvePoint, PassRecord, PassResult, PassScenario, UtilizationSchedule};
pub use rates::{simulate_window, CountRecord, ExpectedRates, NoiseDistribution, RateModel, SourceKind};
pub use sensitivity::{max_tolerable_noise, resolvable, NoiseTolerance, SensitivityScenario};
pub use turbulence::{lognormal_factor, TurbulenceModel};

use rand::SeedableRng;
use thiserror::Error;

/// Generator behind every stochastic routine.
pub type SimRng = rand_chacha::ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from one seed, for parallel ensembles.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("undefined estimate: {0}")]
    UndefinedEstimate(String),
}

pub(crate) fn require(cond: bool, msg: impl Into<String>) -> Result<(), StatsError> {
    if cond {
        Ok(())
    } else {
        Err(StatsError::InvalidArgument(msg.into()))
    }
}
