//! Log-normal intensity modulation with unit mean.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use super::{require, StatsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceModel {
    pub scintillation_index: f64,
    pub correlation_window_s: f64,
}

impl TurbulenceModel {
    pub fn new(scintillation_index: f64, correlation_window_s: f64) -> Result<Self, StatsError> {
        let m = Self { scintillation_index, correlation_window_s };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        require(
            (0.0..=1.0).contains(&self.scintillation_index),
            format!("scintillation index {} outside [0, 1]", self.scintillation_index),
        )?;
        require(self.correlation_window_s > 0.0, "correlation window must be positive")
    }

    /// Number of independent turbulence states inside a window.
    pub fn states_in(&self, duration_s: f64) -> usize {
        ((duration_s / self.correlation_window_s).round() as usize).max(1)
    }

    /// Mean of the intensity factors of the correlation slots covering a
    /// window of `duration_s`. Sources multiplexed inside the window share
    /// this value.
    pub fn window_factor<R: Rng + ?Sized>(&self, duration_s: f64, rng: &mut R) -> f64 {
        if self.scintillation_index == 0.0 {
            return 1.0;
        }
        let k = self.states_in(duration_s);
        (0..k).map(|_| lognormal_factor(self.scintillation_index, rng)).sum::<f64>() / k as f64
    }
}

/// (μ, σ) of the underlying normal for a log-normal with mean 1 and
/// variance `si`: σ² = ln(1 + si), μ = −σ²/2.
pub fn lognormal_parameters(si: f64) -> (f64, f64) {
    let s2 = si.ln_1p();
    (-0.5 * s2, s2.sqrt())
}

/// One unit-mean intensity factor with variance `si`. Returns exactly 1 for
/// `si == 0`.
pub fn lognormal_factor<R: Rng + ?Sized>(si: f64, rng: &mut R) -> f64 {
    if si <= 0.0 {
        return 1.0;
    }
    let (mu, sigma) = lognormal_parameters(si);
    LogNormal::new(mu, sigma).expect("finite parameters").sample(rng)
}
