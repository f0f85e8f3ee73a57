//! Heralding efficiency, its standard error, accidentals and related
//! bookkeeping (bin collisions, data volume).

use super::rates::{CountRecord, NoiseDistribution, RateModel};
use super::turbulence::TurbulenceModel;
use super::{require, StatsError};

/// E = C / √(S₁ S₂).
pub fn heralding_efficiency(coincidences: f64, singles1: f64, singles2: f64) -> Result<f64, StatsError> {
    if !(singles1 > 0.0 && singles2 > 0.0) {
        return Err(StatsError::UndefinedEstimate(format!(
            "heralding efficiency needs positive singles, got {singles1} and {singles2}"
        )));
    }
    Ok(coincidences / (singles1 * singles2).sqrt())
}

/// S₁ S₂ τ.
pub fn accidental_rate(s1_rate: f64, s2_rate: f64, coincidence_window_s: f64) -> f64 {
    s1_rate * s2_rate * coincidence_window_s
}

/// Probability of at least one more arrival in a time bin: 1 − e^(−rate·bin).
pub fn bin_collision_probability(rate: f64, bin_width_s: f64) -> f64 {
    -(-rate * bin_width_s).exp_m1()
}

/// Rate at which [`bin_collision_probability`] equals `probability`.
pub fn implied_collision_rate(probability: f64, bin_width_s: f64) -> f64 {
    -(-probability).ln_1p() / bin_width_s
}

/// Pooled counts entering E = C/√(S G), each with the share that carries
/// log-normal fluctuations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountComponents {
    pub coincidences: f64,
    pub coincidences_modulated: f64,
    pub space_singles: f64,
    pub space_singles_modulated: f64,
    pub ground_singles: f64,
    pub ground_singles_modulated: f64,
}

/// First-order propagation of Var(N) = N + (s_i N_mod)² through
/// E = C/√(S G), treating the three counts as independent. Returns (E, SE).
///
/// The modulated term is applied to the pooled counts and so does not
/// average down with integration time.
pub fn propagated_standard_error(c: &CountComponents, si: f64) -> Result<(f64, f64), StatsError> {
    let e = heralding_efficiency(c.coincidences, c.space_singles, c.ground_singles)?;
    if c.coincidences <= 0.0 {
        return Err(StatsError::UndefinedEstimate("no coincidences".into()));
    }
    let rel = |n: f64, m: f64| (n + (si * m).powi(2)) / (n * n);
    let rel_var = rel(c.coincidences, c.coincidences_modulated)
        + 0.25 * rel(c.space_singles, c.space_singles_modulated)
        + 0.25 * rel(c.ground_singles, c.ground_singles_modulated);
    Ok((e, e * rel_var.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldingEstimate {
    pub efficiency: f64,
    pub se_propagated: f64,
    pub se_empirical: f64,
    pub windows: usize,
}

/// Heralding efficiency of a set of windows with two standard errors: the
/// propagated model on pooled counts, and the spread of per-window
/// estimates divided by √windows.
///
/// The modulated shares of the pooled counts are the expected noise counts
/// and the accidentals they cause, taken from `rates`.
pub fn heralding_standard_error(
    records: &[CountRecord],
    rates: &RateModel,
    turbulence: &TurbulenceModel,
) -> Result<HeraldingEstimate, StatsError> {
    require(records.len() >= 2, "standard error needs at least two windows")?;
    let sum = |f: fn(&CountRecord) -> u64| records.iter().map(|r| f(r) as f64).sum::<f64>();
    let c = sum(|r| r.coincidences);
    let s = sum(|r| r.singles_space);
    let g = sum(|r| r.singles_ground);
    let duration: f64 = records.iter().map(|r| r.duration_s).sum();

    let modulated_noise = match rates.noise_distribution {
        NoiseDistribution::LognormalModulated => 2.0 * rates.space_noise_per_detector * duration,
        NoiseDistribution::Poisson => 0.0,
    };
    let components = CountComponents {
        coincidences: c,
        coincidences_modulated: modulated_noise * (g / duration) * rates.coincidence_window_s,
        space_singles: s,
        space_singles_modulated: modulated_noise,
        ground_singles: g,
        ground_singles_modulated: 0.0,
    };
    let (efficiency, se_propagated) = propagated_standard_error(&components, turbulence.scintillation_index)?;

    let per_window: Vec<f64> = records
        .iter()
        .map(|r| heralding_efficiency(r.coincidences as f64, r.singles_space as f64, r.singles_ground as f64))
        .collect::<Result<_, _>>()?;
    let n = per_window.len() as f64;
    let mean = per_window.iter().sum::<f64>() / n;
    let var = per_window.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(HeraldingEstimate { efficiency, se_propagated, se_empirical: (var / n).sqrt(), windows: records.len() })
}

/// Stored bytes for `tag_rate` time tags per second of link time.
pub fn data_volume(tag_rate: f64, bytes_per_tag: f64, duty_cycle: f64, mission_seconds: f64) -> f64 {
    tag_rate * bytes_per_tag * duty_cycle * mission_seconds
}

/// Assumption set for mission data volumes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DataVolumeAssumptions {
    pub ground_tag_rate: f64,
    pub space_tag_rate: f64,
    pub bytes_per_tag: f64,
    /// Fraction of mission time with an active link.
    pub duty_cycle: f64,
    pub mission_seconds: f64,
}

impl DataVolumeAssumptions {
    /// Ground tags at the singles rate of the worst-case scenario
    /// (0.2 × 350e6 + 2e5 per second), space tags at the 250 000/s capture
    /// cap, 10 bytes per tag, ≈50 min of link time per day, half a year.
    pub fn half_year_default() -> Self {
        Self {
            ground_tag_rate: 0.2 * 350e6 + 2e5,
            space_tag_rate: 250_000.0,
            bytes_per_tag: 10.0,
            duty_cycle: 0.035,
            mission_seconds: 0.5 * 365.25 * 86_400.0,
        }
    }

    pub fn ground_bytes(&self) -> f64 {
        data_volume(self.ground_tag_rate, self.bytes_per_tag, self.duty_cycle, self.mission_seconds)
    }

    pub fn space_bytes(&self) -> f64 {
        data_volume(self.space_tag_rate, self.bytes_per_tag, self.duty_cycle, self.mission_seconds)
    }
}
