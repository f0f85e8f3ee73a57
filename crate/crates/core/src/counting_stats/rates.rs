//! Rate model of the link and the per-window count sampler.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use super::turbulence::TurbulenceModel;
use super::{require, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDistribution {
    Poisson,
    LognormalModulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum SourceKind {
    Epps,
    Fps,
    DarkCal,
    BackgroundCal,
    LinkCal,
}

impl SourceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SourceKind::Epps => "epps",
            SourceKind::Fps => "fps",
            SourceKind::DarkCal => "dark-cal",
            SourceKind::BackgroundCal => "background-cal",
            SourceKind::LinkCal => "link-cal",
        }
    }
}

/// Rates of the space-to-ground pair link. The space terminal carries two
/// detectors; `space_noise_per_detector` is background light (modulated per
/// `noise_distribution`) and `space_dark_per_detector` is always Poissonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    pub pair_production_rate: f64,
    /// Probability that the partner of a detected photon is detected on the
    /// other side; also the ground detection probability of source photons.
    pub intrinsic_heralding: f64,
    pub link_transmission: f64,
    /// Ground background singles not originating from the source.
    pub ground_singles_rate: f64,
    pub space_noise_per_detector: f64,
    pub space_dark_per_detector: f64,
    pub noise_distribution: NoiseDistribution,
    pub coincidence_window_s: f64,
}

/// Expected per-second rates for one source configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedRates {
    /// Source photons arriving at the space detectors.
    pub space_signal: f64,
    /// Turbulence-modulated part of the space noise (both detectors).
    pub space_noise_modulated: f64,
    /// Poissonian part of the space noise (both detectors).
    pub space_noise_poisson: f64,
    pub ground_singles: f64,
    pub true_coincidences: f64,
    pub accidentals: f64,
    /// Accidentals caused by the modulated noise.
    pub accidentals_modulated: f64,
}

impl ExpectedRates {
    pub fn space_singles(&self) -> f64 {
        self.space_signal + self.space_noise_modulated + self.space_noise_poisson
    }

    pub fn coincidences(&self) -> f64 {
        self.true_coincidences + self.accidentals
    }
}

impl RateModel {
    /// 350e6 pairs/s, 20 % heralding, 46 dB, 2e5/s ground background,
    /// 6000/s modulated noise per space detector, 1 ns coincidence window.
    pub fn reference_worst_case() -> Self {
        Self {
            pair_production_rate: 350e6,
            intrinsic_heralding: 0.2,
            link_transmission: 10f64.powf(-4.6),
            ground_singles_rate: 2e5,
            space_noise_per_detector: 6000.0,
            space_dark_per_detector: 0.0,
            noise_distribution: NoiseDistribution::LognormalModulated,
            coincidence_window_s: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        for (name, v) in [
            ("pair production rate", self.pair_production_rate),
            ("ground singles rate", self.ground_singles_rate),
            ("space noise", self.space_noise_per_detector),
            ("space dark rate", self.space_dark_per_detector),
            ("coincidence window", self.coincidence_window_s),
        ] {
            require(v >= 0.0 && v.is_finite(), format!("{name} must be non-negative, got {v}"))?;
        }
        require(
            self.intrinsic_heralding > 0.0 && self.intrinsic_heralding <= 1.0,
            format!("intrinsic heralding {} outside (0, 1]", self.intrinsic_heralding),
        )?;
        require(
            self.link_transmission > 0.0 && self.link_transmission <= 1.0,
            format!("link transmission {} outside (0, 1]", self.link_transmission),
        )
    }

    fn modulated_noise(&self) -> f64 {
        match self.noise_distribution {
            NoiseDistribution::LognormalModulated => 2.0 * self.space_noise_per_detector,
            NoiseDistribution::Poisson => 0.0,
        }
    }

    fn poisson_noise(&self) -> f64 {
        let bg = match self.noise_distribution {
            NoiseDistribution::LognormalModulated => 0.0,
            NoiseDistribution::Poisson => 2.0 * self.space_noise_per_detector,
        };
        bg + 2.0 * self.space_dark_per_detector
    }

    /// Expected rates for `source`; `d_f` applies to EPPS windows only.
    pub fn expected(&self, source: SourceKind, d_f: f64) -> ExpectedRates {
        let ground = self.pair_production_rate * self.intrinsic_heralding + self.ground_singles_rate;
        let (signal, modulated, poisson, df) = match source {
            SourceKind::Epps => (self.pair_production_rate * self.link_transmission, self.modulated_noise(), self.poisson_noise(), d_f),
            SourceKind::Fps | SourceKind::LinkCal => {
                (self.pair_production_rate * self.link_transmission, self.modulated_noise(), self.poisson_noise(), 1.0)
            }
            SourceKind::BackgroundCal => (0.0, self.modulated_noise(), self.poisson_noise(), 0.0),
            SourceKind::DarkCal => (0.0, 0.0, 2.0 * self.space_dark_per_detector, 0.0),
        };
        let tau = self.coincidence_window_s;
        ExpectedRates {
            space_signal: signal,
            space_noise_modulated: modulated,
            space_noise_poisson: poisson,
            ground_singles: ground,
            true_coincidences: signal * self.intrinsic_heralding * df,
            accidentals: (signal + modulated + poisson) * ground * tau,
            accidentals_modulated: modulated * ground * tau,
        }
    }
}

/// Counts of one measurement window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CountRecord {
    pub window_start_s: f64,
    pub duration_s: f64,
    pub source: SourceKind,
    pub singles_ground: u64,
    pub singles_space: u64,
    pub coincidences: u64,
    pub accidentals: u64,
    /// Signal intensity factor shared by all sources in this window.
    pub turbulence_factor: f64,
    /// Intensity factor applied to modulated noise.
    pub noise_factor: f64,
}

pub(crate) fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
    }
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("valid binomial").sample(rng)
    }
}

/// Samples one window with explicit turbulence factors. Space signal photons
/// are Poissonian with mean `rate·f·duration`; each one's partner is detected
/// with probability `η_h·D_f`, so decohered pairs stay in the singles.
pub fn sample_counts<R: Rng + ?Sized>(
    rates: &RateModel,
    source: SourceKind,
    d_f: f64,
    window_start_s: f64,
    duration_s: f64,
    signal_factor: f64,
    noise_factor: f64,
    rng: &mut R,
) -> CountRecord {
    let e = rates.expected(source, d_f);
    let heralding = if e.space_signal > 0.0 { e.true_coincidences / e.space_signal } else { 0.0 };
    let signal_mean = e.space_signal * signal_factor * duration_s;
    let noise_mean = (e.space_noise_modulated * noise_factor + e.space_noise_poisson) * duration_s;

    let n_signal = poisson(rng, signal_mean);
    let true_pairs = binomial(rng, n_signal, heralding);
    let singles_space = n_signal + poisson(rng, noise_mean);
    let other_ground = (e.ground_singles * duration_s - signal_mean * heralding).max(0.0);
    let singles_ground = true_pairs + poisson(rng, other_ground);
    let acc_mean = (signal_mean + noise_mean) * e.ground_singles * rates.coincidence_window_s;
    let accidentals = poisson(rng, acc_mean);

    CountRecord {
        window_start_s,
        duration_s,
        source,
        singles_ground,
        singles_space,
        coincidences: true_pairs + accidentals,
        accidentals,
        turbulence_factor: signal_factor,
        noise_factor,
    }
}

/// One window with turbulence factors drawn for its duration.
pub fn simulate_window<R: Rng + ?Sized>(
    rates: &RateModel,
    turbulence: &TurbulenceModel,
    d_f: f64,
    window_start_s: f64,
    duration_s: f64,
    source: SourceKind,
    rng: &mut R,
) -> Result<CountRecord, StatsError> {
    require(duration_s > 0.0, "window duration must be positive")?;
    require((0.0..=1.0).contains(&d_f), format!("D_f {d_f} outside [0, 1]"))?;
    rates.validate()?;
    turbulence.validate()?;
    let f = turbulence.window_factor(duration_s, rng);
    let g = turbulence.window_factor(duration_s, rng);
    Ok(sample_counts(rates, source, d_f, window_start_s, duration_s, f, g, rng))
}
