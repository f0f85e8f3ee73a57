//! Whether a change δ in the decoherence factor is resolvable through the
//! heralding efficiency, and the largest space-detector noise rate for which
//! it still is.

use super::heralding::{propagated_standard_error, CountComponents};
use super::rates::{NoiseDistribution, RateModel, SourceKind};
use super::turbulence::TurbulenceModel;
use super::{require, StatsError};
use crate::numeric;

/// Two conditions, D_f = `baseline_d_f` and `baseline_d_f − δ`, each
/// measured for `windows` integration windows of which the EPPS occupies
/// `epps_fraction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityScenario {
    pub rates: RateModel,
    pub turbulence: TurbulenceModel,
    pub windows: usize,
    pub window_duration_s: f64,
    pub epps_fraction: f64,
    pub baseline_d_f: f64,
}

impl SensitivityScenario {
    /// Worst-case link with 8 one-second windows per condition.
    pub fn reference_worst_case() -> Self {
        Self {
            rates: RateModel::reference_worst_case(),
            turbulence: TurbulenceModel { scintillation_index: 0.05, correlation_window_s: 0.01 },
            windows: 8,
            window_duration_s: 1.0,
            epps_fraction: 0.40,
            baseline_d_f: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        self.rates.validate()?;
        self.turbulence.validate()?;
        require(self.windows >= 1, "need at least one window")?;
        require(self.window_duration_s > 0.0, "window duration must be positive")?;
        require(self.epps_fraction > 0.0 && self.epps_fraction <= 1.0, "EPPS fraction outside (0, 1]")?;
        require((0.0..=1.0).contains(&self.baseline_d_f), "baseline D_f outside [0, 1]")
    }

    pub fn integration_time_s(&self) -> f64 {
        self.windows as f64 * self.window_duration_s * self.epps_fraction
    }

    /// Expected pooled counts of one condition.
    pub fn components(&self, d_f: f64) -> CountComponents {
        let e = self.rates.expected(SourceKind::Epps, d_f);
        let t = self.integration_time_s();
        CountComponents {
            coincidences: e.coincidences() * t,
            coincidences_modulated: e.accidentals_modulated * t,
            space_singles: e.space_singles() * t,
            space_singles_modulated: e.space_noise_modulated * t,
            ground_singles: e.ground_singles * t,
            ground_singles_modulated: 0.0,
        }
    }

    /// (E, SE) of one condition.
    pub fn heralding(&self, d_f: f64) -> Result<(f64, f64), StatsError> {
        propagated_standard_error(&self.components(d_f), self.turbulence.scintillation_index)
    }

    fn with_noise(&self, noise: f64) -> Self {
        let mut s = *self;
        s.rates.space_noise_per_detector = noise;
        s
    }
}

/// True iff the expected gap |E(D_f) − E(D_f − δ)| exceeds
/// `sigmas · √(SE_A² + SE_B²)`.
pub fn resolvable(delta_d_f: f64, scenario: &SensitivityScenario, sigmas: f64) -> Result<bool, StatsError> {
    require((0.0..1.0).contains(&delta_d_f), format!("delta D_f {delta_d_f} outside [0, 1)"))?;
    require(sigmas >= 0.0, "confidence must be non-negative")?;
    scenario.validate()?;
    let a = scenario.baseline_d_f;
    let b = a - delta_d_f;
    require(b >= 0.0, "baseline D_f smaller than delta")?;
    let (ea, sa) = scenario.heralding(a)?;
    let (eb, sb) = scenario.heralding(b)?;
    let gap = (ea - eb).abs();
    Ok(gap > 0.0 && gap > sigmas * sa.hypot(sb))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseTolerance {
    /// Largest modulated noise rate per space detector that keeps δ
    /// resolvable; 0 when it is unresolvable even without noise.
    pub max_noise_per_detector: f64,
    pub resolvable_at_zero_noise: bool,
}

const NOISE_CEILING: f64 = 1e9;

/// Bisection (1 % relative tolerance) on the space-detector noise rate for
/// the edge of [`resolvable`] at 1σ. All noise is treated as log-normally
/// modulated, the conservative choice.
pub fn max_tolerable_noise(
    pair_production_rate: f64,
    loss_db: f64,
    si: f64,
    delta_d_f: f64,
    scenario: &SensitivityScenario,
) -> Result<NoiseTolerance, StatsError> {
    require(pair_production_rate > 0.0, "pair production rate must be positive")?;
    require(loss_db >= 0.0, "loss must be non-negative")?;
    let mut base = *scenario;
    base.rates.pair_production_rate = pair_production_rate;
    base.rates.link_transmission = 10f64.powf(-loss_db / 10.0);
    base.rates.noise_distribution = NoiseDistribution::LognormalModulated;
    base.turbulence.scintillation_index = si;
    base.validate()?;

    let ok = |n: f64| resolvable(delta_d_f, &base.with_noise(n), 1.0).unwrap_or(false);
    if !ok(0.0) {
        return Ok(NoiseTolerance { max_noise_per_detector: 0.0, resolvable_at_zero_noise: false });
    }
    let mut hi = 1000.0;
    while ok(hi) {
        hi *= 2.0;
        if hi > NOISE_CEILING {
            return Ok(NoiseTolerance { max_noise_per_detector: NOISE_CEILING, resolvable_at_zero_noise: true });
        }
    }
    let n = numeric::bisect_predicate(ok, 0.0, hi, 0.01).map_err(|e| StatsError::InvalidArgument(e.to_string()))?;
    Ok(NoiseTolerance { max_noise_per_detector: n, resolvable_at_zero_noise: true })
}
