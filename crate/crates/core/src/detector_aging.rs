//! Dark-count growth of silicon APDs under proton irradiation in low Earth
//! orbit, and the background budget left for the sensitivity target.
//!
//! Model per APD type:
//!
//! ```text
//! R(T, F) = exp(β (T − T_a)) · [R_0 + (R_a − R_0) · F / F_a]
//! ```
//!
//! β comes from a least-squares fit of ln R against temperature over the
//! calibration rows, the anchor (T_a, R_a) is the warmest row at fluence
//! F_a, and R_0 is the undamaged rate at T_a. The undamaged part follows the
//! same thermal activation as the damage part.

use thiserror::Error;

use crate::counting_stats::{max_tolerable_noise, SensitivityScenario, StatsError};

pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

const MIN_TEMP_C: f64 = -100.0;
const MAX_TEMP_C: f64 = 20.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgingError {
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("target rate {target} /s unreachable: {reason}")]
    Unreachable { target: f64, reason: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ApdKind {
    #[serde(rename = "SLiK")]
    Slik,
    #[serde(rename = "C30921SH")]
    C30921Sh,
    #[serde(rename = "SAP500")]
    Sap500,
}

impl ApdKind {
    pub const ALL: [ApdKind; 3] = [ApdKind::Slik, ApdKind::C30921Sh, ApdKind::Sap500];

    pub fn name(&self) -> &'static str {
        match self {
            ApdKind::Slik => "SLiK",
            ApdKind::C30921Sh => "C30921SH",
            ApdKind::Sap500 => "SAP500",
        }
    }

    /// Temperatures (°C) giving 200, 660 and 2000 /s after two years in orbit.
    pub fn reference_rows(&self) -> [(f64, f64); 3] {
        let t = match self {
            ApdKind::Slik => [-57.4, -42.7, -29.1],
            ApdKind::C30921Sh => [-81.5, -65.1, -49.8],
            ApdKind::Sap500 => [-95.6, -77.1, -59.9],
        };
        [(t[0], 200.0), (t[1], 660.0), (t[2], 2000.0)]
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApdModel {
    pub name: String,
    /// Exponential temperature slope, 1/°C.
    pub beta: f64,
    pub anchor_temp_c: f64,
    /// Total rate at the anchor temperature and fluence.
    pub anchor_rate: f64,
    pub anchor_fluence: f64,
    /// Undamaged rate at the anchor temperature.
    pub intrinsic_dark_rate: f64,
}

/// Default 2-year equivalent fluence, protons/cm² at 100 MeV.
pub const TWO_YEAR_FLUENCE: f64 = 5e8;
/// Default undamaged dark rate at the anchor temperature, 1/s.
pub const DEFAULT_INTRINSIC_RATE: f64 = 100.0;

/// Fits ln(rate) against temperature. The warmest row becomes the anchor.
pub fn calibrate_apd(
    name: &str,
    rows: &[(f64, f64)],
    anchor_fluence: f64,
    intrinsic_dark_rate: f64,
) -> Result<ApdModel, AgingError> {
    if rows.len() < 2 {
        return Err(AgingError::Calibration("need at least two rows".into()));
    }
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in sorted.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(AgingError::Calibration(format!("duplicate temperature {} °C", w[0].0)));
        }
        if !(w[1].1 > w[0].1) {
            return Err(AgingError::Calibration("rates must increase with temperature".into()));
        }
    }
    if sorted.iter().any(|r| !(r.1 > 0.0)) {
        return Err(AgingError::Calibration("rates must be positive".into()));
    }
    if !(anchor_fluence > 0.0) {
        return Err(AgingError::Calibration("anchor fluence must be positive".into()));
    }
    let n = sorted.len() as f64;
    let mx = sorted.iter().map(|r| r.0).sum::<f64>() / n;
    let my = sorted.iter().map(|r| r.1.ln()).sum::<f64>() / n;
    let sxy: f64 = sorted.iter().map(|r| (r.0 - mx) * (r.1.ln() - my)).sum();
    let sxx: f64 = sorted.iter().map(|r| (r.0 - mx).powi(2)).sum();
    let beta = sxy / sxx;
    let (anchor_temp_c, anchor_rate) = *sorted.last().expect("non-empty");
    if !(intrinsic_dark_rate >= 0.0 && intrinsic_dark_rate < anchor_rate) {
        return Err(AgingError::Calibration(format!(
            "intrinsic rate {intrinsic_dark_rate} must lie in [0, {anchor_rate})"
        )));
    }
    Ok(ApdModel { name: name.to_string(), beta, anchor_temp_c, anchor_rate, anchor_fluence, intrinsic_dark_rate })
}

/// Calibrates one of the reference APD types with the default anchor.
pub fn reference_model(kind: ApdKind) -> ApdModel {
    calibrate_apd(kind.name(), &kind.reference_rows(), TWO_YEAR_FLUENCE, DEFAULT_INTRINSIC_RATE)
        .expect("reference rows are valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionEnvironment {
    pub fluence_two_year: f64,
    /// Displacement damage dose over two years, MeV/g.
    pub ddd_two_year: f64,
}

impl Default for MissionEnvironment {
    fn default() -> Self {
        Self { fluence_two_year: TWO_YEAR_FLUENCE, ddd_two_year: 1.27e6 }
    }
}

impl MissionEnvironment {
    pub fn fluence_rate(&self) -> f64 {
        self.fluence_two_year / (2.0 * SECONDS_PER_YEAR)
    }
}

/// Linear accrual of equivalent fluence.
pub fn fluence_at_time(t_seconds: f64, env: &MissionEnvironment) -> Result<f64, AgingError> {
    if !(t_seconds >= 0.0) {
        return Err(AgingError::InvalidArgument("mission time must be non-negative".into()));
    }
    Ok(t_seconds * env.fluence_rate())
}

fn check_temp(temp_c: f64) -> Result<(), AgingError> {
    if (MIN_TEMP_C..=MAX_TEMP_C).contains(&temp_c) {
        Ok(())
    } else {
        Err(AgingError::InvalidArgument(format!("temperature {temp_c} °C outside [-100, 20] °C")))
    }
}

impl ApdModel {
    fn rate_at_anchor_temp(&self, fluence: f64) -> f64 {
        self.intrinsic_dark_rate + (self.anchor_rate - self.intrinsic_dark_rate) * fluence / self.anchor_fluence
    }
}

pub fn dark_count_rate(model: &ApdModel, temp_c: f64, fluence: f64) -> Result<f64, AgingError> {
    check_temp(temp_c)?;
    if !(fluence >= 0.0) {
        return Err(AgingError::InvalidArgument("fluence must be non-negative".into()));
    }
    Ok((model.beta * (temp_c - model.anchor_temp_c)).exp() * model.rate_at_anchor_temp(fluence))
}

/// Temperature at which the dark rate equals `target`.
pub fn temperature_for_target(model: &ApdModel, target: f64, fluence: f64) -> Result<f64, AgingError> {
    if !(target > model.intrinsic_dark_rate) {
        return Err(AgingError::Unreachable {
            target,
            reason: format!("at or below the undamaged rate {} /s", model.intrinsic_dark_rate),
        });
    }
    if !(fluence >= 0.0) {
        return Err(AgingError::InvalidArgument("fluence must be non-negative".into()));
    }
    let t = model.anchor_temp_c + (target / model.rate_at_anchor_temp(fluence)).ln() / model.beta;
    if !(MIN_TEMP_C..=MAX_TEMP_C).contains(&t) {
        return Err(AgingError::Unreachable {
            target,
            reason: format!("requires {t:.1} °C, outside [-100, 20] °C"),
        });
    }
    Ok(t)
}

/// Extra cooling that absorbs a `factor` worse dark rate: ln(factor)/β.
pub fn reserve_margin(model: &ApdModel, factor: f64) -> Result<f64, AgingError> {
    if !(factor >= 1.0) {
        return Err(AgingError::InvalidArgument(format!("reserve factor {factor} below 1")));
    }
    Ok(factor.ln() / model.beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundAllowance {
    pub max_noise_per_detector: f64,
    pub dark_rate: f64,
    /// Remaining budget for background light, clipped at 0.
    pub background_allowance: f64,
    pub resolvable_at_zero_noise: bool,
}

/// Background light each space detector may see after `mission_t` seconds
/// in orbit while δ_Df stays resolvable.
pub fn max_background_over_mission(
    mission_t: f64,
    pair_rate: f64,
    operating_temp_c: f64,
    model: &ApdModel,
    env: &MissionEnvironment,
    scenario: &SensitivityScenario,
    loss_db: f64,
    delta_d_f: f64,
) -> Result<BackgroundAllowance, AgingError> {
    let dark = dark_count_rate(model, operating_temp_c, fluence_at_time(mission_t, env)?)?;
    let tol = max_tolerable_noise(pair_rate, loss_db, scenario.turbulence.scintillation_index, delta_d_f, scenario)?;
    Ok(BackgroundAllowance {
        max_noise_per_detector: tol.max_noise_per_detector,
        dark_rate: dark,
        background_allowance: (tol.max_noise_per_detector - dark).max(0.0),
        resolvable_at_zero_noise: tol.resolvable_at_zero_noise,
    })
}
