//! One overhead pass: 1 s integration windows partitioned between
//! calibration, FPS and EPPS slots, with D_f following the zenith angle.

use rand::Rng;

use super::heralding::{heralding_efficiency, heralding_standard_error};
use super::rates::{sample_counts, CountRecord, RateModel, SourceKind};
use super::turbulence::TurbulenceModel;
use super::{require, StatsError};
use crate::link_budget::atmospheric_loss_db;
use crate::spacetime::{self, LinkGeometry, PhotonSpectralParams};

/// Fractions of each integration window given to each activity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UtilizationSchedule {
    pub dark_cal: f64,
    pub background_cal: f64,
    pub link_cal: f64,
    pub fps: f64,
    pub epps: f64,
    pub switching: f64,
}

impl Default for UtilizationSchedule {
    fn default() -> Self {
        Self { dark_cal: 0.05, background_cal: 0.15, link_cal: 0.10, fps: 0.29, epps: 0.40, switching: 0.01 }
    }
}

impl UtilizationSchedule {
    pub fn total(&self) -> f64 {
        self.dark_cal + self.background_cal + self.link_cal + self.fps + self.epps + self.switching
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        let parts = [self.dark_cal, self.background_cal, self.link_cal, self.fps, self.epps, self.switching];
        require(parts.iter().all(|p| *p >= 0.0), "utilization fractions must be non-negative")?;
        require(
            (self.total() - 1.0).abs() <= 1e-9,
            format!("utilization schedule sums to {}, expected 1", self.total()),
        )
    }

    /// Measurement slots in emission order; switching produces no record.
    pub fn slots(&self) -> [(SourceKind, f64); 5] {
        [
            (SourceKind::DarkCal, self.dark_cal),
            (SourceKind::BackgroundCal, self.background_cal),
            (SourceKind::LinkCal, self.link_cal),
            (SourceKind::Fps, self.fps),
            (SourceKind::Epps, self.epps),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassScenario {
    pub rates: RateModel,
    pub turbulence: TurbulenceModel,
    pub schedule: UtilizationSchedule,
    pub window_s: f64,
    pub altitude_m: f64,
    pub spectral: PhotonSpectralParams,
    pub max_zenith_rad: f64,
    /// Total loss at `max_zenith_rad`; other angles are scaled by airmass
    /// and by range squared.
    pub loss_at_max_zenith_db: f64,
    pub zenith_atmospheric_loss_db: f64,
    /// Width of the |θ| bins of the heralding curve.
    pub theta_bin_rad: f64,
    /// Replaces D_f(θ) by 1 in EPPS slots (null test).
    pub force_unit_d_f: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassRecord {
    pub window: usize,
    pub zenith_rad: f64,
    pub loss_db: f64,
    pub d_f: f64,
    pub record: CountRecord,
}

/// Accidental-subtracted heralding efficiencies of one |θ| bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassCurvePoint {
    pub theta_rad: f64,
    pub windows: usize,
    pub xi: f64,
    pub e_fps: f64,
    pub se_fps: f64,
    pub se_fps_empirical: f64,
    pub e_epps: f64,
    pub se_epps: f64,
    pub se_epps_empirical: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassResult {
    pub records: Vec<PassRecord>,
    pub curve: Vec<PassCurvePoint>,
    pub duration_s: f64,
}

impl PassScenario {
    pub fn validate(&self) -> Result<(), StatsError> {
        self.rates.validate()?;
        self.turbulence.validate()?;
        self.schedule.validate()?;
        require(self.window_s > 0.0, "window must be positive")?;
        require(self.theta_bin_rad > 0.0, "theta bin width must be positive")?;
        require(self.loss_at_max_zenith_db >= 0.0, "loss must be non-negative")
    }

    /// Loss at zenith angle θ relative to the loss at the pass edge.
    pub fn loss_db(&self, theta: f64, range_m: f64) -> Result<f64, StatsError> {
        let map = |e: crate::link_budget::LinkError| StatsError::InvalidArgument(e.to_string());
        let atm = atmospheric_loss_db(theta.abs(), self.zenith_atmospheric_loss_db).map_err(map)?;
        let atm_edge = atmospheric_loss_db(self.max_zenith_rad, self.zenith_atmospheric_loss_db).map_err(map)?;
        let edge_range = spacetime::slant_range(self.altitude_m, self.max_zenith_rad, spacetime::EARTH_RADIUS_M);
        Ok(self.loss_at_max_zenith_db + (atm - atm_edge) + 20.0 * (range_m / edge_range).log10())
    }
}

/// Net heralding efficiency (accidentals estimated as S·G·τ from the
/// measured singles and subtracted) of a set of records, with propagated
/// and empirical standard errors.
fn net_heralding(records: &[CountRecord], scenario: &PassScenario) -> Result<(f64, f64, f64), StatsError> {
    let tau = scenario.rates.coincidence_window_s;
    let net = |r: &CountRecord| -> Result<f64, StatsError> {
        let s = r.singles_space as f64;
        let g = r.singles_ground as f64;
        let acc = s * g * tau / r.duration_s;
        heralding_efficiency(r.coincidences as f64 - acc, s, g)
    };
    let est = heralding_standard_error(records, &scenario.rates, &scenario.turbulence)?;
    let c: f64 = records.iter().map(|r| r.coincidences as f64).sum();
    let s: f64 = records.iter().map(|r| r.singles_space as f64).sum();
    let g: f64 = records.iter().map(|r| r.singles_ground as f64).sum();
    let t: f64 = records.iter().map(|r| r.duration_s).sum();
    let e_net = heralding_efficiency(c - s * g * tau / t, s, g)?;
    // Subtracting a near-deterministic floor leaves the absolute error unchanged.
    let se_prop = est.se_propagated;
    let per: Vec<f64> = records.iter().map(net).collect::<Result<_, _>>()?;
    let n = per.len() as f64;
    let mean = per.iter().sum::<f64>() / n;
    let var = per.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((e_net, se_prop, (var / n).sqrt()))
}

/// Simulates one pass from horizon-limited edge to edge.
pub fn simulate_pass<R: Rng + ?Sized>(scenario: &PassScenario, rng: &mut R) -> Result<PassResult, StatsError> {
    scenario.validate()?;
    let map = |e: spacetime::SpacetimeError| StatsError::InvalidArgument(e.to_string());
    let geom = LinkGeometry::earth(scenario.altitude_m, 0.0);
    let profile = spacetime::overhead_pass_profile(&geom, scenario.max_zenith_rad, 3).map_err(map)?;
    let windows = (profile.duration_s / scenario.window_s).floor() as usize;
    let first_start = -0.5 * windows as f64 * scenario.window_s;

    let mut records = Vec::new();
    for w in 0..windows {
        let mid = spacetime::pass_sample(&geom, first_start + (w as f64 + 0.5) * scenario.window_s);
        let theta = mid.zenith_rad;
        let loss = scenario.loss_db(theta, mid.range_m)?;
        let xi = spacetime::decoherence(&LinkGeometry::earth(scenario.altitude_m, theta.abs()), &scenario.spectral, 1.0, 1.0)
            .map_err(map)?
            .xi;
        let d_f = if scenario.force_unit_d_f { 1.0 } else { xi };
        let mut rates = scenario.rates;
        rates.link_transmission = 10f64.powf(-loss / 10.0);

        let f = scenario.turbulence.window_factor(scenario.window_s, rng);
        let g = scenario.turbulence.window_factor(scenario.window_s, rng);
        let mut offset = 0.0;
        for (source, frac) in scenario.schedule.slots() {
            if frac > 0.0 {
                let start = w as f64 * scenario.window_s + offset;
                let rec = sample_counts(&rates, source, d_f, start, frac * scenario.window_s, f, g, rng);
                records.push(PassRecord { window: w, zenith_rad: theta, loss_db: loss, d_f, record: rec });
            }
            offset += frac * scenario.window_s;
        }
    }

    let nbins = (scenario.max_zenith_rad / scenario.theta_bin_rad).ceil() as usize;
    let mut curve = Vec::new();
    for b in 0..nbins {
        let lo = b as f64 * scenario.theta_bin_rad;
        let hi = lo + scenario.theta_bin_rad;
        let pick = |kind: SourceKind| -> Vec<CountRecord> {
            records
                .iter()
                .filter(|r| r.record.source == kind && r.zenith_rad.abs() >= lo && r.zenith_rad.abs() < hi)
                .map(|r| r.record)
                .collect()
        };
        let fps = pick(SourceKind::Fps);
        let epps = pick(SourceKind::Epps);
        if fps.len() < 2 || epps.len() < 2 {
            continue;
        }
        let theta_mean = records
            .iter()
            .filter(|r| r.record.source == SourceKind::Epps && r.zenith_rad.abs() >= lo && r.zenith_rad.abs() < hi)
            .map(|r| r.zenith_rad.abs())
            .sum::<f64>()
            / epps.len() as f64;
        let xi = spacetime::decoherence(&LinkGeometry::earth(scenario.altitude_m, theta_mean), &scenario.spectral, 1.0, 1.0)
            .map_err(map)?
            .xi;
        let (e_fps, se_fps, se_fps_emp) = net_heralding(&fps, scenario)?;
        let (e_epps, se_epps, se_epps_emp) = net_heralding(&epps, scenario)?;
        curve.push(PassCurvePoint {
            theta_rad: theta_mean,
            windows: epps.len(),
            xi,
            e_fps,
            se_fps,
            se_fps_empirical: se_fps_emp,
            e_epps,
            se_epps,
            se_epps_empirical: se_epps_emp,
        });
    }
    Ok(PassResult { records, curve, duration_s: profile.duration_s })
}
