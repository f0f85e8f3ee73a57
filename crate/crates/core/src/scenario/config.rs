//! TOML scenario configuration. Keys carry their units; every guard of the
//! model modules is checked at load and all violations are reported together.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::counting_stats::{
    NoiseDistribution, PassScenario, RateModel, SensitivityScenario, TurbulenceModel, UtilizationSchedule,
};
use crate::detector_aging::{self, ApdKind, ApdModel, MissionEnvironment};
use crate::link_budget::{BeamParams, OpticsTrain, SpotConvention};
use crate::spacetime::{BandwidthConvention, LinkGeometry, PhotonSpectralParams};

/// The shipped worst-case scenario.
pub const DEFAULT_CONFIG_TOML: &str = include_str!("../../config/worst_case.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub geometry: GeometrySection,
    pub spectral: SpectralSection,
    pub link: LinkSection,
    pub rates: RatesSection,
    pub turbulence: TurbulenceSection,
    pub schedule: ScheduleSection,
    pub sensitivity: SensitivitySection,
    pub detector: DetectorSection,
    pub curves: CurvesSection,
    pub g2: G2Section,
    pub channel: ChannelSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub altitude_km: f64,
    pub zenith_deg: f64,
    pub max_zenith_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandwidthConventionName {
    Reciprocal,
    GaussianFwhm,
    Anchored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub coherence_time_ps: f64,
    pub wavelength_nm: f64,
    pub bandwidth_convention: BandwidthConventionName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub total_loss_db: f64,
    pub zenith_atmospheric_loss_db: f64,
    pub tx_diameter_cm: f64,
    pub fried_r0_cm: f64,
    pub pointing_jitter_urad: f64,
    pub rx_aperture_cm: f64,
    pub obscuration: f64,
    pub beam_diameter_at_receiver_m: f64,
    pub beam_diameter_convention: SpotConvention,
    pub detector_efficiency: f64,
    pub tx_transmission: f64,
    pub window_transmission: f64,
    pub window_transmission_best: f64,
    pub rx_transmission: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub pair_rate_per_s: f64,
    pub intrinsic_heralding: f64,
    pub ground_background_per_s: f64,
    pub space_noise_per_detector_per_s: f64,
    pub space_dark_per_detector_per_s: f64,
    pub noise_distribution: NoiseDistribution,
    pub coincidence_window_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurbulenceSection {
    pub scintillation_index: f64,
    pub correlation_window_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub window_s: f64,
    pub theta_bin_deg: f64,
    pub dark_cal: f64,
    pub background_cal: f64,
    pub link_cal: f64,
    pub fps: f64,
    pub epps: f64,
    pub switching: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    pub windows_per_condition: usize,
    pub confidence_sigmas: f64,
    pub delta_df: Vec<f64>,
    pub pair_rate_min_per_s: f64,
    pub pair_rate_max_per_s: f64,
    pub pair_rate_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub apd_model: ApdKind,
    pub operating_temp_c: f64,
    pub intrinsic_dark_per_s: f64,
    pub reserve_factor: f64,
    pub fluence_two_year_per_cm2: f64,
    pub ddd_two_year_mev_per_g: f64,
    pub mission_years: Vec<f64>,
    pub delta_df: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesSection {
    pub coherence_time_min_ps: f64,
    pub coherence_time_max_ps: f64,
    pub coherence_time_points: usize,
    pub overlap_altitudes_km: Vec<f64>,
    pub altitude_min_km: f64,
    pub altitude_max_km: f64,
    pub altitude_points: usize,
    pub altitude_coherence_times_ps: Vec<f64>,
    pub zenith_max_deg: f64,
    pub zenith_points: usize,
    pub fov_half_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2Section {
    pub jitter_space_ns: f64,
    pub jitter_ground_ns: f64,
    pub bin_width_ps: f64,
    pub span_ns: f64,
    pub duration_s: f64,
    pub d_f_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub chi: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub coherent_alpha: f64,
    pub coherent_beta: f64,
    pub coherent_cutoff: usize,
    pub polarization_chi: f64,
    pub polarization_cutoff: usize,
    pub phase_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        ConfigError::Parse { line, column, message: e.message().to_string() }
    })?;
    let errs = cfg.validate();
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(errs))
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text)
}

fn check(errs: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        errs.push(msg());
    }
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

impl ScenarioConfig {
    pub fn default_worst_case() -> Self {
        parse_config(DEFAULT_CONFIG_TOML).expect("shipped configuration is valid")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration serialises");
        hex(&Sha256::digest(&bytes))
    }

    /// Every guard violation, prefixed with its section.
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        let g = &self.geometry;
        for m in self.link_geometry().validate() {
            e.push(format!("geometry: {m}"));
        }
        check(&mut e, g.max_zenith_deg > 0.0 && g.max_zenith_deg <= 70.0, || {
            format!("geometry: max_zenith_deg {} outside (0, 70]", g.max_zenith_deg)
        });
        for m in self.spectral().validate() {
            e.push(format!("spectral: {m}"));
        }

        let l = &self.link;
        check(&mut e, in_range(l.total_loss_db, 0.0, 80.0), || format!("link: total_loss_db {} outside [0, 80]", l.total_loss_db));
        check(&mut e, l.zenith_atmospheric_loss_db >= 0.0, || "link: zenith_atmospheric_loss_db must be non-negative".into());
        for m in self.beam().validate() {
            e.push(format!("link: {m}"));
        }
        check(&mut e, l.beam_diameter_at_receiver_m > 0.0, || "link: beam_diameter_at_receiver_m must be positive".into());
        for (name, v) in [
            ("detector_efficiency", l.detector_efficiency),
            ("tx_transmission", l.tx_transmission),
            ("window_transmission", l.window_transmission),
            ("window_transmission_best", l.window_transmission_best),
            ("rx_transmission", l.rx_transmission),
        ] {
            check(&mut e, v > 0.0 && v <= 1.0, || format!("link: {name} {v} outside (0, 1]"));
        }

        if let Err(m) = self.rate_model().validate() {
            e.push(format!("rates: {m}"));
        }
        let t = &self.turbulence;
        check(&mut e, in_range(t.scintillation_index, 0.0, 1.0), || {
            format!("turbulence: scintillation_index {} outside [0, 1]", t.scintillation_index)
        });
        check(&mut e, t.correlation_window_ms > 0.0, || "turbulence: correlation_window_ms must be positive".into());

        if let Err(m) = self.schedule().validate() {
            e.push(format!("schedule: {m}"));
        }
        check(&mut e, self.schedule.window_s > 0.0, || "schedule: window_s must be positive".into());
        check(&mut e, self.schedule.theta_bin_deg > 0.0, || "schedule: theta_bin_deg must be positive".into());

        let s = &self.sensitivity;
        check(&mut e, s.windows_per_condition >= 1, || "sensitivity: windows_per_condition must be at least 1".into());
        check(&mut e, s.confidence_sigmas > 0.0, || "sensitivity: confidence_sigmas must be positive".into());
        check(&mut e, !s.delta_df.is_empty() && s.delta_df.iter().all(|d| *d > 0.0 && *d < 1.0), || {
            "sensitivity: delta_df values must lie in (0, 1)".into()
        });
        check(&mut e, s.pair_rate_min_per_s > 0.0 && s.pair_rate_max_per_s > s.pair_rate_min_per_s, || {
            "sensitivity: need 0 < pair_rate_min_per_s < pair_rate_max_per_s".into()
        });
        check(&mut e, s.pair_rate_points >= 2, || "sensitivity: pair_rate_points must be at least 2".into());

        let d = &self.detector;
        check(&mut e, in_range(d.operating_temp_c, -100.0, 20.0), || {
            format!("detector: operating_temp_c {} outside [-100, 20]", d.operating_temp_c)
        });
        check(&mut e, d.intrinsic_dark_per_s >= 0.0 && d.intrinsic_dark_per_s < 2000.0, || {
            "detector: intrinsic_dark_per_s must lie in [0, 2000)".into()
        });
        check(&mut e, d.reserve_factor >= 1.0, || "detector: reserve_factor must be at least 1".into());
        check(&mut e, d.fluence_two_year_per_cm2 > 0.0, || "detector: fluence_two_year_per_cm2 must be positive".into());
        check(&mut e, d.ddd_two_year_mev_per_g > 0.0, || "detector: ddd_two_year_mev_per_g must be positive".into());
        check(&mut e, d.mission_years.iter().all(|y| *y >= 0.0), || "detector: mission_years must be non-negative".into());
        check(&mut e, d.delta_df > 0.0 && d.delta_df < 1.0, || "detector: delta_df must lie in (0, 1)".into());

        let c = &self.curves;
        check(&mut e, c.coherence_time_min_ps > 0.0 && c.coherence_time_max_ps > c.coherence_time_min_ps, || {
            "curves: need 0 < coherence_time_min_ps < coherence_time_max_ps".into()
        });
        check(&mut e, in_range(c.coherence_time_min_ps, 0.1, 10.0) && in_range(c.coherence_time_max_ps, 0.1, 10.0), || {
            "curves: coherence times must lie in [0.1, 10] ps".into()
        });
        check(&mut e, c.altitude_min_km >= 200.0 && c.altitude_max_km <= 1000.0 && c.altitude_max_km > c.altitude_min_km, || {
            "curves: altitude range must lie in [200, 1000] km and be increasing".into()
        });
        check(&mut e, c.overlap_altitudes_km.iter().all(|h| in_range(*h, 200.0, 1000.0)), || {
            "curves: overlap_altitudes_km must lie in [200, 1000]".into()
        });
        check(&mut e, c.altitude_coherence_times_ps.iter().all(|t| in_range(*t, 0.1, 10.0)), || {
            "curves: altitude_coherence_times_ps must lie in [0.1, 10]".into()
        });
        check(&mut e, c.zenith_max_deg > 0.0 && c.zenith_max_deg < 80.0, || "curves: zenith_max_deg must lie in (0, 80)".into());
        check(&mut e, c.coherence_time_points >= 2 && c.altitude_points >= 2 && c.zenith_points >= 2, || {
            "curves: every grid needs at least 2 points".into()
        });

        let h = &self.g2;
        check(&mut e, h.jitter_space_ns > 0.0 && h.jitter_ground_ns >= 0.0, || "g2: jitters must be positive".into());
        check(&mut e, h.bin_width_ps >= 10.0, || "g2: bin_width_ps must be at least 10".into());
        check(&mut e, h.span_ns * 1e3 >= 10.0 * h.bin_width_ps, || "g2: span must hold at least 10 bins".into());
        check(&mut e, h.duration_s > 0.0, || "g2: duration_s must be positive".into());
        check(&mut e, h.d_f_values.iter().all(|d| in_range(*d, 0.0, 1.0)), || "g2: d_f_values must lie in [0, 1]".into());

        let ch = &self.channel;
        check(&mut e, ch.chi.iter().all(|x| in_range(*x, 0.0, crate::event_channel::MAX_CHI)), || {
            format!("channel: chi values must lie in [0, {}]", crate::event_channel::MAX_CHI)
        });
        check(&mut e, in_range(ch.polarization_chi, 0.0, crate::event_channel::MAX_CHI), || {
            "channel: polarization_chi outside the weak-pumping guard".into()
        });
        check(&mut e, ch.xi.iter().all(|x| in_range(*x, 0.0, 1.0)), || "channel: xi values must lie in [0, 1]".into());
        check(&mut e, ch.eta.iter().all(|x| in_range(*x, 0.0, 1.0)), || "channel: eta values must lie in [0, 1]".into());
        check(&mut e, ch.coherent_cutoff >= 2 && ch.coherent_cutoff <= 16, || "channel: coherent_cutoff must lie in [2, 16]".into());
        check(&mut e, ch.polarization_cutoff >= 2 && ch.polarization_cutoff <= 4, || {
            "channel: polarization_cutoff must lie in [2, 4]".into()
        });
        check(&mut e, ch.coherent_alpha.abs() <= 2.0 && ch.coherent_beta.abs() <= 2.0, || {
            "channel: coherent amplitudes must satisfy |alpha|, |beta| <= 2".into()
        });
        check(&mut e, ch.phase_trials >= 1, || "channel: phase_trials must be at least 1".into());
        check(&mut e, !self.output.dir.is_empty(), || "output: dir must not be empty".into());
        e
    }

    pub fn link_geometry(&self) -> LinkGeometry {
        LinkGeometry::earth(self.geometry.altitude_km * 1e3, self.geometry.zenith_deg.to_radians())
    }

    pub fn spectral(&self) -> PhotonSpectralParams {
        PhotonSpectralParams {
            coherence_time_s: self.spectral.coherence_time_ps * 1e-12,
            center_wavelength_m: self.spectral.wavelength_nm * 1e-9,
        }
    }

    pub fn bandwidth_convention(&self) -> BandwidthConvention {
        match self.spectral.bandwidth_convention {
            BandwidthConventionName::Reciprocal => BandwidthConvention::Reciprocal,
            BandwidthConventionName::GaussianFwhm => BandwidthConvention::GaussianFwhm,
            BandwidthConventionName::Anchored => BandwidthConvention::anchored(),
        }
    }

    pub fn beam(&self) -> BeamParams {
        let l = &self.link;
        BeamParams {
            wavelength_m: self.spectral.wavelength_nm * 1e-9,
            tx_diameter_m: l.tx_diameter_cm * 1e-2,
            fried_r0_m: l.fried_r0_cm * 1e-2,
            pointing_jitter_rad: l.pointing_jitter_urad * 1e-6,
            rx_clear_aperture_m: l.rx_aperture_cm * 1e-2,
            obscuration_fraction: l.obscuration,
        }
    }

    pub fn optics(&self, best_case: bool) -> OpticsTrain {
        let l = &self.link;
        OpticsTrain {
            detector_efficiency: l.detector_efficiency,
            tx_transmission: l.tx_transmission,
            window_transmission: if best_case { l.window_transmission_best } else { l.window_transmission },
            rx_transmission: l.rx_transmission,
        }
    }

    pub fn rate_model(&self) -> RateModel {
        let r = &self.rates;
        RateModel {
            pair_production_rate: r.pair_rate_per_s,
            intrinsic_heralding: r.intrinsic_heralding,
            link_transmission: 10f64.powf(-self.link.total_loss_db / 10.0),
            ground_singles_rate: r.ground_background_per_s,
            space_noise_per_detector: r.space_noise_per_detector_per_s,
            space_dark_per_detector: r.space_dark_per_detector_per_s,
            noise_distribution: r.noise_distribution,
            coincidence_window_s: r.coincidence_window_ns * 1e-9,
        }
    }

    pub fn turbulence(&self) -> TurbulenceModel {
        TurbulenceModel {
            scintillation_index: self.turbulence.scintillation_index,
            correlation_window_s: self.turbulence.correlation_window_ms * 1e-3,
        }
    }

    pub fn schedule(&self) -> UtilizationSchedule {
        let s = &self.schedule;
        UtilizationSchedule {
            dark_cal: s.dark_cal,
            background_cal: s.background_cal,
            link_cal: s.link_cal,
            fps: s.fps,
            epps: s.epps,
            switching: s.switching,
        }
    }

    pub fn sensitivity_scenario(&self) -> SensitivityScenario {
        SensitivityScenario {
            rates: self.rate_model(),
            turbulence: self.turbulence(),
            windows: self.sensitivity.windows_per_condition,
            window_duration_s: self.schedule.window_s,
            epps_fraction: self.schedule.epps,
            baseline_d_f: 1.0,
        }
    }

    pub fn pass_scenario(&self) -> PassScenario {
        PassScenario {
            rates: self.rate_model(),
            turbulence: self.turbulence(),
            schedule: self.schedule(),
            window_s: self.schedule.window_s,
            altitude_m: self.geometry.altitude_km * 1e3,
            spectral: self.spectral(),
            max_zenith_rad: self.geometry.max_zenith_deg.to_radians(),
            loss_at_max_zenith_db: self.link.total_loss_db,
            zenith_atmospheric_loss_db: self.link.zenith_atmospheric_loss_db,
            theta_bin_rad: self.schedule.theta_bin_deg.to_radians(),
            force_unit_d_f: false,
        }
    }

    pub fn mission(&self) -> MissionEnvironment {
        MissionEnvironment {
            fluence_two_year: self.detector.fluence_two_year_per_cm2,
            ddd_two_year: self.detector.ddd_two_year_mev_per_g,
        }
    }

    pub fn apd_model(&self) -> ApdModel {
        let kind = self.detector.apd_model;
        detector_aging::calibrate_apd(
            kind.name(),
            &kind.reference_rows(),
            self.detector.fluence_two_year_per_cm2,
            self.detector.intrinsic_dark_per_s,
        )
        .expect("reference rows with a validated intrinsic rate")
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
