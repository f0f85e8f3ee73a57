//! Uplink loss budget: atmosphere, aperture clipping, pointing jitter and
//! optics. Losses are positive dB magnitudes; transmission is 10^(−dB/10).

use std::f64::consts::PI;

use thiserror::Error;

use crate::numeric;

/// FWHM diameter per e² diameter of a Gaussian intensity profile, √(ln 2 / 2).
pub const FWHM_PER_E2: f64 = 0.588_705_011_257_737_3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("spot-size objective is not unimodal on [{lo} m, {hi} m]; scan: {scan:?}")]
    NonUnimodal { lo: f64, hi: f64, scan: Vec<(f64, f64)> },
}

fn require(cond: bool, msg: impl Into<String>) -> Result<(), LinkError> {
    if cond {
        Ok(())
    } else {
        Err(LinkError::InvalidArgument(msg.into()))
    }
}

pub fn db_to_transmission(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

pub fn transmission_to_db(t: f64) -> f64 {
    -10.0 * t.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LossComponents {
    pub atmospheric_db: f64,
    pub clipping_db: f64,
    pub pointing_db: f64,
    pub optics_db: f64,
}

impl LossComponents {
    /// {4.5, 28, 6, 7.5} dB.
    pub const WORST_CASE: LossComponents =
        LossComponents { atmospheric_db: 4.5, clipping_db: 28.0, pointing_db: 6.0, optics_db: 7.5 };
    /// {3.5, 26, 6, 6.5} dB.
    pub const BEST_CASE: LossComponents =
        LossComponents { atmospheric_db: 3.5, clipping_db: 26.0, pointing_db: 6.0, optics_db: 6.5 };

    pub fn as_array(&self) -> [(&'static str, f64); 4] {
        [
            ("atmospheric", self.atmospheric_db),
            ("clipping", self.clipping_db),
            ("pointing", self.pointing_db),
            ("optics", self.optics_db),
        ]
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        for (name, v) in self.as_array() {
            require((0.0..=80.0).contains(&v), format!("{name} loss {v} dB outside [0, 80] dB"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub components: LossComponents,
    pub total_db: f64,
    pub transmission: f64,
}

pub fn total_link_budget(components: LossComponents) -> Result<LinkBudget, LinkError> {
    components.validate()?;
    let total_db: f64 = components.as_array().iter().map(|(_, v)| v).sum();
    Ok(LinkBudget { components, total_db, transmission: db_to_transmission(total_db) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    pub wavelength_m: f64,
    pub tx_diameter_m: f64,
    pub fried_r0_m: f64,
    pub pointing_jitter_rad: f64,
    pub rx_clear_aperture_m: f64,
    pub obscuration_fraction: f64,
}

impl BeamParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (name, v) in [
            ("wavelength", self.wavelength_m),
            ("tx_diameter", self.tx_diameter_m),
            ("rx_clear_aperture", self.rx_clear_aperture_m),
        ] {
            if !(v > 0.0) {
                errs.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.05..=1.0).contains(&self.fried_r0_m) {
            errs.push(format!("fried r0 {} m outside [0.05, 1.0] m", self.fried_r0_m));
        }
        if !(self.pointing_jitter_rad >= 0.0) {
            errs.push("pointing jitter must be non-negative".into());
        }
        if !(0.0..=0.5).contains(&self.obscuration_fraction) {
            errs.push(format!("obscuration {} outside [0, 0.5]", self.obscuration_fraction));
        }
        errs
    }
}

/// Which intensity level a beam diameter refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpotConvention {
    /// Half maximum, √(2 ln 2)·w.
    Fwhm,
    /// 1/e² of the peak, 2w.
    E2,
    /// 1/e of the peak, √2·w.
    OneOverE,
}

impl SpotConvention {
    /// Diameter in this convention per unit e² diameter.
    pub fn per_e2(self) -> f64 {
        match self {
            SpotConvention::Fwhm => FWHM_PER_E2,
            SpotConvention::E2 => 1.0,
            SpotConvention::OneOverE => std::f64::consts::FRAC_1_SQRT_2,
        }
    }
}

fn to_convention(e2_diameter: f64, convention: SpotConvention) -> f64 {
    e2_diameter * convention.per_e2()
}

pub fn to_e2_diameter(diameter: f64, convention: SpotConvention) -> f64 {
    diameter / convention.per_e2()
}

pub fn fwhm_to_e2_diameter(fwhm: f64) -> f64 {
    to_e2_diameter(fwhm, SpotConvention::Fwhm)
}

/// Airmass model: `zenith_loss_db · sec θ`, valid for θ ≤ 70°.
pub fn atmospheric_loss_db(theta_rad: f64, zenith_loss_db: f64) -> Result<f64, LinkError> {
    require(
        (0.0..=70f64.to_radians() + 1e-12).contains(&theta_rad),
        format!("zenith angle {theta_rad} rad outside [0, 70 deg]"),
    )?;
    require(zenith_loss_db >= 0.0, "zenith loss must be non-negative")?;
    Ok(zenith_loss_db / theta_rad.cos())
}

/// Far-field Gaussian spot: waist D/2, radius λL/(π w₀).
pub fn diffraction_spot_diameter(
    tx_diameter_m: f64,
    range_m: f64,
    wavelength_m: f64,
    convention: SpotConvention,
) -> Result<f64, LinkError> {
    require(tx_diameter_m > 0.0 && range_m > 0.0 && wavelength_m > 0.0, "inputs must be positive")?;
    let w0 = tx_diameter_m / 2.0;
    let w = wavelength_m * range_m / (PI * w0);
    Ok(to_convention(2.0 * w, convention))
}

/// Turbulence-broadened spot: the diffraction spot scaled by exp(σ²/2) with
/// phase variance σ² = 1.03 (D/r₀)^(5/3), so that the peak irradiance falls
/// by the Strehl factor exp(−σ²). The product has a minimum in D near r₀.
pub fn turbulent_spot_diameter(
    tx_diameter_m: f64,
    fried_r0_m: f64,
    range_m: f64,
    wavelength_m: f64,
    convention: SpotConvention,
) -> Result<f64, LinkError> {
    require(fried_r0_m > 0.0, "fried r0 must be positive")?;
    let diff = diffraction_spot_diameter(tx_diameter_m, range_m, wavelength_m, convention)?;
    let sigma2 = 1.03 * (tx_diameter_m / fried_r0_m).powf(5.0 / 3.0);
    Ok(diff * (0.5 * sigma2).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalAperture {
    pub diameter_m: f64,
    pub spot_fwhm_m: f64,
}

/// Transmit diameter minimising the turbulent spot over [2 cm, 1 m] by
/// golden-section search (1 mm tolerance). A coarse scan checks unimodality
/// first and is returned in the error if it fails.
pub fn optimal_tx_diameter(fried_r0_m: f64, range_m: f64, wavelength_m: f64) -> Result<OptimalAperture, LinkError> {
    require((0.1..=0.5).contains(&fried_r0_m), format!("fried r0 {fried_r0_m} m outside [0.1, 0.5] m"))?;
    let (lo, hi) = (0.02, 1.0);
    let spot = |d: f64| {
        turbulent_spot_diameter(d, fried_r0_m, range_m, wavelength_m, SpotConvention::Fwhm)
            .unwrap_or(f64::INFINITY)
    };
    let scan: Vec<(f64, f64)> = (0..=98).map(|i| lo + i as f64 * 0.01).map(|d| (d, spot(d))).collect();
    let descents = scan.windows(3).filter(|w| w[1].1 < w[0].1 && w[1].1 <= w[2].1).count();
    let rising_then_falling = scan.windows(3).any(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1);
    if descents != 1 || rising_then_falling {
        return Err(LinkError::NonUnimodal { lo, hi, scan });
    }
    let d = numeric::golden_section_min(spot, lo, hi, 1e-3);
    Ok(OptimalAperture { diameter_m: d, spot_fwhm_m: spot(d) })
}

/// Power captured by an obscured circular aperture from a Gaussian beam:
/// T = (1 − obsc²)(1 − exp(−2a²/w²)).
pub fn clipping_loss_db(beam_e2_diameter_m: f64, rx_aperture_m: f64, obscuration: f64) -> Result<f64, LinkError> {
    require(beam_e2_diameter_m > 0.0 && rx_aperture_m > 0.0, "beam and aperture must be positive")?;
    require((0.0..=0.5).contains(&obscuration), format!("obscuration {obscuration} outside [0, 0.5]"))?;
    let w = beam_e2_diameter_m / 2.0;
    let a = rx_aperture_m / 2.0;
    let t = (1.0 - obscuration * obscuration) * (1.0 - (-2.0 * a * a / (w * w)).exp());
    Ok(transmission_to_db(t))
}

/// Jitter-averaged coupling of a Gaussian beam with radial jitter σ = θ_j L:
/// T = w²/(w² + 2σ²).
pub fn pointing_loss_db(jitter_rad: f64, range_m: f64, beam_e2_radius_m: f64) -> Result<f64, LinkError> {
    require(jitter_rad >= 0.0 && range_m > 0.0 && beam_e2_radius_m > 0.0, "inputs must be positive")?;
    let sigma = jitter_rad * range_m;
    let w2 = beam_e2_radius_m * beam_e2_radius_m;
    Ok(transmission_to_db(w2 / (w2 + 2.0 * sigma * sigma)))
}

pub fn optics_loss_db(
    detector_efficiency: f64,
    tx_transmission: f64,
    window_transmission: f64,
    rx_transmission: f64,
) -> Result<f64, LinkError> {
    let f = [detector_efficiency, tx_transmission, window_transmission, rx_transmission];
    require(f.iter().all(|x| *x > 0.0 && *x <= 1.0), "optical efficiencies must lie in (0, 1]")?;
    Ok(transmission_to_db(f.iter().product()))
}

/// Optical train efficiencies feeding [`optics_loss_db`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsTrain {
    pub detector_efficiency: f64,
    pub tx_transmission: f64,
    pub window_transmission: f64,
    pub rx_transmission: f64,
}

impl OpticsTrain {
    pub fn loss_db(&self) -> Result<f64, LinkError> {
        optics_loss_db(self.detector_efficiency, self.tx_transmission, self.window_transmission, self.rx_transmission)
    }
}

/// Component losses evaluated from beam, geometry and optics parameters for
/// a given receiver-plane beam diameter.
pub fn modeled_components(
    beam: &BeamParams,
    optics: &OpticsTrain,
    zenith_rad: f64,
    zenith_loss_db: f64,
    range_m: f64,
    beam_diameter_at_receiver_m: f64,
    convention: SpotConvention,
) -> Result<LossComponents, LinkError> {
    let e2 = to_e2_diameter(beam_diameter_at_receiver_m, convention);
    Ok(LossComponents {
        atmospheric_db: atmospheric_loss_db(zenith_rad, zenith_loss_db)?,
        clipping_db: clipping_loss_db(e2, beam.rx_clear_aperture_m, beam.obscuration_fraction)?,
        pointing_db: pointing_loss_db(beam.pointing_jitter_rad, range_m, e2 / 2.0)?,
        optics_db: optics.loss_db()?,
    })
}
