//! Gravitational time dilation along a ground-to-orbit photon path, the
//! resulting event overlap ξ and decoherence factor, and idealised pass
//! geometry for a circular orbit through zenith.

use std::f64::consts::PI;

use thiserror::Error;

use crate::numeric::{self, NumericError};

pub const EARTH_RADIUS_M: f64 = 6.371e6;
/// GM⊕/c² in metres.
pub const EARTH_MASS_LENGTH_M: f64 = 4.435e-3;
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
pub const DEFAULT_QUADRATURE_REL_TOL: f64 = 1e-10;

const MIN_ALTITUDE_M: f64 = 2e5;
const MAX_ALTITUDE_M: f64 = 1e6;
const MAX_ZENITH_RAD: f64 = 80.0 * PI / 180.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpacetimeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("time-dilation quadrature failed: {0}")]
    Quadrature(#[from] NumericError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub altitude_m: f64,
    pub zenith_rad: f64,
    pub earth_radius_m: f64,
    pub earth_mass_length_m: f64,
    pub light_speed_m_s: f64,
}

impl LinkGeometry {
    /// Geometry with Earth constants; no range guard is applied.
    pub fn earth(altitude_m: f64, zenith_rad: f64) -> Self {
        Self {
            altitude_m,
            zenith_rad,
            earth_radius_m: EARTH_RADIUS_M,
            earth_mass_length_m: EARTH_MASS_LENGTH_M,
            light_speed_m_s: SPEED_OF_LIGHT_M_S,
        }
    }

    /// Checks the model-validity guards: altitude in [200, 1000] km, zenith
    /// in [0, 80°), m/r_e < 1e-8. Returns every violation.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(MIN_ALTITUDE_M..=MAX_ALTITUDE_M).contains(&self.altitude_m) {
            errs.push(format!("altitude {} m outside [2e5, 1e6] m", self.altitude_m));
        }
        if !(0.0..MAX_ZENITH_RAD).contains(&self.zenith_rad) {
            errs.push(format!("zenith angle {} rad outside [0, 80 deg)", self.zenith_rad));
        }
        if !(self.earth_radius_m > 0.0) || !(self.earth_mass_length_m / self.earth_radius_m < 1e-8) {
            errs.push("earth mass length must satisfy m / r_e < 1e-8".to_string());
        }
        if !(self.light_speed_m_s > 0.0) {
            errs.push("light speed must be positive".to_string());
        }
        errs
    }

    pub fn slant_range_m(&self) -> f64 {
        slant_range(self.altitude_m, self.zenith_rad, self.earth_radius_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonSpectralParams {
    /// Temporal standard deviation of the pair wavepacket, seconds.
    pub coherence_time_s: f64,
    pub center_wavelength_m: f64,
}

impl PhotonSpectralParams {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(1e-13..=1e-11).contains(&self.coherence_time_s) {
            errs.push(format!("coherence time {} s outside [1e-13, 1e-11] s", self.coherence_time_s));
        }
        if !(self.center_wavelength_m > 0.0) {
            errs.push("center wavelength must be positive".to_string());
        }
        errs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceResult {
    pub delta_t_s: f64,
    pub kappa: f64,
    pub xi: f64,
    pub d_f: f64,
}

/// Δt = (1/c) ∫_{r_e}^{r_e+h} (m/r) √(1 + 2m/r + r_e² tan²θ / r²) dr.
pub fn time_dilation(geom: &LinkGeometry, rel_tol: f64) -> Result<f64, SpacetimeError> {
    if !(0.0..PI / 2.0).contains(&geom.zenith_rad) {
        return Err(SpacetimeError::InvalidArgument(format!(
            "zenith angle {} rad outside [0, pi/2)",
            geom.zenith_rad
        )));
    }
    if geom.altitude_m < 0.0 {
        return Err(SpacetimeError::InvalidArgument("altitude must be non-negative".into()));
    }
    let m = geom.earth_mass_length_m;
    let re = geom.earth_radius_m;
    let tan2 = geom.zenith_rad.tan().powi(2);
    let integrand = |r: f64| (m / r) * (1.0 + 2.0 * m / r + re * re * tan2 / (r * r)).sqrt();
    let q = numeric::integrate(integrand, re, re + geom.altitude_m, rel_tol, 0.0, 2000)?;
    Ok(q.value / geom.light_speed_m_s)
}

/// m h / (r_e c).
pub fn zenith_time_dilation_approx(geom: &LinkGeometry) -> f64 {
    geom.earth_mass_length_m * geom.altitude_m / (geom.earth_radius_m * geom.light_speed_m_s)
}

/// ξ = exp(−(Δt/d_t)²/2).
pub fn event_overlap(delta_t_s: f64, spectral: &PhotonSpectralParams) -> f64 {
    let kappa = delta_t_s / spectral.coherence_time_s;
    (-0.5 * kappa * kappa).exp()
}

/// D_f = η₁ η₂ ξ.
pub fn decoherence_factor(xi: f64, eta1: f64, eta2: f64) -> f64 {
    eta1 * eta2 * xi
}

pub fn decoherence(
    geom: &LinkGeometry,
    spectral: &PhotonSpectralParams,
    eta1: f64,
    eta2: f64,
) -> Result<DecoherenceResult, SpacetimeError> {
    if !(spectral.coherence_time_s > 0.0) {
        return Err(SpacetimeError::InvalidArgument("coherence time must be positive".into()));
    }
    let delta_t_s = time_dilation(geom, DEFAULT_QUADRATURE_REL_TOL)?;
    let kappa = delta_t_s / spectral.coherence_time_s;
    let xi = (-0.5 * kappa * kappa).exp();
    Ok(DecoherenceResult { delta_t_s, kappa, xi, d_f: decoherence_factor(xi, eta1, eta2) })
}

/// Distance from a ground station to a satellite at altitude `h` seen at
/// zenith angle θ.
pub fn slant_range(h: f64, theta: f64, re: f64) -> f64 {
    let c = theta.cos();
    (re * re * c * c + 2.0 * re * h + h * h).sqrt() - re * c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassSample {
    pub time_s: f64,
    /// Signed zenith angle; negative before culmination.
    pub zenith_rad: f64,
    pub range_m: f64,
    pub angular_rate_rad_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassProfile {
    pub samples: Vec<PassSample>,
    pub zenith_angular_rate_rad_s: f64,
    /// Time spent with |θ| ≤ max zenith.
    pub duration_s: f64,
}

/// Circular orbit through zenith, sampled uniformly in time between the two
/// instants at which |θ| equals `max_zenith`.
pub fn overhead_pass_profile(
    geom: &LinkGeometry,
    max_zenith_rad: f64,
    samples: usize,
) -> Result<PassProfile, SpacetimeError> {
    if !(max_zenith_rad > 0.0 && max_zenith_rad <= MAX_ZENITH_RAD) {
        return Err(SpacetimeError::InvalidArgument(format!(
            "max zenith {max_zenith_rad} rad outside (0, 80 deg]"
        )));
    }
    if samples < 2 {
        return Err(SpacetimeError::InvalidArgument("need at least two samples".into()));
    }
    let r = geom.earth_radius_m + geom.altitude_m;
    // Central angle at which the satellite is seen at the max zenith angle.
    let nadir = (geom.earth_radius_m * max_zenith_rad.sin() / r).asin();
    let t_max = (max_zenith_rad - nadir) / orbital_rate(geom);
    let samples_vec = (0..samples)
        .map(|i| pass_sample(geom, -t_max + 2.0 * t_max * i as f64 / (samples - 1) as f64))
        .collect();
    Ok(PassProfile {
        samples: samples_vec,
        zenith_angular_rate_rad_s: pass_sample(geom, 0.0).angular_rate_rad_s,
        duration_s: 2.0 * t_max,
    })
}

/// Angular rate of a circular orbit, √(GM/r³) with GM = m c².
pub fn orbital_rate(geom: &LinkGeometry) -> f64 {
    let r = geom.earth_radius_m + geom.altitude_m;
    let mu = geom.earth_mass_length_m * geom.light_speed_m_s * geom.light_speed_m_s;
    (mu / (r * r * r)).sqrt()
}

/// Position of an overhead pass `time_s` seconds after culmination.
pub fn pass_sample(geom: &LinkGeometry, time_s: f64) -> PassSample {
    let re = geom.earth_radius_m;
    let r = re + geom.altitude_m;
    let omega = orbital_rate(geom);
    let phi = omega * time_s;
    let x = r * phi.sin();
    let z = r * phi.cos() - re;
    let dx = r * omega * phi.cos();
    let dz = -r * omega * phi.sin();
    let rho2 = x * x + z * z;
    PassSample {
        time_s,
        zenith_rad: x.atan2(z),
        range_m: rho2.sqrt(),
        angular_rate_rad_s: (z * dx - x * dz) / rho2,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundDelay {
    pub fiber_length_m: f64,
    pub light_travel_m: f64,
}

/// Fibre length giving a delay of `processing_time_s` at group index n.
pub fn required_ground_delay(processing_time_s: f64, group_index: f64) -> Result<GroundDelay, SpacetimeError> {
    if processing_time_s < 0.0 || !(group_index >= 1.0) {
        return Err(SpacetimeError::InvalidArgument(
            "delay must be non-negative and group index at least 1".into(),
        ));
    }
    Ok(GroundDelay {
        fiber_length_m: processing_time_s * SPEED_OF_LIGHT_M_S / group_index,
        light_travel_m: processing_time_s * SPEED_OF_LIGHT_M_S,
    })
}

/// Two events separated by `dt_s` in time and `separation_m` in space are
/// space-like if light cannot cover the distance in the time difference.
pub fn is_spacelike(dt_s: f64, separation_m: f64) -> bool {
    SPEED_OF_LIGHT_M_S * dt_s.abs() < separation_m
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthConvention {
    /// Δλ = λ²/(c d_t).
    Reciprocal,
    /// Δλ = (2 ln 2 / π) λ²/(c d_t).
    GaussianFwhm,
    /// Δλ = k λ²/(c d_t) with an explicit factor.
    Calibrated(f64),
}

impl BandwidthConvention {
    /// Factor fixed by the anchor pair 0.8 ps ↔ 2 nm at 830 nm.
    pub fn anchored() -> Self {
        let lambda: f64 = 830e-9;
        BandwidthConvention::Calibrated(2e-9 * SPEED_OF_LIGHT_M_S * 0.8e-12 / (lambda * lambda))
    }

    pub fn factor(&self) -> f64 {
        match *self {
            BandwidthConvention::Reciprocal => 1.0,
            BandwidthConvention::GaussianFwhm => 2.0 * 2f64.ln() / PI,
            BandwidthConvention::Calibrated(k) => k,
        }
    }
}

/// Wavelength bandwidth corresponding to a coherence time.
pub fn coherence_bandwidth(
    coherence_time_s: f64,
    center_wavelength_m: f64,
    convention: BandwidthConvention,
) -> Result<f64, SpacetimeError> {
    if !(coherence_time_s > 0.0) {
        return Err(SpacetimeError::InvalidArgument("coherence time must be positive".into()));
    }
    Ok(convention.factor() * center_wavelength_m * center_wavelength_m
        / (SPEED_OF_LIGHT_M_S * coherence_time_s))
}
