//! The event-operator map realised as a linear-optics circuit.
//!
//! The input state on modes 1, 2 is copied to ancilla modes 3, 4. Mode 3 is
//! displaced by γ, modes 1 and 3 meet on a beamsplitter of reflectivity ξ,
//! channel losses act on modes 1, 2, and modes 3, 4 are traced out.
//!
//! Beamsplitter convention (Heisenberg picture):
//!
//! ```text
//! U A1† U† = √ξ A1† − √(1−ξ) A3†
//! U A3† U† = √ξ A3† + √(1−ξ) A1†
//! ```
//!
//! which is `exp(φ (a1† a3 − a1 a3†))` with `cos φ = √ξ`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::fock::{DensityState, FockError, FockSpace, TruncatedFockState};

/// Default guard on |χ| for the weak-pumping regime.
pub const MAX_CHI: f64 = 0.3;

/// Extra Fock levels used when exponentiating the displacement generator.
const DISPLACEMENT_PADDING: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdcParams {
    pub chi: Complex64,
}

impl SpdcParams {
    pub fn new(chi: Complex64) -> Result<Self, FockError> {
        Self::with_guard(chi, MAX_CHI)
    }

    pub fn with_guard(chi: Complex64, max_abs: f64) -> Result<Self, FockError> {
        if !chi.norm().is_finite() || chi.norm() > max_abs {
            return Err(FockError::InvalidArgument(format!(
                "|chi| = {} exceeds the weak-pumping guard {max_abs}",
                chi.norm()
            )));
        }
        Ok(Self { chi })
    }

    pub fn real(chi: f64) -> Result<Self, FockError> {
        Self::new(Complex64::new(chi, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub xi: f64,
    pub gamma: Complex64,
    pub eta1: f64,
    pub eta2: f64,
}

impl ChannelParams {
    pub fn new(xi: f64, eta1: f64, eta2: f64) -> Result<Self, FockError> {
        for (name, v) in [("xi", xi), ("eta1", eta1), ("eta2", eta2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(FockError::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(Self { xi, gamma: Complex64::new(0.0, 0.0), eta1, eta2 })
    }

    pub fn with_gamma(mut self, gamma: Complex64) -> Self {
        self.gamma = gamma;
        self
    }
}

/// Cutoff policy for displaced/coherent inputs: `max(2, ⌈|α|² + 3|α| + 3⌉)`.
pub fn default_cutoff(alpha_abs: f64) -> usize {
    ((alpha_abs * alpha_abs + 3.0 * alpha_abs + 3.0).ceil() as usize).max(2)
}

/// Smallest cutoff at which the squeezed-vacuum tail weight |χ|^(2(c+1))
/// drops below 1e-16.
pub fn spdc_cutoff(chi_abs: f64) -> usize {
    if chi_abs <= 0.0 {
        return 2;
    }
    let c = (1e-16f64.ln() / (2.0 * chi_abs.ln())).ceil() as usize;
    c.saturating_sub(1).max(2)
}

/// Two-mode squeezed vacuum on modes "1","2": amplitude of |n,n⟩ is χⁿ,
/// truncated at `cutoff` and normalised. The |1,1⟩/|0,0⟩ ratio is exactly χ.
pub fn spdc_state(chi: &SpdcParams, cutoff: usize) -> Result<TruncatedFockState, FockError> {
    if cutoff < 2 {
        return Err(FockError::InvalidArgument("spdc_state needs cutoff >= 2".into()));
    }
    let space = FockSpace::new(&["1", "2"], cutoff)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); space.dimension()];
    let mut term = Complex64::new(1.0, 0.0);
    for n in 0..=cutoff {
        amps[space.index_of(&[n, n])?] = term;
        term *= chi.chi;
    }
    Ok(normalize(space, amps))
}

/// `|00⟩ + χ|11⟩`, normalised. Only valid to first order in χ.
pub fn spdc_state_first_order(chi: &SpdcParams, cutoff: usize) -> Result<TruncatedFockState, FockError> {
    if cutoff < 2 {
        return Err(FockError::InvalidArgument("spdc_state needs cutoff >= 2".into()));
    }
    let space = FockSpace::new(&["1", "2"], cutoff)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); space.dimension()];
    amps[0] = Complex64::new(1.0, 0.0);
    amps[space.index_of(&[1, 1])?] = chi.chi;
    Ok(normalize(space, amps))
}

/// Polarisation-entangled pairs on modes 1H, 1V, 2H, 2V: independent
/// squeezed vacua in H and V, each with amplitude χ/√2.
pub fn polarization_spdc_state(chi: &SpdcParams, cutoff: usize) -> Result<TruncatedFockState, FockError> {
    if cutoff < 2 {
        return Err(FockError::InvalidArgument("polarization state needs cutoff >= 2".into()));
    }
    let space = FockSpace::new(&["1H", "1V", "2H", "2V"], cutoff)?;
    let half = chi.chi / 2f64.sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); space.dimension()];
    for h in 0..=cutoff {
        for v in 0..=cutoff {
            amps[space.index_of(&[h, v, h, v])?] = half.powu((h + v) as u32);
        }
    }
    Ok(normalize(space, amps))
}

fn normalize(space: FockSpace, mut amps: Vec<Complex64>) -> TruncatedFockState {
    let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= n);
    TruncatedFockState::from_amplitudes(space, amps).expect("normalised by construction")
}

/// Product of coherent states, truncated without renormalisation; the
/// missing weight is recorded as leakage.
pub fn coherent_state<S: AsRef<str>>(
    labels: &[S],
    alphas: &[Complex64],
    cutoff: usize,
) -> Result<TruncatedFockState, FockError> {
    if labels.len() != alphas.len() {
        return Err(FockError::InvalidArgument("one amplitude per mode is required".into()));
    }
    let mut state: Option<TruncatedFockState> = None;
    for (label, &alpha) in labels.iter().zip(alphas) {
        let space = FockSpace::new(&[label.as_ref()], cutoff)?;
        let mut amps = Vec::with_capacity(cutoff + 1);
        let mut term = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..=cutoff {
            if n > 0 {
                term = term * alpha / (n as f64).sqrt();
            }
            amps.push(term);
        }
        let single = TruncatedFockState::from_amplitudes(space, amps)?;
        let leak = 1.0 - single.norm_sqr();
        let single = single.with_leakage(leak);
        state = Some(match state {
            None => single,
            Some(s) => s.tensor(&single)?,
        });
    }
    state.ok_or_else(|| FockError::InvalidArgument("no modes given".into()))
}

fn copy_label(label: &str) -> Result<String, FockError> {
    let mut chars = label.chars();
    let head = match chars.next() {
        Some('1') => '3',
        Some('2') => '4',
        _ => {
            return Err(FockError::InvalidArgument(format!(
                "cannot derive a copy label for mode {label:?}; expected a label starting with 1 or 2"
            )))
        }
    };
    Ok(std::iter::once(head).chain(chars).collect())
}

/// `s ⊗ s` with the copy relabelled 1→3, 2→4 (polarisation suffixes kept).
pub fn duplicate_state(s: &TruncatedFockState) -> Result<TruncatedFockState, FockError> {
    let labels: Vec<String> = s.labels().iter().map(|l| copy_label(l)).collect::<Result<_, _>>()?;
    s.tensor(&s.relabel(&labels)?)
}

/// γ = α₁ (1 − √ξ − √(1−ξ)) / √(1−ξ). Undefined at ξ = 1.
pub fn event_gamma(xi: f64, alpha1: Complex64) -> Result<Complex64, FockError> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(FockError::InvalidArgument(format!("xi = {xi} outside [0, 1]")));
    }
    if xi == 1.0 {
        return Err(FockError::SingularParameter(
            "gamma is 0/0 at xi = 1; use event_gamma_continuous".into(),
        ));
    }
    let s = (1.0 - xi).sqrt();
    Ok(alpha1 * ((1.0 - xi.sqrt() - s) / s))
}

/// [`event_gamma`] extended to ξ = 1 by its limit, −α₁.
pub fn event_gamma_continuous(xi: f64, alpha1: Complex64) -> Result<Complex64, FockError> {
    if xi == 1.0 {
        return Ok(-alpha1);
    }
    event_gamma(xi, alpha1)
}

/// Displacement operator matrix on `levels` Fock levels, obtained from the
/// exponential on an enlarged space so the retained block is not distorted
/// by the truncated generator.
fn displacement_matrix(gamma: Complex64, levels: usize) -> DMatrix<Complex64> {
    let big = levels + DISPLACEMENT_PADDING + (4.0 * gamma.norm_sqr()).ceil() as usize;
    let mut g = DMatrix::<Complex64>::zeros(big, big);
    for n in 0..big - 1 {
        let s = ((n + 1) as f64).sqrt();
        g[(n + 1, n)] += gamma * s;
        g[(n, n + 1)] -= gamma.conj() * s;
    }
    g.exp().view((0, 0), (levels, levels)).into_owned()
}

/// Applies D(γ) = exp(γa† − γ*a) to one mode. The norm pushed above the
/// cutoff is added to the state's leakage.
pub fn apply_displacement(
    s: &TruncatedFockState,
    mode: &str,
    gamma: Complex64,
) -> Result<TruncatedFockState, FockError> {
    let g = gamma.norm();
    let required = g * g + 3.0 * g + 3.0;
    if gamma != Complex64::new(0.0, 0.0) && required > s.cutoff() as f64 {
        return Err(FockError::TruncationRisk { required, cutoff: s.cutoff() });
    }
    if gamma == Complex64::new(0.0, 0.0) {
        s.space().mode_index(mode)?;
        return Ok(s.clone());
    }
    s.apply_single_mode(mode, &displacement_matrix(gamma, s.cutoff() + 1))
}

/// Event beamsplitter with reflectivity ξ on `(mode_a, mode_b)`.
pub fn apply_event_beamsplitter(
    s: &TruncatedFockState,
    mode_a: &str,
    mode_b: &str,
    xi: f64,
) -> Result<TruncatedFockState, FockError> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(FockError::InvalidArgument(format!("xi = {xi} outside [0, 1]")));
    }
    s.apply_rotation(mode_a, mode_b, xi.sqrt().acos())
}

/// Loss of transmission η on one mode, realised literally: a fresh vacuum
/// ancilla, a beamsplitter of transmissivity η, then a trace over the ancilla.
pub fn apply_loss(s: &TruncatedFockState, mode: &str, eta: f64) -> Result<DensityState, FockError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(FockError::InvalidArgument(format!("eta = {eta} outside [0, 1]")));
    }
    let mut anc = String::from("loss");
    while s.labels().contains(&anc) {
        anc.push('_');
    }
    let widened = s.tensor(&TruncatedFockState::vacuum(&[anc.as_str()], s.cutoff())?)?;
    let mixed = widened.apply_rotation(mode, &anc, eta.sqrt().acos())?;
    let keep: Vec<&str> = s.labels().iter().map(String::as_str).collect();
    mixed.reduce(&keep)
}

pub fn partial_trace(rho: &DensityState, keep: &[&str]) -> Result<DensityState, FockError> {
    rho.partial_trace(keep)
}

/// Tr{Π_C ρ}: at least one photon in each of the two modes.
pub fn coincidence_expectation(rho: &DensityState, mode_i: &str, mode_j: &str) -> Result<f64, FockError> {
    let i = rho.space().mode_index(mode_i)?;
    let j = rho.space().mode_index(mode_j)?;
    if i == j {
        return Err(FockError::InvalidArgument("coincidence needs two distinct modes".into()));
    }
    Ok(rho.probability(|occ| occ[i] > 0 && occ[j] > 0))
}

/// Tr{Π_i ρ}: at least one photon in the mode.
pub fn singles_expectation(rho: &DensityState, mode: &str) -> Result<f64, FockError> {
    let i = rho.space().mode_index(mode)?;
    Ok(rho.probability(|occ| occ[i] > 0))
}

/// Input family for [`run_event_channel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputKind {
    Spdc { chi: SpdcParams },
    Coherent { alpha: Complex64, beta: Complex64 },
    PolarizationSpdc { chi: SpdcParams },
}

/// Closed-form first-order expectations for a channel run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSummary {
    /// ξη₁η₂|χ|²/(1+|χ|²) for pair inputs (same-polarisation for the
    /// polarisation case); 0 for coherent inputs.
    pub coincidence: f64,
    /// η₁|χ|²/(1+|χ|²), or 1 − e^(−η₁|α|²) for coherent inputs.
    pub singles1: f64,
    pub singles2: f64,
    /// Tolerance on |oracle − analytic| coincidences: 5|χ|⁴.
    pub coincidence_tolerance: f64,
    /// Upper bound on cross-polarisation coincidences: 2|χ|⁴.
    pub cross_polarization_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRun {
    pub reduced: DensityState,
    pub params: ChannelParams,
    pub cutoff: usize,
    pub leakage: f64,
    pub analytic: AnalyticSummary,
}

impl ChannelRun {
    /// Mode labels of the two detected arms.
    pub fn arms(&self) -> (&str, &str) {
        let l = self.reduced.labels();
        if l.len() == 2 {
            (&l[0], &l[1])
        } else {
            ("1H", "2H")
        }
    }

    pub fn coincidence(&self) -> Result<f64, FockError> {
        let (a, b) = self.arms();
        coincidence_expectation(&self.reduced, a, b)
    }

    pub fn singles(&self, arm: usize) -> Result<f64, FockError> {
        let labels = self.reduced.labels();
        if labels.len() == 2 {
            singles_expectation(&self.reduced, &labels[arm])
        } else {
            let (h, v) = if arm == 0 { (0, 1) } else { (2, 3) };
            Ok(self.reduced.probability(|occ| occ[h] + occ[v] > 0))
        }
    }

    /// P(1H∧2H) + P(1V∧2V).
    pub fn same_polarization_coincidence(&self) -> Result<f64, FockError> {
        Ok(coincidence_expectation(&self.reduced, "1H", "2H")?
            + coincidence_expectation(&self.reduced, "1V", "2V")?)
    }

    /// P(1H∧2V) + P(1V∧2H).
    pub fn cross_polarization_coincidence(&self) -> Result<f64, FockError> {
        Ok(coincidence_expectation(&self.reduced, "1H", "2V")?
            + coincidence_expectation(&self.reduced, "1V", "2H")?)
    }
}

/// Runs the full circuit: duplicate → D(γ) on the mode-3 copies → event
/// beamsplitter(s) → trace over modes 3, 4 → losses on modes 1, 2.
///
/// Losses are applied after the trace; both are local to disjoint modes and
/// commute. `cutoff = None` picks a cutoff from the input amplitudes.
pub fn run_event_channel(
    input: InputKind,
    params: ChannelParams,
    cutoff: Option<usize>,
) -> Result<ChannelRun, FockError> {
    ChannelParams::new(params.xi, params.eta1, params.eta2)?;
    let (state, gamma, cutoff, arms1, arms2): (TruncatedFockState, Complex64, usize, Vec<&str>, Vec<&str>) =
        match input {
            InputKind::Spdc { chi } => {
                let c = cutoff.unwrap_or_else(|| spdc_cutoff(chi.chi.norm()));
                (spdc_state(&chi, c)?, Complex64::new(0.0, 0.0), c, vec!["1"], vec!["2"])
            }
            InputKind::PolarizationSpdc { chi } => {
                let c = cutoff.unwrap_or(3);
                (polarization_spdc_state(&chi, c)?, Complex64::new(0.0, 0.0), c, vec!["1H", "1V"], vec!["2H", "2V"])
            }
            InputKind::Coherent { alpha, beta } => {
                let g = event_gamma_continuous(params.xi, alpha)?;
                let c = cutoff.unwrap_or_else(|| default_cutoff(alpha.norm().max(beta.norm()) + g.norm()));
                (coherent_state(&["1", "2"], &[alpha, beta], c)?, g, c, vec!["1"], vec!["2"])
            }
        };

    let mut psi = duplicate_state(&state)?;
    for a in &arms1 {
        let copy = copy_label(a)?;
        psi = apply_displacement(&psi, &copy, gamma)?;
    }
    for a in &arms1 {
        psi = apply_event_beamsplitter(&psi, a, &copy_label(a)?, params.xi)?;
    }
    let keep: Vec<&str> = arms1.iter().chain(arms2.iter()).copied().collect();
    let mut rho = psi.reduce(&keep)?;
    for a in &arms1 {
        rho = rho.apply_loss(a, params.eta1)?;
    }
    for a in &arms2 {
        rho = rho.apply_loss(a, params.eta2)?;
    }

    let analytic = match input {
        InputKind::Spdc { chi } | InputKind::PolarizationSpdc { chi } => {
            let p = chi.chi.norm_sqr();
            let first = p / (1.0 + p);
            AnalyticSummary {
                coincidence: params.xi * params.eta1 * params.eta2 * first,
                singles1: params.eta1 * first,
                singles2: params.eta2 * first,
                coincidence_tolerance: 5.0 * p * p,
                cross_polarization_bound: 2.0 * p * p,
            }
        }
        InputKind::Coherent { alpha, beta } => AnalyticSummary {
            coincidence: (1.0 - (-params.eta1 * alpha.norm_sqr()).exp())
                * (1.0 - (-params.eta2 * beta.norm_sqr()).exp()),
            singles1: 1.0 - (-params.eta1 * alpha.norm_sqr()).exp(),
            singles2: 1.0 - (-params.eta2 * beta.norm_sqr()).exp(),
            coincidence_tolerance: 0.0,
            cross_polarization_bound: 0.0,
        },
    };

    Ok(ChannelRun {
        reduced: rho,
        params: params.with_gamma(gamma),
        cutoff,
        leakage: psi.leakage(),
        analytic,
    })
}

/// |⟨Π_C⟩ after exp(−iδn̂) on `mode` − ⟨Π_C⟩ without it|, with Π_C taken on
/// the first two modes of `rho`.
pub fn phase_delay_invariance_check(rho: &DensityState, mode: &str, delta: f64) -> Result<f64, FockError> {
    let labels = rho.labels();
    if labels.len() < 2 {
        return Err(FockError::InvalidArgument("need at least two modes".into()));
    }
    let (a, b) = (labels[0].clone(), labels[1].clone());
    let before = coincidence_expectation(rho, &a, &b)?;
    let after = coincidence_expectation(&rho.apply_phase(mode, delta)?, &a, &b)?;
    Ok((after - before).abs())
}
