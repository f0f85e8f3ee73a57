//! Simulation toolkit for a gravitational-decoherence test over a
//! space-to-ground entangled photon link.
//!
//! The crate is organised by concern:
//!
//! * [`fock`] and [`event_channel`]: the event-operator map realised as an
//!   optical circuit on a truncated Fock space.
//! * [`spacetime`]: time dilation along the link, event overlap, pass geometry.
//! * [`link_budget`]: atmospheric, clipping, pointing and optics losses.
//! * [`counting_stats`]: turbulence-modulated photon counting, heralding
//!   efficiency, g2 histograms and the sensitivity solver.
//! * [`detector_aging`]: radiation-induced dark counts of APDs.
//! * [`scenario`]: configuration, orchestration and CSV/JSON emitters.

pub mod counting_stats;
pub mod detector_aging;
pub mod event_channel;
pub mod fock;
pub mod link_budget;
pub mod numeric;
pub mod scenario;
pub mod spacetime;

pub use num_complex::Complex64;

use thiserror::Error;

/// Top-level error. Every module error converts into it, and each one
/// maps onto the CLI's exit-code classes through [`Error::is_validation`].
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Fock(#[from] fock::FockError),
    #[error(transparent)]
    Spacetime(#[from] spacetime::SpacetimeError),
    #[error(transparent)]
    Link(#[from] link_budget::LinkError),
    #[error(transparent)]
    Stats(#[from] counting_stats::StatsError),
    #[error(transparent)]
    Aging(#[from] detector_aging::AgingError),
    #[error(transparent)]
    Config(#[from] scenario::ConfigError),
    #[error(transparent)]
    Numeric(#[from] numeric::NumericError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for input/guard violations, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Numeric(_) => false,
            Error::Fock(e) => !matches!(e, fock::FockError::TruncationRisk { .. }),
            Error::Spacetime(e) => !matches!(e, spacetime::SpacetimeError::Quadrature(_)),
            Error::Link(e) => !matches!(e, link_budget::LinkError::NonUnimodal { .. }),
            Error::Stats(_) | Error::Aging(_) | Error::Config(_) | Error::Io { .. } => true,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
