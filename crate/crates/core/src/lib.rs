//! Joint transmit and reflect beamforming for secure links aided by an
//! intelligent reflecting surface (IRS).
//!
//! A multi-antenna access point serves a single-antenna user while a
//! single-antenna eavesdropper listens. The secrecy rate is maximized by
//! alternating between a closed-form transmit beamformer ([`txbf`]) and a
//! semidefinite-relaxation reflect design ([`irs`], [`sdp`]); [`altopt`] runs
//! the loop and the benchmark schemes, [`sim`] drives Monte Carlo sweeps.

pub mod altopt;
pub mod channel;
pub mod config;
pub mod error;
pub mod irs;
pub mod linalg;
pub mod rates;
pub mod rng;
pub mod sdp;
pub mod sim;
pub mod txbf;


pub use altopt::{alternating_optimize, run_scheme, SchemeId};
pub use channel::{generate_channels, ChannelSet};
pub use config::SystemConfig;
pub use error::{Error, Result};
pub use rates::{rates, BeamformingSolution, LinkRates};
