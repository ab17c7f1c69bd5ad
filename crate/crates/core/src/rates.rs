//! Composite channels and achievable / secrecy rates for a candidate `(w, q)`.

use crate::channel::{CRow, ChannelSet};
use crate::config::SystemConfig;
use crate::error::{invalid, Result};
use crate::linalg::CVector;

/// Result of a beamforming scheme on one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    /// Transmit beamformer, length `M`, in sqrt(watts).
    pub w: CVector,
    /// Unit-modulus reflection coefficients, length `N` (empty without an IRS).
    pub q: CVector,
    pub rate_user: f64,
    pub rate_eve: f64,
    pub secrecy_rate: f64,
    /// `R_U - R_E` after initialization and after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    /// Secrecy-rate upper bound from the relaxed reflect problem, bps/Hz.
    pub upper_bound: Option<f64>,
    /// Worst `max(primal, dual, gap)` over the SDP solves of the run.
    pub sdp_certificate: Option<f64>,
    /// Whether the stopping rule fired before the iteration cap.
    pub converged: bool,
}

/// `(R_U, R_E, [R_U - R_E]^+)` in bps/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    pub user: f64,
    pub eve: f64,
    pub secrecy: f64,
}

impl LinkRates {
    /// Unclamped `R_U - R_E`.
    pub fn difference(&self) -> f64 {
        self.user - self.eve
    }
}

/// Composite channels `h_IU diag(q) H_AI + h_AU` and the eavesdropper analogue.
pub fn effective_channels(ch: &ChannelSet, q: &CVector) -> Result<(CRow, CRow)> {
    let n = ch.num_elements();
    if q.len() != n {
        return Err(invalid(format!("q has length {}, expected N = {n}", q.len())));
    }
    if q.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(invalid("q entries must be finite"));
    }
    if n == 0 {
        return Ok((ch.h_au.clone(), ch.h_ae.clone()));
    }
    let qt = q.transpose();
    let g_user = ch.h_iu.component_mul(&qt) * &ch.h_ai + &ch.h_au;
    let g_eve = ch.h_ie.component_mul(&qt) * &ch.h_ai + &ch.h_ae;
    Ok((g_user, g_eve))
}

/// `|g w|^2`.
pub(crate) fn received_power(g: &CRow, w: &CVector) -> f64 {
    g.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<num_complex::Complex64>().norm_sqr()
}

pub fn rates(ch: &ChannelSet, w: &CVector, q: &CVector, cfg: &SystemConfig) -> Result<LinkRates> {
    if w.len() != ch.num_antennas() {
        return Err(invalid(format!(
            "w has length {}, expected M = {}",
            w.len(),
            ch.num_antennas()
        )));
    }
    let (g_user, g_eve) = effective_channels(ch, q)?;
    let user = (received_power(&g_user, w) / cfg.sigma2_user).ln_1p() / std::f64::consts::LN_2;
    let eve = (received_power(&g_eve, w) / cfg.sigma2_eve).ln_1p() / std::f64::consts::LN_2;
    Ok(LinkRates {
        user,
        eve,
        secrecy: (user - eve).max(0.0),
    })
}
