//! Alternating optimization of `(w, q)` and the benchmark schemes.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::{invalid, Error, Result};
use crate::irs::solve_irs_subproblem;
use crate::linalg::CVector;
use crate::rates::{rates, BeamformingSolution};
use crate::txbf::{build_quadratic_forms, solve_tx_subproblem};

/// Schemes compared in the simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchemeId {
    /// Alternating transmit / reflect optimization.
    Proposed,
    /// MRT towards the IRS, then one reflect design pass.
    MrtWithIrs,
    /// Optimal transmit beamforming over the direct links only.
    WithoutIrs,
    /// Relaxed reflect optimum at the final transmit vector of `Proposed`.
    UpperBound,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [
        SchemeId::Proposed,
        SchemeId::MrtWithIrs,
        SchemeId::WithoutIrs,
        SchemeId::UpperBound,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Proposed => "proposed",
            SchemeId::MrtWithIrs => "mrt_with_irs",
            SchemeId::WithoutIrs => "without_irs",
            SchemeId::UpperBound => "upper_bound",
        }
    }

    pub fn needs_irs(self) -> bool {
        !matches!(self, SchemeId::WithoutIrs)
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "proposed" => Ok(SchemeId::Proposed),
            "mrtwithirs" | "mrt" => Ok(SchemeId::MrtWithIrs),
            "withoutirs" | "noirs" => Ok(SchemeId::WithoutIrs),
            "upperbound" => Ok(SchemeId::UpperBound),
            _ => Err(invalid(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Full-power MRT towards row `row` of `H_AI`.
///
/// Falls back to the first antenna when that row is identically zero.
pub fn mrt_towards_irs(ch: &ChannelSet, row: usize, power: f64) -> Result<CVector> {
    if row >= ch.num_elements() {
        return Err(invalid(format!(
            "init_row {row} out of range for N = {}",
            ch.num_elements()
        )));
    }
    let h = ch.h_ai.row(row).adjoint();
    let norm = h.norm();
    let mut w = if norm > 0.0 {
        h.unscale(norm)
    } else {
        let mut e = CVector::zeros(ch.num_antennas());
        e[0] = Complex64::new(1.0, 0.0);
        e
    };
    w *= Complex64::new(power.sqrt(), 0.0);
    Ok(w)
}

fn at_iteration(iteration: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::AtIteration {
        iteration,
        source: Box::new(e),
    }
}

/// Stopping rule `(R_k − R_{k−1}) / R_k < ε`, with an absolute test when
/// `R_k` is not positive.
fn has_converged(prev: f64, cur: f64, epsilon: f64) -> bool {
    let improvement = cur - prev;
    if cur > 0.0 {
        improvement / cur < epsilon
    } else {
        improvement < epsilon * 1e-3
    }
}

/// Alternates the closed-form transmit update and the SDR reflect update.
///
/// A reflect update is kept only if it does not lower `R_U − R_E`, so the
/// objective trace is non-decreasing even though randomization is approximate.
pub fn alternating_optimize<R: Rng + ?Sized>(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<BeamformingSolution> {
    cfg.validate()?;
    ch.check()?;
    let n = ch.num_elements();
    if n == 0 {
        return Err(invalid("alternating optimization needs N >= 1"));
    }
    let mut w = mrt_towards_irs(ch, cfg.init_row, cfg.p_ap)?;
    let mut q = CVector::from_element(n, Complex64::new(1.0, 0.0));
    let mut objective = rates(ch, &w, &q, cfg)?.difference();
    let mut trace = vec![objective];
    let mut upper_ratio = f64::NAN;
    let mut certificate = 0.0_f64;
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=cfg.max_iter {
        iterations = k;
        let forms = build_quadratic_forms(ch, &q, cfg).map_err(at_iteration(k))?;
        w = solve_tx_subproblem(&forms, cfg.p_ap).map_err(at_iteration(k))?;
        let after_tx = rates(ch, &w, &q, cfg)?.difference();

        let irs = solve_irs_subproblem(ch, &w, cfg, rng).map_err(at_iteration(k))?;
        upper_ratio = irs.upper_bound_ratio;
        certificate = certificate.max(irs.sdp.worst_certificate());
        let after_irs = rates(ch, &w, &irs.q, cfg)?.difference();
        let next = if after_irs >= after_tx {
            q = irs.q;
            after_irs
        } else {
            after_tx
        };
        trace.push(next);
        let prev = objective;
        objective = next;
        if has_converged(prev, objective, cfg.epsilon) {
            converged = true;
            break;
        }
    }

    let r = rates(ch, &w, &q, cfg)?;
    Ok(BeamformingSolution {
        w,
        q,
        rate_user: r.user,
        rate_eve: r.eve,
        secrecy_rate: r.secrecy,
        objective_trace: trace,
        iterations,
        upper_bound: Some(upper_ratio.log2()),
        sdp_certificate: Some(certificate),
        converged,
    })
}

/// Runs one scheme on one channel realization.
pub fn run_scheme<R: Rng + ?Sized>(
    id: SchemeId,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<BeamformingSolution> {
    if id.needs_irs() && ch.num_elements() == 0 {
        return Err(invalid(format!("scheme {id} needs an IRS (N >= 1)")));
    }
    match id {
        SchemeId::Proposed => alternating_optimize(ch, cfg, rng),
        SchemeId::UpperBound => Ok(upper_bound_from(alternating_optimize(ch, cfg, rng)?)),
        SchemeId::MrtWithIrs => {
            cfg.validate()?;
            let w = mrt_towards_irs(ch, cfg.init_row, cfg.p_ap)?;
            let irs = solve_irs_subproblem(ch, &w, cfg, rng).map_err(at_iteration(1))?;
            let r = rates(ch, &w, &irs.q, cfg)?;
            Ok(BeamformingSolution {
                w,
                q: irs.q,
                rate_user: r.user,
                rate_eve: r.eve,
                secrecy_rate: r.secrecy,
                objective_trace: vec![r.difference()],
                iterations: 1,
                upper_bound: Some(irs.upper_bound_ratio.log2()),
                sdp_certificate: Some(irs.sdp.worst_certificate()),
                converged: true,
            })
        }
        SchemeId::WithoutIrs => {
            cfg.validate()?;
            let off = CVector::zeros(ch.num_elements());
            let forms = build_quadratic_forms(ch, &off, cfg)?;
            let w = solve_tx_subproblem(&forms, cfg.p_ap)?;
            let r = rates(ch, &w, &off, cfg)?;
            Ok(BeamformingSolution {
                w,
                q: CVector::zeros(0),
                rate_user: r.user,
                rate_eve: r.eve,
                secrecy_rate: r.secrecy,
                objective_trace: vec![r.difference()],
                iterations: 1,
                upper_bound: None,
                sdp_certificate: None,
                converged: true,
            })
        }
    }
}

/// Reports the relaxed bound of a finished `Proposed` run as its rate.
pub fn upper_bound_from(mut proposed: BeamformingSolution) -> BeamformingSolution {
    let bound = proposed
        .upper_bound
        .filter(|b| b.is_finite())
        .unwrap_or(proposed.secrecy_rate);
    proposed.secrecy_rate = bound.max(proposed.secrecy_rate);
    proposed
}
