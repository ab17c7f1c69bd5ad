//! Reflect beamformer for a fixed transmit vector.
//!
//! With `s = [qᵀ, 1]ᵀ` both received SNRs are quadratic in `s`:
//! `SNR_U = sᴴ G_U s + h_U`, and likewise for the eavesdropper. The ratio
//! `(SNR_U + 1) / (SNR_E + 1)` is relaxed by lifting `S = s sᴴ`, dropping the
//! rank constraint and applying the Charnes–Cooper substitution
//! `μ = 1 / (tr(G_E S) + h_E + 1)`, `X = μ S`. The resulting SDP is solved by
//! [`crate::sdp`], and a unit-modulus `q` is recovered by Gaussian
//! randomization around `S = X / μ`.

use num_complex::Complex64;
use rand::Rng;

use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::{invalid, Error, Result};
use crate::linalg::{complex_normal_vector, hermitian_eigen, CMatrix, CVector};
use crate::sdp::{solve_standard_sdp_with, SdpSettings, SdpSolution, SdpStatus, StandardSdp};

/// Tolerance requested from the SDP solver for the relaxed reflect problem.
pub const RELAXATION_TOL: f64 = 1e-8;
/// `λ₂/λ₁` below which `S` is treated as rank one.
pub const RANK_ONE_THRESHOLD: f64 = 1e-8;
/// Trials whose last sample entry falls below this modulus are discarded.
const DEGENERATE_ANCHOR: f64 = 1e-12;

/// Data of the fractional quadratic program in `s = [qᵀ, 1]ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSdpInstance {
    pub g_user: CMatrix,
    pub g_eve: CMatrix,
    pub h_user: f64,
    pub h_eve: f64,
}

impl FractionalSdpInstance {
    pub fn num_elements(&self) -> usize {
        self.g_user.nrows().saturating_sub(1)
    }

    /// `(sᴴG_U s + h_U + 1) / (sᴴG_E s + h_E + 1)` at `s = [qᵀ, 1]ᵀ`.
    pub fn ratio(&self, q: &CVector) -> f64 {
        let s = lift(q);
        let num = s.dotc(&(&self.g_user * &s)).re + self.h_user + 1.0;
        let den = s.dotc(&(&self.g_eve * &s)).re + self.h_eve + 1.0;
        num / den
    }
}

fn lift(q: &CVector) -> CVector {
    let n = q.len();
    CVector::from_fn(n + 1, |i, _| if i < n { q[i] } else { Complex64::new(1.0, 0.0) })
}

/// Optimal point of the relaxed, Charnes–Cooper transformed problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    pub x: CMatrix,
    pub mu: f64,
    /// `tr(G_U X) + μ (h_U + 1)`: an upper bound on the achievable ratio.
    pub value: f64,
    /// `X / μ`.
    pub s: CMatrix,
    pub sdp: SdpSolution,
}

/// `conj(u) uᵀ / σ²` split into its `G` part (bottom-right entry zeroed) and
/// the constant `|u_last|² / σ²`, where `u = [diag(h_I) H_AI w; h_A w]`.
fn split_quadratic(u: &CVector, noise: f64) -> (CMatrix, f64) {
    let n1 = u.len();
    let mut g = u.conjugate() * u.transpose() * Complex64::new(1.0 / noise, 0.0);
    let constant = u[n1 - 1].norm_sqr() / noise;
    g[(n1 - 1, n1 - 1)] = Complex64::new(0.0, 0.0);
    (g, constant)
}

pub fn build_fractional_instance(
    ch: &ChannelSet,
    w: &CVector,
    cfg: &SystemConfig,
) -> Result<FractionalSdpInstance> {
    let n = ch.num_elements();
    if n == 0 {
        return Err(Error::Unsupported(
            "reflect design needs N >= 1; use the direct-link path without an IRS".into(),
        ));
    }
    if w.len() != ch.num_antennas() {
        return Err(invalid(format!(
            "w has length {}, expected M = {}",
            w.len(),
            ch.num_antennas()
        )));
    }
    let incident = &ch.h_ai * w;
    let stack = |h_irs: &crate::channel::CRow, h_direct: &crate::channel::CRow| {
        let direct: Complex64 = h_direct.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        CVector::from_fn(n + 1, |i, _| if i < n { h_irs[i] * incident[i] } else { direct })
    };
    let (g_user, h_user) = split_quadratic(&stack(&ch.h_iu, &ch.h_au), cfg.sigma2_user);
    let (g_eve, h_eve) = split_quadratic(&stack(&ch.h_ie, &ch.h_ae), cfg.sigma2_eve);
    Ok(FractionalSdpInstance {
        g_user,
        g_eve,
        h_user,
        h_eve,
    })
}

/// Solves the relaxed problem; fails unless the solver certifies optimality.
pub fn solve_relaxed(inst: &FractionalSdpInstance) -> Result<RelaxedSolution> {
    let n1 = inst.g_user.nrows();
    if n1 < 2 || inst.g_eve.shape() != inst.g_user.shape() {
        return Err(invalid("instance matrices must be (N+1)x(N+1) with N >= 1"));
    }
    if inst.h_user < 0.0 || inst.h_eve < 0.0 {
        return Err(invalid("h_U and h_E must be non-negative"));
    }
    let problem = StandardSdp {
        objective: inst.g_user.clone(),
        objective_mu: inst.h_user + 1.0,
        constraint: inst.g_eve.clone(),
        constraint_mu: inst.h_eve + 1.0,
        n_diag: n1,
    };
    let sol = solve_standard_sdp_with(
        &problem,
        &SdpSettings {
            tol: RELAXATION_TOL,
            ..SdpSettings::default()
        },
    )?;
    if sol.status != SdpStatus::Optimal || !(sol.mu > 0.0) {
        return Err(Error::SdpNotConverged {
            status: sol.status,
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            gap: sol.gap,
        });
    }
    let s = &sol.x * Complex64::new(1.0 / sol.mu, 0.0);
    Ok(RelaxedSolution {
        x: sol.x.clone(),
        mu: sol.mu,
        value: sol.objective,
        s,
        sdp: sol,
    })
}

/// Unit-modulus `q` from a sample `s̃` of length N+1: `q_n = phase(s̃_n / s̃_{N+1})`.
fn project(sample: &CVector) -> Option<CVector> {
    let n = sample.len() - 1;
    let anchor = sample[n];
    if anchor.norm() < DEGENERATE_ANCHOR {
        return None;
    }
    Some(CVector::from_fn(n, |i, _| {
        let z = sample[i] / anchor;
        let r = z.norm();
        if r > 0.0 && r.is_finite() {
            z / r
        } else {
            Complex64::new(1.0, 0.0)
        }
    }))
}

/// Recovers a unit-modulus reflect vector from the relaxed solution.
///
/// Candidates are the principal eigenvector of `S` and `trials` samples
/// `s̃ ~ CN(0, S)`, each projected onto the unit-modulus set; the best ratio
/// wins. When `S` is numerically rank one the eigenvector is returned as is.
pub fn gaussian_randomize<R: Rng + ?Sized>(
    inst: &FractionalSdpInstance,
    relaxed: &RelaxedSolution,
    trials: usize,
    rng: &mut R,
) -> Result<(CVector, f64)> {
    if trials < 1 {
        return Err(invalid("randomization needs at least one trial"));
    }
    let n1 = relaxed.s.nrows();
    if n1 != inst.g_user.nrows() {
        return Err(invalid("relaxed solution does not match the instance size"));
    }
    let (values, vectors) = hermitian_eigen(&relaxed.s);
    let principal = vectors.column(0).into_owned();
    let mut best_q = project(&principal).unwrap_or_else(|| {
        CVector::from_fn(n1 - 1, |i, _| {
            let z = principal[i];
            if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) }
        })
    });
    let mut best = inst.ratio(&best_q);

    let top = values[0].max(0.0);
    let rank_one = n1 == 1 || top == 0.0 || values[1].max(0.0) / top < RANK_ONE_THRESHOLD;
    if rank_one {
        return Ok((best_q, best));
    }

    let mut factor = vectors;
    for (j, v) in values.iter().enumerate() {
        factor.column_mut(j).scale_mut(v.max(0.0).sqrt());
    }
    for _ in 0..trials {
        let sample = &factor * complex_normal_vector(rng, n1);
        let Some(q) = project(&sample) else { continue };
        let ratio = inst.ratio(&q);
        if ratio > best {
            best = ratio;
            best_q = q;
        }
    }
    Ok((best_q, best))
}

/// Reflect design for fixed `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsOutcome {
    pub q: CVector,
    /// Achieved `(SNR_U + 1) / (SNR_E + 1)`.
    pub ratio: f64,
    /// Relaxed optimum, an upper bound on every feasible ratio at this `w`.
    pub upper_bound_ratio: f64,
    pub sdp: SdpSolution,
}

pub fn solve_irs_subproblem<R: Rng + ?Sized>(
    ch: &ChannelSet,
    w: &CVector,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<IrsOutcome> {
    let inst = build_fractional_instance(ch, w, cfg)?;
    let relaxed = solve_relaxed(&inst)?;
    let (q, ratio) = gaussian_randomize(&inst, &relaxed, cfg.l_rand, rng)?;
    Ok(IrsOutcome {
        q,
        ratio,
        upper_bound_ratio: relaxed.value,
        sdp: relaxed.sdp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_channels, CRow};
    use crate::rates::rates;
    use crate::rng::{stream, StreamPurpose};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit_cfg() -> SystemConfig {
        SystemConfig {
            sigma2_user: 1.0,
            sigma2_eve: 1.0,
            l_rand: 100,
            ..SystemConfig::default()
        }
    }

    fn scalar_set(eve: f64) -> ChannelSet {
        let one = CRow::from_element(1, c(1.0, 0.0));
        let e = CRow::from_element(1, c(eve, 0.0));
        ChannelSet::new(CMatrix::from_element(1, 1, c(1.0, 0.0)), one.clone(), e.clone(), one, e).unwrap()
    }

    fn theta_grid_max(inst: &FractionalSdpInstance) -> f64 {
        (0..36_000)
            .map(|k| inst.ratio(&CVector::from_element(1, Complex64::from_polar(1.0, k as f64 * 0.01 * PI / 180.0))))
            .fold(f64::MIN, f64::max)
    }

    #[test]
    fn zero_beamformer_gives_zero_instance() {
        let cfg = SystemConfig::default().with_elements(3);
        let ch = generate_channels(&cfg, &mut stream(1, StreamPurpose::Channels)).unwrap();
        let inst = build_fractional_instance(&ch, &CVector::zeros(4), &cfg).unwrap();
        assert_eq!(inst.g_user, CMatrix::zeros(4, 4));
        assert_eq!(inst.g_eve, CMatrix::zeros(4, 4));
        assert_eq!((inst.h_user, inst.h_eve), (0.0, 0.0));
    }

    #[test]
    fn scalar_instance_by_hand() {
        let inst = build_fractional_instance(&scalar_set(0.0), &CVector::from_element(1, c(1.0, 0.0)), &unit_cfg())
            .unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(inst.g_user, expected);
        assert_eq!(inst.h_user, 1.0);
        for k in 0..12 {
            let q = Complex64::from_polar(1.0, k as f64 * PI / 6.0);
            let s = CVector::from_vec(vec![q, c(1.0, 0.0)]);
            let quad = s.dotc(&(&inst.g_user * &s)).re + inst.h_user;
            assert!((quad - (q + 1.0).norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn instance_reproduces_snr_identity() {
        let cfg = SystemConfig::default().with_elements(6);
        let ch = generate_channels(&cfg, &mut stream(2, StreamPurpose::Channels)).unwrap();
        let mut rng = stream(3, StreamPurpose::Proposed);
        let w = complex_normal_vector(&mut rng, 4) * c(0.1, 0.0);
        let inst = build_fractional_instance(&ch, &w, &cfg).unwrap();
        assert_eq!(inst.g_user[(6, 6)], c(0.0, 0.0));
        assert_eq!(inst.g_eve[(6, 6)], c(0.0, 0.0));
        assert!(crate::linalg::hermitian_defect(&inst.g_user) <= 1e-12 * inst.g_user.norm());
        for _ in 0..10 {
            let q = complex_normal_vector(&mut rng, 6).map(|z| z / z.norm());
            let s = lift(&q);
            // Direct evaluation of the SNR expressions.
            let mut yu = c(0.0, 0.0);
            let mut ye = c(0.0, 0.0);
            for m in 0..4 {
                let mut gu = ch.h_au[m];
                let mut ge = ch.h_ae[m];
                for n in 0..6 {
                    gu += ch.h_iu[n] * q[n] * ch.h_ai[(n, m)];
                    ge += ch.h_ie[n] * q[n] * ch.h_ai[(n, m)];
                }
                yu += gu * w[m];
                ye += ge * w[m];
            }
            let snr_u = yu.norm_sqr() / cfg.sigma2_user;
            let snr_e = ye.norm_sqr() / cfg.sigma2_eve;
            let qu = s.dotc(&(&inst.g_user * &s)).re + inst.h_user;
            let qe = s.dotc(&(&inst.g_eve * &s)).re + inst.h_eve;
            assert!((qu - snr_u).abs() <= 1e-9 * snr_u);
            assert!((qe - snr_e).abs() <= 1e-9 * snr_e);
        }
    }

    #[test]
    fn no_irs_is_unsupported() {
        let ch = ChannelSet::direct_only(CRow::zeros(2), CRow::zeros(2)).unwrap();
        let err = build_fractional_instance(&ch, &CVector::zeros(2), &unit_cfg()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn trivial_relaxation() {
        let inst = FractionalSdpInstance {
            g_user: CMatrix::zeros(2, 2),
            g_eve: CMatrix::zeros(2, 2),
            h_user: 0.0,
            h_eve: 0.0,
        };
        let r = solve_relaxed(&inst).unwrap();
        assert!((r.value - 1.0).abs() < 1e-7);
        assert!((r.mu - 1.0).abs() < 1e-7);
    }

    #[test]
    fn scalar_relaxation_matches_grid() {
        let inst = build_fractional_instance(&scalar_set(0.0), &CVector::from_element(1, c(1.0, 0.0)), &unit_cfg())
            .unwrap();
        let grid = theta_grid_max(&inst);
        assert!((grid - 5.0).abs() < 1e-8);
        let r = solve_relaxed(&inst).unwrap();
        assert!((r.value - 5.0).abs() < 1e-6, "{}", r.value);
        let all_ones = inst.ratio(&CVector::from_element(1, c(1.0, 0.0)));
        assert!(r.value >= all_ones - 1e-6);

        let mut rng = stream(4, StreamPurpose::Proposed);
        let (q, ratio) = gaussian_randomize(&inst, &r, 100, &mut rng).unwrap();
        assert!((q[0].norm() - 1.0).abs() < 1e-12);
        assert!(ratio >= 0.99 * grid);
        assert!(ratio <= r.value + 1e-6);
    }

    #[test]
    fn scalar_with_eavesdropper_matches_grid() {
        let mut cfg = unit_cfg();
        cfg.sigma2_eve = 0.5;
        let inst = build_fractional_instance(&scalar_set(0.7), &CVector::from_element(1, c(1.0, 0.0)), &cfg).unwrap();
        let grid = theta_grid_max(&inst);
        let r = solve_relaxed(&inst).unwrap();
        assert!(r.value >= grid - 1e-6);
        let (_, ratio) = gaussian_randomize(&inst, &r, 100, &mut stream(5, StreamPurpose::Proposed)).unwrap();
        assert!(ratio >= 0.99 * grid && ratio <= r.value + 1e-6);
    }

    #[test]
    fn rank_one_recovery() {
        let s_vec = CVector::from_vec(vec![Complex64::from_polar(1.0, PI / 3.0), c(1.0, 0.0)]);
        let s = &s_vec * s_vec.adjoint();
        let inst = FractionalSdpInstance {
            g_user: CMatrix::zeros(2, 2),
            g_eve: CMatrix::zeros(2, 2),
            h_user: 0.0,
            h_eve: 0.0,
        };
        let relaxed = RelaxedSolution {
            x: s.clone(),
            mu: 1.0,
            value: 1.0,
            s,
            sdp: solve_relaxed(&inst).unwrap().sdp,
        };
        let (q, _) = gaussian_randomize(&inst, &relaxed, 10, &mut stream(6, StreamPurpose::Proposed)).unwrap();
        assert!((q[0] - Complex64::from_polar(1.0, PI / 3.0)).norm() < 1e-12);
        assert!(gaussian_randomize(&inst, &relaxed, 0, &mut stream(6, StreamPurpose::Proposed)).is_err());
    }

    #[test]
    fn subproblem_ratio_matches_rates() {
        let cfg = SystemConfig::default().with_elements(8);
        let ch = generate_channels(&cfg, &mut stream(7, StreamPurpose::Channels)).unwrap();
        let w = crate::txbf::solve_tx_subproblem(
            &crate::txbf::build_quadratic_forms(&ch, &CVector::from_element(8, c(1.0, 0.0)), &cfg).unwrap(),
            cfg.p_ap,
        )
        .unwrap();
        let out = solve_irs_subproblem(&ch, &w, &cfg, &mut stream(8, StreamPurpose::Proposed)).unwrap();
        let r = rates(&ch, &w, &out.q, &cfg).unwrap();
        assert!((out.ratio.log2() - r.difference()).abs() < 1e-9);
        assert!(out.upper_bound_ratio.log2() >= r.difference() - 1e-6);
        assert!(out.sdp.worst_certificate() <= 1e-6);
        assert!(out.q.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn no_eavesdropper_aligns_phases() {
        // With the eavesdropper silent the best q co-phases every reflected
        // path with the direct path: ratio = 1 + (|h_AU w| + Σ|h_IU,n (H_AI w)_n|)² / σ².
        let mut cfg = SystemConfig::default().with_elements(6);
        cfg.l_rand = 200;
        let mut ch = generate_channels(&cfg, &mut stream(9, StreamPurpose::Channels)).unwrap();
        ch.h_ae = CRow::zeros(4);
        ch.h_ie = CRow::zeros(6);
        let w = complex_normal_vector(&mut stream(10, StreamPurpose::Proposed), 4) * c(0.1, 0.0);
        let incident = &ch.h_ai * &w;
        let direct: Complex64 = ch.h_au.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        let aligned: f64 = direct.norm() + (0..6).map(|n| (ch.h_iu[n] * incident[n]).norm()).sum::<f64>();
        let oracle = 1.0 + aligned * aligned / cfg.sigma2_user;
        let out = solve_irs_subproblem(&ch, &w, &cfg, &mut stream(11, StreamPurpose::Proposed)).unwrap();
        assert!((out.ratio - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", out.ratio);
        for n in 0..6 {
            let expected = Complex64::from_polar(1.0, direct.arg() - (ch.h_iu[n] * incident[n]).arg());
            assert!((out.q[n] - expected).norm() < 1e-3);
        }
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::channel::generate_channels;
    use crate::linalg::{hermitian_defect, min_eigenvalue};
    use crate::rng::{stream, StreamPurpose};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn instance_and_relaxation_invariants(seed in 0u64..5000, n in 1usize..10) {
            let cfg = SystemConfig::default().with_elements(n);
            let ch = generate_channels(&cfg, &mut stream(seed, StreamPurpose::Channels)).unwrap();
            let w = complex_normal_vector(&mut stream(seed, StreamPurpose::Proposed), cfg.num_antennas)
                .normalize()
                * Complex64::new(cfg.p_ap.sqrt(), 0.0);
            let inst = build_fractional_instance(&ch, &w, &cfg).unwrap();
            for g in [&inst.g_user, &inst.g_eve] {
                prop_assert!(hermitian_defect(g) <= 1e-12 * g.norm().max(1e-300));
                prop_assert_eq!(g[(n, n)], Complex64::new(0.0, 0.0));
            }
            prop_assert!(inst.h_user >= 0.0 && inst.h_eve >= 0.0);

            let rel = solve_relaxed(&inst).unwrap();
            let scale = rel.x.norm().max(1.0);
            prop_assert!(min_eigenvalue(&rel.x) >= -1e-8 * scale);
            let lhs: f64 = inst.g_eve.iter().zip(rel.x.iter()).map(|(a, b)| (a * b.conj()).re).sum::<f64>()
                + rel.mu * (inst.h_eve + 1.0);
            prop_assert!((lhs - 1.0).abs() <= 1e-6);
            for i in 0..=n {
                prop_assert!((rel.x[(i, i)].re - rel.mu).abs() <= 1e-6 * scale);
            }
            prop_assert!(rel.value >= 0.0);
        }
    }
}
