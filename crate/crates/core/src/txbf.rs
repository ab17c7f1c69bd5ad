//! Transmit beamformer for a fixed reflect vector.
//!
//! Maximizes `(wᴴAw + 1) / (wᴴBw + 1)` over `‖w‖² ≤ P`. The optimum is
//! `sqrt(P)` times the top generalized eigenvector of the pencil
//! `(A + I/P, B + I/P)`, obtained here by Cholesky reduction to a standard
//! Hermitian eigenproblem.

use num_complex::Complex64;

use crate::channel::{CRow, ChannelSet};
use crate::config::SystemConfig;
use crate::error::{invalid, Result};
use crate::linalg::{cholesky, hermitian_eigen, normalize_global_phase, numeric, CMatrix, CVector};
use crate::rates::effective_channels;

/// Noise-normalized rank-one forms of the user and eavesdropper links.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFormPair {
    pub a: CMatrix,
    pub b: CMatrix,
}

impl QuadraticFormPair {
    /// `(wᴴAw + 1) / (wᴴBw + 1)`.
    pub fn quotient(&self, w: &CVector) -> f64 {
        let num = w.dotc(&(&self.a * w)).re + 1.0;
        let den = w.dotc(&(&self.b * w)).re + 1.0;
        num / den
    }
}

fn outer_scaled(g: &CRow, scale: f64) -> CMatrix {
    // gᴴ g, with g a row vector
    g.adjoint() * g * Complex64::new(scale, 0.0)
}

pub fn build_quadratic_forms(
    ch: &ChannelSet,
    q: &CVector,
    cfg: &SystemConfig,
) -> Result<QuadraticFormPair> {
    let (g_user, g_eve) = effective_channels(ch, q)?;
    Ok(QuadraticFormPair {
        a: outer_scaled(&g_user, 1.0 / cfg.sigma2_user),
        b: outer_scaled(&g_eve, 1.0 / cfg.sigma2_eve),
    })
}

/// Optimal full-power transmit beamformer for the given forms.
///
/// The result has `‖w‖² = p_ap` and its first non-negligible entry is real
/// and positive.
pub fn solve_tx_subproblem(forms: &QuadraticFormPair, p_ap: f64) -> Result<CVector> {
    if !(p_ap.is_finite() && p_ap > 0.0) {
        return Err(invalid(format!("P_AP must be > 0, got {p_ap}")));
    }
    let m = forms.a.nrows();
    if m == 0 || !forms.a.is_square() || forms.b.shape() != forms.a.shape() {
        return Err(invalid("A and B must be square matrices of equal, non-zero size"));
    }
    let loading = CMatrix::identity(m, m) * Complex64::new(1.0 / p_ap, 0.0);
    let a_loaded = &forms.a + &loading;
    let b_loaded = &forms.b + &loading;

    let l = cholesky(&b_loaded)
        .ok_or_else(|| numeric("tx eigen-solve", "B + I/P is not positive definite"))?;
    let y = l
        .solve_lower_triangular(&a_loaded)
        .ok_or_else(|| numeric("tx eigen-solve", "singular Cholesky factor"))?;
    let reduced = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or_else(|| numeric("tx eigen-solve", "singular Cholesky factor"))?;

    let (values, vectors) = hermitian_eigen(&reduced);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(numeric(
            "tx eigen-solve",
            format!("non-finite eigenvalues {values:?}"),
        ));
    }
    let top = vectors.column(0).into_owned();
    let mut u = l
        .adjoint()
        .solve_upper_triangular(&top)
        .ok_or_else(|| numeric("tx eigen-solve", "singular Cholesky factor"))?;
    let norm = u.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(numeric("tx eigen-solve", format!("degenerate eigenvector norm {norm}")));
    }
    u.unscale_mut(norm);
    normalize_global_phase(&mut u, 1e-12);
    Ok(u * Complex64::new(p_ap.sqrt(), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_normal_vector;
    use crate::rates::rates;
    use crate::rng::{stream, StreamPurpose};
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rank_one(v: &CVector, scale: f64) -> CMatrix {
        v * v.adjoint() * c(scale, 0.0)
    }

    /// Largest generalized eigenvalue of a 2x2 Hermitian pencil from the
    /// characteristic quadratic det(A - λB) = 0.
    fn pencil_max_2x2(a: &CMatrix, b: &CMatrix) -> f64 {
        let (a11, a22, a12) = (a[(0, 0)].re, a[(1, 1)].re, a[(0, 1)]);
        let (b11, b22, b12) = (b[(0, 0)].re, b[(1, 1)].re, b[(0, 1)]);
        let qa = b11 * b22 - b12.norm_sqr();
        let qb = -(a11 * b22 + a22 * b11 - 2.0 * (a12 * b12.conj()).re);
        let qc = a11 * a22 - a12.norm_sqr();
        (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
    }

    #[test]
    fn zero_channel_gives_zero_form() {
        let ch = ChannelSet::direct_only(CRow::zeros(3), CRow::zeros(3)).unwrap();
        let f = build_quadratic_forms(&ch, &CVector::zeros(0), &SystemConfig::default()).unwrap();
        assert_eq!(f.a, CMatrix::zeros(3, 3));
    }

    #[test]
    fn scalar_form() {
        let cfg = SystemConfig {
            sigma2_user: 4.0,
            ..SystemConfig::default()
        };
        let ch = ChannelSet::direct_only(CRow::from_element(1, c(2.0, 0.0)), CRow::zeros(1)).unwrap();
        let f = build_quadratic_forms(&ch, &CVector::zeros(0), &cfg).unwrap();
        assert!((f.a[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn trace_identity() {
        let cfg = SystemConfig::default().with_elements(5);
        let ch = crate::channel::generate_channels(&cfg, &mut stream(3, StreamPurpose::Channels)).unwrap();
        let q = CVector::from_element(5, c(1.0, 0.0));
        let f = build_quadratic_forms(&ch, &q, &cfg).unwrap();
        let (gu, _) = effective_channels(&ch, &q).unwrap();
        let lhs = f.a.trace().re * cfg.sigma2_user;
        assert!((lhs - gu.norm_squared()).abs() <= 1e-12 * gu.norm_squared());
        assert!(crate::linalg::hermitian_defect(&f.a) < 1e-12 * f.a.norm());
    }

    #[test]
    fn rank_one_mrt() {
        let a_vec = CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        let forms = QuadraticFormPair {
            a: rank_one(&a_vec, 1.0),
            b: CMatrix::zeros(2, 2),
        };
        let w = solve_tx_subproblem(&forms, 1.0).unwrap();
        assert!((w.norm() - 1.0).abs() < 1e-12);
        assert!((forms.quotient(&w) - 3.0).abs() < 1e-12);
        // collinear with a
        assert!((w.dotc(&a_vec).norm() - a_vec.norm()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pencil_keeps_full_power() {
        let mut rng = stream(4, StreamPurpose::Proposed);
        let v = complex_normal_vector(&mut rng, 3);
        let forms = QuadraticFormPair {
            a: rank_one(&v, 2.0),
            b: rank_one(&v, 2.0),
        };
        let w = solve_tx_subproblem(&forms, 0.5).unwrap();
        assert!((w.norm_squared() - 0.5).abs() < 1e-12);
        assert!((forms.quotient(&w) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_power() {
        let forms = QuadraticFormPair {
            a: CMatrix::zeros(2, 2),
            b: CMatrix::zeros(2, 2),
        };
        assert!(solve_tx_subproblem(&forms, 0.0).is_err());
        assert!(solve_tx_subproblem(&forms, f64::NAN).is_err());
    }

    #[test]
    fn phase_normalized_output() {
        let mut rng = stream(5, StreamPurpose::Proposed);
        let forms = QuadraticFormPair {
            a: rank_one(&complex_normal_vector(&mut rng, 4), 1.0),
            b: rank_one(&complex_normal_vector(&mut rng, 4), 1.0),
        };
        let w = solve_tx_subproblem(&forms, 2.0).unwrap();
        assert!(w[0].im.abs() < 1e-14 && w[0].re > 0.0);
    }

    #[test]
    fn dominates_random_feasible_points() {
        let mut rng = stream(6, StreamPurpose::Proposed);
        let p = 1.7;
        let forms = QuadraticFormPair {
            a: rank_one(&complex_normal_vector(&mut rng, 3), 2.0),
            b: rank_one(&complex_normal_vector(&mut rng, 3), 1.0),
        };
        let best = forms.quotient(&solve_tx_subproblem(&forms, p).unwrap());
        for _ in 0..100_000 {
            let v = complex_normal_vector(&mut rng, 3);
            let radius: f64 = rng.random::<f64>().sqrt() * p.sqrt();
            let v = &v * c(radius / v.norm(), 0.0);
            assert!(forms.quotient(&v) <= best * (1.0 + 1e-9));
        }
    }

    #[test]
    fn quotient_equals_rate_difference() {
        let cfg = SystemConfig::default().with_elements(8);
        let ch = crate::channel::generate_channels(&cfg, &mut stream(8, StreamPurpose::Channels)).unwrap();
        let mut rng = stream(9, StreamPurpose::Proposed);
        let q = complex_normal_vector(&mut rng, 8).map(|z| z / z.norm());
        let forms = build_quadratic_forms(&ch, &q, &cfg).unwrap();
        let w = solve_tx_subproblem(&forms, cfg.p_ap).unwrap();
        let r = rates(&ch, &w, &q, &cfg).unwrap();
        assert!((r.difference() - forms.quotient(&w).log2()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn quotient_is_top_pencil_eigenvalue(seed in 0u64..1000, p in 0.05f64..20.0) {
            let mut rng = stream(seed, StreamPurpose::Proposed);
            let forms = QuadraticFormPair {
                a: rank_one(&complex_normal_vector(&mut rng, 2), 3.0),
                b: rank_one(&complex_normal_vector(&mut rng, 2), 3.0),
            };
            let w = solve_tx_subproblem(&forms, p).unwrap();
            let load = CMatrix::identity(2, 2) * c(1.0 / p, 0.0);
            let expected = pencil_max_2x2(&(&forms.a + &load), &(&forms.b + &load));
            prop_assert!((forms.quotient(&w) - expected).abs() <= 1e-8 * expected);
            prop_assert!((w.norm_squared() - p).abs() <= 1e-12 * p);
            // invariant to global phase
            let rotated = &w * Complex64::from_polar(1.0, seed as f64);
            prop_assert!((forms.quotient(&rotated) - forms.quotient(&w)).abs() <= 1e-12 * expected);
        }

        #[test]
        fn optimal_quotient_monotone_in_power(seed in 0u64..500) {
            let mut rng = stream(seed, StreamPurpose::MrtWithIrs);
            let forms = QuadraticFormPair {
                a: rank_one(&complex_normal_vector(&mut rng, 3), 1.0),
                b: rank_one(&complex_normal_vector(&mut rng, 3), 1.0),
            };
            let mut prev = 0.0;
            for p in [0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 100.0] {
                let v = forms.quotient(&solve_tx_subproblem(&forms, p).unwrap());
                prop_assert!(v >= prev * (1.0 - 1e-10));
                prev = v;
            }
        }
    }
}
