//! Dense primal-dual interior-point solver for the Charnes–Cooper form of
//! the relaxed reflect problem:
//!
//! ```text
//! maximize    Re tr(C X) + c μ
//! subject to  Re tr(D X) + d μ = 1
//!             X_ii = μ            for i < n_diag
//!             X ⪰ 0 (Hermitian),  μ ≥ 0
//! ```
//!
//! The cone is `H₊ⁿ × R₊`, with μ treated as a 1x1 block. Iterates follow
//! the HKM search direction with a Mehrotra predictor-corrector step. The
//! constraint operators are applied through their sparsity pattern, so the
//! Schur complement costs O(n³) per iteration instead of O(n⁴).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::linalg::{
    hermitian_defect, hermitian_eigen, hermitian_part, hpd_inverse, is_positive_definite, matmul, CMatrix, CVector,
};

/// Problem data. `objective` and `constraint` are Hermitian `n x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardSdp {
    pub objective: CMatrix,
    pub objective_mu: f64,
    pub constraint: CMatrix,
    pub constraint_mu: f64,
    /// Number of leading diagonal entries of `X` pinned to μ.
    pub n_diag: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub x: CMatrix,
    pub mu: f64,
    /// Primal objective `Re tr(C X) + c μ`.
    pub objective: f64,
    /// Dual objective, an upper bound on the optimum when the dual is feasible.
    pub dual_objective: f64,
    /// `‖b − A(X, μ)‖ / (1 + ‖b‖)`.
    pub primal_residual: f64,
    /// `‖C − A*(y) − S‖ / (1 + ‖C‖)`.
    pub dual_residual: f64,
    /// `|p − d| / (1 + |p| + |d|)`.
    pub gap: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

impl SdpSolution {
    pub fn worst_certificate(&self) -> f64 {
        self.primal_residual.max(self.dual_residual).max(self.gap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            step_fraction: 0.98,
        }
    }
}

/// Solves `p` to relative tolerance `tol` with default settings otherwise.
pub fn solve_standard_sdp(p: &StandardSdp, tol: f64) -> Result<SdpSolution> {
    solve_standard_sdp_with(
        p,
        &SdpSettings {
            tol,
            ..SdpSettings::default()
        },
    )
}

/// Primal (X, z) or dual slack (S, s) pair on the cone.
#[derive(Debug, Clone)]
struct ConePoint {
    mat: CMatrix,
    scalar: f64,
}

impl ConePoint {
    fn dot(&self, other: &ConePoint) -> f64 {
        real_inner(&self.mat, &other.mat) + self.scalar * other.scalar
    }

    fn norm(&self) -> f64 {
        (self.mat.norm_squared() + self.scalar * self.scalar).sqrt()
    }

    fn axpy(&mut self, alpha: f64, dir: &ConePoint) {
        self.mat += &dir.mat * Complex64::new(alpha, 0.0);
        self.mat = hermitian_part(&self.mat);
        self.scalar += alpha * dir.scalar;
    }
}

/// `Re tr(U V)` for Hermitian `U`, `V`.
fn real_inner(u: &CMatrix, v: &CMatrix) -> f64 {
    u.iter().zip(v.iter()).map(|(a, b)| (a * b.conj()).re).sum()
}

/// Hermitian data matrix kept densely or as a short sum of `λ v vᴴ` terms.
enum Factored {
    Dense(CMatrix),
    LowRank(Vec<(f64, CVector)>),
}

impl Factored {
    fn new(m: &CMatrix) -> Self {
        let n = m.nrows();
        if n < 8 {
            return Factored::Dense(m.clone());
        }
        let (values, vectors) = hermitian_eigen(m);
        let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let terms: Vec<(f64, CVector)> = (0..n)
            .filter(|&k| values[k].abs() > 1e-13 * scale)
            .map(|k| (values[k], vectors.column(k).into_owned()))
            .collect();
        if terms.len() * 4 > n {
            Factored::Dense(m.clone())
        } else {
            Factored::LowRank(terms)
        }
    }

    /// `L F R` for Hermitian `R`.
    fn sandwich(&self, left: &CMatrix, right: &CMatrix) -> CMatrix {
        match self {
            Factored::Dense(f) => matmul(&matmul(left, f), right),
            Factored::LowRank(terms) => {
                let mut out = CMatrix::zeros(left.nrows(), right.ncols());
                let one = Complex64::new(1.0, 0.0);
                for (lambda, v) in terms {
                    let a = left * v;
                    let b = right * v;
                    out.gerc(Complex64::new(*lambda, 0.0), &a, &b, one);
                }
                out
            }
        }
    }
}

struct Operators<'a> {
    p: &'a StandardSdp,
    /// Constraint count: 1 + n_diag.
    m: usize,
    constraint: Factored,
}

impl Operators<'_> {
    /// `A(X, z)`.
    fn apply(&self, pt: &ConePoint) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        out[0] = real_inner(&self.p.constraint, &pt.mat) + self.p.constraint_mu * pt.scalar;
        for i in 0..self.p.n_diag {
            out[i + 1] = pt.mat[(i, i)].re - pt.scalar;
        }
        out
    }

    /// `A*(y)`.
    fn adjoint(&self, y: &DVector<f64>) -> ConePoint {
        let mut mat = &self.p.constraint * Complex64::new(y[0], 0.0);
        let mut scalar = y[0] * self.p.constraint_mu;
        for i in 0..self.p.n_diag {
            mat[(i, i)] += Complex64::new(y[i + 1], 0.0);
            scalar -= y[i + 1];
        }
        ConePoint { mat, scalar }
    }

    /// `left · A*(y) · right`, ignoring the scalar block. `right` is Hermitian.
    fn sandwich_adjoint(&self, left: &CMatrix, right: &CMatrix, y: &DVector<f64>, left_d_right: Option<&CMatrix>) -> CMatrix {
        let mut scaled = left.clone();
        for i in 0..self.p.n_diag {
            scaled.column_mut(i).scale_mut(y[i + 1]);
        }
        for i in self.p.n_diag..scaled.ncols() {
            scaled.column_mut(i).fill(Complex64::new(0.0, 0.0));
        }
        let mut out = matmul(&scaled, right);
        if y[0] != 0.0 {
            match left_d_right {
                Some(w) => out += w * Complex64::new(y[0], 0.0),
                None => out += self.constraint.sandwich(left, right) * Complex64::new(y[0], 0.0),
            }
        }
        out
    }

    /// Schur complement `M_kl = <A_k, X A_l S⁻¹>`, given `W = X D S⁻¹`.
    fn schur(&self, x: &CMatrix, z: f64, s_inv: &CMatrix, s_scalar: f64, w: &CMatrix) -> DMatrix<f64> {
        let nd = self.p.n_diag;
        let d = &self.p.constraint;
        let dm = self.p.constraint_mu;
        let ratio = z / s_scalar;
        let mut m = DMatrix::zeros(self.m, self.m);
        m[(0, 0)] = (d.component_mul(&w.transpose())).iter().map(|c| c.re).sum::<f64>()
            + dm * dm * ratio;
        for i in 0..nd {
            let v = w[(i, i)].re - dm * ratio;
            m[(0, i + 1)] = v;
            m[(i + 1, 0)] = v;
            for j in 0..nd {
                m[(i + 1, j + 1)] = (x[(i, j)] * s_inv[(j, i)]).re + ratio;
            }
        }
        (&m + m.transpose()) * 0.5
    }
}

/// Largest `α ≤ cap` found by bisection with `base + α·dir` positive
/// definite. `base` must be positive definite.
fn max_step(base: &ConePoint, dir: &ConePoint, cap: f64, bisections: usize) -> f64 {
    let mut hi = cap;
    if dir.scalar < 0.0 {
        hi = hi.min(-base.scalar / dir.scalar);
    }
    let n = base.mat.nrows();
    let inside = |alpha: f64| n == 0 || is_positive_definite(&(&base.mat + &dir.mat * Complex64::new(alpha, 0.0)));
    if inside(hi) {
        return hi;
    }
    let mut lo = 0.0;
    for _ in 0..bisections {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn validate(p: &StandardSdp) -> Result<()> {
    let n = p.objective.nrows();
    if !p.objective.is_square() || p.constraint.shape() != p.objective.shape() {
        return Err(invalid("objective and constraint matrices must be square and equal size"));
    }
    if p.n_diag > n {
        return Err(invalid(format!("n_diag = {} exceeds matrix size {n}", p.n_diag)));
    }
    let scale = 1.0 + p.objective.norm() + p.constraint.norm();
    if hermitian_defect(&p.objective) > 1e-10 * scale || hermitian_defect(&p.constraint) > 1e-10 * scale {
        return Err(invalid("objective and constraint matrices must be Hermitian"));
    }
    let finite = p.objective.iter().chain(p.constraint.iter()).all(|z| z.re.is_finite() && z.im.is_finite())
        && p.objective_mu.is_finite()
        && p.constraint_mu.is_finite();
    if !finite {
        return Err(invalid("SDP data must be finite"));
    }
    Ok(())
}

pub fn solve_standard_sdp_with(p: &StandardSdp, settings: &SdpSettings) -> Result<SdpSolution> {
    validate(p)?;
    if !(settings.tol > 0.0) {
        return Err(invalid("tolerance must be > 0"));
    }
    let n = p.objective.nrows();
    let ops = Operators {
        p,
        m: 1 + p.n_diag,
        constraint: Factored::new(&hermitian_part(&p.constraint)),
    };
    let nu = (n + 1) as f64;

    // Minimization form: cost (−C, −c).
    let cost = ConePoint {
        mat: -hermitian_part(&p.objective),
        scalar: -p.objective_mu,
    };
    let mut b = DVector::zeros(ops.m);
    b[0] = 1.0;
    let b_norm = b.norm();
    let cost_norm = cost.norm();

    let data_scale = 1.0 + p.constraint.norm() + p.constraint_mu.abs();
    let xi = (1.0 / data_scale).max(1e-3) * nu.sqrt();
    let eta = (1.0 + cost_norm).max(nu.sqrt());
    let mut x = ConePoint {
        mat: CMatrix::identity(n, n) * Complex64::new(xi, 0.0),
        scalar: xi,
    };
    let mut s = ConePoint {
        mat: CMatrix::identity(n, n) * Complex64::new(eta, 0.0),
        scalar: eta,
    };
    let mut y = DVector::<f64>::zeros(ops.m);

    let diagnostics = |x: &ConePoint, s: &ConePoint, y: &DVector<f64>| {
        let rp = &b - ops.apply(x);
        let aty = ops.adjoint(y);
        let rd = ConePoint {
            mat: &cost.mat - &aty.mat - &s.mat,
            scalar: cost.scalar - aty.scalar - s.scalar,
        };
        let pobj = cost.dot(x);
        let dobj = b.dot(y);
        let pres = rp.norm() / (1.0 + b_norm);
        let dres = rd.norm() / (1.0 + cost_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        (rp, rd, pobj, dobj, pres, dres, gap)
    };

    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    for iter in 0..=settings.max_iter {
        let (rp, rd, _pobj, _dobj, pres, dres, gap) = diagnostics(&x, &s, &y);
        let complementarity = x.dot(&s) / nu;
        if pres <= settings.tol && dres <= settings.tol && gap <= settings.tol {
            status = SdpStatus::Optimal;
            break;
        }
        if x.norm() > 1e12 || s.norm() > 1e14 || !complementarity.is_finite() {
            status = SdpStatus::Infeasible;
            break;
        }
        if iter == settings.max_iter {
            break;
        }
        iterations = iter + 1;

        let Some(s_inv) = hpd_inverse(&s.mat) else {
            break;
        };
        let w = ops.constraint.sandwich(&x.mat, &s_inv);
        let schur = ops.schur(&x.mat, x.scalar, &s_inv, s.scalar, &w);
        let schur_chol = nalgebra::Cholesky::new(schur.clone());
        let schur_lu = if schur_chol.is_none() { Some(schur.clone().lu()) } else { None };
        let solve_schur = |rhs: &DVector<f64>| -> Option<DVector<f64>> {
            match (&schur_chol, &schur_lu) {
                (Some(c), _) => Some(c.solve(rhs)),
                (None, Some(lu)) => lu.solve(rhs),
                _ => None,
            }
        };

        // Once a full dual step has been taken R_d is at rounding level and
        // its matrix products are skipped.
        let rd_active = rd.mat.norm() > 1e-14 * (1.0 + cost_norm);
        let x_rd_sinv = if rd_active {
            hermitian_part(&matmul(&matmul(&x.mat, &rd.mat), &s_inv))
        } else {
            CMatrix::zeros(n, n)
        };
        let z_rd_s = x.scalar * rd.scalar / s.scalar;

        let direction = |t: ConePoint| -> Option<(ConePoint, ConePoint, DVector<f64>)> {
            let rhs = &rp - ops.apply(&t);
            let dy = solve_schur(&rhs)?;
            let aty = ops.adjoint(&dy);
            let dx = ConePoint {
                mat: &t.mat + hermitian_part(&ops.sandwich_adjoint(&x.mat, &s_inv, &dy, Some(&w))),
                scalar: t.scalar + x.scalar * aty.scalar / s.scalar,
            };
            let ds = ConePoint {
                mat: &rd.mat - &aty.mat,
                scalar: rd.scalar - aty.scalar,
            };
            Some((dx, ds, dy))
        };

        let predictor_rhs = ConePoint {
            mat: -&x.mat - &x_rd_sinv,
            scalar: -x.scalar - z_rd_s,
        };
        let Some((dx_aff, ds_aff, dy_aff)) = direction(predictor_rhs.clone()) else {
            break;
        };
        let ap_aff = max_step(&x, &dx_aff, 1.0, 4);
        let ad_aff = max_step(&s, &ds_aff, 1.0, 4);
        let mut x_aff = x.clone();
        x_aff.axpy(ap_aff, &dx_aff);
        let mut s_aff = s.clone();
        s_aff.axpy(ad_aff, &ds_aff);
        let mu_aff = x_aff.dot(&s_aff) / nu;
        let sigma = (mu_aff / complementarity).clamp(0.0, 1.0).powi(3);
        let sigma_mu = sigma * complementarity;

        // ΔX_a ΔS_a S⁻¹ with ΔS_a = R_d − A*(Δy_a).
        let mut second_order = -ops.sandwich_adjoint(&dx_aff.mat, &s_inv, &dy_aff, None);
        if rd_active {
            second_order += matmul(&matmul(&dx_aff.mat, &rd.mat), &s_inv);
        }
        let corrector_rhs = ConePoint {
            mat: predictor_rhs.mat + &s_inv * Complex64::new(sigma_mu, 0.0) - hermitian_part(&second_order),
            scalar: predictor_rhs.scalar + sigma_mu / s.scalar - dx_aff.scalar * ds_aff.scalar / s.scalar,
        };
        let Some((dx, ds, dy)) = direction(corrector_rhs) else {
            break;
        };
        let frac = settings.step_fraction;
        let ap = (frac * max_step(&x, &dx, 1.0 / frac, 8)).min(1.0);
        let ad = (frac * max_step(&s, &ds, 1.0 / frac, 8)).min(1.0);
        if ap <= 0.0 && ad <= 0.0 {
            break;
        }
        x.axpy(ap, &dx);
        s.axpy(ad, &ds);
        y += dy * ad;
    }

    let (_, _, pobj, dobj, pres, dres, gap) = diagnostics(&x, &s, &y);
    if status == SdpStatus::MaxIter && pres <= settings.tol && dres <= settings.tol && gap <= settings.tol {
        status = SdpStatus::Optimal;
    }
    if status == SdpStatus::MaxIter && pres > settings.tol.sqrt() {
        status = SdpStatus::Infeasible;
    }
    Ok(SdpSolution {
        x: x.mat,
        mu: x.scalar,
        objective: -pobj,
        dual_objective: -dobj,
        primal_residual: pres,
        dual_residual: dres,
        gap,
        status,
        iterations,
    })
}
