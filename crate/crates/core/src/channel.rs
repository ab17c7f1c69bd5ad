//! Fading channel generation for the AP / IRS / user / eavesdropper geometry.
//!
//! Every link is `sqrt(path_loss) * g` where `g` is a unit-power Rician
//! draw with an all-ones line-of-sight component. The two direct AP links
//! share the exponential antenna correlation `R` and are also correlated
//! with each other: the stacked scattered part `[g_AU; g_AE]` has covariance
//! `[[1, r], [r, 1]] ⊗ R`.

use nalgebra::{DMatrix, RowDVector};
use num_complex::Complex64;
use rand::Rng;

use crate::config::SystemConfig;
use crate::error::{invalid, Result};
use crate::linalg::{complex_normal_vector, psd_factor, real_to_complex, CMatrix};

pub type CRow = RowDVector<Complex64>;

const PSD_TOL: f64 = 1e-10;

/// One realization of all five links.
///
/// `h_ai` is `N x M`; `h_au`, `h_ae` are `1 x M`; `h_iu`, `h_ie` are `1 x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_ai: CMatrix,
    pub h_au: CRow,
    pub h_ae: CRow,
    pub h_iu: CRow,
    pub h_ie: CRow,
}

impl ChannelSet {
    /// Builds a channel set, checking that the dimensions agree and all entries are finite.
    pub fn new(h_ai: CMatrix, h_au: CRow, h_ae: CRow, h_iu: CRow, h_ie: CRow) -> Result<Self> {
        let set = Self {
            h_ai,
            h_au,
            h_ae,
            h_iu,
            h_ie,
        };
        set.check()?;
        Ok(set)
    }

    /// Direct links only; the IRS members are empty.
    pub fn direct_only(h_au: CRow, h_ae: CRow) -> Result<Self> {
        let m = h_au.len();
        Self::new(CMatrix::zeros(0, m), h_au, h_ae, CRow::zeros(0), CRow::zeros(0))
    }

    pub fn num_antennas(&self) -> usize {
        self.h_au.len()
    }

    pub fn num_elements(&self) -> usize {
        self.h_iu.len()
    }

    pub fn check(&self) -> Result<()> {
        let m = self.h_au.len();
        let n = self.h_iu.len();
        if m == 0 {
            return Err(invalid("channel set needs at least one AP antenna"));
        }
        if self.h_ae.len() != m {
            return Err(invalid("h_AE length differs from h_AU"));
        }
        if self.h_ie.len() != n {
            return Err(invalid("h_IE length differs from h_IU"));
        }
        if self.h_ai.nrows() != n || self.h_ai.ncols() != m {
            return Err(invalid(format!(
                "H_AI is {}x{}, expected {n}x{m}",
                self.h_ai.nrows(),
                self.h_ai.ncols()
            )));
        }
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        let all_finite = self.h_ai.iter().all(finite)
            && self.h_au.iter().all(finite)
            && self.h_ae.iter().all(finite)
            && self.h_iu.iter().all(finite)
            && self.h_ie.iter().all(finite);
        if !all_finite {
            return Err(invalid("channel entries must be finite"));
        }
        Ok(())
    }
}

/// Large-scale power gain `zeta0 * (d0 / d)^alpha`.
pub fn path_loss_gain(d: f64, alpha: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(invalid(format!("distance must be > 0, got {d}")));
    }
    Ok(cfg.zeta0 * (cfg.d0 / d).powf(alpha))
}

/// Exponential correlation matrix `[R]_ij = r^|i-j|`.
pub fn exp_correlation(dim: usize, r: f64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&r) {
        return Err(invalid(format!("correlation coefficient must lie in [0, 1), got {r}")));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| r.powi(i.abs_diff(j) as i32)))
}

/// Line-of-sight and scattered amplitude weights for Rician factor `k`.
fn rician_weights(k: f64) -> Result<(f64, f64)> {
    if k.is_nan() || k < 0.0 {
        return Err(invalid(format!("Rician factor must be >= 0, got {k}")));
    }
    if k.is_infinite() {
        return Ok((1.0, 0.0));
    }
    Ok(((k / (1.0 + k)).sqrt(), (1.0 / (1.0 + k)).sqrt()))
}

/// Draws a `rows x cols` Rician matrix with unit average power per entry.
///
/// When `corr` is given (a `cols x cols` PSD matrix) the scattered part of
/// each row is colored so that its entries have covariance `corr`.
pub fn draw_rician<R: Rng + ?Sized>(
    rng: &mut R,
    k: f64,
    corr: Option<&DMatrix<f64>>,
    rows: usize,
    cols: usize,
) -> Result<CMatrix> {
    let (los, nlos) = rician_weights(k)?;
    let factor = match corr {
        Some(c) => {
            if c.nrows() != cols || c.ncols() != cols {
                return Err(invalid("correlation matrix does not match column count"));
            }
            Some(psd_factor(&real_to_complex(c), PSD_TOL)?)
        }
        None => None,
    };
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        let z = complex_normal_vector(rng, cols);
        let colored = match &factor {
            Some(f) => f * z,
            None => z,
        };
        for j in 0..cols {
            out[(i, j)] = Complex64::new(los, 0.0) + colored[j] * nlos;
        }
    }
    Ok(out)
}

/// Scattered components of the user and eavesdropper direct links, drawn
/// jointly with covariance `[[1, r], [r, 1]] ⊗ corr`.
pub fn draw_direct_pair_scatter<R: Rng + ?Sized>(
    rng: &mut R,
    corr: &DMatrix<f64>,
    r: f64,
) -> Result<(CRow, CRow)> {
    if !(0.0..1.0).contains(&r) {
        return Err(invalid(format!("correlation coefficient must lie in [0, 1), got {r}")));
    }
    let m = corr.nrows();
    let pair = DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]);
    let joint = pair.kronecker(corr);
    let factor = psd_factor(&real_to_complex(&joint), PSD_TOL)?;
    let stacked = factor * complex_normal_vector(rng, 2 * m);
    let user = CRow::from_iterator(m, stacked.iter().take(m).copied());
    let eve = CRow::from_iterator(m, stacked.iter().skip(m).copied());
    Ok((user, eve))
}

fn rician_row_from_scatter(scatter: &CRow, k: f64) -> Result<CRow> {
    let (los, nlos) = rician_weights(k)?;
    Ok(scatter.map(|z| Complex64::new(los, 0.0) + z * nlos))
}

/// Draws one realization of every link in `cfg`.
///
/// Draw order is fixed (H_AI, direct pair, h_IU, h_IE) so a given RNG state
/// always maps to the same channel set.
pub fn generate_channels<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelSet> {
    cfg.validate()?;
    let m = cfg.num_antennas;
    let n = cfg.num_elements;
    let corr = exp_correlation(m, cfg.r)?;

    let g_ai = draw_rician(rng, cfg.k_ai, None, n, m)?;
    let (s_au, s_ae) = draw_direct_pair_scatter(rng, &corr, cfg.r)?;
    let g_au = rician_row_from_scatter(&s_au, cfg.k_au)?;
    let g_ae = rician_row_from_scatter(&s_ae, cfg.k_ae)?;
    let g_iu = draw_rician(rng, cfg.k_iu, None, 1, n)?;
    let g_ie = draw_rician(rng, cfg.k_ie, None, 1, n)?;

    let amp = |d: f64, alpha: f64| path_loss_gain(d, alpha, cfg).map(f64::sqrt);
    let a_ai = amp(cfg.d_ap_irs(), cfg.alpha_ai)?;
    let a_au = amp(cfg.d_ap_user(), cfg.alpha_au)?;
    let a_ae = amp(cfg.d_ap_eve(), cfg.alpha_ae)?;
    let a_iu = amp(cfg.d_irs_user(), cfg.alpha_iu)?;
    let a_ie = amp(cfg.d_irs_eve(), cfg.alpha_ie)?;

    let scale = |x: Complex64, a: f64| x * a;
    ChannelSet::new(
        g_ai.map(|x| scale(x, a_ai)),
        g_au.map(|x| scale(x, a_au)),
        g_ae.map(|x| scale(x, a_ae)),
        CRow::from_iterator(n, g_iu.iter().map(|&x| scale(x, a_iu))),
        CRow::from_iterator(n, g_ie.iter().map(|&x| scale(x, a_ie))),
    )
}
