//! Quantum Fisher information for the sum and difference phases.
//!
//! Three independent routes are provided and cross-checked in the tests:
//!
//! 1. [`qfi_from_derivatives`]: the pure-state formula
//!    `F_jk = 4 Re(⟨∂_jψ|∂_kψ⟩ − ⟨∂_jψ|ψ⟩⟨ψ|∂_kψ⟩)` on `|ψ⟩ = U B |ψ_in⟩`,
//!    with `∂_s ψ = i(N_s/2)ψ` and `∂_d ψ = i(N_d/2)ψ`.
//! 2. [`qfi_from_covariance`]: the covariance matrix of `N_s` and
//!    `K = B† N_d B` on the input state; no phase dependence at all.
//! 3. [`qfi_product_analytic`]: closed forms in the moments of the secondary
//!    state for `|α⟩ ⊗ |χ⟩`.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{ModeState, TwoModeState};
use crate::interferometer::{apply, beam_splitter, phase_shift, PhasePair};
use crate::linalg::I;

/// Real symmetric 2×2 Fisher matrix over `(φ_s, φ_d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FisherMatrix {
    pub f_ss: f64,
    pub f_sd: f64,
    pub f_dd: f64,
}

impl FisherMatrix {
    pub fn new(f_ss: f64, f_sd: f64, f_dd: f64) -> Self {
        Self { f_ss, f_sd, f_dd }
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.f_ss, self.f_sd, self.f_sd, self.f_dd)
    }

    /// `max(|F_jk|, 1)`, the reference for relative comparisons.
    pub fn scale(&self) -> f64 {
        self.f_ss.abs().max(self.f_sd.abs()).max(self.f_dd.abs()).max(1.0)
    }

    pub fn det(&self) -> f64 {
        self.f_ss * self.f_dd - self.f_sd * self.f_sd
    }

    /// Largest entry difference relative to the larger of the two scales.
    pub fn rel_diff(&self, other: &FisherMatrix) -> f64 {
        let d = (self.f_ss - other.f_ss)
            .abs()
            .max((self.f_sd - other.f_sd).abs())
            .max((self.f_dd - other.f_dd).abs());
        d / self.scale().max(other.scale())
    }

    pub fn is_psd(&self, rel_tol: f64) -> bool {
        let s = self.scale();
        self.f_ss >= -rel_tol * s && self.f_dd >= -rel_tol * s && self.det() >= -rel_tol * s * s
    }

    pub fn inverse(&self) -> Result<Matrix2<f64>> {
        let s = self.scale();
        let det = self.det();
        if det <= 1e-12 * s * s {
            return Err(Error::SingularFisher { det, scale: s });
        }
        Ok(Matrix2::new(self.f_dd, -self.f_sd, -self.f_sd, self.f_ss) / det)
    }
}

/// Fisher matrix of `U B |input⟩` from its derivative states.
pub fn qfi_from_derivatives(input: &TwoModeState, pair: PhasePair) -> Result<FisherMatrix> {
    let cap = input.max_total_photons();
    let after_bs = apply(&beam_splitter(cap), input)?;
    let psi = apply(&phase_shift(pair, cap), &after_bs)?;
    Ok(fisher_from_state_derivatives(&psi))
}

fn fisher_from_state_derivatives(psi: &TwoModeState) -> FisherMatrix {
    let amps = psi.amps();
    let ds = DMatrix::from_fn(amps.nrows(), amps.ncols(), |n1, n2| I * 0.5 * (n1 + n2) as f64 * amps[(n1, n2)]);
    let dd = DMatrix::from_fn(amps.nrows(), amps.ncols(), |n1, n2| {
        I * 0.5 * (n1 as f64 - n2 as f64) * amps[(n1, n2)]
    });
    let entry = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| {
        let ab = a.dotc(b);
        let a_psi = a.dotc(amps);
        let psi_b = amps.dotc(b);
        4.0 * (ab - a_psi * psi_b).re
    };
    FisherMatrix::new(entry(&ds, &ds), entry(&ds, &dd), entry(&dd, &dd))
}

/// `K v` on one sector, `K = −i(a1†a2 − a2†a1)`.
pub(crate) fn apply_k(n_s: usize, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n_s + 1];
    for k in 0..n_s {
        let w = (((k + 1) * (n_s - k)) as f64).sqrt();
        out[k + 1] += -I * w * v[k];
        out[k] += I * w * v[k + 1];
    }
    out
}

/// Sufficient statistics of `N_s` and `K` on a two-mode state.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct SumAndK {
    pub mean_ns: f64,
    pub mean_ns2: f64,
    pub mean_k: f64,
    pub mean_k2: f64,
    pub mean_ns_k: f64,
}

pub(crate) fn sum_and_k_moments(input: &TwoModeState) -> SumAndK {
    let mut m = SumAndK::default();
    for n_s in 0..=input.max_total_photons() {
        let v: Vec<Complex64> = input.sector(n_s).iter().copied().collect();
        let w: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if w == 0.0 {
            continue;
        }
        let kv = apply_k(n_s, &v);
        let k_exp: f64 = v.iter().zip(&kv).map(|(a, b)| (a.conj() * b).re).sum();
        let ns = n_s as f64;
        m.mean_ns += ns * w;
        m.mean_ns2 += ns * ns * w;
        m.mean_k += k_exp;
        m.mean_k2 += kv.iter().map(|c| c.norm_sqr()).sum::<f64>();
        m.mean_ns_k += ns * k_exp;
    }
    m
}

/// Fisher matrix as the covariance matrix of `N_s` and `K` on the input.
pub fn qfi_from_covariance(input: &TwoModeState) -> FisherMatrix {
    let m = sum_and_k_moments(input);
    FisherMatrix::new(
        m.mean_ns2 - m.mean_ns * m.mean_ns,
        m.mean_ns_k - m.mean_ns * m.mean_k,
        m.mean_k2 - m.mean_k * m.mean_k,
    )
}

/// Secondary-state moments entering the product-input closed forms.
struct ProductMoments {
    beta: Complex64,
    nbar: f64,
    var_n: f64,
    /// `⟨(Δa)²⟩`
    da2: Complex64,
    /// `⟨N Δa⟩`
    n_da: Complex64,
}

fn product_moments(chi: &ModeState) -> ProductMoments {
    let a = chi.amps();
    let beta = chi.mean_amplitude();
    let nbar = chi.mean_photon();
    let n_a: Complex64 = (0..a.len() - 1).map(|n| a[n].conj() * a[n + 1] * (n as f64 * ((n + 1) as f64).sqrt())).sum();
    ProductMoments {
        beta,
        nbar,
        var_n: chi.number_moment(2) - nbar * nbar,
        da2: chi.mean_amplitude_squared() - beta * beta,
        n_da: n_a - beta * nbar,
    }
}

/// Closed-form Fisher matrix for `|α⟩ ⊗ |χ⟩`:
///
/// * `F_ss = |α|² + ⟨(ΔN₂)²⟩`
/// * `F_dd = |α|²⟨ΔaΔa† + Δa†Δa⟩ − α*²⟨(Δa)²⟩ − α²⟨(Δa†)²⟩ + ⟨N₂⟩`
/// * `F_sd = −iα*⟨N₂Δa⟩ + iα⟨Δa†N₂⟩ − iα*⟨a⟩ + iα⟨a†⟩`
///
/// The last term of `F_sd` is the Hermitian partner of `−iα*⟨a⟩`; without it
/// the expression is not real (see [`fsd_without_conjugate_term`]).
pub fn qfi_product_analytic(alpha: Complex64, chi: &ModeState) -> FisherMatrix {
    let m = product_moments(chi);
    let a2 = alpha.norm_sqr();
    let f_ss = a2 + m.var_n;
    let sym = 2.0 * m.nbar + 1.0 - 2.0 * m.beta.norm_sqr();
    let f_dd = a2 * sym - 2.0 * (alpha.conj() * alpha.conj() * m.da2).re + m.nbar;
    let f_sd = 2.0 * (alpha.conj() * m.n_da).im + 2.0 * (alpha.conj() * m.beta).im;
    FisherMatrix::new(f_ss, f_sd, f_dd)
}

/// `−iα*⟨N₂Δa⟩ + iα⟨Δa†N₂⟩ − iα*⟨a⟩`, i.e. the `F_sd` closed form with only
/// the unpaired final term. Differs from the covariance value by `iα⟨a†⟩`;
/// kept so the discrepancy can be reported.
pub fn fsd_without_conjugate_term(alpha: Complex64, chi: &ModeState) -> Complex64 {
    let m = product_moments(chi);
    let paired = -I * alpha.conj() * m.n_da + I * alpha * m.n_da.conj();
    paired - I * alpha.conj() * m.beta
}

/// `F_dd = 2α²⟨(Δp)²⟩ + N̄` for real `α` (`alpha_sq = α²`).
pub fn fdd_quadrature(alpha_sq: f64, chi: &ModeState) -> f64 {
    let m = chi.moments();
    2.0 * alpha_sq * m.var_p + m.mean_photon
}

/// Upper bound on `F_dd` at fixed `N̄` and its decomposition
/// `F_max = 4α²N̄ + R = N_tot² − (α² − N̄)² + R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FmaxReport {
    pub f_max: f64,
    pub remainder_r: f64,
    pub n_tot: f64,
    /// `N_tot²`
    pub heisenberg_term: f64,
    /// `(α² − N̄)²`
    pub imbalance_term: f64,
}

pub fn fmax_bound(alpha_sq: f64, nbar: f64) -> Result<FmaxReport> {
    if !(alpha_sq >= 0.0 && nbar >= 0.0 && alpha_sq.is_finite() && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "fmax_bound needs finite alpha_sq, nbar >= 0 (got {alpha_sq}, {nbar})"
        )));
    }
    let root = (nbar * (nbar + 1.0)).sqrt();
    let f_max = alpha_sq * (2.0 * nbar + 2.0 * root + 1.0) + nbar;
    let remainder_r = nbar + alpha_sq * (2.0 * root - 2.0 * nbar + 1.0);
    let n_tot = alpha_sq + nbar;
    Ok(FmaxReport {
        f_max,
        remainder_r,
        n_tot,
        heisenberg_term: n_tot * n_tot,
        imbalance_term: (alpha_sq - nbar) * (alpha_sq - nbar),
    })
}

/// `α² e^{2r} + sinh² r`, the bound attained by squeezed vacuum.
pub fn fmax_squeezed(alpha_sq: f64, r: f64) -> f64 {
    alpha_sq * (2.0 * r).exp() + r.sinh().powi(2)
}

/// Outcome of testing `Σ ≥ F⁻¹`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QcrbReport {
    pub satisfied: bool,
    /// Smallest eigenvalue of `Σ − F⁻¹`.
    pub matrix_margin: f64,
    /// `tr Σ − tr F⁻¹`
    pub trace_margin: f64,
    /// `det Σ − det F⁻¹`
    pub det_margin: f64,
}

/// Matrix quantum Cramér-Rao check for an estimator covariance `sigma`.
pub fn qcrb_check(fm: &FisherMatrix, sigma: &Matrix2<f64>) -> Result<QcrbReport> {
    let inv = fm.inverse()?;
    let diff = sigma - inv;
    let half_sum = 0.5 * (diff[(0, 0)] + diff[(1, 1)]);
    let half_gap = (0.25 * (diff[(0, 0)] - diff[(1, 1)]).powi(2) + 0.25 * (diff[(0, 1)] + diff[(1, 0)]).powi(2)).sqrt();
    let matrix_margin = half_sum - half_gap;
    let tol = 1e-10 * inv.amax();
    Ok(QcrbReport {
        satisfied: matrix_margin >= -tol,
        matrix_margin,
        trace_margin: sigma.trace() - inv.trace(),
        det_margin: sigma.determinant() - inv.determinant(),
    })
}

/// Single-parameter bound `Σ_dd ≥ 1/F_dd`; returns `(satisfied, margin)`.
pub fn qcrb_check_dd(f_dd: f64, var_dd: f64) -> (bool, f64) {
    let bound = if f_dd > 0.0 { 1.0 / f_dd } else { f64::INFINITY };
    let margin = var_dd - bound;
    (margin >= -1e-10 * bound, margin)
}
