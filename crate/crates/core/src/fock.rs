//! Truncated Fock-basis states and operators for one and two bosonic modes.
//!
//! Quadratures follow `a = (x + i p)/√2`, so the vacuum has
//! `⟨(Δx)²⟩ = ⟨(Δp)²⟩ = 1/2` and `⟨x²⟩ + ⟨p²⟩ = 2⟨N⟩ + 1`. Every other factor
//! in the crate (Fisher information, optimal states) is written against this
//! convention.
//!
//! Photon-number weights are accumulated in log space, so constructors stay
//! finite far beyond the point where `n!` overflows.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{RealSpectrum, I};

/// Default bound on the probability allowed outside (or at the top of) a
/// truncated basis.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Basis size and tail tolerance for a single truncated mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy {
    dim: usize,
    tail_tol: f64,
}

impl TruncationPolicy {
    pub fn new(dim: usize, tail_tol: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("truncation dimension must be at least 2, got {dim}")));
        }
        if !(tail_tol >= 0.0 && tail_tol.is_finite()) {
            return Err(Error::InvalidParameter(format!("tail tolerance must be finite and nonnegative, got {tail_tol}")));
        }
        Ok(Self { dim, tail_tol })
    }

    /// `dim = ⌈μ + 8√μ + 20⌉` with the default tail tolerance. Generous for
    /// Poissonian light; squeezed light needs [`TruncationPolicy::for_squeezed`].
    pub fn for_mean(mu: f64) -> Self {
        let mu = mu.max(0.0);
        let dim = (mu + 8.0 * mu.sqrt() + 20.0).ceil() as usize;
        Self { dim, tail_tol: DEFAULT_TAIL_TOL }
    }

    /// Smallest basis holding `S(r)|0⟩` with top-level and tail mass below
    /// `tail_tol` (but never smaller than [`TruncationPolicy::for_mean`]).
    pub fn for_squeezed(r: f64, tail_tol: f64) -> Self {
        let floor = Self::for_mean(r.sinh().powi(2)).dim;
        let t = r.tanh().powi(2);
        if t == 0.0 || tail_tol <= 0.0 {
            return Self { dim: floor, tail_tol: tail_tol.max(0.0) };
        }
        // p_{2m+2}/p_{2m} = t (2m+1)/(2m+2) < t, so everything from level 2m on
        // is bounded by p_{2m}/(1 - t).
        let mut ln_p = -r.cosh().ln();
        let mut m = 0usize;
        while ln_p - (1.0 - t).ln() > tail_tol.ln() {
            ln_p += t.ln() + ((2 * m + 1) as f64).ln() - ((2 * m + 2) as f64).ln();
            m += 1;
        }
        Self { dim: (2 * m + 1).max(floor), tail_tol }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn with_dim(self, dim: usize) -> Result<Self> {
        Self::new(dim, self.tail_tol)
    }

    pub fn with_tail_tol(self, tail_tol: f64) -> Result<Self> {
        Self::new(self.dim, tail_tol)
    }

    fn check(&self, what: &str, top: f64, tail: f64) -> Result<()> {
        if top > self.tail_tol || tail > self.tail_tol {
            return Err(Error::TruncationTooSmall(format!(
                "{what} at dim {}: top-level probability {top:e}, mass beyond truncation {tail:e}, tolerance {:e}",
                self.dim, self.tail_tol
            )));
        }
        Ok(())
    }
}

/// Sum of `exp(ln_p)` over levels produced by `step` until the terms are
/// negligible and past the distribution's bulk.
fn tail_sum(mut ln_p: f64, mut level: f64, bulk: f64, mut step: impl FnMut(f64, f64) -> (f64, f64)) -> f64 {
    let mut sum = 0.0;
    for _ in 0..1_000_000 {
        let p = ln_p.exp();
        sum += p;
        if level > bulk && (p == 0.0 || p < 1e-18 * sum) {
            break;
        }
        (ln_p, level) = step(ln_p, level);
    }
    sum
}

/// Pure state of one truncated mode; `amps[n]` is the amplitude of `|n⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeState {
    amps: DVector<Complex64>,
}

/// Single-mode moments, quadratures in the `a = (x + i p)/√2` convention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean_photon: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub var_n: f64,
}

impl ModeState {
    /// Normalizes `amps`; fails on a zero or non-finite vector.
    pub fn from_amplitudes(amps: DVector<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidParameter("mode state needs at least two Fock levels".into()));
        }
        let norm = amps.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(format!("cannot normalize amplitude vector of norm {norm}")));
        }
        Ok(Self { amps: amps / Complex64::new(norm, 0.0) })
    }

    pub fn vacuum(dim: usize) -> Self {
        let mut amps = DVector::from_element(dim.max(2), ZERO);
        amps[0] = ONE;
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Zero-padded (or truncated, if the dropped levels are empty) copy.
    pub fn resized(&self, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!("cannot resize to dimension {dim}")));
        }
        if self.amps.iter().skip(dim).any(|c| *c != ZERO) {
            return Err(Error::TruncationTooSmall(format!("state has support above level {}", dim - 1)));
        }
        Ok(Self { amps: DVector::from_fn(dim, |n, _| self.amps.get(n).copied().unwrap_or(ZERO)) })
    }

    /// `⟨self|other⟩`, padding the shorter vector with zeros.
    pub fn overlap(&self, other: &ModeState) -> Complex64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn fidelity(&self, other: &ModeState) -> f64 {
        self.overlap(other).norm_sqr()
    }

    fn with_phase(&self, phase: Complex64) -> Self {
        Self { amps: self.amps.map(|c| c * phase) }
    }

    /// Global phase fixed so the first nonzero amplitude is real positive.
    pub fn gauge_first_nonzero(&self) -> Self {
        match self.amps.iter().find(|c| c.norm() > 0.0) {
            Some(c) => self.with_phase(c.conj() / c.norm()),
            None => self.clone(),
        }
    }

    /// Global phase fixed so the largest-magnitude amplitude is real positive.
    pub fn gauge_largest(&self) -> Self {
        let c = self.amps.iter().copied().fold(ZERO, |best, c| if c.norm() > best.norm() { c } else { best });
        if c.norm() > 0.0 {
            self.with_phase(c.conj() / c.norm())
        } else {
            self.clone()
        }
    }

    /// `⟨a⟩`.
    pub fn mean_amplitude(&self) -> Complex64 {
        let a = &self.amps;
        (0..a.len() - 1).map(|n| a[n].conj() * a[n + 1] * ((n + 1) as f64).sqrt()).sum()
    }

    /// `⟨a²⟩`.
    pub fn mean_amplitude_squared(&self) -> Complex64 {
        let a = &self.amps;
        (0..a.len().saturating_sub(2))
            .map(|n| a[n].conj() * a[n + 2] * (((n + 1) * (n + 2)) as f64).sqrt())
            .sum()
    }

    /// `⟨N^k⟩`.
    pub fn number_moment(&self, k: i32) -> f64 {
        self.amps.iter().enumerate().map(|(n, c)| (n as f64).powi(k) * c.norm_sqr()).sum()
    }

    pub fn mean_photon(&self) -> f64 {
        self.number_moment(1)
    }

    /// Quadrature and number moments of the state itself, i.e. without the
    /// top-level clipping a truncated `x` or `p` matrix would introduce:
    /// `⟨x²⟩ = N̄ + ½ + Re⟨a²⟩`, `⟨p²⟩ = N̄ + ½ − Re⟨a²⟩`.
    pub fn moments(&self) -> Moments {
        let beta = self.mean_amplitude();
        let a2 = self.mean_amplitude_squared().re;
        let mean_photon = self.mean_photon();
        let mean_x = std::f64::consts::SQRT_2 * beta.re;
        let mean_p = std::f64::consts::SQRT_2 * beta.im;
        Moments {
            mean_photon,
            mean_x,
            mean_p,
            var_x: mean_photon + 0.5 + a2 - mean_x * mean_x,
            var_p: mean_photon + 0.5 - a2 - mean_p * mean_p,
            var_n: self.number_moment(2) - mean_photon * mean_photon,
        }
    }

    /// Total probability on odd Fock levels.
    pub fn odd_population(&self) -> f64 {
        self.amps.iter().skip(1).step_by(2).map(|c| c.norm_sqr()).sum()
    }

    /// Probability in the top `band` Fock levels.
    pub fn top_band_mass(&self, band: usize) -> f64 {
        let d = self.dim();
        self.amps.iter().skip(d.saturating_sub(band)).map(|c| c.norm_sqr()).sum()
    }
}

/// Coherent state `D(α)|0⟩` with amplitudes `e^{-|α|²/2} αⁿ/√n!`.
pub fn make_coherent(alpha: Complex64, policy: TruncationPolicy) -> Result<ModeState> {
    let dim = policy.dim();
    let mu = alpha.norm_sqr();
    if mu == 0.0 {
        return Ok(ModeState::vacuum(dim));
    }
    let ln_abs = alpha.norm().ln();
    let theta = alpha.arg();
    let mut amps = DVector::from_element(dim, ZERO);
    let mut ln_mag = -0.5 * mu;
    amps[0] = Complex64::new(ln_mag.exp(), 0.0);
    for n in 1..dim {
        ln_mag += ln_abs - 0.5 * (n as f64).ln();
        amps[n] = Complex64::from_polar(ln_mag.exp(), n as f64 * theta);
    }
    let top = amps[dim - 1].norm_sqr();
    let ln_p_next = 2.0 * ln_mag + mu.ln() - (dim as f64).ln();
    let tail = tail_sum(ln_p_next, dim as f64, mu, |lp, n| (lp + mu.ln() - (n + 1.0).ln(), n + 1.0));
    policy.check(&format!("coherent state |α|² = {mu}"), top, tail)?;
    ModeState::from_amplitudes(amps)
}

/// Squeezed vacuum `exp(r(a² − a†²)/2)|0⟩` from its even-level series
/// `c_{2m} = (−tanh r)^m √((2m)!) / (2^m m! √cosh r)`. For `r > 0` the `p`
/// quadrature is amplified: `⟨(Δp)²⟩ = e^{2r}/2`.
pub fn make_squeezed_vacuum(r: f64, policy: TruncationPolicy) -> Result<ModeState> {
    if !r.is_finite() {
        return Err(Error::InvalidParameter(format!("squeeze parameter must be finite, got {r}")));
    }
    let dim = policy.dim();
    if r == 0.0 {
        return Ok(ModeState::vacuum(dim));
    }
    let t = r.tanh();
    let sign = -t.signum();
    let ln_t = t.abs().ln();
    let mut amps = DVector::from_element(dim, ZERO);
    let mut ln_mag = -0.5 * r.cosh().ln();
    let mut m = 0usize;
    let mut last_even = 0usize;
    while 2 * m < dim {
        amps[2 * m] = Complex64::new(sign.powi(m as i32) * ln_mag.exp(), 0.0);
        last_even = 2 * m;
        ln_mag += ln_t + 0.5 * (((2 * m + 1) as f64).ln() - ((2 * m + 2) as f64).ln());
        m += 1;
    }
    let top = if last_even == dim - 1 { amps[dim - 1].norm_sqr() } else { 0.0 };
    let ln_t2 = 2.0 * ln_t;
    let bulk = r.sinh().powi(2);
    let tail = tail_sum(2.0 * ln_mag, (2 * m) as f64, bulk, |lp, n| {
        (lp + ln_t2 + (n + 1.0).ln() - (n + 2.0).ln(), n + 2.0)
    });
    policy.check(&format!("squeezed vacuum r = {r}"), top, tail)?;
    ModeState::from_amplitudes(amps)
}

/// Number state `|n⟩`.
pub fn make_number(n: usize, policy: TruncationPolicy) -> Result<ModeState> {
    let dim = policy.dim();
    if n >= dim {
        return Err(Error::IndexOutOfRange { index: n, dim });
    }
    let mut amps = DVector::from_element(dim, ZERO);
    amps[n] = ONE;
    Ok(ModeState { amps })
}

/// Matrix of `a + a†` in the truncated basis.
fn x2_matrix(dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 0..dim - 1 {
        let s = ((n + 1) as f64).sqrt();
        m[(n, n + 1)] = s;
        m[(n + 1, n)] = s;
    }
    m
}

/// Displacement `D(β) = exp(β a† − β* a)` of the truncated generator.
///
/// Writing `β = |β| e^{iθ}`, `D(β) = P exp(−i|β|(a + a†)) P†` with
/// `P = diag(e^{i n (θ + π/2)})`, so only a real symmetric tridiagonal matrix
/// is diagonalized.
pub fn displace(state: &ModeState, beta: Complex64) -> Result<ModeState> {
    if beta == ZERO {
        return Ok(state.clone());
    }
    let dim = state.dim();
    let spectrum = RealSpectrum::new(x2_matrix(dim));
    let core = spectrum.expi(-beta.norm());
    let shift = beta.arg() + std::f64::consts::FRAC_PI_2;
    let phase: Vec<Complex64> = (0..dim).map(|n| Complex64::from_polar(1.0, n as f64 * shift)).collect();
    let rotated_in = DVector::from_fn(dim, |n, _| phase[n].conj() * state.amps[n]);
    let mut out = core * rotated_in;
    for n in 0..dim {
        out[n] *= phase[n];
    }
    let top = out[dim - 1].norm_sqr();
    if top > DEFAULT_TAIL_TOL {
        return Err(Error::TruncationTooSmall(format!(
            "displacement by {beta} pushes probability {top:e} onto the top level of a {dim}-level basis"
        )));
    }
    ModeState::from_amplitudes(out)
}

/// Dense operator on one truncated mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeOperator {
    pub mat: DMatrix<Complex64>,
}

impl ModeOperator {
    pub fn annihilation(dim: usize) -> Self {
        let mut mat = DMatrix::from_element(dim, dim, ZERO);
        for n in 0..dim - 1 {
            mat[(n, n + 1)] = Complex64::new(((n + 1) as f64).sqrt(), 0.0);
        }
        Self { mat }
    }

    pub fn creation(dim: usize) -> Self {
        Self::annihilation(dim).adjoint()
    }

    pub fn number(dim: usize) -> Self {
        Self { mat: DMatrix::from_fn(dim, dim, |r, c| if r == c { Complex64::new(r as f64, 0.0) } else { ZERO }) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: DMatrix::identity(dim, dim) }
    }

    /// `x = (a + a†)/√2`.
    pub fn x_quadrature(dim: usize) -> Self {
        let a = Self::annihilation(dim).mat;
        Self { mat: (&a + a.adjoint()) * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0) }
    }

    /// `p = (a − a†)/(i√2)`.
    pub fn p_quadrature(dim: usize) -> Self {
        let a = Self::annihilation(dim).mat;
        Self { mat: (&a - a.adjoint()) * (-I * std::f64::consts::FRAC_1_SQRT_2) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint() }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self { mat: &self.mat * &other.mat - &other.mat * &self.mat }
    }

    pub fn apply(&self, state: &ModeState) -> DVector<Complex64> {
        &self.mat * &state.amps
    }

    pub fn expectation(&self, state: &ModeState) -> Complex64 {
        state.amps.dotc(&self.apply(state))
    }
}

/// Pure state of two truncated modes; entry `(n1, n2)` is the amplitude of
/// `|n1, n2⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    amps: DMatrix<Complex64>,
}

impl TwoModeState {
    pub fn from_amplitudes(amps: DMatrix<Complex64>) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(format!("cannot normalize two-mode amplitudes of norm {norm}")));
        }
        Ok(Self { amps: amps / Complex64::new(norm, 0.0) })
    }

    pub(crate) fn from_normalized(amps: DMatrix<Complex64>) -> Self {
        Self { amps }
    }

    pub fn amps(&self) -> &DMatrix<Complex64> {
        &self.amps
    }

    pub fn dims(&self) -> (usize, usize) {
        self.amps.shape()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Largest total photon number with a nonzero amplitude.
    pub fn max_total_photons(&self) -> usize {
        let (d1, d2) = self.dims();
        let mut best = 0;
        for n1 in 0..d1 {
            for n2 in 0..d2 {
                if self.amps[(n1, n2)] != ZERO {
                    best = best.max(n1 + n2);
                }
            }
        }
        best
    }

    /// Amplitudes of the `n_s`-photon sector, indexed by `n1 = 0..=n_s`.
    pub fn sector(&self, n_s: usize) -> DVector<Complex64> {
        let (d1, d2) = self.dims();
        DVector::from_fn(n_s + 1, |n1, _| {
            let n2 = n_s - n1;
            if n1 < d1 && n2 < d2 {
                self.amps[(n1, n2)]
            } else {
                ZERO
            }
        })
    }

    /// Probability of `n1` photons in the first mode.
    pub fn marginal_first(&self) -> Vec<f64> {
        self.amps.row_iter().map(|row| row.iter().map(|c| c.norm_sqr()).sum()).collect()
    }

    pub fn marginal_second(&self) -> Vec<f64> {
        self.amps.column_iter().map(|col| col.iter().map(|c| c.norm_sqr()).sum()).collect()
    }

    /// `⟨self|other⟩` over the common part of the two grids (missing entries
    /// are zero amplitudes).
    pub fn overlap(&self, other: &TwoModeState) -> Complex64 {
        let (a1, a2) = self.dims();
        let (b1, b2) = other.dims();
        let mut acc = ZERO;
        for n1 in 0..a1.min(b1) {
            for n2 in 0..a2.min(b2) {
                acc += self.amps[(n1, n2)].conj() * other.amps[(n1, n2)];
            }
        }
        acc
    }

    pub fn fidelity(&self, other: &TwoModeState) -> f64 {
        self.overlap(other).norm_sqr()
    }

    /// True when every amplitude has imaginary part at most `tol`.
    pub fn has_real_coefficients(&self, tol: f64) -> bool {
        self.amps.iter().all(|c| c.im.abs() <= tol)
    }

    /// `⟨a1⟩` and `⟨a2⟩`.
    pub fn mean_amplitudes(&self) -> (Complex64, Complex64) {
        let (d1, d2) = self.dims();
        let mut m1 = ZERO;
        let mut m2 = ZERO;
        for n1 in 0..d1 {
            for n2 in 0..d2 {
                let c = self.amps[(n1, n2)];
                if n1 + 1 < d1 {
                    m1 += self.amps[(n1, n2)].conj() * self.amps[(n1 + 1, n2)] * ((n1 + 1) as f64).sqrt();
                }
                if n2 + 1 < d2 {
                    m2 += c.conj() * self.amps[(n1, n2 + 1)] * ((n2 + 1) as f64).sqrt();
                }
            }
        }
        (m1, m2)
    }

    /// `⟨a1† a2⟩`.
    pub fn cross_moment(&self) -> Complex64 {
        let (d1, d2) = self.dims();
        let mut acc = ZERO;
        for n1 in 0..d1.saturating_sub(1) {
            for n2 in 1..d2 {
                acc += self.amps[(n1 + 1, n2 - 1)].conj()
                    * self.amps[(n1, n2)]
                    * (((n1 + 1) * n2) as f64).sqrt();
            }
        }
        acc
    }
}

/// `|s1⟩ ⊗ |s2⟩`.
pub fn tensor(s1: &ModeState, s2: &ModeState) -> TwoModeState {
    let amps = DMatrix::from_fn(s1.dim(), s2.dim(), |n1, n2| s1.amps[n1] * s2.amps[n2]);
    TwoModeState::from_amplitudes(amps).expect("tensor product of normalized states has unit norm")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn policy(dim: usize) -> TruncationPolicy {
        TruncationPolicy::new(dim, DEFAULT_TAIL_TOL).unwrap()
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::new(1, 1e-10).is_err());
        assert!(TruncationPolicy::new(4, -1.0).is_err());
        assert_eq!(TruncationPolicy::for_mean(0.0).dim(), 20);
        assert_eq!(TruncationPolicy::for_mean(4.0).dim(), 40);
        assert_eq!(TruncationPolicy::for_mean(100.0).dim(), 200);
    }

    #[test]
    fn coherent_zero_is_vacuum() {
        let s = make_coherent(c(0.0, 0.0), policy(10)).unwrap();
        assert_eq!(s.amps()[0], ONE);
        assert!(s.amps().iter().skip(1).all(|a| *a == ZERO));
    }

    #[test]
    fn coherent_two_moments() {
        let s = make_coherent(c(2.0, 0.0), policy(40)).unwrap();
        assert_abs_diff_eq!(s.mean_photon(), 4.0, epsilon = 1e-8);
        assert_abs_diff_eq!(s.amps()[0].re, (-2.0f64).exp(), epsilon = 1e-12);
        // Poisson weights summed directly.
        let mut p = (-4.0f64).exp();
        let mut mean = 0.0;
        for n in 1..40 {
            p *= 4.0 / n as f64;
            mean += n as f64 * p;
        }
        assert_abs_diff_eq!(s.mean_photon(), mean, epsilon = 1e-12);
        let m = s.moments();
        assert_abs_diff_eq!(m.mean_x, 2.0 * 2f64.sqrt(), epsilon = 1e-10);
        assert_abs_diff_eq!(m.var_x, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(m.var_p, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn coherent_large_amplitude_stays_finite() {
        // |α|² = 400 would overflow n! long before the top of the basis.
        let s = make_coherent(c(20.0, 0.0), TruncationPolicy::for_mean(400.0)).unwrap();
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mean_photon(), 400.0, epsilon = 1e-6);
    }

    #[test]
    fn coherent_rejects_small_basis() {
        let err = make_coherent(c(3.0, 0.0), policy(10)).unwrap_err();
        assert!(matches!(err, Error::TruncationTooSmall(_)));
    }

    #[test]
    fn squeezed_vacuum_photon_number_and_parity() {
        let r = 1f64.asinh();
        // Tail beyond level 59 is 1.33e-10, just above the default tolerance.
        assert!(make_squeezed_vacuum(r, policy(60)).is_err());
        let s = make_squeezed_vacuum(r, TruncationPolicy::new(60, 1e-9).unwrap()).unwrap();
        assert_abs_diff_eq!(s.mean_photon(), 1.0, epsilon = 1e-8);
        assert!(s.amps().iter().skip(1).step_by(2).all(|a| *a == ZERO));
        assert!(make_squeezed_vacuum(0.0, policy(5)).unwrap() == ModeState::vacuum(5));
    }

    #[test]
    fn squeezed_vacuum_quadratures() {
        let s = make_squeezed_vacuum(0.5, policy(40)).unwrap();
        let m = s.moments();
        assert_abs_diff_eq!(m.var_p, 1f64.exp() / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.var_x, (-1f64).exp() / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.var_x * m.var_p, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn squeezed_rejects_small_basis() {
        assert!(matches!(make_squeezed_vacuum(2.0, policy(20)), Err(Error::TruncationTooSmall(_))));
        let p = TruncationPolicy::for_squeezed(2.0, 1e-10);
        assert!(make_squeezed_vacuum(2.0, p).is_ok());
    }

    #[test]
    fn number_states() {
        let s = make_number(3, policy(10)).unwrap();
        assert_eq!(s.mean_photon(), 3.0);
        assert_abs_diff_eq!(s.moments().var_p, 3.5, epsilon = 1e-12);
        assert_eq!(make_number(0, policy(4)).unwrap(), ModeState::vacuum(4));
        assert_eq!(make_number(10, policy(10)), Err(Error::IndexOutOfRange { index: 10, dim: 10 }));
    }

    #[test]
    fn displacement_builds_coherent_states() {
        let alpha = c(1.2, -0.7);
        let d = displace(&ModeState::vacuum(40), alpha).unwrap();
        let coh = make_coherent(alpha, policy(40)).unwrap();
        assert!(d.fidelity(&coh) >= 1.0 - 1e-10);
        let s = make_squeezed_vacuum(0.3, policy(40)).unwrap();
        assert_eq!(displace(&s, ZERO).unwrap(), s);
        let back = displace(&make_coherent(ONE, policy(40)).unwrap(), -ONE).unwrap();
        assert!(back.fidelity(&ModeState::vacuum(40)) >= 1.0 - 1e-10);
    }

    #[test]
    fn displacement_rejects_overflow() {
        assert!(matches!(displace(&ModeState::vacuum(12), c(3.0, 0.0)), Err(Error::TruncationTooSmall(_))));
    }

    #[test]
    fn canonical_commutator_away_from_top_level() {
        let dim = 12;
        let a = ModeOperator::annihilation(dim);
        let comm = a.commutator(&a.adjoint());
        for r in 0..dim - 1 {
            for col in 0..dim - 1 {
                let want = if r == col { ONE } else { ZERO };
                assert_abs_diff_eq!((comm.mat[(r, col)] - want).norm(), 0.0, epsilon = 1e-12);
            }
        }
        assert_abs_diff_eq!(comm.mat[(dim - 1, dim - 1)].re, 1.0 - dim as f64, epsilon = 1e-12);
    }

    #[test]
    fn tensor_products() {
        let v = ModeState::vacuum(3);
        let t = tensor(&v, &v);
        assert_eq!(t.amps()[(0, 0)], ONE);
        let coh = make_coherent(c(1.5, 0.0), policy(30)).unwrap();
        let t = tensor(&coh, &ModeState::vacuum(5));
        assert_abs_diff_eq!(t.norm(), 1.0, epsilon = 1e-12);
        for (n, p) in t.marginal_first().iter().enumerate() {
            assert_abs_diff_eq!(*p, coh.amps()[n].norm_sqr(), epsilon = 1e-15);
        }
    }

    #[test]
    fn gauges() {
        let amps = DVector::from_vec(vec![ZERO, c(0.0, 0.6), c(-0.8, 0.0)]);
        let s = ModeState::from_amplitudes(amps).unwrap();
        let g = s.gauge_first_nonzero();
        assert_abs_diff_eq!(g.amps()[1].re, 0.6, epsilon = 1e-15);
        let g = s.gauge_largest();
        assert_abs_diff_eq!(g.amps()[2].re, 0.8, epsilon = 1e-15);
        assert!(ModeState::from_amplitudes(DVector::from_element(3, ZERO)).is_err());
    }
}
