//! Beam splitter, phase shifts and the Mach-Zehnder transformation, stored
//! blockwise by total photon number `n_s`.
//!
//! Inside the `n_s` sector the basis is `|n1, n_s − n1⟩` for `n1 = 0..=n_s`,
//! which is the angular-momentum basis `|j, m⟩` with `j = n_s/2` and
//! `m = n1 − j` in ascending order. With `J_+ = a1† a2`:
//!
//! * `J_x = (a1†a2 + a2†a1)/2`, real symmetric tridiagonal,
//! * `J_y = K/2 = −i(a1†a2 − a2†a1)/2`,
//! * `J_z = N_d/2 = (n1 − n2)/2`.
//!
//! Every exponential is built from the eigendecomposition of `J_x`; the `J_y`
//! rotation uses `J_y = D J_x D†` with `D = diag((−i)^{n1})`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::TwoModeState;
use crate::linalg::{real_to_complex, RealSpectrum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sum and difference phases `φ_s = φ₁ + φ₂`, `φ_d = φ₁ − φ₂`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PhasePair {
    pub phi_s: f64,
    pub phi_d: f64,
}

impl PhasePair {
    pub fn new(phi_s: f64, phi_d: f64) -> Self {
        Self { phi_s, phi_d }
    }

    pub fn from_arms(phi1: f64, phi2: f64) -> Self {
        Self { phi_s: phi1 + phi2, phi_d: phi1 - phi2 }
    }

    /// `(φ₁, φ₂)`.
    pub fn arms(&self) -> (f64, f64) {
        ((self.phi_s + self.phi_d) / 2.0, (self.phi_s - self.phi_d) / 2.0)
    }
}

fn raising_weight(n_s: usize, k: usize) -> f64 {
    (((k + 1) * (n_s - k)) as f64).sqrt()
}

/// `J_x` on the `n_s` sector.
pub fn jx_block(n_s: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n_s + 1, n_s + 1);
    for k in 0..n_s {
        let w = 0.5 * raising_weight(n_s, k);
        m[(k + 1, k)] = w;
        m[(k, k + 1)] = w;
    }
    m
}

/// `J_y` on the `n_s` sector.
pub fn jy_block(n_s: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(n_s + 1, n_s + 1, ZERO);
    for k in 0..n_s {
        let w = 0.5 * raising_weight(n_s, k);
        m[(k + 1, k)] = Complex64::new(0.0, -w);
        m[(k, k + 1)] = Complex64::new(0.0, w);
    }
    m
}

/// `J_z` on the `n_s` sector.
pub fn jz_block(n_s: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n_s + 1, n_s + 1, |r, c| {
        if r == c {
            Complex64::new(r as f64 - n_s as f64 / 2.0, 0.0)
        } else {
            ZERO
        }
    })
}

/// `K = B† N_d B = 2 J_y`.
pub fn k_block(n_s: usize) -> DMatrix<Complex64> {
    jy_block(n_s) * Complex64::new(2.0, 0.0)
}

pub(crate) fn jx_spectrum(n_s: usize) -> RealSpectrum {
    RealSpectrum::new(jx_block(n_s))
}

/// `(−i)^k`, the diagonal of the rotation taking `J_x` to `J_y`.
pub(crate) fn jy_frame_phase(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `exp(i θ J_y)` from a precomputed `J_x` spectrum.
pub(crate) fn jy_rotation_from(spectrum: &RealSpectrum, theta: f64) -> DMatrix<Complex64> {
    let mut m = spectrum.expi(theta);
    let n = m.nrows();
    for r in 0..n {
        for c in 0..n {
            m[(r, c)] *= jy_frame_phase(r) * jy_frame_phase(c).conj();
        }
    }
    m
}

/// `exp(i θ J_y)` on the `n_s` sector.
pub fn jy_rotation(n_s: usize, theta: f64) -> DMatrix<Complex64> {
    jy_rotation_from(&jx_spectrum(n_s), theta)
}

/// Operator that conserves total photon number, one dense block per sector
/// `n_s = 0..=dim_cap`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeOperator {
    blocks: Vec<DMatrix<Complex64>>,
}

impl TwoModeOperator {
    /// Blocks must be square with block `n` of size `n + 1`.
    pub fn from_blocks(blocks: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("operator needs at least the vacuum block".into()));
        }
        for (n, b) in blocks.iter().enumerate() {
            if b.shape() != (n + 1, n + 1) {
                return Err(Error::InvalidParameter(format!(
                    "block {n} has shape {:?}, expected ({}, {})",
                    b.shape(),
                    n + 1,
                    n + 1
                )));
            }
        }
        Ok(Self { blocks })
    }

    fn from_fn(dim_cap: usize, f: impl FnMut(usize) -> DMatrix<Complex64>) -> Self {
        Self { blocks: (0..=dim_cap).map(f).collect() }
    }

    pub fn identity(dim_cap: usize) -> Self {
        Self::from_fn(dim_cap, |n| DMatrix::identity(n + 1, n + 1))
    }

    pub fn dim_cap(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, n_s: usize) -> &DMatrix<Complex64> {
        &self.blocks[n_s]
    }

    pub fn blocks(&self) -> &[DMatrix<Complex64>] {
        &self.blocks
    }

    pub fn adjoint(&self) -> Self {
        Self { blocks: self.blocks.iter().map(|b| b.adjoint()).collect() }
    }

    /// `self · other` (apply `other` first), over the common sectors.
    pub fn compose(&self, other: &Self) -> Self {
        let cap = self.dim_cap().min(other.dim_cap());
        Self::from_fn(cap, |n| &self.blocks[n] * &other.blocks[n])
    }

    /// Largest `|U U† − I|` entry over all blocks.
    pub fn max_unitarity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let prod = b * b.adjoint();
                let id = DMatrix::<Complex64>::identity(b.nrows(), b.ncols());
                crate::linalg::max_abs_diff(&prod, &id)
            })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference over common sectors.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| crate::linalg::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }
}

/// 50:50 beam splitter `B = exp(−i J π/4)`, `J = a1†a2 + a2†a1 = 2 J_x`.
pub fn beam_splitter(dim_cap: usize) -> TwoModeOperator {
    TwoModeOperator::from_fn(dim_cap, |n| jx_spectrum(n).expi(-std::f64::consts::FRAC_PI_2))
}

/// `U = exp(i N_s φ_s/2) exp(i N_d φ_d/2)`, diagonal in the Fock basis.
pub fn phase_shift(pair: PhasePair, dim_cap: usize) -> TwoModeOperator {
    TwoModeOperator::from_fn(dim_cap, |n_s| {
        let diag = DVector::from_fn(n_s + 1, |n1, _| {
            let n2 = n_s - n1;
            let angle = (n1 + n2) as f64 * pair.phi_s / 2.0 + (n1 as f64 - n2 as f64) * pair.phi_d / 2.0;
            Complex64::from_polar(1.0, angle)
        });
        DMatrix::from_diagonal(&diag)
    })
}

/// Mach-Zehnder transformation `B† U B = exp(i N_s φ_s/2) exp(i J_y φ_d)`,
/// built from the `J_y` rotation.
pub fn mach_zehnder(pair: PhasePair, dim_cap: usize) -> TwoModeOperator {
    TwoModeOperator::from_fn(dim_cap, |n_s| {
        jy_rotation(n_s, pair.phi_d) * Complex64::from_polar(1.0, n_s as f64 * pair.phi_s / 2.0)
    })
}

/// The same transformation composed literally as `B† ∘ U ∘ B`.
pub fn mach_zehnder_composed(pair: PhasePair, dim_cap: usize) -> TwoModeOperator {
    let b = beam_splitter(dim_cap);
    b.adjoint().compose(&phase_shift(pair, dim_cap).compose(&b))
}

/// Apply a sector-wise operator. The result lives on an
/// `(S + 1) × (S + 1)` grid, `S` the largest occupied total photon number,
/// so no amplitude is lost to the grid shape.
pub fn apply(op: &TwoModeOperator, state: &TwoModeState) -> Result<TwoModeState> {
    let support = state.max_total_photons();
    if support > op.dim_cap() {
        return Err(Error::TruncationTooSmall(format!(
            "state has support up to {support} total photons but the operator covers only {}",
            op.dim_cap()
        )));
    }
    let mut out = DMatrix::from_element(support + 1, support + 1, ZERO);
    for n_s in 0..=support {
        let v = state.sector(n_s);
        if v.iter().all(|c| *c == ZERO) {
            continue;
        }
        let w = op.block(n_s) * v;
        for n1 in 0..=n_s {
            out[(n1, n_s - n1)] = w[n1];
        }
    }
    Ok(TwoModeState::from_normalized(out))
}

/// `⟨ψ| O |ψ⟩` for a sector-wise operator.
pub fn expectation(op: &TwoModeOperator, state: &TwoModeState) -> Result<Complex64> {
    let support = state.max_total_photons();
    if support > op.dim_cap() {
        return Err(Error::TruncationTooSmall(format!(
            "state has support up to {support} total photons but the operator covers only {}",
            op.dim_cap()
        )));
    }
    Ok((0..=support)
        .map(|n| {
            let v = state.sector(n);
            v.dotc(&(op.block(n) * &v))
        })
        .sum())
}

pub fn k_operator(dim_cap: usize) -> TwoModeOperator {
    TwoModeOperator::from_fn(dim_cap, k_block)
}

pub fn jx_operator(dim_cap: usize) -> TwoModeOperator {
    TwoModeOperator::from_fn(dim_cap, |n| real_to_complex(&jx_block(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_coherent, tensor, ModeState, TruncationPolicy};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn basis(n1: usize, n2: usize, d: usize) -> TwoModeState {
        let mut m = DMatrix::from_element(d, d, ZERO);
        m[(n1, n2)] = c(1.0, 0.0);
        TwoModeState::from_amplitudes(m).unwrap()
    }

    #[test]
    fn phase_pair_round_trip() {
        let p = PhasePair::new(0.7, -0.3);
        let (a, b) = p.arms();
        let q = PhasePair::from_arms(a, b);
        assert_abs_diff_eq!(q.phi_s, p.phi_s, epsilon = 1e-15);
        assert_abs_diff_eq!(q.phi_d, p.phi_d, epsilon = 1e-15);
    }

    #[test]
    fn beam_splitter_on_small_states() {
        let b = beam_splitter(4);
        let out = apply(&b, &basis(0, 0, 2)).unwrap();
        assert_abs_diff_eq!((out.amps()[(0, 0)] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        let out = apply(&b, &basis(1, 0, 2)).unwrap();
        assert_abs_diff_eq!((out.amps()[(1, 0)] - c(FRAC_1_SQRT_2, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((out.amps()[(0, 1)] - c(0.0, -FRAC_1_SQRT_2)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn beam_splitter_maps_coherent_products() {
        let alpha = c(1.3, 0.4);
        let p = TruncationPolicy::for_mean(alpha.norm_sqr());
        let input = tensor(&make_coherent(alpha, p).unwrap(), &ModeState::vacuum(p.dim()));
        let b = beam_splitter(input.max_total_photons());
        let out = apply(&b, &input).unwrap();
        let s = FRAC_1_SQRT_2;
        let d = out.dims().0;
        let pd = p.with_dim(d).unwrap();
        let want = tensor(
            &make_coherent(alpha * s, pd).unwrap(),
            &make_coherent(c(0.0, -1.0) * alpha * s, pd).unwrap(),
        );
        assert!(out.fidelity(&want) >= 1.0 - 1e-9);
    }

    #[test]
    fn blocks_are_unitary() {
        assert!(beam_splitter(30).max_unitarity_error() < 1e-12);
        assert!(mach_zehnder(PhasePair::new(0.4, 1.1), 30).max_unitarity_error() < 1e-12);
        assert!(phase_shift(PhasePair::new(0.4, 1.1), 30).max_unitarity_error() < 1e-12);
    }

    #[test]
    fn phase_shift_examples() {
        let id = phase_shift(PhasePair::default(), 6);
        assert!(id.max_abs_diff(&TwoModeOperator::identity(6)) < 1e-15);
        let u = phase_shift(PhasePair::new(0.0, PI), 2);
        let out = apply(&u, &basis(1, 0, 2)).unwrap();
        assert_abs_diff_eq!((out.amps()[(1, 0)] - c(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        let u = phase_shift(PhasePair::new(0.0, 0.83), 2);
        let out = apply(&u, &basis(1, 1, 2)).unwrap();
        assert_abs_diff_eq!((out.amps()[(1, 1)] - c(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mach_zehnder_routes_agree() {
        for &(s, d) in &[(0.0, 0.0), (0.3, 1.2), (-1.0, 2.9), (2.0, -0.4)] {
            let pair = PhasePair::new(s, d);
            let direct = mach_zehnder(pair, 25);
            let composed = mach_zehnder_composed(pair, 25);
            assert!(direct.max_abs_diff(&composed) < 1e-10, "pair {pair:?}");
        }
        assert!(mach_zehnder(PhasePair::default(), 25).max_abs_diff(&TwoModeOperator::identity(25)) < 1e-12);
    }

    #[test]
    fn mach_zehnder_output_intensities() {
        let alpha = 2.0;
        let p = TruncationPolicy::for_mean(4.0);
        let input = tensor(&make_coherent(c(alpha, 0.0), p).unwrap(), &ModeState::vacuum(2));
        for &phi in &[0.0, 0.6, 1.9, 3.0] {
            let mz = mach_zehnder(PhasePair::new(0.2, phi), input.max_total_photons());
            let out = apply(&mz, &input).unwrap();
            let n1: f64 = out.marginal_first().iter().enumerate().map(|(n, p)| n as f64 * p).sum();
            let n2: f64 = out.marginal_second().iter().enumerate().map(|(n, p)| n as f64 * p).sum();
            assert_abs_diff_eq!(n1, 4.0 * (phi / 2.0).cos().powi(2), epsilon = 1e-9);
            assert_abs_diff_eq!(n2, 4.0 * (phi / 2.0).sin().powi(2), epsilon = 1e-9);
        }
    }

    #[test]
    fn apply_round_trip_and_support_check() {
        let p = TruncationPolicy::for_mean(2.0);
        let s = tensor(&make_coherent(c(1.0, 0.5), p).unwrap(), &make_coherent(c(-0.3, 0.2), p).unwrap());
        let b = beam_splitter(s.max_total_photons());
        let back = apply(&b, &apply(&b.adjoint(), &s).unwrap()).unwrap();
        assert!(back.fidelity(&s) > 1.0 - 1e-10);
        assert_abs_diff_eq!(back.norm(), 1.0, epsilon = 1e-10);
        let id = apply(&TwoModeOperator::identity(s.max_total_photons()), &s).unwrap();
        assert!(id.fidelity(&s) > 1.0 - 1e-14);
        assert!(matches!(apply(&beam_splitter(3), &s), Err(Error::TruncationTooSmall(_))));
    }

    #[test]
    fn angular_momentum_algebra() {
        for n_s in 0..12 {
            let jx = real_to_complex(&jx_block(n_s));
            let jy = jy_block(n_s);
            let jz = jz_block(n_s);
            let i = c(0.0, 1.0);
            let comm = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a * b - b * a;
            assert!(crate::linalg::max_abs_diff(&comm(&jx, &jy), &(&jz * i)) < 1e-10);
            assert!(crate::linalg::max_abs_diff(&comm(&jy, &jz), &(&jx * i)) < 1e-10);
            assert!(crate::linalg::max_abs_diff(&comm(&jz, &jx), &(&jy * i)) < 1e-10);
        }
    }

    #[test]
    fn heisenberg_picture_difference_number() {
        let b = beam_splitter(20);
        for n_s in 0..=20 {
            let bb = b.block(n_s);
            let nd = jz_block(n_s) * c(2.0, 0.0);
            let k = bb.adjoint() * nd * bb;
            assert!(crate::linalg::max_abs_diff(&k, &k_block(n_s)) < 1e-12, "sector {n_s}");
        }
    }

    #[test]
    fn jy_frame_rotation_reproduces_jy() {
        for n_s in 0..10 {
            let jx = real_to_complex(&jx_block(n_s));
            let d = DMatrix::from_fn(n_s + 1, n_s + 1, |r, cc| if r == cc { jy_frame_phase(r) } else { ZERO });
            let rotated = &d * jx * d.adjoint();
            assert!(crate::linalg::max_abs_diff(&rotated, &jy_block(n_s)) < 1e-15);
        }
    }

    #[test]
    fn number_conservation_is_structural() {
        // A single-sector input never leaks into other sectors.
        let out = apply(&mach_zehnder(PhasePair::new(0.3, 0.9), 6), &basis(2, 1, 4)).unwrap();
        for n1 in 0..out.dims().0 {
            for n2 in 0..out.dims().1 {
                if n1 + n2 != 3 {
                    assert_eq!(out.amps()[(n1, n2)], ZERO);
                }
            }
        }
    }
}
