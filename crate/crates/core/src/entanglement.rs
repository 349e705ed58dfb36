//! Mode entanglement created by the input beam splitter.
//!
//! Entropies come from the singular values of the two-mode amplitude grid
//! (the Schmidt coefficients), never from a dense density matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{displace, make_coherent, make_number, make_squeezed_vacuum, tensor, ModeState, TruncationPolicy, TwoModeState};
use crate::interferometer::{apply, beam_splitter};

/// Entropies below this count as a product state.
pub const PRODUCT_TOL: f64 = 1e-9;
/// Residual mean amplitude tolerated after removing the coherent offset.
pub const OFFSET_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementReport {
    /// Von Neumann entropy of the reduced state, in nats.
    pub entropy: f64,
    /// Squared Schmidt coefficients, descending.
    pub schmidt_spectrum: Vec<f64>,
    pub is_product: bool,
}

/// `−Σ λ ln λ` with `0 ln 0 = 0`, never negative.
pub fn entropy_of(spectrum: &[f64]) -> f64 {
    spectrum.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum::<f64>().max(0.0)
}

/// Spectrum of the reduced state of `which`. Both choices give the same
/// spectrum; the argument only selects which side of the grid is traced.
pub fn reduced_spectrum(state: &TwoModeState, which: Mode) -> EntanglementReport {
    let grid = match which {
        Mode::First => state.amps().clone(),
        Mode::Second => state.amps().transpose(),
    };
    let norm_sq = state.norm().powi(2);
    let mut spectrum: Vec<f64> = grid.singular_values().iter().map(|s| (s * s / norm_sq).min(1.0)).collect();
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let entropy = entropy_of(&spectrum);
    EntanglementReport { entropy, schmidt_spectrum: spectrum, is_product: entropy < PRODUCT_TOL }
}

/// Splits `χ = D(β)χ₀` with `β = ⟨χ|a|χ⟩`, so that `⟨χ₀|a|χ₀⟩ = 0`.
pub fn coherent_offset_decomposition(chi: &ModeState) -> Result<(Complex64, ModeState)> {
    let beta = chi.mean_amplitude();
    let chi0 = displace(chi, -beta)?;
    let residual = chi0.mean_amplitude().norm();
    if residual > OFFSET_TOL {
        return Err(Error::TruncationTooSmall(format!(
            "offset removal left mean amplitude {residual:e} at dim {}",
            chi.dim()
        )));
    }
    Ok((beta, chi0))
}

/// `B(|α⟩ ⊗ |χ⟩)`.
pub fn beam_split(alpha: Complex64, chi: &ModeState) -> Result<TwoModeState> {
    let coh = make_coherent(alpha, TruncationPolicy::for_mean(alpha.norm_sqr()))?;
    let input = tensor(&coh, chi);
    apply(&beam_splitter(input.max_total_photons()), &input)
}

/// Entropy of `B(|α⟩⊗|χ⟩)` and its connected cross moment
/// `⟨a₁†a₂⟩ − ⟨a₁†⟩⟨a₂⟩`.
pub fn product_criterion(chi: &ModeState, alpha: Complex64) -> Result<(f64, Complex64)> {
    let out = beam_split(alpha, chi)?;
    let entropy = reduced_spectrum(&out, Mode::First).entropy;
    let (m1, m2) = out.mean_amplitudes();
    Ok((entropy, out.cross_moment() - m1.conj() * m2))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyComparison {
    pub nbar: f64,
    pub entropy_squeezed: f64,
    pub entropy_number: f64,
}

impl EntropyComparison {
    pub fn number_exceeds_squeezed(&self) -> bool {
        self.entropy_number > self.entropy_squeezed
    }
}

/// Entropies after the beam splitter for `|α⟩` with `|N̄⟩` or with the squeezed
/// vacuum of the same mean photon number. `dim` overrides the secondary
/// truncation.
pub fn entropy_comparison(alpha: Complex64, nbar: f64, dim: Option<usize>) -> Result<EntropyComparison> {
    if !(nbar >= 0.0 && nbar.fract() == 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("number-state arm needs a nonnegative integer nbar, got {nbar}")));
    }
    let r = nbar.sqrt().asinh();
    let sq_policy = match dim {
        Some(d) => TruncationPolicy::new(d, 1e-14)?,
        None => TruncationPolicy::for_squeezed(r, 1e-14),
    };
    let n = nbar as usize;
    let num_policy = TruncationPolicy::new(dim.unwrap_or(n + 1).max(n + 1).max(2), 1e-14)?;
    let sq = make_squeezed_vacuum(r, sq_policy)?;
    let num = make_number(n, num_policy)?;
    Ok(EntropyComparison {
        nbar,
        entropy_squeezed: product_criterion(&sq, alpha)?.0,
        entropy_number: product_criterion(&num, alpha)?.0,
    })
}
