//! WebAssembly entry points for `www/index.html`.
//!
//! Each export returns a JSON document. The `*_json` functions do the work
//! and are plain Rust so they can be tested natively.

use std::f64::consts::PI;

use fockmetro_core::counting::{count_distribution, CountModel};
use fockmetro_core::fisher::{fmax_bound, qfi_from_covariance};
use fockmetro_core::fock::{make_coherent, make_squeezed_vacuum, tensor, TruncationPolicy, TwoModeState};
use fockmetro_core::Complex64;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest coherent amplitude and squeeze parameter the page accepts; keeps
/// the Fock bases small enough for interactive use.
pub const MAX_ALPHA: f64 = 6.0;
pub const MAX_R: f64 = 1.2;
pub const MAX_POINTS: usize = 400;

fn input_state(alpha: f64, r: f64) -> Result<TwoModeState, String> {
    if !(0.0..=MAX_ALPHA).contains(&alpha) || !(0.0..=MAX_R).contains(&r) {
        return Err(format!("need 0 <= alpha <= {MAX_ALPHA} and 0 <= r <= {MAX_R}"));
    }
    let coh = make_coherent(Complex64::new(alpha, 0.0), TruncationPolicy::for_mean(alpha * alpha))
        .map_err(|e| e.to_string())?;
    let sq = make_squeezed_vacuum(r, TruncationPolicy::for_squeezed(r, 1e-12)).map_err(|e| e.to_string())?;
    Ok(tensor(&coh, &sq))
}

fn check_points(points: usize) -> Result<(), String> {
    if (2..=MAX_POINTS).contains(&points) {
        Ok(())
    } else {
        Err(format!("points must be in 2..={MAX_POINTS}"))
    }
}

/// Best phase sensitivity `F_max` against the secondary-port photon budget,
/// with the shot-noise and Heisenberg references.
pub fn fisher_curve_json(alpha_sq: f64, nbar_max: f64, points: usize) -> Result<String, String> {
    check_points(points)?;
    if !(alpha_sq >= 0.0 && nbar_max > 0.0 && alpha_sq.is_finite() && nbar_max.is_finite()) {
        return Err("need alpha_sq >= 0 and nbar_max > 0".into());
    }
    let mut nbar = Vec::with_capacity(points);
    let (mut f_max, mut shot, mut heisenberg) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..points {
        let n = nbar_max * i as f64 / (points - 1) as f64;
        let b = fmax_bound(alpha_sq, n).map_err(|e| e.to_string())?;
        nbar.push(n);
        f_max.push(b.f_max);
        shot.push(b.n_tot);
        heisenberg.push(b.n_tot * b.n_tot);
    }
    Ok(json!({"nbar": nbar, "f_max": f_max, "shot_noise": shot, "heisenberg": heisenberg}).to_string())
}

/// Joint output distribution `P(n₁, n₂)` at one phase difference.
pub fn count_heatmap_json(alpha: f64, r: f64, phi: f64) -> Result<String, String> {
    let input = input_state(alpha, r)?;
    let dist = count_distribution(&input, phi).map_err(|e| e.to_string())?;
    let cells: Vec<[f64; 3]> = dist
        .entries()
        .filter(|e| e.probability > 1e-12)
        .map(|e| {
            let n1 = (e.n_s as i64 + e.n_d) / 2;
            [n1 as f64, (e.n_s as i64 - n1) as f64, e.probability]
        })
        .collect();
    let max_p = cells.iter().map(|c| c[2]).fold(0.0, f64::max);
    Ok(json!({"phi": phi, "cells": cells, "max_probability": max_p, "tail": dist.tail}).to_string())
}

/// Counting Fisher information, its `n_d`-only part and the quantum value
/// over `φ ∈ (0, π)`.
pub fn fisher_vs_phase_json(alpha: f64, r: f64, points: usize) -> Result<String, String> {
    check_points(points)?;
    let input = input_state(alpha, r)?;
    let model = CountModel::new(&input);
    let qfi = qfi_from_covariance(&input).f_dd;
    let phi: Vec<f64> = (0..points).map(|i| PI * (i as f64 + 0.5) / points as f64).collect();
    let cfi: Vec<f64> = phi.iter().map(|&p| model.fisher(p)).collect();
    let cfi_nd: Vec<f64> = phi.iter().map(|&p| model.fisher_nd_only(p)).collect();
    Ok(json!({"phi": phi, "cfi": cfi, "cfi_nd_only": cfi_nd, "qfi": qfi}).to_string())
}

#[wasm_bindgen]
pub fn fisher_curve(alpha_sq: f64, nbar_max: f64, points: usize) -> Result<String, JsError> {
    fisher_curve_json(alpha_sq, nbar_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn count_heatmap(alpha: f64, r: f64, phi: f64) -> Result<String, JsError> {
    count_heatmap_json(alpha, r, phi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fisher_vs_phase(alpha: f64, r: f64, points: usize) -> Result<String, JsError> {
    fisher_vs_phase_json(alpha, r, points).map_err(|e| JsError::new(&e))
}
