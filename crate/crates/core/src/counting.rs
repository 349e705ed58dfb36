//! Photon-count statistics at the Mach-Zehnder output and their classical
//! Fisher information.
//!
//! In the sector with `n_s` photons, `j = n_s/2` and `m = n_d/2`, and the
//! output amplitude of `(n_s, n_d)` is `⟨j,m|e^{iφ_d J_y}|ψ_in⟩` up to a
//! phase that depends only on `φ_s`. Each sector is diagonalized once through
//! `J_x` (real tridiagonal, `J_y = D J_x D†`), after which amplitudes and
//! their `φ_d` derivatives cost `O(n_s)` per outcome.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{TwoModeState, DEFAULT_TAIL_TOL};
use crate::interferometer::{jx_spectrum, jy_frame_phase};
use crate::linalg::I;

/// Outcomes with smaller probability use the `P → 0` limit of `(∂P)²/P`.
pub const P_FLOOR: f64 = 1e-14;
/// Sectors carrying less input weight than this are skipped and reported as
/// tail mass.
pub const SECTOR_SKIP: f64 = 1e-28;

/// Real rotation matrix `d^j(θ) = e^{−iθJ_y}` on one sector, rows and
/// columns ordered `m = −j..j`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerBlock {
    pub two_j: usize,
    pub theta: f64,
    pub mat: DMatrix<f64>,
}

impl WignerBlock {
    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// `d^j_{m,m'}` addressed by `2m` and `2m'`.
    pub fn element(&self, two_m: i64, two_mp: i64) -> Option<f64> {
        let tj = self.two_j as i64;
        let idx = |t: i64| {
            if t.abs() <= tj && (t + tj) % 2 == 0 {
                Some(((t + tj) / 2) as usize)
            } else {
                None
            }
        };
        Some(self.mat[(idx(two_m)?, idx(two_mp)?)])
    }

    pub fn orthogonality_error(&self) -> f64 {
        let n = self.mat.nrows();
        (self.mat.transpose() * &self.mat - DMatrix::<f64>::identity(n, n)).amax()
    }
}

/// Largest imaginary part tolerated before it is discarded.
const IMAG_RESIDUE: f64 = 1e-12;

fn real_part_checked(m: DMatrix<Complex64>) -> DMatrix<f64> {
    let residue = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    assert!(residue < IMAG_RESIDUE, "rotation matrix has imaginary residue {residue:e}");
    m.map(|z| z.re)
}

fn frame(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    for r in 0..n {
        for c in 0..n {
            m[(r, c)] *= jy_frame_phase(r) * jy_frame_phase(c).conj();
        }
    }
}

/// `d^j(θ)` for `j = two_j/2`.
pub fn wigner_d(two_j: usize, theta: f64) -> WignerBlock {
    let spectrum = jx_spectrum(two_j);
    let mut m = spectrum.expi(-theta);
    frame(&mut m);
    WignerBlock { two_j, theta, mat: real_part_checked(m) }
}

/// `∂d^j(θ)/∂θ = −iJ_y d^j(θ)`, computed from the same spectrum.
pub fn wigner_d_derivative(two_j: usize, theta: f64) -> DMatrix<f64> {
    let spectrum = jx_spectrum(two_j);
    let mut m = -spectrum.expi_derivative(-theta);
    frame(&mut m);
    real_part_checked(m)
}

/// Joint distribution of `(n_s, n_d)` at one `φ_d`. Stored per sector with
/// `n_d = 2k − n_s`, `k = 0..=n_s`, so only parity-allowed pairs exist.
#[derive(Clone, Debug, PartialEq)]
pub struct CountDistribution {
    pub phi_d: f64,
    sectors: Vec<Vec<f64>>,
    /// Input weight in skipped sectors.
    pub tail: f64,
}

/// One row of a [`CountDistribution`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountEntry {
    pub n_s: usize,
    pub n_d: i64,
    pub probability: f64,
}

fn nd_index(n_s: usize, n_d: i64) -> Option<usize> {
    let s = n_s as i64;
    if n_d.abs() > s || (n_d + s) % 2 != 0 {
        None
    } else {
        Some(((n_d + s) / 2) as usize)
    }
}

impl CountDistribution {
    pub fn max_total(&self) -> usize {
        self.sectors.len().saturating_sub(1)
    }

    pub fn get(&self, n_s: usize, n_d: i64) -> f64 {
        match (self.sectors.get(n_s), nd_index(n_s, n_d)) {
            (Some(row), Some(k)) if k < row.len() => row[k],
            _ => 0.0,
        }
    }

    /// Entries in `(n_s, n_d)` lexicographic order, skipped sectors omitted.
    pub fn entries(&self) -> impl Iterator<Item = CountEntry> + '_ {
        self.sectors.iter().enumerate().flat_map(|(n_s, row)| {
            row.iter().enumerate().map(move |(k, &p)| CountEntry {
                n_s,
                n_d: 2 * k as i64 - n_s as i64,
                probability: p,
            })
        })
    }

    pub fn total(&self) -> f64 {
        self.sectors.iter().flatten().sum()
    }

    /// `P(n₁)`, `n₁ = (n_s + n_d)/2`.
    pub fn marginal_n1(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.sectors.len()];
        for (_, row) in self.sectors.iter().enumerate() {
            for (k, p) in row.iter().enumerate() {
                out[k] += p;
            }
        }
        out
    }

    /// `P(n₂)`, `n₂ = (n_s − n_d)/2`.
    pub fn marginal_n2(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.sectors.len()];
        for (n_s, row) in self.sectors.iter().enumerate() {
            for (k, p) in row.iter().enumerate() {
                out[n_s - k] += p;
            }
        }
        out
    }

    /// `P(n_d)` as `(n_d, probability)` pairs in increasing `n_d`.
    pub fn marginal_nd(&self) -> Vec<(i64, f64)> {
        let s = self.max_total() as i64;
        let mut out: Vec<(i64, f64)> = (-s..=s).map(|d| (d, 0.0)).collect();
        for e in self.entries() {
            out[(e.n_d + s) as usize].1 += e.probability;
        }
        out
    }

    /// CSV with header `n_s,n_d,probability`, numbers to 17 significant
    /// digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_s,n_d,probability\n");
        for e in self.entries() {
            s.push_str(&format!("{},{},{:.16e}\n", e.n_s, e.n_d, e.probability));
        }
        s
    }
}

/// Spectral data of one sector: `Â(φ) = V (e^{iφλ} ∘ W)`.
#[derive(Clone, Debug)]
struct Sector {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    w: Vec<Complex64>,
}

impl Sector {
    fn dim(&self) -> usize {
        self.values.len()
    }

    fn rotated(&self, phi: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let e: Vec<Complex64> =
            self.values.iter().zip(&self.w).map(|(&l, &w)| Complex64::from_polar(1.0, phi * l) * w).collect();
        let de: Vec<Complex64> = self.values.iter().zip(&e).map(|(&l, &z)| I * l * z).collect();
        (e, de)
    }

    /// `(Â_k, Â′_k)` for one outcome.
    fn amplitude(&self, k: usize, phi: f64) -> (Complex64, Complex64) {
        let (e, de) = self.rotated(phi);
        let row = self.vectors.row(k);
        let a = row.iter().zip(&e).map(|(&v, &z)| z * v).sum();
        let da = row.iter().zip(&de).map(|(&v, &z)| z * v).sum();
        (a, da)
    }

    fn phases(&self, phi: f64) -> Vec<Complex64> {
        self.values.iter().zip(&self.w).map(|(&l, &w)| Complex64::from_polar(1.0, phi * l) * w).collect()
    }

    fn amplitudes(&self, phi: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let (e, de) = self.rotated(phi);
        let n = self.dim();
        let v = &self.vectors;
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        let mut da = a.clone();
        for c in 0..n {
            for r in 0..n {
                a[r] += e[c] * v[(r, c)];
                da[r] += de[c] * v[(r, c)];
            }
        }
        (a, da)
    }
}

/// Per-sector spectral model of the count statistics of one input state.
#[derive(Clone, Debug)]
pub struct CountModel {
    sectors: Vec<Option<Sector>>,
    tail: f64,
}

impl CountModel {
    pub fn new(input: &TwoModeState) -> Self {
        let cap = input.max_total_photons();
        let mut tail = 0.0;
        let sectors = (0..=cap)
            .map(|n_s| {
                let v = input.sector(n_s);
                let weight = v.norm_squared();
                if weight < SECTOR_SKIP {
                    tail += weight;
                    return None;
                }
                let spec = jx_spectrum(n_s);
                // W = Vᵀ D† v
                let dv: Vec<Complex64> = v.iter().enumerate().map(|(k, z)| jy_frame_phase(k).conj() * z).collect();
                let w = (0..=n_s)
                    .map(|c| (0..=n_s).map(|r| dv[r] * spec.vectors[(r, c)]).sum())
                    .collect();
                Some(Sector { values: spec.values.iter().copied().collect(), vectors: spec.vectors, w })
            })
            .collect();
        Self { sectors, tail }
    }

    pub fn max_total(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Whether sector `n_s` carries non-negligible weight.
    pub fn has_sector(&self, n_s: usize) -> bool {
        matches!(self.sectors.get(n_s), Some(Some(_)))
    }

    /// Amplitude of `(n_s, n_d)` up to a phase independent of `φ_d`, and
    /// its `φ_d` derivative.
    pub fn amplitude(&self, n_s: usize, n_d: i64, phi_d: f64) -> (Complex64, Complex64) {
        match (self.sectors.get(n_s), nd_index(n_s, n_d)) {
            (Some(Some(sec)), Some(k)) => sec.amplitude(k, phi_d),
            _ => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        }
    }

    pub fn probability(&self, n_s: usize, n_d: i64, phi_d: f64) -> f64 {
        self.amplitude(n_s, n_d, phi_d).0.norm_sqr()
    }

    /// Probabilities of `outcomes` at `phi_d`, rotating each sector once.
    /// Outcomes grouped by `n_s` are cheapest.
    pub fn probabilities(&self, outcomes: &[(usize, i64)], phi_d: f64) -> Vec<f64> {
        let mut cached: Option<(usize, Vec<Complex64>)> = None;
        outcomes
            .iter()
            .map(|&(n_s, n_d)| {
                let (Some(Some(sec)), Some(k)) = (self.sectors.get(n_s), nd_index(n_s, n_d)) else {
                    return 0.0;
                };
                if cached.as_ref().map_or(true, |(s, _)| *s != n_s) {
                    cached = Some((n_s, sec.phases(phi_d)));
                }
                let e = &cached.as_ref().unwrap().1;
                let row = sec.vectors.row(k);
                row.iter().zip(e).map(|(&v, &z)| z * v).sum::<Complex64>().norm_sqr()
            })
            .collect()
    }

    /// `(P, ∂P/∂φ_d)` for every `n_d` of one sector, in `n_d = 2k − n_s`
    /// order; empty for skipped sectors.
    pub fn sector_probabilities(&self, n_s: usize, phi_d: f64) -> Vec<(f64, f64)> {
        match self.sectors.get(n_s) {
            Some(Some(sec)) => {
                let (a, da) = sec.amplitudes(phi_d);
                a.iter().zip(&da).map(|(a, d)| (a.norm_sqr(), 2.0 * (a.conj() * d).re)).collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn distribution(&self, phi_d: f64) -> CountDistribution {
        let sectors = (0..self.sectors.len())
            .map(|n_s| match &self.sectors[n_s] {
                Some(sec) => sec.amplitudes(phi_d).0.iter().map(|a| a.norm_sqr()).collect(),
                None => Vec::new(),
            })
            .collect();
        CountDistribution { phi_d, sectors, tail: self.tail }
    }

    /// Classical Fisher information of the joint `(n_s, n_d)` counts.
    pub fn fisher(&self, phi_d: f64) -> f64 {
        let mut f = 0.0;
        for sec in self.sectors.iter().flatten() {
            let (a, da) = sec.amplitudes(phi_d);
            for (a, d) in a.iter().zip(&da) {
                let p = a.norm_sqr();
                f += if p >= P_FLOOR {
                    let re = (a.conj() * d).re;
                    4.0 * re * re / p
                } else {
                    4.0 * d.norm_sqr()
                };
            }
        }
        f
    }

    /// Classical Fisher information of the `n_d` marginal alone.
    pub fn fisher_nd_only(&self, phi_d: f64) -> f64 {
        let s = self.max_total() as i64;
        let len = (2 * s + 1) as usize;
        let (mut p, mut dp, mut lim) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
        for (n_s, sec) in self.sectors.iter().enumerate() {
            let Some(sec) = sec else { continue };
            let (a, da) = sec.amplitudes(phi_d);
            for k in 0..=n_s {
                let idx = (2 * k as i64 - n_s as i64 + s) as usize;
                p[idx] += a[k].norm_sqr();
                dp[idx] += 2.0 * (a[k].conj() * da[k]).re;
                lim[idx] += 4.0 * da[k].norm_sqr();
            }
        }
        (0..len).map(|i| if p[i] >= P_FLOOR { dp[i] * dp[i] / p[i] } else { lim[i] }).sum()
    }
}

/// Largest probability allowed in the last Fock level of either input mode.
fn check_boundary(input: &TwoModeState) -> Result<()> {
    let m1 = input.marginal_first();
    let m2 = input.marginal_second();
    let edge = m1.last().copied().unwrap_or(0.0).max(m2.last().copied().unwrap_or(0.0));
    if edge > DEFAULT_TAIL_TOL {
        return Err(Error::TruncationTooSmall(format!(
            "input has probability {edge:e} in its top Fock level"
        )));
    }
    Ok(())
}

/// Joint count distribution of `input` at `phi_d`.
pub fn count_distribution(input: &TwoModeState, phi_d: f64) -> Result<CountDistribution> {
    check_boundary(input)?;
    Ok(CountModel::new(input).distribution(phi_d))
}

pub fn classical_fisher(input: &TwoModeState, phi_d: f64) -> f64 {
    CountModel::new(input).fisher(phi_d)
}

pub fn classical_fisher_nd_only(input: &TwoModeState, phi_d: f64) -> f64 {
    CountModel::new(input).fisher_nd_only(phi_d)
}
