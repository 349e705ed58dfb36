//! Monte Carlo phase estimation from simulated photon counts.
//!
//! Trial `t` of a run draws its counts from `ChaCha8Rng::seed_from_u64(seed)`
//! on stream `t`, so every trial is reproducible on its own and results do
//! not depend on evaluation order.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::counting::{CountDistribution, CountModel};
use crate::error::{Error, Result};
use crate::fisher::qfi_product_analytic;
use crate::fock::{make_coherent, make_squeezed_vacuum, tensor, ModeState, TruncationPolicy, TwoModeState};

/// Default number of likelihood grid points over the window.
pub const DEFAULT_GRID: usize = 720;
/// Golden-section refinement stops below this bracket width (radians).
pub const REFINE_TOL: f64 = 1e-8;
/// Number of batches used for the Monte Carlo error bar.
pub const MC_BATCHES: usize = 10;
/// Tail tolerance of the automatically truncated squeezed input.
pub const SQUEEZED_TAIL: f64 = 1e-14;
/// Smallest `|sin φ_true|` accepted by the linear fringe estimator.
pub const FRINGE_MIN_SLOPE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimator {
    LinearFringe,
    MaximumLikelihood,
    /// Maximum likelihood using only the differenced count `n_d`.
    MaximumLikelihoodNd,
    Bayesian,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::LinearFringe => "linear_fringe",
            Estimator::MaximumLikelihood => "maximum_likelihood",
            Estimator::MaximumLikelihoodNd => "maximum_likelihood_nd",
            Estimator::Bayesian => "bayesian",
        }
    }
}

/// A count outcome `(n_s, n_d)`.
pub type Outcome = (usize, i64);

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub alpha: Complex64,
    pub r: f64,
    pub phi_true: f64,
    pub shots_per_trial: usize,
    pub trials: usize,
    pub seed: u64,
    /// Per-mode truncation; `None` picks one from the state parameters.
    pub dim: Option<usize>,
    pub estimator: Estimator,
    pub grid_points: usize,
}

impl ExperimentConfig {
    pub fn new(alpha: f64, r: f64, phi_true: f64, shots_per_trial: usize, trials: usize, estimator: Estimator) -> Self {
        Self {
            alpha: Complex64::new(alpha, 0.0),
            r,
            phi_true,
            shots_per_trial,
            trials,
            seed: 0,
            dim: None,
            estimator,
            grid_points: DEFAULT_GRID,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.shots_per_trial == 0 || self.trials == 0 {
            return bad("shots_per_trial and trials must be positive".into());
        }
        if !(self.phi_true > 0.0 && self.phi_true < PI) {
            return bad(format!("phi_true = {} is outside the identifiable window (0, pi)", self.phi_true));
        }
        if !(self.r.is_finite() && self.r >= 0.0) || !self.alpha.norm().is_finite() {
            return bad("alpha must be finite and r finite and >= 0".into());
        }
        if self.grid_points < 3 {
            return bad(format!("grid_points must be >= 3 (got {})", self.grid_points));
        }
        if self.estimator == Estimator::LinearFringe && self.phi_true.sin().abs() < FRINGE_MIN_SLOPE {
            return bad(format!("phi_true = {} is too close to a fringe extremum", self.phi_true));
        }
        Ok(())
    }

    /// `|α⟩ ⊗ S(r)|0⟩` on the configured truncation.
    pub fn input_state(&self) -> Result<(ModeState, ModeState, TwoModeState)> {
        let coh_policy = match self.dim {
            Some(d) => TruncationPolicy::new(d, crate::fock::DEFAULT_TAIL_TOL)?,
            None => TruncationPolicy::for_mean(self.alpha.norm_sqr()),
        };
        let sq_policy = match self.dim {
            Some(d) => TruncationPolicy::new(d, crate::fock::DEFAULT_TAIL_TOL)?,
            None => TruncationPolicy::for_squeezed(self.r, SQUEEZED_TAIL),
        };
        let coh = make_coherent(self.alpha, coh_policy)?;
        let sq = make_squeezed_vacuum(self.r, sq_policy)?;
        let input = tensor(&coh, &sq);
        Ok((coh, sq, input))
    }
}

/// Inverse-CDF sampler over the outcomes of a distribution, ordered by
/// `(n_s, n_d)`.
#[derive(Clone, Debug)]
pub struct CountSampler {
    outcomes: Vec<Outcome>,
    cdf: Vec<f64>,
}

impl CountSampler {
    pub fn new(dist: &CountDistribution) -> Self {
        let mut outcomes = Vec::new();
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for e in dist.entries() {
            if e.probability > 0.0 {
                acc += e.probability;
                outcomes.push((e.n_s, e.n_d));
                cdf.push(acc);
            }
        }
        Self { outcomes, cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Outcome {
        let total = *self.cdf.last().expect("distribution has no mass");
        let u = rng.gen::<f64>() * total;
        let i = self.cdf.partition_point(|&c| c <= u).min(self.outcomes.len() - 1);
        self.outcomes[i]
    }
}

pub fn sample_counts<R: Rng + ?Sized>(dist: &CountDistribution, n: usize, rng: &mut R) -> Vec<Outcome> {
    let sampler = CountSampler::new(dist);
    (0..n).map(|_| sampler.sample(rng)).collect()
}

fn histogram(samples: &[Outcome]) -> BTreeMap<Outcome, u32> {
    let mut h = BTreeMap::new();
    for &o in samples {
        *h.entry(o).or_insert(0) += 1;
    }
    h
}

fn safe_ln(p: f64) -> f64 {
    p.max(1e-300).ln()
}

/// Likelihood tables of one input state over a phase window.
#[derive(Clone, Debug)]
pub struct PhaseModel {
    model: CountModel,
    window: (f64, f64),
    grid: Vec<f64>,
    /// First outcome index of each sector (`None` for skipped sectors).
    offsets: Vec<Option<usize>>,
    /// `ln P(n_s, n_d | φ_g)`, outcome-major.
    ln_p: Vec<Vec<f64>>,
    /// `ln P(n_d | φ_g)` indexed by `n_d + S`.
    ln_p_nd: Vec<Vec<f64>>,
    /// `⟨n_d⟩(φ) = A cos φ + B sin φ`.
    fringe: (f64, f64),
    fringe_residual: f64,
}

impl PhaseModel {
    pub fn new(input: &TwoModeState, grid_points: usize) -> Result<Self> {
        Self::with_window(input, grid_points, (0.0, PI))
    }

    pub fn with_window(input: &TwoModeState, grid_points: usize, window: (f64, f64)) -> Result<Self> {
        if grid_points < 3 || !(window.0 < window.1) {
            return Err(Error::InvalidParameter("phase grid needs >= 3 points and a nonempty window".into()));
        }
        let model = CountModel::new(input);
        let s = model.max_total();
        let grid: Vec<f64> = (0..grid_points)
            .map(|g| window.0 + (window.1 - window.0) * g as f64 / (grid_points - 1) as f64)
            .collect();
        let mut offsets = vec![None; s + 1];
        let mut count = 0;
        for (n_s, off) in offsets.iter_mut().enumerate() {
            if model.has_sector(n_s) {
                *off = Some(count);
                count += n_s + 1;
            }
        }
        let mut ln_p = vec![vec![0.0; grid_points]; count];
        let mut p_nd = vec![vec![0.0; grid_points]; 2 * s + 1];
        let mut mean_nd = vec![0.0; grid_points];
        for (g, &phi) in grid.iter().enumerate() {
            for n_s in 0..=s {
                let Some(off) = offsets[n_s] else { continue };
                for (k, (p, _)) in model.sector_probabilities(n_s, phi).into_iter().enumerate() {
                    let n_d = 2 * k as i64 - n_s as i64;
                    ln_p[off + k][g] = safe_ln(p);
                    p_nd[(n_d + s as i64) as usize][g] += p;
                    mean_nd[g] += n_d as f64 * p;
                }
            }
        }
        let ln_p_nd = p_nd.into_iter().map(|row| row.into_iter().map(safe_ln).collect()).collect();
        let (fringe, fringe_residual) = fit_fringe(&grid, &mean_nd);
        Ok(Self { model, window, grid, offsets, ln_p, ln_p_nd, fringe, fringe_residual })
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn count_model(&self) -> &CountModel {
        &self.model
    }

    /// Largest deviation of the exact `⟨n_d⟩` grid values from the fitted
    /// sinusoid.
    pub fn fringe_residual(&self) -> f64 {
        self.fringe_residual
    }

    pub fn mean_nd(&self, phi: f64) -> f64 {
        self.fringe.0 * phi.cos() + self.fringe.1 * phi.sin()
    }

    fn outcome_index(&self, (n_s, n_d): Outcome) -> Option<usize> {
        let off = (*self.offsets.get(n_s)?)?;
        let s = n_s as i64;
        if n_d.abs() > s || (n_d + s) % 2 != 0 {
            return None;
        }
        Some(off + ((n_d + s) / 2) as usize)
    }

    fn grid_log_likelihood(&self, hist: &BTreeMap<Outcome, u32>) -> Vec<f64> {
        let mut ll = vec![0.0; self.grid.len()];
        for (&o, &c) in hist {
            match self.outcome_index(o) {
                Some(i) => {
                    for (acc, lp) in ll.iter_mut().zip(&self.ln_p[i]) {
                        *acc += c as f64 * lp;
                    }
                }
                None => ll.iter_mut().for_each(|acc| *acc += c as f64 * safe_ln(0.0)),
            }
        }
        ll
    }

    fn grid_log_likelihood_nd(&self, hist: &BTreeMap<i64, u32>) -> Vec<f64> {
        let s = self.model.max_total() as i64;
        let mut ll = vec![0.0; self.grid.len()];
        for (&d, &c) in hist {
            let row = usize::try_from(d + s).ok().and_then(|i| self.ln_p_nd.get(i));
            for (g, acc) in ll.iter_mut().enumerate() {
                *acc += c as f64 * row.map_or(safe_ln(0.0), |r| r[g]);
            }
        }
        ll
    }

    fn log_likelihood(&self, hist: &BTreeMap<Outcome, u32>, phi: f64) -> f64 {
        let outcomes: Vec<Outcome> = hist.keys().copied().collect();
        let p = self.model.probabilities(&outcomes, phi);
        hist.values().zip(p).map(|(&c, p)| c as f64 * safe_ln(p)).sum()
    }

    /// All outcomes `(n_s, d)` contributing to the given `n_d` values,
    /// grouped by sector.
    fn nd_outcomes(&self, hist: &BTreeMap<i64, u32>) -> Vec<Outcome> {
        let mut out = Vec::new();
        for n_s in 0..=self.model.max_total() {
            if self.model.has_sector(n_s) {
                out.extend(hist.keys().filter(|d| d.unsigned_abs() as usize <= n_s).map(|&d| (n_s, d)));
            }
        }
        out
    }

    fn log_likelihood_nd(&self, hist: &BTreeMap<i64, u32>, outcomes: &[Outcome], phi: f64) -> f64 {
        let mut marg: BTreeMap<i64, f64> = hist.keys().map(|&d| (d, 0.0)).collect();
        for (&(_, d), p) in outcomes.iter().zip(self.model.probabilities(outcomes, phi)) {
            *marg.get_mut(&d).unwrap() += p;
        }
        hist.iter().map(|(d, &c)| c as f64 * safe_ln(marg[d])).sum()
    }
}

/// Least-squares `A cos φ + B sin φ` through the grid means; returns the
/// coefficients and the largest residual.
fn fit_fringe(grid: &[f64], mean: &[f64]) -> ((f64, f64), f64) {
    let (mut cc, mut cs, mut ss, mut yc, mut ys) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&phi, &y) in grid.iter().zip(mean) {
        let (c, s) = (phi.cos(), phi.sin());
        cc += c * c;
        cs += c * s;
        ss += s * s;
        yc += y * c;
        ys += y * s;
    }
    let det = cc * ss - cs * cs;
    let a = (yc * ss - ys * cs) / det;
    let b = (ys * cc - yc * cs) / det;
    let resid = grid
        .iter()
        .zip(mean)
        .map(|(&phi, &y)| (y - a * phi.cos() - b * phi.sin()).abs())
        .fold(0.0, f64::max);
    ((a, b), resid)
}

fn grid_argmax(ll: &[f64]) -> Result<usize> {
    let (mut best, mut lo, mut hi) = (0, f64::INFINITY, f64::NEG_INFINITY);
    for (g, &v) in ll.iter().enumerate() {
        lo = lo.min(v);
        if v > hi {
            hi = v;
            best = g;
        }
    }
    if hi - lo < 1e-12 {
        return Err(Error::FlatLikelihood { range: hi - lo });
    }
    Ok(best)
}

/// Golden-section maximization of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn refine(model: &PhaseModel, best: usize, f: impl Fn(f64) -> f64) -> f64 {
    let g = model.grid();
    let lo = g[best.saturating_sub(1)];
    let hi = g[(best + 1).min(g.len() - 1)];
    let x = golden_max(&f, lo, hi, REFINE_TOL);
    // The bracket ends are grid points whose values are already known to be
    // no larger than the centre; keep the better of refined and grid value.
    if f(x) >= f(g[best]) {
        x
    } else {
        g[best]
    }
}

/// Maximum-likelihood estimate of `φ_d` from joint counts.
pub fn ml_estimate(samples: &[Outcome], model: &PhaseModel) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("ml_estimate needs at least one sample".into()));
    }
    let hist = histogram(samples);
    let best = grid_argmax(&model.grid_log_likelihood(&hist))?;
    Ok(refine(model, best, |phi| model.log_likelihood(&hist, phi)))
}

/// Maximum-likelihood estimate from the `n_d` values alone.
pub fn ml_estimate_nd_only(samples: &[Outcome], model: &PhaseModel) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("ml_estimate_nd_only needs at least one sample".into()));
    }
    let mut hist = BTreeMap::new();
    for &(_, d) in samples {
        *hist.entry(d).or_insert(0u32) += 1;
    }
    let best = grid_argmax(&model.grid_log_likelihood_nd(&hist))?;
    let outcomes = model.nd_outcomes(&hist);
    Ok(refine(model, best, |phi| model.log_likelihood_nd(&hist, &outcomes, phi)))
}

/// Posterior mean and variance under a flat prior on the window.
pub fn bayes_estimate(samples: &[Outcome], model: &PhaseModel) -> Result<(f64, f64)> {
    let hist = histogram(samples);
    let ll = model.grid_log_likelihood(&hist);
    let top = ll.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::DegeneratePosterior);
    }
    let g = model.grid();
    let h = (g[g.len() - 1] - g[0]) / (g.len() - 1) as f64;
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, (&phi, &l)) in g.iter().zip(&ll).enumerate() {
        let w = if i == 0 || i == g.len() - 1 { 0.5 * h } else { h };
        let p = w * (l - top).exp();
        z += p;
        m1 += p * phi;
        m2 += p * phi * phi;
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::DegeneratePosterior);
    }
    let mean = m1 / z;
    Ok((mean, (m2 / z - mean * mean).max(0.0)))
}

/// Inverts the calibrated fringe `⟨n_d⟩(φ)` at the sample mean of `n_d`.
pub fn linear_fringe_estimate(samples: &[Outcome], model: &PhaseModel) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("linear_fringe_estimate needs at least one sample".into()));
    }
    let mean = samples.iter().map(|&(_, d)| d as f64).sum::<f64>() / samples.len() as f64;
    invert_fringe(model, mean)
}

fn invert_fringe(model: &PhaseModel, mean: f64) -> Result<f64> {
    let (lo, hi) = model.window();
    let (f_lo, f_hi) = (model.mean_nd(lo), model.mean_nd(hi));
    let (min, max) = (f_lo.min(f_hi), f_lo.max(f_hi));
    if !(mean >= min && mean <= max) || max - min < 1e-12 {
        return Err(Error::OutOfFringeRange { mean, lo: min, hi: max });
    }
    // A cos φ + B sin φ is monotone on the window when B·sin φ does not
    // dominate; bisection on the endpoint ordering.
    let increasing = f_hi > f_lo;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a < 1e-15 {
            break;
        }
        if (model.mean_nd(m) < mean) == increasing {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Result of [`run_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationRun {
    pub estimates: Vec<f64>,
    pub sample_variance: f64,
    /// `1/(ν F)` with `F` the quantum Fisher information `F_dd`.
    pub crb: f64,
    pub variance_ratio: f64,
    pub bias: f64,
    /// Standard error of `variance_ratio` from [`MC_BATCHES`] batches.
    pub mc_error: f64,
    pub fisher: f64,
    /// Classical Fisher information of the joint counts at `φ_true`.
    pub classical_fisher: f64,
    /// Mean posterior variance (Bayesian runs only).
    pub mean_posterior_variance: Option<f64>,
    /// Trials whose fringe inversion saturated at a window edge.
    pub out_of_range: usize,
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// RNG of trial `trial` for a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EstimationRun> {
    cfg.validate()?;
    let (_, sq, input) = cfg.input_state()?;
    let model = PhaseModel::new(&input, cfg.grid_points)?;
    run_with_model(cfg, &sq, &model)
}

/// Runs the trials of `cfg` against a prebuilt model of the same input.
pub fn run_with_model(cfg: &ExperimentConfig, secondary: &ModeState, model: &PhaseModel) -> Result<EstimationRun> {
    cfg.validate()?;
    let dist = model.count_model().distribution(cfg.phi_true);
    let sampler = CountSampler::new(&dist);
    let nu = cfg.shots_per_trial;
    let mut estimates = Vec::with_capacity(cfg.trials);
    let mut post_vars = Vec::new();
    let mut out_of_range = 0;
    let (w_lo, w_hi) = model.window();
    for t in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, t as u64);
        let samples: Vec<Outcome> = (0..nu).map(|_| sampler.sample(&mut rng)).collect();
        let est = match cfg.estimator {
            Estimator::MaximumLikelihood => ml_estimate(&samples, model)?,
            Estimator::MaximumLikelihoodNd => ml_estimate_nd_only(&samples, model)?,
            Estimator::Bayesian => {
                let (m, v) = bayes_estimate(&samples, model)?;
                post_vars.push(v);
                m
            }
            Estimator::LinearFringe => match linear_fringe_estimate(&samples, model) {
                Ok(x) => x,
                Err(Error::OutOfFringeRange { mean, .. }) => {
                    out_of_range += 1;
                    if (mean > model.mean_nd(w_lo)) == (model.mean_nd(w_lo) > model.mean_nd(w_hi)) {
                        w_lo
                    } else {
                        w_hi
                    }
                }
                Err(e) => return Err(e),
            },
        };
        estimates.push(est);
    }
    let fisher = qfi_product_analytic(cfg.alpha, secondary).f_dd;
    let crb = 1.0 / (nu as f64 * fisher);
    let var = sample_variance(&estimates);
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let mc_error = if cfg.trials >= 2 * MC_BATCHES {
        let size = cfg.trials / MC_BATCHES;
        let ratios: Vec<f64> =
            (0..MC_BATCHES).map(|b| sample_variance(&estimates[b * size..(b + 1) * size]) / crb).collect();
        sample_variance(&ratios).sqrt() / (MC_BATCHES as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(EstimationRun {
        variance_ratio: var / crb,
        sample_variance: var,
        crb,
        bias: mean - cfg.phi_true,
        mc_error,
        fisher,
        classical_fisher: model.count_model().fisher(cfg.phi_true),
        mean_posterior_variance: if post_vars.is_empty() {
            None
        } else {
            Some(post_vars.iter().sum::<f64>() / post_vars.len() as f64)
        },
        out_of_range,
        estimates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::make_number;
    use approx::assert_abs_diff_eq;

    fn small_model() -> (TwoModeState, PhaseModel) {
        let coh = make_coherent(Complex64::new(1.5, 0.0), TruncationPolicy::for_mean(2.25)).unwrap();
        let sq = make_squeezed_vacuum(0.3, TruncationPolicy::for_squeezed(0.3, 1e-12)).unwrap();
        let input = tensor(&coh, &sq);
        let model = PhaseModel::new(&input, 181).unwrap();
        (input, model)
    }

    #[test]
    fn point_mass_sampling() {
        let p = TruncationPolicy::new(5, 1e-10).unwrap();
        let input = tensor(&make_number(2, p).unwrap(), &make_number(1, p).unwrap());
        let dist = CountModel::new(&input).distribution(0.0);
        let mut rng = trial_rng(1, 0);
        assert!(sample_counts(&dist, 50, &mut rng).iter().all(|&o| o == (3, 1)));
    }

    #[test]
    fn sampling_is_deterministic() {
        let (_, model) = small_model();
        let dist = model.count_model().distribution(0.8);
        let a = sample_counts(&dist, 100, &mut trial_rng(9, 3));
        let b = sample_counts(&dist, 100, &mut trial_rng(9, 3));
        let c = sample_counts(&dist, 100, &mut trial_rng(9, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_samples_give_the_prior() {
        let (_, model) = small_model();
        let (mean, var) = bayes_estimate(&[], &model).unwrap();
        assert_abs_diff_eq!(mean, PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(var, PI * PI / 12.0, epsilon = 1e-4);
    }

    #[test]
    fn single_outcome_ml_is_argmax_of_its_curve() {
        let (_, model) = small_model();
        let o = (4usize, 2i64);
        let est = ml_estimate(&[o], &model).unwrap();
        let cm = model.count_model();
        let p = cm.probability(o.0, o.1, est);
        for k in 0..=400 {
            let phi = PI * k as f64 / 400.0;
            assert!(cm.probability(o.0, o.1, phi) <= p * (1.0 + 1e-12));
        }
    }

    #[test]
    fn flat_likelihood_is_reported() {
        let input = tensor(&ModeState::vacuum(3), &ModeState::vacuum(3));
        let model = PhaseModel::new(&input, 50).unwrap();
        assert!(matches!(ml_estimate(&[(0, 0)], &model), Err(Error::FlatLikelihood { .. })));
    }

    #[test]
    fn fringe_is_an_exact_sinusoid() {
        let (_, model) = small_model();
        assert!(model.fringe_residual() < 1e-10);
        let nbar = 0.3f64.sinh().powi(2);
        assert_abs_diff_eq!(model.mean_nd(0.0), 2.25 - nbar, epsilon = 1e-9);
        assert_abs_diff_eq!(model.mean_nd(PI / 2.0), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn fringe_inversion_round_trip_and_range() {
        let (_, model) = small_model();
        for &phi in &[0.3, 1.0, 2.5] {
            assert_abs_diff_eq!(invert_fringe(&model, model.mean_nd(phi)).unwrap(), phi, epsilon = 1e-12);
        }
        assert!(matches!(invert_fringe(&model, 100.0), Err(Error::OutOfFringeRange { .. })));
    }

    #[test]
    fn config_validation() {
        let cfg = ExperimentConfig::new(3.0, 0.5, 0.3, 200, 10, Estimator::MaximumLikelihood);
        assert!(cfg.validate().is_ok());
        assert!(ExperimentConfig { phi_true: -0.2, ..cfg.clone() }.validate().is_err());
        assert!(ExperimentConfig { trials: 0, ..cfg.clone() }.validate().is_err());
        assert!(ExperimentConfig { phi_true: 0.01, estimator: Estimator::LinearFringe, ..cfg }.validate().is_err());
    }
}
