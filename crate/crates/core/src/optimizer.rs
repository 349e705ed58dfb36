//! Numerical maximization of `F_dd = 2α²⟨(Δp)²⟩ + ⟨N⟩` over secondary-port
//! pure states with fixed mean photon number.
//!
//! Two independent routes:
//!
//! * [`maximize_fdd_gradient`]: augmented-Lagrangian ascent over unit
//!   vectors in `C^dim`, with the mean-photon constraint polished exactly at
//!   the end.
//! * [`maximize_fdd_eigensweep`]: top eigenvector of `p² − λN`, with `λ`
//!   found by bisection on `⟨N⟩`.
//!
//! Both grow the truncation when the solution leaks into the top levels.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fisher::{fdd_quadrature, fmax_bound};
use crate::fock::{make_squeezed_vacuum, ModeState, TruncationPolicy};

/// Levels counted by the truncation guard.
pub const GUARD_BAND: usize = 4;
/// Largest probability tolerated in the guard band.
pub const GUARD_MASS: f64 = 1e-8;
/// Truncation never grows beyond this many times the requested dimension.
const MAX_GROWTH: usize = 16;
/// Relative gradient tolerance used while the truncation is still growing.
const COARSE_TOL: f64 = 1e-5;
/// Line-search reference is the best of this many recent values.
const NONMONOTONE_WINDOW: usize = 10;
/// Value changes below this relative size are rounding noise; without the
/// slack the line search stalls long before the gradient test can pass.
const ROUNDING_SLACK: f64 = 1e-14;

/// Starting point of the gradient route.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    /// Vacuum plus small even-level noise.
    PerturbedVacuum,
    /// Uniformly random complex amplitudes on every level.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizationProblem {
    pub alpha_sq: f64,
    pub nbar: f64,
    pub dim: usize,
    /// Relative tolerance on the projected gradient norm.
    pub tol: f64,
    pub seed: u64,
    pub init: InitKind,
    /// Iteration budget for the gradient route (all inner steps counted).
    pub max_iterations: usize,
}

impl OptimizationProblem {
    pub fn new(alpha_sq: f64, nbar: f64, dim: usize) -> Self {
        Self { alpha_sq, nbar, dim, tol: 1e-8, seed: 0, init: InitKind::PerturbedVacuum, max_iterations: 400_000 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: InitKind) -> Self {
        self.init = init;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_sq.is_finite() && self.alpha_sq >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha_sq must be finite and >= 0 (got {})", self.alpha_sq)));
        }
        if !(self.nbar.is_finite() && self.nbar >= 0.0) {
            return Err(Error::InvalidParameter(format!("nbar must be finite and >= 0 (got {})", self.nbar)));
        }
        if self.dim < 2 || self.nbar + 4.0 >= self.dim as f64 {
            return Err(Error::TruncationTooSmall(format!(
                "dim {} cannot hold mean photon number {}",
                self.dim, self.nbar
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0 (got {})", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub chi_opt: ModeState,
    pub fdd_achieved: f64,
    pub fmax_analytic: f64,
    pub fidelity_to_squeezed: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final projected gradient norm relative to `max(1, F_dd)`; zero for
    /// the eigensweep.
    pub grad_norm: f64,
    /// Mean-photon multiplier at the solution.
    pub multiplier: f64,
    pub dim_used: usize,
}

impl OptimizationResult {
    /// Turns a non-converged result into [`Error::NotConverged`].
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged { iterations: self.iterations, grad_norm: self.grad_norm })
        }
    }
}

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn apply_n(c: &DVector<Complex64>) -> DVector<Complex64> {
    DVector::from_iterator(c.len(), c.iter().enumerate().map(|(n, z)| z * n as f64))
}

/// `p = (a − a†)/(i√2)` on the truncated basis; exact for `⟨p⟩`.
fn apply_p(c: &DVector<Complex64>) -> DVector<Complex64> {
    let d = c.len();
    let s = -Complex64::i() / std::f64::consts::SQRT_2;
    DVector::from_fn(d, |n, _| {
        let up = if n + 1 < d { c[n + 1] * ((n + 1) as f64).sqrt() } else { c0() };
        let down = if n >= 1 { c[n - 1] * (n as f64).sqrt() } else { c0() };
        s * (up - down)
    })
}

/// `p² = N + ½ − (a² + a†²)/2` with exact matrix elements.
fn apply_p2(c: &DVector<Complex64>) -> DVector<Complex64> {
    let d = c.len();
    DVector::from_fn(d, |n, _| {
        let mut v = c[n] * (n as f64 + 0.5);
        if n + 2 < d {
            v -= c[n + 2] * (0.5 * (((n + 1) * (n + 2)) as f64).sqrt());
        }
        if n >= 2 {
            v -= c[n - 2] * (0.5 * ((n * (n - 1)) as f64).sqrt());
        }
        v
    })
}

fn re_dot(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.dotc(b).re
}

/// Objective pieces at a unit vector.
struct Eval {
    f: f64,
    mean_n: f64,
    /// Euclidean gradient of `f` (real inner product convention).
    grad_f: DVector<Complex64>,
    nc: DVector<Complex64>,
}

fn evaluate(c: &DVector<Complex64>, alpha_sq: f64) -> Eval {
    let nc = apply_n(c);
    let pc = apply_p(c);
    let p2c = apply_p2(c);
    let q1 = re_dot(c, &pc);
    let q2 = re_dot(c, &p2c);
    let mean_n = re_dot(c, &nc);
    let f = 2.0 * alpha_sq * (q2 - q1 * q1) + mean_n;
    let grad_f = (p2c - pc * Complex64::new(2.0 * q1, 0.0)) * Complex64::new(4.0 * alpha_sq, 0.0) + &nc * Complex64::new(2.0, 0.0);
    Eval { f, mean_n, grad_f, nc }
}

/// Gradient of `f` projected onto the tangent space of
/// `{‖c‖ = 1, ⟨N⟩ = const}`, and the least-squares multiplier.
fn constrained_gradient(c: &DVector<Complex64>, e: &Eval) -> (DVector<Complex64>, f64) {
    let mut g = e.grad_f.clone();
    g -= c * Complex64::new(re_dot(c, &g), 0.0);
    let v = &e.nc - c * Complex64::new(e.mean_n, 0.0);
    let vn = v.norm_squared();
    let mut mult = 0.0;
    if vn > 1e-300 {
        let coef = re_dot(&v, &g) / vn;
        g -= &v * Complex64::new(coef, 0.0);
        // grad f = μ·(2Nc) + (terms along c) at a stationary point
        mult = coef / 2.0;
    }
    (g, mult)
}

/// Rescale `c_n → c_n e^{τn}` and renormalize so that `⟨N⟩ = target`.
pub(crate) fn tilt_to_mean(c: &DVector<Complex64>, target: f64) -> Result<DVector<Complex64>> {
    let p: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
    let support: Vec<usize> = (0..p.len()).filter(|&n| p[n] > 0.0).collect();
    let (lo_n, hi_n) = match (support.first(), support.last()) {
        (Some(&a), Some(&b)) => (a as f64, b as f64),
        _ => return Err(Error::InvalidParameter("cannot tilt the zero vector".into())),
    };
    if target < lo_n || target > hi_n {
        return Err(Error::TruncationTooSmall(format!(
            "mean photon number {target} outside the support [{lo_n}, {hi_n}] of the state"
        )));
    }
    if lo_n == hi_n {
        return Ok(c.clone());
    }
    let ln_p: Vec<(f64, f64)> = support.iter().map(|&n| (n as f64, p[n].ln())).collect();
    let mean_at = |tau: f64| {
        let m = ln_p.iter().map(|&(n, lp)| lp + 2.0 * tau * n).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut s) = (0.0, 0.0);
        for &(n, lp) in &ln_p {
            let w = (lp + 2.0 * tau * n - m).exp();
            z += w;
            s += n * w;
        }
        s / z
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while mean_at(lo) > target && lo > -1e4 {
        lo *= 2.0;
    }
    while mean_at(hi) < target && hi < 1e4 {
        hi *= 2.0;
    }
    let mut tau = 0.0;
    for _ in 0..200 {
        tau = 0.5 * (lo + hi);
        let m = mean_at(tau);
        if (m - target).abs() <= 1e-14 * target.max(1.0) || hi - lo < 1e-16 {
            break;
        }
        if m < target {
            lo = tau;
        } else {
            hi = tau;
        }
    }
    let shift = support.iter().map(|&n| 2.0 * tau * n as f64 + p[n].ln()).fold(f64::NEG_INFINITY, f64::max);
    let mut out = DVector::from_fn(c.len(), |n, _| {
        if p[n] > 0.0 {
            c[n] * (tau * n as f64 - 0.5 * shift).exp()
        } else {
            c0()
        }
    });
    let norm = out.norm();
    out /= Complex64::new(norm, 0.0);
    Ok(out)
}

fn initial_vector(prob: &OptimizationProblem, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    let d = prob.dim;
    let mut c = DVector::from_element(d, c0());
    match prob.init {
        InitKind::PerturbedVacuum => {
            c[0] = Complex64::new(1.0, 0.0);
            for n in (2..d.min(24)).step_by(2) {
                c[n] = Complex64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
            }
        }
        InitKind::Random => {
            for z in c.iter_mut() {
                *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    let n = c.norm();
    c / Complex64::new(n, 0.0)
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn vacuum_result(prob: &OptimizationProblem) -> Result<OptimizationResult> {
    let chi = ModeState::vacuum(prob.dim);
    finish(prob, chi, 0, true, 0.0, 1.0 + 2.0 * prob.alpha_sq, prob.dim)
}

fn finish(
    prob: &OptimizationProblem,
    chi: ModeState,
    iterations: usize,
    converged: bool,
    grad_norm: f64,
    multiplier: f64,
    dim_used: usize,
) -> Result<OptimizationResult> {
    let chi = chi.gauge_largest();
    let r = prob.nbar.sqrt().asinh();
    let reference = make_squeezed_vacuum(r, TruncationPolicy::for_squeezed(r, 1e-14))?;
    Ok(OptimizationResult {
        fdd_achieved: fdd_quadrature(prob.alpha_sq, &chi),
        fmax_analytic: fmax_bound(prob.alpha_sq, prob.nbar)?.f_max,
        fidelity_to_squeezed: chi.fidelity(&reference).min(1.0),
        chi_opt: chi,
        iterations,
        converged,
        grad_norm,
        multiplier,
        dim_used,
    })
}

fn guard_ok(c: &DVector<Complex64>) -> bool {
    let d = c.len();
    c.iter().skip(d.saturating_sub(GUARD_BAND)).map(|z| z.norm_sqr()).sum::<f64>() <= GUARD_MASS
}

fn resize(c: &DVector<Complex64>, dim: usize) -> DVector<Complex64> {
    DVector::from_fn(dim, |n, _| if n < c.len() { c[n] } else { c0() })
}

struct AscentOutcome {
    c: DVector<Complex64>,
    iterations: usize,
    converged: bool,
    grad_norm: f64,
    multiplier: f64,
}

/// Riemannian ascent of `L = f − λg − (ρ/2)g²` on the unit sphere,
/// `g = ⟨N⟩ − N̄`.
fn inner_ascent(
    c: &mut DVector<Complex64>,
    alpha_sq: f64,
    nbar: f64,
    lambda: f64,
    rho: f64,
    tol: f64,
    budget: usize,
) -> usize {
    let lagr = |c: &DVector<Complex64>| {
        let e = evaluate(c, alpha_sq);
        let g = e.mean_n - nbar;
        let val = e.f - lambda * g - 0.5 * rho * g * g;
        let mut grad = &e.grad_f - &e.nc * Complex64::new(2.0 * (lambda + rho * g), 0.0);
        grad -= &*c * Complex64::new(re_dot(c, &grad), 0.0);
        (val, grad, e.f)
    };
    let (mut val, mut grad, mut f) = lagr(c);
    let mut step = 1.0 / (4.0 * alpha_sq + 2.0 + rho * c.len() as f64) / c.len() as f64;
    let mut prev: Option<(DVector<Complex64>, DVector<Complex64>)> = None;
    let mut recent = std::collections::VecDeque::from([val]);
    let mut it = 0;
    while it < budget {
        let gn = grad.norm();
        if gn <= tol * f.abs().max(1.0) {
            break;
        }
        if let Some((pc, pg)) = &prev {
            let s = &*c - pc;
            let y = &grad - pg;
            let sy = re_dot(&s, &y);
            if sy.abs() > 1e-300 {
                step = (s.norm_squared() / sy.abs()).clamp(1e-14, 1e6);
            }
        }
        let gg = gn * gn;
        let reference = recent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut t = step;
        let mut accepted = false;
        for _ in 0..60 {
            let trial = &*c + &grad * Complex64::new(t, 0.0);
            let trial = &trial / Complex64::new(trial.norm(), 0.0);
            let (tv, tg, tf) = lagr(&trial);
            if tv >= reference + 1e-4 * t * gg - ROUNDING_SLACK * reference.abs() {
                prev = Some((c.clone(), grad.clone()));
                *c = trial;
                val = tv;
                recent.push_back(val);
                if recent.len() > NONMONOTONE_WINDOW {
                    recent.pop_front();
                }
                grad = tg;
                f = tf;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        it += 1;
        if !accepted {
            break;
        }
    }
    it
}

fn gradient_at_dim(prob: &OptimizationProblem, start: DVector<Complex64>) -> Result<AscentOutcome> {
    let (a2, nbar, tol) = (prob.alpha_sq, prob.nbar, prob.tol);
    let mut c = tilt_to_mean(&start, nbar)?;
    let mut lambda = 0.0;
    let mut rho = 4.0 * a2 + 2.0;
    let mut iterations = 0;
    let mut last_g = f64::INFINITY;
    let mut inner_tol = 1e-3;
    while iterations < prob.max_iterations {
        let budget = (prob.max_iterations - iterations).min(50_000);
        iterations += inner_ascent(&mut c, a2, nbar, lambda, rho, inner_tol, budget);
        let e = evaluate(&c, a2);
        let g = e.mean_n - nbar;
        lambda += rho * g;
        let (pg, _) = constrained_gradient(&c, &e);
        let scale = e.f.abs().max(1.0);
        if g.abs() <= 1e-9 * nbar.max(1.0) && pg.norm() <= tol * scale && inner_tol <= tol {
            break;
        }
        if g.abs() > 0.25 * last_g {
            rho *= 4.0;
        }
        last_g = g.abs();
        inner_tol = (inner_tol * 0.1).max(tol);
        iterations += 1;
    }
    let c = tilt_to_mean(&c, nbar)?;
    let e = evaluate(&c, a2);
    let (pg, multiplier) = constrained_gradient(&c, &e);
    let grad_norm = pg.norm() / e.f.abs().max(1.0);
    Ok(AscentOutcome {
        c,
        iterations,
        converged: grad_norm <= 10.0 * tol && iterations < prob.max_iterations,
        grad_norm,
        multiplier,
    })
}

/// Augmented-Lagrangian ascent; see the module docs.
pub fn maximize_fdd_gradient(prob: &OptimizationProblem) -> Result<OptimizationResult> {
    prob.validate()?;
    if prob.nbar == 0.0 {
        return vacuum_result(prob);
    }
    let mut rng = rng_for(prob.seed);
    let mut start = initial_vector(prob, &mut rng);
    let mut dim = prob.dim;
    let mut total = 0;
    loop {
        let coarse = OptimizationProblem { dim, tol: prob.tol.max(COARSE_TOL), ..*prob };
        let out = gradient_at_dim(&coarse, start)?;
        total += out.iterations;
        if guard_ok(&out.c) {
            let fine = OptimizationProblem { dim, max_iterations: prob.max_iterations.saturating_sub(total), ..*prob };
            let out = gradient_at_dim(&fine, out.c)?;
            total += out.iterations;
            let chi = ModeState::from_amplitudes(out.c)?;
            return finish(prob, chi, total, out.converged, out.grad_norm, out.multiplier, dim);
        }
        if dim * 2 > prob.dim * MAX_GROWTH {
            return Err(Error::TruncationTooSmall(format!(
                "optimum still leaks into the top {GUARD_BAND} levels at dim {dim}"
            )));
        }
        dim *= 2;
        start = resize(&out.c, dim);
    }
}

/// Top eigenpair of `p² − λN`, computed per parity sector (the matrix is
/// block diagonal in parity) and reassembled on the full basis.
pub fn top_eigenvector(lambda: f64, dim: usize) -> (f64, DVector<f64>) {
    let mut best: Option<(f64, DVector<f64>)> = None;
    for parity in 0..2 {
        let levels: Vec<usize> = (parity..dim).step_by(2).collect();
        let m = levels.len();
        if m == 0 {
            continue;
        }
        let h = DMatrix::from_fn(m, m, |i, j| {
            let (ni, nj) = (levels[i], levels[j]);
            if i == j {
                ni as f64 + 0.5 - lambda * ni as f64
            } else if nj == ni + 2 || ni == nj + 2 {
                let lo = ni.min(nj);
                -0.5 * (((lo + 1) * (lo + 2)) as f64).sqrt()
            } else {
                0.0
            }
        });
        let (val, vec) = if m == 1 {
            (h[(0, 0)], DVector::from_element(1, 1.0))
        } else {
            let eig = SymmetricEigen::new(h);
            let k = eig.eigenvalues.imax();
            (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
        };
        if best.as_ref().map_or(true, |(b, _)| val > *b) {
            let mut full = DVector::zeros(dim);
            for (i, &n) in levels.iter().enumerate() {
                full[n] = vec[i];
            }
            best = Some((val, full));
        }
    }
    best.expect("dim >= 1")
}

fn mean_number(v: &DVector<f64>) -> f64 {
    v.iter().enumerate().map(|(n, x)| n as f64 * x * x).sum()
}

/// `⟨N⟩` of the top eigenvector for `λ = 2 + e^u`.
fn sweep_point(u: f64, dim: usize) -> (f64, DVector<f64>) {
    let (_, v) = top_eigenvector(2.0 + u.exp(), dim);
    (mean_number(&v), v)
}

struct SweepOutcome {
    v: DVector<f64>,
    lambda: f64,
    evaluations: usize,
}

fn eigensweep_at_dim(nbar: f64, dim: usize, jitter: f64) -> Result<SweepOutcome> {
    // ⟨N⟩ decreases monotonically along the sweep.
    let grid: Vec<f64> = (0..=48).map(|k| -12.0 + 0.5 * k as f64 + jitter).collect();
    let mut evaluations = 0;
    let mut prev: Option<(f64, f64)> = None;
    let mut bracket = None;
    for &u in &grid {
        let (m, _) = sweep_point(u, dim);
        evaluations += 1;
        if let Some((pu, pm)) = prev {
            if pm >= nbar && m <= nbar {
                bracket = Some((pu, u));
                break;
            }
        } else if m < nbar {
            return Err(Error::SweepBracketFailure(format!(
                "largest reachable mean photon number {m:.6} at dim {dim} is below {nbar}"
            )));
        }
        prev = Some((u, m));
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::SweepBracketFailure(format!("mean photon number {nbar} not bracketed at dim {dim}"))
    })?;
    let mut best = sweep_point(lo, dim);
    let mut best_u = lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (m, v) = sweep_point(mid, dim);
        evaluations += 1;
        best = (m, v);
        best_u = mid;
        if (m - nbar).abs() <= 1e-12 * nbar.max(1.0) || hi - lo < 1e-15 {
            break;
        }
        if m > nbar {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.0 - nbar).abs() > 1e-8 * nbar.max(1.0) {
        return Err(Error::SweepBracketFailure(format!(
            "bisection stalled at mean photon number {} (target {nbar})",
            best.0
        )));
    }
    Ok(SweepOutcome { v: best.1, lambda: 2.0 + best_u.exp(), evaluations })
}

/// Multiplier sweep; see the module docs.
pub fn maximize_fdd_eigensweep(prob: &OptimizationProblem) -> Result<OptimizationResult> {
    prob.validate()?;
    if prob.nbar == 0.0 {
        return vacuum_result(prob);
    }
    let jitter = rng_for(prob.seed).gen_range(-0.25..0.25);
    let mut dim = prob.dim;
    let mut evaluations = 0;
    loop {
        let attempt = eigensweep_at_dim(prob.nbar, dim, jitter);
        let grow = match &attempt {
            Ok(out) => !guard_ok(&out.v.map(|x| Complex64::new(x, 0.0))),
            Err(Error::SweepBracketFailure(_)) => true,
            Err(_) => false,
        };
        if !grow {
            let out = attempt?;
            evaluations += out.evaluations;
            let chi = ModeState::from_amplitudes(out.v.map(|x| Complex64::new(x, 0.0)))?;
            let mean_p = chi.moments().mean_p;
            if mean_p.abs() > 1e-9 {
                return Err(Error::SweepBracketFailure(format!("eigenvector has nonzero mean p = {mean_p:e}")));
            }
            // Multiplier of F_dd itself: ∂F/∂N̄ = 1 + 2α²λ.
            let multiplier = 1.0 + 2.0 * prob.alpha_sq * out.lambda;
            return finish(prob, chi, evaluations, true, 0.0, multiplier, dim);
        }
        if let Ok(out) = &attempt {
            evaluations += out.evaluations;
        }
        if dim * 2 > prob.dim * MAX_GROWTH {
            return match attempt {
                Err(e) => Err(e),
                Ok(_) => Err(Error::TruncationTooSmall(format!(
                    "eigenvector still leaks into the top {GUARD_BAND} levels at dim {dim}"
                ))),
            };
        }
        dim *= 2;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Gradient,
    Eigensweep,
}

/// Runs `restarts` independent solves with seeds `seed, seed + 1, …`;
/// results are in restart order.
pub fn optimize_with_restarts(prob: &OptimizationProblem, route: Route, restarts: usize) -> Result<Vec<OptimizationResult>> {
    (0..restarts.max(1) as u64)
        .map(|i| {
            let p = prob.with_seed(prob.seed.wrapping_add(i));
            match route {
                Route::Gradient => maximize_fdd_gradient(&p),
                Route::Eigensweep => maximize_fdd_eigensweep(&p),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn banded_operators_match_moments() {
        let mut rng = rng_for(3);
        let c = DVector::from_fn(12, |n, _| {
            if n < 10 {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                c0()
            }
        });
        let c = &c / Complex64::new(c.norm(), 0.0);
        let state = ModeState::from_amplitudes(c.clone()).unwrap();
        let m = state.moments();
        assert_relative_eq!(re_dot(&c, &apply_p(&c)), m.mean_p, epsilon = 1e-14);
        assert_relative_eq!(re_dot(&c, &apply_p2(&c)), m.var_p + m.mean_p * m.mean_p, epsilon = 1e-13);
        assert_relative_eq!(evaluate(&c, 3.0).f, fdd_quadrature(3.0, &state), epsilon = 1e-12);
    }

    #[test]
    fn tilt_hits_target() {
        let c = DVector::from_element(20, Complex64::new(1.0, 0.5));
        let t = tilt_to_mean(&c, 2.5).unwrap();
        assert_relative_eq!(mean_number(&t.map(|z| z.norm())), 2.5, epsilon = 1e-12);
        assert_relative_eq!(t.norm(), 1.0, epsilon = 1e-14);
        assert!(tilt_to_mean(&c, 25.0).is_err());
    }

    #[test]
    fn zero_photons_gives_vacuum() {
        let prob = OptimizationProblem::new(7.0, 0.0, 10);
        for res in [maximize_fdd_gradient(&prob).unwrap(), maximize_fdd_eigensweep(&prob).unwrap()] {
            assert_eq!(res.fdd_achieved, 7.0);
            assert_eq!(res.fidelity_to_squeezed, 1.0);
        }
    }

    #[test]
    fn infeasible_problem_is_rejected() {
        assert!(OptimizationProblem::new(1.0, 10.0, 12).validate().is_err());
        assert!(OptimizationProblem::new(-1.0, 1.0, 40).validate().is_err());
    }

    #[test]
    fn gradient_example() {
        let res = maximize_fdd_gradient(&OptimizationProblem::new(100.0, 1.0, 40)).unwrap();
        assert!(res.converged, "{res:?}");
        assert!(res.fidelity_to_squeezed >= 0.999);
        assert!((res.fdd_achieved - 583.8427).abs() < 0.5);
        assert!(res.fdd_achieved <= res.fmax_analytic * (1.0 + 1e-6));
    }

    #[test]
    fn eigensweep_examples() {
        let res = maximize_fdd_eigensweep(&OptimizationProblem::new(100.0, 1.0, 40)).unwrap();
        assert!(res.chi_opt.odd_population() < 1e-8);
        assert_relative_eq!(res.chi_opt.mean_photon(), 1.0, max_relative = 1e-8);
        let res = maximize_fdd_eigensweep(&OptimizationProblem::new(3.0, 0.5, 40)).unwrap();
        let want = 3.0 * (2.0 * 0.5 + 2.0 * 0.75f64.sqrt() + 1.0) + 0.5;
        assert_relative_eq!(res.fdd_achieved, want, max_relative = 1e-4);
    }

    #[test]
    fn eigensweep_grows_truncation() {
        let res = maximize_fdd_eigensweep(&OptimizationProblem::new(1.0, 4.0, 80)).unwrap();
        assert!(res.dim_used > 80);
        assert!(res.fidelity_to_squeezed >= 0.999);
    }
}
