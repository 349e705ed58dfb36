use std::path::{Path, PathBuf};

use fockmetro_core::counting::{count_distribution, CountModel};
use fockmetro_core::entanglement::{entropy_comparison, product_criterion, PRODUCT_TOL};
use fockmetro_core::estimation::{run_experiment, Estimator, ExperimentConfig};
use fockmetro_core::fisher::{fmax_bound, qfi_from_covariance};
use fockmetro_core::fock::{make_coherent, make_squeezed_vacuum, tensor, ModeState, TruncationPolicy, TwoModeState};
use fockmetro_core::optimizer::{optimize_with_restarts, InitKind, OptimizationProblem, OptimizationResult, Route};
use fockmetro_core::Complex64;
use serde_json::{json, Value};

use crate::config::{EstimatorChoice, InitChoice, RunConfig};
use crate::output::{json_string, num, OutputDir, Table};
use crate::CliError;

/// Secondary-state tail tolerance used when no truncation is given.
const SECONDARY_TAIL: f64 = 1e-14;

fn missing(section: &str) -> CliError {
    CliError::Validation(format!("config has no [{section}] section"))
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn check_finite(name: &str, x: f64, nonneg: bool) -> Result<(), CliError> {
    if !x.is_finite() || (nonneg && x < 0.0) {
        let what = if nonneg { "finite and >= 0" } else { "finite" };
        return Err(invalid(format!("{name} must be {what}, got {x}")));
    }
    Ok(())
}

pub fn execute(command: &str, cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut out = OutputDir::create(out_dir)?;
    let result = match command {
        "qfi" => cmd_qfi(cfg, &mut out),
        "optimize" => cmd_optimize(cfg, &mut out),
        "cfi" => cmd_cfi(cfg, &mut out),
        "estimate" => cmd_estimate(cfg, &mut out),
        "entropy" => cmd_entropy(cfg, &mut out),
        other => Err(invalid(format!("unknown command {other}"))),
    };
    // The echo is written even when the run fails after producing output.
    if !out.written().is_empty() || result.is_ok() {
        out.write("config_echo.toml", &cfg.to_toml())?;
    }
    result.map(|_| out.written().to_vec())
}

fn coherent(alpha: Complex64, dim: Option<usize>) -> Result<ModeState, CliError> {
    let policy = match dim {
        Some(d) => TruncationPolicy::new(d, fockmetro_core::fock::DEFAULT_TAIL_TOL)?,
        None => TruncationPolicy::for_mean(alpha.norm_sqr()),
    };
    Ok(make_coherent(alpha, policy)?)
}

fn squeezed(r: f64, dim: Option<usize>) -> Result<ModeState, CliError> {
    let policy = match dim {
        Some(d) => TruncationPolicy::new(d, fockmetro_core::fock::DEFAULT_TAIL_TOL)?,
        None => TruncationPolicy::for_squeezed(r, SECONDARY_TAIL),
    };
    Ok(make_squeezed_vacuum(r, policy)?)
}

fn product_input(alpha: Complex64, r: f64, dim: Option<usize>) -> Result<TwoModeState, CliError> {
    Ok(tensor(&coherent(alpha, dim)?, &squeezed(r, dim)?))
}

fn cmd_qfi(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let q = cfg.qfi.as_ref().ok_or_else(|| missing("qfi"))?;
    let (alphas, nbars) = (q.alpha_sq.values(), q.nbar.values());
    if alphas.is_empty() || nbars.is_empty() {
        return Err(invalid("empty sweep"));
    }
    check_finite("alpha_phase", q.alpha_phase, false)?;
    let mut table = Table::new(&["alpha_sq", "nbar", "f_ss", "f_sd", "f_dd", "f_max", "r", "n_tot"]);
    let mut worst: f64 = 0.0;
    for &a in &alphas {
        check_finite("alpha_sq", a, true)?;
        for &n in &nbars {
            check_finite("nbar", n, true)?;
            let input = product_input(Complex64::from_polar(a.sqrt(), q.alpha_phase), n.sqrt().asinh(), cfg.dim)?;
            let fm = qfi_from_covariance(&input);
            let bound = fmax_bound(a, n)?;
            worst = worst.max((fm.f_dd - bound.f_max).abs() / bound.f_max.max(f64::MIN_POSITIVE));
            table.row(&[a, n, fm.f_ss, fm.f_sd, fm.f_dd, bound.f_max, bound.remainder_r, bound.n_tot].map(num));
        }
    }
    out.write("qfi.csv", &table.into_string())?;
    let summary = json!({
        "command": "qfi",
        "scenario": cfg.scenario,
        "rows": alphas.len() * nbars.len(),
        "alpha_phase": q.alpha_phase,
        "max_rel_gap_fdd_fmax": worst,
    });
    out.write("qfi_summary.json", &json_string(&summary))
}

fn route_report(runs: &[OptimizationResult]) -> Value {
    let best = runs.iter().map(|r| r.fdd_achieved).fold(f64::NEG_INFINITY, f64::max);
    let fmax = runs[0].fmax_analytic;
    json!({
        "best_fdd": best,
        "rel_gap_to_fmax": (fmax - best) / fmax,
        "min_fidelity_to_squeezed": runs.iter().map(|r| r.fidelity_to_squeezed).fold(f64::INFINITY, f64::min),
        "all_converged": runs.iter().all(|r| r.converged),
        "restarts": runs.len(),
    })
}

fn cmd_optimize(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let o = cfg.optimize.as_ref().ok_or_else(|| missing("optimize"))?;
    check_finite("alpha_sq", o.alpha_sq, true)?;
    check_finite("nbar", o.nbar, true)?;
    if o.restarts == 0 {
        return Err(invalid("restarts must be at least 1"));
    }
    let dim = cfg.dim.unwrap_or_else(|| TruncationPolicy::for_squeezed(o.nbar.sqrt().asinh(), 1e-12).dim().max(40));
    let init = match o.init {
        InitChoice::PerturbedVacuum => InitKind::PerturbedVacuum,
        InitChoice::Random => InitKind::Random,
    };
    let prob = OptimizationProblem::new(o.alpha_sq, o.nbar, dim).with_seed(cfg.seed).with_init(init).with_tol(o.tol);
    prob.validate().map_err(|e| invalid(e.to_string()))?;
    let grad = optimize_with_restarts(&prob, Route::Gradient, o.restarts)?;
    let eig = optimize_with_restarts(&prob, Route::Eigensweep, o.restarts)?;

    let best = grad
        .iter()
        .fold(&grad[0], |b, r| if r.fdd_achieved > b.fdd_achieved { r } else { b });
    let mut amps = Table::new(&["n", "re", "im"]);
    for (n, c) in best.chi_opt.amps().iter().enumerate() {
        amps.row(&[n.to_string(), num(c.re), num(c.im)]);
    }
    out.write("chi_opt.csv", &amps.into_string())?;

    let mut log = Table::new(&[
        "route", "restart", "seed", "iterations", "converged", "grad_norm", "fdd_achieved", "multiplier", "dim_used",
    ]);
    for (route, runs) in [("gradient", &grad), ("eigensweep", &eig)] {
        for (i, r) in runs.iter().enumerate() {
            log.row(&[
                route.to_string(),
                i.to_string(),
                (cfg.seed + i as u64).to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
                num(r.grad_norm),
                num(r.fdd_achieved),
                num(r.multiplier),
                r.dim_used.to_string(),
            ]);
        }
    }
    out.write("convergence.csv", &log.into_string())?;

    let (g, e) = (route_report(&grad), route_report(&eig));
    let rel = (g["best_fdd"].as_f64().unwrap() - e["best_fdd"].as_f64().unwrap()).abs() / best.fmax_analytic;
    let report = json!({
        "command": "optimize",
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "alpha_sq": o.alpha_sq,
        "nbar": o.nbar,
        "dim": dim,
        "fmax_analytic": best.fmax_analytic,
        "fidelity_to_squeezed": best.fidelity_to_squeezed,
        "gradient": g,
        "eigensweep": e,
        "routes_rel_diff": rel,
    });
    out.write("report.json", &json_string(&report))?;
    if let Some(r) = grad.iter().find(|r| !r.converged) {
        return Err(CliError::Numerical(format!(
            "gradient route did not converge: {} iterations, gradient norm {:e}",
            r.iterations, r.grad_norm
        )));
    }
    Ok(())
}

fn cmd_cfi(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let c = cfg.cfi.as_ref().ok_or_else(|| missing("cfi"))?;
    check_finite("alpha", c.alpha, true)?;
    check_finite("r", c.r, true)?;
    let phis = match (&c.phi, &c.phi_sweep) {
        (Some(list), None) => list.clone(),
        (None, Some(s)) => s.values(),
        (None, None) => return Err(invalid("cfi needs `phi` or `phi_sweep`")),
        (Some(_), Some(_)) => return Err(invalid("give only one of `phi` and `phi_sweep`")),
    };
    if phis.is_empty() {
        return Err(invalid("empty sweep"));
    }
    for &p in &phis {
        check_finite("phi", p, false)?;
    }
    let input = product_input(Complex64::from_polar(c.alpha, c.alpha_phase), c.r, cfg.dim)?;
    let tail = count_distribution(&input, phis[0])?.tail;
    let model = CountModel::new(&input);
    let qfi = qfi_from_covariance(&input).f_dd;
    let mut table = Table::new(&["phi", "cfi", "cfi_nd_only", "qfi", "rel_gap"]);
    let (mut worst, mut nd_min, mut nd_max) = (0.0f64, f64::INFINITY, 0.0f64);
    for &phi in &phis {
        let (cfi, nd) = (model.fisher(phi), model.fisher_nd_only(phi));
        let gap = (cfi - qfi).abs() / qfi.max(f64::MIN_POSITIVE);
        worst = worst.max(gap);
        nd_min = nd_min.min(nd / cfi);
        nd_max = nd_max.max(nd / cfi);
        table.row(&[phi, cfi, nd, qfi, gap].map(num));
    }
    out.write("cfi.csv", &table.into_string())?;
    let summary = json!({
        "command": "cfi",
        "scenario": cfg.scenario,
        "points": phis.len(),
        "qfi": qfi,
        "max_rel_gap": worst,
        "nd_only_ratio_min": nd_min,
        "nd_only_ratio_max": nd_max,
        "skipped_tail": tail,
        "real_coefficients": input.has_real_coefficients(1e-14),
    });
    out.write("cfi_summary.json", &json_string(&summary))
}

fn cmd_estimate(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let e = cfg.estimate.as_ref().ok_or_else(|| missing("estimate"))?;
    check_finite("alpha", e.alpha, true)?;
    let estimator = match e.estimator {
        EstimatorChoice::MaximumLikelihood => Estimator::MaximumLikelihood,
        EstimatorChoice::MaximumLikelihoodNd => Estimator::MaximumLikelihoodNd,
        EstimatorChoice::Bayesian => Estimator::Bayesian,
        EstimatorChoice::LinearFringe => Estimator::LinearFringe,
    };
    let exp = ExperimentConfig {
        alpha: Complex64::from_polar(e.alpha, e.alpha_phase),
        r: e.r,
        phi_true: e.phi_true,
        shots_per_trial: e.shots_per_trial,
        trials: e.trials,
        seed: cfg.seed,
        dim: cfg.dim,
        estimator,
        grid_points: e.grid_points,
    };
    exp.validate()?;
    let run = run_experiment(&exp)?;
    let mut table = Table::new(&["trial", "estimate"]);
    for (t, x) in run.estimates.iter().enumerate() {
        table.row(&[t.to_string(), num(*x)]);
    }
    out.write("estimates.csv", &table.into_string())?;
    let summary = json!({
        "command": "estimate",
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "estimator": estimator.name(),
        "trials": e.trials,
        "shots_per_trial": e.shots_per_trial,
        "phi_true": e.phi_true,
        "sample_variance": run.sample_variance,
        "crb": run.crb,
        "variance_ratio": run.variance_ratio,
        "mc_error": run.mc_error,
        "bias": run.bias,
        "fisher": run.fisher,
        "classical_fisher": run.classical_fisher,
        "mean_posterior_variance": run.mean_posterior_variance,
        "posterior_variance_ratio": run.mean_posterior_variance.map(|v| v / run.crb),
        "out_of_range": run.out_of_range,
    });
    out.write("estimate_summary.json", &json_string(&summary))
}

fn ordering(num_s: f64, sq_s: f64) -> &'static str {
    if (num_s - sq_s).abs() < PRODUCT_TOL {
        "equal"
    } else if num_s > sq_s {
        "number > squeezed"
    } else {
        "number < squeezed"
    }
}

fn cmd_entropy(cfg: &RunConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let e = cfg.entropy.as_ref().ok_or_else(|| missing("entropy"))?;
    check_finite("alpha", e.alpha, true)?;
    if e.nbar.is_empty() && e.coherent.is_empty() && e.squeezed_r.is_empty() {
        return Err(invalid("empty sweep"));
    }
    let alpha = Complex64::from_polar(e.alpha, e.alpha_phase);

    let mut cmp = Table::new(&["nbar", "entropy_squeezed", "entropy_number", "ordering"]);
    let mut all_number_larger = true;
    for &n in &e.nbar {
        let c = entropy_comparison(alpha, n, cfg.dim)?;
        if n > 0.0 {
            all_number_larger &= c.number_exceeds_squeezed();
        }
        cmp.row(&[
            num(n),
            num(c.entropy_squeezed),
            num(c.entropy_number),
            ordering(c.entropy_number, c.entropy_squeezed).to_string(),
        ]);
    }
    out.write("entropy_comparison.csv", &cmp.into_string())?;

    let mut prod = Table::new(&["family", "param_re", "param_im", "entropy", "cross_re", "cross_im", "is_product"]);
    let mut max_coherent: f64 = 0.0;
    let mut min_squeezed = f64::INFINITY;
    for &[re, im] in &e.coherent {
        let beta = Complex64::new(re, im);
        let (s, cross) = product_criterion(&coherent(beta, cfg.dim)?, alpha)?;
        max_coherent = max_coherent.max(s);
        prod.row(&[
            "coherent".into(),
            num(re),
            num(im),
            num(s),
            num(cross.re),
            num(cross.im),
            (s < PRODUCT_TOL).to_string(),
        ]);
    }
    for &r in &e.squeezed_r {
        check_finite("squeezed_r", r, true)?;
        let (s, cross) = product_criterion(&squeezed(r, cfg.dim)?, alpha)?;
        min_squeezed = min_squeezed.min(s);
        prod.row(&["squeezed".into(), num(r), num(0.0), num(s), num(cross.re), num(cross.im), (s < PRODUCT_TOL).to_string()]);
    }
    out.write("product_criterion.csv", &prod.into_string())?;

    let summary = json!({
        "command": "entropy",
        "scenario": cfg.scenario,
        "alpha": e.alpha,
        "max_coherent_entropy": max_coherent,
        "min_squeezed_entropy": if min_squeezed.is_finite() { json!(min_squeezed) } else { Value::Null },
        "number_exceeds_squeezed_for_all_positive_nbar": all_number_larger,
    });
    out.write("entropy_summary.json", &json_string(&summary))
}
