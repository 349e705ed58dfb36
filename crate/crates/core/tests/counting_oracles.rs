use fockmetro_core::counting::{
    classical_fisher, classical_fisher_nd_only, count_distribution, wigner_d, CountModel,
};
use fockmetro_core::fisher::qfi_from_covariance;
use fockmetro_core::fock::{make_coherent, make_squeezed_vacuum, tensor, ModeState, TruncationPolicy, TwoModeState};
use fockmetro_core::interferometer::{apply, expectation, k_operator, mach_zehnder, PhasePair};
use fockmetro_core::Complex64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ln_fact(n: i64) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Wigner's closed form for `d^j_{m',m}(β)`, all arguments doubled.
fn wigner_formula(two_j: i64, two_mp: i64, two_m: i64, beta: f64) -> f64 {
    let (jpm, jmm) = ((two_j + two_m) / 2, (two_j - two_m) / 2);
    let (jpmp, jmmp) = ((two_j + two_mp) / 2, (two_j - two_mp) / 2);
    let dm = (two_mp - two_m) / 2;
    let pre = 0.5 * (ln_fact(jpmp) + ln_fact(jmmp) + ln_fact(jpm) + ln_fact(jmm));
    let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let mut sum = 0.0;
    for k in 0..=two_j {
        let (a, b, d, e) = (jpm - k, k, dm + k, jmmp - k);
        if a < 0 || d < 0 || e < 0 {
            continue;
        }
        let sign = if (dm + k) % 2 == 0 { 1.0 } else { -1.0 };
        let mag = (pre - ln_fact(a) - ln_fact(b) - ln_fact(d) - ln_fact(e)).exp();
        sum += sign * mag * c.powi((two_j + (two_m - two_mp) / 2 - 2 * k) as i32) * s.powi((dm + 2 * k) as i32);
    }
    sum
}

#[test]
fn wigner_d_matches_explicit_formula() {
    for two_j in [1i64, 2, 3, 6, 9, 14] {
        for &beta in &[0.35, 1.2, 2.9] {
            let d = wigner_d(two_j as usize, beta);
            for two_mp in (-two_j..=two_j).step_by(2) {
                for two_m in (-two_j..=two_j).step_by(2) {
                    let want = wigner_formula(two_j, two_mp, two_m, beta);
                    let got = d.element(two_mp, two_m).unwrap();
                    assert!((got - want).abs() < 1e-10, "j={two_j}/2 m'={two_mp}/2 m={two_m}/2: {got} vs {want}");
                }
            }
        }
    }
}

#[test]
fn probabilities_match_full_interferometer() {
    let sq = make_squeezed_vacuum(0.4, TruncationPolicy::for_squeezed(0.4, 1e-13)).unwrap();
    let coh = make_coherent(Complex64::new(1.3, 0.2), TruncationPolicy::for_mean(1.73)).unwrap();
    let input = tensor(&coh, &sq);
    for &(phi_s, phi_d) in &[(0.0, 0.7), (1.9, 0.7), (-0.4, 2.6)] {
        let out = apply(&mach_zehnder(PhasePair::new(phi_s, phi_d), input.max_total_photons()), &input).unwrap();
        let dist = count_distribution(&input, phi_d).unwrap();
        let amps = out.amps();
        let mut worst: f64 = 0.0;
        for n1 in 0..amps.nrows() {
            for n2 in 0..amps.ncols() {
                let p = amps[(n1, n2)].norm_sqr();
                worst = worst.max((p - dist.get(n1 + n2, n1 as i64 - n2 as i64)).abs());
            }
        }
        assert!(worst < 1e-12, "{worst:e}");
    }
}

fn random_real_grid(rng: &mut ChaCha8Rng, d1: usize, d2: usize) -> TwoModeState {
    let m = DMatrix::from_fn(d1, d2, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
    TwoModeState::from_amplitudes(m).unwrap()
}

fn random_real_mode(rng: &mut ChaCha8Rng, d: usize) -> ModeState {
    ModeState::from_amplitudes(DVector::from_fn(d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), 0.0))).unwrap()
}

fn rotate_common(input: &TwoModeState, theta: f64) -> TwoModeState {
    let a = input.amps();
    let m = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * Complex64::from_polar(1.0, theta * (i + j) as f64));
    TwoModeState::from_amplitudes(m).unwrap()
}

#[test]
fn cfi_equals_var_k_for_real_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for trial in 0..50 {
        let input = if trial % 2 == 0 {
            random_real_grid(&mut rng, 6, 5)
        } else {
            tensor(&random_real_mode(&mut rng, 5), &random_real_mode(&mut rng, 6))
        };
        let var_k = qfi_from_covariance(&input).f_dd;
        let mean_k = expectation(&k_operator(input.max_total_photons()), &input).unwrap();
        assert!(mean_k.norm() < 1e-10);
        let phi = rng.gen_range(0.1..3.0);
        let cfi = classical_fisher(&input, phi);
        assert!((cfi - var_k).abs() / var_k < 1e-5, "trial {trial}: {cfi} vs {var_k}");
        let nd = classical_fisher_nd_only(&input, phi);
        assert!(nd >= 0.0 && nd <= cfi * (1.0 + 1e-9));
        for _ in 0..2 {
            let theta = rng.gen_range(0.0..6.3);
            let rotated = classical_fisher(&rotate_common(&input, theta), phi);
            assert!((rotated - cfi).abs() <= 1e-8 * cfi.max(1.0));
        }
    }
}

#[test]
fn complex_inputs_can_fall_below_qfi() {
    // Real coefficients are what make the equality hold.
    let coh = make_coherent(Complex64::new(1.5, 0.0), TruncationPolicy::for_mean(2.25)).unwrap();
    let sq = make_squeezed_vacuum(0.6, TruncationPolicy::for_squeezed(0.6, 1e-13)).unwrap();
    let rotated = DVector::from_fn(sq.dim(), |n, _| sq.amps()[n] * Complex64::from_polar(1.0, 0.5 * n as f64));
    let input = tensor(&coh, &ModeState::from_amplitudes(rotated).unwrap());
    let qfi = qfi_from_covariance(&input).f_dd;
    let cfi = classical_fisher(&input, 0.8);
    assert!(cfi < qfi * (1.0 - 1e-3), "{cfi} vs {qfi}");
}

fn skellam_fisher(alpha_sq: f64, phi: f64) -> f64 {
    let pmf = |phi: f64, d: i64| {
        let (m1, m2) = (alpha_sq * (phi / 2.0).cos().powi(2), alpha_sq * (phi / 2.0).sin().powi(2));
        let pois = |mu: f64, n: i64| {
            if mu == 0.0 {
                return if n == 0 { 1.0 } else { 0.0 };
            }
            (-mu + n as f64 * mu.ln() - ln_fact(n)).exp()
        };
        (0..80).filter(|&n2| d + n2 >= 0).map(|n2| pois(m1, d + n2) * pois(m2, n2)).sum::<f64>()
    };
    let h = 1e-5;
    (-40..=40)
        .map(|d| {
            let p = pmf(phi, d);
            let dp = (pmf(phi + h, d) - pmf(phi - h, d)) / (2.0 * h);
            if p > 1e-300 { dp * dp / p } else { 0.0 }
        })
        .sum()
}

#[test]
fn nd_marginal_of_coherent_input_is_skellam() {
    let input = tensor(
        &make_coherent(Complex64::new(2.0, 0.0), TruncationPolicy::for_mean(4.0)).unwrap(),
        &ModeState::vacuum(3),
    );
    let model = CountModel::new(&input);
    for &phi in &[0.4, 1.0, 2.0, 2.8] {
        let want = skellam_fisher(4.0, phi);
        assert!((model.fisher_nd_only(phi) - want).abs() < 1e-6 * want.max(1.0), "phi {phi}");
        assert!((model.fisher(phi) - 4.0).abs() < 1e-6);
    }
}
