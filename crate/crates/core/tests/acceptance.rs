//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, Matrix2};
use nogo_core::channels::{
    amplification, attenuation, classical_noise, is_entanglement_breaking, isotropic_classical_noise, measure_prepare,
    phase_conjugation, GaussianChannel,
};
use nogo_core::choi::lemma1_check;
use nogo_core::entanglement::{entanglement_degradation, finite_r_degradation, nu_minus, partial_transpose, ExtendedReal};
use nogo_core::search::{search, SearchConfig, SearchMethod};
use nogo_core::symplectic::{apply_symplectic, random_symplectic_with, symplectic_eigenvalues_general, tensor, CovarianceMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FINITE_R: f64 = 8.0;
const REL_TOL_FINITE_R: f64 = 1e-5;
const CLIP_TOL: f64 = 1e-9;
const EB_TOL: f64 = 1e-9;
const RATE_FACTOR: f64 = 2.0;
const TELEPORT_TOL: f64 = 1e-5;
const VIOLATION_TOL: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-8;
const SEARCH_BUDGET: usize = 2000;
const SEARCH_SEEDS: u64 = 10;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn attenuation_curve() -> Outcome {
    let mut worst = 0.0f64;
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    for k in 1..=9 {
        let eta = k as f64 / 10.0;
        let t = attenuation(eta).unwrap();
        let d = entanglement_degradation(&t).unwrap().d;
        let e2 = eta * eta;
        let formula = ((1.0 - e2) / (1.0 + e2)).powi(2);
        let finite = finite_r_degradation(&t, FINITE_R).unwrap().min(1.0);
        worst = worst.max(rel_err(finite, d)).max(rel_err(d, formula));
        monotone &= d < prev;
        prev = d;
    }
    outcome(
        worst < REL_TOL_FINITE_R && monotone,
        format!("max rel err {worst:.2e} (< {REL_TOL_FINITE_R:e}), monotone decreasing: {monotone}"),
    )
}

fn classical_noise_curve() -> Outcome {
    let mut worst = 0.0f64;
    let mut clip_ok = true;
    for det_n in [0.5, 1.0, 2.0, 4.0, 6.0, 9.0] {
        let t = isotropic_classical_noise(f64::sqrt(det_n)).unwrap();
        let d = entanglement_degradation(&t).unwrap().d;
        let finite = finite_r_degradation(&t, FINITE_R).unwrap().min(1.0);
        worst = worst.max(rel_err(finite, d)).max(rel_err(d, (det_n / 4.0).min(1.0)));
        if det_n >= 4.0 {
            clip_ok &= (d - 1.0).abs() <= CLIP_TOL && (finite - 1.0).abs() <= CLIP_TOL;
        }
    }
    outcome(
        worst < REL_TOL_FINITE_R && clip_ok,
        format!("max rel err {worst:.2e} (< {REL_TOL_FINITE_R:e}), D = 1 for det N >= 4: {clip_ok}"),
    )
}

/// Random `(M, N)` with `det M <= 0` and `det N >= (det M - 1)^2`.
fn random_eb_channel(rng: &mut ChaCha8Rng) -> GaussianChannel {
    let mut m: Matrix2<f64> = Matrix2::from_fn(|_, _| rng.random_range(-1.5..1.5));
    if m.determinant() > 0.0 {
        m.row_mut(0).neg_mut();
    }
    let floor = (m.determinant() - 1.0).abs();
    let t: f64 = rng.random_range(-1.0..1.0);
    let slack: f64 = rng.random_range(0.0..0.5);
    let (a, b) = (floor * t.exp(), floor * (-t).exp() * (1.0 + slack));
    let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let rot = Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
    let n = rot * Matrix2::new(a, 0.0, 0.0, b) * rot.transpose();
    GaussianChannel::new(m, (n + n.transpose()) * 0.5).unwrap()
}

fn entanglement_breaking() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut min_nu2 = f64::INFINITY;
    for _ in 0..20 {
        let t = random_eb_channel(&mut rng);
        assert!(t.det_m() <= 0.0 && is_entanglement_breaking(&t));
        for r in [1.0, 2.0, 4.0, 8.0] {
            min_nu2 = min_nu2.min(finite_r_degradation(&t, r).unwrap());
        }
    }
    outcome(
        min_nu2 >= 1.0 - EB_TOL,
        format!("min nu_-^2 over 20 channels x r in {{1,2,4,8}} = {min_nu2:.12} (>= 1 - {EB_TOL:e})"),
    )
}

fn limit_rate() -> Outcome {
    let t = attenuation(0.5).unwrap();
    let rs: Vec<f64> = (3..=8).map(f64::from).collect();
    let devs: Vec<f64> = rs
        .iter()
        .map(|&r| (finite_r_degradation(&t, r).unwrap() - 0.36).abs())
        .collect();
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    let logs: Vec<f64> = devs.iter().map(|d| d.ln()).collect();
    let rate = -slope(&rs, &logs);
    let ok = decreasing && (2.0 / RATE_FACTOR..=2.0 * RATE_FACTOR).contains(&rate);
    outcome(
        ok,
        format!("fitted decay rate {rate:.4} (expected 2 within factor {RATE_FACTOR}), decreasing: {decreasing}"),
    )
}

fn teleportation() -> Outcome {
    let family = [
        attenuation(0.3).unwrap(),
        attenuation(0.7).unwrap(),
        amplification(1.5).unwrap(),
        isotropic_classical_noise(1.0).unwrap(),
        classical_noise(Matrix2::new(2.0, 0.3, 0.3, 0.5)).unwrap(),
        phase_conjugation(1.0).unwrap(),
        measure_prepare(),
    ];
    let worst = family
        .iter()
        .map(|t| lemma1_check(t, FINITE_R).unwrap().residual)
        .fold(0.0, f64::max);
    let mut ratio_lo = f64::INFINITY;
    let mut ratio_hi = 0.0f64;
    for r in 3..=8 {
        let r = f64::from(r);
        let res = lemma1_check(&GaussianChannel::identity(), r).unwrap().residual;
        let ratio = res / (2.0 * (-2.0 * r).exp());
        ratio_lo = ratio_lo.min(ratio);
        ratio_hi = ratio_hi.max(ratio);
    }
    let scaling = ratio_lo >= 1.0 / RATE_FACTOR && ratio_hi <= RATE_FACTOR;
    outcome(
        worst < TELEPORT_TOL && scaling,
        format!(
            "max residual at r = 8: {worst:.2e} (< {TELEPORT_TOL:e}); identity residual / 2e^-2r in [{ratio_lo:.4}, {ratio_hi:.4}]"
        ),
    )
}

fn no_code_lowers_d() -> Outcome {
    let channels = [
        ("attenuation:0.3", attenuation(0.3).unwrap()),
        ("attenuation:0.5", attenuation(0.5).unwrap()),
        ("attenuation:0.7", attenuation(0.7).unwrap()),
        ("amplification:1.5", amplification(1.5).unwrap()),
        ("classical-noise det N = 1", isotropic_classical_noise(1.0).unwrap()),
        ("classical-noise det N = 3", isotropic_classical_noise(3f64.sqrt()).unwrap()),
    ];
    let mut runs = 0;
    let mut violations = Vec::new();
    let mut worst_skip = 0.0f64;
    let mut closest = f64::INFINITY;
    for (name, t) in &channels {
        for n in 1..=3 {
            for seed in 0..SEARCH_SEEDS {
                let cfg = SearchConfig::new(n, SEARCH_BUDGET, seed, SearchMethod::NelderMeadMultistart);
                let res = search(t, &cfg).unwrap();
                runs += 1;
                worst_skip = worst_skip.max(res.skipped_fraction());
                closest = closest.min(res.best_d - res.baseline_d);
                if res.violated || res.best_d < res.baseline_d - VIOLATION_TOL {
                    violations.push(format!(
                        "{name} n={n} seed={seed}: {}",
                        serde_json::to_string(&res).unwrap()
                    ));
                }
            }
        }
    }
    for v in &violations {
        eprintln!("violation: {v}");
    }
    outcome(
        violations.is_empty() && worst_skip < 0.01,
        format!(
            "{runs} runs, {} violations, min(best_D - baseline_D) = {closest:.3e}, max skipped fraction {worst_skip:.4}",
            violations.len()
        ),
    )
}

fn random_two_mode_state(rng: &mut ChaCha8Rng) -> CovarianceMatrix {
    let v1 = rng.random_range(1.0..4.0);
    let v2 = rng.random_range(1.0..4.0);
    let thermal = tensor(&CovarianceMatrix::thermal(1, v1).unwrap(), &CovarianceMatrix::thermal(1, v2).unwrap());
    let s = random_symplectic_with(2, 1.5, rng).unwrap();
    apply_symplectic(&s, &thermal).unwrap()
}

fn oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let g = random_two_mode_state(&mut rng);
        let closed = nu_minus(&g).unwrap();
        let pt: DMatrix<f64> = partial_transpose(g.matrix()).unwrap();
        let general = symplectic_eigenvalues_general(&pt)
            .unwrap()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((closed - general).abs() / general.max(1.0));
    }
    outcome(worst < ORACLE_TOL, format!("max deviation {worst:.2e} over 200 states (< {ORACLE_TOL:e})"))
}

fn capacity_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut corpus = vec![
        GaussianChannel::identity(),
        attenuation(0.3).unwrap(),
        attenuation(0.5).unwrap(),
        attenuation(0.7).unwrap(),
        amplification(1.5).unwrap(),
        amplification(3.0).unwrap(),
        isotropic_classical_noise(0.5).unwrap(),
        isotropic_classical_noise(2.0).unwrap(),
        isotropic_classical_noise(3.0).unwrap(),
        phase_conjugation(0.5).unwrap(),
        phase_conjugation(1.0).unwrap(),
        measure_prepare(),
    ];
    corpus.extend((0..20).map(|_| random_eb_channel(&mut rng)));
    let mut checked = 0;
    let mut eb = 0;
    let mut ok = true;
    for t in &corpus {
        let rep = entanglement_degradation(t).unwrap();
        checked += 1;
        let bound = rep.capacity_upper_bound();
        ok &= match bound {
            ExtendedReal::Infinite => rep.d == 0.0,
            ExtendedReal::Finite(b) => rep.d > 0.0 && (b - (-0.5 * rep.d.log2()).max(0.0)).abs() <= 1e-15,
        };
        if rep.entanglement_breaking {
            eb += 1;
            ok &= bound == ExtendedReal::Finite(0.0) && rep.d == 1.0;
        }
    }
    outcome(ok, format!("{checked} reports checked, {eb} entanglement-breaking with bound exactly 0"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("attenuation curve", attenuation_curve),
        ("classical noise curve", classical_noise_curve),
        ("entanglement-breaking branch", entanglement_breaking),
        ("finite-squeezing limit rate", limit_rate),
        ("teleportation equivalence", teleportation),
        ("no code lowers D", no_code_lowers_d),
        ("closed-form nu_- oracle", oracle),
        ("capacity bound", capacity_bound),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {name}: {} ({:.1}s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
