//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the summary is always
//! printed. A single criterion can be selected with
//! `cargo test --test acceptance -- 4`. Failing criteria make the process
//! exit non-zero only when `DDLAB_ACCEPTANCE_STRICT=1`.

use std::time::{Duration, Instant};

use ddlab::cli::presets::{self, Fig2Preset};
use ddlab::cli::{run_sweep, CurveRow, GridValue, SweepConfig};
use ddlab::empirical::{
    child_seed, conditional_risk_projected, conditional_risk_ridge, haar_basis, sample_matrix, ProblemInstance, Sampler,
    TraceProbe, PROBE_NAMES,
};
use ddlab::numkernel::SymMatrix;
use ddlab::selfconsistent::{kappa_at_dof, kappa_isotropic_closed, kappa_of_lambda, kappa_two_dirac_closed};
use ddlab::spectrum::{make_isotropic, make_two_dirac, SignalMeasure, Spectrum};
use ddlab::theory::{minnorm_risk, rp_risk};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn within_budget(elapsed: Duration, limit: Option<Duration>) -> bool {
    limit.is_none_or(|l| elapsed < l)
}

fn criterion_1() -> Outcome {
    let mut worst_iso = 0.0f64;
    let lambdas = [0.0, 1e-3, 1e-2, 1e-1, 1.0, 3.0, 10.0];
    let n = 1000;
    let mut count = 0;
    for gamma in [0.5, 1.0, 2.0] {
        let spec = make_isotropic((gamma * n as f64) as usize, 1.0).unwrap();
        for &lambda in &lambdas {
            if gamma == 1.0 && lambda == 0.0 {
                continue;
            }
            let numeric = kappa_of_lambda(&spec, n, lambda).unwrap().kappa;
            let closed = kappa_isotropic_closed(1.0, gamma, lambda).unwrap();
            worst_iso = worst_iso.max(rel(numeric, closed));
            count += 1;
        }
    }
    let spec = make_two_dirac(2000, 0.5, 1.0, 4.0).unwrap();
    let mut worst_td = 0.0f64;
    for k in 1..=20 {
        let delta = 1.9 * k as f64 / 20.0;
        let closed = kappa_two_dirac_closed(0.5, 0.5, 1.0, 4.0, 2.0, delta).unwrap();
        let numeric = kappa_at_dof(&spec, delta * n as f64).unwrap().kappa;
        worst_td = worst_td.max(rel(numeric, closed));
    }
    outcome(
        count == 20 && worst_iso <= 1e-9 && worst_td <= 1e-8,
        format!("{count} isotropic points, worst rel {worst_iso:.2e}; 20 two-atom points, worst rel {worst_td:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let spec = make_isotropic(2000, 1.0).unwrap();
    let k0 = kappa_of_lambda(&spec, 1000, 0.0).unwrap().kappa;
    let iso = make_isotropic(400, 1.0).unwrap();
    let sig = SignalMeasure::uniform(&iso, 1.0).unwrap();
    let rp = rp_risk(&iso, &sig, 200, 100, 1.0).unwrap().variance;
    let small = make_isotropic(100, 1.0).unwrap();
    let ols = minnorm_risk(&small, &SignalMeasure::uniform(&small, 1.0).unwrap(), 200, 1.0).unwrap().variance;
    outcome(
        (k0 - 1.0).abs() <= 1e-10 && rp == 1.0 && ols == 1.0,
        format!("kappa(0) = {k0}, projection variance = {rp}, OLS variance = {ols}"),
    )
}

fn criterion_3() -> Outcome {
    let (n, d, draws) = (60, 20, 2000);
    let inst = ProblemInstance::random_normalized(n, 1.0, vec![1.0; d], false, 3).unwrap();
    let v: Vec<f64> = (0..draws)
        .map(|r| {
            let x = inst.sample_design(Sampler::Gaussian, child_seed(33, &[r]));
            conditional_risk_ridge(&inst, &x, 0.0).unwrap().variance
        })
        .collect();
    let mean = v.iter().sum::<f64>() / draws as f64;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64).sqrt();
    let se = sd / (draws as f64).sqrt();
    let target = d as f64 / (n - d - 1) as f64;
    outcome(
        (mean - target).abs() <= 3.0 * se,
        format!("mean {mean:.5} vs {target:.5}, {:.2} standard errors", (mean - target).abs() / se),
    )
}

fn criterion_4() -> Outcome {
    let cases: [(&str, usize, usize, Sampler); 2] =
        [("isotropic", 1500, 1500, Sampler::Gaussian), ("two-atom", 1000, 2000, Sampler::Rademacher)];
    let lambdas = [0.1, 1.0];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, n, d, sampler) in cases {
        let eigs: Vec<f64> = if name == "isotropic" {
            vec![1.0; d]
        } else {
            (0..d).map(|i| if i < d / 2 { 1.0 } else { 4.0 }).collect()
        };
        let inst = ProblemInstance::random_normalized(n, 1.0, eigs, false, 17).unwrap();
        let a = SymMatrix::identity(d);
        let b = inst.covariance();
        // gaps[lambda][probe] over seeds
        let mut gaps = vec![vec![Vec::new(); PROBE_NAMES.len()]; lambdas.len()];
        for seed in 0..10u64 {
            let x = inst.sample_design(sampler, child_seed(404, &[n as u64, seed]));
            let probe = TraceProbe::new(&inst, &x, &a, &b).unwrap();
            for (li, &lambda) in lambdas.iter().enumerate() {
                for (pi, g) in probe.at(lambda).unwrap().iter().enumerate() {
                    gaps[li][pi].push(g.rel_gap());
                }
            }
        }
        let mut worst_max = 0.0f64;
        let mut worst_median = 0.0f64;
        for per_lambda in &gaps {
            for per_probe in per_lambda {
                let mut v = per_probe.clone();
                v.sort_by(f64::total_cmp);
                let median = 0.5 * (v[4] + v[5]);
                worst_max = worst_max.max(v[9]);
                worst_median = worst_median.max(median);
            }
        }
        pass &= worst_max <= 0.05 && worst_median <= 0.02;
        detail.push(format!("{name}: max gap {:.3}%, worst median {:.3}%", 100.0 * worst_max, 100.0 * worst_median));
    }
    outcome(pass, detail.join("; "))
}

/// Empirical means against theory at non-divergent points, with tolerance
/// `max(5% relative, 1.5 standard errors)`. Returns the failing points.
fn tracking_failures(rows: &[CurveRow], n: usize) -> (usize, Vec<String>) {
    let mut checked = 0;
    let mut failures = Vec::new();
    for r in rows {
        let GridValue::M(m) = r.grid else { continue };
        if (m as f64 - n as f64).abs() < n as f64 / 10.0 {
            continue;
        }
        checked += 1;
        let used = r.reps_used.unwrap_or(0) as f64;
        for (what, th, mean, sd) in [
            ("bias", r.bias_theory, r.bias_emp_mean, r.bias_emp_std),
            ("variance", r.var_theory, r.var_emp_mean, r.var_emp_std),
        ] {
            let (Some(mean), Some(sd)) = (mean, sd) else {
                failures.push(format!("m={m} {what}: no empirical value"));
                continue;
            };
            let tol = (0.05 * th.abs()).max(1.5 * sd / used.sqrt());
            if (mean - th).abs() > tol {
                failures.push(format!("m={m} {what}: {mean:.4} vs {th:.4} (tol {tol:.4})"));
            }
        }
    }
    (checked, failures)
}

fn argmax_var(rows: &[CurveRow]) -> usize {
    let best = rows
        .iter()
        .filter(|r| r.var_emp_mean.is_some())
        .max_by(|a, b| a.var_emp_mean.unwrap().total_cmp(&b.var_emp_mean.unwrap()))
        .unwrap();
    match best.grid {
        GridValue::M(m) => m,
        GridValue::Lambda(_) => unreachable!(),
    }
}

fn nearest_grid(rows: &[CurveRow], n: usize) -> usize {
    rows.iter()
        .filter_map(|r| match r.grid {
            GridValue::M(m) => Some(m),
            GridValue::Lambda(_) => None,
        })
        .min_by_key(|&m| m.abs_diff(n))
        .unwrap()
}

fn empirical_figure(cfg: &SweepConfig) -> (Vec<CurveRow>, Outcome) {
    let out = run_sweep(cfg).unwrap();
    let (checked, failures) = tracking_failures(&out.rows, cfg.n);
    let peak = argmax_var(&out.rows);
    let nearest = nearest_grid(&out.rows, cfg.n);
    let mut detail = format!(
        "{checked} grid points, {} tolerance failures, empirical variance peaks at m = {peak}",
        failures.len()
    );
    if !failures.is_empty() {
        detail.push_str(&format!(" [{}]", failures.join("; ")));
    }
    let pass = failures.is_empty() && peak == nearest;
    (out.rows, outcome(pass, detail))
}

fn criterion_5() -> Outcome {
    empirical_figure(&presets::fig4_config()).1
}

/// Theory bias of the instance on every `m` in `1..n`.
fn under_bias_curve(cfg: &SweepConfig) -> Vec<f64> {
    let inst = cfg.instance(false).unwrap();
    let (spec, sig) = (inst.spectrum().unwrap(), inst.signal().unwrap());
    (1..cfg.n).map(|m| rp_risk(&spec, &sig, cfg.n, m, cfg.sigma_noise).unwrap().bias).collect()
}

fn criterion_6() -> Outcome {
    let (_, emp) = empirical_figure(&presets::fig5_config());
    let iso = under_bias_curve(&presets::fig5_config());
    let monotone = iso.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    let inv = under_bias_curve(&presets::fig4_config());
    let (imin, _) = inv.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let interior = imin > 0 && imin + 1 < inv.len() && inv[0] > inv[imin] && inv[inv.len() - 1] > inv[imin];
    outcome(
        emp.pass && monotone && interior,
        format!(
            "{}; isotropic bias monotone: {monotone}; 1/k bias minimum at m = {} (interior: {interior})",
            emp.detail,
            imin + 1
        ),
    )
}

fn criterion_7() -> Outcome {
    let cfg = presets::fig1_config();
    let theory_cfg = SweepConfig { mode: ddlab::cli::Mode::Theory, ..cfg.clone() };
    let theory = run_sweep(&theory_cfg).unwrap().rows;
    let n = cfg.n;
    let total_at = |m: usize| theory.iter().find(|r| r.grid == GridValue::M(m)).unwrap().total_theory;
    let finite: Vec<f64> = theory.iter().map(|r| r.total_theory).filter(|t| t.is_finite()).collect();
    let minimum = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let best_under = theory
        .iter()
        .filter(|r| matches!(r.grid, GridValue::M(m) if m < n))
        .map(|r| r.total_theory)
        .fold(f64::INFINITY, f64::min);
    let at_4n = total_at(4 * n);
    let diverges = total_at(n).is_infinite() && total_at(n - 10) >= 10.0 * minimum && total_at(n + 10) >= 10.0 * minimum;
    let shape = at_4n < best_under && diverges;

    let mut emp_cfg = cfg;
    emp_cfg.m_grid = emp_cfg.m_grid.iter().copied().filter(|m| m % 20 == 0).collect();
    let (_, emp) = empirical_figure(&emp_cfg);
    outcome(
        shape && emp.pass,
        format!(
            "total at 4n {at_4n:.4} vs best under-parameterized {best_under:.4}; m = n +- 10 give {:.3} and {:.3} vs minimum {minimum:.4}; {}",
            total_at(n - 10),
            total_at(n + 10),
            emp.detail
        ),
    )
}

fn criterion_8() -> Outcome {
    let curves = presets::run_fig2(&Fig2Preset::default()).unwrap();
    let gaps: Vec<(usize, f64, f64)> = curves.iter().map(|c| {
        let (b, v) = c.average_abs_gaps();
        (c.n, b, v)
    }).collect();
    let decreasing = gaps.windows(2).all(|w| w[1].1 < w[0].1 && w[1].2 < w[0].2);
    let text: Vec<String> = gaps.iter().map(|(n, b, v)| format!("n = {n}: bias {b:.4}, variance {v:.4}")).collect();
    outcome(decreasing, text.join("; "))
}

fn random_spectrum(rng: &mut ChaCha8Rng) -> (Spectrum, SignalMeasure) {
    let k = rng.random_range(1..=5);
    let d = rng.random_range(20..400);
    let w = d as f64 / k as f64;
    let atoms: Vec<(f64, f64)> = (0..k).map(|_| (rng.random_range(0.05..5.0), w)).collect();
    let masses: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..2.0)).collect();
    (Spectrum::new(d, atoms).unwrap(), SignalMeasure::new(masses).unwrap())
}

/// Mean excess risk of `theta_hat = L (X theta + eps)` over sampled noise,
/// with its standard error.
fn sampled_risk(
    rng: &mut ChaCha8Rng,
    sigma_half: &DMatrix<f64>,
    x: &DMatrix<f64>,
    theta: &DVector<f64>,
    l: &DMatrix<f64>,
    sigma: f64,
    draws: usize,
) -> (f64, f64) {
    let n = x.nrows();
    let clean = x * theta;
    let m_l = sigma_half * l;
    let offset = sigma_half * (l * &clean - theta);
    let mut sum = 0.0;
    let mut sq = 0.0;
    let mut eps = DVector::zeros(n);
    for _ in 0..draws {
        for e in eps.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *e = sigma * g;
        }
        let r = (&offset + &m_l * &eps).norm_squared();
        sum += r;
        sq += r * r;
    }
    let mean = sum / draws as f64;
    let var = (sq / draws as f64 - mean * mean) * draws as f64 / (draws - 1) as f64;
    (mean, (var.max(0.0) / draws as f64).sqrt())
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |what: &str, i: usize| failures.push(format!("{what} #{i}"));
    let mut skipped = 0;
    for i in 0..100 {
        let (s, v) = random_spectrum(&mut rng);
        let n = rng.random_range(5..600);
        let l1 = rng.random_range(0.0..3.0);
        let l2 = l1 + rng.random_range(1e-3..3.0);
        let (a, b) = (kappa_of_lambda(&s, n, l1).unwrap(), kappa_of_lambda(&s, n, l2).unwrap());
        if !a.diverged && !(a.kappa < b.kappa) {
            fail("kappa monotone", i);
        }
        for (sol, l) in [(a, l1), (b, l2)] {
            if !sol.diverged && !(sol.kappa >= l * (1.0 - 1e-12) && sol.kappa <= (l + s.trace() / n as f64) * (1.0 + 1e-12)) {
                fail("kappa bracket", i);
            }
        }
        let k = rng.random_range(0.0..50.0);
        if s.df2(k).unwrap() > s.df1(k).unwrap() * (1.0 + 1e-15) {
            fail("df2 <= df1", i);
        }
        let frac: f64 = rng.random_range(0.05..0.95);
        let n_over = ((s.d() as f64 * frac).round() as usize).clamp(1, s.d() - 1);
        let sigma = rng.random_range(0.0..2.0);
        let rp = rp_risk(&s, &v, n_over, 1_000_000_000 * n_over, sigma).unwrap();
        let mn = minnorm_risk(&s, &v, n_over, sigma).unwrap();
        if rel(rp.bias, mn.bias) > 1e-6 || rel(rp.variance, mn.variance) > 1e-6 {
            fail("projection limit", i);
        }

        // small instance with sampled noise
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=8);
        let m = rng.random_range(1..=8);
        let seed: u64 = rng.random();
        let eigs: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..3.0)).collect();
        let theta: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let basis = haar_basis(d, seed);
        let inst = ProblemInstance::from_eigen_coordinates(n, 0.8, Some(basis.clone()), eigs.clone(), &theta).unwrap();
        let half = &basis * DMatrix::from_diagonal(&DVector::from_iterator(d, eigs.iter().map(|e| e.sqrt()))) * basis.transpose();
        let x = inst.sample_design(Sampler::Gaussian, seed ^ 1);
        let sk = sample_matrix(d, m, Sampler::Gaussian, seed ^ 2);
        let xs = &x * &sk;
        let l_proj = &sk * xs.clone().pseudo_inverse(1e-10 * xs.norm()).unwrap();
        match conditional_risk_projected(&inst, &x, &sk) {
            Ok(risk) => {
                let (mean, se) = sampled_risk(&mut rng, &half, &x, inst.theta_star(), &l_proj, 0.8, 100_000);
                if (mean - risk.total()).abs() > 4.0 * se + 1e-12 {
                    fail("projected vs sampled noise", i);
                }
            }
            Err(_) => skipped += 1,
        }
        for lambda in [0.0, 0.1, 1.0] {
            let l = if lambda == 0.0 {
                x.clone().pseudo_inverse(1e-10 * x.norm()).unwrap()
            } else {
                (x.transpose() * &x + DMatrix::identity(d, d) * (n as f64 * lambda)).try_inverse().unwrap() * x.transpose()
            };
            match conditional_risk_ridge(&inst, &x, lambda) {
                Ok(risk) => {
                    let (mean, se) = sampled_risk(&mut rng, &half, &x, inst.theta_star(), &l, 0.8, 100_000);
                    if (mean - risk.total()).abs() > 4.0 * se + 1e-12 {
                        fail("ridge vs sampled noise", i);
                    }
                }
                Err(_) => skipped += 1,
            }
        }
        if d < n {
            let sk = sample_matrix(d, d + m, Sampler::Gaussian, seed ^ 3);
            let rp = conditional_risk_projected(&inst, &x, &sk).unwrap();
            let ols = conditional_risk_ridge(&inst, &x, 0.0).unwrap();
            if rel(rp.variance, ols.variance) > 1e-8 || (rp.bias - ols.bias).abs() > 1e-8 * (1.0 + inst.signal_energy()) {
                fail("collapse to OLS", i);
            }
        }
    }
    let n_fail = failures.len();
    outcome(
        n_fail == 0,
        format!("100 instances, {skipped} singular small-sample cases skipped, {n_fail} failures {failures:?}"),
    )
}

type Criterion = (usize, &'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let secs = Duration::from_secs;
    let criteria: [Criterion; 9] = [
        (1, "closed-form kappa", criterion_1, Some(secs(1))),
        (2, "point values", criterion_2, None),
        (3, "Gaussian OLS variance", criterion_3, Some(secs(60))),
        (4, "trace equivalents", criterion_4, Some(secs(300))),
        (5, "1/k spectrum bias and variance", criterion_5, Some(secs(600))),
        (6, "isotropic bias and variance", criterion_6, None),
        (7, "double descent", criterion_7, None),
        (8, "convergence in n", criterion_8, None),
        (9, "property suites", criterion_9, Some(secs(300))),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut all = true;
    let (mut ran, mut passed) = (0, 0);
    for (id, name, run, limit) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let timely = within_budget(elapsed, limit);
        let pass = out.pass && timely;
        all &= pass;
        ran += 1;
        passed += usize::from(pass);
        let budget = limit.map_or(String::new(), |l| format!(", budget {:.0} s", l.as_secs_f64()));
        println!(
            "criterion {id} {}: {name}: {} ({:.1} s{budget})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {passed} of {ran} criteria passed");
    let strict = std::env::var("DDLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && !all {
        std::process::exit(1);
    }
}
