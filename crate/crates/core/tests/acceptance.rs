//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Tolerances that are not fixed by the criteria themselves were frozen from
//! independent high-precision reference computations; the reference values
//! are quoted next to each bound.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stickbreak::expansions::{de_haan_estimate, expand_loggamma_m, expand_uniform_s2, r_remainder, Argument};
use stickbreak::montecarlo::{mc_mean_kn, McConfig, McResult};
use stickbreak::occupancy::{expected_kn, expected_kn_given_p, phi, poissonization_gap, poissonization_gap_given_p};
use stickbreak::quadrature::{graded_breakpoints, Adaptive};
use stickbreak::specialfn::{f_cap_excess, f_t, lambert_w, lambert_wm1_two_term, one_minus_f};
use stickbreak::tail_measure::{m_by_bisection_s3, m_given_p_s3, nu_arrow, nu_arrow_given_p, nu_arrow_given_p_scan};
use stickbreak::{LambertBranch, SuccessPrior, SuccessProbability, WeightFamily, EULER_GAMMA};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn sp(p: f64) -> SuccessProbability {
    SuccessProbability::new(p).expect("valid p")
}

fn s(s: u32) -> WeightFamily {
    WeightFamily::new(s).expect("valid s")
}

/// `|a_i|` strictly decreasing along the sequence.
fn strictly_decreasing_abs(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1].abs() < w[0].abs())
}

fn fmt_seq(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn decades(from: i32, to: i32, step: i32) -> Vec<f64> {
    (from..=to).step_by(step as usize).map(|k| 10f64.powi(k)).collect()
}

fn f_properties() -> Outcome {
    let est = Adaptive::with_tolerances(1e-13, 1e-13).integrate(
        |t| one_minus_f(t).unwrap_or(1.0),
        &graded_breakpoints(1e-30, 4.0, 1.0, 60.0),
    );
    let integral = est.value + 0.5 * (-60f64).exp();
    let gap = (integral - EULER_GAMMA).abs();
    ensure(gap <= 1e-8, || {
        format!("integral of 1-f = {integral:.15}, |gap| = {gap:.3e}")
    })?;

    let mut band = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=250 {
        let t = 15.0 + 25.0 * i as f64 / 250.0;
        let v = one_minus_f(t).map_err(err)? * t.exp();
        band = (band.0.min(v), band.1.max(v));
    }
    ensure(band.0 >= 0.45 && band.1 <= 0.55, || {
        format!("(1-f)e^t range [{}, {}] on [15, 40]", band.0, band.1)
    })?;

    let n = 10_000;
    let (lo, hi) = (1e-12f64.ln(), 50f64.ln());
    let mut prev = 0.0;
    for i in 0..n {
        let t = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
        let v = f_t(t).map_err(err)?;
        ensure(v >= prev, || format!("f decreases at t = {t}"))?;
        prev = v;
    }
    Ok(format!(
        "|int(1-f) - gamma| = {gap:.1e}, (1-f)e^t in [{:.4}, {:.4}]",
        band.0, band.1
    ))
}

fn f_cap_expansion() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..=350 {
        let x = 5.0 + 35.0 * i as f64 / 350.0;
        let excess = f_cap_excess(x).map_err(err)?;
        let ratio = excess.abs() / (2.0 * (-x).exp());
        ensure(ratio <= 1.0, || {
            format!("|F(x) - (x - gamma)| = {excess:e} > 2e^-x at x = {x}")
        })?;
        worst = worst.max(ratio);
    }
    Ok(format!("max |F(x) - (x - gamma)| / 2e^-x = {worst:.4}"))
}

fn poissonization() -> Outcome {
    let eps = 1e-7;
    let ns: Vec<u64> = (1..=6).map(|k| 10u64.pow(k)).collect();
    let mut rows = 0;
    let mut worst: f64 = 0.0;
    let mut check = |label: String, gap: f64, bound: f64| -> Result<(), String> {
        rows += 1;
        let limit = bound + 4.0 * eps;
        worst = worst.max(gap / limit);
        ensure(gap <= limit, || format!("{label}: gap {gap:e} > {limit:e}"))
    };
    for fam in [s(2), s(3)] {
        for p in [0.1, 0.5, 0.9] {
            for &n in &ns {
                let (gap, bound) = poissonization_gap_given_p(fam, sp(p), n, eps).map_err(err)?;
                check(format!("s={} p={p} n={n}", fam.s()), gap, bound)?;
            }
        }
        for prior in [SuccessPrior::Uniform, SuccessPrior::LogGamma(1)] {
            for &n in &ns {
                let (gap, bound) = poissonization_gap(prior, fam, n, eps).map_err(err)?;
                check(format!("s={} {prior:?} n={n}", fam.s()), gap, bound)?;
            }
        }
    }
    Ok(format!("{rows} rows, max gap/bound = {worst:.3}"))
}

// Limit of the threshold residual from the reference computation: 1.0290529699.
const UNIFORM_RESIDUAL_BAND: f64 = 1.01;
const UNIFORM_RESIDUAL_TAIL_GROWTH: f64 = 1.001;

fn uniform_geometric() -> Outcome {
    let xs = decades(-12, -4, 1);
    let mut residuals = Vec::new();
    for &x in xs.iter().rev() {
        residuals.push(expand_uniform_s2(Argument::Threshold(x), 1e-7).map_err(err)?.residual);
    }
    let spread = |r: &[f64]| {
        let max = r.iter().fold(0f64, |a, v| a.max(v.abs()));
        let min = r.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        max / min
    };
    let all = spread(&residuals);
    let tail = spread(&residuals[residuals.len() - 3..]);
    ensure(
        all <= UNIFORM_RESIDUAL_BAND && tail <= UNIFORM_RESIDUAL_TAIL_GROWTH,
        || format!("residual spread {all} (tail {tail}) over {}", fmt_seq(&residuals)),
    )?;

    let ts = decades(6, 14, 1);
    let mut errors = Vec::new();
    for &t in &ts {
        let value = phi(SuccessPrior::Uniform, s(2), t, 1e-7).map_err(err)?;
        errors.push(value / (0.5 * t.ln().powi(2)) - 1.0);
    }
    ensure(strictly_decreasing_abs(&errors), || {
        format!("Phi/(L^2/2) - 1 not decreasing: {}", fmt_seq(&errors))
    })?;
    Ok(format!(
        "residual {:.6} (max/min - 1 = {:.1e}); Phi/(L^2/2) - 1: {}",
        residuals.last().copied().unwrap_or(f64::NAN),
        all - 1.0,
        fmt_seq(&errors)
    ))
}

fn loggamma_two_terms() -> Outcome {
    let mut summary = Vec::new();
    for m in [1u32, 2] {
        let mut normalized = Vec::new();
        for t in decades(8, 14, 2) {
            normalized.push(
                expand_loggamma_m(m, Argument::PoissonTime(t), 1e-7)
                    .map_err(err)?
                    .normalized_residual,
            );
        }
        ensure(strictly_decreasing_abs(&normalized), || {
            format!("m={m}: normalized residuals {}", fmt_seq(&normalized))
        })?;
        summary.push(format!("m={m} {}", fmt_seq(&normalized)));
    }
    Ok(summary.join("; "))
}

fn de_haan_constants() -> Outcome {
    let x = 1e-12;
    let cases = [
        (SuccessPrior::Uniform, 1, 1.0, 0.10),
        (SuccessPrior::LogGamma(1), 2, -0.5, 0.10),
        (SuccessPrior::LogGamma(2), 3, 1.0 / 6.0, 0.15),
    ];
    let mut summary = Vec::new();
    for (prior, power, target, tol) in cases {
        let c = de_haan_estimate(
            |y| Ok(nu_arrow(prior, s(2), y)?.value),
            x,
            2.0,
            |y: f64| y.ln().powi(power),
        )
        .map_err(err)?;
        let rel = (c / target - 1.0).abs();
        ensure(rel <= tol, || format!("{prior:?}: c = {c}, target {target}"))?;
        summary.push(format!("{prior:?} c={c:.4}"));
    }
    Ok(summary.join(", "))
}

fn lambert_layer() -> Outcome {
    let principal = [-0.36, -0.3, -0.2, -0.1, -1e-3, -1e-8, 1e-8, 0.5, 1.0, 10.0, 1e3, 1e100];
    let lower = [
        -0.3678, -0.36, -0.3, -0.2, -0.1, -1e-2, -1e-3, -1e-5, -1e-8, -1e-12, -1e-50, -1e-300,
    ];
    let mut worst: f64 = 0.0;
    for (branch, grid) in [
        (LambertBranch::Principal, &principal),
        (LambertBranch::MinusOne, &lower),
    ] {
        for &z in grid.iter() {
            let w = lambert_w(branch, z).map_err(err)?;
            let defect = ((w * w.exp() - z) / z).abs();
            ensure(defect <= 1e-12, || format!("{branch:?} z={z}: defect {defect:e}"))?;
            worst = worst.max(defect);
        }
    }
    let mut errors = Vec::new();
    for k in (2..=12).step_by(2) {
        let z = -(10f64.powi(-k));
        let exact = lambert_w(LambertBranch::MinusOne, z).map_err(err)?;
        errors.push((lambert_wm1_two_term(z).map_err(err)? / exact - 1.0).abs());
    }
    ensure(strictly_decreasing_abs(&errors), || {
        format!("two-term errors {}", fmt_seq(&errors))
    })?;
    Ok(format!(
        "24 round trips, max defect {worst:.1e}; two-term errors {}",
        fmt_seq(&errors)
    ))
}

fn s3_inversion() -> Outcome {
    let fam = s(3);
    let (mut worst_rel, mut worst_abs): (f64, f64) = (0.0, 0.0);
    let mut points = 0;
    for i in 1..=19 {
        let p = sp(0.05 * i as f64);
        let w1 = 0.5 * p.p() * (1.0 + p.p());
        for k in 0..=10 {
            let x = w1 * 10f64.powi(-k);
            let m = m_given_p_s3(x, p).map_err(err)?;
            let rel = (fam.weight_at(p, m + 1.0) / x - 1.0).abs();
            let oracle = m_by_bisection_s3(x, p).map_err(err)?;
            let abs = (m - oracle).abs();
            ensure(rel <= 1e-10 && abs <= 1e-9, || {
                format!("p={} x={x:e}: m={m}, oracle={oracle}, rel={rel:e}", p.p())
            })?;
            worst_rel = worst_rel.max(rel);
            worst_abs = worst_abs.max(abs);
            points += 1;
        }
    }
    Ok(format!(
        "{points} points, max rel {worst_rel:.1e}, max |m - bisection| {worst_abs:.1e}"
    ))
}

fn negbin_difference() -> Outcome {
    let mut errors = Vec::new();
    for t in decades(6, 16, 2) {
        let d = phi(SuccessPrior::Uniform, s(3), t, 1e-7).map_err(err)?
            - phi(SuccessPrior::Uniform, s(2), t, 1e-7).map_err(err)?;
        let l = t.ln();
        errors.push(d / (l * l.ln()) - 1.0);
    }
    ensure(strictly_decreasing_abs(&errors), || {
        format!("(Phi3 - Phi2)/(L log L) - 1: {}", fmt_seq(&errors))
    })?;
    let mut rel = Vec::new();
    for x in decades(1, 4, 1) {
        rel.push(r_remainder(x).map_err(err)? / x);
    }
    ensure(strictly_decreasing_abs(&rel), || {
        format!("r remainder / x: {}", fmt_seq(&rel))
    })?;
    Ok(format!(
        "ratio - 1: {}; r remainder / x: {}",
        fmt_seq(&errors),
        fmt_seq(&rel)
    ))
}

fn monte_carlo() -> Outcome {
    let n = 1000;
    let base = |prior, family| McConfig {
        n,
        reps: 10_000,
        seed: 20_240_601,
        prior,
        family,
    };
    let mut worst: f64 = 0.0;
    for prior in [
        SuccessPrior::Uniform,
        SuccessPrior::LogGamma(1),
        SuccessPrior::LogGamma(2),
    ] {
        for fam in [s(2), s(3)] {
            let mc = mc_mean_kn(&base(prior, fam)).map_err(err)?;
            let exact = expected_kn(prior, fam, n, 1e-7).map_err(err)?;
            let z = (mc.mean_kn - exact).abs() / mc.std_error;
            ensure(z <= 3.0, || {
                format!(
                    "{prior:?} s={}: MC {} +- {}, exact {exact}",
                    fam.s(),
                    mc.mean_kn,
                    mc.std_error
                )
            })?;
            worst = worst.max(z);
        }
    }
    let config = base(SuccessPrior::Uniform, s(3));
    let bits = |r: &McResult| (r.mean_kn.to_bits(), r.std_error.to_bits());
    let reference = mc_mean_kn(&config).map_err(err)?;
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(err)?;
        let rerun = pool.install(|| mc_mean_kn(&config)).map_err(err)?;
        ensure(bits(&rerun) == bits(&reference), || {
            format!("rerun with {threads} threads differs")
        })?;
    }
    Ok(format!(
        "6 configs, max |MC - exact|/SE = {worst:.2}; bitwise identical on 1 and 4 threads"
    ))
}

fn small_cases() -> Outcome {
    for prior in [
        SuccessPrior::Uniform,
        SuccessPrior::LogGamma(1),
        SuccessPrior::LogGamma(3),
        SuccessPrior::LogGammaRho(0.5),
    ] {
        for fam in [s(2), s(3), s(4)] {
            let v = expected_kn(prior, fam, 1, 1e-7).map_err(err)?;
            ensure(v == 1.0, || format!("E(K_1) = {v} for {prior:?} s={}", fam.s()))?;
            for p in [1e-9, 0.3, 0.999] {
                let v = expected_kn_given_p(fam, sp(p), 1, 1e-7).map_err(err)?;
                ensure(v == 1.0, || format!("E(K_1 | p={p}) = {v}"))?;
            }
        }
    }
    let k2 = expected_kn_given_p(s(2), sp(0.5), 2, 1e-9).map_err(err)?;
    ensure((k2 - 5.0 / 3.0).abs() <= 1e-10, || format!("E(K_2 | p=0.5) = {k2}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let fam = s(rng.random_range(2..=3));
        let p = sp(rng.random_range(0.001..0.999));
        let x = rng.random_range(-12.0f64..-0.01).exp();
        let fast = nu_arrow_given_p(fam, p, x).map_err(err)?;
        let scan = nu_arrow_given_p_scan(fam, p, x).map_err(err)?;
        ensure(fast == scan, || {
            format!("s={} p={} x={x:e}: {fast} vs scan {scan}", fam.s(), p.p())
        })?;
    }
    Ok(format!(
        "E(K_1) = 1 exactly; E(K_2 | 1/2) - 5/3 = {:.1e}; 1000 counts match the scan",
        k2 - 5.0 / 3.0
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "f properties",
            budget: Duration::from_secs(1),
            run: f_properties,
        },
        Criterion {
            id: 2,
            name: "F expansion",
            budget: Duration::from_secs(1),
            run: f_cap_expansion,
        },
        Criterion {
            id: 3,
            name: "Poissonization bound",
            budget: Duration::from_secs(30),
            run: poissonization,
        },
        Criterion {
            id: 4,
            name: "uniform prior, s=2",
            budget: Duration::from_secs(60),
            run: uniform_geometric,
        },
        Criterion {
            id: 5,
            name: "log-gamma two-term expansion",
            budget: Duration::from_secs(120),
            run: loggamma_two_terms,
        },
        Criterion {
            id: 6,
            name: "de Haan constants",
            budget: Duration::from_secs(30),
            run: de_haan_constants,
        },
        Criterion {
            id: 7,
            name: "Lambert W",
            budget: Duration::from_secs(1),
            run: lambert_layer,
        },
        Criterion {
            id: 8,
            name: "s=3 inversion",
            budget: Duration::from_secs(5),
            run: s3_inversion,
        },
        Criterion {
            id: 9,
            name: "s=3 minus s=2 growth",
            budget: Duration::from_secs(120),
            run: negbin_difference,
        },
        Criterion {
            id: 10,
            name: "Monte Carlo consistency",
            budget: Duration::from_secs(60),
            run: monte_carlo,
        },
        Criterion {
            id: 11,
            name: "exact small cases",
            budget: Duration::from_secs(5),
            run: small_cases,
        },
    ];
    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("over time budget {:?}: {detail}", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {} ({:.2?}): {detail}", c.id, c.name, elapsed),
            Err(reason) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {} ({:.2?}): {reason}", c.id, c.name, elapsed);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
