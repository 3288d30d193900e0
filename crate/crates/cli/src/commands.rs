use anyhow::{bail, Context};
use rayon::prelude::*;
use stickbreak::expansions::{
    de_haan_estimate, expand_fixed_p, expand_loggamma_m, expand_negbin_s3, expand_rho, expand_uniform_s2, Argument,
    ExpansionReport, POISSON_REFERENCE_ABOVE,
};
use stickbreak::montecarlo::{mc_mean_kn, McConfig};
use stickbreak::occupancy::{expected_kn, expected_kn_given_p, phi, phi_given_p, poissonization_gap_given_p};
use stickbreak::quadrature::{graded_breakpoints, Adaptive};
use stickbreak::specialfn::{f_cap_excess, lambert_w, one_minus_f};
use stickbreak::tail_measure::{m_by_bisection_s3, m_given_p_s3, m_of_x, nu_arrow};
use stickbreak::{LambertBranch, SuccessPrior, SuccessProbability, WeightFamily, EULER_GAMMA};

use crate::args::{Grid, Proposition, Settings};
use crate::table::{Cell, Table};

/// A finished table plus the names of any rows or checks that failed.
pub struct Report {
    pub table: Table,
    pub failures: Vec<String>,
}

pub fn weights(s: &Settings) -> anyhow::Result<Report> {
    let p = s.p.context("weights needs --p")?;
    if s.count == 0 {
        bail!("--count must be >= 1");
    }
    let mut table = Table::new(["j", "weight", "cumulative", "tail", "total"]);
    let mut cumulative = 0.0;
    for j in 1..=s.count {
        let w = s.family.weight(p, j)?;
        cumulative += w;
        let tail = s.family.tail_mass(p, j);
        table.push(vec![
            j.into(),
            w.into(),
            cumulative.into(),
            tail.into(),
            (cumulative + tail).into(),
        ]);
    }
    Ok(Report {
        table,
        failures: vec![],
    })
}

fn required_counts(grid: &Option<Grid>, command: &str) -> anyhow::Result<Vec<u64>> {
    let grid = grid.as_ref().with_context(|| format!("{command} needs --n-grid"))?;
    let ns = grid.as_counts()?;
    if ns[0] < 1 {
        bail!("sample sizes must be >= 1");
    }
    Ok(ns)
}

/// Rows are `|E(K_n) − Φ(n)| ≤ 2Φ(n)/n + 4ε`.
pub fn expect(s: &Settings) -> anyhow::Result<Report> {
    let ns = required_counts(&s.n_grid, "expect")?;
    let (family, prior, p, eps) = (s.family, s.prior, s.p, s.eps);
    let rows = ns
        .par_iter()
        .map(|&n| -> stickbreak::Result<(u64, f64, f64)> {
            let (exact, poissonized) = match p {
                Some(p) => (
                    expected_kn_given_p(family, p, n, eps)?,
                    phi_given_p(family, p, n as f64, eps)?,
                ),
                None => (expected_kn(prior, family, n, eps)?, phi(prior, family, n as f64, eps)?),
            };
            Ok((n, exact, poissonized))
        })
        .collect::<stickbreak::Result<Vec<_>>>()?;
    let mut table = Table::new(["n", "exact", "poissonized", "gap", "bound", "within_bound"]);
    let mut failures = vec![];
    for (n, exact, poissonized) in rows {
        let gap = (exact - poissonized).abs();
        let bound = 2.0 * poissonized / n as f64;
        let ok = gap <= bound + 4.0 * eps;
        if !ok {
            failures.push(format!("n={n}"));
        }
        table.push(vec![
            n.into(),
            exact.into(),
            poissonized.into(),
            gap.into(),
            bound.into(),
            ok.into(),
        ]);
    }
    Ok(Report { table, failures })
}

fn arguments(s: &Settings) -> anyhow::Result<Vec<Argument>> {
    let given = [&s.n_grid, &s.t_grid, &s.x_grid].iter().filter(|g| g.is_some()).count();
    if given != 1 {
        bail!("give exactly one of --n-grid, --t-grid, --x-grid");
    }
    if s.n_grid.is_some() {
        return Ok(required_counts(&s.n_grid, "expand")?
            .into_iter()
            .map(Argument::SampleSize)
            .collect());
    }
    if let Some(g) = &s.t_grid {
        return Ok(g.0.iter().map(|&t| Argument::PoissonTime(t)).collect());
    }
    let g = s.x_grid.as_ref().expect("one grid given");
    if g.0.iter().any(|&x| x >= 1.0) {
        bail!("thresholds must lie in (0, 1)");
    }
    Ok(g.0.iter().map(|&x| Argument::Threshold(x)).collect())
}

fn reference_method(prop: Proposition, argument: Argument, eps: f64) -> (&'static str, Cell) {
    match argument {
        Argument::Threshold(_) => ("tail-count", Cell::Empty),
        Argument::SampleSize(_) if prop == Proposition::FixedP => ("exact-given-p", eps.into()),
        Argument::SampleSize(n) if n as f64 <= POISSON_REFERENCE_ABOVE => ("exact", (2.0 * eps).into()),
        _ => ("poissonized", (2.0 * eps).into()),
    }
}

pub fn expand(prop: Proposition, s: &Settings) -> anyhow::Result<Report> {
    let args = arguments(s)?;
    let eps = s.eps;
    let compute: Box<dyn Fn(Argument) -> stickbreak::Result<ExpansionReport> + Sync> = match prop {
        Proposition::FixedP => {
            let p = s.p.context("fixed-p needs --p")?;
            if s.n_grid.is_none() {
                bail!("fixed-p needs --n-grid");
            }
            Box::new(move |a| match a {
                Argument::SampleSize(n) => expand_fixed_p(p, n, eps),
                _ => unreachable!("fixed-p takes sample sizes"),
            })
        }
        Proposition::UniformS2 => Box::new(move |a| expand_uniform_s2(a, eps)),
        Proposition::LoggammaM => match s.prior {
            SuccessPrior::LogGamma(m) => Box::new(move |a| expand_loggamma_m(m, a, eps)),
            _ => bail!("loggamma-m needs --prior loggamma:m"),
        },
        Proposition::Rho => match s.prior {
            SuccessPrior::LogGammaRho(rho) => Box::new(move |a| expand_rho(rho, a, eps)),
            _ => bail!("rho needs --prior rho:v"),
        },
        Proposition::NegbinS3 => Box::new(move |a| expand_negbin_s3(a, eps)),
    };
    let paired = prop == Proposition::NegbinS3;
    let rows = args
        .par_iter()
        .map(|&a| -> stickbreak::Result<(ExpansionReport, Option<f64>)> {
            let report = compute(a)?;
            let s2 = if paired {
                Some(expand_uniform_s2(a, eps)?.reference)
            } else {
                None
            };
            Ok((report, s2))
        })
        .collect::<stickbreak::Result<Vec<_>>>()?;

    let mut columns: Vec<String> = [
        "argument_kind",
        "argument",
        "log_scale",
        "reference",
        "reference_method",
        "predicted",
        "residual",
        "residual_scale",
        "normalized_residual",
        "ratio",
        "leading_ratio",
        "error_budget",
    ]
    .iter()
    .map(|c| c.to_string())
    .collect();
    columns.extend(rows[0].0.terms.iter().map(|t| format!("term:{}", t.label)));
    if paired {
        columns.extend([
            "reference_s2".into(),
            "difference".into(),
            "difference_over_LlogL".into(),
        ]);
    }
    columns.push("notes".into());
    let mut table = Table::new(columns);
    for (r, s2) in rows {
        let kind = match r.argument {
            Argument::SampleSize(_) => "n",
            Argument::PoissonTime(_) => "t",
            Argument::Threshold(_) => "x",
        };
        let argument = match r.argument {
            Argument::SampleSize(n) => Cell::Int(n),
            a => Cell::Float(a.value()),
        };
        let (method, budget) = reference_method(prop, r.argument, eps);
        let l = r.argument.log_scale();
        let leading = r.terms.first().map_or(f64::NAN, |t| t.value);
        let mut row = vec![
            kind.into(),
            argument,
            l.into(),
            r.reference.into(),
            method.into(),
            r.predicted_total.into(),
            r.residual.into(),
            r.residual_scale.into(),
            r.normalized_residual.into(),
            r.ratio().into(),
            (r.reference / leading).into(),
            budget,
        ];
        row.extend(r.terms.iter().map(|t| Cell::Float(t.value)));
        if let Some(s2) = s2 {
            let d = r.reference - s2;
            row.extend([s2.into(), d.into(), (d / (l * l.ln())).into()]);
        }
        row.push(r.notes.join("; ").into());
        table.push(row);
    }
    Ok(Report {
        table,
        failures: vec![],
    })
}

pub fn mc(s: &Settings) -> anyhow::Result<Report> {
    if s.p.is_some() {
        bail!("mc draws p from the prior; use --prior instead of --p");
    }
    let ns = required_counts(&s.n_grid, "mc")?;
    let mut table = Table::new([
        "n",
        "reps",
        "seed",
        "mean_kn",
        "std_error",
        "expected_kn",
        "z_score",
        "within_3se",
    ]);
    let mut failures = vec![];
    for n in ns {
        let config = McConfig {
            n,
            reps: s.reps,
            seed: s.seed,
            prior: s.prior,
            family: s.family,
        };
        let result = mc_mean_kn(&config)?;
        let exact = expected_kn(s.prior, s.family, n, s.eps)?;
        let diff = (result.mean_kn - exact).abs();
        let z = if result.std_error > 0.0 {
            diff / result.std_error
        } else {
            f64::NAN
        };
        let ok = diff <= 3.0 * result.std_error + 2.0 * s.eps;
        if !ok {
            failures.push(format!("n={n}"));
        }
        table.push(vec![
            n.into(),
            result.reps.into(),
            result.seed.into(),
            result.mean_kn.into(),
            result.std_error.into(),
            exact.into(),
            z.into(),
            ok.into(),
        ]);
    }
    Ok(Report { table, failures })
}

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

fn gamma_identity() -> f64 {
    let est = Adaptive::with_tolerances(1e-13, 1e-13).integrate(
        |t| one_minus_f(t).unwrap_or(1.0),
        &graded_breakpoints(1e-30, 4.0, 1.0, 60.0),
    );
    (est.value + 0.5 * (-60f64).exp() - EULER_GAMMA).abs()
}

fn checks() -> stickbreak::Result<Vec<Check>> {
    let mut out = vec![Check {
        name: "gamma_identity",
        value: gamma_identity(),
        tolerance: 1e-8,
    }];

    let mut band: f64 = 0.0;
    for i in 0..=100 {
        let t = 15.0 + 0.25 * i as f64;
        band = band.max((one_minus_f(t)? * t.exp() - 0.5).abs());
    }
    out.push(Check {
        name: "f_tail_band",
        value: band,
        tolerance: 0.05,
    });

    let mut excess: f64 = 0.0;
    for i in 0..=70 {
        let x = 5.0 + 0.5 * i as f64;
        excess = excess.max(f_cap_excess(x)?.abs() / (2.0 * (-x).exp()));
    }
    out.push(Check {
        name: "f_cap_expansion",
        value: excess,
        tolerance: 1.0,
    });

    let mut defect: f64 = 0.0;
    for z in [-0.36, -0.2, -1e-3, 0.5, 10.0, 1e6] {
        let w = lambert_w(LambertBranch::Principal, z)?;
        defect = defect.max(((w * w.exp() - z) / z).abs());
    }
    for z in [-0.36, -0.2, -1e-3, -1e-8, -1e-50, -1e-300] {
        let w = lambert_w(LambertBranch::MinusOne, z)?;
        defect = defect.max(((w * w.exp() - z) / z).abs());
    }
    out.push(Check {
        name: "lambert_round_trip",
        value: defect,
        tolerance: 1e-12,
    });

    let s3 = WeightFamily::new(3)?;
    let (mut rel, mut abs): (f64, f64) = (0.0, 0.0);
    for i in 1..=19 {
        let p = SuccessProbability::new(0.05 * i as f64)?;
        for k in 0..=10 {
            let x = 0.5 * p.p() * (1.0 + p.p()) * 10f64.powi(-k);
            let m = m_given_p_s3(x, p)?;
            rel = rel.max((s3.weight_at(p, m + 1.0) / x - 1.0).abs());
            abs = abs.max((m - m_by_bisection_s3(x, p)?).abs());
        }
    }
    out.push(Check {
        name: "s3_inversion_round_trip",
        value: rel,
        tolerance: 1e-10,
    });
    out.push(Check {
        name: "s3_inversion_vs_bisection",
        value: abs,
        tolerance: 1e-9,
    });

    let mut violation: f64 = 0.0;
    for family in [WeightFamily::geometric(), s3] {
        for x in [1e-3, 1e-6] {
            let nu = nu_arrow(SuccessPrior::Uniform, family, x)?.value;
            let m = m_of_x(SuccessPrior::Uniform, family, x)?.value;
            violation = violation.max(m - nu).max(nu - m - 1.0);
        }
    }
    out.push(Check {
        name: "tail_count_brackets",
        value: violation.max(0.0),
        tolerance: 1e-6,
    });

    let geometric = WeightFamily::geometric();
    for (name, prior, power, target) in [
        ("de_haan_uniform", SuccessPrior::Uniform, 1, 1.0),
        ("de_haan_loggamma1", SuccessPrior::LogGamma(1), 2, -0.5),
    ] {
        let c = de_haan_estimate(
            |y| Ok(nu_arrow(prior, geometric, y)?.value),
            1e-12,
            2.0,
            |y: f64| y.ln().powi(power),
        )?;
        out.push(Check {
            name,
            value: (c / target - 1.0).abs(),
            tolerance: 0.10,
        });
    }

    let mut ratio: f64 = 0.0;
    for p in [0.1, 0.5, 0.9] {
        for n in [10, 1000, 100_000] {
            let (gap, bound) = poissonization_gap_given_p(geometric, SuccessProbability::new(p)?, n, 1e-9)?;
            ratio = ratio.max(gap / (bound + 4e-9));
        }
    }
    out.push(Check {
        name: "poissonization_bound",
        value: ratio,
        tolerance: 1.0,
    });

    let two = expected_kn_given_p(geometric, SuccessProbability::new(0.5)?, 2, 1e-9)?;
    out.push(Check {
        name: "two_draw_exact",
        value: (two - 5.0 / 3.0).abs(),
        tolerance: 1e-10,
    });
    Ok(out)
}

pub fn verify(s: &Settings) -> anyhow::Result<Report> {
    let mut table = Table::new(["check", "value", "tolerance", "passed"]);
    let mut failures = vec![];
    for c in checks()? {
        let tolerance = c.tolerance * s.tol_scale;
        let ok = c.value <= tolerance;
        if !ok {
            failures.push(c.name.to_string());
        }
        table.push(vec![c.name.into(), c.value.into(), tolerance.into(), ok.into()]);
    }
    Ok(Report { table, failures })
}
