//! Asymptotic expansions of `E(K_n)` and of the tail count as evaluable
//! comparators.
//!
//! Each `expand_*` function returns the expansion term by term next to a
//! numerically computed reference, so residuals and their trends can be
//! inspected. Second-order terms in `E(K_n)` come from two places, the tail
//! count itself and the Tauberian correction `−cγℓ(1/n)`; where both appear
//! they are reported as separate labelled terms, so cancellations stay
//! visible.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::occupancy::{expected_kn, expected_kn_given_p, phi};
use crate::priors::SuccessPrior;
use crate::quadrature::{graded_breakpoints, Adaptive};
use crate::specialfn::{f_unchecked, EULER_GAMMA};
use crate::tail_measure::nu_arrow;
use crate::weights::{SuccessProbability, WeightFamily};

/// Sample sizes above this are referenced through `Φ(n)`.
pub const POISSON_REFERENCE_ABOVE: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Argument {
    /// Fixed sample size `n`; the reference is `E(K_n)` (or `Φ(n)` beyond
    /// [`POISSON_REFERENCE_ABOVE`]).
    SampleSize(u64),
    /// Poisson time `t`; the reference is `Φ(t)`.
    PoissonTime(f64),
    /// Threshold `x`; the reference is the tail count `ν→(x)`.
    Threshold(f64),
}

impl Argument {
    pub fn value(&self) -> f64 {
        match *self {
            Argument::SampleSize(n) => n as f64,
            Argument::PoissonTime(t) => t,
            Argument::Threshold(x) => x,
        }
    }

    /// `log n`, `log t` or `log(1/x)`.
    pub fn log_scale(&self) -> f64 {
        match *self {
            Argument::Threshold(x) => -x.ln(),
            _ => self.value().ln(),
        }
    }

    pub fn is_threshold(&self) -> bool {
        matches!(self, Argument::Threshold(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionTerm {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub argument: Argument,
    pub terms: Vec<ExpansionTerm>,
    pub predicted_total: f64,
    pub reference: f64,
    pub residual: f64,
    /// Size of the first neglected order; `normalized_residual` divides by it.
    pub residual_scale: f64,
    pub normalized_residual: f64,
    pub notes: Vec<String>,
}

impl ExpansionReport {
    fn new(argument: Argument, terms: Vec<(&str, f64)>, reference: f64, residual_scale: f64) -> Self {
        let terms: Vec<ExpansionTerm> = terms
            .into_iter()
            .map(|(label, value)| ExpansionTerm {
                label: label.to_string(),
                value,
            })
            .collect();
        let predicted_total = terms.iter().map(|t| t.value).sum();
        let residual = reference - predicted_total;
        Self {
            argument,
            terms,
            predicted_total,
            reference,
            residual,
            residual_scale,
            normalized_residual: residual / residual_scale,
            notes: Vec::new(),
        }
    }

    fn note(mut self, text: &str) -> Self {
        self.notes.push(text.to_string());
        self
    }

    /// `reference / predicted_total`.
    pub fn ratio(&self) -> f64 {
        self.reference / self.predicted_total
    }

    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

fn reference(prior: SuccessPrior, family: WeightFamily, argument: Argument, eps: f64) -> Result<f64> {
    match argument {
        Argument::SampleSize(n) if (n as f64) <= POISSON_REFERENCE_ABOVE => expected_kn(prior, family, n, eps),
        Argument::SampleSize(n) => phi(prior, family, n as f64, eps),
        Argument::PoissonTime(t) => phi(prior, family, t, eps),
        Argument::Threshold(x) => Ok(nu_arrow(prior, family, x)?.value),
    }
}

/// Requires `n ≥ 3`, `t ≥ 3`, or `x ∈ (0, 1/e)`, so that `log` scales exceed one.
fn check_asymptotic_domain(argument: Argument) -> Result<()> {
    match argument {
        Argument::SampleSize(n) if n >= 3 => Ok(()),
        Argument::PoissonTime(t) if t >= 3.0 && t.is_finite() => Ok(()),
        Argument::Threshold(x) if x > 0.0 && x < (-1f64).exp() => Ok(()),
        Argument::SampleSize(n) => Err(domain("n", n as f64, "n >= 3")),
        Argument::PoissonTime(t) => Err(domain("t", t, "t >= 3")),
        Argument::Threshold(x) => Err(domain("x", x, "0 < x < 1/e")),
    }
}

/// Fixed `p`, geometric weights:
/// `E(K_n | p) ≈ ⌊log(np)/|log(1−p)| + 1⌋ + γ/|log(1−p)|`.
///
/// The floor is kept as is, so the residual carries a bounded periodic
/// component in `log n`.
pub fn expand_fixed_p(p: SuccessProbability, n: u64, eps: f64) -> Result<ExpansionReport> {
    if n < 2 {
        return Err(domain("n", n as f64, "n >= 2"));
    }
    let abs_ln_q = -p.ln_q();
    let floor_term = (((n as f64).ln() + p.ln_p()) / abs_ln_q + 1.0).floor();
    let reference = expected_kn_given_p(WeightFamily::geometric(), p, n, eps)?;
    Ok(ExpansionReport::new(
        Argument::SampleSize(n),
        vec![
            ("floor(log(np)/|log(1-p)|+1)", floor_term),
            ("gamma/|log(1-p)|", EULER_GAMMA / abs_ln_q),
        ],
        reference,
        1.0,
    ))
}

/// Uniform prior, geometric weights.
///
/// Threshold form: `ν→(x) = ½L² − γL + O(1)`, `L = log(1/x)`.
/// Sample-size form: `E(K_n) = ½L² + o(L)`, `L = log n`; the tail count's
/// `−γL` and the Tauberian `+γL` are both listed.
pub fn expand_uniform_s2(argument: Argument, eps: f64) -> Result<ExpansionReport> {
    check_asymptotic_domain(argument)?;
    let l = argument.log_scale();
    let reference = reference(SuccessPrior::Uniform, WeightFamily::geometric(), argument, eps)?;
    let report = if argument.is_threshold() {
        ExpansionReport::new(
            argument,
            vec![("L^2/2", 0.5 * l * l), ("-gamma*L", -EULER_GAMMA * l)],
            reference,
            1.0,
        )
    } else {
        ExpansionReport::new(
            argument,
            vec![
                ("L^2/2", 0.5 * l * l),
                ("-gamma*L [tail count]", -EULER_GAMMA * l),
                ("+gamma*L [Tauberian]", EULER_GAMMA * l),
            ],
            reference,
            l,
        )
        .note("the gamma*L terms cancel exactly; the remainder is o(L)")
    };
    Ok(report)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Prior `LogGamma(m)`, geometric weights.
///
/// Sample-size form: `E(K_n) = L^{m+2}/(m+2)! + γL^{m+1}/(m+1)! + o(L^{m+1})`.
/// Threshold form: `ν→(x) = L^{m+2}/(m+2)! + O(L^m)`. `m = 0` is the uniform
/// prior and delegates to [`expand_uniform_s2`].
pub fn expand_loggamma_m(m: u32, argument: Argument, eps: f64) -> Result<ExpansionReport> {
    if m == 0 {
        return expand_uniform_s2(argument, eps);
    }
    check_asymptotic_domain(argument)?;
    let l = argument.log_scale();
    let prior = SuccessPrior::LogGamma(m);
    let reference = reference(prior, WeightFamily::geometric(), argument, eps)?;
    let lead = l.powi(m as i32 + 2) / factorial(m + 2);
    let report = if argument.is_threshold() {
        ExpansionReport::new(argument, vec![("L^(m+2)/(m+2)!", lead)], reference, l.powi(m as i32))
    } else {
        ExpansionReport::new(
            argument,
            vec![
                ("L^(m+2)/(m+2)!", lead),
                (
                    "+gamma*L^(m+1)/(m+1)! [Tauberian]",
                    EULER_GAMMA * l.powi(m as i32 + 1) / factorial(m + 1),
                ),
            ],
            reference,
            l.powi(m as i32 + 1),
        )
    };
    Ok(report)
}

/// Prior `LogGammaRho(ρ)`: leading term `L^{ρ+2}/Γ(ρ+3)` only; the
/// normalized residual is `reference/leading − 1`.
pub fn expand_rho(rho: f64, argument: Argument, eps: f64) -> Result<ExpansionReport> {
    let prior = SuccessPrior::log_gamma_rho(rho)?;
    if argument.is_threshold() {
        return Err(Error::Unsupported("the rho expansion is stated for E(K_n) only".into()));
    }
    check_asymptotic_domain(argument)?;
    let l = argument.log_scale();
    let lead = l.powf(rho + 2.0) / gamma(rho + 3.0);
    let reference = reference(prior, WeightFamily::geometric(), argument, eps)?;
    Ok(
        ExpansionReport::new(argument, vec![("L^(rho+2)/Gamma(rho+3)", lead)], reference, lead)
            .note("second-order term unavailable: only the leading term is known for general rho"),
    )
}

/// Uniform prior, `s = 3`.
///
/// Threshold form: `½L² + L·log L − γL − (1+log 2)L + o(L)`.
/// Sample-size form: the same with the Tauberian `+γL` listed separately.
pub fn expand_negbin_s3(argument: Argument, eps: f64) -> Result<ExpansionReport> {
    check_asymptotic_domain(argument)?;
    let l = argument.log_scale();
    let family = WeightFamily::new(3)?;
    let reference = reference(SuccessPrior::Uniform, family, argument, eps)?;
    let shift = -(1.0 + std::f64::consts::LN_2) * l;
    let report = if argument.is_threshold() {
        ExpansionReport::new(
            argument,
            vec![
                ("L^2/2", 0.5 * l * l),
                ("L*log(L)", l * l.ln()),
                ("-gamma*L", -EULER_GAMMA * l),
                ("-(1+log 2)*L", shift),
            ],
            reference,
            l,
        )
    } else {
        ExpansionReport::new(
            argument,
            vec![
                ("L^2/2", 0.5 * l * l),
                ("L*log(L)", l * l.ln()),
                ("-gamma*L [tail count]", -EULER_GAMMA * l),
                ("+gamma*L [Tauberian]", EULER_GAMMA * l),
                ("-(1+log 2)*L", shift),
            ],
            reference,
            l,
        )
        .note("the gamma*L terms cancel exactly")
    };
    Ok(report)
}

/// Empirical de Haan constant `(ν(λx) − ν(x)) / (ℓ(x)·log λ)`.
pub fn de_haan_estimate<T, L>(tail_fn: T, x: f64, lambda: f64, ell: L) -> Result<f64>
where
    T: Fn(f64) -> Result<f64>,
    L: Fn(f64) -> f64,
{
    let ln_lambda = lambda.ln();
    if !(lambda > 0.0) || ln_lambda == 0.0 || !ln_lambda.is_finite() {
        return Err(domain("lambda", lambda, "lambda > 0, lambda != 1"));
    }
    let scale = ell(x);
    if scale == 0.0 || !scale.is_finite() {
        return Err(domain("ell(x)", scale, "nonzero and finite"));
    }
    Ok((tail_fn(lambda * x)? - tail_fn(x)?) / (scale * ln_lambda))
}

/// `r(x) = ∫_0^x log(1 + (x−t) f(t)) f(t) dt`, `x > 1`.
pub fn r_of_x(x: f64) -> Result<f64> {
    if !(x > 1.0) || !x.is_finite() {
        return Err(domain("x", x, "x > 1"));
    }
    let integrand = |t: f64| {
        let f = f_unchecked(t);
        ((x - t) * f).ln_1p() * f
    };
    let est = Adaptive::with_tolerances(1e-12 * x, 1e-13).integrate(integrand, &graded_breakpoints(1e-30, 4.0, 1.0, x));
    Ok(est.value)
}

/// `r(x) − x log x + x`, which is `O(log x)`.
pub fn r_remainder(x: f64) -> Result<f64> {
    Ok(r_of_x(x)? - x * x.ln() + x)
}
