//! Expected number of occupied boxes.
//!
//! `E(K_n | p) = Σ_j (1 − (1 − w_j)^n)` and its Poissonized version
//! `Φ(t | p) = Σ_j (1 − e^{−t w_j})`, each truncated where the remaining
//! weight mass times the scale is below `ε`, then averaged over a prior in the
//! coordinate `t = log(1/p)`.
//!
//! Terms with `scale·w_j` beyond a saturation threshold are exactly one in
//! double precision and are counted rather than summed. When more than 20 000
//! unsaturated terms remain (small `p`), the sum is evaluated by the
//! Euler–Maclaurin/Gregory formula: the integral over `j` of the continuous
//! extension of the summand plus end corrections through fifth differences.

use crate::error::{domain, Result};
use crate::priors::SuccessPrior;
use crate::quadrature::{gl16, Adaptive};
use crate::weights::{SuccessProbability, WeightFamily};

const DIRECT_TERMS: f64 = 20_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kernel {
    /// `1 − (1 − w)^n`
    Exact(f64),
    /// `1 − e^{−t w}`
    Poisson(f64),
}

impl Kernel {
    fn scale(self) -> f64 {
        match self {
            Kernel::Exact(n) | Kernel::Poisson(n) => n,
        }
    }

    fn eval(self, w: f64) -> f64 {
        match self {
            Kernel::Exact(n) => -(n * (-w).ln_1p()).exp_m1(),
            Kernel::Poisson(t) => -(-t * w).exp_m1(),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1e-3 {
        Ok(())
    } else {
        Err(domain("eps", eps, "0 < eps <= 1e-3"))
    }
}

fn check_n(n: u64) -> Result<()> {
    if n >= 1 {
        Ok(())
    } else {
        Err(domain("n", 0.0, "n >= 1"))
    }
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(domain("t", t, "t > 0"))
    }
}

/// Largest integer `j ≥ 0` (as `f64`) with `w_j(p) ≥ threshold`; zero if
/// even `w_1` is below it.
fn last_index_at_least(family: WeightFamily, p: SuccessProbability, threshold: f64) -> f64 {
    let ln_thr = threshold.ln();
    let above = |j: f64| {
        let w = family.weight_at(p, j);
        if w.is_normal() {
            w >= threshold
        } else {
            family.ln_weight_at(p, j) >= ln_thr
        }
    };
    if !above(1.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while above(hi) {
        lo = hi;
        hi *= 2.0;
    }
    bisect_integer(lo, hi, above)
}

/// Smallest integer `J ≥ 0` with `Σ_{j>J} w_j ≤ bound`.
fn first_tail_at_most(family: WeightFamily, p: SuccessProbability, bound: f64) -> f64 {
    let small = |j: f64| family.tail_mass_at(p, j) <= bound;
    if small(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while !small(hi) {
        lo = hi;
        hi *= 2.0;
    }
    // invariant: !small(lo), small(hi)
    bisect_integer(lo, hi, |j| !small(j)) + 1.0
}

/// Largest integer in `[lo, hi)` satisfying a predicate that holds at `lo`
/// and fails at `hi` and is monotone in between.
fn bisect_integer<P: Fn(f64) -> bool>(mut lo: f64, mut hi: f64, pred: P) -> f64 {
    while hi - lo > 1.0 {
        let mid = (0.5 * (lo + hi)).floor();
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn occupancy_given_p(family: WeightFamily, p: SuccessProbability, kernel: Kernel, eps: f64) -> f64 {
    let scale = kernel.scale();
    // Saturated terms differ from one by at most e^{−T}; summed over the
    // geometric run below the threshold that stays below e^{−36}.
    let lambda = -p.ln_q();
    let sat = 36.0 + (1.0 / (36.0 * lambda)).ln().max(0.0);
    let j_sat = last_index_at_least(family, p, sat / scale);
    let j_end = first_tail_at_most(family, p, eps / scale).max(j_sat);
    let g = |j: f64| kernel.eval(family.weight_at(p, j));
    let first = j_sat + 1.0;
    let middle = if j_end < first {
        0.0
    } else if j_end - j_sat <= DIRECT_TERMS {
        let mut acc = 0.0;
        let mut j = j_end;
        while j >= first {
            acc += g(j);
            j -= 1.0;
        }
        acc
    } else {
        gregory_sum(&g, first, j_end, lambda)
    };
    // first-order tail: 1 − G(w) ≈ scale·w for the tiny weights left out
    j_sat + middle + scale * family.tail_mass_at(p, j_end)
}

/// `Σ_{j=a}^{b} g(j)` for a summand varying on the scale `1/λ ≫ 1`.
fn gregory_sum<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, lambda: f64) -> f64 {
    let width = (0.5 / lambda).max(1.0);
    let panels = ((b - a) / width).ceil().max(1.0);
    let h = (b - a) / panels;
    let rule = gl16();
    let mut integral = 0.0;
    let mut i = 0.0;
    while i < panels {
        let lo = a + i * h;
        let hi = if i + 1.0 >= panels { b } else { lo + h };
        integral += rule.integrate(lo, hi, g);
        i += 1.0;
    }
    let fwd: Vec<f64> = (0..6).map(|k| g(a + k as f64)).collect();
    let bwd: Vec<f64> = (0..6).map(|k| g(b - k as f64)).collect();
    let forward_differences = differences(&fwd);
    let backward_differences = differences(&bwd);
    // Σ = ∫ + (g_a + g_b)/2 + Σ_k c_k (∇^k g_b + (−1)^k Δ^k g_a)
    const C: [f64; 5] = [1.0 / 12.0, 1.0 / 24.0, 19.0 / 720.0, 3.0 / 160.0, 863.0 / 60480.0];
    let mut corr = 0.5 * (fwd[0] + bwd[0]);
    for (k, c) in C.iter().enumerate() {
        let order = k + 1;
        let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
        // samples taken backwards give (−1)^k ∇^k
        corr += c * sign * (backward_differences[order] + forward_differences[order]);
    }
    integral + corr
}

/// `d[k] = Δ^k v_0` for samples `v_0, v_1, …`. For samples running
/// backwards from `b` this is `(−1)^k ∇^k g(b)`.
fn differences(values: &[f64]) -> Vec<f64> {
    let mut row = values.to_vec();
    let mut out = vec![row[0]];
    while row.len() > 1 {
        row = row.windows(2).map(|w| w[1] - w[0]).collect();
        out.push(row[0]);
    }
    out
}

/// `E(K_n | p)` with absolute error at most `eps` (plus relative rounding).
pub fn expected_kn_given_p(family: WeightFamily, p: SuccessProbability, n: u64, eps: f64) -> Result<f64> {
    check_n(n)?;
    check_eps(eps)?;
    if n == 1 {
        return Ok(1.0);
    }
    Ok(occupancy_given_p(family, p, Kernel::Exact(n as f64), eps))
}

/// `Φ(t | p) = Σ_j (1 − e^{−t w_j})`.
pub fn phi_given_p(family: WeightFamily, p: SuccessProbability, t: f64, eps: f64) -> Result<f64> {
    check_t(t)?;
    check_eps(eps)?;
    Ok(occupancy_given_p(family, p, Kernel::Poisson(t), eps))
}

fn prior_average(prior: SuccessPrior, family: WeightFamily, kernel: Kernel, eps: f64) -> Result<f64> {
    prior.validate()?;
    let scale = kernel.scale();
    // As p → 0 every draw lands in its own box, so the conditional mean tends
    // to the scale; the prior mass beyond T is charged at that value.
    let mut upper = (2.0 * scale / eps).ln().max(1.0);
    while scale * prior.mass_beyond_t(upper) > 0.5 * eps {
        upper *= 1.25;
    }
    let mut points = vec![];
    let mut b = 1e-16;
    while b < 1.0 {
        points.push(b);
        b *= 10.0;
    }
    let mut b = 1.0;
    while b < upper {
        points.push(b);
        b += 2.0;
    }
    let inner = 0.5 * eps;
    let integrand = |t: f64| match SuccessProbability::from_log_inverse(t) {
        Ok(p) => occupancy_given_p(family, p, kernel, inner),
        Err(_) => scale,
    };
    let est = prior.integrate_t(integrand, upper, &points, Adaptive::with_tolerances(0.5 * eps, 1e-12));
    Ok(est.value + scale * prior.mass_beyond_t(upper))
}

/// `E(K_n) = ∫ E(K_n | p) π(p) dp`, absolute error at most `2ε`.
pub fn expected_kn(prior: SuccessPrior, family: WeightFamily, n: u64, eps: f64) -> Result<f64> {
    check_n(n)?;
    check_eps(eps)?;
    if n == 1 {
        prior.validate()?;
        return Ok(1.0);
    }
    prior_average(prior, family, Kernel::Exact(n as f64), eps)
}

/// Prior-averaged `Φ(t)`.
pub fn phi(prior: SuccessPrior, family: WeightFamily, t: f64, eps: f64) -> Result<f64> {
    check_t(t)?;
    check_eps(eps)?;
    prior_average(prior, family, Kernel::Poisson(t), eps)
}

/// `(|E(K_n|p) − Φ(n|p)|, 2Φ(n|p)/n)`.
pub fn poissonization_gap_given_p(family: WeightFamily, p: SuccessProbability, n: u64, eps: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(domain("n", n as f64, "n >= 2"));
    }
    let e = expected_kn_given_p(family, p, n, eps)?;
    let f = phi_given_p(family, p, n as f64, eps)?;
    Ok(((e - f).abs(), 2.0 * f / n as f64))
}

/// `(|E(K_n) − Φ(n)|, 2Φ(n)/n)` under a prior.
pub fn poissonization_gap(prior: SuccessPrior, family: WeightFamily, n: u64, eps: f64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(domain("n", n as f64, "n >= 2"));
    }
    let e = expected_kn(prior, family, n, eps)?;
    let f = phi(prior, family, n as f64, eps)?;
    Ok(((e - f).abs(), 2.0 * f / n as f64))
}
