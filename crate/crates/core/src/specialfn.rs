//! Special functions behind the tail-count analysis.
//!
//! `f(t) = e^{−t}/(−log(1−e^{−t}))` is a distribution function on `(0, ∞)`
//! whose first moment is Euler's constant; its primitive `F` and the iterated
//! primitives `ₖF` carry every prior-averaged tail count in the geometric
//! case. The Lambert W branches solve the `s = 3` weight inversion.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{gl16, graded_breakpoints, integration_matrix, Adaptive, GaussLegendre};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

const INV_E_HI: f64 = 0.367_879_441_171_442_33;
const INV_E_LO: f64 = -1.242_875_367_278_164_3e-17;

/// `f(t)` for `t > 0`. Values are in `(0, 1]`; for `t ≳ 37` the result rounds
/// to one, use [`one_minus_f`] for the upper tail.
pub fn f_t(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("t", t, "t > 0"));
    }
    Ok(f_unchecked(t))
}

pub(crate) fn f_unchecked(t: f64) -> f64 {
    if t > 40.0 {
        // 1 − f(t) < e^{−40} is below half an ulp of one
        return 1.0;
    }
    if t >= ONE_MINUS_F_SERIES_FROM {
        // the direct quotient jitters by an ulp near one and breaks monotonicity
        return 1.0 - one_minus_f_unchecked(t);
    }
    (-t).exp() / neg_log_one_minus_exp(t)
}

/// `−log(1 − e^{−t})`, accurate for every `t > 0`.
pub fn neg_log_one_minus_exp(t: f64) -> f64 {
    if t < std::f64::consts::LN_2 {
        -(-(-t).exp_m1()).ln()
    } else {
        -(-(-t).exp()).ln_1p()
    }
}

/// `1 − f(t)` without cancellation; behaves like `e^{−t}/2` for large `t`.
pub fn one_minus_f(t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(domain("t", t, "t > 0"));
    }
    Ok(one_minus_f_unchecked(t))
}

const ONE_MINUS_F_SERIES_FROM: f64 = 1.4;

pub(crate) fn one_minus_f_unchecked(t: f64) -> f64 {
    if t < ONE_MINUS_F_SERIES_FROM {
        return 1.0 - f_unchecked(t);
    }
    let u = (-t).exp();
    // −log(1−u) − u = Σ_{k≥2} u^k/k
    let mut excess = 0.0;
    let mut power = u;
    for k in 2..64 {
        power *= u;
        let term = power / k as f64;
        excess += term;
        if term < 1e-18 * excess {
            break;
        }
    }
    excess / (u + excess)
}

const F_TABLE_UPPER: f64 = 40.0;

struct PrimitiveTable {
    breakpoints: Vec<f64>,
    cumulative: Vec<f64>,
}

fn primitive_table() -> &'static PrimitiveTable {
    static TABLE: OnceLock<PrimitiveTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let breakpoints = graded_breakpoints(2f64.powi(-60), 2.0, 0.5, F_TABLE_UPPER);
        let rule = gl16();
        let mut cumulative = Vec::with_capacity(breakpoints.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in breakpoints.windows(2) {
            acc += rule.integrate(w[0], w[1], f_unchecked);
            cumulative.push(acc);
        }
        PrimitiveTable {
            breakpoints,
            cumulative,
        }
    })
}

/// `F(x) = ∫_0^x f(s) ds`.
pub fn f_cap(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain("x", x, "x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x > F_TABLE_UPPER {
        return Ok(x - EULER_GAMMA + tail_of_one_minus_f(x));
    }
    let table = primitive_table();
    let idx = match table.breakpoints.partition_point(|&b| b <= x) {
        0 => 0,
        i => i - 1,
    };
    let a = table.breakpoints[idx];
    let partial = if x > a {
        gl16().integrate(a, x, f_unchecked)
    } else {
        0.0
    };
    Ok(table.cumulative[idx] + partial)
}

/// `F(x) − (x − γ) = ∫_x^∞ (1 − f)`, computed directly so that it keeps
/// relative precision where it is far below the resolution of `F(x)`.
pub fn f_cap_excess(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain("x", x, "x >= 0"));
    }
    if x < 1.0 {
        return Ok(f_cap(x)? - x + EULER_GAMMA);
    }
    Ok(tail_of_one_minus_f(x))
}

fn tail_of_one_minus_f(x: f64) -> f64 {
    let rule = gl16();
    let span = 60.0;
    let mut acc = 0.0;
    let mut a = x;
    while a < x + span {
        let b = (a + 1.0).min(x + span);
        acc += rule.integrate(a, b, one_minus_f_unchecked);
        a = b;
    }
    acc + 0.5 * (-(x + span)).exp()
}

/// Order of an iterated primitive: `k = 0` is `F` itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FractionalIntegralOrder(u32);

impl FractionalIntegralOrder {
    pub fn new(k: u32) -> Self {
        Self(k)
    }

    pub fn k(&self) -> u32 {
        self.0
    }
}

impl From<u32> for FractionalIntegralOrder {
    fn from(k: u32) -> Self {
        Self(k)
    }
}

/// `ₖF(x) = ∫_0^x (x−t)^k f(t) dt / k!`.
pub fn fractional_integral_f(order: FractionalIntegralOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain("x", x, "x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let k = order.k() as i32;
    if k == 0 {
        return f_cap(x);
    }
    let factorial: f64 = (1..=k).map(f64::from).product();
    let est = Adaptive::with_tolerances(1e-15, 1e-14).integrate(
        |t| (x - t).powi(k) * f_unchecked(t),
        &graded_breakpoints(x * 2f64.powi(-50), 4.0, 1.0, x),
    );
    Ok(est.value / factorial)
}

/// `ₖF(x)` by `k+1` successive primitives `ₖ₊₁F(x) = ∫_0^x ₖF`, each built
/// with the spectral integration matrix on a graded panel grid. Independent of
/// the kernel route in [`fractional_integral_f`].
pub fn fractional_integral_f_iterated(order: FractionalIntegralOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain("x", x, "x >= 0"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    static RULE: OnceLock<(GaussLegendre, Vec<Vec<f64>>)> = OnceLock::new();
    let (rule, matrix) = RULE.get_or_init(|| {
        let rule = GaussLegendre::new(20);
        let matrix = integration_matrix(&rule);
        (rule, matrix)
    });
    let breakpoints = graded_breakpoints(x * 2f64.powi(-50), 2.0, 0.5, x);
    let n = rule.len();
    let mut values: Vec<Vec<f64>> = breakpoints
        .windows(2)
        .map(|w| rule.mapped(w[0], w[1]).map(|(t, _)| f_unchecked(t)).collect())
        .collect();
    let mut end_value = 0.0;
    for _ in 0..=order.k() {
        let mut start = 0.0;
        let mut next = Vec::with_capacity(values.len());
        for (panel, vals) in breakpoints.windows(2).zip(&values) {
            let half = 0.5 * (panel[1] - panel[0]);
            let nodes: Vec<f64> = (0..n)
                .map(|i| start + half * matrix[i].iter().zip(vals).map(|(s, v)| s * v).sum::<f64>())
                .collect();
            start += half * rule.weights().iter().zip(vals).map(|(w, v)| w * v).sum::<f64>();
            next.push(nodes);
        }
        end_value = start;
        values = next;
    }
    Ok(end_value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LambertBranch {
    /// `W ≥ −1` on `[−1/e, ∞)`.
    Principal,
    /// `W ≤ −1` on `[−1/e, 0)`.
    MinusOne,
}

impl LambertBranch {
    fn name(self) -> &'static str {
        match self {
            LambertBranch::Principal => "principal",
            LambertBranch::MinusOne => "minus-one",
        }
    }
}

/// `e·z + 1`, using a two-part `1/e` to keep digits near the branch point.
fn branch_distance(z: f64) -> f64 {
    ((z + INV_E_HI) + INV_E_LO) * std::f64::consts::E
}

/// Real Lambert W: the `w` on the requested branch with `w·e^w = z`.
///
/// Halley iteration from a branch-appropriate starting point; bisection on the
/// monotone piece of `w·e^w` if Halley stalls.
pub fn lambert_w(branch: LambertBranch, z: f64) -> Result<f64> {
    let out_of_domain = || Error::LambertDomain {
        branch: branch.name(),
        z,
    };
    if !z.is_finite() {
        return Err(out_of_domain());
    }
    let ez1 = branch_distance(z);
    if ez1 < -4.0 * f64::EPSILON {
        return Err(out_of_domain());
    }
    let ez1 = ez1.max(0.0);
    match branch {
        LambertBranch::Principal => {
            if z == 0.0 {
                return Ok(0.0);
            }
        }
        LambertBranch::MinusOne => {
            if z >= 0.0 {
                return Err(out_of_domain());
            }
        }
    }
    if ez1 == 0.0 {
        return Ok(-1.0);
    }

    let mut w = initial_guess(branch, z, ez1);
    let tol = 1e-13 * z.abs().max(1e-300);
    for _ in 0..64 {
        let ew = w.exp();
        let defect = w * ew - z;
        if defect.abs() <= tol {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * defect / (2.0 * wp1);
        let mut next = w - defect / denom;
        match branch {
            LambertBranch::Principal if next < -1.0 => next = 0.5 * (w - 1.0),
            LambertBranch::MinusOne if next > -1.0 => next = 0.5 * (w - 1.0),
            _ => {}
        }
        if !next.is_finite() {
            break;
        }
        if next == w {
            // no further progress in f64; accept if within the defect budget
            let defect = w * w.exp() - z;
            if defect.abs() <= 16.0 * tol {
                return Ok(w);
            }
            break;
        }
        w = next;
    }
    lambert_bisect(branch, z, tol)
}

fn initial_guess(branch: LambertBranch, z: f64, ez1: f64) -> f64 {
    let near_branch_point = ez1 < 0.3;
    match branch {
        LambertBranch::Principal => {
            if near_branch_point {
                let p = (2.0 * ez1).sqrt();
                -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
            } else if z < 3.0 {
                z.ln_1p() * (1.0 - 0.25 * z.ln_1p().min(1.0))
            } else {
                let l1 = z.ln();
                let l2 = l1.ln();
                l1 - l2 + l2 / l1
            }
        }
        LambertBranch::MinusOne => {
            if near_branch_point {
                let p = (2.0 * ez1).sqrt();
                -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p
            } else {
                let l1 = (-z).ln();
                let l2 = (-l1).ln();
                l1 - l2 + l2 / l1
            }
        }
    }
}

fn lambert_bisect(branch: LambertBranch, z: f64, tol: f64) -> Result<f64> {
    // g(w) = w e^w − z is increasing on [−1, ∞) and decreasing on (−∞, −1].
    let g = |w: f64| w * w.exp() - z;
    let (mut lo, mut hi) = match branch {
        LambertBranch::Principal => {
            let mut hi = if z <= std::f64::consts::E { 1.0 } else { z.ln() };
            while g(hi) < 0.0 {
                hi *= 2.0;
            }
            (-1.0, hi)
        }
        LambertBranch::MinusOne => {
            let mut lo = 2.0 * (-z).ln() - 2.0;
            while g(lo) < 0.0 {
                lo *= 2.0;
            }
            (lo, -1.0)
        }
    };
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm.abs() <= tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let increasing = matches!(branch, LambertBranch::Principal);
        if (gm < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence {
        what: "Lambert W bisection",
        iterations: 2000,
    })
}

/// `W₋₁` from `u = log(−z)`: solves `w + log(−w) = u` with `w ≤ −1`.
/// Stays finite where `z` itself underflows.
pub fn lambert_wm1_from_log(u: f64) -> Result<f64> {
    if !(u <= -1.0) {
        return Err(Error::LambertDomain {
            branch: "minus-one",
            z: -u.exp(),
        });
    }
    let gap = -(u + 1.0).exp_m1();
    if gap == 0.0 {
        return Ok(-1.0);
    }
    let mut w = if gap < 0.3 {
        let p = (2.0 * gap).sqrt();
        -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p
    } else {
        u - (-u).ln()
    };
    for _ in 0..100 {
        let g = w + (-w).ln() - u;
        let step = g / (1.0 + 1.0 / w);
        let mut next = w - step;
        if next > -1.0 {
            next = 0.5 * (w - 1.0);
        }
        if (next - w).abs() <= 4.0 * f64::EPSILON * w.abs() {
            return Ok(next);
        }
        w = next;
    }
    Err(Error::Convergence {
        what: "Lambert W(-1) in log coordinates",
        iterations: 100,
    })
}

/// `log(−z) − log(−log(−z))`, the two-term behavior of `W₋₁` at `0⁻`.
pub fn lambert_wm1_two_term(z: f64) -> Result<f64> {
    if !(z < 0.0 && branch_distance(z) > 0.0) {
        return Err(domain("z", z, "-1/e < z < 0"));
    }
    let l1 = (-z).ln();
    Ok(l1 - (-l1).ln())
}
