//! Decreasing frequency sequences of the geometric stick-breaking process and
//! its negative-binomial extension.
//!
//! For scale `s ≥ 2` the frequencies are `w_j(p) = Σ_{r≥j} φ(r; s, p)/r`, with
//! `φ(r; s, p) = C(r+s−2, r−1) p^s (1−p)^{r−1}` the negative binomial law
//! shifted to start at one. `s = 2` gives the geometric weights
//! `p(1−p)^{j−1}`.
//!
//! Writing `φ(r)/r = p/((s−1)q) · P(Y = r)` with `Y` negative binomial with
//! `s−1` successes turns every tail into a finite sum of nonnegative terms:
//!
//! ```text
//! w_j      = p q^{j−1}/(s−1) · Σ_{i=0}^{s−2} C(j+s−2, i) p^i q^{s−2−i}
//! Σ_{j>J} w_j = q^J/(s−1) · Σ_{l=0}^{s−2} (s−1−l) C(J+s−1, l) p^l q^{s−2−l}
//! ```
//!
//! Both are polynomials in `j` (resp. `J`) times a geometric factor, so they
//! also give the continuous extension in `j` used by the occupancy sums.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A success probability strictly inside `(0, 1)`.
///
/// Both `p` and `q = 1 − p` are stored, together with their logarithms, so
/// that values built from `t = log(1/p)` keep full relative precision in `q`
/// even when `p` rounds to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessProbability {
    p: f64,
    q: f64,
    ln_p: f64,
    ln_q: f64,
}

impl SuccessProbability {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        let q = 1.0 - p;
        Ok(Self {
            p,
            q,
            ln_p: p.ln(),
            ln_q: (-p).ln_1p(),
        })
    }

    /// `p = e^{−t}` for `t > 0`.
    pub fn from_log_inverse(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain("t = log(1/p)", t, "t > 0 and finite"));
        }
        let p = (-t).exp();
        let q = -(-t).exp_m1();
        if p <= 0.0 || q <= 0.0 {
            return Err(Error::InvalidProbability(p));
        }
        // log q from whichever of p, q carries full relative precision
        let ln_q = if p < 0.5 { (-p).ln_1p() } else { q.ln() };
        Ok(Self { p, q, ln_p: -t, ln_q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn ln_p(&self) -> f64 {
        self.ln_p
    }

    pub fn ln_q(&self) -> f64 {
        self.ln_q
    }

    /// `log(1/p)`.
    pub fn log_inverse(&self) -> f64 {
        -self.ln_p
    }
}

impl TryFrom<f64> for SuccessProbability {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

/// Negative-binomial frequency family with integer scale `s ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightFamily {
    s: u32,
}

impl WeightFamily {
    pub fn new(s: u32) -> Result<Self> {
        if s < 2 {
            return Err(Error::InvalidScale(s));
        }
        Ok(Self { s })
    }

    pub fn geometric() -> Self {
        Self { s: 2 }
    }

    pub fn negative_binomial(s: u32) -> Result<Self> {
        Self::new(s)
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn is_geometric(&self) -> bool {
        self.s == 2
    }

    /// `w_j(p)`.
    pub fn weight(&self, p: SuccessProbability, j: u64) -> Result<f64> {
        if j < 1 {
            return Err(Error::InvalidIndex(j));
        }
        Ok(self.weight_at(p, j as f64))
    }

    /// Continuous extension of `w_j(p)` to real `j ≥ 1`. No validation.
    pub fn weight_at(&self, p: SuccessProbability, j: f64) -> f64 {
        let (pp, q) = (p.p(), p.q());
        let exponent = (j - 1.0) * p.ln_q();
        if exponent < -700.0 {
            // keep the polynomial factor out of the subnormal range
            return self.ln_weight_at(p, j).exp();
        }
        let geometric = pp * exponent.exp();
        let poly = match self.s {
            2 => 1.0,
            3 => 0.5 * (1.0 + j * pp),
            4 => (2.0 + 2.0 * j * pp + j * pp * pp + j * j * pp * pp) / 6.0,
            s => {
                let s = s as usize;
                let sum: f64 = (0..=s - 2)
                    .map(|i| choose_real(j + s as f64 - 2.0, i) * pp.powi(i as i32) * q.powi((s - 2 - i) as i32))
                    .sum();
                sum / (s as f64 - 1.0)
            }
        };
        geometric * poly
    }

    /// `log w_j(p)` for real `j`, usable where `w_j` itself underflows.
    pub fn ln_weight_at(&self, p: SuccessProbability, j: f64) -> f64 {
        let pp = p.p();
        let ln_poly = match self.s {
            2 => 0.0,
            3 => (0.5 * (1.0 + j * pp)).ln(),
            4 => ((2.0 + 2.0 * j * pp + j * pp * pp + j * j * pp * pp) / 6.0).ln(),
            s => {
                let s = s as usize;
                let q = p.q();
                let sum: f64 = (0..=s - 2)
                    .map(|i| choose_real(j + s as f64 - 2.0, i) * pp.powi(i as i32) * q.powi((s - 2 - i) as i32))
                    .sum();
                (sum / (s as f64 - 1.0)).ln()
            }
        };
        p.ln_p() + (j - 1.0) * p.ln_q() + ln_poly
    }

    /// `Σ_{j>J} w_j(p)`; equals one at `J = 0`.
    pub fn tail_mass(&self, p: SuccessProbability, big_j: u64) -> f64 {
        self.tail_mass_at(p, big_j as f64)
    }

    pub(crate) fn tail_mass_at(&self, p: SuccessProbability, big_j: f64) -> f64 {
        let (pp, q) = (p.p(), p.q());
        let geometric = (big_j * p.ln_q()).exp();
        let poly = match self.s {
            2 => 1.0,
            3 => 0.5 * (2.0 - pp + (big_j + 1.0) * pp),
            s => {
                let s = s as usize;
                let sum: f64 = (0..=s - 2)
                    .map(|l| {
                        (s - 1 - l) as f64
                            * choose_real(big_j + s as f64 - 1.0, l)
                            * pp.powi(l as i32)
                            * q.powi((s - 2 - l) as i32)
                    })
                    .sum();
                sum / (s as f64 - 1.0)
            }
        };
        geometric * poly
    }

    /// Shifted negative binomial pmf `φ(r; s, p)`.
    pub fn pmf(&self, p: SuccessProbability, r: u64) -> Result<f64> {
        negbin_pmf(self.s, p, r)
    }
}

/// `C(r+s−2, r−1) p^s (1−p)^{r−1}`, evaluated in log space.
pub fn negbin_pmf(s: u32, p: SuccessProbability, r: u64) -> Result<f64> {
    if s < 2 {
        return Err(Error::InvalidScale(s));
    }
    if r < 1 {
        return Err(Error::InvalidIndex(r));
    }
    Ok(ln_negbin_pmf(s, p, r as f64).exp())
}

fn ln_negbin_pmf(s: u32, p: SuccessProbability, r: f64) -> f64 {
    // C(r+s−2, r−1) = C(r+s−2, s−1)
    ln_choose_real(r + s as f64 - 2.0, (s - 1) as usize) + s as f64 * p.ln_p() + (r - 1.0) * p.ln_q()
}

/// `w_j(p)` straight from its definition `Σ_{r≥j} φ(r; s, p)/r`.
///
/// The summand ratio `q(r+s−1)/(r+1)` decreases in `r`, so once it is below
/// one the remaining tail is bounded by a geometric series; summation stops
/// when that bound is below `1e-17` of the running sum.
pub fn weight_by_pmf_tail(family: WeightFamily, p: SuccessProbability, j: u64) -> Result<f64> {
    if j < 1 {
        return Err(Error::InvalidIndex(j));
    }
    let s = family.s() as f64;
    let q = p.q();
    let mut r = j as f64;
    let mut term = (ln_negbin_pmf(family.s(), p, r) - r.ln()).exp();
    let mut sum = 0.0;
    for _ in 0..50_000_000u64 {
        sum += term;
        let ratio = q * (r + s - 1.0) / (r + 1.0);
        let next = term * ratio;
        if ratio < 1.0 && next * ratio / (1.0 - ratio) <= 1e-17 * sum {
            return Ok(sum + next / (1.0 - ratio));
        }
        term = next;
        r += 1.0;
    }
    Err(Error::Convergence {
        what: "negative binomial tail sum",
        iterations: 50_000_000,
    })
}

/// Generalized binomial coefficient `C(a, k)` for real `a`.
pub(crate) fn choose_real(a: f64, k: usize) -> f64 {
    let mut c = 1.0;
    for l in 0..k {
        c *= (a - l as f64) / (l + 1) as f64;
    }
    c
}

fn ln_choose_real(a: f64, k: usize) -> f64 {
    (0..k).map(|l| ((a - l as f64) / (k - l) as f64).ln()).sum()
}

/// `w_j(p) ≥ x`, falling back to logarithms once `w_j` leaves the normal
/// range.
pub(crate) fn weight_at_least(family: WeightFamily, p: SuccessProbability, j: u64, x: f64, ln_x: f64) -> bool {
    let w = family.weight_at(p, j as f64);
    if w.is_normal() {
        w >= x
    } else {
        family.ln_weight_at(p, j as f64) >= ln_x
    }
}

/// Number of indices `j` with `w_j(p) ≥ x`, by binary search on the
/// decreasing sequence. Works for every family.
pub(crate) fn count_at_least(family: WeightFamily, p: SuccessProbability, x: f64) -> u64 {
    if family.weight_at(p, 1.0) < x {
        return 0;
    }
    let ln_x = x.ln();
    let above = |j: u64| weight_at_least(family, p, j, x, ln_x);
    let mut lo = 1u64;
    let mut hi = 2u64;
    while above(hi) {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi == u64::MAX {
            break;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
