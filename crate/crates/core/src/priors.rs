//! Priors on the success probability.
//!
//! Every prior here is the law of `p = e^{−X}` with `X ~ Gamma(a+1, 1)`
//! (`a = 0` is the uniform prior), so in the coordinate `t = log(1/p)` the
//! density of `t` is `t^a e^{−t}/Γ(a+1)`. All integrals over `p` are done in
//! that coordinate.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{domain, Result};
use crate::quadrature::{gl16, Adaptive, Estimate};
use crate::weights::SuccessProbability;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SuccessPrior {
    Uniform,
    /// `p = e^{−X}`, `X ~ Gamma(m+1, 1)`; density `(−log p)^m/m!`.
    LogGamma(u32),
    /// `p = e^{−X}`, `X ~ Gamma(1+ρ, 1)` with `ρ > −1`.
    LogGammaRho(f64),
}

impl SuccessPrior {
    pub fn log_gamma_rho(rho: f64) -> Result<Self> {
        if !(rho > -1.0) || !rho.is_finite() {
            return Err(domain("rho", rho, "rho > -1"));
        }
        Ok(SuccessPrior::LogGammaRho(rho))
    }

    pub fn validate(&self) -> Result<()> {
        if let SuccessPrior::LogGammaRho(rho) = *self {
            Self::log_gamma_rho(rho)?;
        }
        Ok(())
    }

    /// Exponent `a` of `t^a` in the density of `t = log(1/p)`.
    pub fn exponent(&self) -> f64 {
        match *self {
            SuccessPrior::Uniform => 0.0,
            SuccessPrior::LogGamma(m) => m as f64,
            SuccessPrior::LogGammaRho(rho) => rho,
        }
    }

    /// Gamma shape `a + 1` of `log(1/p)`.
    pub fn shape(&self) -> f64 {
        self.exponent() + 1.0
    }

    fn integer_exponent(&self) -> Option<u32> {
        match *self {
            SuccessPrior::Uniform => Some(0),
            SuccessPrior::LogGamma(m) => Some(m),
            SuccessPrior::LogGammaRho(rho) if rho.fract() == 0.0 && (0.0..1e6).contains(&rho) => Some(rho as u32),
            SuccessPrior::LogGammaRho(_) => None,
        }
    }

    /// `π(p)`.
    pub fn density(&self, p: SuccessProbability) -> f64 {
        self.density_at_log_inverse(p.log_inverse())
    }

    /// `π(e^{−t})`.
    pub fn density_at_log_inverse(&self, t: f64) -> f64 {
        let a = self.exponent();
        match self.integer_exponent() {
            Some(0) => 1.0,
            Some(m) => t.powi(m as i32) / factorial(m),
            None => (a * t.ln() - ln_gamma(a + 1.0)).exp(),
        }
    }

    /// Density of `t = log(1/p)`: `π(e^{−t}) e^{−t}`.
    pub fn t_density(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        self.density_at_log_inverse(t) * (-t).exp()
    }

    /// `P(log(1/p) > t)`, i.e. the prior mass of `p < e^{−t}`.
    pub fn mass_beyond_t(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self.integer_exponent() {
            Some(m) => {
                let mut term = 1.0;
                let mut sum = 1.0;
                for k in 1..=m {
                    term *= t / k as f64;
                    sum += term;
                }
                (-t).exp() * sum
            }
            None => gamma_ur(self.shape(), t),
        }
    }

    /// `P(log(1/p) ≤ t)`.
    pub fn mass_below_t(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.integer_exponent() {
            Some(0) => -(-t).exp_m1(),
            Some(_) if t > 1.0 => 1.0 - self.mass_beyond_t(t),
            _ => gamma_lr(self.shape(), t),
        }
    }

    /// Prior mass of `p ∈ [lo, hi]`, with `lo, hi ∈ [0, 1]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if !(hi > lo) {
            return 0.0;
        }
        if let Some(0) = self.integer_exponent() {
            return hi - lo;
        }
        let t_hi = if lo <= 0.0 { f64::INFINITY } else { -lo.ln() };
        let t_lo = if hi >= 1.0 { 0.0 } else { -hi.ln() };
        let below = self.mass_below_t(t_lo);
        if below < 0.5 {
            let upper = if t_hi.is_finite() { self.mass_below_t(t_hi) } else { 1.0 };
            upper - below
        } else {
            let tail = if t_hi.is_finite() {
                self.mass_beyond_t(t_hi)
            } else {
                0.0
            };
            self.mass_beyond_t(t_lo) - tail
        }
    }

    /// Prior mass of `log(1/p) ∈ [t_lo, t_hi]`.
    pub fn mass_between_t(&self, t_lo: f64, t_hi: f64) -> f64 {
        if !(t_hi > t_lo) {
            return 0.0;
        }
        if let Some(0) = self.integer_exponent() {
            let lo = t_lo.max(0.0);
            return (-lo).exp() * -(-(t_hi - lo)).exp_m1();
        }
        let below = self.mass_below_t(t_lo);
        if below < 0.5 {
            self.mass_below_t(t_hi) - below
        } else {
            self.mass_beyond_t(t_lo) - self.mass_beyond_t(t_hi)
        }
    }

    /// Draws `p`; boundary values (probability zero) are redrawn.
    pub fn sample_p<R: Rng + ?Sized>(&self, rng: &mut R) -> SuccessProbability {
        match *self {
            SuccessPrior::Uniform => loop {
                let u: f64 = rng.random();
                if let Ok(p) = SuccessProbability::new(u) {
                    return p;
                }
            },
            _ => {
                let gamma = Gamma::new(self.shape(), 1.0).expect("validated shape");
                loop {
                    let x = gamma.sample(rng);
                    if let Ok(p) = SuccessProbability::from_log_inverse(x) {
                        return p;
                    }
                }
            }
        }
    }

    /// `∫_0^upper g(t) π(e^{−t}) e^{−t} dt` by adaptive quadrature. The
    /// `t^a` factor at the origin is removed by substitution when `a` is not
    /// an integer.
    pub fn integrate_t<F: Fn(f64) -> f64>(
        &self,
        g: F,
        upper: f64,
        breakpoints: &[f64],
        integrator: Adaptive,
    ) -> Estimate {
        let power = match self.integer_exponent() {
            Some(_) => None,
            None => Some(self.shape()),
        };
        let mut points: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > 0.0 && b < upper).collect();
        points.insert(0, 0.0);
        points.push(upper);
        integrator.integrate_with_origin_power(|t| g(t) * self.t_density(t), &points, power)
    }
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// Nodes `t` and combined weights `π(e^{−t}) e^{−t} w` on `[0, upper]`, so
/// that `Σ g(t_i) W_i ≈ ∫_0^upper g(t) π(e^{−t}) e^{−t} dt`.
///
/// Panels are uniform. When the prior's exponent is not an integer the first
/// panel is graded toward the origin and its innermost piece is mapped through
/// `t = u^{1/(a+1)}`, which absorbs `t^a`.
pub fn log_coordinate_quadrature(prior: SuccessPrior, upper: f64, panels: usize) -> Result<Vec<(f64, f64)>> {
    prior.validate()?;
    if !(upper > 0.0) || !upper.is_finite() {
        return Err(domain("upper", upper, "T > 0"));
    }
    if panels == 0 {
        return Err(domain("panels", 0.0, "panels >= 1"));
    }
    let rule = gl16();
    let h = upper / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.len());
    for i in 0..panels {
        let a = i as f64 * h;
        let b = if i + 1 == panels { upper } else { a + h };
        match prior.integer_exponent() {
            None if i == 0 => {
                // t^a is absorbed exactly on [0, δ]; the rest of the first
                // panel is covered by dyadic subpanels where t^a is smooth.
                let shape = prior.shape();
                let norm = (-ln_gamma(shape)).exp() / shape;
                let delta = b * 2f64.powi(-60);
                for (u, w) in rule.mapped(0.0, delta.powf(shape)) {
                    let t = u.powf(1.0 / shape);
                    out.push((t, w * norm * (-t).exp()));
                }
                let mut lo = delta;
                while lo < b {
                    let hi = (2.0 * lo).min(b);
                    for (t, w) in rule.mapped(lo, hi) {
                        out.push((t, w * prior.t_density(t)));
                    }
                    lo = hi;
                }
            }
            _ => {
                for (t, w) in rule.mapped(a, b) {
                    out.push((t, w * prior.t_density(t)));
                }
            }
        }
    }
    Ok(out)
}
