//! Panel-composite Gauss–Legendre quadrature.
//!
//! Three pieces live here: fixed Gauss–Legendre rules (nodes by Newton
//! iteration on the Legendre recurrence), a globally adaptive integrator that
//! bisects the panel with the largest error estimate, and the spectral
//! integration matrix used to build iterated primitives on a panel grid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess, then Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Shared 16-point rule.
pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Shared 12-point rule used by the adaptive integrator.
pub fn gl12() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(12))
}

/// `S[i][j] = ∫_{-1}^{x_i} ℓ_j(s) ds` for the Lagrange basis on the rule's nodes.
///
/// Multiplying the node values of a function by `S` (scaled by the half
/// width) gives its indefinite integral from the panel start at every node,
/// exactly for polynomials of degree `< n`.
pub fn integration_matrix(rule: &GaussLegendre) -> Vec<Vec<f64>> {
    let x = rule.nodes();
    let n = x.len();
    let bary: Vec<f64> = (0..n)
        .map(|j| 1.0 / (0..n).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect();
    let lagrange = |j: usize, s: f64| -> f64 {
        let mut prod = bary[j];
        for (k, &xk) in x.iter().enumerate() {
            if k != j {
                prod *= s - xk;
            }
        }
        prod
    };
    (0..n)
        .map(|i| (0..n).map(|j| rule.integrate(-1.0, x[i], |s| lagrange(j, s))).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Globally adaptive panel bisection.
///
/// Each panel carries the 12-point estimate on the whole panel and on its two
/// halves; the difference is the panel's error estimate. The worst panel is
/// split until the summed estimate meets `max(abs_tol, rel_tol·|value|)` or
/// `max_panels` is reached.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_panels: 1 << 14,
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    error: f64,
}

impl Panel {
    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

impl Adaptive {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, breakpoints: &[f64]) -> Estimate {
        self.integrate_with_origin_power(f, breakpoints, None)
    }

    /// Like [`Adaptive::integrate`], but a panel starting exactly at `0` is
    /// evaluated through `t = u^{1/power}`, which removes an integrable
    /// `t^{power-1}` factor at the origin.
    pub fn integrate_with_origin_power<F: Fn(f64) -> f64>(
        &self,
        f: F,
        breakpoints: &[f64],
        power: Option<f64>,
    ) -> Estimate {
        let rule = gl12();
        let eval = |a: f64, b: f64| -> f64 {
            match power {
                Some(pw) if a == 0.0 && (pw - 1.0).abs() > 1e-15 => {
                    let ub = b.powf(pw);
                    let inv = 1.0 / pw;
                    rule.integrate(0.0, ub, |u| {
                        let t = u.powf(inv);
                        f(t) * inv * u.powf(inv - 1.0)
                    })
                }
                _ => rule.integrate(a, b, &f),
            }
        };
        let make = |a: f64, b: f64, whole: f64| -> Panel {
            let mid = 0.5 * (a + b);
            let left = eval(a, mid);
            let right = eval(mid, b);
            let mut error = (left + right - whole).abs();
            let resolution = 4.0 * f64::EPSILON * a.abs().max(b.abs());
            if b - a <= resolution {
                error = 0.0;
            }
            Panel {
                a,
                b,
                left,
                right,
                error,
            }
        };

        let mut heap = BinaryHeap::new();
        for w in breakpoints.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b > a {
                let whole = eval(a, b);
                heap.push(make(a, b, whole));
            }
        }
        let mut count = heap.len();
        loop {
            let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value(), e + p.error));
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= target || count >= self.max_panels {
                return Estimate {
                    value,
                    error,
                    panels: count,
                };
            }
            let worst = match heap.pop() {
                Some(p) => p,
                None => {
                    return Estimate {
                        value: 0.0,
                        error: 0.0,
                        panels: 0,
                    }
                }
            };
            if worst.error == 0.0 {
                heap.push(worst);
                let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value(), e + p.error));
                return Estimate {
                    value,
                    error,
                    panels: count,
                };
            }
            let mid = 0.5 * (worst.a + worst.b);
            heap.push(make(worst.a, mid, worst.left));
            heap.push(make(mid, worst.b, worst.right));
            count += 1;
        }
    }
}

/// Breakpoints `0, lo, lo·r, lo·r², …, 1` followed by uniform steps of width
/// `step` up to `upper`. Used for integrands with logarithmic behavior at the
/// origin.
pub fn graded_breakpoints(lo: f64, ratio: f64, step: f64, upper: f64) -> Vec<f64> {
    let mut points = vec![0.0];
    let knee = upper.min(1.0);
    let mut t = lo.min(knee);
    while t < knee {
        points.push(t);
        t *= ratio;
    }
    points.push(knee);
    let mut t = knee;
    while t + step < upper {
        t += step;
        points.push(t);
    }
    if *points.last().unwrap() < upper {
        points.push(upper);
    }
    points.dedup();
    points
}
