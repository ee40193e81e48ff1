//! Gauss–Legendre rules and an adaptive bisection driver for vector-valued
//! integrands.

use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared 20-point rule.
    pub fn shared() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(20))
    }

    /// ∫ₐᵇ f for a scalar integrand.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub values: Vec<f64>,
    pub error: f64,
    pub converged: bool,
}

/// Adaptive bisection for ∫ₐᵇ f(t) dt with f: R → Rᵐ.
///
/// `f(t, out)` adds nothing; it overwrites `out` with the integrand at t.
/// Accepts a panel once one rule and its bisected refinement agree to
/// `abs_tol` in max norm (the tolerance is shared out over the panels).
pub fn adaptive_vector(
    a: f64,
    b: f64,
    dim: usize,
    abs_tol: f64,
    max_depth: u32,
    f: &mut dyn FnMut(f64, &mut [f64]),
) -> Quadrature {
    let rule = GaussLegendre::shared();
    let mut out = vec![0.0; dim];
    let mut scratch = vec![0.0; dim];
    let mut err_total = 0.0;
    let mut converged = true;
    let whole = panel(rule, a, b, dim, f, &mut scratch);
    recurse(
        rule,
        a,
        b,
        whole,
        dim,
        abs_tol,
        max_depth,
        f,
        &mut scratch,
        &mut out,
        &mut err_total,
        &mut converged,
    );
    Quadrature {
        values: out,
        error: err_total,
        converged,
    }
}

fn panel(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    dim: usize,
    f: &mut dyn FnMut(f64, &mut [f64]),
    scratch: &mut [f64],
) -> Vec<f64> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = vec![0.0; dim];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        f(mid + half * t, scratch);
        for (s, v) in acc.iter_mut().zip(scratch.iter()) {
            *s += w * v;
        }
    }
    acc.iter_mut().for_each(|s| *s *= half);
    acc
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: Vec<f64>,
    dim: usize,
    tol: f64,
    depth: u32,
    f: &mut dyn FnMut(f64, &mut [f64]),
    scratch: &mut [f64],
    out: &mut [f64],
    err_total: &mut f64,
    converged: &mut bool,
) {
    let m = 0.5 * (a + b);
    let left = panel(rule, a, m, dim, f, scratch);
    let right = panel(rule, m, b, dim, f, scratch);
    let err = whole
        .iter()
        .zip(left.iter().zip(&right))
        .map(|(w, (l, r))| (w - l - r).abs())
        .fold(0.0, f64::max);
    if err <= tol || depth == 0 {
        if err > tol {
            *converged = false;
        }
        for (o, (l, r)) in out.iter_mut().zip(left.iter().zip(&right)) {
            *o += l + r;
        }
        *err_total += err;
        return;
    }
    recurse(rule, a, m, left, dim, 0.5 * tol, depth - 1, f, scratch, out, err_total, converged);
    recurse(rule, m, b, right, dim, 0.5 * tol, depth - 1, f, scratch, out, err_total, converged);
}
