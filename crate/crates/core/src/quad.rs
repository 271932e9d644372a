//! Quadrature rules: Gauss–Legendre on intervals, composite rules on a
//! truncated real line, and periodic trapezoid sums on circles.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the three-term recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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

    /// Shared rule from a process-wide cache.
    pub fn cached(order: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(order)
            .or_insert_with(|| Arc::new(GaussLegendre::new(order)))
            .clone()
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrate a complex function over `[a, b]`.
    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Complex64
    where
        F: FnMut(f64) -> Complex64,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = Complex64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(mid + half * x) * (w * half);
        }
        acc
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

/// Composite Gauss–Legendre rule on `[-half_width, half_width]`.
///
/// Integrals over the real rapidity line are truncated to this window; the
/// integrands met here (on-shell transforms of compactly supported bumps,
/// Gaussian wavefunctions) decay faster than any exponential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineRule {
    pub half_width: f64,
    pub panels: usize,
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn new(half_width: f64, panels: usize, order: usize) -> Self {
        assert!(half_width > 0.0 && panels > 0 && order > 0);
        let gl = GaussLegendre::cached(order);
        let h = 2.0 * half_width / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let a = -half_width + p as f64 * h;
            let mid = a + 0.5 * h;
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                nodes.push(mid + 0.5 * h * x);
                weights.push(0.5 * h * w);
            }
        }
        Self {
            half_width,
            panels,
            order,
            nodes,
            weights,
        }
    }

    /// The rule at refinement `level`: panel count doubles per level.
    pub fn refined(half_width: f64, base_panels: usize, order: usize, level: u32) -> Self {
        Self::new(half_width, base_panels << level, order)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_k w_k v_k` for values already sampled at the nodes.
    pub fn sum(&self, values: &[Complex64]) -> Complex64 {
        debug_assert_eq!(values.len(), self.weights.len());
        values
            .iter()
            .zip(&self.weights)
            .fold(Complex64::new(0.0, 0.0), |acc, (v, w)| acc + v * w)
    }

    pub fn integrate<F>(&self, mut f: F) -> Complex64
    where
        F: FnMut(f64) -> Complex64,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(Complex64::new(0.0, 0.0), |acc, (&x, &w)| acc + f(x) * w)
    }
}

/// `(1 / 2πi) ∮ f` over the circle `|ζ − center| = radius` by the
/// `points`-node trapezoid rule, which converges geometrically for
/// functions analytic in an annulus around the circle.
pub fn circle_mean<F>(center: Complex64, radius: f64, points: usize, mut f: F) -> Complex64
where
    F: FnMut(Complex64) -> Complex64,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..points {
        let phase = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / points as f64);
        let z = center + phase * radius;
        // dζ = i r e^{iφ} dφ, divided by 2πi.
        acc += f(z) * phase * radius;
    }
    acc / points as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(6);
        // Degree 11 is the highest exact degree for 6 nodes.
        let v = gl.integrate(-1.0, 2.0, |x| Complex64::new(x.powi(11) - 3.0 * x.powi(4), 0.0));
        let exact = (2f64.powi(12) - 1.0) / 12.0 - 3.0 * (2f64.powi(5) + 1.0) / 5.0;
        assert_relative_eq!(v.re, exact, max_relative = 1e-13);
    }

    #[test]
    fn high_order_weights_sum_to_two() {
        for n in [1, 2, 17, 256, 1024] {
            let gl = GaussLegendre::new(n);
            let s: f64 = gl.weights.iter().sum();
            assert_relative_eq!(s, 2.0, max_relative = 1e-13);
            assert!(gl.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn line_rule_gaussian() {
        let rule = LineRule::new(8.0, 16, 12);
        let v = rule.integrate(|x| Complex64::new((-x * x).exp(), 0.0));
        assert_relative_eq!(v.re, PI.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn circle_mean_recovers_residue() {
        let pole = Complex64::new(0.2, 0.4);
        let v = circle_mean(pole, 0.05, 64, |z| Complex64::new(3.0, -1.0) / (z - pole) + z * z);
        assert_relative_eq!(v.re, 3.0, max_relative = 1e-13);
        assert_relative_eq!(v.im, -1.0, max_relative = 1e-13);
    }
}
