//! Gaussian quadrature rules for the two normalized spatial measures.
//!
//! Both rules are expressed in the variable `c ∈ (-1, 1)`:
//!
//! * spherical symmetry: `c = cos x`, and `sin²x · (2/π) dx` becomes
//!   `(2/π) √(1-c²) dc`, the Chebyshev weight of the second kind;
//! * Hopf plane waves: `c = cos 2η`, and `sin(2η) dη` becomes `dc / 2`,
//!   the Legendre weight.
//!
//! In both cases the total mass is one.

use std::f64::consts::PI;

/// A Gaussian quadrature rule on the spatial interval.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Abscissae as angles in the spatial interval (`x ∈ (0, π)` or `η ∈ (0, π/2)`).
    pub nodes: Vec<f64>,
    /// The same abscissae in the polynomial variable `c`.
    pub cos_nodes: Vec<f64>,
    /// Positive weights summing to one.
    pub weights: Vec<f64>,
    /// Largest polynomial degree in `c` integrated exactly.
    pub exact_degree: usize,
}

impl QuadratureRule {
    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    /// `true` when the rule has no nodes.
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Integrates samples taken at the nodes.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.weights.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// Number of Gauss nodes needed to integrate polynomials of degree `degree` exactly.
pub fn nodes_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}

/// Gauss–Chebyshev rule of the second kind with `n` nodes, normalized to the
/// spherical measure `sin²x d̄x`. Exact for polynomial degree `2n - 1` in `cos x`.
pub fn gauss_chebyshev_second_kind(n: usize) -> QuadratureRule {
    let n = n.max(1);
    let h = PI / (n + 1) as f64;
    let mut nodes = Vec::with_capacity(n);
    let mut cos_nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 1..=n {
        let x = k as f64 * h;
        let s = x.sin();
        nodes.push(x);
        cos_nodes.push(x.cos());
        weights.push(2.0 / (n + 1) as f64 * s * s);
    }
    QuadratureRule {
        nodes,
        cos_nodes,
        weights,
        exact_degree: 2 * n - 1,
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (weights sum to 2).
///
/// Nodes are returned in decreasing order of `c`, i.e. increasing angle.
pub fn gauss_legendre_raw(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n.max(1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, refined by Newton's method.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = x;
        ws[i] = w;
        xs[n - 1 - i] = -x;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
    (xs, ws)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule with `n` nodes normalized to the Hopf measure `sin(2η) dη`.
/// Exact for polynomial degree `2n - 1` in `cos 2η`.
pub fn gauss_legendre_hopf(n: usize) -> QuadratureRule {
    let (xs, ws) = gauss_legendre_raw(n);
    QuadratureRule {
        nodes: xs.iter().map(|c| 0.5 * c.clamp(-1.0, 1.0).acos()).collect(),
        cos_nodes: xs.clone(),
        weights: ws.iter().map(|w| 0.5 * w).collect(),
        exact_degree: 2 * xs.len() - 1,
    }
}
