//! Spatial eigenbases of the two symmetry classes on the 3-sphere.
//!
//! * Spherically symmetric functions depend on the polar angle `x ∈ [0, π]`.
//!   The eigenfunctions `e_n(x) = sin((n+1)x)/sin x` are Chebyshev polynomials
//!   of the second kind in `cos x`, with frequencies `ω_n = n + 1`.
//! * Hopf plane waves carry momenta `(μ₁, μ₂)` and depend on `η ∈ [0, π/2]`.
//!   The eigenfunctions are weighted Jacobi polynomials in `cos 2η`, with
//!   frequencies `ω_j = 2j + 1 + |μ₁| + |μ₂|`.
//!
//! In both cases `A = -Δ + 1` acts on `e_j` as multiplication by `ω_j²`, and
//! the eigenfunctions are orthonormal for the normalized measure of total mass 1.

mod integrals;
pub mod quadrature;

pub use integrals::{integral_space4, integral_space6, integral_time_product, Dyadic};
pub use quadrature::QuadratureRule;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by basis construction and the exact integral formulas.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BasisError {
    /// The closed-form space integrals exist only for the spherical basis.
    #[error("closed-form space integrals are only available for the spherical basis")]
    HopfIntegralUnsupported,
    /// An eigenfunction product order below two was requested.
    #[error("product order must be at least 2, got {0}")]
    InvalidProductOrder(usize),
}

/// The symmetry class of the spatial eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisKind {
    /// Functions of the polar angle only.
    Spherical,
    /// Hopf plane waves with integer momenta.
    Hopf { mu1: i64, mu2: i64 },
}

impl BasisKind {
    /// `|μ₁|+|μ₂|+1` for Hopf waves; `1` for the spherical basis.
    pub fn lowest_frequency(&self) -> u64 {
        omega(*self, 0)
    }

    /// Absolute momenta `(|μ₁|, |μ₂|)` (zero for the spherical basis).
    pub fn abs_momenta(&self) -> (u64, u64) {
        match *self {
            BasisKind::Spherical => (0, 0),
            BasisKind::Hopf { mu1, mu2 } => (mu1.unsigned_abs(), mu2.unsigned_abs()),
        }
    }
}

/// Eigenfrequency `ω_j` of mode `j`; `A e_j = ω_j² e_j`.
pub fn omega(kind: BasisKind, j: usize) -> u64 {
    match kind {
        BasisKind::Spherical => j as u64 + 1,
        BasisKind::Hopf { .. } => {
            let (a, b) = kind.abs_momenta();
            2 * j as u64 + 1 + a + b
        }
    }
}

/// Spherical eigenfunction `e_n(x) = sin((n+1)x)/sin x`, continuous at the poles.
pub fn eval_spherical_e(n: usize, x: f64) -> f64 {
    let s = x.sin();
    if s.abs() < 1e-7 {
        // Removable singularity: e_n(0) = n+1, e_n(π) = (-1)^n (n+1).
        let sign = if x > std::f64::consts::FRAC_PI_2 && n % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        return sign * (n + 1) as f64;
    }
    chebyshev_u(n, x.cos())
}

/// Chebyshev polynomial of the second kind `U_n(c)` by the three-term recurrence.
pub fn chebyshev_u(n: usize, c: f64) -> f64 {
    let (mut u0, mut u1) = (1.0, 2.0 * c);
    if n == 0 {
        return 1.0;
    }
    for _ in 1..n {
        let u2 = 2.0 * c * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    u1
}

/// Jacobi polynomial `P_n^{(a,b)}(x)` by the standard three-term recurrence.
pub fn jacobi(n: usize, a: f64, b: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = 0.5 * (a - b + (a + b + 2.0) * x);
    for k in 2..=n {
        let k = k as f64;
        let s = 2.0 * k + a + b;
        let c1 = 2.0 * k * (k + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * s;
        let p2 = (c2 * p1 - c3 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// First and second derivatives of `P_n^{(a,b)}` via `d/dx P_n^{(a,b)} = (n+a+b+1)/2 · P_{n-1}^{(a+1,b+1)}`.
pub fn jacobi_derivatives(n: usize, a: f64, b: f64, x: f64) -> (f64, f64) {
    let nf = n as f64;
    let d1 = if n >= 1 {
        0.5 * (nf + a + b + 1.0) * jacobi(n - 1, a + 1.0, b + 1.0, x)
    } else {
        0.0
    };
    let d2 = if n >= 2 {
        0.25 * (nf + a + b + 1.0) * (nf + a + b + 2.0) * jacobi(n - 2, a + 2.0, b + 2.0, x)
    } else {
        0.0
    };
    (d1, d2)
}

/// Unnormalized Hopf profile `(1-c)^{a/2} (1+c)^{b/2} P_j^{(a,b)}(c)`.
fn hopf_profile(j: usize, a: u64, b: u64, c: f64) -> f64 {
    let (af, bf) = (a as f64, b as f64);
    (1.0 - c).max(0.0).powf(0.5 * af) * (1.0 + c).max(0.0).powf(0.5 * bf) * jacobi(j, af, bf, c)
}

/// Normalization constant making the Hopf eigenfunction `j` unit-norm for `sin(2η)dη`,
/// computed from an exact Gauss–Legendre quadrature of the squared profile.
pub fn hopf_normalization(j: usize, a: u64, b: u64) -> f64 {
    let degree = 2 * j + (a + b) as usize;
    let rule = quadrature::gauss_legendre_hopf(quadrature::nodes_for_degree(degree) + 1);
    let norm2: f64 = rule
        .cos_nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&c, &w)| {
            let f = hopf_profile(j, a, b, c);
            w * f * f
        })
        .sum();
    1.0 / norm2.sqrt()
}

/// Hopf eigenfunction `e_j^{(μ₁,μ₂)}(η)`.
pub fn eval_hopf_e(j: usize, mu1: i64, mu2: i64, eta: f64) -> f64 {
    let (a, b) = (mu1.unsigned_abs(), mu2.unsigned_abs());
    hopf_normalization(j, a, b) * hopf_profile(j, a, b, (2.0 * eta).cos())
}

/// Value, first and second `η`-derivatives of the Hopf eigenfunction, from exact
/// Jacobi-polynomial derivatives. Valid for `η` strictly inside `(0, π/2)`.
pub fn hopf_e_with_derivatives(j: usize, mu1: i64, mu2: i64, eta: f64) -> (f64, f64, f64) {
    let (a, b) = (mu1.unsigned_abs() as f64, mu2.unsigned_abs() as f64);
    let norm = hopf_normalization(j, mu1.unsigned_abs(), mu2.unsigned_abs());
    let c = (2.0 * eta).cos();
    let (al, be) = (0.5 * a, 0.5 * b);
    let weight = (1.0 - c).powf(al) * (1.0 + c).powf(be);
    let log_d = -al / (1.0 - c) + be / (1.0 + c);
    let log_dd = -al / ((1.0 - c) * (1.0 - c)) - be / ((1.0 + c) * (1.0 + c));
    let w1 = weight * log_d;
    let w2 = weight * (log_d * log_d + log_dd);
    let p = jacobi(j, a, b, c);
    let (p1, p2) = jacobi_derivatives(j, a, b, c);
    let g = weight * p;
    let g1 = w1 * p + weight * p1;
    let g2 = w2 * p + 2.0 * w1 * p1 + weight * p2;
    let c1 = -2.0 * (2.0 * eta).sin();
    let c2 = -4.0 * (2.0 * eta).cos();
    (norm * g, norm * g1 * c1, norm * (g2 * c1 * c1 + g1 * c2))
}

/// Index list of the spherical product rule `e_n e_m = Σ_{k=0}^{m} e_{n-m+2k}` (n ≥ m).
pub fn product_rule_indices(n: usize, m: usize) -> Vec<usize> {
    let (hi, lo) = if n >= m { (n, m) } else { (m, n) };
    (0..=lo).map(|k| hi - lo + 2 * k).collect()
}

/// A spatial eigenbasis truncated at `Jmax`, with a quadrature rule exact for the
/// eigenfunction products the nonlinear solvers form.
#[derive(Debug, Clone)]
pub struct SpatialBasis {
    kind: BasisKind,
    jmax: usize,
    omegas: Vec<u64>,
    quad: QuadratureRule,
    /// Row-major `(Jmax+1) × nodes` matrix of `e_j(x_q)`.
    node_values: Vec<f64>,
}

impl SpatialBasis {
    /// Builds the basis with a quadrature exact for products of `product_order`
    /// eigenfunctions of index ≤ `jmax` (use `p + 1` for the degree-`p` nonlinearity).
    pub fn new(kind: BasisKind, jmax: usize, product_order: usize) -> Result<Self, BasisError> {
        if product_order < 2 {
            return Err(BasisError::InvalidProductOrder(product_order));
        }
        let omegas = (0..=jmax).map(|j| omega(kind, j)).collect();
        let (quad, node_values) = match kind {
            BasisKind::Spherical => {
                let degree = product_order * jmax;
                let quad = quadrature::gauss_chebyshev_second_kind(quadrature::nodes_for_degree(degree));
                let mut vals = Vec::with_capacity((jmax + 1) * quad.len());
                for j in 0..=jmax {
                    vals.extend(quad.cos_nodes.iter().map(|&c| chebyshev_u(j, c)));
                }
                (quad, vals)
            }
            BasisKind::Hopf { .. } => {
                let (a, b) = kind.abs_momenta();
                // Products of k eigenfunctions carry the weight (1-c)^{ka/2}(1+c)^{kb/2};
                // rounding k up to even keeps the integrand polynomial.
                let k = product_order + product_order % 2;
                let degree = k * jmax + k * (a + b) as usize / 2;
                let quad = quadrature::gauss_legendre_hopf(quadrature::nodes_for_degree(degree));
                let mut vals = Vec::with_capacity((jmax + 1) * quad.len());
                for j in 0..=jmax {
                    let norm = hopf_normalization(j, a, b);
                    vals.extend(quad.cos_nodes.iter().map(|&c| norm * hopf_profile(j, a, b, c)));
                }
                (quad, vals)
            }
        };
        Ok(Self {
            kind,
            jmax,
            omegas,
            quad,
            node_values,
        })
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    /// Number of modes, `Jmax + 1`.
    pub fn modes(&self) -> usize {
        self.jmax + 1
    }

    pub fn omegas(&self) -> &[u64] {
        &self.omegas
    }

    pub fn omega(&self, j: usize) -> u64 {
        self.omegas[j]
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    /// Row-major `(Jmax+1) × nodes` eigenfunction samples.
    pub fn node_values(&self) -> &[f64] {
        &self.node_values
    }

    /// Samples of `e_j` at the quadrature nodes.
    pub fn mode_values(&self, j: usize) -> &[f64] {
        let q = self.quad.len();
        &self.node_values[j * q..(j + 1) * q]
    }

    /// Evaluates `e_j` at an arbitrary angle of the spatial interval.
    pub fn eval(&self, j: usize, angle: f64) -> f64 {
        match self.kind {
            BasisKind::Spherical => eval_spherical_e(j, angle),
            BasisKind::Hopf { mu1, mu2 } => eval_hopf_e(j, mu1, mu2, angle),
        }
    }

    /// Upper end of the spatial interval (`π` or `π/2`).
    pub fn interval_end(&self) -> f64 {
        match self.kind {
            BasisKind::Spherical => std::f64::consts::PI,
            BasisKind::Hopf { .. } => std::f64::consts::FRAC_PI_2,
        }
    }

    /// Largest deviation of the discrete Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let w = &self.quad.weights;
        let mut worst: f64 = 0.0;
        for j in 0..=self.jmax {
            for k in j..=self.jmax {
                let s: f64 = self
                    .mode_values(j)
                    .iter()
                    .zip(self.mode_values(k))
                    .zip(w)
                    .map(|((a, b), w)| a * b * w)
                    .sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }
}

/// Pointwise residual `Δ_{μ₁,μ₂} e_j + (ω_j² - 1) e_j` of a Hopf eigenfunction at `η`, where
/// `Δ_{μ₁,μ₂} = ∂²_η + 2 cot(2η) ∂_η - μ₁²/sin²η - μ₂²/cos²η`.
pub fn hopf_eigen_residual(j: usize, mu1: i64, mu2: i64, eta: f64) -> f64 {
    let (e, d1, d2) = hopf_e_with_derivatives(j, mu1, mu2, eta);
    let (m1, m2) = (mu1 as f64, mu2 as f64);
    let (s, c) = (eta.sin(), eta.cos());
    let lap = d2 + 2.0 / (2.0 * eta).tan() * d1 - (m1 * m1 / (s * s) + m2 * m2 / (c * c)) * e;
    let w = omega(BasisKind::Hopf { mu1, mu2 }, j) as f64;
    lap + (w * w - 1.0) * e
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn chebyshev_recurrence_matches_sine_ratio() {
        for n in 0..20 {
            let x = 0.37;
            let direct = ((n + 1) as f64 * x).sin() / x.sin();
            assert!((chebyshev_u(n, x.cos()) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn spherical_pole_limits() {
        assert_eq!(eval_spherical_e(3, 0.0), 4.0);
        assert_eq!(eval_spherical_e(3, PI), -4.0);
        assert_eq!(eval_spherical_e(2, PI), 3.0);
    }

    #[test]
    fn jacobi_low_degree_closed_forms() {
        let (a, b, x) = (1.0, 2.0, 0.3);
        assert!((jacobi(1, a, b, x) - 0.5 * (a - b + (a + b + 2.0) * x)).abs() < 1e-15);
        // Legendre special case.
        assert!((jacobi(2, 0.0, 0.0, x) - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn jacobi_derivative_matches_finite_difference() {
        let (a, b, x, h) = (2.0, 1.0, 0.21, 1e-5);
        for n in 1..10 {
            let fd = (jacobi(n, a, b, x + h) - jacobi(n, a, b, x - h)) / (2.0 * h);
            let (d1, _) = jacobi_derivatives(n, a, b, x);
            assert!((fd - d1).abs() < 1e-6 * d1.abs().max(1.0));
        }
    }

    #[test]
    fn invalid_product_order_rejected() {
        assert_eq!(
            SpatialBasis::new(BasisKind::Spherical, 4, 1).unwrap_err(),
            BasisError::InvalidProductOrder(1)
        );
    }
}
