//! Basis functions, quadrature and exact integral formulas checked against independent
//! oracles: trapezoid sums (exact for the cosine polynomials involved), a Golub–Welsch
//! Gauss–Legendre rule built from an eigen-decomposition, and finite differences.

use std::f64::consts::{FRAC_PI_2, PI};

use kg_core::basis::{
    eval_hopf_e, eval_spherical_e, hopf_eigen_residual, integral_space4, integral_space6, integral_time_product, omega,
    product_rule_indices, BasisError, BasisKind, Dyadic, SpatialBasis,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

/// `∫₀^π f(x) sin²x d̄x` with `d̄x = 2dx/π` by the trapezoid rule on `m` intervals; exact for
/// integrands that are cosine polynomials of degree `< 2m` after multiplying by `sin²x`.
fn spherical_integral(f: impl Fn(f64) -> f64, m: usize) -> f64 {
    (0..=m)
        .map(|k| {
            let x = PI * k as f64 / m as f64;
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            w * f(x) * x.sin().powi(2)
        })
        .sum::<f64>()
        * (PI / m as f64)
        * 2.0
        / PI
}

/// Interior-point evaluation straight from the defining quotient.
fn e_direct(n: usize, x: f64) -> f64 {
    ((n as f64 + 1.0) * x).sin() / x.sin()
}

fn spherical_product_oracle(js: &[usize]) -> f64 {
    spherical_integral(
        |x| {
            if x.sin() == 0.0 {
                0.0
            } else {
                js.iter().map(|&j| e_direct(j, x)).product()
            }
        },
        256,
    )
}

/// `∫ ∏cos(ℓ_k t) d̄t` over `[0, 2π]` by the trapezoid rule (exact for degree < m).
fn time_oracle(freqs: &[u64]) -> f64 {
    let m = 512;
    (0..m)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / m as f64;
            freqs.iter().map(|&l| (l as f64 * t).cos()).product::<f64>()
        })
        .sum::<f64>()
        * (2.0 * PI / m as f64)
        / PI
}

/// Gauss–Legendre nodes/weights on `[−1, 1]` from the Jacobi matrix eigenproblem.
fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let nodes = eig.eigenvalues.iter().copied().collect();
    let weights = (0..n).map(|k| 2.0 * eig.eigenvectors[(0, k)].powi(2)).collect();
    (nodes, weights)
}

/// `∫₀^{π/2} f(η) sin 2η dη` through `c = cos 2η` (`sin 2η dη = −dc/2`).
fn hopf_integral(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let (c, w) = golub_welsch(n);
    c.iter().zip(&w).map(|(&c, &w)| 0.5 * w * f(0.5 * c.acos())).sum()
}

#[test]
fn omega_values() {
    assert_eq!(omega(BasisKind::Spherical, 0), 1);
    assert_eq!(omega(BasisKind::Hopf { mu1: 1, mu2: 2 }, 0), 4);
    assert_eq!(omega(BasisKind::Spherical, 4), 5);
    assert_eq!(omega(BasisKind::Hopf { mu1: -1, mu2: 2 }, 3), 10);
}

#[test]
fn spherical_eigenfunction_values() {
    for x in [0.0, 0.3, 1.7, PI] {
        assert_eq!(eval_spherical_e(0, x), 1.0);
    }
    assert!((eval_spherical_e(2, FRAC_PI_2) + 1.0).abs() < 1e-15);
    for n in 0..12 {
        assert_eq!(eval_spherical_e(n, 0.0), n as f64 + 1.0);
        assert!((eval_spherical_e(n, 0.0) - e_direct(n, 1e-6)).abs() < 1e-6);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        assert_eq!(eval_spherical_e(n, PI), sign * (n as f64 + 1.0));
    }
}

#[test]
fn hopf_lowest_mode_is_constant_for_zero_momenta() {
    for eta in [0.1, 0.5, 1.2] {
        assert!((eval_hopf_e(0, 0, 0, eta) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn hopf_orthonormality_against_independent_rule() {
    for (mu1, mu2) in [(0i64, 0i64), (1, 2), (2, 1), (-3, 0)] {
        for j in 0..=12 {
            for k in j..=12 {
                let g = hopf_integral(|eta| eval_hopf_e(j, mu1, mu2, eta) * eval_hopf_e(k, mu1, mu2, eta), 48);
                let target = if j == k { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-10, "({mu1},{mu2}) j={j} k={k}: {g}");
            }
        }
    }
}

#[test]
fn basis_quadrature_is_discretely_orthonormal() {
    for kind in [
        BasisKind::Spherical,
        BasisKind::Hopf { mu1: 0, mu2: 0 },
        BasisKind::Hopf { mu1: 1, mu2: 2 },
        BasisKind::Hopf { mu1: 2, mu2: 1 },
    ] {
        let b = SpatialBasis::new(kind, 24, 6).unwrap();
        assert!(b.orthonormality_error() < 1e-10, "{kind:?}");
        assert!((b.quadrature().weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert!(b.quadrature().weights.iter().all(|&w| w > 0.0));
    }
}

#[test]
fn hopf_eigen_residual_small_and_matches_finite_differences() {
    for (mu1, mu2) in [(0i64, 0i64), (1, 2), (2, 1), (3, -1)] {
        let kind = BasisKind::Hopf { mu1, mu2 };
        for j in 0..=10 {
            let w2 = (omega(kind, j) as f64).powi(2);
            for k in 1..20 {
                let eta = FRAC_PI_2 * k as f64 / 20.0;
                assert!(hopf_eigen_residual(j, mu1, mu2, eta).abs() <= 1e-8 * w2);
                // Independent: central differences of the point evaluation.
                let h = 1e-4;
                let f = |x: f64| eval_hopf_e(j, mu1, mu2, x);
                let d1 = (f(eta + h) - f(eta - h)) / (2.0 * h);
                let d2 = (f(eta + h) - 2.0 * f(eta) + f(eta - h)) / (h * h);
                let (m1, m2) = (mu1 as f64, mu2 as f64);
                let lap = d2 + 2.0 / (2.0 * eta).tan() * d1
                    - (m1 * m1 / eta.sin().powi(2) + m2 * m2 / eta.cos().powi(2)) * f(eta);
                let fd = lap + (w2 - 1.0) * f(eta);
                assert!(fd.abs() <= 1e-4 * w2 * w2, "FD residual {fd} at j={j}, η={eta}");
            }
        }
    }
}

#[test]
fn product_rule_examples() {
    assert_eq!(product_rule_indices(1, 1), vec![0, 2]);
    assert_eq!(product_rule_indices(2, 1), vec![1, 3]);
    assert_eq!(product_rule_indices(1, 2), vec![1, 3]);
    for n in 0..10 {
        assert_eq!(product_rule_indices(n, 0), vec![n]);
    }
}

#[test]
fn time_integral_examples() {
    assert_eq!(integral_time_product(&[1, 1]), Dyadic::new(1, 0));
    assert_eq!(integral_time_product(&[1; 6]), Dyadic::new(5, 3));
    assert_eq!(integral_time_product(&[1; 6]).to_string(), "5/8");
    assert_eq!(integral_time_product(&[1, 2]), Dyadic::new(0, 0));
    assert_eq!(integral_time_product(&[]), Dyadic::new(2, 0));
    assert!((time_oracle(&[1; 6]) - 0.625).abs() < 1e-14);
    assert!((time_oracle(&[1, 1]) - 1.0).abs() < 1e-14);
}

#[test]
fn space_integral_examples() {
    let s = BasisKind::Spherical;
    assert_eq!(integral_space6(s, [0; 6]).unwrap(), 1);
    assert_eq!(integral_space6(s, [0, 0, 0, 0, 1, 1]).unwrap(), 1);
    assert_eq!(integral_space4(s, [0; 4]).unwrap(), 1);
    assert_eq!(integral_space4(s, [1, 1, 0, 0]).unwrap(), 1);
    assert_eq!(integral_space4(s, [1, 1, 1, 1]).unwrap(), 2);
    assert!((spherical_product_oracle(&[1, 1, 1, 1]) - 2.0).abs() < 1e-12);
    assert!((spherical_product_oracle(&[0; 6]) - 1.0).abs() < 1e-12);
    let h = BasisKind::Hopf { mu1: 1, mu2: 0 };
    assert_eq!(integral_space6(h, [0; 6]), Err(BasisError::HopfIntegralUnsupported));
    assert_eq!(integral_space4(h, [0; 4]), Err(BasisError::HopfIntegralUnsupported));
}

#[test]
fn space_integrals_match_oracle_for_all_small_quadruples() {
    for a in 0..=8 {
        for b in a..=8 {
            for c in b..=8 {
                for d in c..=8 {
                    let exact = integral_space4(BasisKind::Spherical, [a, b, c, d]).unwrap() as f64;
                    let q = spherical_product_oracle(&[a, b, c, d]);
                    assert!((exact - q).abs() <= 1e-10, "{:?}", [a, b, c, d]);
                    assert!(exact <= a as f64 + 1.0);
                }
            }
        }
    }
}

fn sorted_omegas(js: &[usize]) -> Vec<u64> {
    let mut w: Vec<u64> = js.iter().map(|&j| j as u64 + 1).collect();
    w.sort_unstable();
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn space_integral6_matches_oracle_and_bounds(js in proptest::array::uniform6(0usize..=8)) {
        let exact = integral_space6(BasisKind::Spherical, js).unwrap();
        let q = spherical_product_oracle(&js);
        prop_assert!((exact as f64 - q).abs() <= 1e-10);
        let w = sorted_omegas(&js);
        prop_assert!(exact <= w[0] * w[1] * w[2]);
    }

    #[test]
    fn space_integral6_is_permutation_invariant(js in proptest::array::uniform6(0usize..=12), rot in 0usize..6) {
        let mut r = js;
        r.rotate_left(rot);
        r.swap(0, 5);
        prop_assert_eq!(
            integral_space6(BasisKind::Spherical, js).unwrap(),
            integral_space6(BasisKind::Spherical, r).unwrap()
        );
    }

    #[test]
    fn product_rule_holds_pointwise(n in 0usize..20, m in 0usize..20, x in 0.01f64..3.13) {
        let lhs = eval_spherical_e(n, x) * eval_spherical_e(m, x);
        let rhs: f64 = product_rule_indices(n, m).into_iter().map(|k| eval_spherical_e(k, x)).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0) * (n + m + 2) as f64);
        prop_assert_eq!(product_rule_indices(n, m).len(), n.min(m) + 1);
    }

    #[test]
    fn time_integral_matches_trapezoid(freqs in proptest::collection::vec(0u64..=10, 1..=8)) {
        let exact = integral_time_product(&freqs).to_f64();
        prop_assert!((exact - time_oracle(&freqs)).abs() <= 1e-12);
    }

    #[test]
    fn time_integral_is_permutation_symmetric(freqs in proptest::collection::vec(0u64..=10, 1..=8)) {
        let mut rev = freqs.clone();
        rev.reverse();
        prop_assert_eq!(integral_time_product(&freqs), integral_time_product(&rev));
    }
}
