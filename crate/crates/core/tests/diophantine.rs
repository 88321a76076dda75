//! Finite-horizon Diophantine certification, admissible ε grids and resolvent margins.

use kg_core::basis::BasisKind;
use kg_core::diophantine::{admissible_eps_grid, in_omega_gamma, omega_from_eps, resolvent_margin, DiophantineError};
use kg_core::field::{Discretization, Truncation};
use proptest::prelude::*;

/// Brute-force margin over every `j` in a wide window, independent of the nearest-integer
/// shortcut used by the library.
fn brute_margin(omega: f64, gamma: f64, ell_max: u64) -> f64 {
    let mut m = f64::INFINITY;
    for l in 1..=ell_max {
        let x = omega * l as f64;
        for j in 0..=(3 * l as i64 + 3) {
            if j != l as i64 {
                m = m.min((x - j as f64).abs() - gamma / l as f64);
            }
        }
    }
    m
}

#[test]
fn integer_frequency_passes() {
    let c = in_omega_gamma(1.0, 0.5, 10_000);
    assert!(c.passed);
    assert_eq!(c.ell_max, 10_000);
    assert!(c.margin >= 0.0);
}

#[test]
fn rational_frequency_fails_at_exact_hit() {
    let c = in_omega_gamma(1.5, 0.1, 10);
    assert!(!c.passed);
    assert_eq!(c.worst_pair, (2, 3));
    assert!((c.margin + 0.05).abs() < 1e-15);
}

#[test]
fn sqrt_two_passes_with_positive_margin() {
    let c = in_omega_gamma(2f64.sqrt(), 0.1, 10_000);
    assert!(c.passed && c.margin > 0.0);
    // Convergents p/q of √2 satisfy q|√2 q − p| → 1/(2√2) ≈ 0.354, well above γ = 0.1.
    for (q, p) in [(5u64, 7i64), (12, 17), (29, 41), (70, 99), (169, 239)] {
        let gap = (2f64.sqrt() * q as f64 - p as f64).abs();
        assert!(gap * q as f64 > 0.29, "q = {q}: {}", gap * q as f64);
    }
}

#[test]
fn unit_frequency_passes_for_all_gamma_up_to_one() {
    for gamma in [1e-3, 0.1, 0.5, 1.0] {
        for horizon in [1, 10, 1000] {
            assert!(in_omega_gamma(1.0, gamma, horizon).passed);
        }
    }
}

#[test]
fn grid_examples() {
    let g = admissible_eps_grid(5, 0.1, 1e-2, 1e-2, 1, 64).unwrap();
    assert_eq!(g.len(), 1);
    assert_eq!(g[0].1, 1.01f64.sqrt());
    assert_eq!(omega_from_eps(2, 0.01), 0.99f64.sqrt());
    assert!(omega_from_eps(2, 0.01) < 1.0);
    let g2 = admissible_eps_grid(2, 0.1, 1e-4, 1e-2, 9, 64).unwrap();
    assert!(!g2.is_empty());
    for (e, w) in g2 {
        assert!((1e-4..=1e-2 * (1.0 + 1e-12)).contains(&e));
        assert!(w < 1.0 && in_omega_gamma(w, 0.1, 64).passed);
    }
}

#[test]
fn over_constrained_grid_is_empty() {
    match admissible_eps_grid(5, 0.99, 0.05, 0.06, 5, 1000) {
        Err(DiophantineError::EmptyGrid { .. }) => {}
        other => panic!("expected an empty grid, got {other:?}"),
    }
}

#[test]
fn resolvent_margin_examples() {
    let d = Discretization::new(
        BasisKind::Spherical,
        Truncation {
            lmax: 10,
            jmax: 9,
            n_split: 4,
        },
        2,
    )
    .unwrap();
    assert!(resolvent_margin(1.0, &d) >= 1.0);
    assert_eq!(resolvent_margin(1.5, &d), 0.0);
    let gamma = 0.1;
    for (_, w) in admissible_eps_grid(5, gamma, 1e-3, 1e-2, 10, 64).unwrap() {
        let big = Discretization::new(
            BasisKind::Spherical,
            Truncation {
                lmax: 64,
                jmax: 32,
                n_split: 8,
            },
            2,
        )
        .unwrap();
        assert!(resolvent_margin(w, &big) >= gamma / 2.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn margin_matches_brute_force(omega in 0.5f64..2.0, gamma in 0.01f64..0.5, horizon in 1u64..60) {
        let c = in_omega_gamma(omega, gamma, horizon);
        let b = brute_margin(omega, gamma, horizon);
        prop_assert!((c.margin - b).abs() <= 1e-12);
        prop_assert_eq!(c.passed, b >= 0.0);
    }

    #[test]
    fn certification_is_monotone_in_horizon(omega in 0.5f64..2.0, gamma in 0.01f64..0.5, l1 in 1u64..200, extra in 0u64..200) {
        let a = in_omega_gamma(omega, gamma, l1);
        let b = in_omega_gamma(omega, gamma, l1 + extra);
        prop_assert!(b.margin <= a.margin);
        if !a.passed {
            prop_assert!(!b.passed);
        }
    }

    #[test]
    fn certified_frequencies_have_half_gamma_margin(eps in 1e-4f64..1e-1, p in prop::sample::select(vec![2u32, 3, 5])) {
        let gamma = 0.1;
        let w = omega_from_eps(p, eps);
        let d = Discretization::new(BasisKind::Spherical, Truncation { lmax: 24, jmax: 20, n_split: 6 }, 2).unwrap();
        if in_omega_gamma(w, gamma, 24).passed {
            prop_assert!(resolvent_margin(w, &d) >= gamma / 2.0);
        }
    }
}
