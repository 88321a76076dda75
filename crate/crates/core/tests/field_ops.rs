//! Spectral field representation: norms, sector projectors, linear operators, products and
//! period-subspace restrictions.

use std::sync::Arc;

use kg_core::basis::BasisKind;
use kg_core::diophantine::{in_omega_gamma, omega_from_eps};
use kg_core::field::{Discretization, Field, FieldError, Sector, Truncation};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spherical(lmax: usize, jmax: usize, n_split: u64, max_power: usize) -> Arc<Discretization> {
    Discretization::new(BasisKind::Spherical, Truncation { lmax, jmax, n_split }, max_power).unwrap()
}

fn small() -> Arc<Discretization> {
    spherical(16, 15, 6, 3)
}

/// Random kernel field with coefficients in `[-1, 1]` damped by `ω_j^{-decay}`.
fn kernel_field(disc: &Arc<Discretization>, rng: &mut impl Rng, decay: f64) -> Field {
    let mut v = Field::zeros(disc);
    for (l, j) in disc.kernel_modes() {
        v.set(l, j, rng.gen_range(-1.0..1.0) / disc.omega(j).powf(decay));
    }
    v
}

fn any_field(disc: &Arc<Discretization>, rng: &mut impl Rng) -> Field {
    let mut u = Field::zeros(disc);
    for l in 0..=u.lmax() {
        for j in 0..=u.jmax() {
            u.set(l, j, rng.gen_range(-1.0..1.0) / (1.0 + (l + j) as f64));
        }
    }
    u
}

fn range_field(disc: &Arc<Discretization>, rng: &mut impl Rng) -> Field {
    any_field(disc, rng).project(Sector::W)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn norm_examples() {
    let d = small();
    let u = Field::mode(&d, 1, 0, 1.0);
    let v = Field::mode(&d, 2, 1, 1.0);
    for (r, s) in [(0.0, 0.0), (1.0, 0.5), (-0.5, 2.0), (3.0, -1.0)] {
        assert!((u.norm_hr_hs(r, s) - 1.0).abs() < 1e-15);
        assert!(rel_close(v.norm_hr_hs(r, s), 2f64.powf(r + s), 1e-14));
    }
    // ⟨0⟩ = 1: an ℓ=0 coefficient is not suppressed by any time weight.
    let c = Field::mode(&d, 0, 0, 3.0);
    assert_eq!(c.norm_hr_hs(5.0, 0.0), 3.0);
}

#[test]
fn projection_examples() {
    let d = small();
    let u = Field::mode(&d, 1, 0, 1.0);
    assert_eq!(u.project(Sector::V), u);
    assert_eq!(Field::mode(&d, 2, 0, 1.0).project(Sector::V), Field::zeros(&d));
    for j in 0..=d.truncation().jmax {
        let w = d.omega(j) as usize;
        let m = Field::mode(&d, w, j, 1.0);
        let high_is_zero = m.project(Sector::VhighN) == Field::zeros(&d);
        assert_eq!(high_is_zero, (w as u64) <= d.truncation().n_split);
    }
}

#[test]
fn linear_operator_examples() {
    let d = small();
    let u = Field::mode(&d, 1, 0, 1.0);
    assert_eq!(u.apply_a(), u);
    let col1 = Field::mode(&d, 5, 1, 1.0);
    assert_eq!(col1.apply_a_inv().get(5, 1), 0.25);

    let w = Field::mode(&d, 2, 0, 1.0).apply_lomega_inv(1.0).unwrap();
    assert!((w.get(2, 0) - 1.0 / 3.0).abs() < 1e-16);
    let c = Field::mode(&d, 0, 0, 1.0).apply_lomega_inv(1.0).unwrap();
    assert_eq!(c.get(0, 0), -1.0);

    match Field::mode(&d, 2, 1, 1.0).apply_lomega_inv(1.0) {
        Err(FieldError::KernelOverlap { ell: 2, j: 1 }) => {}
        other => panic!("expected kernel overlap, got {other:?}"),
    }
    // ω = 3/2 hits the divisor 9/4·4 − 9 = 0 at (ℓ, j) = (2, 2).
    match Field::mode(&d, 2, 2, 1.0).apply_lomega_inv(1.5) {
        Err(FieldError::SmallDivisor { ell: 2, j: 2, .. }) => {}
        other => panic!("expected small divisor, got {other:?}"),
    }
}

#[test]
fn product_examples() {
    let d = small();
    let u = Field::mode(&d, 1, 0, 1.0);
    for sq in [
        u.multiply(&u).unwrap(),
        u.multiply_convolution(&u).unwrap(),
        u.power(2).unwrap(),
    ] {
        for l in 0..=sq.lmax() {
            for j in 0..=sq.jmax() {
                let expect = if j == 0 && (l == 0 || l == 2) { 0.5 } else { 0.0 };
                assert!((sq.get(l, j) - expect).abs() < 1e-14, "({l},{j}) = {}", sq.get(l, j));
            }
        }
    }
    let e1 = Field::mode(&d, 0, 1, 1.0);
    let sq = e1.multiply(&e1).unwrap();
    for j in 0..=sq.jmax() {
        let expect = if j == 0 || j == 2 { 1.0 } else { 0.0 };
        assert!((sq.get(0, j) - expect).abs() < 1e-13);
    }
    let other = spherical(16, 15, 6, 2);
    assert!(matches!(
        u.multiply(&Field::zeros(&other)),
        Err(FieldError::BasisMismatch)
    ));
    assert!(matches!(u.power(5), Err(FieldError::PowerTooHigh { p: 5, max: 3 })));
}

#[test]
fn even_kernel_powers_have_no_kernel_component() {
    let d = spherical(32, 31, 8, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let v = kernel_field(&d, &mut rng, 1.0);
        let k = v.power(2).unwrap().project(Sector::V);
        assert!(k.max_abs() <= 1e-12, "{}", k.max_abs());
    }
}

#[test]
fn restriction_and_divisor_examples() {
    let d = small();
    let u = Field::mode(&d, 1, 0, 1.0).add(&Field::mode(&d, 3, 2, 1.0)).unwrap();
    assert_eq!(u.restrict_to_period_subspace(3), Field::mode(&d, 3, 2, 1.0));
    assert_eq!(Field::mode(&d, 2, 1, 1.0).minimal_period_divisor(), 2);
    assert_eq!(u.minimal_period_divisor(), 1);
    assert_eq!(
        Field::mode(&d, 6, 5, 1.0)
            .add(&Field::mode(&d, 4, 3, 2.0))
            .unwrap()
            .minimal_period_divisor(),
        2
    );
}

#[test]
fn hopf_parity_of_period_subspaces() {
    let trunc = Truncation {
        lmax: 40,
        jmax: 16,
        n_split: 24,
    };
    // |μ₁|+|μ₂|+1 = 4 (even): every subspace is populated.
    let even = Discretization::new(BasisKind::Hopf { mu1: 1, mu2: 2 }, trunc, 3).unwrap();
    for n in 1..=6 {
        assert!(!even.low_kernel_modes(n).is_empty(), "n = {n}");
    }
    // |μ₁|+|μ₂|+1 = 1 (odd): kernel frequencies are odd, so even n leaves nothing.
    let odd = Discretization::new(BasisKind::Hopf { mu1: 0, mu2: 0 }, trunc, 3).unwrap();
    for n in 1..=6 {
        assert_eq!(odd.low_kernel_modes(n).is_empty(), n % 2 == 0, "n = {n}");
    }
}

#[test]
fn coefficient_csv_round_trip_is_bit_exact() {
    let d = small();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut u = any_field(&d, &mut rng);
    u.set(3, 4, 1.0 / 3.0);
    u.set(0, 0, -2.5e-300);
    let mut buf = Vec::new();
    u.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("ell,j,coeff"));
    let back = Field::read_csv(&d, buf.as_slice()).unwrap();
    for ((_, _, a), (_, _, b)) in u.iter().zip(back.iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn realspace_export_matches_point_evaluation() {
    let d = small();
    let u = Field::mode(&d, 1, 0, 1.0).add(&Field::mode(&d, 2, 1, 0.5)).unwrap();
    let mut buf = Vec::new();
    u.write_realspace_csv(&mut buf, 5, 7).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rd.headers().unwrap(), vec!["t", "x", "u"]);
    let mut rows = 0;
    for rec in rd.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[0].parse().unwrap();
        let x: f64 = rec[1].parse().unwrap();
        let val: f64 = rec[2].parse().unwrap();
        assert!((val - u.eval(t, x)).abs() < 1e-12);
        rows += 1;
    }
    assert_eq!(rows, 35);
}

#[test]
fn resolvent_difference_bound_on_random_range_fields() {
    let d = spherical(24, 23, 8, 3);
    let (gamma, eps) = (0.1, 1e-2);
    let omega = omega_from_eps(5, eps);
    assert!(in_omega_gamma(omega, gamma, 64).passed);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let w = range_field(&d, &mut rng);
        let diff = w
            .apply_lomega_inv(omega)
            .unwrap()
            .sub(&w.apply_lomega_inv(1.0).unwrap())
            .unwrap();
        for (r, s) in [(0.0, 0.0), (0.5, 1.5), (1.0, 0.0)] {
            assert!(diff.norm_hr_hs(r, s) <= 2.0 / gamma * eps * w.norm_hr_hs(r + 1.0, s));
        }
    }
}

fn seeds() -> impl Strategy<Value = u64> {
    any::<u64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_norm_depends_only_on_total_order(seed in seeds(), r in -1.0f64..2.0, s in -1.0f64..2.0, shift in -1.0f64..1.0) {
        let d = small();
        let v = kernel_field(&d, &mut ChaCha8Rng::seed_from_u64(seed), 0.5);
        let a = v.norm_hr_hs(r, s);
        prop_assert!(rel_close(a, v.norm_hr_hs(r + shift, s - shift), 1e-12));
        // Equal to the spatial H^{r+s} norm of the t = 0 slice.
        let slice = v.initial_slice();
        let direct: f64 = slice.iter().enumerate().map(|(j, c)| (d.omega(j).powf(r + s) * c).powi(2)).sum::<f64>().sqrt();
        prop_assert!(rel_close(a, direct, 1e-12));
    }

    #[test]
    fn projectors_are_complementary(seed in seeds()) {
        let d = small();
        let u = any_field(&d, &mut ChaCha8Rng::seed_from_u64(seed));
        let v = u.project(Sector::V);
        prop_assert_eq!(v.project(Sector::V), v.clone());
        prop_assert_eq!(v.add(&u.project(Sector::W)).unwrap(), u.clone());
        prop_assert_eq!(u.project(Sector::VlowN).add(&u.project(Sector::VhighN)).unwrap(), v.clone());
        prop_assert!(v.is_in_sector(Sector::V) && u.project(Sector::W).is_in_sector(Sector::W));
        prop_assert_eq!(v.inner(&u.project(Sector::W)).unwrap(), 0.0);
        for s in [0.0, 1.0, 2.5] {
            prop_assert!(v.norm_v(s) <= u.norm_hr_hs(0.0, s));
        }
    }

    #[test]
    fn a_inverse_smooths_and_inverts(seed in seeds(), s in -1.0f64..3.0) {
        let d = small();
        let v = kernel_field(&d, &mut ChaCha8Rng::seed_from_u64(seed), 0.0);
        prop_assert!(v.apply_a_inv().norm_v(s - 2.0) <= v.norm_v(s) * (1.0 + 1e-14));
        let back = v.apply_a().apply_a_inv();
        prop_assert!(back.sub(&v).unwrap().max_abs() <= 1e-15 * v.max_abs().max(1.0));
    }

    #[test]
    fn low_high_smoothing(seed in seeds(), s in -1.0f64..2.0, gap in 0.0f64..2.0) {
        let d = small();
        let n = d.truncation().n_split as f64;
        let v = kernel_field(&d, &mut ChaCha8Rng::seed_from_u64(seed), 0.0);
        let sp = s + gap;
        prop_assert!(v.project(Sector::VlowN).norm_v(sp) <= n.powf(gap) * v.norm_v(s) * (1.0 + 1e-13));
        prop_assert!(v.project(Sector::VhighN).norm_v(s) <= n.powf(-gap) * v.norm_v(sp) * (1.0 + 1e-13));
    }

    #[test]
    fn period_subspace_norm_scaling(seed in seeds(), n in 1usize..5, s in -1.0f64..1.0, gap in 0.0f64..2.0) {
        let d = small();
        let v = kernel_field(&d, &mut ChaCha8Rng::seed_from_u64(seed), 0.0).restrict_to_period_subspace(n);
        prop_assert!(v.norm_v(s) <= (n as f64).powf(-gap) * v.norm_v(s + gap) * (1.0 + 1e-13));
        prop_assert!(v.iter().all(|(l, _, c)| c == 0.0 || l % n == 0));
    }

    #[test]
    fn lomega_round_trip_on_range(seed in seeds(), eps in 1e-4f64..1e-2) {
        let d = small();
        let omega = omega_from_eps(5, eps);
        let w = range_field(&d, &mut ChaCha8Rng::seed_from_u64(seed));
        if let Ok(x) = w.apply_lomega_inv_with_floor(omega, 1e-12) {
            let back = x.apply_lomega(omega);
            prop_assert!(back.sub(&w).unwrap().max_abs() <= 1e-12 * w.max_abs());
        }
    }

    #[test]
    fn collocation_matches_convolution_and_commutes(seed in seeds()) {
        let d = spherical(20, 19, 8, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = any_field(&d, &mut rng);
        let b = any_field(&d, &mut rng);
        let ab = a.multiply(&b).unwrap();
        let ba = b.multiply(&a).unwrap();
        let conv = a.multiply_convolution(&b).unwrap();
        let scale = ab.max_abs();
        prop_assert!(ab.sub(&ba).unwrap().max_abs() <= 1e-13 * scale);
        prop_assert!(ab.sub(&conv).unwrap().max_abs() <= 1e-12 * scale);
    }

    #[test]
    fn cube_matches_repeated_convolution(seed in seeds()) {
        let d = spherical(12, 11, 8, 3);
        let a = any_field(&d, &mut ChaCha8Rng::seed_from_u64(seed));
        let cube = a.power(3).unwrap();
        // Exact reference: convolve on a grid wide enough to hold the untruncated square.
        let wide = spherical(36, 35, 8, 1);
        let lift = |f: &Field| {
            let mut g = Field::zeros(&wide);
            for (l, j, c) in f.iter() { g.set(l, j, c); }
            g
        };
        let aw = lift(&a);
        let cw = aw.multiply_convolution(&aw).unwrap().multiply_convolution(&aw).unwrap();
        let scale = cube.max_abs();
        for (l, j, c) in cube.iter() {
            prop_assert!((c - cw.get(l, j)).abs() <= 1e-12 * scale);
        }
    }
}
