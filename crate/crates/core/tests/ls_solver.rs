//! Fixed-point solvers for the high-frequency kernel and range equations.

use kg_core::diophantine::admissible_eps_grid;
use kg_core::field::{Field, Sector, Truncation};
use kg_core::ls_solver::{
    residual_full, solve_range, solve_v2, v2_norm, w_norm, Equation, ProblemParams, ProblemSpec, SolveError,
};

const TRUNC: Truncation = Truncation {
    lmax: 32,
    jmax: 16,
    n_split: 8,
};

fn spec(p: u32, eps: f64) -> ProblemSpec {
    let mut params = ProblemParams::new(p, eps);
    params.trunc = TRUNC;
    ProblemSpec::new(params).unwrap()
}

/// A kernel field spread over the first three low modes (so that the high-frequency
/// kernel component is forced), with unit-order coefficients.
fn spread_profile(spec: &ProblemSpec, n: usize) -> Field {
    let mut y = Field::zeros(&spec.disc);
    for (k, (l, j)) in spec.disc.low_kernel_modes(n).into_iter().take(3).enumerate() {
        y.set(l, j, [1.0, 0.5, 0.3][k]);
    }
    y
}

/// Least-squares slope of `log y` against `log x`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn zero_data_give_zero_components() {
    for p in [2, 3, 5] {
        let s = spec(p, 1e-2);
        let z = Field::zeros(&s.disc);
        let (v2, iters) = solve_v2(&z, &z, &s).unwrap();
        assert_eq!(v2, z);
        assert!(iters <= 1);
        let st = solve_range(&z, &s).unwrap();
        assert_eq!(st.w, z);
        assert_eq!(st.v2, z);
    }
}

#[test]
fn quintic_components_stay_in_their_balls() {
    let s = spec(5, 1e-2);
    let v1 = Field::mode(&s.disc, 1, 0, s.eps.powf(0.25));
    let (v2, _) = solve_v2(&v1, &Field::zeros(&s.disc), &s).unwrap();
    assert!(v2_norm(&v2, s.tunables.delta) <= s.rho.rho2);
    let y = spread_profile(&s, 1);
    let v1 = y.scale(s.eps.powf(0.25) / y.norm_v(1.0));
    let st = solve_range(&v1, &s).unwrap();
    assert!(v2_norm(&st.v2, s.tunables.delta) <= s.rho.rho2);
    assert!(w_norm(&st.w, s.tunables.delta) <= s.rho.rho3);
    assert!(st.v2.is_in_sector(Sector::VhighN) && st.w.is_in_sector(Sector::W));
    assert!(st.residuals.high_kernel <= s.tol.fp_tol * v1.max_abs());
    assert!(st.residuals.range <= s.tol.fp_tol * v1.max_abs());
}

/// Kernel datum spread over every low mode with `V¹` norm `frac·ρ₁`.
fn ball_datum(s: &ProblemSpec, frac: f64) -> Field {
    let mut v1 = Field::zeros(&s.disc);
    let modes = s.disc.low_kernel_modes(1);
    for &(l, j) in &modes {
        v1.set(l, j, frac * s.rho.rho1 / (modes.len() as f64).sqrt() / l as f64);
    }
    v1
}

#[test]
fn grossly_large_eps_diverges() {
    let mut params = ProblemParams::new(5, 0.5);
    params.gamma = 0.01;
    params.trunc = TRUNC;
    let s = ProblemSpec::new(params).unwrap();
    match solve_range(&ball_datum(&s, 0.5), &s) {
        Err(SolveError::Diverged { norm, limit, .. }) => assert!(norm > limit),
        other => panic!("expected divergence, got {:?}", other.map(|st| st.iterations)),
    }
    // The same datum relative to the ball converges in the small-ε regime.
    let small = spec(5, 1e-3);
    assert!(solve_range(&ball_datum(&small, 0.5), &small).is_ok());
}

#[test]
fn increments_contract_geometrically() {
    // Data at the edge of the ball contract slowly enough to leave a long geometric tail
    // above the stopping threshold.
    for (p, eps) in [(2, 0.05), (3, 0.05), (5, 0.03)] {
        let s = spec(p, eps);
        let y = spread_profile(&s, 1);
        let v1 = y.scale(s.rho.rho1 / y.norm_v(1.0));
        let st = solve_range(&v1, &s).unwrap();
        let floor = s.tol.fp_tol * v1.max_abs();
        let above: Vec<f64> = st.increments.iter().copied().take_while(|&d| d > floor).collect();
        assert!(
            above.len() >= 6,
            "p = {p}: only {} increments above the stopping threshold",
            above.len()
        );
        for pair in above[above.len() - 6..].windows(2) {
            assert!(pair[1] < pair[0], "p = {p}: {:?}", above);
        }
    }
}

#[test]
fn quadratic_kernel_parts_square_to_range() {
    let s = spec(2, 1e-2);
    let y = spread_profile(&s, 1);
    let v1 = y.scale(s.rho.rho1 / (2.0 * y.norm_v(1.0)));
    let st = solve_range(&v1, &s).unwrap();
    let v = st.v1.add(&st.v2).unwrap();
    assert!(v.power(2).unwrap().project(Sector::V).max_abs() <= 1e-12);
    assert!(st.w_tilde.is_some());
}

#[test]
fn period_subspace_is_invariant() {
    for p in [2, 3, 5] {
        let s = spec(p, 1e-2);
        let n = 2;
        let y = spread_profile(&s, n);
        let v1 = y.scale(s.rho.rho1 / (2.0 * y.norm_v(1.0)));
        let st = solve_range(&v1, &s).unwrap();
        // Collocation round-off (~1e-20) is the only content allowed off the subspace.
        let noise = 1e-14 * v1.max_abs();
        for f in [&st.v2, &st.w] {
            assert!(f.iter().all(|(l, _, c)| c.abs() <= noise || l % n == 0), "p = {p}");
        }
        assert!(st.v2.max_abs() > 0.0 && st.w.max_abs() > 0.0);
    }
}

#[test]
fn fixed_point_norms_follow_ball_exponents() {
    let grid = admissible_eps_grid(5, 0.1, 1e-4, 1e-2, 6, 64).unwrap();
    assert!(grid.len() >= 4);
    let mut v2_pts = Vec::new();
    let mut w_pts = Vec::new();
    for &(eps, _) in &grid {
        let s = spec(5, eps);
        let y = spread_profile(&s, 1);
        let v1 = y.scale(eps.powf(0.25) / y.norm_v(1.0));
        let st = solve_range(&v1, &s).unwrap();
        v2_pts.push((eps, v2_norm(&st.v2, s.tunables.delta)));
        w_pts.push((eps, w_norm(&st.w, s.tunables.delta)));
    }
    let (a, b) = (loglog_slope(&v2_pts), loglog_slope(&w_pts));
    assert!((a - 0.25).abs() <= 0.1, "v2 slope {a}");
    assert!((b - 1.25).abs() <= 0.1, "w slope {b}");
}

#[test]
fn residual_examples() {
    let mut s = spec(5, 1e-2);
    assert_eq!(residual_full(&Field::zeros(&s.disc), &s).unwrap(), 0.0);
    s.omega = 1.0;
    let u = Field::mode(&s.disc, 3, 2, 0.1);
    assert!((residual_full(&u, &s).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn divergence_reports_the_equation() {
    let mut params = ProblemParams::new(3, 0.5);
    params.gamma = 0.01;
    params.trunc = TRUNC;
    let s = ProblemSpec::new(params).unwrap();
    let v1 = spread_profile(&s, 1).scale(10.0);
    if let Err(SolveError::Diverged { equation, .. }) = solve_range(&v1, &s) {
        assert!(matches!(equation, Equation::HighKernel | Equation::Range));
    } else {
        panic!("a tenfold oversized datum must diverge");
    }
}
