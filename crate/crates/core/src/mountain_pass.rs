//! Variational solution of the finite-dimensional bifurcation equation.
//!
//! The reduced action `Ψ̆(v₁) = Ψ(v₁ + v₂(v₁) + w(v₁))`, with
//! `Ψ(u) = ½∫ u L_ω u − 1/(p+1) ∫ u^{p+1}`, has critical points exactly at solutions of
//! the full equation. Its leading part is `(ςε/2)‖v₁‖²_{V¹} − G(v₁)` with
//! `G(v) = 1/(p+1) ∫ v^{p+1}` for `p ∈ {3, 5}`, and `−(ε/2)‖v₁‖² − Ğ(v₁)` with
//! `Ğ(v) = ½ ∫ v² L₁⁻¹ v²` for `p = 2`.
//!
//! The numerical scheme: maximize the 0-homogeneous ratio `±G(v)/‖v‖^q` on the unit sphere
//! of the low kernel (`m(G)` and its maximizer `y`), start from the scaled point
//! `(ε/(q m))^{1/(q−2)} y`, and converge with damped Newton on `∇Ψ̆` using a
//! finite-difference Jacobian.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::field::{Discretization, Field, Sector, Truncation};
use crate::ls_solver::{residual_full, solve_range_from, v2_norm, w_norm, Equation, LsState, ProblemSpec, SolveError};

/// Coordinates on a set of kernel modes `(ℓ = ω_j, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCoords {
    pub modes: Vec<(usize, usize)>,
    pub omegas: Vec<f64>,
}

impl KernelCoords {
    /// Low kernel modes `ω_j ≤ N` with time frequency divisible by `n`.
    pub fn low(disc: &Discretization, n: usize) -> Result<Self, SolveError> {
        let modes = disc.low_kernel_modes(n);
        if modes.is_empty() {
            return Err(SolveError::EmptySubspace(n));
        }
        let omegas = modes.iter().map(|&(l, _)| l as f64).collect();
        Ok(Self { modes, omegas })
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn to_field(&self, disc: &Arc<Discretization>, x: &[f64]) -> Field {
        let mut f = Field::zeros(disc);
        for (&(l, j), &c) in self.modes.iter().zip(x) {
            f.set(l, j, c);
        }
        f
    }

    pub fn from_field(&self, f: &Field) -> Vec<f64> {
        self.modes.iter().map(|&(l, j)| f.get(l, j)).collect()
    }

    /// `‖x‖_{V¹} = (Σ ω_k² x_k²)^{1/2}`.
    pub fn norm_v1(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.omegas)
            .map(|(c, w)| (w * c).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨a, b⟩_{V¹}`.
    pub fn dot_v1(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).zip(&self.omegas).map(|((x, y), w)| w * w * x * y).sum()
    }
}

/// Homogeneity degree `q` of the leading functional.
pub fn homogeneity(p: u32) -> u32 {
    if p == 2 {
        4
    } else {
        p + 1
    }
}

/// The leading functional: `G(v) = 1/(p+1) ⟨Π v^p, v⟩` for `p ∈ {3, 5}`, and
/// `Ğ(v) = ½ ⟨v², L₁⁻¹ Π_W v²⟩` for `p = 2`.
///
/// Pairings are the space–time integrals `∫∫ · dμ d̄t`; with the dealiased collocation the
/// truncated values are exact.
pub fn eval_g(v: &Field, p: u32) -> Result<f64, SolveError> {
    if p == 2 {
        let sq = v.power(2)?;
        let l = sq.project(Sector::W).apply_lomega_inv(1.0)?;
        Ok(0.5 * sq.inner(&l)?)
    } else {
        let vp = v.power(p as usize)?;
        Ok(vp.inner(v)? / (p as f64 + 1.0))
    }
}

/// Partial derivatives `∂G/∂x_k` of the leading functional in kernel coordinates.
fn g_partials(v: &Field, p: u32, coords: &KernelCoords) -> Result<Vec<f64>, SolveError> {
    let dg = if p == 2 {
        let l = v.power(2)?.project(Sector::W).apply_lomega_inv(1.0)?;
        v.multiply(&l)?.scale(2.0)
    } else {
        v.power(p as usize)?
    };
    // Kernel modes have ℓ ≥ 1, where the pairing weight is 1.
    Ok(coords.modes.iter().map(|&(l, j)| dg.get(l, j)).collect())
}

/// A small discretization on which the leading functional of kernel fields supported on
/// `ω_j ≤ N` is evaluated exactly.
fn kernel_discretization(disc: &Discretization, p: u32) -> Result<Arc<Discretization>, SolveError> {
    let t = disc.truncation();
    let kind = disc.kind();
    let low = disc.low_kernel_modes(1);
    let j_top = low.iter().map(|&(_, j)| j).max().ok_or(SolveError::EmptySubspace(1))?;
    // Ğ needs v² exactly, hence twice the spatial and temporal range.
    let jmax = if p == 2 { (2 * j_top).min(t.jmax) } else { j_top };
    let top = crate::basis::omega(kind, jmax);
    let lmax = if p == 2 {
        (2 * top as usize).max(top as usize)
    } else {
        top as usize
    };
    let n_split = t.n_split.min(top);
    Ok(Discretization::new(
        kind,
        Truncation { lmax, jmax, n_split },
        p.max(2) as usize,
    )?)
}

/// The ratio `G(y)/‖y‖^q` (or `Ğ` for `p = 2`) at the lowest mode of `V_{≤N,n}`, normalized.
pub fn witness_ratio(disc: &Arc<Discretization>, p: u32, n: usize) -> Result<f64, SolveError> {
    let kd = kernel_discretization(disc, p)?;
    let coords = KernelCoords::low(&kd, n)?;
    let (l, j) = coords.modes[0];
    let y = Field::mode(&kd, l, j, 1.0 / l as f64);
    eval_g(&y, p)
}

/// Outcome of the constrained ratio ascent.
#[derive(Debug, Clone)]
pub struct RatioEstimate {
    /// `m(G)` (for `p = 2`, `m = −inf Ğ/‖v‖⁴`).
    pub m: f64,
    /// Unit-`V¹` maximizer on the problem's discretization.
    pub y: Field,
    /// The analytic witness value at the lowest mode.
    pub witness: f64,
    /// Ratio reached from every restart.
    pub restart_values: Vec<f64>,
}

struct RatioProblem {
    disc: Arc<Discretization>,
    coords: KernelCoords,
    p: u32,
    /// `+1` to maximize `G`, `−1` to minimize `Ğ`.
    sign: f64,
}

impl RatioProblem {
    /// Value `s·G` and Euclidean gradient in the unit-sphere coordinates `z_k = ω_k x_k`.
    fn value_grad(&self, z: &[f64]) -> Result<(f64, Vec<f64>), SolveError> {
        let x: Vec<f64> = z.iter().zip(&self.coords.omegas).map(|(a, w)| a / w).collect();
        let v = self.coords.to_field(&self.disc, &x);
        let g = self.sign * eval_g(&v, self.p)?;
        let d = g_partials(&v, self.p, &self.coords)?;
        let grad = d
            .iter()
            .zip(&self.coords.omegas)
            .map(|(d, w)| self.sign * d / w)
            .collect();
        Ok((g, grad))
    }

    /// Riemannian gradient ascent on the unit sphere with Armijo backtracking and
    /// Barzilai–Borwein step lengths.
    fn ascend(&self, z0: &[f64]) -> Result<(f64, Vec<f64>), SolveError> {
        let mut z = normalize(z0);
        let (mut f, g) = self.value_grad(&z)?;
        let mut rg = tangent(&g, &z);
        let mut tau = 1.0;
        let mut flat = 0;
        for _ in 0..5000 {
            let rn = norm2(&rg);
            // Near a maximizer the value error is quadratic in the tangential gradient.
            if rn <= 1e-10 * f.abs().max(1e-300) || flat >= 3 {
                break;
            }
            let mut accepted = None;
            let mut t = tau;
            for _ in 0..60 {
                let trial: Vec<f64> = z.iter().zip(&rg).map(|(a, b)| a + t * b).collect();
                let trial = normalize(&trial);
                let (ft, gt) = self.value_grad(&trial)?;
                if ft >= f + 1e-4 * t * rn * rn {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                t *= 0.5;
            }
            let Some((zn, fnew, gnew)) = accepted else {
                break;
            };
            let rgn = tangent(&gnew, &zn);
            let s: Vec<f64> = zn.iter().zip(&z).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = rgn.iter().zip(&rg).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv).abs();
            tau = if sy > 0.0 {
                (dot(&s, &s) / sy).clamp(1e-6, 1e6)
            } else {
                t * 2.0
            };
            flat = if fnew - f <= 4.0 * f64::EPSILON * f.abs() {
                flat + 1
            } else {
                0
            };
            z = zn;
            f = fnew;
            rg = rgn;
        }
        Ok((f, z))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &[f64]) -> Vec<f64> {
    let n = norm2(a);
    a.iter().map(|x| x / n).collect()
}

fn tangent(g: &[f64], z: &[f64]) -> Vec<f64> {
    let c = dot(g, z);
    g.iter().zip(z).map(|(a, b)| a - c * b).collect()
}

fn ratio_problem(spec: &ProblemSpec, n: usize) -> Result<RatioProblem, SolveError> {
    let disc = kernel_discretization(&spec.disc, spec.p)?;
    let coords = KernelCoords::low(&disc, n)?;
    Ok(RatioProblem {
        disc,
        coords,
        p: spec.p,
        sign: if spec.p == 2 { -1.0 } else { 1.0 },
    })
}

/// Lifts unit-sphere coordinates of the small discretization to a field on `spec.disc`.
fn lift(spec: &ProblemSpec, rp: &RatioProblem, z: &[f64]) -> Field {
    let x: Vec<f64> = z.iter().zip(&rp.coords.omegas).map(|(a, w)| a / w).collect();
    rp.coords.to_field(&spec.disc, &x)
}

/// Ascends the ratio from a given kernel field (any nonzero scaling), returning the
/// value and the unit-norm maximizer.
pub fn ascend_ratio_from(spec: &ProblemSpec, n: usize, start: &Field) -> Result<(f64, Field), SolveError> {
    let rp = ratio_problem(spec, n)?;
    let z0: Vec<f64> = rp
        .coords
        .modes
        .iter()
        .zip(&rp.coords.omegas)
        .map(|(&(l, j), w)| w * start.get(l, j))
        .collect();
    if norm2(&z0) == 0.0 {
        return Err(SolveError::InvalidParameter(
            "initial guess has no component in the subspace".into(),
        ));
    }
    let (m, z) = rp.ascend(&z0)?;
    Ok((m, lift(spec, &rp, &z)))
}

/// Estimates `m(G)` on `V_{≤N,n}` by multi-restart constrained ascent from the lowest
/// mode (the analytic witness) and from `restarts` random unit vectors.
pub fn estimate_mg(spec: &ProblemSpec, n: usize, restarts: usize, seed: u64) -> Result<RatioEstimate, SolveError> {
    let rp = ratio_problem(spec, n)?;
    let d = rp.coords.dim();
    let mut witness_z = vec![0.0; d];
    witness_z[0] = 1.0;
    let witness = rp.value_grad(&witness_z)?.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut starts = vec![witness_z];
    for _ in 0..restarts {
        // Decaying random spectra: the ratio favours low modes.
        let z: Vec<f64> = rp.coords.omegas.iter().map(|w| rng.gen_range(-1.0..1.0) / w).collect();
        if norm2(&z) > 0.0 {
            starts.push(z);
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut values = Vec::with_capacity(starts.len());
    for z0 in &starts {
        let (m, z) = rp.ascend(z0)?;
        values.push(m);
        if best.as_ref().map_or(true, |(bm, _)| m > *bm) {
            best = Some((m, z));
        }
    }
    let (m, mut z) = best.expect("at least the witness start");
    // Fix the sign: largest-magnitude coordinate positive.
    let k = (0..d).max_by(|&a, &b| z[a].abs().total_cmp(&z[b].abs())).unwrap_or(0);
    if z[k] < 0.0 {
        z.iter_mut().for_each(|c| *c = -*c);
    }
    Ok(RatioEstimate {
        m,
        y: lift(spec, &rp, &z),
        witness,
        restart_values: values,
    })
}

/// `Ψ(u) = ½ Σ c_ℓ (ω²ℓ² − ω_j²) u_{ℓ,j}² − 1/(p+1) ∫ u^{p+1}`.
pub fn eval_action(u: &Field, spec: &ProblemSpec) -> Result<f64, SolveError> {
    let quad = 0.5 * u.apply_lomega(spec.omega).inner(u)?;
    let up = u.power(spec.p as usize)?;
    Ok(quad - up.inner(u)? / (spec.p as f64 + 1.0))
}

/// `Ψ̆(v₁)`, solving the range system at `v₁`.
pub fn eval_reduced_action(v1: &Field, spec: &ProblemSpec) -> Result<f64, SolveError> {
    let st = solve_range_from(v1, spec, None)?;
    eval_action(&st.total(), spec)
}

/// `V¹`-gradient of `Ψ̆` on the low kernel: `(ςε ω_j² v_j − [u^p]_{ω_j,j}) / ω_j²`.
pub fn grad_reduced_action(v1: &Field, spec: &ProblemSpec) -> Result<Field, SolveError> {
    let st = solve_range_from(v1, spec, None)?;
    gradient_at(&st, spec)
}

fn gradient_at(st: &LsState, spec: &ProblemSpec) -> Result<Field, SolveError> {
    let up = st.total().power(spec.p as usize)?;
    let det = spec.detuning();
    let mut g = Field::zeros(&spec.disc);
    for (l, j) in spec.disc.low_kernel_modes(1) {
        let w2 = (l * l) as f64;
        g.set(l, j, (det * w2 * st.v1.get(l, j) - up.get(l, j)) / w2);
    }
    Ok(g)
}

/// Result of a mountain-pass solve.
#[derive(Debug, Clone)]
pub struct MountainPassReport {
    pub subspace_n: usize,
    pub m_g: f64,
    pub witness: f64,
    pub maximizer_y: Field,
    pub v1_star: Field,
    pub state: LsState,
    /// `‖∇Ψ̆‖_{V¹}` restricted to the subspace, at convergence.
    pub grad_norm: f64,
    /// `‖∇Ψ̆‖_{V¹}` on the whole low kernel at the returned point.
    pub full_grad_norm: f64,
    /// `sup |dR(v)[v]| / ‖v‖^q` over the Newton trajectory.
    pub alpha_r: f64,
    pub action_value: f64,
    /// Critical level of the leading part, signed like `Ψ̆` (negative for `p = 2`).
    pub expected_level: f64,
    pub minimal_divisor: u64,
    pub residual: f64,
    pub newton_iterations: usize,
    pub range_sweeps: usize,
}

impl MountainPassReport {
    pub fn v1_norm(&self) -> f64 {
        self.v1_star.norm_v(1.0)
    }

    /// `‖v₂‖_{V^{2+2δ}}`.
    pub fn v2_ball_norm(&self, delta: f64) -> f64 {
        v2_norm(&self.state.v2, delta)
    }

    /// `‖w‖_{H^{1/2+δ}H^{3/2+δ}}`.
    pub fn w_ball_norm(&self, delta: f64) -> f64 {
        w_norm(&self.state.w, delta)
    }
}

struct NewtonProblem<'a> {
    spec: &'a ProblemSpec,
    coords: KernelCoords,
}

impl NewtonProblem<'_> {
    fn gradient(&self, x: &[f64], warm: Option<&LsState>) -> Result<(Vec<f64>, LsState), SolveError> {
        let v1 = self.coords.to_field(&self.spec.disc, x);
        let st = solve_range_from(&v1, self.spec, warm)?;
        let g = gradient_at(&st, self.spec)?;
        Ok((self.coords.from_field(&g), st))
    }

    /// `|dR(v)[v]| / ‖v‖^q` with `R = Ψ̆ − (leading part)`.
    fn alpha(&self, x: &[f64], g: &[f64]) -> Result<f64, SolveError> {
        let spec = self.spec;
        let v = self.coords.to_field(&spec.disc, x);
        let n2 = self.coords.dot_v1(x, x);
        let q = spec.q() as f64;
        let lead = spec.detuning() * n2 - q * eval_g(&v, spec.p)?;
        let dpsi = self.coords.dot_v1(g, x);
        Ok((dpsi - lead).abs() / n2.powf(q / 2.0))
    }
}

/// Converges to a critical point of `Ψ̆` in the period subspace `V_{≤N,n}`.
pub fn find_critical_point(spec: &ProblemSpec, n: usize) -> Result<MountainPassReport, SolveError> {
    find_critical_point_with(spec, n, 4, 0)
}

/// As [`find_critical_point`] with explicit ascent restarts and seed.
pub fn find_critical_point_with(
    spec: &ProblemSpec,
    n: usize,
    restarts: usize,
    seed: u64,
) -> Result<MountainPassReport, SolveError> {
    let est = estimate_mg(spec, n, restarts, seed)?;
    let coords = KernelCoords::low(&spec.disc, n)?;
    let q = spec.q() as f64;
    let scale = (spec.eps / (q * est.m)).powf(1.0 / (q - 2.0));
    let mut x: Vec<f64> = coords.from_field(&est.y).iter().map(|c| scale * c).collect();
    let np = NewtonProblem { spec, coords };
    let ball = spec.tol.divergence_factor * spec.rho.rho1;

    let (mut g, mut st) = np.gradient(&x, None)?;
    let mut alpha_r = np.alpha(&x, &g)?;
    let mut sweeps = st.iterations;
    let mut iterations = 0;
    let d = np.coords.dim();
    loop {
        let gn = np.coords.norm_v1(&g);
        let xn = np.coords.norm_v1(&x);
        if gn <= spec.tol.grad_tol * xn {
            break;
        }
        if iterations >= 50 {
            return Err(SolveError::Stalled {
                equation: Equation::LowKernel,
                iterations,
                increment: gn,
            });
        }
        iterations += 1;
        // Central-difference Jacobian of the gradient.
        let mut jac = DMatrix::<f64>::zeros(d, d);
        for k in 0..d {
            let h = 1e-6 * xn / np.coords.omegas[k];
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let (gp, sp) = np.gradient(&xp, Some(&st))?;
            let (gm, sm) = np.gradient(&xm, Some(&st))?;
            sweeps += sp.iterations + sm.iterations;
            for i in 0..d {
                jac[(i, k)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_iterator(d, g.iter().map(|c| -c));
        let jscale = jac.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut lambda = 0.0;
        let mut accepted = None;
        'damping: for _ in 0..12 {
            let mat = &jac + DMatrix::<f64>::identity(d, d) * lambda;
            if let Some(step) = mat.lu().solve(&rhs) {
                for frac in [1.0, 0.5, 0.25, 0.125] {
                    let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + frac * b).collect();
                    let tn = np.coords.norm_v1(&trial);
                    if tn.is_nan() || tn > ball {
                        continue;
                    }
                    match np.gradient(&trial, Some(&st)) {
                        Ok((gt, stt)) if np.coords.norm_v1(&gt) < gn => {
                            accepted = Some((trial, gt, stt));
                            break 'damping;
                        }
                        Ok(_) | Err(SolveError::Diverged { .. }) | Err(SolveError::Stalled { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
            lambda = if lambda == 0.0 {
                1e-8 * jscale.max(1e-300)
            } else {
                lambda * 10.0
            };
        }
        let Some((xn_, gn_, stn)) = accepted else {
            return Err(SolveError::Stalled {
                equation: Equation::LowKernel,
                iterations,
                increment: gn,
            });
        };
        x = xn_;
        g = gn_;
        sweeps += stn.iterations;
        st = stn;
        alpha_r = alpha_r.max(np.alpha(&x, &g)?);
        if np.coords.norm_v1(&x) > ball {
            return Err(SolveError::Diverged {
                equation: Equation::LowKernel,
                iterations,
                norm: np.coords.norm_v1(&x),
                limit: ball,
            });
        }
    }
    let v1_star = np.coords.to_field(&spec.disc, &x);
    let u = st.total();
    let full_grad = gradient_at(&st, spec)?;
    let level_sign = if spec.p == 2 { -1.0 } else { 1.0 };
    let expected_level = level_sign * (q - 2.0) / 2.0 * est.m * (spec.eps / (q * est.m)).powf(q / (q - 2.0));
    Ok(MountainPassReport {
        subspace_n: n,
        m_g: est.m,
        witness: est.witness,
        maximizer_y: est.y,
        grad_norm: np.coords.norm_v1(&g),
        full_grad_norm: full_grad.norm_v(1.0),
        alpha_r,
        action_value: eval_action(&u, spec)?,
        expected_level,
        minimal_divisor: u.minimal_period_divisor(),
        residual: residual_full(&u, spec)?,
        newton_iterations: iterations,
        range_sweeps: sweeps,
        v1_star,
        state: st,
    })
}

/// A candidate period subspace examined by the multiplicity sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SubspaceCandidate {
    pub n: usize,
    pub m_n: f64,
    /// Largest ratio among the strictly smaller subspaces `V_{n·k}`, `k ≥ 2`.
    pub coarser_sup: f64,
    pub accepted: bool,
    pub note: String,
}

/// Result of the multiplicity sweep.
#[derive(Debug, Clone)]
pub struct MultiplicityReport {
    pub branches: Vec<MountainPassReport>,
    pub candidates: Vec<SubspaceCandidate>,
    /// `true` when fewer than `k_star` distinct minimal periods were found.
    pub insufficient: bool,
}

/// Safety factor applied to measured ratios in the branch-acceptance gate.
pub const GATE_FACTOR: f64 = 0.9;

/// Searches period subspaces `n = 1, 2, …` for critical points with pairwise distinct
/// minimal periods, until `k_star` are found or the low kernel is exhausted.
///
/// A subspace is accepted when every strictly smaller subspace `V_{n·k}` (`k ≥ 2`) has
/// ratio at most `GATE_FACTOR · m_n`, so the mountain-pass level in `V_n` cannot be
/// realized by a function of shorter period.
pub fn multiplicity_sweep(
    spec: &ProblemSpec,
    k_star: usize,
    restarts: usize,
    seed: u64,
) -> Result<MultiplicityReport, SolveError> {
    let cutoff = spec.disc.truncation().n_split as usize;
    let mut ratios: Vec<Option<f64>> = vec![None; cutoff + 1];
    for (n, slot) in ratios.iter_mut().enumerate().skip(1) {
        match estimate_mg(spec, n, restarts, seed) {
            Ok(est) => *slot = Some(est.m),
            Err(SolveError::EmptySubspace(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mut branches: Vec<MountainPassReport> = Vec::new();
    let mut candidates = Vec::new();
    for n in 1..=cutoff {
        if branches.len() >= k_star {
            break;
        }
        let Some(m_n) = ratios[n] else {
            candidates.push(SubspaceCandidate {
                n,
                m_n: 0.0,
                coarser_sup: 0.0,
                accepted: false,
                note: "empty subspace".into(),
            });
            continue;
        };
        let coarser_sup = (2..)
            .map(|k| n * k)
            .take_while(|&nk| nk <= cutoff)
            .filter_map(|nk| ratios[nk])
            .fold(0.0f64, f64::max);
        let mut cand = SubspaceCandidate {
            n,
            m_n,
            coarser_sup,
            accepted: false,
            note: String::new(),
        };
        if coarser_sup > GATE_FACTOR * m_n {
            cand.note = "ratio not separated from a shorter-period subspace".into();
            candidates.push(cand);
            continue;
        }
        match find_critical_point_with(spec, n, restarts, seed) {
            Ok(rep) => {
                if branches.iter().any(|b| b.minimal_divisor == rep.minimal_divisor) {
                    cand.note = format!("minimal divisor {} already found", rep.minimal_divisor);
                } else {
                    cand.accepted = true;
                    cand.note = format!("minimal divisor {}", rep.minimal_divisor);
                    branches.push(rep);
                }
            }
            Err(e) => cand.note = format!("solve failed: {e}"),
        }
        candidates.push(cand);
    }
    Ok(MultiplicityReport {
        insufficient: branches.len() < k_star,
        branches,
        candidates,
    })
}
