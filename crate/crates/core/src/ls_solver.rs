//! Contraction solvers for the high-frequency kernel equation and the range equation.
//!
//! Writing `u = v₁ + v₂ + w` with `v₁ ∈ V_{≤N}`, `v₂ ∈ V_{>N}`, `w ∈ W` and
//! `ω² = 1 + ςε`, the equation `L_ω u = u^p` splits into
//!
//! ```text
//!   ςε A v₁ = Π_{V≤N}(u^p),   ςε A v₂ = Π_{V>N}(u^p),   L_ω w = Π_W(u^p).
//! ```
//!
//! For `p ∈ {3, 5}` the last two are solved as fixed points of
//! `v₂ ↦ (ςε)⁻¹ A⁻¹ Π_{V>N}(u^p)` and `w ↦ L_ω⁻¹ Π_W(u^p)`.
//!
//! For `p = 2` the kernel part of `(v₁+v₂)²` vanishes identically, so the range
//! unknown is translated: `w = L_ω⁻¹ Π_W (v₁+v₂)² + w̃`, and with
//! `y = L_ω⁻¹ Π_W (v₁+v₂)² + w̃` and `B = 2(v₁+v₂) y + y²` the maps become
//! `v₂ ↦ −ε⁻¹ A⁻¹ Π_{V>N} B` and `w̃ ↦ L_ω⁻¹ Π_W B`.
//!
//! Both maps are iterated as alternating (Gauss–Seidel) sweeps from zero.

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::basis::BasisKind;
use crate::diophantine::{in_omega_gamma, omega_from_eps, sigma, FrequencyCheck};
use crate::field::{Discretization, Field, FieldError, Sector, Truncation};

/// Which equation of the splitting an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Equation {
    /// High-frequency kernel equation for `v₂`.
    HighKernel,
    /// Range equation for `w` (or `w̃`).
    Range,
    /// Low-frequency kernel (bifurcation) equation for `v₁`.
    LowKernel,
}

impl std::fmt::Display for Equation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Equation::HighKernel => "high-frequency kernel equation",
            Equation::Range => "range equation",
            Equation::LowKernel => "bifurcation equation",
        })
    }
}

/// Errors of the Lyapunov–Schmidt solvers and of the variational layer built on them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("unsupported exponent p = {0} (supported: 2, 3, 5)")]
    UnsupportedExponent(u32),
    #[error("p = {p} requires the spherical basis, got {kind:?}")]
    UnsupportedBasis { p: u32, kind: BasisKind },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("frequency rejected: ω = {omega} fails the Diophantine check (margin {margin:e} at ℓ = {ell}, j = {j})")]
    FrequencyRejected { omega: f64, margin: f64, ell: u64, j: i64 },
    #[error("{equation} diverged after {iterations} iterations (norm {norm:e}, limit {limit:e})")]
    Diverged {
        equation: Equation,
        iterations: usize,
        norm: f64,
        limit: f64,
    },
    #[error("{equation} stalled after {iterations} iterations (last increment {increment:e})")]
    Stalled {
        equation: Equation,
        iterations: usize,
        increment: f64,
    },
    #[error("period subspace n = {0} has no low-frequency kernel modes")]
    EmptySubspace(usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Stopping and divergence controls of the fixed-point iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Increment/residual tolerance, relative to the largest `v₁` coefficient.
    pub fp_tol: f64,
    /// Gradient tolerance of the bifurcation solve, relative to `‖v₁‖_{V¹}`.
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Iterates beyond `divergence_factor · ρ` are declared divergent.
    pub divergence_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fp_tol: 1e-12,
            grad_tol: 1e-13,
            max_iter: 500,
            divergence_factor: 10.0,
        }
    }
}

/// Constants entering the ball radii; the analysis leaves them unspecified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tunables {
    pub delta: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for Tunables {
    fn default() -> Self {
        Self {
            delta: 0.01,
            c2: 10.0,
            c3: 10.0,
        }
    }
}

/// Ball radii `(ρ₁, ρ₂, ρ₃)` for `v₁ ∈ V¹`, `v₂ ∈ V^{2+2δ}`, `w ∈ H^{1/2+δ} H^{3/2+δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Radii {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
}

impl Radii {
    /// Radii for degree `p` with `N` the kernel cutoff and `R` the ball constant.
    pub fn compute(p: u32, eps: f64, r: f64, n: f64, gamma: f64, t: Tunables) -> Self {
        let d = t.delta;
        match p {
            5 => Self {
                rho1: eps.powf(0.25) * r,
                rho2: t.c2 * n.powf(10.0 * d) * r.powi(5) * eps.powf(0.25),
                rho3: t.c3 / gamma * n.powf(5.0 + 10.0 * d) * r.powi(5) * eps.powf(1.25),
            },
            3 => Self {
                rho1: eps.sqrt() * r,
                rho2: t.c2 * r.powi(3) * n.powf(4.0 * d) * eps.sqrt(),
                rho3: t.c3 / gamma * n.powf(3.0 + 6.0 * d) * r.powi(3) * eps.powf(1.5),
            },
            _ => Self {
                rho1: r * eps.sqrt(),
                rho2: t.c2 / gamma * r.powi(3) * eps.sqrt(),
                rho3: t.c3 / (gamma * gamma) * eps.powf(1.5) * r.powi(3) * n.powf(3.0 + 6.0 * d),
            },
        }
    }
}

/// Norm used for `v₂` in ball and divergence checks: `V^{2+2δ}`.
pub fn v2_norm(v2: &Field, delta: f64) -> f64 {
    v2.norm_v(2.0 + 2.0 * delta)
}

/// Norm used for `w` in ball and divergence checks: `H^{1/2+δ}_t H^{3/2+δ}_z`.
pub fn w_norm(w: &Field, delta: f64) -> f64 {
    w.norm_hr_hs(0.5 + delta, 1.5 + delta)
}

/// A fully specified problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub p: u32,
    pub disc: Arc<Discretization>,
    pub eps: f64,
    pub omega: f64,
    pub gamma: f64,
    /// Ball constant `R`.
    pub r_ball: f64,
    pub tol: Tolerances,
    pub tunables: Tunables,
    pub rho: Radii,
    pub frequency_check: FrequencyCheck,
}

/// Parameters needed to build a [`ProblemSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub p: u32,
    pub kind: BasisKind,
    pub trunc: Truncation,
    pub eps: f64,
    pub gamma: f64,
    /// Diophantine certification horizon; raised to at least `Lmax`.
    pub ell_max: u64,
    /// Ball constant; `None` selects twice the mountain-pass scale of the lowest mode.
    pub r_ball: Option<f64>,
    pub tol: Tolerances,
    pub tunables: Tunables,
}

impl ProblemParams {
    /// Defaults: `γ = 0.1`, `Lmax = 64`, `Jmax = 32`, `N = 8`, spherical basis.
    pub fn new(p: u32, eps: f64) -> Self {
        Self {
            p,
            kind: BasisKind::Spherical,
            trunc: Truncation {
                lmax: 64,
                jmax: 32,
                n_split: 8,
            },
            eps,
            gamma: 0.1,
            ell_max: 64,
            r_ball: None,
            tol: Tolerances::default(),
            tunables: Tunables::default(),
        }
    }
}

/// Checks the exponent/basis combination.
pub fn validate_exponent(p: u32, kind: BasisKind) -> Result<(), SolveError> {
    match p {
        3 => Ok(()),
        2 | 5 if kind == BasisKind::Spherical => Ok(()),
        2 | 5 => Err(SolveError::UnsupportedBasis { p, kind }),
        _ => Err(SolveError::UnsupportedExponent(p)),
    }
}

impl ProblemSpec {
    /// Validates the parameters, builds the dealiased discretization and certifies `ω`.
    pub fn new(params: ProblemParams) -> Result<Self, SolveError> {
        validate_exponent(params.p, params.kind)?;
        let disc = Discretization::new(params.kind, params.trunc, params.p as usize)?;
        Self::with_discretization(params, disc)
    }

    /// As [`ProblemSpec::new`] but sharing an existing discretization (its power order
    /// must cover `p`).
    pub fn with_discretization(params: ProblemParams, disc: Arc<Discretization>) -> Result<Self, SolveError> {
        validate_exponent(params.p, params.kind)?;
        if disc.kind() != params.kind || disc.truncation() != params.trunc {
            return Err(SolveError::Field(FieldError::BasisMismatch));
        }
        if disc.max_power() < params.p as usize {
            return Err(SolveError::Field(FieldError::PowerTooHigh {
                p: params.p as usize,
                max: disc.max_power(),
            }));
        }
        if !(params.eps > 0.0 && params.eps < 1.0) {
            return Err(SolveError::InvalidParameter(format!(
                "ε must lie in (0, 1), got {}",
                params.eps
            )));
        }
        if !(params.gamma > 0.0 && params.gamma < 1.0) {
            return Err(SolveError::InvalidParameter(format!(
                "γ must lie in (0, 1), got {}",
                params.gamma
            )));
        }
        let omega = omega_from_eps(params.p, params.eps);
        let horizon = params.ell_max.max(params.trunc.lmax as u64);
        let check = in_omega_gamma(omega, params.gamma, horizon);
        if !check.passed {
            return Err(SolveError::FrequencyRejected {
                omega,
                margin: check.margin,
                ell: check.worst_pair.0,
                j: check.worst_pair.1,
            });
        }
        let r_ball = match params.r_ball {
            Some(r) if r > 0.0 => r,
            Some(r) => return Err(SolveError::InvalidParameter(format!("R must be positive, got {r}"))),
            None => default_ball_constant(params.p, &disc)?,
        };
        let rho = Radii::compute(
            params.p,
            params.eps,
            r_ball,
            params.trunc.n_split as f64,
            params.gamma,
            params.tunables,
        );
        Ok(Self {
            p: params.p,
            disc,
            eps: params.eps,
            omega,
            gamma: params.gamma,
            r_ball,
            tol: params.tol,
            tunables: params.tunables,
            rho,
            frequency_check: check,
        })
    }

    /// `ς` of `ω² = 1 + ςε`.
    pub fn sigma(&self) -> f64 {
        sigma(self.p)
    }

    /// `ςε = ω² − 1`.
    pub fn detuning(&self) -> f64 {
        self.sigma() * self.eps
    }

    /// Homogeneity degree `q` of the leading functional: `p + 1`, or 4 for `p = 2`.
    pub fn q(&self) -> u32 {
        if self.p == 2 {
            4
        } else {
            self.p + 1
        }
    }

    /// Expected scaling exponent of `‖v₁‖` in `ε`: `1/(q − 2)`.
    pub fn amplitude_exponent(&self) -> f64 {
        1.0 / (self.q() as f64 - 2.0)
    }
}

/// `R = 2 (1/(q m₀))^{1/(q−2)}` with `m₀` the ratio of the lowest kernel mode, so that the
/// ball of radius `ρ₁` contains twice the scaled mountain-pass initial guess.
fn default_ball_constant(p: u32, disc: &Arc<Discretization>) -> Result<f64, SolveError> {
    let m0 = crate::mountain_pass::witness_ratio(disc, p, 1)?.abs();
    let q = if p == 2 { 4.0 } else { p as f64 + 1.0 };
    Ok(2.0 * (1.0 / (q * m0)).powf(1.0 / (q - 2.0)))
}

/// Per-equation fixed-point defects at the returned state (max-abs coefficient norm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub high_kernel: f64,
    pub range: f64,
}

/// The Lyapunov–Schmidt triple and its convergence data.
#[derive(Debug, Clone)]
pub struct LsState {
    pub v1: Field,
    pub v2: Field,
    /// The range component `w` (reconstructed from `w̃` when `p = 2`).
    pub w: Field,
    /// The translated unknown `w̃` (only for `p = 2`).
    pub w_tilde: Option<Field>,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Fixed-point increments of the sweeps, for contraction diagnostics.
    pub increments: Vec<f64>,
}

impl LsState {
    /// `u = v₁ + v₂ + w`.
    pub fn total(&self) -> Field {
        self.v1
            .add(&self.v2)
            .and_then(|s| s.add(&self.w))
            .expect("components share a discretization")
    }
}

/// The two maps of the range system, evaluated at `(v₂, x)` with `x = w` or `w̃`.
struct RangeMaps<'a> {
    spec: &'a ProblemSpec,
    v1: &'a Field,
}

impl RangeMaps<'_> {
    /// The forcing whose projections drive both maps: `u^p`, or `B` when `p = 2`.
    fn forcing(&self, v2: &Field, x: &Field) -> Result<Field, SolveError> {
        let v = self.v1.add(v2)?;
        if self.spec.p == 2 {
            let y = self.translation(&v)?.add(x)?;
            let vg = v.to_grid();
            let yg = y.to_grid();
            let g: Vec<f64> = vg.iter().zip(&yg).map(|(a, b)| 2.0 * a * b + b * b).collect();
            Ok(Field::from_grid(v.discretization(), &g))
        } else {
            Ok(v.add(x)?.power(self.spec.p as usize)?)
        }
    }

    /// `L_ω⁻¹ Π_W v²` for the kernel part `v` (used only when `p = 2`).
    fn translation(&self, v: &Field) -> Result<Field, SolveError> {
        Ok(v.power(2)?.project(Sector::W).apply_lomega_inv(self.spec.omega)?)
    }

    fn map_v2(&self, forcing: &Field) -> Field {
        forcing
            .project(Sector::VhighN)
            .apply_a_inv()
            .scale(1.0 / self.spec.detuning())
    }

    fn map_range(&self, forcing: &Field) -> Result<Field, SolveError> {
        Ok(forcing.project(Sector::W).apply_lomega_inv(self.spec.omega)?)
    }
}

fn check_bound(equation: Equation, norm: f64, rho: f64, factor: f64, iterations: usize) -> Result<(), SolveError> {
    let limit = factor * rho;
    if !norm.is_finite() || norm > limit {
        return Err(SolveError::Diverged {
            equation,
            iterations,
            norm,
            limit,
        });
    }
    Ok(())
}

/// Solves the high-frequency kernel equation for `v₂` with the range unknown held fixed
/// (`w`, or `w̃` when `p = 2`).
pub fn solve_v2(v1: &Field, w: &Field, spec: &ProblemSpec) -> Result<(Field, usize), SolveError> {
    let maps = RangeMaps { spec, v1 };
    let scale = v1.max_abs().max(w.max_abs());
    let mut v2 = Field::zeros(&spec.disc);
    if scale == 0.0 {
        return Ok((v2, 0));
    }
    let thr = spec.tol.fp_tol * scale;
    for it in 1..=spec.tol.max_iter {
        let next = maps.map_v2(&maps.forcing(&v2, w)?);
        let inc = next.sub(&v2)?.max_abs();
        v2 = next;
        check_bound(
            Equation::HighKernel,
            v2_norm(&v2, spec.tunables.delta),
            spec.rho.rho2,
            spec.tol.divergence_factor,
            it,
        )?;
        if inc <= thr {
            return Ok((v2, it));
        }
    }
    let inc = maps.map_v2(&maps.forcing(&v2, w)?).sub(&v2)?.max_abs();
    Err(SolveError::Stalled {
        equation: Equation::HighKernel,
        iterations: spec.tol.max_iter,
        increment: inc,
    })
}

/// Solves the high-frequency kernel and range equations simultaneously for given `v₁`.
pub fn solve_range(v1: &Field, spec: &ProblemSpec) -> Result<LsState, SolveError> {
    solve_range_from(v1, spec, None)
}

/// As [`solve_range`], starting the sweeps from a previous state's `(v₂, w or w̃)`.
pub fn solve_range_from(v1: &Field, spec: &ProblemSpec, start: Option<&LsState>) -> Result<LsState, SolveError> {
    let maps = RangeMaps { spec, v1 };
    let zero = Field::zeros(&spec.disc);
    let (mut v2, mut x) = match start {
        Some(s) => (s.v2.clone(), s.w_tilde.clone().unwrap_or_else(|| s.w.clone())),
        None => (zero.clone(), zero.clone()),
    };
    let scale = v1.max_abs();
    if scale == 0.0 {
        return Ok(LsState {
            v1: v1.clone(),
            v2: zero.clone(),
            w: zero.clone(),
            w_tilde: (spec.p == 2).then(|| zero.clone()),
            residuals: Residuals {
                high_kernel: 0.0,
                range: 0.0,
            },
            iterations: 0,
            increments: Vec::new(),
        });
    }
    let thr = spec.tol.fp_tol * scale;
    let delta = spec.tunables.delta;
    let factor = spec.tol.divergence_factor;
    let mut increments = Vec::new();
    // Once below the threshold, keep sweeping while the increment still decreases so that
    // the state sits at the round-off floor rather than just under the tolerance.
    let mut polishing = 0usize;
    let mut it = 0usize;
    loop {
        it += 1;
        if it > spec.tol.max_iter {
            let last = increments.last().copied().unwrap_or(f64::INFINITY);
            if last <= thr {
                break;
            }
            return Err(SolveError::Stalled {
                equation: Equation::Range,
                iterations: spec.tol.max_iter,
                increment: last,
            });
        }
        let next_v2 = maps.map_v2(&maps.forcing(&v2, &x)?);
        let d2 = next_v2.sub(&v2)?.max_abs();
        v2 = next_v2;
        check_bound(Equation::HighKernel, v2_norm(&v2, delta), spec.rho.rho2, factor, it)?;
        let next_x = maps.map_range(&maps.forcing(&v2, &x)?)?;
        let dx = next_x.sub(&x)?.max_abs();
        x = next_x;
        check_bound(Equation::Range, w_norm(&x, delta), spec.rho.rho3, factor, it)?;
        let inc = d2.max(dx);
        let previous = increments.last().copied().unwrap_or(f64::INFINITY);
        increments.push(inc);
        if inc <= thr {
            if inc == 0.0 || inc >= previous || polishing >= 5 {
                break;
            }
            polishing += 1;
        } else if polishing > 0 {
            // Round-off noise pushed the increment back over the threshold: stop polishing.
            break;
        }
    }
    let forcing = maps.forcing(&v2, &x)?;
    let r2 = maps.map_v2(&forcing).sub(&v2)?.max_abs();
    let rw = maps.map_range(&forcing)?.sub(&x)?.max_abs();
    if r2 > thr {
        return Err(SolveError::Stalled {
            equation: Equation::HighKernel,
            iterations: it,
            increment: r2,
        });
    }
    if rw > thr {
        return Err(SolveError::Stalled {
            equation: Equation::Range,
            iterations: it,
            increment: rw,
        });
    }
    let (w, w_tilde) = if spec.p == 2 {
        let v = v1.add(&v2)?;
        (maps.translation(&v)?.add(&x)?, Some(x))
    } else {
        (x, None)
    };
    Ok(LsState {
        v1: v1.clone(),
        v2,
        w,
        w_tilde,
        residuals: Residuals {
            high_kernel: r2,
            range: rw,
        },
        iterations: it,
        increments,
    })
}

/// `‖L_ω u − Π(u^p)‖_{H⁰H⁰} / ‖Π(u^p)‖_{H⁰H⁰}` over the truncation (the absolute
/// defect when `u^p` vanishes).
pub fn residual_full(u: &Field, spec: &ProblemSpec) -> Result<f64, SolveError> {
    let up = u.power(spec.p as usize)?;
    let r = u.apply_lomega(spec.omega).sub(&up)?.norm_hr_hs(0.0, 0.0);
    let n = up.norm_hr_hs(0.0, 0.0);
    Ok(if n > 0.0 { r / n } else { r })
}
