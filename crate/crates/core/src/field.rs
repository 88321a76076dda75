//! Time–space spectral fields `u(t, z) = Σ u_{ℓ,j} cos(ℓt) e_j(z)`.
//!
//! A [`Discretization`] fixes the spatial basis, the truncation and the dealiased
//! collocation grid; a [`Field`] is a coefficient matrix attached to one.
//!
//! Conventions fixed here and used throughout the crate:
//!
//! * time integrals use `d̄t = dt/π` over `[0, 2π]` (mass 2), so
//!   `∫ cos²(ℓt) d̄t = 1` for `ℓ ≥ 1` but `= 2` for `ℓ = 0`; the analysis
//!   coefficient at `ℓ = 0` therefore carries a factor `½`;
//! * the linear operator `L_ω` acts on `cos(ℓt) e_j` as multiplication by
//!   `ω²ℓ² − ω_j²`, and the equation solved is `L_ω u = u^p`;
//! * the kernel `V` consists of modes with `ℓ = ω_j`, the range `W` of the rest;
//!   `V_{≤N}` / `V_{>N}` split the kernel at `ω_j ≤ N`.

use std::io::{Read, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::basis::{product_rule_indices, BasisError, BasisKind, SpatialBasis};
use crate::linalg::matmul;

/// Errors raised by field construction and the spectral operators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("operands live on different discretizations")]
    BasisMismatch,
    #[error("resolvent applied to a kernel coefficient at (ell={ell}, j={j})")]
    KernelOverlap { ell: usize, j: usize },
    #[error("small divisor {divisor:e} at (ell={ell}, j={j})")]
    SmallDivisor { ell: usize, j: usize, divisor: f64 },
    #[error("power {p} exceeds the dealiasing order {max} of the discretization")]
    PowerTooHigh { p: usize, max: usize },
    #[error("operation requires the spherical basis")]
    SphericalOnly,
    #[error("coefficient file: {0}")]
    Csv(String),
}

/// Truncation of the spectral representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Truncation {
    /// Largest time frequency `ℓ`.
    pub lmax: usize,
    /// Largest spatial mode index `j`.
    pub jmax: usize,
    /// Kernel cutoff `N`: `V_{≤N}` holds the modes with `ω_j ≤ N`.
    pub n_split: u64,
}

/// Coefficient sectors of the Lyapunov–Schmidt splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// Kernel: `ℓ = ω_j`.
    V,
    /// Range: `ℓ ≠ ω_j`.
    W,
    /// Low kernel: `ℓ = ω_j ≤ N`.
    VlowN,
    /// High kernel: `ℓ = ω_j > N`.
    VhighN,
}

/// Spatial basis, truncation and dealiased collocation grid shared by fields.
#[derive(Debug)]
pub struct Discretization {
    basis: SpatialBasis,
    trunc: Truncation,
    max_power: usize,
    /// Number of time intervals on `[0, π]`; nodes `t_k = πk/M`, `k = 0..=M`.
    m: usize,
    /// `(M+1) × (Lmax+1)`: `cos(ℓ t_k)`.
    synth_time: Vec<f64>,
    /// `(Lmax+1) × (M+1)`: `τ_k cos(ℓ t_k) / c_ℓ` with trapezoid weights `τ_k` (mass 2).
    anal_time: Vec<f64>,
    /// `(Jmax+1) × Q`: `e_j(z_q)`.
    synth_space: Vec<f64>,
    /// `Q × (Jmax+1)`: `w_q e_j(z_q)`.
    anal_space: Vec<f64>,
    time_nodes: Vec<f64>,
    time_weights: Vec<f64>,
}

impl Discretization {
    /// Builds a discretization whose collocation products are exact Galerkin
    /// products for powers up to `max_power`.
    pub fn new(kind: BasisKind, trunc: Truncation, max_power: usize) -> Result<Arc<Self>, FieldError> {
        let max_power = max_power.max(2);
        let basis = SpatialBasis::new(kind, trunc.jmax, max_power + 1)?;
        let top = basis.omega(trunc.jmax);
        if (trunc.lmax as u64) < top {
            return Err(FieldError::InvalidTruncation(format!(
                "Lmax = {} must be at least the largest frequency ω_Jmax = {top}",
                trunc.lmax
            )));
        }
        if trunc.n_split < 1 || trunc.n_split > top {
            return Err(FieldError::InvalidTruncation(format!(
                "N_split = {} must lie in [1, ω_Jmax = {top}]",
                trunc.n_split
            )));
        }
        let m = max_power * trunc.lmax + 1;
        let nl = trunc.lmax + 1;
        let nj = trunc.jmax + 1;
        let q = basis.quadrature().len();
        let time_nodes: Vec<f64> = (0..=m).map(|k| std::f64::consts::PI * k as f64 / m as f64).collect();
        let time_weights: Vec<f64> = (0..=m)
            .map(|k| {
                if k == 0 || k == m {
                    1.0 / m as f64
                } else {
                    2.0 / m as f64
                }
            })
            .collect();
        let mut synth_time = vec![0.0; (m + 1) * nl];
        let mut anal_time = vec![0.0; nl * (m + 1)];
        for (k, &t) in time_nodes.iter().enumerate() {
            for l in 0..nl {
                let c = (l as f64 * t).cos();
                synth_time[k * nl + l] = c;
                let cl = if l == 0 { 2.0 } else { 1.0 };
                anal_time[l * (m + 1) + k] = time_weights[k] * c / cl;
            }
        }
        let synth_space = basis.node_values().to_vec();
        let w = &basis.quadrature().weights;
        let mut anal_space = vec![0.0; q * nj];
        for j in 0..nj {
            for (qi, (&e, &wq)) in basis.mode_values(j).iter().zip(w).enumerate() {
                anal_space[qi * nj + j] = wq * e;
            }
        }
        Ok(Arc::new(Self {
            basis,
            trunc,
            max_power,
            m,
            synth_time,
            anal_time,
            synth_space,
            anal_space,
            time_nodes,
            time_weights,
        }))
    }

    pub fn basis(&self) -> &SpatialBasis {
        &self.basis
    }

    pub fn kind(&self) -> BasisKind {
        self.basis.kind()
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn max_power(&self) -> usize {
        self.max_power
    }

    /// Number of time intervals `M` on `[0, π]`.
    pub fn time_intervals(&self) -> usize {
        self.m
    }

    /// Collocation time nodes `t_k = πk/M`.
    pub fn time_nodes(&self) -> &[f64] {
        &self.time_nodes
    }

    /// Trapezoid weights for `d̄t` (sum 2) at the time nodes.
    pub fn time_weights(&self) -> &[f64] {
        &self.time_weights
    }

    /// `ω_j` as a float.
    pub fn omega(&self, j: usize) -> f64 {
        self.basis.omega(j) as f64
    }

    /// Sector of the mode `(ℓ, j)` refined to the low/high kernel split.
    pub fn mode_sector(&self, ell: usize, j: usize) -> Sector {
        let w = self.basis.omega(j);
        if ell as u64 != w {
            Sector::W
        } else if w <= self.trunc.n_split {
            Sector::VlowN
        } else {
            Sector::VhighN
        }
    }

    /// Whether the mode `(ℓ, j)` belongs to `sec`.
    pub fn in_sector(&self, ell: usize, j: usize, sec: Sector) -> bool {
        let s = self.mode_sector(ell, j);
        match sec {
            Sector::V => s != Sector::W,
            other => s == other,
        }
    }

    /// Kernel modes `(ℓ = ω_j, j)` within the truncation, by increasing `j`.
    pub fn kernel_modes(&self) -> Vec<(usize, usize)> {
        (0..=self.trunc.jmax)
            .map(|j| (self.basis.omega(j) as usize, j))
            .collect()
    }

    /// Low kernel modes `ω_j ≤ N` whose time frequency is a multiple of `n`.
    pub fn low_kernel_modes(&self, n: usize) -> Vec<(usize, usize)> {
        self.kernel_modes()
            .into_iter()
            .filter(|&(l, _)| l as u64 <= self.trunc.n_split && l % n.max(1) == 0)
            .collect()
    }

    /// The `L_ω` divisor `ω²ℓ² − ω_j²` given `ω²`.
    pub fn divisor(&self, omega_sq: f64, ell: usize, j: usize) -> f64 {
        let w = self.omega(j);
        omega_sq * (ell * ell) as f64 - w * w
    }

    fn synthesize(&self, coeff: &[f64]) -> Vec<f64> {
        let nl = self.trunc.lmax + 1;
        let nj = self.trunc.jmax + 1;
        let q = self.basis.quadrature().len();
        let tj = matmul(&self.synth_time, coeff, self.m + 1, nl, nj);
        matmul(&tj, &self.synth_space, self.m + 1, nj, q)
    }

    fn analyze(&self, grid: &[f64]) -> Vec<f64> {
        let nl = self.trunc.lmax + 1;
        let nj = self.trunc.jmax + 1;
        let q = self.basis.quadrature().len();
        let tj = matmul(grid, &self.anal_space, self.m + 1, q, nj);
        matmul(&self.anal_time, &tj, nl, self.m + 1, nj)
    }

    /// `∫∫ g dμ d̄t` of grid values (time trapezoid × spatial quadrature); exact for
    /// products of up to `max_power + 1` truncated fields.
    pub fn integrate_grid(&self, grid: &[f64]) -> f64 {
        let w = &self.basis.quadrature().weights;
        let q = w.len();
        self.time_weights
            .iter()
            .enumerate()
            .map(|(k, tw)| {
                tw * grid[k * q..(k + 1) * q]
                    .iter()
                    .zip(w)
                    .map(|(g, wq)| g * wq)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Spatial samples `Σ_j a_j e_j(z_q)` at the quadrature nodes.
    pub fn space_synthesize(&self, a: &[f64]) -> Vec<f64> {
        let nj = self.trunc.jmax + 1;
        let q = self.basis.quadrature().len();
        matmul(a, &self.synth_space, 1, nj, q)
    }

    /// Galerkin coefficients `∫ f e_j` of spatial samples at the quadrature nodes.
    pub fn space_analyze(&self, f: &[f64]) -> Vec<f64> {
        let nj = self.trunc.jmax + 1;
        let q = self.basis.quadrature().len();
        matmul(f, &self.anal_space, 1, q, nj)
    }
}

/// A real, even-in-time field on a [`Discretization`].
#[derive(Debug, Clone)]
pub struct Field {
    disc: Arc<Discretization>,
    /// Row-major `(Lmax+1) × (Jmax+1)` coefficients `u_{ℓ,j}`.
    coeff: Vec<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.disc, &other.disc) && self.coeff == other.coeff
    }
}

impl Field {
    pub fn zeros(disc: &Arc<Discretization>) -> Self {
        let t = disc.truncation();
        Self {
            disc: Arc::clone(disc),
            coeff: vec![0.0; (t.lmax + 1) * (t.jmax + 1)],
        }
    }

    /// A single mode `amplitude · cos(ℓt) e_j`.
    pub fn mode(disc: &Arc<Discretization>, ell: usize, j: usize, amplitude: f64) -> Self {
        let mut f = Self::zeros(disc);
        f.set(ell, j, amplitude);
        f
    }

    /// Builds a field from a row-major coefficient vector.
    pub fn from_coeffs(disc: &Arc<Discretization>, coeff: Vec<f64>) -> Result<Self, FieldError> {
        let t = disc.truncation();
        if coeff.len() != (t.lmax + 1) * (t.jmax + 1) {
            return Err(FieldError::InvalidTruncation(format!(
                "expected {} coefficients, got {}",
                (t.lmax + 1) * (t.jmax + 1),
                coeff.len()
            )));
        }
        Ok(Self {
            disc: Arc::clone(disc),
            coeff,
        })
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    fn nj(&self) -> usize {
        self.disc.trunc.jmax + 1
    }

    pub fn lmax(&self) -> usize {
        self.disc.trunc.lmax
    }

    pub fn jmax(&self) -> usize {
        self.disc.trunc.jmax
    }

    pub fn get(&self, ell: usize, j: usize) -> f64 {
        self.coeff[ell * self.nj() + j]
    }

    pub fn set(&mut self, ell: usize, j: usize, value: f64) {
        let nj = self.nj();
        self.coeff[ell * nj + j] = value;
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeff
    }

    /// Iterates over `(ℓ, j, u_{ℓ,j})`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let nj = self.nj();
        self.coeff.iter().enumerate().map(move |(i, &c)| (i / nj, i % nj, c))
    }

    fn same_disc(&self, other: &Self) -> Result<(), FieldError> {
        if Arc::ptr_eq(&self.disc, &other.disc) {
            Ok(())
        } else {
            Err(FieldError::BasisMismatch)
        }
    }

    fn map_coeffs(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let nj = self.nj();
        Self {
            disc: Arc::clone(&self.disc),
            coeff: self
                .coeff
                .iter()
                .enumerate()
                .map(|(i, &c)| f(i / nj, i % nj, c))
                .collect(),
        }
    }

    /// `self + other`.
    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.axpy(1.0, other)
    }

    /// `self − other`.
    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.axpy(-1.0, other)
    }

    /// `self + a · other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self, FieldError> {
        self.same_disc(other)?;
        let mut out = self.clone();
        for (x, y) in out.coeff.iter_mut().zip(&other.coeff) {
            *x += a * y;
        }
        Ok(out)
    }

    /// `a · self`.
    pub fn scale(&self, a: f64) -> Self {
        self.map_coeffs(|_, _, c| a * c)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeff.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `‖u‖_{H^r_t H^s_z} = (Σ ⟨ℓ⟩^{2r} ω_j^{2s} u_{ℓ,j}²)^{1/2}` with `⟨ℓ⟩ = max(1, ℓ)`.
    pub fn norm_hr_hs(&self, r: f64, s: f64) -> f64 {
        self.iter()
            .map(|(l, j, c)| {
                let lw = (l.max(1) as f64).powf(r);
                let sw = self.disc.omega(j).powf(s);
                let x = lw * sw * c;
                x * x
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Kernel norm `‖v‖_{V^s} = ‖v‖_{H^0 H^s}`.
    pub fn norm_v(&self, s: f64) -> f64 {
        self.norm_hr_hs(0.0, s)
    }

    /// Space–time `L²` pairing `∫∫ u v dμ d̄t = Σ c_ℓ u_{ℓ,j} v_{ℓ,j}` (`c_0 = 2`, else 1).
    pub fn inner(&self, other: &Self) -> Result<f64, FieldError> {
        self.same_disc(other)?;
        Ok(self
            .iter()
            .zip(&other.coeff)
            .map(|((l, _, a), b)| if l == 0 { 2.0 * a * b } else { a * b })
            .sum())
    }

    /// Orthogonal projection onto a sector.
    pub fn project(&self, sec: Sector) -> Self {
        let d = Arc::clone(&self.disc);
        self.map_coeffs(|l, j, c| if d.in_sector(l, j, sec) { c } else { 0.0 })
    }

    /// Whether every nonzero coefficient lies in `sec`.
    pub fn is_in_sector(&self, sec: Sector) -> bool {
        self.iter().all(|(l, j, c)| c == 0.0 || self.disc.in_sector(l, j, sec))
    }

    /// `A u`: multiplies column `j` by `ω_j²`.
    pub fn apply_a(&self) -> Self {
        let d = Arc::clone(&self.disc);
        self.map_coeffs(|_, j, c| c * d.omega(j).powi(2))
    }

    /// `A⁻¹ u`: divides column `j` by `ω_j²`.
    pub fn apply_a_inv(&self) -> Self {
        let d = Arc::clone(&self.disc);
        self.map_coeffs(|_, j, c| c / d.omega(j).powi(2))
    }

    /// `L_ω u`: multiplies each coefficient by `ω²ℓ² − ω_j²`.
    pub fn apply_lomega(&self, omega: f64) -> Self {
        let d = Arc::clone(&self.disc);
        let o2 = omega * omega;
        self.map_coeffs(|l, j, c| c * d.divisor(o2, l, j))
    }

    /// `L_ω⁻¹ w` on the range, with the default small-divisor floor `1e-12`.
    pub fn apply_lomega_inv(&self, omega: f64) -> Result<Self, FieldError> {
        self.apply_lomega_inv_with_floor(omega, 1e-12)
    }

    /// `L_ω⁻¹ w`: divides each range coefficient by `ω²ℓ² − ω_j²`.
    ///
    /// Fails with [`FieldError::KernelOverlap`] if a kernel coefficient is nonzero and with
    /// [`FieldError::SmallDivisor`] if a nonzero coefficient meets a divisor below `floor`.
    pub fn apply_lomega_inv_with_floor(&self, omega: f64, floor: f64) -> Result<Self, FieldError> {
        let o2 = omega * omega;
        let mut out = Self::zeros(&self.disc);
        for (l, j, c) in self.iter() {
            if c == 0.0 {
                continue;
            }
            if self.disc.mode_sector(l, j) != Sector::W {
                return Err(FieldError::KernelOverlap { ell: l, j });
            }
            let d = self.disc.divisor(o2, l, j);
            if d.abs() < floor {
                return Err(FieldError::SmallDivisor { ell: l, j, divisor: d });
            }
            out.set(l, j, c / d);
        }
        Ok(out)
    }

    /// Collocation values on the `(M+1) × Q` time–space grid.
    pub fn to_grid(&self) -> Vec<f64> {
        self.disc.synthesize(&self.coeff)
    }

    /// Galerkin projection of grid values onto the truncation.
    pub fn from_grid(disc: &Arc<Discretization>, grid: &[f64]) -> Self {
        Self {
            disc: Arc::clone(disc),
            coeff: disc.analyze(grid),
        }
    }

    /// Exact truncated product `Π(u₁ u₂)` via the dealiased collocation grid.
    pub fn multiply(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_disc(other)?;
        let a = self.to_grid();
        let b = other.to_grid();
        let g: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Ok(Self::from_grid(&self.disc, &g))
    }

    /// Exact truncated power `Π(u^p)` via the dealiased collocation grid.
    pub fn power(&self, p: usize) -> Result<Self, FieldError> {
        if p > self.disc.max_power {
            return Err(FieldError::PowerTooHigh {
                p,
                max: self.disc.max_power,
            });
        }
        let mut g = self.to_grid();
        for v in g.iter_mut() {
            *v = v.powi(p as i32);
        }
        Ok(Self::from_grid(&self.disc, &g))
    }

    /// Spherical-only product by the exact identities
    /// `cos ℓ₁t cos ℓ₂t = ½cos(ℓ₁+ℓ₂)t + ½cos|ℓ₁−ℓ₂|t` and the eigenfunction product rule.
    pub fn multiply_convolution(&self, other: &Self) -> Result<Self, FieldError> {
        self.same_disc(other)?;
        if self.disc.kind() != BasisKind::Spherical {
            return Err(FieldError::SphericalOnly);
        }
        let (lmax, jmax) = (self.lmax(), self.jmax());
        let mut out = Self::zeros(&self.disc);
        let a: Vec<_> = self.iter().filter(|t| t.2 != 0.0).collect();
        let b: Vec<_> = other.iter().filter(|t| t.2 != 0.0).collect();
        for &(l1, j1, x) in &a {
            for &(l2, j2, y) in &b {
                let idx = product_rule_indices(j1, j2);
                for (l, f) in [(l1 + l2, 0.5), (l1.abs_diff(l2), 0.5)] {
                    if l > lmax {
                        continue;
                    }
                    // cos(0·t) has coefficient 1 at ℓ = 0 in the synthesis convention.
                    for &k in idx.iter().filter(|&&k| k <= jmax) {
                        let v = out.get(l, k) + f * x * y;
                        out.set(l, k, v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Keeps the kernel modes whose time frequency is divisible by `n`.
    pub fn restrict_to_period_subspace(&self, n: usize) -> Self {
        let d = Arc::clone(&self.disc);
        let n = n.max(1);
        self.map_coeffs(|l, j, c| {
            if d.mode_sector(l, j) != Sector::W && l % n == 0 {
                c
            } else {
                0.0
            }
        })
    }

    /// gcd of all active time frequencies (coefficients above `1e-10 · max|u|`);
    /// frequency 0 is absorbing. The minimal period is `2π / divisor`.
    pub fn minimal_period_divisor(&self) -> u64 {
        self.minimal_period_divisor_with_tol(1e-10)
    }

    /// As [`Field::minimal_period_divisor`] with an explicit relative activity threshold.
    pub fn minimal_period_divisor_with_tol(&self, rel_tol: f64) -> u64 {
        let thr = rel_tol * self.max_abs();
        let mut g = 0u64;
        for (l, _, c) in self.iter() {
            if c.abs() > thr && l > 0 {
                g = gcd(g, l as u64);
            }
        }
        g.max(1)
    }

    /// Point evaluation `u(t, z)`.
    pub fn eval(&self, t: f64, z: f64) -> f64 {
        let basis = self.disc.basis();
        let e: Vec<f64> = (0..=self.jmax()).map(|j| basis.eval(j, z)).collect();
        self.iter().map(|(l, j, c)| c * (l as f64 * t).cos() * e[j]).sum()
    }

    /// The `t = 0` slice `Σ_ℓ u_{ℓ,j}` as spatial coefficients.
    pub fn initial_slice(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.nj()];
        for (_, j, c) in self.iter() {
            a[j] += c;
        }
        a
    }

    /// Writes the coefficients as CSV `ell,j,coeff` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), FieldError> {
        let mut wr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| FieldError::Csv(e.to_string());
        wr.write_record(["ell", "j", "coeff"]).map_err(err)?;
        for (l, j, c) in self.iter() {
            wr.write_record([l.to_string(), j.to_string(), format_f64(c)])
                .map_err(err)?;
        }
        wr.flush().map_err(|e| FieldError::Csv(e.to_string()))
    }

    /// Reads coefficients written by [`Field::write_csv`]; absent modes are zero.
    pub fn read_csv<R: Read>(disc: &Arc<Discretization>, r: R) -> Result<Self, FieldError> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers().map_err(|e| FieldError::Csv(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["ell", "j", "coeff"] {
            return Err(FieldError::Csv(format!("unexpected header {headers:?}")));
        }
        let mut f = Self::zeros(disc);
        for rec in rd.records() {
            let rec = rec.map_err(|e| FieldError::Csv(e.to_string()))?;
            let parse_err = |what: &str| FieldError::Csv(format!("bad {what} in {rec:?}"));
            let l: usize = rec[0].parse().map_err(|_| parse_err("ell"))?;
            let j: usize = rec[1].parse().map_err(|_| parse_err("j"))?;
            let c: f64 = rec[2].parse().map_err(|_| parse_err("coeff"))?;
            if l > f.lmax() || j > f.jmax() {
                return Err(FieldError::Csv(format!("mode ({l},{j}) outside the truncation")));
            }
            f.set(l, j, c);
        }
        Ok(f)
    }

    /// Writes `u(t, z)` on a uniform `nt × nz` plot grid over one period as CSV `t,x,u`.
    pub fn write_realspace_csv<W: Write>(&self, w: W, nt: usize, nz: usize) -> Result<(), FieldError> {
        let mut wr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| FieldError::Csv(e.to_string());
        wr.write_record(["t", "x", "u"]).map_err(err)?;
        let basis = self.disc.basis();
        let end = basis.interval_end();
        let nt = nt.max(2);
        let nz = nz.max(2);
        let zs: Vec<f64> = (0..nz).map(|i| end * i as f64 / (nz - 1) as f64).collect();
        let ez: Vec<Vec<f64>> = zs
            .iter()
            .map(|&z| (0..=self.jmax()).map(|j| basis.eval(j, z)).collect())
            .collect();
        for it in 0..nt {
            let t = 2.0 * std::f64::consts::PI * it as f64 / (nt - 1) as f64;
            let cl: Vec<f64> = (0..=self.lmax()).map(|l| (l as f64 * t).cos()).collect();
            for (iz, &z) in zs.iter().enumerate() {
                let u: f64 = self.iter().map(|(l, j, c)| c * cl[l] * ez[iz][j]).sum();
                wr.write_record([format_f64(t), format_f64(z), format_f64(u)])
                    .map_err(err)?;
            }
        }
        wr.flush().map_err(|e| FieldError::Csv(e.to_string()))
    }
}

/// Decimal representation with 17 significant digits (bit-exact round trip).
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sph(lmax: usize, jmax: usize, n: u64) -> Arc<Discretization> {
        Discretization::new(BasisKind::Spherical, Truncation { lmax, jmax, n_split: n }, 5).unwrap()
    }

    #[test]
    fn truncation_validation() {
        let bad = Discretization::new(
            BasisKind::Spherical,
            Truncation {
                lmax: 3,
                jmax: 5,
                n_split: 2,
            },
            3,
        );
        assert!(matches!(bad, Err(FieldError::InvalidTruncation(_))));
        let bad_n = Discretization::new(
            BasisKind::Spherical,
            Truncation {
                lmax: 8,
                jmax: 5,
                n_split: 7,
            },
            3,
        );
        assert!(matches!(bad_n, Err(FieldError::InvalidTruncation(_))));
    }

    #[test]
    fn grid_round_trip_is_identity() {
        let d = sph(10, 6, 3);
        let mut f = Field::zeros(&d);
        for l in 0..=10 {
            for j in 0..=6 {
                f.set(l, j, ((l * 7 + j * 3) % 5) as f64 - 2.0);
            }
        }
        let g = Field::from_grid(&d, &f.to_grid());
        let err = g.sub(&f).unwrap().max_abs();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn mismatched_discretizations_rejected() {
        let a = Field::zeros(&sph(4, 2, 2));
        let b = Field::zeros(&sph(4, 2, 2));
        assert_eq!(a.multiply(&b).unwrap_err(), FieldError::BasisMismatch);
    }

    #[test]
    fn power_beyond_dealiasing_rejected() {
        let d = sph(4, 2, 2);
        assert_eq!(
            Field::zeros(&d).power(6).unwrap_err(),
            FieldError::PowerTooHigh { p: 6, max: 5 }
        );
    }

    #[test]
    fn csv_round_trip_bit_exact() {
        let d = sph(6, 4, 2);
        let mut f = Field::zeros(&d);
        f.set(1, 0, std::f64::consts::PI / 7.0);
        f.set(3, 2, -1.0e-300);
        f.set(0, 4, 0.1 + 0.2);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = Field::read_csv(&d, buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn small_divisor_reported() {
        // ω = 1.5: mode (2, j=2) has divisor 2.25·4 − 9 = 0.
        let d = sph(4, 3, 2);
        let f = Field::mode(&d, 2, 2, 1.0);
        match f.apply_lomega_inv(1.5) {
            Err(FieldError::SmallDivisor { ell: 2, j: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
