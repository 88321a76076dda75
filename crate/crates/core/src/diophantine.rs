//! Diophantine frequency sets `Ω_γ = {ω : |ωℓ − j| ≥ γ/ℓ for all ℓ ≥ 1, j ≠ ℓ}` and
//! admissible parameter grids.
//!
//! The condition is infinite; it is certified here up to a finite horizon `ell_max`,
//! which suffices for every division performed on a truncation with `Lmax ≤ ell_max`.

use serde::Serialize;
use thiserror::Error;

use crate::field::{Discretization, Sector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiophantineError {
    #[error("no ε in [{eps_min:e}, {eps_max:e}] passes the γ = {gamma} check up to ℓ = {ell_max}")]
    EmptyGrid {
        eps_min: f64,
        eps_max: f64,
        gamma: f64,
        ell_max: u64,
    },
    #[error("invalid frequency check parameters: {0}")]
    InvalidParameters(String),
}

/// Result of a finite-horizon membership test for `Ω_γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyCheck {
    pub omega: f64,
    pub gamma: f64,
    pub ell_max: u64,
    /// `min |ωℓ − j| − γ/ℓ` over the checked pairs.
    pub margin: f64,
    /// The pair `(ℓ, j)` realizing the margin.
    pub worst_pair: (u64, i64),
    pub passed: bool,
}

/// Sign `ς` in `ω² = 1 + ςε`: `−1` for the quadratic nonlinearity, `+1` otherwise.
pub fn sigma(p: u32) -> f64 {
    if p == 2 {
        -1.0
    } else {
        1.0
    }
}

/// `ω_ε = √(1 + ςε)`.
pub fn omega_from_eps(p: u32, eps: f64) -> f64 {
    (1.0 + sigma(p) * eps).sqrt()
}

/// Tests `|ωℓ − j| ≥ γ/ℓ` for `1 ≤ ℓ ≤ ell_max` and every integer `j ≠ ℓ`.
///
/// For each `ℓ` only the integers closest to `ωℓ` other than `ℓ` itself can realize the
/// minimum, so a handful of candidates around `⌊ωℓ⌋` are checked.
pub fn in_omega_gamma(omega: f64, gamma: f64, ell_max: u64) -> FrequencyCheck {
    let mut margin = f64::INFINITY;
    let mut worst = (1, 0);
    for l in 1..=ell_max.max(1) {
        let x = omega * l as f64;
        let fl = x.floor() as i64;
        for j in (fl - 1)..=(fl + 2) {
            if j == l as i64 {
                continue;
            }
            let m = (x - j as f64).abs() - gamma / l as f64;
            if m < margin {
                margin = m;
                worst = (l, j);
            }
        }
    }
    FrequencyCheck {
        omega,
        gamma,
        ell_max,
        margin,
        worst_pair: worst,
        passed: margin >= 0.0,
    }
}

/// Log-uniform samples of `ε ∈ [ε_min, ε_max]` whose `ω_ε` passes the `Ω_γ` check.
pub fn admissible_eps_grid(
    p: u32,
    gamma: f64,
    eps_min: f64,
    eps_max: f64,
    count: usize,
    ell_max: u64,
) -> Result<Vec<(f64, f64)>, DiophantineError> {
    if !(eps_min > 0.0 && eps_max >= eps_min && count >= 1 && gamma > 0.0) {
        return Err(DiophantineError::InvalidParameters(format!(
            "need 0 < eps_min ≤ eps_max, count ≥ 1, γ > 0 (got {eps_min}, {eps_max}, {count}, {gamma})"
        )));
    }
    let samples: Vec<f64> = if count == 1 {
        vec![eps_min]
    } else {
        let (a, b) = (eps_min.ln(), eps_max.ln());
        (0..count)
            .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
            .collect()
    };
    let grid: Vec<(f64, f64)> = samples
        .into_iter()
        .map(|e| (e, omega_from_eps(p, e)))
        .filter(|&(_, w)| w.is_finite() && in_omega_gamma(w, gamma, ell_max).passed)
        .collect();
    if grid.is_empty() {
        Err(DiophantineError::EmptyGrid {
            eps_min,
            eps_max,
            gamma,
            ell_max,
        })
    } else {
        Ok(grid)
    }
}

/// `min |ω²ℓ² − ω_j²|` over the range modes of the truncation.
pub fn resolvent_margin(omega: f64, disc: &Discretization) -> f64 {
    let t = disc.truncation();
    let o2 = omega * omega;
    let mut m = f64::INFINITY;
    for l in 0..=t.lmax {
        for j in 0..=t.jmax {
            if disc.mode_sector(l, j) == Sector::W {
                m = m.min(disc.divisor(o2, l, j).abs());
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_one_passes_every_gamma_up_to_one() {
        for g in [0.01, 0.5, 1.0] {
            let c = in_omega_gamma(1.0, g, 500);
            assert!(c.passed, "γ = {g}: margin {}", c.margin);
        }
    }

    #[test]
    fn rational_hit_fails() {
        let c = in_omega_gamma(1.5, 0.1, 10);
        assert!(!c.passed);
        assert_eq!(c.worst_pair, (2, 3));
    }

    #[test]
    fn sigma_signs() {
        assert_eq!(omega_from_eps(5, 0.01), 1.01f64.sqrt());
        assert!(omega_from_eps(2, 0.01) < 1.0);
    }

    #[test]
    fn over_constrained_grid_is_empty() {
        let r = admissible_eps_grid(5, 0.99, 0.3, 0.31, 3, 200);
        assert!(matches!(r, Err(DiophantineError::EmptyGrid { .. })));
    }
}
