//! Exact integer/dyadic formulas for products of eigenfunctions.

use std::collections::HashMap;

use super::{BasisError, BasisKind};

/// A nonnegative dyadic rational `num / 2^log2_den`, kept exact.
#[derive(Debug, Clone, Copy, Eq)]
pub struct Dyadic {
    pub num: u128,
    pub log2_den: u32,
}

impl Dyadic {
    pub fn new(num: u128, log2_den: u32) -> Self {
        Self { num, log2_den }.reduced()
    }

    /// Removes common factors of two.
    pub fn reduced(self) -> Self {
        let (mut num, mut den) = (self.num, self.log2_den);
        if num == 0 {
            return Self { num: 0, log2_den: 0 };
        }
        while den > 0 && num % 2 == 0 {
            num /= 2;
            den -= 1;
        }
        Self { num, log2_den: den }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / 2f64.powi(self.log2_den as i32)
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.reduced(), other.reduced());
        a.num == b.num && a.log2_den == b.log2_den
    }
}

impl std::fmt::Display for Dyadic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let r = self.reduced();
        if r.log2_den == 0 {
            write!(f, "{}", r.num)
        } else {
            write!(f, "{}/{}", r.num, 1u128 << r.log2_den)
        }
    }
}

/// `∫ ∏_k cos(ℓ_k t) d̄t` over one period with `d̄t = dt/π` (total mass 2).
///
/// Expanding each cosine into exponentials gives `2^{1-q} · #{σ ∈ {±1}^q : σ·ℓ = 0}`;
/// the sign patterns are counted exactly by dynamic programming over partial sums.
/// The empty product (`q = 0`) returns the total mass 2.
pub fn integral_time_product(freqs: &[u64]) -> Dyadic {
    let q = freqs.len();
    if q == 0 {
        return Dyadic::new(2, 0);
    }
    let mut counts: HashMap<i128, u128> = HashMap::new();
    counts.insert(0, 1);
    for &l in freqs {
        let mut next: HashMap<i128, u128> = HashMap::with_capacity(counts.len() * 2);
        for (&s, &c) in &counts {
            *next.entry(s + l as i128).or_insert(0) += c;
            *next.entry(s - l as i128).or_insert(0) += c;
        }
        counts = next;
    }
    let hits = counts.get(&0).copied().unwrap_or(0);
    Dyadic::new(hits, q as u32 - 1)
}

fn require_spherical(kind: BasisKind) -> Result<(), BasisError> {
    match kind {
        BasisKind::Spherical => Ok(()),
        BasisKind::Hopf { .. } => Err(BasisError::HopfIntegralUnsupported),
    }
}

/// `∫₀^π e_{j₁}⋯e_{j₆} sin²x d̄x` for the spherical basis, as an exact nonnegative integer.
///
/// With indices sorted ascending, expand `e_{j₁}e_{j₄}e_{j₂}` and `e_{j₃}e_{j₅}e_{j₆}`
/// with the product rule and count coinciding indices (orthonormality). The result lies
/// in `[0, ω_{j₁} ω_{j₂} ω_{j₃}]`.
pub fn integral_space6(kind: BasisKind, j: [usize; 6]) -> Result<u64, BasisError> {
    require_spherical(kind)?;
    let mut s = j.map(|x| x as i64);
    s.sort_unstable();
    let [j1, j2, j3, j4, j5, j6] = s;
    let mut total = 0u64;
    for k in 0..=j1 {
        let a = j4 - j1 + 2 * k;
        for h in 0..=j2.min(a) {
            let left = (j2 - a).abs() + 2 * h;
            for l in 0..=j3 {
                let b = j5 - j3 + 2 * l;
                // Right index |j6 - b| + 2m must equal `left` for some 0 ≤ m ≤ min(j6, b).
                let base = (j6 - b).abs();
                let diff = left - base;
                if diff >= 0 && diff % 2 == 0 && diff / 2 <= j6.min(b) {
                    total += 1;
                }
            }
        }
    }
    Ok(total)
}

/// `∫₀^π e_{j₁}e_{j₂}e_{j₃}e_{j₄} sin²x d̄x` for the spherical basis, exactly.
///
/// With indices sorted ascending this is `Σ_{k≤j₁} Σ_{h≤j₃} δ(j₂-j₁+2k = j₄-j₃+2h)`,
/// bounded by `ω_{j₁}`.
pub fn integral_space4(kind: BasisKind, j: [usize; 4]) -> Result<u64, BasisError> {
    require_spherical(kind)?;
    let mut s = j.map(|x| x as i64);
    s.sort_unstable();
    let [j1, j2, j3, j4] = s;
    let mut total = 0u64;
    for k in 0..=j1 {
        let left = j2 - j1 + 2 * k;
        let diff = left - (j4 - j3);
        if diff >= 0 && diff % 2 == 0 && diff / 2 <= j3 {
            total += 1;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_display_and_equality() {
        assert_eq!(Dyadic::new(20, 5), Dyadic::new(5, 3));
        assert_eq!(Dyadic::new(20, 5).to_string(), "5/8");
        assert_eq!(Dyadic::new(4, 2).to_string(), "1");
    }

    #[test]
    fn time_integral_small_cases() {
        assert_eq!(integral_time_product(&[1, 1]), Dyadic::new(1, 0));
        assert_eq!(integral_time_product(&[1, 2]), Dyadic::new(0, 0));
        assert_eq!(integral_time_product(&[]), Dyadic::new(2, 0));
        assert_eq!(integral_time_product(&[0]), Dyadic::new(2, 0));
    }

    #[test]
    fn hopf_kind_rejected() {
        let k = BasisKind::Hopf { mu1: 1, mu2: 0 };
        assert_eq!(integral_space4(k, [0; 4]), Err(BasisError::HopfIntegralUnsupported));
        assert_eq!(integral_space6(k, [0; 6]), Err(BasisError::HopfIntegralUnsupported));
    }
}
