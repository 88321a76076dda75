//! Run configuration: a TOML (or JSON) file with one section per concern. Every section
//! and key is optional and falls back to the defaults below; unknown keys are rejected.

use std::path::{Path, PathBuf};

use kg_core::basis::BasisKind;
use kg_core::diophantine::admissible_eps_grid;
use kg_core::field::Truncation;
use kg_core::ls_solver::{ProblemParams, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub frequency: FrequencySection,
    pub truncation: TruncationSection,
    pub solver: SolverSection,
    pub multiplicity: MultiplicitySection,
    pub verify: VerifySection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    /// Zonal functions of the polar angle.
    Spherical,
    /// Hopf plane waves with momenta `(mu1, mu2)`.
    Hopf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub p: u32,
    pub symmetry: Symmetry,
    pub mu1: i64,
    pub mu2: i64,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            p: 5,
            symmetry: Symmetry::Spherical,
            mu1: 0,
            mu2: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencySection {
    pub gamma: f64,
    /// Explicit ε values; each must pass the Diophantine check.
    pub eps: Option<Vec<f64>>,
    /// `[ε_min, ε_max]`, sampled log-uniformly with `eps_count` points, keeping the
    /// admissible ones.
    pub eps_range: Option<[f64; 2]>,
    pub eps_count: Option<usize>,
    /// Horizon of the Diophantine check (raised to at least `Lmax`).
    pub ell_max: u64,
}

impl Default for FrequencySection {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            eps: None,
            eps_range: None,
            eps_count: None,
            ell_max: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(rename = "Lmax")]
    pub lmax: usize,
    #[serde(rename = "Jmax")]
    pub jmax: usize,
    #[serde(rename = "N_split")]
    pub n_split: u64,
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self {
            lmax: 64,
            jmax: 32,
            n_split: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub fp_tol: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    /// Ball constant; omitted selects the solver default.
    #[serde(rename = "R")]
    pub r_ball: Option<f64>,
    /// Relative residual of the full equation below which a solve counts as converged.
    pub residual_tol: f64,
    /// Period subspace `V_n` searched by `solve`, `sweep` and `evolve`.
    pub subspace_n: usize,
    /// Random restarts of the ratio ascent.
    pub restarts: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let tol = Tolerances::default();
        Self {
            fp_tol: tol.fp_tol,
            grad_tol: tol.grad_tol,
            max_iter: tol.max_iter,
            r_ball: None,
            residual_tol: 1e-8,
            subspace_n: 1,
            restarts: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiplicitySection {
    pub k_star: usize,
}

impl Default for MultiplicitySection {
    fn default() -> Self {
        Self { k_star: 2 }
    }
}

/// Names of the verification suites run by `verify`.
pub const ALL_SUITES: [&str; 8] = [
    "identities",
    "basis_oracles",
    "strichartz",
    "divisor_margins",
    "resolvent_difference",
    "evolution",
    "regularity",
    "scaling",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Suite names, or `["all"]`.
    pub suites: Vec<String>,
    pub seed: u64,
    pub n_samples: usize,
    /// Time steps per period of the evolution round trip.
    pub steps_per_period: usize,
    /// Periods integrated by `evolve`.
    pub periods: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            suites: vec!["all".into()],
            seed: 0,
            n_samples: 100,
            steps_per_period: 1 << 14,
            periods: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Left out of the configuration echoed into reports, so that reruns into another
    /// directory produce identical files.
    #[serde(skip_serializing)]
    pub directory: PathBuf,
    /// Subset of `["json", "csv"]`; JSON reports are always required.
    pub formats: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("kg-out"),
            formats: vec!["json".into(), "csv".into()],
        }
    }
}

impl RunConfig {
    /// Reads a configuration file: JSON when the extension is `.json`, TOML otherwise.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg: Self = if is_json {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        Ok(cfg)
    }

    /// Structural checks that need no computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.frequency.eps.is_some() && self.frequency.eps_range.is_some() {
            return bad("frequency: give either `eps` or `eps_range`, not both".into());
        }
        if self.frequency.eps_count.is_some() && self.frequency.eps_range.is_none() {
            return bad("frequency: `eps_count` requires `eps_range`".into());
        }
        if self.frequency.eps.as_ref().is_some_and(Vec::is_empty) {
            return bad("frequency: `eps` is empty".into());
        }
        if self.solver.subspace_n == 0 {
            return bad("solver: `subspace_n` must be ≥ 1".into());
        }
        if self.solver.residual_tol.is_nan() || self.solver.residual_tol <= 0.0 {
            return bad("solver: `residual_tol` must be positive".into());
        }
        if self.multiplicity.k_star == 0 {
            return bad("multiplicity: `k_star` must be ≥ 1".into());
        }
        if self.verify.steps_per_period == 0 || self.verify.periods == 0 || self.verify.n_samples == 0 {
            return bad("verify: `steps_per_period`, `periods` and `n_samples` must be ≥ 1".into());
        }
        for s in &self.verify.suites {
            if s != "all" && !ALL_SUITES.contains(&s.as_str()) {
                return bad(format!(
                    "verify: unknown suite `{s}` (known: all, {})",
                    ALL_SUITES.join(", ")
                ));
            }
        }
        for f in &self.output.formats {
            if f != "json" && f != "csv" {
                return bad(format!("output: unknown format `{f}` (known: json, csv)"));
            }
        }
        if !self.output.formats.iter().any(|f| f == "json") {
            return bad("output: `formats` must include json".into());
        }
        if self.problem.symmetry == Symmetry::Spherical && (self.problem.mu1 != 0 || self.problem.mu2 != 0) {
            return bad("problem: `mu1`/`mu2` only apply to the hopf symmetry".into());
        }
        Ok(())
    }

    pub fn basis_kind(&self) -> BasisKind {
        match self.problem.symmetry {
            Symmetry::Spherical => BasisKind::Spherical,
            Symmetry::Hopf => BasisKind::Hopf {
                mu1: self.problem.mu1,
                mu2: self.problem.mu2,
            },
        }
    }

    pub fn truncation(&self) -> Truncation {
        Truncation {
            lmax: self.truncation.lmax,
            jmax: self.truncation.jmax,
            n_split: self.truncation.n_split,
        }
    }

    pub fn writes_csv(&self) -> bool {
        self.output.formats.iter().any(|f| f == "csv")
    }

    /// The ε values of the run: the explicit list, the admissible points of the range,
    /// or the single default `ε = 10⁻³`.
    pub fn eps_values(&self) -> Result<Vec<f64>, CliError> {
        let f = &self.frequency;
        if let Some(list) = &f.eps {
            return Ok(list.clone());
        }
        if let Some([lo, hi]) = f.eps_range {
            let count = f.eps_count.unwrap_or(5);
            let horizon = f.ell_max.max(self.truncation.lmax as u64);
            return admissible_eps_grid(self.problem.p, f.gamma, lo, hi, count, horizon)
                .map(|g| g.into_iter().map(|(e, _)| e).collect())
                .map_err(CliError::from);
        }
        Ok(vec![1e-3])
    }

    /// Solver parameters at one ε.
    pub fn problem_params(&self, eps: f64) -> ProblemParams {
        let mut params = ProblemParams::new(self.problem.p, eps);
        params.kind = self.basis_kind();
        params.trunc = self.truncation();
        params.gamma = self.frequency.gamma;
        params.ell_max = self.frequency.ell_max;
        params.r_ball = self.solver.r_ball;
        params.tol.fp_tol = self.solver.fp_tol;
        params.tol.grad_tol = self.solver.grad_tol;
        params.tol.max_iter = self.solver.max_iter;
        params
    }

    /// The suites selected for `verify`, in canonical order.
    pub fn suites(&self) -> Vec<&'static str> {
        let all = self.verify.suites.iter().any(|s| s == "all");
        ALL_SUITES
            .into_iter()
            .filter(|name| all || self.verify.suites.iter().any(|s| s == name))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_gives_defaults() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        cfg.validate().unwrap();
        assert_eq!(cfg.eps_values().unwrap(), vec![1e-3]);
        assert_eq!(cfg.suites().len(), ALL_SUITES.len());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[problem]\nq = 3\n").is_err());
        assert!(toml::from_str::<RunConfig>("[extra]\n").is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"truncation": {"lmax": 64}}"#).is_err());
    }

    #[test]
    fn sections_parse_with_their_key_names() {
        let cfg: RunConfig = toml::from_str(
            "[problem]\np = 3\nsymmetry = \"hopf\"\nmu1 = 2\nmu2 = 1\n\
             [truncation]\nLmax = 64\nJmax = 30\nN_split = 8\n\
             [solver]\nR = 2.5\n\
             [frequency]\neps_range = [1e-4, 1e-2]\neps_count = 5\n",
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.basis_kind(), BasisKind::Hopf { mu1: 2, mu2: 1 });
        assert_eq!(cfg.truncation().jmax, 30);
        assert_eq!(cfg.problem_params(1e-3).r_ball, Some(2.5));
        assert!(!cfg.eps_values().unwrap().is_empty());
    }

    #[test]
    fn inconsistent_sections_are_rejected() {
        let mut cfg = RunConfig::default();
        cfg.verify.suites = vec!["nonsense".into()];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.output.formats = vec!["csv".into()];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.frequency.eps = Some(vec![1e-3]);
        cfg.frequency.eps_range = Some([1e-4, 1e-2]);
        assert!(cfg.validate().is_err());
    }
}
