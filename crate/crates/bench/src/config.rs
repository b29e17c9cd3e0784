//! Batch configuration read from JSON.

use std::path::PathBuf;

use rdrsom::SolverConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("invalid solver overrides: {0}")]
    Solver(String),
    #[error("gset file {path}: {source}")]
    Gset {
        path: PathBuf,
        source: crate::gset::GsetError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    MaxcutRandom,
    MaxcutGset,
    KohnSham,
    Snl,
    SnlWarmstart,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::MaxcutRandom => "maxcut-random",
            ProblemKind::MaxcutGset => "maxcut-gset",
            ProblemKind::KohnSham => "kohn-sham",
            ProblemKind::Snl => "snl",
            ProblemKind::SnlWarmstart => "snl-warmstart",
        }
    }

    /// Gradient tolerance used unless overridden.
    pub fn default_eps(self) -> f64 {
        match self {
            ProblemKind::Snl | ProblemKind::SnlWarmstart => 1e-5,
            _ => 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Finite-difference reduced Hessian.
    Rdrsom,
    RdrsomExact,
    BaselineBb,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Rdrsom => "rdrsom",
            SolverKind::RdrsomExact => "rdrsom-exact",
            SolverKind::BaselineBb => "baseline-bb",
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_solvers() -> Vec<SolverKind> {
    vec![SolverKind::Rdrsom]
}

fn default_kkt_cap() -> usize {
    rdrsom::problems::maxcut::KKT_DENSE_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub problem: ProblemKind,
    /// Vertex, grid or sensor count.
    #[serde(default)]
    pub n: Option<usize>,
    /// Max-cut factor width; defaults to `⌈√(2n)⌉`.
    #[serde(default)]
    pub r: Option<usize>,
    /// Kohn–Sham column count.
    #[serde(default)]
    pub p: Option<usize>,
    /// Kohn–Sham interaction strength; defaults to 1.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_solvers")]
    pub solvers: Vec<SolverKind>,
    #[serde(default)]
    pub gset_path: Option<PathBuf>,
    /// Fields of the solver configuration to override.
    #[serde(default)]
    pub solver: Map<String, Value>,
    #[serde(default = "default_kkt_cap")]
    pub kkt_cap: usize,
    #[serde(default)]
    pub output_json: Option<PathBuf>,
    #[serde(default)]
    pub output_csv: Option<PathBuf>,
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: BenchConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Minimal config for `problem` with everything else defaulted.
    pub fn new(problem: ProblemKind) -> Self {
        Self {
            problem,
            n: None,
            r: None,
            p: None,
            alpha: None,
            seeds: default_seeds(),
            solvers: default_solvers(),
            gset_path: None,
            solver: Map::new(),
            kkt_cap: default_kkt_cap(),
            output_json: None,
            output_csv: None,
        }
    }

    fn require_n(&self, min: usize) -> Result<usize, ConfigError> {
        match self.n {
            Some(n) if n >= min => Ok(n),
            Some(n) => Err(ConfigError::Invalid(format!("{} needs n >= {min}, got {n}", self.problem.name()))),
            None => Err(ConfigError::Invalid(format!("{} requires \"n\"", self.problem.name()))),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("seed list is empty".into()));
        }
        if self.solvers.is_empty() {
            return Err(ConfigError::Invalid("solver list is empty".into()));
        }
        if self.r == Some(0) {
            return Err(ConfigError::Invalid("r must be at least 1".into()));
        }
        match self.problem {
            ProblemKind::MaxcutRandom => {
                self.require_n(2)?;
            }
            ProblemKind::MaxcutGset => {
                if self.gset_path.is_none() {
                    return Err(ConfigError::Invalid("maxcut-gset requires \"gset_path\"".into()));
                }
            }
            ProblemKind::KohnSham => {
                let n = self.require_n(1)?;
                match self.p {
                    Some(p) if p >= 1 && p <= n => {}
                    Some(p) => return Err(ConfigError::Invalid(format!("kohn-sham needs 1 <= p <= n, got p = {p}"))),
                    None => return Err(ConfigError::Invalid("kohn-sham requires \"p\"".into())),
                }
                if let Some(a) = self.alpha {
                    if !(a >= 0.0 && a.is_finite()) {
                        return Err(ConfigError::Invalid(format!("alpha must be nonnegative, got {a}")));
                    }
                }
            }
            ProblemKind::Snl | ProblemKind::SnlWarmstart => {
                self.require_n(10)?;
                if self.solvers.contains(&SolverKind::RdrsomExact) {
                    return Err(ConfigError::Invalid(
                        "rdrsom-exact needs Hessian-vector products, which the SNL manifold does not provide".into(),
                    ));
                }
            }
        }
        self.solver_config()?;
        Ok(())
    }

    /// Problem defaults with the `solver` overrides applied.
    pub fn solver_config(&self) -> Result<SolverConfig, ConfigError> {
        let base = SolverConfig {
            eps_grad: self.problem.default_eps(),
            ..SolverConfig::default()
        };
        let mut value = serde_json::to_value(base).expect("solver config serializes");
        let obj = value.as_object_mut().expect("struct serializes to an object");
        for (k, v) in &self.solver {
            obj.insert(k.clone(), v.clone());
        }
        let cfg: SolverConfig = serde_json::from_value(value).map_err(|e| ConfigError::Solver(e.to_string()))?;
        cfg.validate().map_err(|e| ConfigError::Solver(e.to_string()))?;
        Ok(cfg)
    }
}
