//! JSON run configurations for `analyze` and `optimize`.
//!
//! Unknown keys are rejected. Relative paths inside a configuration file
//! (`problem.csv.path`, `output_dir`) are resolved against the directory that
//! contains the file; the stored values stay as written so reports echo them verbatim.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asm::SamplingMode;
use crate::design::DesignSpace;
use crate::diagnose::Thresholds;
use crate::ego::EgoConfig;
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::pce::PceConfig;
use crate::surrogate::GradientMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Problem {
    Builtin {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    /// Externally evaluated samples (`x1,...,xm,y`) with their variable bounds.
    Csv {
        path: PathBuf,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl Problem {
    pub fn builtin(&self) -> Result<Option<TestFunction>> {
        match self {
            Problem::Builtin { name, dim } => TestFunction::by_name(name, *dim).map(Some),
            Problem::Csv { .. } => Ok(None),
        }
    }

    pub fn space(&self) -> Result<DesignSpace> {
        match self {
            Problem::Builtin { .. } => Ok(self.builtin()?.expect("builtin problem").space()),
            Problem::Csv { lower, upper, .. } => {
                DesignSpace::new(lower.clone(), upper.clone()).map_err(|e| Error::Config(e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SurrogateConfig {
    Kriging,
    Pce {
        #[serde(default = "default_p_max")]
        p_max: usize,
        #[serde(default = "default_q")]
        q: f64,
    },
}

fn default_p_max() -> usize {
    PceConfig::default().p_max
}

fn default_q() -> f64 {
    PceConfig::default().q
}

impl SurrogateConfig {
    pub fn pce(&self) -> Option<PceConfig> {
        match *self {
            SurrogateConfig::Kriging => None,
            SurrogateConfig::Pce { p_max, q } => Some(PceConfig {
                p_max,
                q,
                ..PceConfig::default()
            }),
        }
    }
}

/// Gradient sampling; Monte Carlo points are drawn from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModeConfig {
    #[default]
    TrainingPoints,
    MonteCarlo {
        count: usize,
    },
}

impl ModeConfig {
    pub fn sampling(self, seed: u64) -> SamplingMode {
        match self {
            ModeConfig::TrainingPoints => SamplingMode::TrainingPoints,
            ModeConfig::MonteCarlo { count } => SamplingMode::MonteCarlo { count, seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub problem: Problem,
    #[serde(default)]
    pub objective_index: usize,
    pub surrogate: SurrogateConfig,
    /// Latin-hypercube size for built-in problems; CSV problems use every row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_count: Option<usize>,
    pub seed: u64,
    pub n_active: usize,
    #[serde(default)]
    pub mode: ModeConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub gradient: GradientMethod,
    /// Directory relative paths are resolved against (the config file's directory).
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Read and validate; relative paths will resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config = Self::from_json(&read_config(path)?)?;
        config.base_dir = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn validate(&self) -> Result<()> {
        let space = self.problem.space()?;
        let m = space.dim();
        if let Some(f) = self.problem.builtin()? {
            if self.objective_index >= f.num_objectives() {
                return Err(Error::UnknownObjective {
                    index: self.objective_index,
                    available: f.num_objectives(),
                });
            }
            match self.sample_count {
                None => return Err(Error::Config("sample_count is required for built-in problems".into())),
                Some(k) if k < m + 1 => {
                    return Err(Error::Config(format!("sample_count must be at least m + 1 = {}, got {k}", m + 1)))
                }
                Some(_) => {}
            }
        } else if self.objective_index != 0 {
            return Err(Error::UnknownObjective {
                index: self.objective_index,
                available: 1,
            });
        }
        if !(1..=2).contains(&self.n_active) || self.n_active > m {
            return Err(Error::Config(format!("n_active must be 1 or 2 (and at most {m}), got {}", self.n_active)));
        }
        if let ModeConfig::MonteCarlo { count: 0 } = self.mode {
            return Err(Error::Config("monte-carlo count must be positive".into()));
        }
        if let SurrogateConfig::Pce { p_max, q } = self.surrogate {
            if p_max < 1 || !(q > 0.0 && q <= 1.0) {
                return Err(Error::Config(format!("invalid PCE options p_max = {p_max}, q = {q}")));
            }
        }
        let fd_step = match self.gradient {
            GradientMethod::Auto { fd_step } | GradientMethod::FiniteDifference { fd_step } => fd_step,
        };
        if !(fd_step > 0.0 && fd_step < 1.0) {
            return Err(Error::Config(format!("fd_step must lie in (0, 1), got {fd_step}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    /// Must be a built-in problem: EGO needs to evaluate new designs.
    pub problem: Problem,
    #[serde(default)]
    pub objective_index: usize,
    pub init_k: usize,
    pub budget: usize,
    pub seed: u64,
    #[serde(default = "default_ei_restarts")]
    pub ei_restarts: usize,
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_ei_restarts() -> usize {
    EgoConfig::new(2, 2, 0).ei_restarts
}

impl OptimizeConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut config = Self::from_json(&read_config(path)?)?;
        config.base_dir = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    pub fn function(&self) -> Result<TestFunction> {
        self.problem
            .builtin()?
            .ok_or_else(|| Error::Config("optimize needs a built-in problem".into()))
    }

    pub fn ego(&self) -> EgoConfig {
        EgoConfig {
            init_k: self.init_k,
            budget: self.budget,
            seed: self.seed,
            ei_restarts: self.ei_restarts,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.function()?;
        if self.objective_index >= f.num_objectives() {
            return Err(Error::UnknownObjective {
                index: self.objective_index,
                available: f.num_objectives(),
            });
        }
        self.ego().validate()
    }
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}
