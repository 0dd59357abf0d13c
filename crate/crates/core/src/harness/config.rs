use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{CostWeights, Schedule};
use crate::error::{Error, Result};
use crate::net::WeightScheme;
use crate::problems::ChConvention;
use crate::theory::BoundForm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    Regression { p: usize, n: usize, s: usize, seed: u64 },
    PiecewiseQuartic { n: usize, seed: u64 },
}

impl ProblemSpec {
    pub fn agents(&self) -> usize {
        match *self {
            ProblemSpec::Regression { n, .. } | ProblemSpec::PiecewiseQuartic { n, .. } => n,
        }
    }

    pub fn seed(&self) -> u64 {
        match *self {
            ProblemSpec::Regression { seed, .. } | ProblemSpec::PiecewiseQuartic { seed, .. } => seed,
        }
    }

    pub fn set_seed(&mut self, new: u64) {
        match self {
            ProblemSpec::Regression { seed, .. } | ProblemSpec::PiecewiseQuartic { seed, .. } => *seed = new,
        }
    }
}

fn lazy_metropolis() -> WeightScheme {
    WeightScheme::LazyMetropolis
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Node `i` linked to `i±1, …, i±radius` (mod n).
    Circulant {
        radius: usize,
        #[serde(default = "lazy_metropolis")]
        weights: WeightScheme,
    },
    Complete {
        #[serde(default = "lazy_metropolis")]
        weights: WeightScheme,
    },
}

impl GraphSpec {
    pub fn weights(&self) -> WeightScheme {
        match *self {
            GraphSpec::Circulant { weights, .. } | GraphSpec::Complete { weights } => weights,
        }
    }
}

/// How the step size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StepRule {
    Fixed {
        mu: f64,
    },
    /// `factor` times the composite cap for the schedule's `J = t(0)`.
    CompositeCap {
        factor: f64,
    },
    /// `factor / L`.
    InverseL {
        factor: f64,
    },
}

/// Point against which `A_k` is measured.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricSpec {
    /// Distance of the average iterate to the optimal set.
    #[default]
    Projection,
    /// Distance to a fixed minimiser.
    Point(Vec<f64>),
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// A full experiment: one problem and graph, a list of schedules, and the
/// cost weights under which each trajectory is priced.
///
/// Stored as TOML; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub iterations: usize,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub metric: MetricSpec,
    /// Run even when μ fails the caps the monitors rely on.
    #[serde(default)]
    pub allow_inadmissible: bool,
    #[serde(default)]
    pub ch_convention: ChConvention,
    #[serde(default)]
    pub bound_form: BoundForm,
    pub problem: ProblemSpec,
    pub graph: GraphSpec,
    pub step: StepRule,
    pub schedules: Vec<Schedule>,
    pub costs: Vec<CostWeights>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fails for seeds above `i64::MAX`, which TOML integers cannot hold.
    pub fn to_toml(&self) -> Result<String> {
        if i64::try_from(self.problem.seed()).is_err() {
            return Err(Error::Config(format!(
                "seed {} does not fit a TOML integer (max {})",
                self.problem.seed(),
                i64::MAX
            )));
        }
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schedules.is_empty() {
            return Err(Error::Config("no cases: the schedule list is empty".into()));
        }
        if self.costs.is_empty() {
            return Err(Error::Config("at least one cost pair is required".into()));
        }
        for s in &self.schedules {
            s.validate()?;
        }
        for c in &self.costs {
            c.validate()?;
        }
        match self.step {
            StepRule::Fixed { mu } if !(mu > 0.0 && mu.is_finite()) => {
                return Err(Error::Config(format!("step size must be positive, got {mu}")))
            }
            StepRule::CompositeCap { factor } | StepRule::InverseL { factor }
                if !(factor > 0.0 && factor.is_finite()) =>
            {
                return Err(Error::Config(format!("step factor must be positive, got {factor}")))
            }
            _ => {}
        }
        if let (StepRule::CompositeCap { .. }, ProblemSpec::PiecewiseQuartic { .. }) = (self.step, &self.problem) {
            return Err(Error::Config(
                "composite-cap step rule needs a composite problem".into(),
            ));
        }
        if let MetricSpec::Point(x) = &self.metric {
            let p = match self.problem {
                ProblemSpec::Regression { p, .. } => p,
                ProblemSpec::PiecewiseQuartic { .. } => 1,
            };
            if x.len() != p {
                return Err(Error::Config(format!(
                    "metric point has length {}, expected {p}",
                    x.len()
                )));
            }
        }
        Ok(())
    }

    /// Keeps only the `number`-th schedule (1-based).
    pub fn select_case(&mut self, number: usize) -> Result<()> {
        if number == 0 || number > self.schedules.len() {
            return Err(Error::Config(format!(
                "case {number} out of range 1..={}",
                self.schedules.len()
            )));
        }
        self.schedules = vec![self.schedules[number - 1]];
        Ok(())
    }
}

fn reference_costs() -> Vec<CostWeights> {
    [(1.0, 0.2), (1.0, 0.02), (0.02, 1.0)]
        .into_iter()
        .map(|(c_g, c_c)| CostWeights::new(c_c, c_g))
        .collect()
}

/// Distributed least squares on a rank-deficient operator: `p = 50`, `n = 8`,
/// `s = 5`, circulant graph of radius 3, the five reference schedules and a
/// step just inside the composite cap.
pub fn preset_regression() -> ExperimentConfig {
    ExperimentConfig {
        name: "regression".into(),
        iterations: 10_000,
        output: PathBuf::from("out/regression"),
        metric: MetricSpec::Projection,
        allow_inadmissible: false,
        ch_convention: ChConvention::InverseNormSquared,
        bound_form: BoundForm::AsStated,
        problem: ProblemSpec::Regression {
            p: 50,
            n: 8,
            s: 5,
            seed: 0,
        },
        graph: GraphSpec::Circulant {
            radius: 3,
            weights: WeightScheme::LazyMetropolis,
        },
        step: StepRule::CompositeCap { factor: 0.99 },
        schedules: Schedule::cases(),
        costs: reference_costs(),
    }
}

/// Scalar piecewise-quartic problem with `n = 8` and μ = 0.5. That step
/// exceeds `1/L`, so the run proceeds with an admissibility warning.
pub fn preset_piecewise() -> ExperimentConfig {
    ExperimentConfig {
        name: "piecewise".into(),
        iterations: 10_000,
        output: PathBuf::from("out/piecewise"),
        metric: MetricSpec::Projection,
        allow_inadmissible: true,
        ch_convention: ChConvention::InverseNormSquared,
        bound_form: BoundForm::AsStated,
        problem: ProblemSpec::PiecewiseQuartic { n: 8, seed: 0 },
        graph: GraphSpec::Circulant {
            radius: 3,
            weights: WeightScheme::LazyMetropolis,
        },
        step: StepRule::Fixed { mu: 0.5 },
        schedules: Schedule::cases(),
        costs: reference_costs(),
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "regression" => Ok(preset_regression()),
        "piecewise" => Ok(preset_piecewise()),
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (expected regression or piecewise)"
        ))),
    }
}
