use serde::{Deserialize, Serialize};

use super::engine::Trajectory;
use crate::error::{Error, Result};

/// Prices of one network-wide consensus round (`c_c`) and one network-wide
/// gradient round (`c_g`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub c_c: f64,
    pub c_g: f64,
    /// Count per-agent operations, multiplying both counters by `n`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub per_agent: bool,
}

impl CostWeights {
    pub fn new(c_c: f64, c_g: f64) -> Self {
        CostWeights {
            c_c,
            c_g,
            per_agent: false,
        }
    }

    pub fn per_agent(mut self, on: bool) -> Self {
        self.per_agent = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_c >= 0.0 && self.c_g >= 0.0 && self.c_c.is_finite() && self.c_g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cost weights must be finite and ≥ 0 (c_c={}, c_g={})",
                self.c_c, self.c_g
            )));
        }
        Ok(())
    }

    /// `c_c·comm + c_g·grad`, times `n` in per-agent mode.
    pub fn price(&self, comm: u64, grad: u64, agents: usize) -> f64 {
        let scale = if self.per_agent { agents as f64 } else { 1.0 };
        scale * (self.c_c * comm as f64 + self.c_g * grad as f64)
    }

    /// File-name fragment such as `cg1-cc0.2`.
    pub fn slug(&self) -> String {
        format!(
            "cg{}-cc{}{}",
            self.c_g,
            self.c_c,
            if self.per_agent { "-agent" } else { "" }
        )
    }
}

/// Cumulative cost of each recorded iterate.
pub fn cost(traj: &Trajectory, weights: &CostWeights) -> Result<Vec<f64>> {
    weights.validate()?;
    Ok(traj
        .records
        .iter()
        .map(|r| weights.price(r.cum_comm, r.cum_grad, traj.agents))
        .collect())
}
