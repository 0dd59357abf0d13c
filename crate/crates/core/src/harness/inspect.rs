use std::fmt;

use super::config::ExperimentConfig;
use super::experiment::Instance;
use crate::dynamics::{Schedule, StackedState};
use crate::error::Result;
use crate::theory::{stepsize_caps, BoundInputs, StepsizeCaps};

/// Constants that depend on the schedule through `J = t(0)` and on μ.
#[derive(Debug, Clone)]
pub struct ScheduleConstants {
    pub schedule: Schedule,
    pub j: u32,
    pub mu: f64,
    pub caps: Option<StepsizeCaps>,
    pub gamma: Option<f64>,
    pub r: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct InspectReport {
    pub name: String,
    pub beta: f64,
    pub lambda2: f64,
    pub l: f64,
    pub d: f64,
    pub a0: f64,
    pub b0: f64,
    /// `(α, **L**, c_H, C_H, C₂, ‖H‖², rank, p)` for composite problems.
    pub composite: Option<CompositeSummary>,
    pub schedules: Vec<ScheduleConstants>,
}

#[derive(Debug, Clone, Copy)]
pub struct CompositeSummary {
    pub alpha: f64,
    pub smooth_g: f64,
    pub c_h: f64,
    pub c_h_upper: f64,
    pub c2: f64,
    pub norm_sq: f64,
    pub rank: usize,
    pub dim: usize,
}

pub fn inspect(cfg: &ExperimentConfig) -> Result<InspectReport> {
    cfg.validate()?;
    let inst = Instance::build(cfg)?;
    let problem = inst.problem();
    let (n, p) = (problem.agents(), problem.dim());
    let x0 = StackedState::uniform(n, p, cfg.problem.seed());
    let avg = x0.average();
    let a0 = (n as f64).sqrt() * (&avg - problem.project(&avg)).norm();
    let b0 = x0.consensus_error();
    let beta = inst.consensus().beta();

    let composite = problem.composite().map(|cs| {
        let c = inst.constants().expect("composite problems carry constants");
        CompositeSummary {
            alpha: c.alpha,
            smooth_g: c.smooth_g,
            c_h: c.c_h,
            c_h_upper: c.c_h_upper,
            c2: c.c2,
            norm_sq: c.norm_sq,
            rank: cs.rank(),
            dim: p,
        }
    });

    let mut schedules = Vec::new();
    for s in &cfg.schedules {
        let j = s.initial_rounds();
        let mu = inst.resolve_mu(cfg.step, s)?;
        let mut entry = ScheduleConstants {
            schedule: *s,
            j,
            mu,
            caps: None,
            gamma: None,
            r: None,
            note: None,
        };
        if let Some(c) = inst.constants() {
            match stepsize_caps(c, beta, j) {
                Ok(caps) => entry.caps = Some(caps),
                Err(e) => entry.note = Some(e.to_string()),
            }
            entry.gamma = Some(c.gamma(mu));
            match BoundInputs::new(c, beta, *s, mu, a0, b0, inst.d()) {
                Ok(b) => entry.r = Some(b.r),
                Err(e) => entry.note = Some(e.to_string()),
            }
        }
        schedules.push(entry);
    }

    Ok(InspectReport {
        name: cfg.name.clone(),
        beta,
        lambda2: inst.consensus().lambda2(),
        l: problem.smoothness(),
        d: inst.d(),
        a0,
        b0,
        composite,
        schedules,
    })
}

impl fmt::Display for InspectReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "experiment     {}", self.name)?;
        writeln!(f, "beta           {:.12}", self.beta)?;
        writeln!(f, "lambda2(WtW)   {:.12}", self.lambda2)?;
        writeln!(f, "L              {:.12}", self.l)?;
        writeln!(f, "D              {:.12e}", self.d)?;
        writeln!(f, "A_0            {:.12e}", self.a0)?;
        writeln!(f, "B_0            {:.12e}", self.b0)?;
        if let Some(c) = &self.composite {
            writeln!(f, "alpha          {}", c.alpha)?;
            writeln!(f, "L_g            {}", c.smooth_g)?;
            writeln!(f, "rank(H)        {} of {}", c.rank, c.dim)?;
            writeln!(f, "|H|^2          {:.12e}", c.norm_sq)?;
            writeln!(f, "c_H            {:.12e}", c.c_h)?;
            writeln!(f, "C_H            {:.12e}", c.c_h_upper)?;
            writeln!(f, "C_2            {:.12e}", c.c2)?;
        }
        writeln!(f, "cap 2/L        {:.12e}", 2.0 / self.l)?;
        writeln!(f, "cap 1/L        {:.12e}", 1.0 / self.l)?;
        for s in &self.schedules {
            writeln!(f, "schedule {} (J = {})", s.schedule, s.j)?;
            writeln!(f, "  mu           {:.12e}", s.mu)?;
            if let Some(c) = &s.caps {
                writeln!(f, "  cap hoffman  {:.12e}", c.hoffman)?;
                writeln!(f, "  cap consensus {:.12e}", c.consensus)?;
                writeln!(f, "  cap          {:.12e}", c.composite)?;
            }
            if let Some(g) = s.gamma {
                writeln!(f, "  gamma        {:.12e}", g)?;
            }
            if let Some(r) = s.r {
                writeln!(f, "  R            {:.12e}", r)?;
            }
            if let Some(n) = &s.note {
                writeln!(f, "  note         {n}")?;
            }
        }
        Ok(())
    }
}
