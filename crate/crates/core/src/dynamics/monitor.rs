//! Runtime checks of the two recursive inequality systems satisfied by
//! `(A_k, B_k)`.

use super::engine::Trajectory;

/// Absolute slack allowed on each monitored inequality.
pub const MONITOR_SLACK: f64 = 1e-8;

/// Which 2×2 system to check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InequalitySystem {
    /// Convex objectives, `μ ≤ 2/L`:
    /// `A' ≤ A + μL·B`, `B' ≤ β^t(μL·A + (1+μL)·B + μD)`.
    Convex,
    /// Composite objectives, `μ ≤ 2C_H/(**L**+α)`:
    /// `A' ≤ q·A + μL·B`, `B' ≤ β^t(C₀·A + C₀·B + μD)` with `C₀ = 1+μL`.
    Composite { q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorParams {
    pub mu: f64,
    pub l_max: f64,
    pub beta: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub system: InequalitySystem,
    pub checked: usize,
    pub violations: usize,
    /// Largest `lhs − rhs` over all checks (negative when every check had room).
    pub worst_excess: f64,
    pub first_violation: Option<usize>,
}

impl MonitorReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

pub fn monitor(traj: &Trajectory, system: InequalitySystem, params: &MonitorParams) -> MonitorReport {
    let MonitorParams { mu, l_max, beta, d } = *params;
    let mut report = MonitorReport {
        system,
        checked: 0,
        violations: 0,
        worst_excess: f64::NEG_INFINITY,
        first_violation: None,
    };
    for pair in traj.records.windows(2) {
        let (now, next) = (&pair[0], &pair[1]);
        let bt = beta.powi(now.t_k as i32);
        let c0 = 1.0 + mu * l_max;
        let (a_bound, b_bound) = match system {
            InequalitySystem::Convex => (
                now.a + mu * l_max * now.b,
                bt * (mu * l_max * now.a + c0 * now.b + mu * d),
            ),
            InequalitySystem::Composite { q } => {
                (q * now.a + mu * l_max * now.b, bt * (c0 * now.a + c0 * now.b + mu * d))
            }
        };
        for excess in [next.a - a_bound, next.b - b_bound] {
            report.checked += 1;
            report.worst_excess = report.worst_excess.max(excess);
            if excess > MONITOR_SLACK {
                report.violations += 1;
                report.first_violation.get_or_insert(now.k);
            }
        }
    }
    report
}
