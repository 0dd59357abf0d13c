use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of consensus rounds `t(k)` applied at iteration `k`.
///
/// All kinds are nondecreasing in `k` and satisfy `t(k) ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Schedule {
    /// `t(k) = j`.
    Constant { j: u32 },
    /// `t(k) = ⌊q·ln(k+1)⌋ + 1` (natural log).
    LogFloor { q: f64 },
    /// `t(k) = ⌊k/m⌋ + 1`.
    LinearFloor { m: u32 },
    /// `t(k) = k + 1`.
    Identity,
}

impl Schedule {
    /// The five schedules of the reference experiments, numbered 1 to 5.
    pub fn case(number: u8) -> Option<Schedule> {
        Some(match number {
            1 => Schedule::LogFloor { q: 0.5 },
            2 => Schedule::LogFloor { q: 1.0 },
            3 => Schedule::LogFloor { q: 3.0 },
            4 => Schedule::LinearFloor { m: 100 },
            5 => Schedule::Identity,
            _ => return None,
        })
    }

    pub fn cases() -> Vec<Schedule> {
        (1..=5).filter_map(Schedule::case).collect()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Constant { j: 0 } => Err(Error::InvalidParameter("constant schedule needs J ≥ 1".into())),
            Schedule::LogFloor { q } if !(q.is_finite() && q >= 0.0) => Err(Error::InvalidParameter(format!(
                "log-floor schedule needs a finite q ≥ 0, got {q}"
            ))),
            Schedule::LinearFloor { m: 0 } => Err(Error::InvalidParameter("linear-floor schedule needs m ≥ 1".into())),
            _ => Ok(()),
        }
    }

    pub fn rounds(&self, k: usize) -> u32 {
        let t = match *self {
            Schedule::Constant { j } => j as u64,
            Schedule::LogFloor { q } => (q * ((k + 1) as f64).ln()).floor() as u64 + 1,
            Schedule::LinearFloor { m } => (k / m as usize) as u64 + 1,
            Schedule::Identity => k as u64 + 1,
        };
        t.min(u32::MAX as u64) as u32
    }

    /// `J = t(0)`.
    pub fn initial_rounds(&self) -> u32 {
        self.rounds(0)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Schedule::Constant { .. })
    }

    /// `Σ_{k<horizon} β^{t(k)}`.
    pub fn beta_sum(&self, beta: f64, horizon: usize) -> f64 {
        (0..horizon).map(|k| beta.powi(self.rounds(k) as i32)).sum()
    }

    /// Heuristic summability test for `Σ β^{t(k)}` over a finite horizon:
    /// the second half of the horizon must contribute less than 1e-3 of the
    /// first half's total.
    pub fn looks_summable(&self, beta: f64, horizon: usize) -> bool {
        if beta == 0.0 {
            return true;
        }
        match *self {
            Schedule::Constant { .. } => false,
            Schedule::LogFloor { q } => q * (-beta.ln()) > 1.0,
            _ => {
                let half = horizon / 2;
                let head = self.beta_sum(beta, half);
                let tail: f64 = (half..horizon).map(|k| beta.powi(self.rounds(k) as i32)).sum();
                tail <= 1e-3 * head.max(f64::MIN_POSITIVE)
            }
        }
    }

    /// Short label used in file names.
    pub fn slug(&self) -> String {
        match *self {
            Schedule::Constant { j } => format!("constant-{j}"),
            Schedule::LogFloor { q } => format!("log-{q}"),
            Schedule::LinearFloor { m } => format!("linear-{m}"),
            Schedule::Identity => "identity".to_string(),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Schedule::Constant { j } => write!(f, "t(k) = {j}"),
            Schedule::LogFloor { q } => write!(f, "t(k) = floor({q}·ln(k+1)) + 1"),
            Schedule::LinearFloor { m } => write!(f, "t(k) = floor(k/{m}) + 1"),
            Schedule::Identity => write!(f, "t(k) = k + 1"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_formulas() {
        let c1 = Schedule::case(1).unwrap();
        // floor(0.5·ln 8) = floor(1.0397) = 1
        assert_eq!(c1.rounds(7), 2);
        assert_eq!(c1.rounds(0), 1);
        let c3 = Schedule::case(3).unwrap();
        // floor(3·ln 10) = floor(6.907) = 6
        assert_eq!(c3.rounds(9), 7);
        let c4 = Schedule::case(4).unwrap();
        assert_eq!((c4.rounds(99), c4.rounds(100), c4.rounds(250)), (1, 2, 3));
        assert_eq!(Schedule::Identity.rounds(41), 42);
        assert!(Schedule::case(0).is_none() && Schedule::case(6).is_none());
    }

    #[test]
    fn nondecreasing_and_at_least_one() {
        for s in Schedule::cases().into_iter().chain([Schedule::Constant { j: 3 }]) {
            let mut prev = 0;
            for k in 0..5000 {
                let t = s.rounds(k);
                assert!(t >= 1 && t >= prev, "{s} at {k}");
                prev = t;
            }
        }
    }

    #[test]
    fn validation() {
        assert!(Schedule::Constant { j: 0 }.validate().is_err());
        assert!(Schedule::LinearFloor { m: 0 }.validate().is_err());
        assert!(Schedule::LogFloor { q: -1.0 }.validate().is_err());
        assert!(Schedule::LogFloor { q: f64::NAN }.validate().is_err());
        assert!(Schedule::Identity.validate().is_ok());
    }

    #[test]
    fn summability_heuristic() {
        let beta = 1.0 / 7.0;
        assert!(!Schedule::case(1).unwrap().looks_summable(beta, 10_000));
        assert!(Schedule::case(2).unwrap().looks_summable(beta, 10_000));
        assert!(Schedule::Identity.looks_summable(beta, 10_000));
        assert!(Schedule::case(4).unwrap().looks_summable(beta, 10_000));
        assert!(!Schedule::Constant { j: 2 }.looks_summable(beta, 10_000));
    }
}
