use super::bounds::pow_u;
use crate::dynamics::{Schedule, Trajectory};

/// The two-term shape `max_{⌈T/2⌉≤j≤T} β^{t(j)} + (1 − C₂μ)^{T/2}` whose
/// multiple bounds `A_T` for summable schedules. The multiplier is not
/// explicit, so it is fitted rather than asserted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Main2Envelope {
    pub consensus: f64,
    pub contraction: f64,
    /// Result of the summability heuristic over the horizon `T`.
    pub summable: bool,
}

impl Main2Envelope {
    pub fn total(&self) -> f64 {
        self.consensus + self.contraction
    }
}

pub fn bound_main2(schedule: &Schedule, beta: f64, c2: f64, mu: f64, horizon: usize) -> Main2Envelope {
    let lo = horizon.div_ceil(2);
    let consensus = (lo..=horizon)
        .map(|j| pow_u(beta, schedule.rounds(j) as u64))
        .fold(0.0, f64::max);
    Main2Envelope {
        consensus,
        contraction: (1.0 - c2 * mu).powf(horizon as f64 / 2.0),
        summable: schedule.looks_summable(beta, horizon.max(2)),
    }
}

/// Smallest `C` with `A_T ≤ C·envelope(T)` for `1 ≤ T ≤ horizon`.
pub fn fit_main2_constant(traj: &Trajectory, c2: f64, horizon: usize) -> Option<f64> {
    let last = horizon.min(traj.records.len().checked_sub(1)?);
    if last == 0 {
        return None;
    }
    let mut best: f64 = 0.0;
    for t in 1..=last {
        let env = bound_main2(&traj.schedule, traj.beta, c2, traj.mu, t).total();
        best = best.max(traj.records[t].a / env);
    }
    Some(best)
}

/// Log-linear fit of a decaying positive series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Per-step contraction factor `exp(slope)`.
    pub rate: f64,
    pub start: usize,
    pub end: usize,
}

/// Fits `ln v_k ≈ a + k·ln(rate)` over the segment before the series reaches
/// its floor, taken as twice the median of the last tenth of the series.
pub fn linear_phase_rate(values: &[f64]) -> Option<RateFit> {
    if values.len() < 3 || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let tail = (values.len() / 10).max(1);
    let mut last: Vec<f64> = values[values.len() - tail..].to_vec();
    last.sort_by(f64::total_cmp);
    let floor = last[last.len() / 2];
    let end = values
        .iter()
        .position(|&v| v <= 2.0 * floor)
        .unwrap_or(values.len())
        .clamp(3, values.len());
    let n = end as f64;
    let mean_k = (end - 1) as f64 / 2.0;
    let mean_y = values[..end].iter().map(|v| v.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, v) in values[..end].iter().enumerate() {
        let dk = k as f64 - mean_k;
        sxy += dk * (v.ln() - mean_y);
        sxx += dk * dk;
    }
    Some(RateFit {
        rate: (sxy / sxx).exp(),
        start: 0,
        end,
    })
}
