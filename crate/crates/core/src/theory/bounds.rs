use serde::{Deserialize, Serialize};

use super::caps::stepsize_caps;
use crate::dynamics::{Schedule, Trajectory};
use crate::error::{Error, Result};
use crate::problems::TheoryConstants;

/// `β^e` for large integer exponents.
pub(crate) fn pow_u(beta: f64, e: u64) -> f64 {
    if e > i32::MAX as u64 {
        if beta < 1.0 {
            0.0
        } else {
            beta.powf(e as f64)
        }
    } else {
        beta.powi(e as i32)
    }
}

/// Which version of the nondecreasing-schedule bound to evaluate.
///
/// The published statement drops a factor `1/(1−β^J)` on the `(2LR + D)`
/// terms that its own derivation carries. `Derived` keeps it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundForm {
    #[default]
    AsStated,
    Derived,
}

/// Everything the explicit bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub a0: f64,
    pub b0: f64,
    pub mu: f64,
    /// `L = max_i L_i`.
    pub l: f64,
    pub c2: f64,
    pub beta: f64,
    pub schedule: Schedule,
    /// `J = t(0)`.
    pub j: u32,
    pub d: f64,
    /// Uniform bound on `A_k` (and `B_k/γ`).
    pub r: f64,
    pub gamma: f64,
    /// `q = √(1 − C₂μ)`.
    pub q: f64,
    /// `1 − q`, kept separately for accuracy.
    pub one_minus_q: f64,
}

impl BoundInputs {
    /// Checks μ against the composite caps and computes `R`.
    pub fn new(
        constants: &TheoryConstants,
        beta: f64,
        schedule: Schedule,
        mu: f64,
        a0: f64,
        b0: f64,
        d: f64,
    ) -> Result<Self> {
        schedule.validate()?;
        if !(a0 >= 0.0 && b0 >= 0.0 && d >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "A_0, B_0, D must be ≥ 0 (got {a0}, {b0}, {d})"
            )));
        }
        let j = schedule.initial_rounds();
        let caps = stepsize_caps(constants, beta, j)?;
        if !(mu > 0.0 && mu <= caps.composite * (1.0 + 1e-12)) {
            return Err(Error::Inadmissible {
                mu,
                reason: format!("composite cap is {:e}", caps.composite),
            });
        }
        let l = constants.l_max;
        let gamma = constants.gamma(mu);
        let bj = pow_u(beta, j as u64);
        let denom = gamma - (gamma + (1.0 + gamma) * mu * l) * bj;
        if bj > 0.0 && denom <= 0.0 {
            return Err(Error::Inadmissible {
                mu,
                reason: format!("radius denominator γ − (γ + (1+γ)μL)β^J = {denom:e} is not positive"),
            });
        }
        let floor = if bj > 0.0 { mu * d * bj / denom } else { 0.0 };
        Ok(BoundInputs {
            a0,
            b0,
            mu,
            l,
            c2: constants.c2,
            beta,
            schedule,
            j,
            d,
            r: a0.max(b0 / gamma).max(floor),
            gamma,
            q: constants.q(mu),
            one_minus_q: constants.one_minus_q(mu),
        })
    }

    fn beta_j(&self) -> f64 {
        pow_u(self.beta, self.j as u64)
    }

    /// `μ(2LR + D)`.
    fn drive(&self) -> f64 {
        self.mu * (2.0 * self.l * self.r + self.d)
    }

    fn form_factor(&self, form: BoundForm) -> f64 {
        match form {
            BoundForm::AsStated => 1.0,
            BoundForm::Derived => 1.0 / (1.0 - self.beta_j()),
        }
    }
}

/// Fixed-schedule bounds on `(A_k, B_k)`.
///
/// ```text
/// A_k ≤ q^{k−1}(A₀ + μLB₀) + μLβ^J/(1−β^J)·(μ(2LR+D)/(1−q) + B₀)
/// B_k ≤ β^{Jk}B₀ + μβ^J(2LR+D)/(1−β^J)
/// ```
///
/// At `k = 0` the `A` bound is `A₀` itself.
pub fn bound_fixed_schedule(inputs: &BoundInputs, k: usize) -> Result<(f64, f64)> {
    if !inputs.schedule.is_constant() {
        return Err(Error::InvalidParameter(format!(
            "fixed-schedule bound needs a constant schedule, got {}",
            inputs.schedule
        )));
    }
    let BoundInputs { a0, b0, mu, l, q, .. } = *inputs;
    let bj = inputs.beta_j();
    let drive = inputs.drive();
    let b = pow_u(inputs.beta, inputs.j as u64 * k as u64) * b0 + bj * drive / (1.0 - bj);
    if k == 0 {
        return Ok((a0, b));
    }
    let a = q.powi((k - 1).min(i32::MAX as usize) as i32) * (a0 + mu * l * b0)
        + mu * l * bj / (1.0 - bj) * (drive / inputs.one_minus_q + b0);
    Ok((a, b))
}

/// Nondecreasing-schedule bounds on `(A_{k+1}, B_{k+1})`, valid for `k ≥ 2`.
///
/// With `h = ⌊k/2⌋` the `A` bound is
///
/// ```text
/// q^k(A₀+μLB₀)
///   + μL/(1−q)·[μ(2LR+D)β^{t(h)} + B₀β^{(h+1)J}]
///   + μL·q^h·[μ(2LR+D)Σ_{l<h} β^{t(l)} + B₀Σ_{l<h} β^{(l+1)J}]
/// ```
///
/// and the `B` bound is `β^{(k+1)J}B₀ + μ(2LR+D)β^{t(k)}`. In the `Derived`
/// form every `μ(2LR+D)` is divided by `1 − β^J`. Both partial sums are
/// accumulated term by term.
pub fn bound_nondecreasing_schedule(inputs: &BoundInputs, k: usize, form: BoundForm) -> Result<(f64, f64)> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "nondecreasing-schedule bound needs k ≥ 2, got {k}"
        )));
    }
    let h = k / 2;
    let mut sum_t = 0.0;
    let mut sum_g = 0.0;
    for l in 0..h {
        sum_t += pow_u(inputs.beta, inputs.schedule.rounds(l) as u64);
        sum_g += pow_u(inputs.beta, (l as u64 + 1) * inputs.j as u64);
    }
    Ok(nondecreasing_terms(inputs, k, form, sum_t, sum_g))
}

fn nondecreasing_terms(inputs: &BoundInputs, k: usize, form: BoundForm, sum_t: f64, sum_g: f64) -> (f64, f64) {
    let BoundInputs {
        a0,
        b0,
        mu,
        l,
        q,
        beta,
        j,
        ..
    } = *inputs;
    let j = j as u64;
    let h = k / 2;
    let drive = inputs.drive() * inputs.form_factor(form);
    let t = |i: usize| inputs.schedule.rounds(i) as u64;
    let qk = |e: usize| q.powi(e.min(i32::MAX as usize) as i32);
    let a = qk(k) * (a0 + mu * l * b0)
        + mu * l / inputs.one_minus_q * (drive * pow_u(beta, t(h)) + b0 * pow_u(beta, (h as u64 + 1) * j))
        + mu * l * qk(h) * (drive * sum_t + b0 * sum_g);
    let b = pow_u(beta, (k as u64 + 1) * j) * b0 + drive * pow_u(beta, t(k));
    (a, b)
}

/// Nondecreasing-schedule bounds indexed by the iterate they bound: entry
/// `i` holds the bound on `(A_i, B_i)` for `i ≥ 3` and `None` before that.
///
/// Uses running partial sums, so the cost is linear in `k_max`.
pub fn nondecreasing_series(inputs: &BoundInputs, k_max: usize, form: BoundForm) -> Vec<Option<(f64, f64)>> {
    let mut out = vec![None; k_max + 1];
    let mut sum_t = 0.0;
    let mut sum_g = 0.0;
    let mut summed = 0;
    for i in 3..=k_max {
        let k = i - 1;
        while summed < k / 2 {
            sum_t += pow_u(inputs.beta, inputs.schedule.rounds(summed) as u64);
            sum_g += pow_u(inputs.beta, (summed as u64 + 1) * inputs.j as u64);
            summed += 1;
        }
        out[i] = Some(nondecreasing_terms(inputs, k, form, sum_t, sum_g));
    }
    out
}

/// Consensus-error envelope for convex objectives:
/// `B_{k+1} ≤ β^{t(k)}·[(1+2μL)R + μD]` whenever `A_k, B_k ≤ R`.
pub fn consensus_rate_bound(mu: f64, l: f64, beta: f64, t_k: u32, r: f64, d: f64) -> f64 {
    pow_u(beta, t_k as u64) * ((1.0 + 2.0 * mu * l) * r + mu * d)
}

/// Weighted-norm envelope on `A_k + c·B_k` for convex runs, `c = max(μL, 1)`.
///
/// The convex inequality system is dominated entrywise by
/// `M_k = [[1, μL], [α_k, α_k]]` with `α_k = (1+μL)β^{t(k)}`, so the product
/// bound gives
///
/// ```text
/// A_k + cB_k ≤ exp(c Σ_{j<k} α_j)·(A₀ + cB₀ + cμD Σ_{j<k} β^{t(j)}).
/// ```
///
/// The envelope stays finite exactly when `Σ β^{t(k)}` does.
pub fn convex_envelope(traj: &Trajectory, l: f64, d: f64) -> Vec<f64> {
    let Some(first) = traj.records.first() else {
        return Vec::new();
    };
    let mu = traj.mu;
    let c = (mu * l).max(1.0);
    let start = first.a + c * first.b;
    let mut alpha_sum = 0.0;
    let mut beta_sum = 0.0;
    let mut out = Vec::with_capacity(traj.records.len());
    for rec in &traj.records {
        out.push((c * alpha_sum).exp() * (start + c * mu * d * beta_sum));
        let bt = pow_u(traj.beta, rec.t_k as u64);
        alpha_sum += (1.0 + mu * l) * bt;
        beta_sum += bt;
    }
    out
}
