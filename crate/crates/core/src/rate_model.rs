//! Closed-form SINR and achievable rates of cooperative (AF-relayed) and
//! direct uplink transmissions.

use serde::{Deserialize, Serialize};

use crate::allocator::{AllocationPlan, Entity};
use crate::scenario::{NormalizedGains, ScenarioConfig};
use crate::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RateError {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("plan inconsistent with gains: {0}")]
    Dimension(String),
}

/// Denominator variant of the cooperative SINR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrForm {
    /// `1 + y·b + x·a + c + c·x·a`.
    #[default]
    Full,
    /// `a·c·x + b·y`, the form whose Hessian is analysed in the concavity audit.
    Simplified,
}

/// Inputs of one far user → relay → base station link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoopLinkParams<T> {
    /// Far-user power in slot 1, watts.
    pub x: T,
    /// Relay power in slot 2, watts.
    pub y: T,
    /// Base-station downlink power, watts.
    pub z: T,
    /// Normalized far user → relay gain.
    pub a: T,
    /// Normalized relay → base station gain.
    pub b: T,
    /// Normalized self-interference gain.
    pub gamma: T,
}

impl<T: Real> CoopLinkParams<T> {
    /// Effective self-interference `c = z·gamma`.
    #[inline]
    pub fn c(&self) -> T {
        self.z * self.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonCoopLinkParams<T> {
    pub p: T,
    pub b: T,
    pub z: T,
    pub gamma: T,
}

/// AF relay amplification `1/sqrt(x·h_gain + 1)`.
pub fn amplification_gain<T: Real>(x: T, h_gain: T) -> T {
    (x * h_gain + T::one()).sqrt().recip()
}

pub fn sinr_cooperative<T: Real>(p: &CoopLinkParams<T>, form: SinrForm) -> Result<T, RateError> {
    let CoopLinkParams { x, y, a, b, .. } = *p;
    let c = p.c();
    let xa = x * a;
    let yb = y * b;
    let numerator = xa * yb;
    let denominator = match form {
        SinrForm::Full => T::one() + yb + xa + c + c * xa,
        SinrForm::Simplified => c * xa + yb,
    };
    if denominator == T::zero() {
        return if numerator == T::zero() {
            Ok(T::zero())
        } else {
            Err(RateError::Degenerate(
                "zero SINR denominator with nonzero signal",
            ))
        };
    }
    Ok(numerator / denominator)
}

pub fn sinr_noncooperative<T: Real>(p: &NonCoopLinkParams<T>) -> T {
    p.p * p.b / (T::one() + p.z * p.gamma)
}

/// Per-slot rate `0.5·log2(1 + sinr)` in bit/s/Hz.
pub fn rate_from_sinr<T: Real>(sinr: T) -> T {
    T::lit(0.5) * sinr.ln_1p() / T::lit(std::f64::consts::LN_2)
}

pub fn rate_cooperative<T: Real>(p: &CoopLinkParams<T>, form: SinrForm) -> Result<T, RateError> {
    sinr_cooperative(p, form).map(rate_from_sinr)
}

/// Rate of every scheduled entity in `plan`, recomputed from its powers.
pub fn link_rates<T: Real>(
    plan: &AllocationPlan<T>,
    gains: &NormalizedGains<T>,
) -> Result<Vec<(Entity, T)>, RateError> {
    let n = gains.n;
    let in_range = |sc: usize| {
        if sc < n {
            Ok(())
        } else {
            Err(RateError::Dimension(format!("subcarrier {sc} >= {n}")))
        }
    };
    let mut out = Vec::with_capacity(plan.coop.len() + plan.direct.len());
    for link in &plan.coop {
        if link.far_user >= gains.k1 || link.relay >= gains.k2 {
            return Err(RateError::Dimension(format!(
                "cooperative link ({}, {}) outside k1={} k2={}",
                link.far_user, link.relay, gains.k1, gains.k2
            )));
        }
        in_range(link.subcarriers.slot1)?;
        in_range(link.subcarriers.slot2)?;
        let j = link.subcarriers.slot2;
        let params = CoopLinkParams {
            x: link.far_power_w,
            y: link.relay_power_w,
            z: plan.bs_power_w,
            a: gains.alpha(link.far_user, link.relay, link.subcarriers.slot1),
            b: gains.beta(link.relay, j),
            gamma: gains.gamma_si(j),
        };
        let rate = rate_cooperative(&params, plan.sinr_form)?;
        out.push((
            Entity::Cooperative {
                far_user: link.far_user,
                relay: link.relay,
            },
            rate,
        ));
    }
    for link in &plan.direct {
        if link.user >= gains.k2 {
            return Err(RateError::Dimension(format!(
                "direct user {} outside k2={}",
                link.user, gains.k2
            )));
        }
        let mut rate = T::zero();
        for (slot, sc) in [link.subcarriers.slot1, link.subcarriers.slot2]
            .into_iter()
            .enumerate()
        {
            in_range(sc)?;
            let sinr = sinr_noncooperative(&NonCoopLinkParams {
                p: link.power_w[slot],
                b: gains.beta(link.user, sc),
                z: plan.bs_power_w,
                gamma: gains.gamma_si(sc),
            });
            rate = rate + rate_from_sinr(sinr);
        }
        out.push((Entity::Direct { user: link.user }, rate));
    }
    Ok(out)
}

/// Network sum-rate of `plan` in bit/s/Hz.
pub fn total_sum_rate<T: Real>(
    plan: &AllocationPlan<T>,
    gains: &NormalizedGains<T>,
    config: &ScenarioConfig,
) -> Result<T, RateError> {
    if !gains.matches(config) || plan.relay_of.len() != config.k1 {
        return Err(RateError::Dimension(
            "plan or gains do not match configuration".into(),
        ));
    }
    Ok(link_rates(plan, gains)?
        .into_iter()
        .fold(T::zero(), |acc, (_, r)| acc + r))
}
