//! One-bit On-Off power control: transmit at a fixed power whenever the
//! gain exceeds the cutoff, stay silent otherwise.

use crate::channel::{Channel, SnrPoint};
use crate::error::{Error, Result};
use crate::waterfilling::{capacity_exact_csit, integrate_gain_tail, solve_threshold};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnOffPolicy {
    pub lambda0: f64,
    /// Power while active, `SNR / p_activation`.
    pub p_on: f64,
    /// `Prob(lambda > lambda0)`.
    pub p_activation: f64,
}

impl OnOffPolicy {
    /// Average power `p_on * p_activation`.
    pub fn average_power(&self) -> f64 {
        self.p_on * self.p_activation
    }

    /// `ln(1 + lambda0 p_on) * p_activation`, a lower bound on the rate.
    pub fn rate_lower_bound(&self) -> f64 {
        (self.lambda0 * self.p_on).ln_1p() * self.p_activation
    }
}

/// Policy with activation threshold `lambda0` meeting the average power
/// `snr` exactly.
pub fn build_policy(channel: &Channel, snr: SnrPoint, lambda0: f64) -> Result<OnOffPolicy> {
    if !(lambda0 > 0.0) {
        return Err(Error::domain("build_policy", format!("lambda0 = {lambda0} must be > 0")));
    }
    let p = channel.tail_prob(lambda0)?;
    if !(p > 0.0) || !(snr.linear / p).is_finite() {
        return Err(Error::DegeneratePolicy {
            lambda0,
            snr: snr.linear,
            p_activation: p,
        });
    }
    Ok(OnOffPolicy {
        lambda0,
        p_on: snr.linear / p,
        p_activation: p,
    })
}

/// Achievable rate `E[ln(1 + lambda p_on) 1{lambda > lambda0}]` in nats.
pub fn rate_onoff(channel: &Channel, policy: &OnOffPolicy) -> Result<f64> {
    let b = channel.derived().b_prod;
    let u0 = (policy.lambda0 / b).sqrt();
    let a = b * policy.p_on;
    Ok(channel.expect_scaled(u0, |u| (a * u * u).ln_1p())?.max(0.0))
}

/// Average power of the policy by quadrature in the gain variable,
/// independent of the tail probability stored in the policy.
pub fn audit_policy_power(channel: &Channel, policy: &OnOffPolicy) -> Result<f64> {
    let p_on = policy.p_on;
    integrate_gain_tail(channel, policy.lambda0, |_| p_on)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnOffGapPoint {
    pub snr_db: f64,
    pub lambda0: f64,
    pub mu0: f64,
    pub rate: f64,
    pub capacity: f64,
    /// `rate / capacity`.
    pub ratio: f64,
    pub lower_bound: f64,
    /// `lambda0 * SNR`, the low-SNR capacity surrogate.
    pub lambda0_snr: f64,
    /// `rate / (lambda0 SNR)`.
    pub rate_over_lambda0_snr: f64,
    /// `lambda0 SNR / Prob(lambda > lambda0)`, which decays like
    /// `mu0^{-1/2}`.
    pub lambda0_p_on: f64,
    /// `lambda0_p_on * sqrt(mu0)`.
    pub lambda0_p_on_scaled: f64,
}

/// On-Off rate against the exact capacity over an SNR grid, reusing the
/// waterfilling cutoff as the activation threshold.
pub fn onoff_gap_report(channel: &Channel, snr_grid: &[SnrPoint]) -> Result<Vec<OnOffGapPoint>> {
    snr_grid
        .iter()
        .map(|&snr| {
            let sol = solve_threshold(channel, snr)?;
            let capacity = capacity_exact_csit(channel, &sol)?;
            let policy = build_policy(channel, snr, sol.lambda0)?;
            let rate = rate_onoff(channel, &policy)?;
            let lambda0_snr = sol.lambda0 * snr.linear;
            let lambda0_p_on = sol.lambda0 * policy.p_on;
            Ok(OnOffGapPoint {
                snr_db: snr.db,
                lambda0: sol.lambda0,
                mu0: sol.mu0,
                rate,
                capacity,
                ratio: rate / capacity,
                lower_bound: policy.rate_lower_bound(),
                lambda0_snr,
                rate_over_lambda0_snr: rate / lambda0_snr,
                lambda0_p_on,
                lambda0_p_on_scaled: lambda0_p_on * sol.mu0.sqrt(),
            })
        })
        .collect()
}
