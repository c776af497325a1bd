//! Low-SNR closed forms for the capacity.
//!
//! With `n = 9/2 - c_t - c_r` the waterfilling cutoff behaves like
//!
//! * `n > 0`: `mu0 ≈ (n²/4) W0²(SNR^{-1/n})`
//! * `n = 0`: `mu0 ≈ (1/4) ln²(1/SNR)`
//! * `n < 0`: `mu0 ≈ (n²/4) W₋₁²(-SNR^{-1/n})`
//!
//! and the capacity follows as `C ≈ mu0 b SNR`. The logarithmic form uses
//! the `n = 0` cutoff for every parameter set.

use crate::channel::{Channel, NCase, SnrPoint};
use crate::error::{Error, Result};
use crate::specfun::{lambert_w, upper_inc_gamma, Branch};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which version of the cutoff expansion to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Mu0Mode {
    /// Limit form with the constant `tau` and the factor `2/n` dropped.
    #[default]
    Simplified,
    /// Keeps `tau`: solves `tau SNR = mu0^{-n/2} e^{-2 sqrt(mu0)}` exactly.
    RetainedTau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCapacity {
    pub c_lambert: f64,
    pub c_log: f64,
    pub mu0_lambert: f64,
    pub mu0_log: f64,
    pub n_case: NCase,
}

fn ln_inv_snr(snr: SnrPoint) -> Result<f64> {
    if !(snr.linear > 0.0 && snr.linear < 1.0) {
        return Err(Error::domain(
            "asymptotics",
            format!("SNR = {} must lie in (0, 1)", snr.linear),
        ));
    }
    Ok(-snr.linear.ln())
}

/// `W0(e^l)`, staying finite when `e^l` overflows.
fn w0_exp(l: f64) -> Result<f64> {
    if l < 700.0 {
        return lambert_w(Branch::Principal, l.exp());
    }
    // w + ln w = l
    let mut w = l - l.ln();
    for _ in 0..50 {
        let step = (w + w.ln() - l) / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    Ok(w)
}

/// `W₋₁(-e^l)` for `l <= -1`, staying finite when `e^l` underflows.
fn wm1_neg_exp(l: f64) -> Result<f64> {
    if l > -700.0 {
        return lambert_w(Branch::LowerNeg1, -l.exp());
    }
    // w + ln(-w) = l with w < -1
    let mut w = l - (-l).ln();
    for _ in 0..50 {
        let step = (w + (-w).ln() - l) / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs() {
            break;
        }
    }
    Ok(w)
}

/// The Lambert-W value `W` whose square gives `mu0 = (n/2)² W²`, with the
/// logarithm of its argument `l` (argument `±e^l`). `n` must be non-zero.
fn lambert_factor(n: f64, l: f64, snr: SnrPoint) -> Result<f64> {
    if n > 0.0 {
        w0_exp(l)
    } else {
        if l > -1.0 {
            return Err(Error::AsymptoticDomain {
                arg: -l.exp(),
                snr: snr.linear,
            });
        }
        wm1_neg_exp(l)
    }
}

/// Asymptotic cutoff in the default (simplified) mode.
pub fn mu0_asymptotic(channel: &Channel, snr: SnrPoint) -> Result<f64> {
    mu0_asymptotic_mode(channel, snr, Mu0Mode::Simplified)
}

pub fn mu0_asymptotic_mode(channel: &Channel, snr: SnrPoint, mode: Mu0Mode) -> Result<f64> {
    let d = channel.derived();
    let lsnr = ln_inv_snr(snr)?;
    let n = d.n;
    let ln_tau = d.tau.ln();
    match (d.n_case(), mode) {
        (NCase::Zero, Mu0Mode::Simplified) => Ok(mu0_log_form(lsnr)),
        (NCase::Zero, Mu0Mode::RetainedTau) => {
            let l = lsnr - ln_tau;
            Ok(0.25 * l * l)
        }
        (_, Mu0Mode::Simplified) => {
            // argument ±SNR^{-1/n}
            let w = lambert_factor(n, lsnr / n, snr)?;
            Ok(0.25 * n * n * w * w)
        }
        (_, Mu0Mode::RetainedTau) => {
            // argument (2/n)(tau SNR)^{-1/n}; sign carried by n
            let l = (2.0 / n.abs()).ln() + (lsnr - ln_tau) / n;
            let w = lambert_factor(n, l, snr)?;
            Ok(0.25 * n * n * w * w)
        }
    }
}

fn mu0_log_form(ln_inv_snr: f64) -> f64 {
    0.25 * ln_inv_snr * ln_inv_snr
}

/// Logarithmic form `(b/4) SNR ln²(1/SNR)` in nats.
pub fn capacity_log(channel: &Channel, snr: SnrPoint) -> Result<f64> {
    let mu0 = mu0_log_form(ln_inv_snr(snr)?);
    Ok(mu0 * channel.derived().b_prod * snr.linear)
}

/// Both low-SNR capacity forms with the cutoffs behind them.
pub fn capacity_theorem1(channel: &Channel, snr: SnrPoint) -> Result<AsymptoticCapacity> {
    let d = channel.derived();
    let mu0_log = mu0_log_form(ln_inv_snr(snr)?);
    let mu0_lambert = mu0_asymptotic(channel, snr)?;
    Ok(AsymptoticCapacity {
        c_lambert: mu0_lambert * d.b_prod * snr.linear,
        c_log: mu0_log * d.b_prod * snr.linear,
        mu0_lambert,
        mu0_log,
        n_case: d.n_case(),
    })
}

/// `I1 = 2^{3/2-c} Γ(c - 1/2, 2 sqrt(mu0))` and
/// `I2 = 2^{7/2-c} Γ(c - 5/2, 2 sqrt(mu0))` with `c = c_t + c_r`.
pub fn i_helpers(channel: &Channel, mu0: f64) -> Result<(f64, f64)> {
    if !(mu0 > 0.0) {
        return Err(Error::domain("i_helpers", format!("mu0 = {mu0} must be > 0")));
    }
    let c = channel.derived().c_sum;
    let x = 2.0 * mu0.sqrt();
    let i1 = (1.5 - c).exp2() * upper_inc_gamma(c - 0.5, x)?;
    let i2 = (3.5 - c).exp2() * upper_inc_gamma(c - 2.5, x)?;
    Ok((i1, i2))
}

/// Large-cutoff form of the capacity,
/// `sqrt(pi)/(Γ(c_t)Γ(c_r)) mu0^{c/2 - 5/4} e^{-2 sqrt(mu0)}`.
pub fn capacity_leading_form(channel: &Channel, mu0: f64) -> f64 {
    leading_form(channel, mu0, -1.25)
}

/// Large-cutoff form of the scaled power usage `E[(1/mu0 - 1/mu)⁺]`,
/// `sqrt(pi)/(Γ(c_t)Γ(c_r)) mu0^{c/2 - 9/4} e^{-2 sqrt(mu0)}`.
pub fn constraint_leading_form(channel: &Channel, mu0: f64) -> f64 {
    leading_form(channel, mu0, -2.25)
}

fn leading_form(channel: &Channel, mu0: f64, offset: f64) -> f64 {
    let d = channel.derived();
    (0.5 * PI.ln() - d.ln_gamma_prod + (0.5 * d.c_sum + offset) * mu0.ln() - 2.0 * mu0.sqrt()).exp()
}

/// One grid point of the Lambert-vs-log comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixPoint {
    pub snr_db: f64,
    /// `|n W|` on the branch selected by the sign of `n`; `None` when the
    /// lower-branch argument falls below `-1/e`.
    pub n_w: Option<f64>,
    pub ln_inv_snr: f64,
    /// Signed so that a non-negative value means the expected ordering
    /// holds: `ln(1/SNR) - n W0` for `n > 0`, `|n W₋₁| - ln(1/SNR)` for
    /// `n < 0`, zero for `n = 0`.
    pub margin: Option<f64>,
    pub c_lambert: Option<f64>,
    pub c_log: f64,
}

impl AppendixPoint {
    pub fn holds(&self) -> Option<bool> {
        self.margin.map(|m| m >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub n: f64,
    pub n_case: NCase,
    pub points: Vec<AppendixPoint>,
}

impl AppendixReport {
    /// Points where the expected ordering fails.
    pub fn violations(&self) -> Vec<&AppendixPoint> {
        self.points.iter().filter(|p| p.holds() == Some(false)).collect()
    }

    /// Points outside the lower-branch domain.
    pub fn flagged(&self) -> Vec<&AppendixPoint> {
        self.points.iter().filter(|p| p.margin.is_none()).collect()
    }

    pub fn all_hold(&self) -> bool {
        self.violations().is_empty()
    }
}

/// Evaluates the Lambert-W inequalities behind the ordering of the two
/// closed forms at each SNR. Expected: `c_log >= c_lambert` for `n > 0`,
/// `c_log <= c_lambert` for `n < 0`.
pub fn check_appendix_inequalities(channel: &Channel, snr_grid: &[SnrPoint]) -> Result<AppendixReport> {
    let d = channel.derived();
    let n = d.n;
    let mut points = Vec::with_capacity(snr_grid.len());
    for &snr in snr_grid {
        let lsnr = ln_inv_snr(snr)?;
        let c_log = capacity_log(channel, snr)?;
        let (n_w, margin) = match d.n_case() {
            NCase::Zero => (Some(0.0), Some(0.0)),
            NCase::Positive => {
                let nw = n * w0_exp(lsnr / n)?;
                (Some(nw), Some(lsnr - nw))
            }
            NCase::Negative => match lambert_factor(n, lsnr / n, snr) {
                Ok(w) => {
                    let nw = (n * w).abs();
                    (Some(nw), Some(nw - lsnr))
                }
                Err(Error::AsymptoticDomain { .. }) => (None, None),
                Err(e) => return Err(e),
            },
        };
        let c_lambert = match mu0_asymptotic(channel, snr) {
            Ok(mu0) => Some(mu0 * d.b_prod * snr.linear),
            Err(Error::AsymptoticDomain { .. }) => None,
            Err(e) => return Err(e),
        };
        points.push(AppendixPoint {
            snr_db: snr.db,
            n_w,
            ln_inv_snr: lsnr,
            margin,
            c_lambert,
            c_log,
        });
    }
    Ok(AppendixReport {
        n,
        n_case: d.n_case(),
        points,
    })
}
