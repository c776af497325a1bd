//! Waterfilling over the effective gain: cutoff solver, exact capacity with
//! transmitter channel knowledge, and the isotropic-input reference rate.
//!
//! Internally everything runs in the scaled variable `u = sqrt(lambda / b)`
//! with `b = b_t b_r`, where the cutoff becomes `u0 = sqrt(mu0)`.

use crate::channel::{Channel, SnrPoint};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use serde::{Deserialize, Serialize};

/// Solver stops once the relative power mismatch is below this.
const RESIDUAL_TARGET: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200;
const MAX_EXPANSIONS: usize = 60;
/// Smallest cutoff the solver will explore.
const MU0_FLOOR: f64 = 1e-200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSolution {
    pub lambda0: f64,
    pub mu0: f64,
    /// `|E[P] - SNR| / SNR` at the returned cutoff.
    pub residual: f64,
    pub iterations: usize,
}

/// `E[(1/mu0 - 1/mu)⁺]`, the power spent per unit `b` at cutoff `mu0`.
pub fn power_scaled(channel: &Channel, mu0: f64) -> Result<f64> {
    if !(mu0 > 0.0) {
        return Err(Error::domain("power_scaled", format!("mu0 = {mu0} must be > 0")));
    }
    let u0 = mu0.sqrt();
    let inv = 1.0 / mu0;
    channel.expect_scaled(u0, |u| (u - u0) * (u + u0) * inv / (u * u))
}

/// `E[(1/lambda0 - 1/lambda)⁺]` for a cutoff in gain units.
pub fn power_constraint(channel: &Channel, lambda0: f64) -> Result<f64> {
    let b = channel.derived().b_prod;
    Ok(power_scaled(channel, lambda0 / b)? / b)
}

/// Independent audit of the power usage, integrating `f_lambda` directly in
/// the gain variable rather than in `u`.
pub fn audit_power(channel: &Channel, lambda0: f64) -> Result<f64> {
    if !(lambda0 > 0.0) {
        return Err(Error::domain("audit_power", format!("lambda0 = {lambda0} must be > 0")));
    }
    let inv0 = 1.0 / lambda0;
    integrate_gain_tail(channel, lambda0, |l| inv0 - 1.0 / l)
}

/// `int_{lambda0}^inf g(lambda) f_lambda(lambda) d lambda` in the gain
/// variable.
pub(crate) fn integrate_gain_tail<G: Fn(f64) -> f64>(channel: &Channel, lambda0: f64, g: G) -> Result<f64> {
    let b = channel.derived().b_prod;
    let u0 = (lambda0 / b).sqrt();
    // e^{-2u} has dropped by e^{-140} well before this point
    let lambda_hi = b * (u0 + 70.0 + channel.derived().c_sum).powi(2);
    let mut breaks = vec![lambda0];
    let mut w = lambda0.max(b) * 0.25;
    while lambda0 + w < lambda_hi {
        breaks.push(lambda0 + w);
        w *= 2.0;
    }
    breaks.push(lambda_hi);
    let f = |l: f64| g(l) * channel.pdf_lambda(l).unwrap_or(f64::NAN);
    let opts = QuadOptions {
        rel_tol: 1e-13,
        ..QuadOptions::default()
    };
    Ok(integrate_with_breaks(f, &breaks, opts)?.value)
}

/// Solves the average-power constraint for the waterfilling cutoff,
/// starting from the bracket `[mu0 ~ E[mu] / e, E[mu] e]`.
pub fn solve_threshold(channel: &Channel, snr: SnrPoint) -> Result<ThresholdSolution> {
    let mean_mu = channel.derived().c_t * channel.derived().c_r;
    solve_threshold_in(channel, snr, mean_mu / std::f64::consts::E, mean_mu * std::f64::consts::E)
}

/// As [`solve_threshold`] but starting from `[mu_lo, mu_hi]`. The bracket
/// is widened geometrically until it contains the root.
pub fn solve_threshold_in(
    channel: &Channel,
    snr: SnrPoint,
    mu_lo: f64,
    mu_hi: f64,
) -> Result<ThresholdSolution> {
    if !(snr.linear > 0.0) || !snr.linear.is_finite() {
        return Err(Error::domain("solve_threshold", "SNR must be positive and finite"));
    }
    if !(mu_lo > 0.0 && mu_hi > mu_lo) {
        return Err(Error::domain(
            "solve_threshold",
            format!("bracket [{mu_lo}, {mu_hi}] must satisfy 0 < lo < hi"),
        ));
    }
    let b = channel.derived().b_prod;
    let ln_target = (snr.linear * b).ln();
    // g(l) = ln E[P](e^l) - ln target, strictly decreasing in l = ln mu0
    let g = |l: f64| -> Result<f64> {
        let p = power_scaled(channel, l.exp())?;
        Ok(if p > 0.0 { p.ln() - ln_target } else { f64::NEG_INFINITY })
    };

    let (mut lo, mut hi) = (mu_lo.ln(), mu_hi.ln());
    let mut g_lo = g(lo)?;
    let mut g_hi = g(hi)?;
    let mut width = hi - lo;
    let mut expansions = 0;
    while g_lo < 0.0 || g_hi > 0.0 {
        if expansions >= MAX_EXPANSIONS {
            return Err(Error::BracketExpansion {
                lower: lo.exp(),
                upper: hi.exp(),
            });
        }
        width *= 2.0;
        if g_lo < 0.0 {
            hi = lo;
            g_hi = g_lo;
            lo = (lo - width).max(MU0_FLOOR.ln());
            g_lo = g(lo)?;
            if g_lo < 0.0 && lo <= MU0_FLOOR.ln() {
                return Err(Error::BracketExpansion {
                    lower: lo.exp(),
                    upper: hi.exp(),
                });
            }
        } else {
            lo = hi;
            g_lo = g_hi;
            hi += width;
            g_hi = g(hi)?;
        }
        expansions += 1;
    }

    // Illinois-modified regula falsi with a bisection safeguard
    let mut side = 0i8;
    for it in 1..=MAX_ITERATIONS {
        let x = if g_hi.is_finite() && g_lo.is_finite() && g_lo != g_hi {
            let s = hi - g_hi * (hi - lo) / (g_hi - g_lo);
            if s > lo && s < hi {
                s
            } else {
                0.5 * (lo + hi)
            }
        } else {
            0.5 * (lo + hi)
        };
        let gx = g(x)?;
        let residual = gx.exp_m1().abs();
        if residual <= RESIDUAL_TARGET || (hi - lo) <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            let mu0 = x.exp();
            return Ok(ThresholdSolution {
                lambda0: mu0 * b,
                mu0,
                residual,
                iterations: expansions + it,
            });
        }
        if gx > 0.0 {
            lo = x;
            g_lo = gx;
            if side == 1 {
                g_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = x;
            g_hi = gx;
            if side == -1 {
                g_lo *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::IterationLimit {
        func: "solve_threshold",
        iterations: MAX_ITERATIONS,
    })
}

/// Ergodic capacity in nats with waterfilling at the solved cutoff:
/// `E[ln(lambda / lambda0)⁺]`.
pub fn capacity_exact_csit(channel: &Channel, sol: &ThresholdSolution) -> Result<f64> {
    let u0 = sol.mu0.sqrt();
    let c = channel.expect_scaled(u0, |u| 2.0 * (u / u0).ln())?;
    Ok(c.max(0.0))
}

/// Reference rate without transmitter channel knowledge: equal power on all
/// `t` transmit antennas, `E[ln(1 + (SNR/t) lambda)]`.
pub fn capacity_nocsit(channel: &Channel, snr: SnrPoint) -> Result<f64> {
    if !(snr.linear > 0.0) {
        return Err(Error::domain("capacity_nocsit", "SNR must be positive"));
    }
    let a = snr.linear / f64::from(channel.params().t) * channel.derived().b_prod;
    Ok(channel.expect_scaled(0.0, |u| (a * u * u).ln_1p())?.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::montecarlo::{mc_capacity_waterfilling, McConfig};

    fn fig(m: f64) -> Channel {
        Channel::new(ChannelParams::symmetric_2x2(m).unwrap()).unwrap()
    }

    fn snr(db: f64) -> SnrPoint {
        SnrPoint::from_db(db).unwrap()
    }

    // E[ln(lambda/lambda0)⁺] integrated in the gain variable
    fn capacity_lambda_domain(ch: &Channel, lambda0: f64) -> f64 {
        let b = ch.derived().b_prod;
        let hi = b * ((lambda0 / b).sqrt() + 80.0).powi(2);
        let mut breaks = vec![lambda0];
        let mut w = 0.25 * b;
        while lambda0 + w < hi {
            breaks.push(lambda0 + w);
            w *= 2.0;
        }
        breaks.push(hi);
        let f = |l: f64| (l / lambda0).ln() * ch.pdf_lambda(l).unwrap();
        integrate_with_breaks(f, &breaks, QuadOptions::default()).unwrap().value
    }

    #[test]
    fn solved_threshold_meets_power_budget() {
        let ch = fig(1.0);
        let s = snr(-30.0);
        let sol = solve_threshold(&ch, s).unwrap();
        assert!(sol.residual <= 1e-8);
        let audit = audit_power(&ch, sol.lambda0).unwrap();
        assert!((audit / s.linear - 1.0).abs() <= 1e-8, "audit {audit} vs {}", s.linear);
        assert_eq!(sol.lambda0, sol.mu0 * ch.derived().b_prod);
    }

    #[test]
    fn threshold_decreases_with_snr() {
        for m in [0.5, 2.0] {
            let ch = fig(m);
            let mut prev = 0.0;
            for db in (-60..=10).rev().step_by(5) {
                let sol = solve_threshold(&ch, snr(db as f64)).unwrap();
                assert!(sol.residual <= 1e-8);
                if db < 10 {
                    assert!(sol.mu0 > prev, "m = {m}, {db} dB");
                }
                prev = sol.mu0;
            }
            let a = solve_threshold(&ch, SnrPoint::from_linear(1e-3).unwrap()).unwrap();
            let b = solve_threshold(&ch, SnrPoint::from_linear(2e-3).unwrap()).unwrap();
            assert!(b.lambda0 < a.lambda0);
        }
    }

    #[test]
    fn solution_independent_of_bracket() {
        let ch = fig(1.5);
        for db in [-10.0, -40.0] {
            let a = solve_threshold_in(&ch, snr(db), 1e-3, 1e-2).unwrap();
            let b = solve_threshold_in(&ch, snr(db), 1e3, 1e4).unwrap();
            assert!((a.lambda0 / b.lambda0 - 1.0).abs() <= 1e-10);
        }
        assert!(solve_threshold_in(&ch, snr(-10.0), 2.0, 1.0).is_err());
    }

    #[test]
    fn capacity_matches_gain_domain_quadrature() {
        for m in [0.5, 1.0, 2.0] {
            let ch = fig(m);
            for db in [-10.0, -40.0] {
                let sol = solve_threshold(&ch, snr(db)).unwrap();
                let c = capacity_exact_csit(&ch, &sol).unwrap();
                let oracle = capacity_lambda_domain(&ch, sol.lambda0);
                assert!((c - oracle).abs() <= 1e-10 + 1e-9 * oracle, "m = {m}, {db} dB");
            }
        }
    }

    #[test]
    fn capacity_matches_monte_carlo() {
        let ch = fig(1.0);
        let s = snr(-10.0);
        let sol = solve_threshold(&ch, s).unwrap();
        let c = capacity_exact_csit(&ch, &sol).unwrap();
        let mc = McConfig::new(1_000_000, 2024, 4).unwrap();
        let est = mc_capacity_waterfilling(ch.params(), s, sol.lambda0, &mc).unwrap();
        assert!(est.capacity.z_score(c) < 4.0, "{est:?} vs {c}");
        assert!(est.power.z_score(s.linear) < 4.0);
    }

    #[test]
    fn capacity_tracks_lambda0_snr_at_low_snr() {
        for m in [0.5, 1.0, 1.5, 2.0] {
            let ch = fig(m);
            let mut prev = f64::INFINITY;
            for db in [-20.0, -30.0, -40.0, -50.0, -60.0] {
                let s = snr(db);
                let sol = solve_threshold(&ch, s).unwrap();
                let c = capacity_exact_csit(&ch, &sol).unwrap();
                let gap = (c / (sol.lambda0 * s.linear) - 1.0).abs();
                assert!(gap < prev, "m = {m}, {db} dB: {gap}");
                prev = gap;
            }
            assert!(prev < 0.25);
        }
    }

    #[test]
    fn capacity_monotone_and_vanishing() {
        let ch = fig(1.0);
        let mut prev = f64::INFINITY;
        for db in (-80..=20).rev().step_by(10) {
            let s = snr(db as f64);
            let c = capacity_exact_csit(&ch, &solve_threshold(&ch, s).unwrap()).unwrap();
            assert!(c >= 0.0 && c < prev);
            prev = c;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn nocsit_bounds_and_limits() {
        for m in [0.5, 1.0, 1.5, 2.0] {
            let ch = fig(m);
            for db in [-10.0, -30.0, -50.0] {
                let s = snr(db);
                let exact = capacity_exact_csit(&ch, &solve_threshold(&ch, s).unwrap()).unwrap();
                assert!(capacity_nocsit(&ch, s).unwrap() <= exact);
            }
            let s = snr(-60.0);
            let first_order = ch.mean_gain() * s.linear / 2.0;
            assert!((capacity_nocsit(&ch, s).unwrap() / first_order - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn nocsit_single_transmit_antenna() {
        let ch = Channel::new(ChannelParams::new(1, 3, 0.5, 1.5, 1.0, 2.0).unwrap()).unwrap();
        let s = snr(0.0);
        let hi = 5000.0;
        let f = |l: f64| (s.linear * l).ln_1p() * ch.pdf_lambda(l).unwrap();
        let breaks = [0.0, 0.5, 2.0, 8.0, 32.0, 128.0, 512.0, hi];
        let oracle = integrate_with_breaks(f, &breaks, QuadOptions::default()).unwrap().value;
        let v = capacity_nocsit(&ch, s).unwrap();
        assert!((v / oracle - 1.0).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn swap_symmetry() {
        let p = ChannelParams::new(2, 3, 0.5, 1.5, 1.3, 0.7).unwrap();
        let a = Channel::new(p).unwrap();
        let b = Channel::new(p.swapped()).unwrap();
        for db in [-10.0, -40.0] {
            let s = snr(db);
            let ca = capacity_exact_csit(&a, &solve_threshold(&a, s).unwrap()).unwrap();
            let cb = capacity_exact_csit(&b, &solve_threshold(&b, s).unwrap()).unwrap();
            assert!((ca / cb - 1.0).abs() < 1e-12);
            // equal-power input divides by t, which the swap changes
            assert!(capacity_nocsit(&a, s).unwrap() > capacity_nocsit(&b, s).unwrap());
        }
    }
}
