//! Channel parameters and the law of the effective gain
//! `lambda = ||h_t||^2 ||h_r||^2`, a product of two independent Gamma
//! variables.
//!
//! Expectations over the gain are computed in the variable
//! `u = sqrt(lambda / (b_t b_r))`, in which the density becomes
//! `k(u) = 4 / (Gamma(c_t) Gamma(c_r)) u^(c_t+c_r-1) K_nu(2u)`: the square-root
//! cusp disappears, the Bessel argument is linear and the tail decays like
//! `e^{-2u}`.

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::specfun::{bessel_k_scaled, ln_gamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance on `|n|` below which the balanced (`n = 0`) case applies.
pub const N_ZERO_TOL: f64 = 1e-9;

/// Asymptotic tail values below this scaled threshold carry a warning.
pub const ASYMPTOTIC_TAIL_MIN_MU0: f64 = 10.0;

const LN_4: f64 = 1.386_294_361_119_890_6;

/// User-facing description of a keyhole channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Transmit antennas.
    pub t: u32,
    /// Receive antennas.
    pub r: u32,
    /// Nakagami shape on the transmitter-to-keyhole side.
    pub m_t: f64,
    /// Nakagami shape on the keyhole-to-receiver side.
    pub m_r: f64,
    /// Mean-square gain on the transmit side.
    pub omega_t: f64,
    /// Mean-square gain on the receive side.
    pub omega_r: f64,
}

impl ChannelParams {
    pub fn new(t: u32, r: u32, m_t: f64, m_r: f64, omega_t: f64, omega_r: f64) -> Result<Self> {
        let p = ChannelParams {
            t,
            r,
            m_t,
            m_r,
            omega_t,
            omega_r,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t < 1 || self.r < 1 {
            return Err(Error::InvalidParams(format!(
                "antenna counts must be >= 1 (t = {}, r = {})",
                self.t, self.r
            )));
        }
        for (name, m) in [("m_t", self.m_t), ("m_r", self.m_r)] {
            if !(m >= 0.5) || !m.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {m} must be >= 1/2")));
            }
        }
        for (name, w) in [("omega_t", self.omega_t), ("omega_r", self.omega_r)] {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {w} must be > 0")));
            }
        }
        Ok(())
    }

    /// Exchanges the transmit and receive sides.
    pub fn swapped(&self) -> Self {
        ChannelParams {
            t: self.r,
            r: self.t,
            m_t: self.m_r,
            m_r: self.m_t,
            omega_t: self.omega_r,
            omega_r: self.omega_t,
        }
    }

    /// 2x2 unit-gain channel with `m_t = m_r = m`.
    pub fn symmetric_2x2(m: f64) -> Result<Self> {
        ChannelParams::new(2, 2, m, m, 1.0, 1.0)
    }

    pub fn derive(&self) -> DerivedParams {
        let c_t = f64::from(self.t) * self.m_t;
        let c_r = f64::from(self.r) * self.m_r;
        let b_t = self.omega_t / self.m_t;
        let b_r = self.omega_r / self.m_r;
        let c_sum = c_t + c_r;
        let ln_gamma_prod = ln_gamma(c_t).expect("c_t > 0") + ln_gamma(c_r).expect("c_r > 0");
        let b_prod = b_t * b_r;
        DerivedParams {
            c_t,
            c_r,
            b_t,
            b_r,
            n: 4.5 - c_sum,
            tau: (ln_gamma_prod).exp() * b_prod / PI.sqrt(),
            c_sum,
            b_prod,
            nu: (c_r - c_t).abs(),
            ln_gamma_prod,
        }
    }
}

/// Sign class of `n = 9/2 - (c_t + c_r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NCase {
    Positive,
    Zero,
    Negative,
}

/// Quantities shared by every formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub c_t: f64,
    pub c_r: f64,
    pub b_t: f64,
    pub b_r: f64,
    pub n: f64,
    pub tau: f64,
    /// `c_t + c_r`
    pub c_sum: f64,
    /// `b_t b_r`
    pub b_prod: f64,
    /// Bessel order `|c_r - c_t|`
    pub nu: f64,
    /// `ln Gamma(c_t) + ln Gamma(c_r)`
    pub ln_gamma_prod: f64,
}

impl DerivedParams {
    pub fn n_case(&self) -> NCase {
        if self.n.abs() < N_ZERO_TOL {
            NCase::Zero
        } else if self.n > 0.0 {
            NCase::Positive
        } else {
            NCase::Negative
        }
    }
}

/// Average transmit SNR, held in linear and dB form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub linear: f64,
    pub db: f64,
}

impl SnrPoint {
    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(Error::domain("SnrPoint", format!("SNR of {db} dB is not finite")));
        }
        let linear = 10f64.powf(db / 10.0);
        if !(linear > 0.0) || !linear.is_finite() {
            return Err(Error::domain("SnrPoint", format!("SNR of {db} dB is not representable")));
        }
        Ok(SnrPoint { linear, db })
    }

    pub fn from_linear(linear: f64) -> Result<Self> {
        if !(linear > 0.0) || !linear.is_finite() {
            return Err(Error::domain("SnrPoint", format!("linear SNR {linear} must be > 0")));
        }
        Ok(SnrPoint {
            linear,
            db: 10.0 * linear.log10(),
        })
    }
}

/// How the gain density behaves as `lambda -> 0+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OriginBehavior {
    Zero,
    Finite(f64),
    /// Diverges, but integrably.
    Singular,
}

/// Asymptotic tail probability with its regime flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticTail {
    pub value: f64,
    /// Set when `mu0 < 10`, i.e. outside the large-threshold regime.
    pub outside_regime: bool,
}

/// A validated channel with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    params: ChannelParams,
    derived: DerivedParams,
}

impl Channel {
    pub fn new(params: ChannelParams) -> Result<Self> {
        params.validate()?;
        Ok(Channel {
            params,
            derived: params.derive(),
        })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn derived(&self) -> &DerivedParams {
        &self.derived
    }

    /// `E[lambda] = t omega_t r omega_r`.
    pub fn mean_gain(&self) -> f64 {
        let p = &self.params;
        (f64::from(p.t) * p.omega_t) * (f64::from(p.r) * p.omega_r)
    }

    /// `E[lambda^2]`, the product of the two Gamma second moments.
    pub fn second_moment_gain(&self) -> f64 {
        let d = &self.derived;
        (d.b_t * d.b_t * d.c_t * (d.c_t + 1.0)) * (d.b_r * d.b_r * d.c_r * (d.c_r + 1.0))
    }

    pub fn origin_behavior(&self) -> OriginBehavior {
        let d = &self.derived;
        let c_min = d.c_t.min(d.c_r);
        if c_min > 1.0 + 1e-12 {
            OriginBehavior::Zero
        } else if c_min < 1.0 - 1e-12 || d.nu == 0.0 {
            OriginBehavior::Singular
        } else {
            // mu^(c_min - 1) Gamma(nu) / (Gamma(c_t) Gamma(c_r)) with c_min = 1
            let ln_val = ln_gamma(d.nu).expect("nu > 0") - d.ln_gamma_prod;
            OriginBehavior::Finite(ln_val.exp())
        }
    }

    /// Density of the scaled gain `mu = lambda / (b_t b_r)`.
    ///
    /// At `mu = 0` this returns the limit, `+inf` when the density has an
    /// integrable singularity (see [`Channel::origin_behavior`]).
    pub fn pdf_mu(&self, mu: f64) -> Result<f64> {
        if !(mu >= 0.0) {
            return Err(Error::domain("pdf_mu", format!("mu = {mu} must be >= 0")));
        }
        if mu == 0.0 {
            return Ok(match self.origin_behavior() {
                OriginBehavior::Zero => 0.0,
                OriginBehavior::Finite(v) => v,
                OriginBehavior::Singular => f64::INFINITY,
            });
        }
        if mu.is_infinite() {
            return Ok(0.0);
        }
        let d = &self.derived;
        let z = 2.0 * mu.sqrt();
        let ln_k = bessel_k_scaled(d.nu, z)?.ln() - z;
        let ln_f = std::f64::consts::LN_2 - d.ln_gamma_prod + (0.5 * d.c_sum - 1.0) * mu.ln() + ln_k;
        Ok(ln_f.exp())
    }

    /// Density of the effective gain `lambda`.
    pub fn pdf_lambda(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::domain("pdf_lambda", format!("lambda = {lambda} must be >= 0")));
        }
        let b = self.derived.b_prod;
        Ok(self.pdf_mu(lambda / b)? / b)
    }

    /// Gain density in the `u` variable: `2u f_mu(u^2)`.
    pub(crate) fn kernel(&self, u: f64) -> f64 {
        if u <= 0.0 || !u.is_finite() {
            return 0.0;
        }
        let d = &self.derived;
        let z = 2.0 * u;
        let scaled = match bessel_k_scaled(d.nu, z) {
            Ok(v) => v,
            Err(_) => return f64::NAN,
        };
        (LN_4 - d.ln_gamma_prod + (d.c_sum - 1.0) * u.ln() + scaled.ln() - z).exp()
    }

    /// `int_{lower_u}^inf g(u) k(u) du`, i.e. `E[g(sqrt(mu)) 1{mu > lower_u^2}]`.
    pub fn expect_scaled<G: Fn(f64) -> f64>(&self, lower_u: f64, g: G) -> Result<f64> {
        let lo = lower_u.max(0.0);
        let h = |u: f64| g(u) * self.kernel(u);
        let hi = self.upper_cutoff(lo, &h);
        self.integrate_span(lo, hi, &h)
    }

    /// `int_{lo}^{hi} g(u) k(u) du` for a finite span.
    pub fn expect_scaled_between<G: Fn(f64) -> f64>(&self, lo: f64, hi: f64, g: G) -> Result<f64> {
        let h = |u: f64| g(u) * self.kernel(u);
        self.integrate_span(lo.max(0.0), hi, &h)
    }

    fn integrate_span<H: Fn(f64) -> f64>(&self, lo: f64, hi: f64, h: &H) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let mut breaks = vec![lo];
        let mut w = 0.25;
        while lo + w < hi {
            breaks.push(lo + w);
            w *= 2.0;
        }
        breaks.push(hi);
        let opts = QuadOptions {
            abs_tol: 1e-300,
            rel_tol: 1e-13,
            max_intervals: 4000,
        };
        Ok(integrate_with_breaks(h, &breaks, opts)?.value)
    }

    /// Point past which `|h|` has fallen below `1e-24` of its largest sampled
    /// value and is decaying; `k(u)` falls off at least like `e^{-2u}`.
    fn upper_cutoff<H: Fn(f64) -> f64>(&self, lo: f64, h: &H) -> f64 {
        let peak = (0.5 * (self.derived.c_sum - 1.5)).max(0.0);
        let step = 0.5;
        let mut u = lo;
        let mut max_seen = 0.0f64;
        for _ in 0..8000 {
            u += step;
            let v = h(u).abs();
            if v.is_finite() {
                max_seen = max_seen.max(v);
            }
            if u > peak && max_seen > 0.0 && v <= 1e-24 * max_seen {
                break;
            }
        }
        u
    }

    /// `Prob(lambda > lambda0)` by quadrature of the gain density.
    pub fn tail_prob(&self, lambda0: f64) -> Result<f64> {
        if !(lambda0 > 0.0) {
            return Err(Error::domain("tail_prob", format!("lambda0 = {lambda0} must be > 0")));
        }
        let u0 = (lambda0 / self.derived.b_prod).sqrt();
        Ok(self.expect_scaled(u0, |_| 1.0)?.clamp(0.0, 1.0))
    }

    /// `Prob(lambda <= lambda0)`, integrated from the origin.
    pub fn cdf(&self, lambda0: f64) -> Result<f64> {
        if !(lambda0 >= 0.0) {
            return Err(Error::domain("cdf", format!("lambda0 = {lambda0} must be >= 0")));
        }
        let u0 = (lambda0 / self.derived.b_prod).sqrt();
        Ok(self.expect_scaled_between(0.0, u0, |_| 1.0)?.clamp(0.0, 1.0))
    }

    /// Large-threshold form of the tail probability:
    /// `sqrt(pi) / (Gamma(c_t) Gamma(c_r)) e^{-2 sqrt(mu0)} mu0^{(c_t+c_r)/2 - 3/4}`.
    pub fn tail_prob_asymptotic(&self, lambda0: f64) -> Result<AsymptoticTail> {
        if !(lambda0 > 0.0) {
            return Err(Error::domain(
                "tail_prob_asymptotic",
                format!("lambda0 = {lambda0} must be > 0"),
            ));
        }
        let d = &self.derived;
        let mu0 = lambda0 / d.b_prod;
        let ln_v = 0.5 * PI.ln() - d.ln_gamma_prod - 2.0 * mu0.sqrt() + (0.5 * d.c_sum - 0.75) * mu0.ln();
        Ok(AsymptoticTail {
            value: ln_v.exp(),
            outside_regime: mu0 < ASYMPTOTIC_TAIL_MIN_MU0,
        })
    }

    /// `E[lambda^k]` by quadrature.
    pub fn moment_quadrature(&self, k: i32) -> Result<f64> {
        let m = self.expect_scaled(0.0, |u| u.powi(2 * k))?;
        Ok(self.derived.b_prod.powi(k) * m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_k;

    fn figure_channels() -> Vec<Channel> {
        [0.5, 1.0, 1.5, 2.0]
            .iter()
            .map(|&m| Channel::new(ChannelParams::symmetric_2x2(m).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn derived_n_for_figure_configs() {
        let n: Vec<f64> = figure_channels().iter().map(|c| c.derived().n).collect();
        assert_eq!(n, vec![2.5, 0.5, -1.5, -3.5]);
        let zero = ChannelParams::new(2, 2, 1.0, 1.25, 1.0, 1.0).unwrap().derive();
        assert_eq!(zero.n, 0.0);
        assert_eq!(zero.n_case(), NCase::Zero);
        assert_eq!(figure_channels()[3].derived().n_case(), NCase::Negative);
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ChannelParams::new(0, 2, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ChannelParams::new(2, 2, 0.4, 1.0, 1.0, 1.0).is_err());
        assert!(ChannelParams::new(2, 2, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(ChannelParams::new(2, 2, 1.0, f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn snr_point_consistency() {
        let s = SnrPoint::from_db(-30.0).unwrap();
        assert!((s.linear / 1e-3 - 1.0).abs() < 1e-12);
        let s2 = SnrPoint::from_linear(s.linear).unwrap();
        assert!((s2.db + 30.0).abs() < 1e-12 * 30.0);
        assert!(SnrPoint::from_linear(0.0).is_err());
    }

    #[test]
    fn rayleigh_single_antenna_density() {
        let ch = Channel::new(ChannelParams::new(1, 1, 1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        for &l in &[0.01, 0.3, 1.0, 4.0, 30.0] {
            let expect = 2.0 * bessel_k(0.0, 2.0 * f64::sqrt(l)).unwrap();
            assert!((ch.pdf_lambda(l).unwrap() / expect - 1.0).abs() < 1e-13);
        }
        // P(XY > 1) = 2 K_1(2) for independent unit exponentials
        let tail = ch.tail_prob(1.0).unwrap();
        assert!((tail - 2.0 * bessel_k(1.0, 2.0).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn normalization_and_moments() {
        let mut chans = figure_channels();
        chans.push(Channel::new(ChannelParams::new(1, 3, 0.5, 1.7, 2.0, 0.3).unwrap()).unwrap());
        chans.push(Channel::new(ChannelParams::new(1, 1, 0.5, 0.5, 1.0, 1.0).unwrap()).unwrap());
        for ch in chans {
            let total = ch.expect_scaled(0.0, |_| 1.0).unwrap();
            assert!((total - 1.0).abs() < 1e-10, "{:?}: {total}", ch.params());
            let m1 = ch.moment_quadrature(1).unwrap();
            assert!((m1 / ch.mean_gain() - 1.0).abs() < 1e-9);
            let m2 = ch.moment_quadrature(2).unwrap();
            assert!((m2 / ch.second_moment_gain() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn scaling_identity_between_densities() {
        let ch = Channel::new(ChannelParams::new(3, 2, 0.8, 1.6, 0.7, 2.5).unwrap()).unwrap();
        let b = ch.derived().b_prod;
        for i in 0..20 {
            let mu = 0.05 + 1.37 * i as f64;
            let lhs = ch.pdf_mu(mu).unwrap();
            let rhs = b * ch.pdf_lambda(mu * b).unwrap();
            assert!((lhs / rhs - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn origin_behaviour() {
        let fig1 = &figure_channels()[0]; // c_t = c_r = 1, K_0 log singularity
        assert_eq!(fig1.origin_behavior(), OriginBehavior::Singular);
        assert!(fig1.pdf_lambda(0.0).unwrap().is_infinite());
        let fig3 = &figure_channels()[2];
        assert_eq!(fig3.pdf_lambda(0.0).unwrap(), 0.0);
        // c_t = 1, c_r = 3: finite limit Gamma(2)/Gamma(3) = 1/2 in mu units
        let ch = Channel::new(ChannelParams::new(1, 3, 1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        match ch.origin_behavior() {
            OriginBehavior::Finite(v) => assert!((v - 0.5).abs() < 1e-14),
            other => panic!("{other:?}"),
        }
        let near = ch.pdf_mu(1e-12).unwrap();
        assert!((near - 0.5).abs() < 1e-5);
        assert!(ch.pdf_lambda(-1.0).is_err());
    }

    #[test]
    fn tail_probability_limits() {
        for ch in figure_channels() {
            let p = ch.tail_prob(1e-12).unwrap();
            assert!((p - 1.0).abs() < 1e-6, "{p}");
            let mid = ch.mean_gain();
            let total = ch.tail_prob(mid).unwrap() + ch.cdf(mid).unwrap();
            assert!((total - 1.0).abs() < 1e-11);
        }
        assert!(figure_channels()[0].tail_prob(0.0).is_err());
    }

    #[test]
    fn asymptotic_tail_properties() {
        let ch = Channel::new(ChannelParams::new(1, 1, 1.0, 1.0, 1.0, 1.0).unwrap()).unwrap();
        let b = ch.derived().b_prod;
        // ratio -> 1 as the threshold grows
        for &(mu0, tol) in &[(50.0, 0.10), (100.0, 0.05), (200.0, 0.03)] {
            let exact = ch.tail_prob(mu0 * b).unwrap();
            let asym = ch.tail_prob_asymptotic(mu0 * b).unwrap();
            assert!(!asym.outside_regime);
            assert!((exact / asym.value - 1.0).abs() < tol, "mu0 = {mu0}: {}", exact / asym.value);
        }
        assert!(ch.tail_prob_asymptotic(5.0 * b).unwrap().outside_regime);
        // monotone decreasing
        let mut prev = f64::INFINITY;
        for i in 1..200 {
            let v = ch.tail_prob_asymptotic(i as f64 * 0.5).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn swap_symmetry_is_exact() {
        let p = ChannelParams::new(1, 3, 0.6, 1.3, 2.0, 0.4).unwrap();
        let a = Channel::new(p).unwrap();
        let b = Channel::new(p.swapped()).unwrap();
        for &l in &[0.0, 0.2, 1.0, 9.0] {
            assert_eq!(a.pdf_lambda(l).unwrap(), b.pdf_lambda(l).unwrap());
        }
        assert_eq!(a.tail_prob(2.0).unwrap(), b.tail_prob(2.0).unwrap());
        assert_eq!(
            a.tail_prob_asymptotic(30.0).unwrap(),
            b.tail_prob_asymptotic(30.0).unwrap()
        );
        assert_eq!(a.mean_gain(), b.mean_gain());
    }
}
