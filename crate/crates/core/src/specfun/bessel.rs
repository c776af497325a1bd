//! Modified Bessel function of the second kind `K_nu(z)` for real order.
//!
//! The order is split as `nu = n + mu` with `|mu| <= 1/2`. `K_mu` and
//! `K_{mu+1}` come from Temme's series for `z < 2` or Steed's continued
//! fraction (CF2) for `z >= 2`, both exponentially scaled; integer steps
//! follow by forward recurrence, which is stable for `K`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const MAX_ITER: usize = 15_000;

// Chebyshev coefficients on [-1, 1] (in x = 4|mu| - 1) for Temme's
// Gamma_1(mu) = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
const GAMMA1_CHEB: [f64; 14] = [
    -1.145_164_083_662_683_1,
    0.006_360_853_113_470_842,
    0.001_862_451_930_072_068_5,
    0.000_152_833_085_873_453_5,
    0.000_017_017_464_011_802_04,
    -6.459_750_292_334_725e-7,
    -5.181_984_843_251_938e-8,
    4.518_909_289_485_818e-10,
    3.243_322_737_102_087e-11,
    6.830_943_402_494_752e-13,
    2.835_350_275_517_21e-14,
    -7.988_390_576_932_359e-16,
    -3.372_667_730_077_195e-17,
    -3.658_633_480_921_052e-20,
];

// ... and Gamma_2(mu) = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
const GAMMA2_CHEB: [f64; 15] = [
    1.882_645_524_949_671_8,
    -0.077_490_658_396_167_52,
    -0.018_256_714_847_324_93,
    0.000_633_803_020_907_489_6,
    0.000_076_229_054_350_872_9,
    -9.550_164_756_172_044e-7,
    -8.892_726_810_788_635e-8,
    -1.952_133_477_231_961_4e-9,
    -9.400_305_273_588_516e-11,
    4.687_513_384_953_239e-12,
    2.265_853_574_692_576e-13,
    -1.172_550_969_848_801_5e-15,
    -7.044_133_820_024_522e-17,
    -2.437_787_831_010_769_4e-18,
    -7.522_524_321_825_39e-20,
];

fn chebyshev(coef: &[f64], x: f64) -> f64 {
    let x2 = 2.0 * x;
    let (mut d, mut dd) = (0.0, 0.0);
    for &c in coef.iter().skip(1).rev() {
        let tmp = d;
        d = x2 * d - dd + c;
        dd = tmp;
    }
    x * d - dd + 0.5 * coef[0]
}

/// Temme's auxiliary gammas: `(Gamma(1+mu), Gamma(1-mu), Gamma_1, Gamma_2)`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let x = 4.0 * mu.abs() - 1.0;
    let g1 = chebyshev(&GAMMA1_CHEB, x);
    let g2 = chebyshev(&GAMMA2_CHEB, x);
    (1.0 / (g2 - mu * g1), 1.0 / (g2 + mu * g1), g1, g2)
}

/// Scaled `(e^z K_mu(z), e^z K_{mu+1}(z))` by Temme's series, `|mu| <= 1/2`, `z < 2`.
fn scaled_temme(mu: f64, z: f64) -> Result<(f64, f64)> {
    let half_z = 0.5 * z;
    let ln_half_z = half_z.ln();
    let half_z_mu = (mu * ln_half_z).exp();
    let pi_mu = PI * mu;
    let sigma = -mu * ln_half_z;
    let sinrat = if pi_mu.abs() < f64::EPSILON {
        1.0
    } else {
        pi_mu / pi_mu.sin()
    };
    let sinhrat = if sigma.abs() < f64::EPSILON {
        1.0
    } else {
        sigma.sinh() / sigma
    };
    let (g_1pmu, g_1mmu, g1, g2) = temme_gammas(mu);

    let mut fk = sinrat * (sigma.cosh() * g1 - sinhrat * ln_half_z * g2);
    let mut pk = 0.5 / half_z_mu * g_1pmu;
    let mut qk = 0.5 * half_z_mu * g_1mmu;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = pk;
    for k in 1..=MAX_ITER {
        let k = k as f64;
        fk = (k * fk + pk + qk) / (k * k - mu * mu);
        ck *= half_z * half_z / k;
        pk /= k - mu;
        qk /= k + mu;
        let hk = -k * fk + pk;
        let del0 = ck * fk;
        sum0 += del0;
        sum1 += ck * hk;
        if del0.abs() < 0.5 * sum0.abs() * f64::EPSILON {
            let ez = z.exp();
            return Ok((sum0 * ez, sum1 * 2.0 / z * ez));
        }
    }
    Err(Error::IterationLimit {
        func: "bessel_k (Temme series)",
        iterations: MAX_ITER,
    })
}

/// Scaled `(e^z K_mu(z), e^z K_{mu+1}(z))` by Steed's CF2, `|mu| <= 1/2`, `z >= 2`.
fn scaled_steed_cf2(mu: f64, z: f64) -> Result<(f64, f64)> {
    let mut bi = 2.0 * (1.0 + z);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;
    let mut qi = 0.0;
    let mut qip1 = 1.0;
    let mut ai = -(0.25 - mu * mu);
    let a1 = ai;
    let mut ci = -ai;
    let mut bqi = -ai;
    let mut s = 1.0 + bqi * delhi;

    let mut converged = false;
    for i in 2..=MAX_ITER {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        bqi += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi *= bi * di - 1.0;
        hi += delhi;
        let dels = bqi * delhi;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::IterationLimit {
            func: "bessel_k (Steed CF2)",
            iterations: MAX_ITER,
        });
    }
    hi *= -a1;
    let k_mu = (PI / (2.0 * z)).sqrt() / s;
    let k_mu1 = k_mu * (mu + z + 0.5 - hi) / z;
    Ok((k_mu, k_mu1))
}

/// Exponentially scaled `e^z K_nu(z)`. The order enters only through `|nu|`.
pub fn bessel_k_scaled(nu: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() || !nu.is_finite() {
        return Err(Error::domain(
            "bessel_k",
            format!("requires finite order and z > 0, got nu = {nu}, z = {z}"),
        ));
    }
    let nu = nu.abs();
    let steps = (nu + 0.5).floor();
    let mu = nu - steps;
    let (mut k_prev, mut k_cur) = if z < 2.0 {
        scaled_temme(mu, z)?
    } else {
        scaled_steed_cf2(mu, z)?
    };
    for n in 0..steps as usize {
        let next = 2.0 * (mu + n as f64 + 1.0) / z * k_cur + k_prev;
        k_prev = k_cur;
        k_cur = next;
    }
    Ok(k_prev)
}

/// `ln K_nu(z)`, finite wherever `K_nu(z)` would under- or overflow as long
/// as the scaled value itself is representable.
pub fn ln_bessel_k(nu: f64, z: f64) -> Result<f64> {
    Ok(bessel_k_scaled(nu, z)?.ln() - z)
}

/// Modified Bessel function of the second kind, `K_nu(z)` with `K_{-nu} = K_nu`.
///
/// Very small `z` with large order overflows to `+inf` rather than failing.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    let scaled = bessel_k_scaled(nu, z)?;
    Ok(scaled * (-z).exp())
}
