use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

// ln(sqrt(2 pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// zeta(k) - 1 for k = 2..=20
const ZETA_M1: [f64; 19] = [
    0.644_934_066_848_226_4,
    0.202_056_903_159_594_3,
    0.082_323_233_711_138_19,
    0.036_927_755_143_369_93,
    0.017_343_061_984_449_14,
    0.008_349_277_381_922_827,
    0.004_077_356_197_944_339,
    0.002_008_392_826_082_214,
    0.000_994_575_127_818_085_3,
    0.000_494_188_604_119_464_6,
    0.000_246_086_553_308_048_3,
    0.000_122_713_347_578_489_1,
    6.124_813_505_870_483e-5,
    3.058_823_630_702_049e-5,
    1.528_225_940_865_187e-5,
    7.637_197_637_899_762e-6,
    3.817_293_264_999_84e-6,
    1.908_212_716_553_939e-6,
    9.539_620_338_727_961e-7,
];

/// Lanczos partial sum and the shifted base `t = z + g + 1/2` for `z >= 1/2`.
fn lanczos_parts(z: f64) -> (f64, f64) {
    let z = z - 1.0;
    let mut sum = LANCZOS_COEF[0];
    for (i, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        sum += c / (z + i as f64);
    }
    (sum, z + LANCZOS_G + 0.5)
}

/// The Gamma function for positive real arguments.
pub fn gamma(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("gamma", format!("argument {a} must be positive")));
    }
    Ok(gamma_unchecked(a))
}

pub(crate) fn gamma_unchecked(a: f64) -> f64 {
    if a < 0.5 {
        // reflection keeps the Lanczos sum in its accurate range
        return PI / ((PI * a).sin() * gamma_unchecked(1.0 - a));
    }
    if a > 171.7 {
        return f64::INFINITY;
    }
    if a == a.floor() && a <= 23.0 {
        // factorials are exact in f64 up to 22!
        return (2..a as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    let (sum, t) = lanczos_parts(a);
    // split the power so t^(a - 1/2) does not overflow before e^{-t} is applied
    let half = t.powf(0.5 * (a - 0.5));
    (2.0 * PI).sqrt() * sum * half * (-t).exp() * half
}

/// Natural logarithm of the Gamma function for positive real arguments.
pub fn ln_gamma(a: f64) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("ln_gamma", format!("argument {a} must be positive")));
    }
    Ok(ln_gamma_unchecked(a))
}

pub(crate) fn ln_gamma_unchecked(a: f64) -> f64 {
    if a < 0.5 {
        return (PI / (PI * a).sin()).ln() - ln_gamma_unchecked(1.0 - a);
    }
    let (sum, t) = lanczos_parts(a);
    LN_SQRT_2PI + (a - 0.5) * t.ln() - t + sum.ln()
}

/// `Gamma(1 + a) - 1` accurate for small `|a|` (used for `|a| <= 1/4`).
///
/// Uses the Taylor series of `ln Gamma(1 + a)` in terms of `zeta(k) - 1`,
/// with the `sum (-a)^k / k` part folded into `a - ln(1 + a)`.
pub(crate) fn gamma1pm1_small(a: f64) -> f64 {
    debug_assert!(a.abs() <= 0.25 + 1e-12);
    let mut series = 0.0;
    let mut pow = a; // a^(k-1), bumped before use
    for (i, &z) in ZETA_M1.iter().enumerate() {
        let k = (i + 2) as f64;
        pow *= a;
        let term = z * pow / k;
        series += if (i + 2) % 2 == 0 { term } else { -term };
    }
    let ln_g = -EULER_GAMMA * a + (a - a.ln_1p()) + series;
    ln_g.exp_m1()
}
