//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature on finite
//! intervals. Endpoints are never evaluated, so integrable endpoint
//! singularities are handled by bisection.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// Kronrod abscissae on [0, 1]; odd indices are the 10-point Gauss nodes
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-300,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point Kronrod evaluation with the QUADPACK error heuristic.
fn kronrod21<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut res_g = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Segment {
        lo,
        hi,
        value,
        error,
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, seeding the adaptive
/// partition with the given (strictly increasing) breakpoints.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult> {
    assert!(breaks.len() >= 2, "need at least two breakpoints");
    let (a, b) = (breaks[0], breaks[breaks.len() - 1]);
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            intervals: 0,
        });
    }

    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod21(&f, w[0], w[1]));
        }
    }
    let mut done_value = 0.0;
    let mut done_error = 0.0;

    loop {
        let (value, error) = heap
            .iter()
            .fold((done_value, done_error), |(v, e), s| (v + s.value, e + s.error));
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= tol {
            return Ok(QuadResult {
                value,
                abs_error: error,
                intervals: heap.len(),
            });
        }
        let exhausted = heap.len() >= opts.max_intervals;
        let Some(worst) = heap.pop() else {
            return Err(Error::QuadratureNonConvergence {
                lower: a,
                upper: b,
                value,
                abs_error: error,
            });
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        // no room left to bisect: freeze the segment and move on
        let too_narrow = mid <= worst.lo || mid >= worst.hi;
        if exhausted || (too_narrow && heap.is_empty()) {
            return Err(Error::QuadratureNonConvergence {
                lower: a,
                upper: b,
                value,
                abs_error: error,
            });
        }
        if too_narrow {
            done_value += worst.value;
            done_error += worst.error;
            continue;
        }
        heap.push(kronrod21(&f, worst.lo, mid));
        heap.push(kronrod21(&f, mid, worst.hi));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_high_degree_polynomials() {
        // 21-point Kronrod integrates degree <= 31 exactly on one panel
        for deg in 0..=31 {
            let seg = kronrod21(&|x: f64| x.powi(deg), 0.0, 1.0);
            let exact = 1.0 / (deg as f64 + 1.0);
            assert!((seg.value - exact).abs() < 1e-14, "degree {deg}");
        }
        // embedded 10-point Gauss rule: exact to degree 19
        let gauss = |deg: i32| -> f64 {
            let mut s = 0.0;
            for j in 0..5 {
                let x = XGK[2 * j + 1];
                s += WG[j] * (x.powi(deg) + (-x).powi(deg));
            }
            s
        };
        for deg in (0..=18).step_by(2) {
            assert!((gauss(deg) - 2.0 / (deg as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn smooth_and_singular_integrands() {
        let r = integrate(|x: f64| x.exp(), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        // log endpoint singularity: int_0^1 ln x dx = -1
        let r = integrate(|x: f64| x.ln(), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-11, "{}", r.value);
        // inverse square root: int_0^1 x^-1/2 = 2
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn breakpoints_and_empty_range() {
        let r = integrate_with_breaks(|x: f64| (-x).exp(), &[0.0, 1.0, 5.0, 40.0], QuadOptions::default())
            .unwrap();
        assert!((r.value - (1.0 - (-40f64).exp())).abs() < 1e-14);
        let r = integrate(|x: f64| x, 2.0, 2.0, QuadOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn non_convergence_is_reported() {
        let opts = QuadOptions {
            max_intervals: 3,
            ..QuadOptions::default()
        };
        let err = integrate(|x: f64| (1.0 / x).sin() / x, 1e-6, 1.0, opts).unwrap_err();
        assert!(err.is_non_convergence());
    }
}
