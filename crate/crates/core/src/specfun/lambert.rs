use crate::error::{Error, Result};

/// Real branch of the Lambert-W function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `W_0`, defined for `y >= -1/e`, returns values `>= -1`.
    Principal,
    /// `W_{-1}`, defined for `-1/e <= y < 0`, returns values `<= -1`.
    LowerNeg1,
}

// 1/e split into a double and its rounding residue
const INV_E_HI: f64 = 0.367_879_441_171_442_33;
const INV_E_LO: f64 = -1.242_875_367_766_748_4e-17;

const MAX_HALLEY: usize = 64;

/// Solves `x e^x = y` on the requested branch.
///
/// Seeds come from the branch-point series near `-1/e` and from the
/// logarithmic expansion for large `|ln|y||`; Halley's iteration then
/// refines to full precision. At `y = -1/e` both branches return `-1`.
pub fn lambert_w(branch: Branch, y: f64) -> Result<f64> {
    if y.is_nan() {
        return Err(Error::domain("lambert_w", "argument is NaN"));
    }
    // distance to the branch point, carried in extra precision
    let offset = (y + INV_E_HI) + INV_E_LO;
    // tolerate a few ulps of rounding below -1/e
    if offset < -4.0 * f64::EPSILON * INV_E_HI {
        return Err(Error::domain(
            "lambert_w",
            format!("argument {y:e} is below the branch point -1/e"),
        ));
    }
    if offset <= 0.0 {
        return Ok(-1.0);
    }
    match branch {
        Branch::Principal => {
            if y == 0.0 {
                return Ok(0.0);
            }
            if y.is_infinite() {
                return Ok(f64::INFINITY);
            }
        }
        Branch::LowerNeg1 => {
            if y >= 0.0 {
                return Err(Error::domain(
                    "lambert_w",
                    format!("lower branch requires -1/e <= y < 0, got {y:e}"),
                ));
            }
        }
    }

    // p = +-sqrt(2 (e y + 1)) parameterizes both branches near -1/e
    let p_mag = (2.0 * std::f64::consts::E * offset).sqrt();
    let seed = match branch {
        Branch::Principal => {
            if p_mag < 0.5 {
                branch_point_series(p_mag)
            } else if y < 3.0 {
                // ln(1 + y) brackets W_0 reasonably on (-1/e + d, 3)
                0.75 * (1.0 + y).ln()
            } else {
                log_seed(y.ln())
            }
        }
        Branch::LowerNeg1 => {
            if p_mag < 0.5 {
                branch_point_series(-p_mag)
            } else {
                log_seed_lower((-y).ln())
            }
        }
    };
    if p_mag < 1e-3 {
        // Halley loses accuracy next to the branch point; the series is
        // already at rounding level there.
        return Ok(seed);
    }
    halley(y, seed)
}

/// `W ~ -1 + p - p^2/3 + 11 p^3/72 - ...` about the branch point.
fn branch_point_series(p: f64) -> f64 {
    const C: [f64; 7] = [
        -1.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    C.iter().rev().fold(0.0, |acc, &c| acc * p + c)
}

/// `W_0(y) ~ L1 - L2 + L2/L1` with `L1 = ln y`, `L2 = ln L1`.
fn log_seed(l1: f64) -> f64 {
    let l2 = l1.ln();
    l1 - l2 + l2 / l1
}

/// `W_{-1}(y) ~ L1 - L2 + L2/L1` with `L1 = ln(-y)`, `L2 = ln(-L1)`.
fn log_seed_lower(l1: f64) -> f64 {
    let l2 = (-l1).ln();
    l1 - l2 + l2 / l1
}

fn halley(y: f64, mut w: f64) -> Result<f64> {
    let mut prev_step = f64::INFINITY;
    for _ in 0..MAX_HALLEY {
        let ew = w.exp();
        let f = w * ew - y;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(1.0) {
            return Ok(w);
        }
        // rounding noise in the residual stalls the iteration near -1/e
        if step.abs() >= prev_step && step.abs() <= 1e-10 * w.abs().max(1.0) {
            return Ok(w);
        }
        prev_step = step.abs();
    }
    Err(Error::IterationLimit {
        func: "lambert_w",
        iterations: MAX_HALLEY,
    })
}
