//! Executable acceptance checks, shared by `keyhole verify` and the
//! acceptance test target.

use crate::asymptotics::{capacity_log, capacity_theorem1, check_appendix_inequalities};
use crate::channel::{Channel, ChannelParams, SnrPoint};
use crate::cli::{compute_sweep, figure_params, render_csv, CliError, SweepSpec, Unit};
use crate::error::{Error, Result};
use crate::montecarlo::{estimate_many, McConfig};
use crate::onoff::{build_policy, onoff_gap_report, rate_onoff};
use crate::specfun::{bessel_k, lambert_w, upper_inc_gamma, Branch};
use crate::waterfilling::{audit_power, capacity_exact_csit, solve_threshold};
use std::fmt::Write as _;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub details: Vec<String>,
}

impl CheckResult {
    fn new(id: u8, name: &'static str) -> Self {
        CheckResult {
            id,
            name,
            passed: true,
            details: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, detail: impl Into<String>) {
        if !ok {
            self.passed = false;
            self.details.push(format!("FAILED: {}", detail.into()));
        }
    }

    fn note(&mut self, detail: impl Into<String>) {
        self.details.push(detail.into());
    }

    fn fail_with(mut self, err: &Error) -> Self {
        self.passed = false;
        self.details.push(format!("FAILED: error: {err}"));
        self
    }

    /// One summary line, `PASS`/`FAIL` followed by the criterion name.
    pub fn summary_line(&self) -> String {
        format!(
            "[{}] criterion {:>2}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum VerifyLevel {
    /// Quadrature-only checks.
    Fast,
    /// Adds the Monte Carlo cross-checks.
    Full,
}

/// Samples per Monte Carlo cross-check at the full level.
pub const FULL_MC_SAMPLES: u64 = 10_000_000;

/// The On-Off and Lambert-vs-log grid, -10 to -60 dB in 1 dB steps.
pub fn dense_grid() -> Vec<SnrPoint> {
    (10..=60).map(|k| snr(-(k as f64))).collect()
}

/// -20, -30, ..., -60 dB.
pub fn decade_grid() -> Vec<SnrPoint> {
    (2..=6).map(|k| snr(-10.0 * k as f64)).collect()
}

fn snr(db: f64) -> SnrPoint {
    SnrPoint::from_db(db).expect("finite dB value")
}

fn figure_channels() -> Vec<(u8, Channel)> {
    (1..=4)
        .map(|id| (id, Channel::new(figure_params(id).expect("valid id")).expect("valid params")))
        .collect()
}

/// The `n = 0` configuration: 2x2 with `m_t = 1`, `m_r = 5/4`.
pub fn n_zero_params() -> ChannelParams {
    ChannelParams::new(2, 2, 1.0, 1.25, 1.0, 1.0).expect("valid params")
}

pub fn criterion_1() -> CheckResult {
    let mut c = CheckResult::new(1, "n constants for the four figure configurations");
    let expect = [2.5, 0.5, -1.5, -3.5];
    for ((id, ch), e) in figure_channels().into_iter().zip(expect) {
        let n = ch.derived().n;
        c.require(n == e, format!("figure {id}: n = {n}, expected {e}"));
        c.note(format!("figure {id}: n = {n}"));
    }
    c
}

pub fn criterion_2() -> CheckResult {
    let mut c = CheckResult::new(2, "gain distribution normalization, moments and swap symmetry");
    let run = |c: &mut CheckResult| -> Result<()> {
        for (id, ch) in figure_channels() {
            let d = *ch.derived();
            let norm = ch.moment_quadrature(0)?;
            let m1 = ch.moment_quadrature(1)?;
            let m2 = ch.moment_quadrature(2)?;
            let p = ch.params();
            let e1 = f64::from(p.t) * p.omega_t * f64::from(p.r) * p.omega_r;
            let e2 = d.c_t * (d.c_t + 1.0) * d.b_t * d.b_t * d.c_r * (d.c_r + 1.0) * d.b_r * d.b_r;
            c.require((norm - 1.0).abs() <= 1e-8, format!("figure {id}: normalization {norm}"));
            c.require((m1 / e1 - 1.0).abs() <= 1e-6, format!("figure {id}: E[lambda] {m1} vs {e1}"));
            c.require((m2 / e2 - 1.0).abs() <= 1e-6, format!("figure {id}: E[lambda^2] {m2} vs {e2}"));
            c.note(format!(
                "figure {id}: |norm-1| = {:.1e}, E[lambda] rel {:.1e}, E[lambda^2] rel {:.1e}",
                (norm - 1.0).abs(),
                (m1 / e1 - 1.0).abs(),
                (m2 / e2 - 1.0).abs()
            ));
        }
        let mut params: Vec<ChannelParams> = (1..=4).map(|id| figure_params(id).expect("valid id")).collect();
        params.push(ChannelParams::new(2, 3, 0.5, 1.5, 1.3, 0.7)?);
        params.push(ChannelParams::new(1, 4, 2.0, 0.75, 0.4, 2.5)?);
        for p in params {
            let a = Channel::new(p)?;
            let b = Channel::new(p.swapped())?;
            let mut same = a.mean_gain() == b.mean_gain();
            for x in [1e-3, 0.1, 0.7, 1.0, 3.3, 12.0, 40.0] {
                same &= a.pdf_lambda(x)? == b.pdf_lambda(x)?;
                same &= a.tail_prob(x)? == b.tail_prob(x)?;
            }
            c.require(same, format!("swap symmetry broken for {p:?}"));
        }
        c.note("swap symmetry exact for 6 parameter sets");
        Ok(())
    };
    match run(&mut c) {
        Ok(()) => c,
        Err(e) => c.fail_with(&e),
    }
}

/// Monte Carlo cross-check of capacity, On-Off rate, activation probability
/// and power usage at -10 and -20 dB for the four figure configurations.
pub fn criterion_3(samples: u64, seed: u64, workers: usize) -> CheckResult {
    let mut c = CheckResult::new(3, "quadrature agrees with Monte Carlo within 3 standard errors");
    let run = |c: &mut CheckResult| -> Result<()> {
        let mut worst: f64 = 0.0;
        for (id, ch) in figure_channels() {
            for (k, db) in [-10.0, -20.0].into_iter().enumerate() {
                let s = snr(db);
                let sol = solve_threshold(&ch, s)?;
                let cap = capacity_exact_csit(&ch, &sol)?;
                let pol = build_policy(&ch, s, sol.lambda0)?;
                let rate = rate_onoff(&ch, &pol)?;
                let mc = McConfig::new(samples, seed.wrapping_add(10 * u64::from(id) + k as u64), workers)?;
                let (l0, p_on) = (sol.lambda0, pol.p_on);
                let [mc_cap, mc_rate, mc_tail, mc_pow] = estimate_many(ch.params(), &mc, |x| {
                    if x > l0 {
                        [(x / l0).ln(), (x * p_on).ln_1p(), 1.0, 1.0 / l0 - 1.0 / x]
                    } else {
                        [0.0; 4]
                    }
                })?;
                let zs = [
                    ("capacity", mc_cap.z_score(cap)),
                    ("on-off rate", mc_rate.z_score(rate)),
                    ("tail probability", mc_tail.z_score(pol.p_activation)),
                    ("power usage", mc_pow.z_score(s.linear)),
                ];
                let mut line = format!("figure {id}, {db} dB:");
                for (name, z) in zs {
                    c.require(z <= 3.0, format!("figure {id}, {db} dB: {name} z = {z:.2}"));
                    worst = worst.max(z);
                    let _ = write!(line, " {name} z = {z:.2};");
                }
                c.note(line);
            }
        }
        c.note(format!("largest |z| = {worst:.2} with {samples} samples per point"));
        Ok(())
    };
    match run(&mut c) {
        Ok(()) => c,
        Err(e) => c.fail_with(&e),
    }
}

pub fn criterion_4() -> CheckResult {
    let mut c = CheckResult::new(4, "waterfilling power audit and monotone cutoff, -10 to -60 dB");
    let run = |c: &mut CheckResult| -> Result<()> {
        for (id, ch) in figure_channels() {
            let mut worst: f64 = 0.0;
            let mut prev_lambda0 = 0.0;
            for s in dense_grid() {
                let sol = solve_threshold(&ch, s)?;
                let audit = audit_power(&ch, sol.lambda0)?;
                let rel = (audit / s.linear - 1.0).abs();
                worst = worst.max(rel);
                c.require(rel <= 1e-8, format!("figure {id}, {} dB: power mismatch {rel:.2e}", s.db));
                c.require(
                    sol.lambda0 > prev_lambda0,
                    format!("figure {id}, {} dB: lambda0 not increasing as SNR falls", s.db),
                );
                prev_lambda0 = sol.lambda0;
            }
            c.note(format!("figure {id}: worst relative power mismatch {worst:.2e}"));
        }
        Ok(())
    };
    match run(&mut c) {
        Ok(()) => c,
        Err(e) => c.fail_with(&e),
    }
}

pub fn criterion_5() -> CheckResult {
    let mut c = CheckResult::new(5, "Lambert-W capacity converges to the exact capacity");
    let run = |c: &mut CheckResult| -> Result<()> {
        for (id, ch) in figure_channels() {
            let mut gaps = Vec::new();
            for s in decade_grid() {
                let exact = capacity_exact_csit(&ch, &solve_threshold(&ch, s)?)?;
                let asy = capacity_theorem1(&ch, s)?;
                gaps.push((asy.c_lambert / exact - 1.0).abs());
            }
            let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
            let last = *gaps.last().expect("non-empty grid");
            c.require(decreasing, format!("figure {id}: gaps not strictly decreasing {gaps:.3?}"));
            c.require(last <= 0.35, format!("figure {id}: gap at -60 dB = {last:.3}"));
            c.note(format!("figure {id}: gaps -20..-60 dB {gaps:.3?}"));
        }
        let ch = Channel::new(n_zero_params())?;
        let mut identical = true;
        for s in dense_grid() {
            let asy = capacity_theorem1(&ch, s)?;
            identical &= asy.c_lambert == asy.c_log;
        }
        c.require(identical, "n = 0: Lambert and log forms differ");
        c.note("n = 0: Lambert and log forms identical on the dense grid");
        Ok(())
    };
    match run(&mut c) {
        Ok(()) => c,
        Err(e) => c.fail_with(&e),
    }
}

pub fn criterion_6() -> CheckResult {
    let mut c = CheckResult::new(6, "log-form scaling law");
    let run = |c: &mut CheckResult| -> Result<()> {
        let mut params: Vec<ChannelParams> = (1..=4).map(|id| figure_params(id).expect("valid id")).collect();
        params.push(ChannelParams::new(2, 3, 0.5, 1.5, 1.3, 0.7)?);
        params.push(n_zero_params());
        let mut worst: f64 = 0.0;
        for p in params {
            let ch = Channel::new(p)?;
            let k = p.omega_t * p.omega_r / (4.0 * p.m_t * p.m_r);
            for db in [-1.0, -10.0, -23.7, -40.0, -60.0, -90.0, -150.0] {
                let s = snr(db);
                let ratio = capacity_log(&ch, s)? / (s.linear * s.linear.ln().powi(2));
                let rel = (ratio / k - 1.0).abs();
                worst = worst.max(rel);
                c.require(rel <= 8.0 * f64::EPSILON, format!("{p:?} at {db} dB: rel {rel:.2e}"));
            }
        }
        c.note(format!("largest relative deviation {worst:.2e} (machine epsilon {:.2e})", f64::EPSILON));
        Ok(())
    };
    match run(&mut c) {
        Ok(()) => c,
        Err(e) => c.fail_with(&e),
    }
}

pub fn criterion_7() -> CheckResult {
    let mut c = CheckResult::new(7, "ordering of the log and Lambert-W forms, -10 to -60 dB");
    let run = |c: &mut CheckResult| -> Result<()> {
        for (id, ch) in figure_channels() {
            let rep = check_appendix_inequalities(&ch, &dense_grid())?;
            let positive = rep.n > 0.0;
            let mut ordered = 0;
            for p in &rep.points {
                let Some(cl) = p.c_lambert else { continue };
                let ok = if positive { p.c_log >= cl } else { p.c_log <= cl };
                c.require(
                    ok,
                    format!(
                        "figure {id} (n = {}), {} dB: c_log = {:.6e}, c_lambert = {:.6e}",
                        rep.n, p.snr_db, p.c_log, cl
                    ),
                );
                ordered += usize::from(ok);
            }
            for p in rep.violations() {
                c.require(
                    false,
                    format!(
                        "figure {id}, {} dB: W-level margin {:.4e} (|n W| = {:.4}, ln(1/SNR) = {:.4})",
                        p.snr_db,
                        p.margin.unwrap_or(f64::NAN),
                        p.n_w.unwrap_or(f64::NAN),
                        p.ln_inv_snr
                    ),
                );
            }
            let flagged: Vec<f64> = rep.flagged().iter().map(|p| p.snr_db).collect();
            c.note(format!(
                "figure {id} (n = {}): {ordered}/{} points ordered, outside lower-branch domain at {flagged:?} dB",
                rep.n,
                rep.points.len() - flagged.len()
            ));
        }
        Ok(())
    };
    match run(&mut c) {
        Ok(()) => c,
        Err(e) => c.fail_with(&e),
    }
}

pub fn criterion_8() -> CheckResult {
    let mut c = CheckResult::new(8, "On-Off sandwich and near-optimality, -10 to -60 dB");
    let run = |c: &mut CheckResult| -> Result<()> {
        for (id, ch) in figure_channels() {
            let pts = onoff_gap_report(&ch, &dense_grid())?;
            for p in &pts {
                c.require(
                    p.lower_bound <= p.rate && p.rate <= p.capacity,
                    format!("figure {id}, {} dB: sandwich {} <= {} <= {}", p.snr_db, p.lower_bound, p.rate, p.capacity),
                );
                if p.snr_db <= -30.0 {
                    c.require(p.ratio >= 0.9, format!("figure {id}, {} dB: R/C = {:.4}", p.snr_db, p.ratio));
                }
            }
            let mut drops = Vec::new();
            for w in pts.windows(2) {
                if w[1].ratio <= w[0].ratio {
                    drops.push(w[1].snr_db);
                }
            }
            c.require(
                drops.is_empty(),
                format!("figure {id}: R/C does not increase when SNR falls to {drops:?} dB"),
            );
            let (min_pt, _) = pts
                .iter()
                .map(|p| (p, p.ratio))
                .fold((&pts[0], f64::INFINITY), |acc, (p, r)| if r < acc.1 { (p, r) } else { acc });
            c.note(format!(
                "figure {id}: R/C at -10 dB {:.4}, minimum {:.4} at {} dB, at -60 dB {:.4}",
                pts[0].ratio,
                min_pt.ratio,
                min_pt.snr_db,
                pts.last().expect("non-empty").ratio
            ));
        }
        Ok(())
    };
    match run(&mut c) {
        Ok(()) => c,
        Err(e) => c.fail_with(&e),
    }
}

pub fn criterion_9() -> CheckResult {
    let mut c = CheckResult::new(9, "special-function round trips");
    let run = |c: &mut CheckResult| -> Result<()> {
        let mut worst_w: f64 = 0.0;
        let inv_e = (-1.0f64).exp();
        let mut check = |branch: Branch, y: f64| -> Result<()> {
            let w = lambert_w(branch, y)?;
            worst_w = worst_w.max((w * w.exp() - y).abs() / y.abs().max(1.0));
            Ok(())
        };
        for k in 1..=16 {
            let y = -inv_e + 10f64.powi(-k);
            check(Branch::Principal, y)?;
            check(Branch::LowerNeg1, y)?;
        }
        for k in -600..=600 {
            check(Branch::Principal, 10f64.powf(0.5 * k as f64))?;
        }
        let mut y = -0.36;
        while y < -1e-300 {
            check(Branch::Principal, y)?;
            check(Branch::LowerNeg1, y)?;
            y *= 0.8;
        }
        c.require(worst_w <= 1e-10, format!("Lambert-W residual {worst_w:.2e}"));

        let mut worst_k: f64 = 0.0;
        let mut z = 1e-3;
        while z <= 600.0 {
            let exact = (std::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp();
            worst_k = worst_k.max((bessel_k(0.5, z)? / exact - 1.0).abs());
            z *= 1.3;
        }
        c.require(worst_k <= 1e-12, format!("K_(1/2) relative error {worst_k:.2e}"));

        let mut worst_g: f64 = 0.0;
        for i in 0..=50 {
            let a = -2.45 + 0.25 * i as f64;
            for x in [0.1, 0.5, 0.99, 1.0, 2.5, 7.0, 20.0, 50.0] {
                let lhs = upper_inc_gamma(a + 1.0, x)?;
                let rhs = a * upper_inc_gamma(a, x)? + x.powf(a) * (-x).exp();
                worst_g = worst_g.max((lhs / rhs - 1.0).abs());
            }
        }
        c.require(worst_g <= 1e-10, format!("incomplete-Gamma recurrence error {worst_g:.2e}"));
        c.note(format!(
            "Lambert-W residual {worst_w:.1e}, K_(1/2) error {worst_k:.1e}, recurrence error {worst_g:.1e}"
        ));
        Ok(())
    };
    match run(&mut c) {
        Ok(()) => c,
        Err(e) => c.fail_with(&e),
    }
}

/// Sweep output must not depend on the worker count or on the run.
pub fn criterion_10() -> CheckResult {
    let mut c = CheckResult::new(10, "deterministic sweep output across worker counts");
    let run = |c: &mut CheckResult| -> std::result::Result<(), CliError> {
        let base = SweepSpec {
            params: figure_params(2)?,
            from_db: -10.0,
            to_db: -60.0,
            step_db: -5.0,
            unit: Unit::Nats,
            mc_samples: Some(20_000),
            seed: 42,
            workers: 1,
        };
        let reference = render_csv(&compute_sweep(&base)?);
        for workers in [1, 2, 5] {
            let spec = SweepSpec { workers, ..base.clone() };
            let out = render_csv(&compute_sweep(&spec)?);
            c.require(out == reference, format!("output differs with {workers} workers"));
        }
        c.note(format!("{} bytes identical across 1, 2 and 5 workers", reference.len()));
        Ok(())
    };
    match run(&mut c) {
        Ok(()) => c,
        Err(e) => {
            c.passed = false;
            c.details.push(format!("FAILED: error: {e}"));
            c
        }
    }
}

/// Runs every criterion for the level. The Monte Carlo criterion is
/// skipped at the fast level.
pub fn run_all(level: VerifyLevel, seed: u64, workers: usize) -> Vec<CheckResult> {
    let mut out = vec![criterion_1(), criterion_2()];
    if level == VerifyLevel::Full {
        out.push(criterion_3(FULL_MC_SAMPLES, seed, workers));
    }
    out.extend([
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ]);
    out
}

/// Text report: one summary line per check, followed by indented details.
pub fn render_report(results: &[CheckResult]) -> String {
    let mut s = String::new();
    for r in results {
        let _ = writeln!(s, "{}", r.summary_line());
        for d in &r.details {
            let _ = writeln!(s, "    {d}");
        }
    }
    let passed = results.iter().filter(|r| r.passed).count();
    let _ = writeln!(s, "{passed}/{} checks passed", results.len());
    s
}
