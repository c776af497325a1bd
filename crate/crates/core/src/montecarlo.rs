//! Seeded Monte Carlo estimates built directly from Gamma draws of the two
//! link gains. Nothing here touches the closed-form gain density, so the
//! estimates serve as an independent check on the quadrature results.
//!
//! The sample index space is cut into fixed blocks of [`BLOCK_SIZE`]
//! draws. Block `i` owns its own ChaCha stream `(seed, i)`, and per-block
//! accumulators are merged in block order, so results depend on
//! `(seed, samples)` only and never on the worker count.

use crate::channel::{Channel, ChannelParams, SnrPoint};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Draws per independent RNG stream.
pub const BLOCK_SIZE: u64 = 1 << 16;

/// Smallest sample count accepted by [`McConfig`].
pub const MIN_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64, workers: usize) -> Result<Self> {
        let cfg = McConfig {
            samples,
            seed,
            workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidMcConfig(format!(
                "samples = {} is below the minimum of {MIN_SAMPLES}",
                self.samples
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidMcConfig("workers must be at least 1".into()));
        }
        Ok(())
    }

    fn block_count(&self) -> u64 {
        self.samples.div_ceil(BLOCK_SIZE)
    }

    fn block_len(&self, block: u64) -> u64 {
        (self.samples - block * BLOCK_SIZE).min(BLOCK_SIZE)
    }
}

/// Sample mean with its standard error `sd / sqrt(samples)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    /// Distance from `value` in units of the standard error.
    pub fn z_score(&self, value: f64) -> f64 {
        let d = self.mean - value;
        if self.std_error > 0.0 {
            d.abs() / self.std_error
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Waterfilling capacity estimate together with the empirical power usage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McWaterfilling {
    pub capacity: McEstimate,
    pub power: McEstimate,
}

// Welford running moments, merged with Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let w = other.n as f64 / n as f64;
        Moments {
            n,
            mean: self.mean + d * w,
            m2: self.m2 + other.m2 + d * d * self.n as f64 * w,
        }
    }

    fn estimate(&self) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_error: (var / self.n as f64).sqrt(),
            samples: self.n,
        }
    }
}

/// Draws `λ = G_t · G_r` from the two Gamma-distributed link gains.
#[derive(Debug, Clone, Copy)]
pub struct LambdaSampler {
    g_t: Gamma<f64>,
    g_r: Gamma<f64>,
}

impl LambdaSampler {
    pub fn new(params: &ChannelParams) -> Result<Self> {
        params.validate()?;
        let d = params.derive();
        let gamma = |shape: f64, scale: f64| {
            Gamma::new(shape, scale).map_err(|e| Error::InvalidParams(format!("gamma sampler: {e}")))
        };
        Ok(LambdaSampler {
            g_t: gamma(d.c_t, d.b_t)?,
            g_r: gamma(d.c_r, d.b_r)?,
        })
    }

    /// One draw of the transmit-side gain `G_t`.
    pub fn sample_g_t<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.g_t.sample(rng)
    }

    /// One draw of the receive-side gain `G_r`.
    pub fn sample_g_r<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.g_r.sample(rng)
    }
}

impl Distribution<f64> for LambdaSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.g_t.sample(rng);
        let b = self.g_r.sample(rng);
        a * b
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn run_blocks<T, F>(mc: &McConfig, block_fn: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    mc.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(mc.workers)
        .build()
        .map_err(|e| Error::InvalidMcConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        (0..mc.block_count())
            .into_par_iter()
            .map(|b| block_fn(b, mc.block_len(b)))
            .collect()
    }))
}

/// Materializes all gain draws in sample order.
pub fn sample_lambda(params: &ChannelParams, mc: &McConfig) -> Result<Vec<f64>> {
    let sampler = LambdaSampler::new(params)?;
    let blocks = run_blocks(mc, |b, len| {
        let mut rng = block_rng(mc.seed, b);
        (0..len).map(|_| sampler.sample(&mut rng)).collect::<Vec<f64>>()
    })?;
    Ok(blocks.concat())
}

/// Estimates `E[g_k(λ)]` for each of the `K` statistics from one shared
/// set of draws.
pub fn estimate_many<const K: usize, G>(
    params: &ChannelParams,
    mc: &McConfig,
    g: G,
) -> Result<[McEstimate; K]>
where
    G: Fn(f64) -> [f64; K] + Sync,
{
    let sampler = LambdaSampler::new(params)?;
    let blocks = run_blocks(mc, |b, len| {
        let mut rng = block_rng(mc.seed, b);
        let mut acc = [Moments::default(); K];
        for _ in 0..len {
            let v = g(sampler.sample(&mut rng));
            for (a, x) in acc.iter_mut().zip(v) {
                a.push(x);
            }
        }
        acc
    })?;
    let total = blocks.into_iter().fold([Moments::default(); K], |mut tot, blk| {
        for (t, b) in tot.iter_mut().zip(blk) {
            *t = t.merge(b);
        }
        tot
    });
    Ok(total.map(|m| m.estimate()))
}

/// Estimates `E[g(λ)]`.
pub fn mc_expectation<G>(params: &ChannelParams, mc: &McConfig, g: G) -> Result<McEstimate>
where
    G: Fn(f64) -> f64 + Sync,
{
    let [e] = estimate_many(params, mc, |x| [g(x)])?;
    Ok(e)
}

/// Empirical `P(λ > lambda0)`.
pub fn mc_tail_prob(params: &ChannelParams, lambda0: f64, mc: &McConfig) -> Result<McEstimate> {
    mc_expectation(params, mc, |x| if x > lambda0 { 1.0 } else { 0.0 })
}

/// Waterfilling capacity `E[ln(λ/λ0)⁺]` in nats and power usage
/// `E[(1/λ0 − 1/λ)⁺]` for a given cutoff.
pub fn mc_capacity_waterfilling(
    params: &ChannelParams,
    _snr: SnrPoint,
    lambda0: f64,
    mc: &McConfig,
) -> Result<McWaterfilling> {
    if !(lambda0 > 0.0) {
        return Err(Error::domain("mc_capacity_waterfilling", "lambda0 must be positive"));
    }
    let inv0 = 1.0 / lambda0;
    let [capacity, power] = estimate_many(params, mc, |x| {
        if x > lambda0 {
            [(x / lambda0).ln(), inv0 - 1.0 / x]
        } else {
            [0.0, 0.0]
        }
    })?;
    Ok(McWaterfilling { capacity, power })
}

/// On-Off rate `E[ln(1 + λ P0) 1{λ > λ0}]` with `P0 = SNR / P(λ > λ0)`.
///
/// The activation probability comes from the quadrature tail so that the
/// policy matches the one evaluated analytically; only the rate itself is
/// sampled.
pub fn mc_rate_onoff(
    params: &ChannelParams,
    snr: SnrPoint,
    lambda0: f64,
    mc: &McConfig,
) -> Result<McEstimate> {
    let channel = Channel::new(*params)?;
    let p = channel.tail_prob(lambda0)?;
    if !(p > 0.0) {
        return Err(Error::DegeneratePolicy {
            lambda0,
            snr: snr.linear,
            p_activation: p,
        });
    }
    let p0 = snr.linear / p;
    mc_expectation(params, mc, |x| if x > lambda0 { (x * p0).ln_1p() } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_k;

    fn cfg(samples: u64, seed: u64) -> McConfig {
        McConfig::new(samples, seed, 4).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(9_999, 1, 1).is_err());
        assert!(McConfig::new(10_000, 1, 0).is_err());
        assert!(McConfig::new(10_000, 1, 1).is_ok());
        let p = ChannelParams::symmetric_2x2(1.0).unwrap();
        let bad = McConfig {
            samples: 10,
            seed: 0,
            workers: 1,
        };
        assert!(matches!(
            mc_expectation(&p, &bad, |x| x),
            Err(Error::InvalidMcConfig(_))
        ));
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.3).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert_eq!(merged.n, whole.n);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 / whole.m2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sample_mean_matches_gamma_product() {
        let p = ChannelParams::new(2, 3, 0.5, 1.5, 1.3, 0.7).unwrap();
        let est = mc_expectation(&p, &cfg(1_000_000, 11), |x| x).unwrap();
        let expect = (2.0 * 1.3) * (3.0 * 0.7);
        assert!(est.z_score(expect) < 4.0, "{est:?} vs {expect}");
    }

    #[test]
    fn gamma_sampler_moments_for_figure_configs() {
        for m in [0.5, 1.0, 1.5, 2.0] {
            let p = ChannelParams::symmetric_2x2(m).unwrap();
            let d = p.derive();
            let sampler = LambdaSampler::new(&p).unwrap();
            let mut rng = block_rng(5, 0);
            let mut mom = Moments::default();
            let n = 200_000;
            for _ in 0..n {
                mom.push(sampler.sample_g_t(&mut rng));
            }
            let mean = d.c_t * d.b_t;
            let var = d.c_t * d.b_t * d.b_t;
            let est = mom.estimate();
            assert!(est.z_score(mean) < 4.0, "m = {m}: mean {est:?}");
            // variance of the sample variance uses the fourth central moment
            // of Gamma(c, b): 3 c (c + 2) b^4
            let mu4 = 3.0 * d.c_t * (d.c_t + 2.0) * d.b_t.powi(4);
            let s2 = mom.m2 / (n - 1) as f64;
            let se_var = ((mu4 - var * var) / n as f64).sqrt();
            assert!((s2 - var).abs() < 4.0 * se_var, "m = {m}: var {s2} vs {var}");
        }
    }

    #[test]
    fn ks_distance_against_quadrature_cdf() {
        let p = ChannelParams::symmetric_2x2(1.5).unwrap();
        let ch = Channel::new(p).unwrap();
        let mut xs = sample_lambda(&p, &cfg(100_000, 3)).unwrap();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        // evaluate the CDF on a grid of order statistics
        let mut d_max: f64 = 0.0;
        for i in (0..xs.len()).step_by(500) {
            let f = ch.cdf(xs[i]).unwrap();
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            d_max = d_max.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(d_max < 1.63 / n.sqrt(), "D = {d_max}");
    }

    #[test]
    fn rayleigh_tail_at_one() {
        let p = ChannelParams::new(1, 1, 1.0, 1.0, 1.0, 1.0).unwrap();
        let est = mc_tail_prob(&p, 1.0, &cfg(1_000_000, 21)).unwrap();
        let exact = 2.0 * bessel_k(1.0, 2.0).unwrap();
        assert!(est.z_score(exact) < 3.0, "{est:?} vs {exact}");
    }

    #[test]
    fn cutoff_above_all_draws_gives_zero() {
        let p = ChannelParams::symmetric_2x2(1.0).unwrap();
        let snr = SnrPoint::from_db(-10.0).unwrap();
        let wf = mc_capacity_waterfilling(&p, snr, 1e12, &cfg(20_000, 1)).unwrap();
        assert_eq!(wf.capacity.mean, 0.0);
        assert_eq!(wf.capacity.std_error, 0.0);
        assert_eq!(wf.power.mean, 0.0);
    }

    #[test]
    fn tiny_cutoff_recovers_always_on_rate() {
        let p = ChannelParams::symmetric_2x2(1.0).unwrap();
        let snr = SnrPoint::from_db(-10.0).unwrap();
        let mc = cfg(200_000, 8);
        let onoff = mc_rate_onoff(&p, snr, 1e-300, &mc).unwrap();
        let always = mc_expectation(&p, &mc, |x| (x * snr.linear).ln_1p()).unwrap();
        assert!((onoff.mean - always.mean).abs() <= 1e-12 * always.mean);
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let p = ChannelParams::symmetric_2x2(0.5).unwrap();
        let base = McConfig::new(300_001, 77, 1).unwrap();
        let reference = mc_expectation(&p, &base, |x| x.sqrt()).unwrap();
        for workers in [2, 3, 8] {
            let mc = McConfig { workers, ..base };
            let est = mc_expectation(&p, &mc, |x| x.sqrt()).unwrap();
            assert_eq!(est, reference, "workers = {workers}");
        }
        let draws_1 = sample_lambda(&p, &McConfig::new(70_000, 4, 1).unwrap()).unwrap();
        let draws_5 = sample_lambda(&p, &McConfig::new(70_000, 4, 5).unwrap()).unwrap();
        assert_eq!(draws_1, draws_5);
        assert_eq!(draws_1.len(), 70_000);
        let other_seed = mc_expectation(&p, &McConfig { seed: 78, ..base }, |x| x.sqrt()).unwrap();
        assert_ne!(other_seed.mean, reference.mean);
    }
}
