//! Synthetic detector click streams: ideal Poisson arrivals, a dead-time-like
//! thinning model, dark counts, and discretization to the 16 ns clock.
//!
//! Everything is a pure function of (config, seed). Random variates come from
//! ChaCha8 keyed by the config seed, one fixed stream id per stage
//! (arrivals 0, detector thinning 1, dark counts 2), with exponential gaps
//! drawn by inverse CDF from 53-bit uniforms. This mapping is part of the
//! output contract and stays stable across releases.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

use crate::error::{Error, Result};

/// Clock resolution of the time tagger.
pub const CLOCK_PERIOD_NS: f64 = 16.0;
pub const CLOCK_PERIOD_SECS: f64 = 16e-9;

const STREAM_ARRIVALS: u64 = 0;
const STREAM_DETECTOR: u64 = 1;
const STREAM_DARK: u64 = 2;

#[derive(Debug, Clone)]
pub struct SourceConfig {
    /// Mean photon arrival rate in events per second.
    pub mean_rate: f64,
    /// Simulated span in seconds.
    pub duration: f64,
    /// Dark count rate in events per second.
    pub dark_rate: f64,
    pub rng_seed: u64,
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.mean_rate.is_finite() || self.mean_rate <= 0.0 {
            return Err(Error::Config(format!(
                "mean_rate must be positive, got {}",
                self.mean_rate
            )));
        }
        if !self.duration.is_finite() || self.duration < 0.0 {
            return Err(Error::Config(format!(
                "duration must be non-negative, got {}",
                self.duration
            )));
        }
        if !self.dark_rate.is_finite() || self.dark_rate < 0.0 {
            return Err(Error::Config(format!(
                "dark_rate must be non-negative, got {}",
                self.dark_rate
            )));
        }
        Ok(())
    }
}

/// Detector recovery model: an arrival at gap `d` after the last accepted
/// click is kept with probability `1 - exp(-d / recovery_tau)`.
#[derive(Debug, Clone, Copy)]
pub struct DetectorModel {
    pub recovery_tau_ns: f64,
    /// Span within which the waiting-time distribution visibly deviates;
    /// informational, must contain the recovery scale.
    pub affected_window_ns: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel {
            recovery_tau_ns: 40.0,
            affected_window_ns: 160.0,
        }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if !self.recovery_tau_ns.is_finite() || self.recovery_tau_ns < 0.0 {
            return Err(Error::Config(format!(
                "recovery_tau_ns must be non-negative, got {}",
                self.recovery_tau_ns
            )));
        }
        if self.affected_window_ns < self.recovery_tau_ns {
            return Err(Error::Config(format!(
                "affected_window_ns ({}) must contain recovery_tau_ns ({})",
                self.affected_window_ns, self.recovery_tau_ns
            )));
        }
        Ok(())
    }
}

/// Strictly increasing detector click times in 16 ns clock ticks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeTagStream {
    ticks: Vec<u64>,
}

impl TimeTagStream {
    /// Validates strict monotonicity.
    pub fn from_ticks(ticks: Vec<u64>) -> Result<TimeTagStream> {
        for (i, w) in ticks.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::Config(format!(
                    "tags must be strictly increasing; tag[{}] = {} after {}",
                    i + 1,
                    w[1],
                    w[0]
                )));
            }
        }
        Ok(TimeTagStream { ticks })
    }

    pub fn ticks(&self) -> &[u64] {
        &self.ticks
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }
}

/// Uniform in [0, 1) from the top 53 bits of a u64 draw.
#[inline]
fn uniform53(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exponential variate with the given rate, by inverse CDF. The argument of
/// the log is in (0, 1], so the result is always finite.
#[inline]
fn exp_variate(rng: &mut impl RngCore, rate: f64) -> f64 {
    -(1.0 - uniform53(rng)).ln() / rate
}

fn poisson_process(rate: f64, duration: f64, rng: &mut impl RngCore) -> Vec<f64> {
    let mut times = Vec::new();
    if rate <= 0.0 || duration <= 0.0 {
        return times;
    }
    times.reserve((rate * duration * 1.1) as usize + 16);
    let mut t = exp_variate(rng, rate);
    while t < duration {
        times.push(t);
        t += exp_variate(rng, rate);
    }
    times
}

/// Homogeneous Poisson arrivals of `cfg.mean_rate` on `[0, duration)`,
/// deterministic in `cfg.rng_seed`.
pub fn generate_ideal_arrivals(cfg: &SourceConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut rng = stage_rng(cfg.rng_seed, STREAM_ARRIVALS);
    Ok(poisson_process(cfg.mean_rate, cfg.duration, &mut rng))
}

/// Thins a time-sorted arrival sequence with memory of the last accepted
/// click: an arrival at gap `d` survives with probability
/// `1 - exp(-d / recovery_tau)`. The first arrival is always kept;
/// `recovery_tau = 0` keeps everything.
pub fn apply_detector(arrivals: &[f64], model: &DetectorModel, rng: &mut impl RngCore) -> Vec<f64> {
    let tau = model.recovery_tau_ns * 1e-9;
    if tau <= 0.0 {
        return arrivals.to_vec();
    }
    let mut clicks = Vec::with_capacity(arrivals.len());
    let mut last_accepted = f64::NEG_INFINITY;
    for &t in arrivals {
        let survive = if last_accepted == f64::NEG_INFINITY {
            1.0
        } else {
            1.0 - (-(t - last_accepted) / tau).exp()
        };
        if uniform53(rng) < survive {
            clicks.push(t);
            last_accepted = t;
        }
    }
    clicks
}

/// Superposes an independent Poisson dark-count process of rate `dark_rate`
/// on `[0, duration)` and re-sorts.
pub fn add_dark_counts(
    clicks: &[f64],
    dark_rate: f64,
    duration: f64,
    rng: &mut impl RngCore,
) -> Vec<f64> {
    if dark_rate <= 0.0 {
        return clicks.to_vec();
    }
    let dark = poisson_process(dark_rate, duration, rng);
    let mut merged = Vec::with_capacity(clicks.len() + dark.len());
    let (mut i, mut j) = (0, 0);
    while i < clicks.len() && j < dark.len() {
        if clicks[i] <= dark[j] {
            merged.push(clicks[i]);
            i += 1;
        } else {
            merged.push(dark[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&clicks[i..]);
    merged.extend_from_slice(&dark[j..]);
    merged
}

/// Time-tags clicks at the 16 ns clock: `tick = floor(t / 16 ns)`, merging
/// clicks that land in the same cycle.
pub fn discretize(clicks: &[f64]) -> TimeTagStream {
    let mut ticks = Vec::with_capacity(clicks.len());
    for &t in clicks {
        let tick = (t / CLOCK_PERIOD_SECS).floor() as u64;
        if ticks.last() != Some(&tick) {
            ticks.push(tick);
        }
    }
    TimeTagStream { ticks }
}

/// Full source chain: arrivals, detector thinning, dark counts, time tagging.
pub fn simulate(cfg: &SourceConfig, model: &DetectorModel) -> Result<TimeTagStream> {
    cfg.validate()?;
    model.validate()?;
    let arrivals = generate_ideal_arrivals(cfg)?;
    let mut det_rng = stage_rng(cfg.rng_seed, STREAM_DETECTOR);
    let clicks = apply_detector(&arrivals, model, &mut det_rng);
    let mut dark_rng = stage_rng(cfg.rng_seed, STREAM_DARK);
    let merged = add_dark_counts(&clicks, cfg.dark_rate, cfg.duration, &mut dark_rng);
    Ok(discretize(&merged))
}

fn stage_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seedable RNG for callers that need auxiliary randomness tied to a config
/// seed (detector thinning, dark counts) without constructing ChaCha by hand.
pub fn rng_for_stage(seed: u64, stage: u64) -> impl RngCore {
    stage_rng(seed, stage)
}
