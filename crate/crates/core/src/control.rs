//! Simulated count-rate stabilization: an integrating controller trims the
//! source drive so the measured click rate tracks a target with a first-order
//! response, slow enough that the process is stationary over one
//! 2^20-count processing window.

use rand_core::RngCore;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FeedbackConfig {
    /// Click rate the loop holds, per second.
    pub target_rate: f64,
    /// Closed-loop settling time constant, seconds.
    pub time_constant: f64,
    /// Interval between rate measurements and corrections, seconds.
    pub update_period: f64,
    /// Plant gain: clicks per second per unit of drive current.
    pub k_led: f64,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            target_rate: 1.2e6,
            time_constant: 16.0,
            update_period: 1.0,
            k_led: 1.2e6,
        }
    }
}

impl FeedbackConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.time_constant.is_finite() || self.time_constant <= 0.0 {
            return Err(Error::Config("time_constant must be positive".into()));
        }
        if !self.update_period.is_finite() || self.update_period <= 0.0 {
            return Err(Error::Config("update_period must be positive".into()));
        }
        // the discrete loop only approximates the first-order response when
        // it updates much faster than it settles
        if self.update_period > self.time_constant / 8.0 {
            return Err(Error::Config(format!(
                "update_period {} must be at most time_constant / 8 = {}",
                self.update_period,
                self.time_constant / 8.0
            )));
        }
        if !self.k_led.is_finite() || self.k_led <= 0.0 {
            return Err(Error::Config("k_led must be positive".into()));
        }
        if !self.target_rate.is_finite() || self.target_rate < 0.0 {
            return Err(Error::Config("target_rate must be non-negative".into()));
        }
        Ok(())
    }
}

/// Integrator state: the commanded drive current.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoopState {
    pub current: f64,
}

/// One integral correction: steps the current toward zero rate error with
/// gain `update_period / time_constant`, clamped to non-negative drive.
pub fn feedback_step(measured_rate: f64, state: &mut LoopState, cfg: &FeedbackConfig) -> f64 {
    debug_assert!(measured_rate >= 0.0);
    let correction =
        cfg.update_period / cfg.time_constant * (cfg.target_rate - measured_rate) / cfg.k_led;
    state.current = (state.current + correction).max(0.0);
    state.current
}

#[derive(Debug, Clone, Copy)]
pub struct TraceSample {
    pub time_s: f64,
    pub measured_rate: f64,
    pub commanded_current: f64,
}

/// Closed-loop simulation. The plant produces clicks at
/// `k_led * gain_factor(t) * current`; each update period the loop counts
/// clicks (Poisson shot noise via a normal approximation when an RNG is
/// given), derives the measured rate, and corrects the current.
pub fn simulate_loop(
    cfg: &FeedbackConfig,
    initial_current: f64,
    duration: f64,
    gain_factor: impl Fn(f64) -> f64,
    mut rng: Option<&mut dyn RngCore>,
) -> Result<Vec<TraceSample>> {
    cfg.validate()?;
    let steps = (duration / cfg.update_period).ceil() as usize;
    let mut state = LoopState {
        current: initial_current,
    };
    let mut trace = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = i as f64 * cfg.update_period;
        let true_rate = cfg.k_led * gain_factor(t) * state.current;
        let expected_counts = true_rate * cfg.update_period;
        let counts = match rng.as_deref_mut() {
            Some(rng) if expected_counts > 0.0 => {
                // Poisson counts in the millions: normal approximation
                (expected_counts + expected_counts.sqrt() * standard_normal(rng)).max(0.0)
            }
            _ => expected_counts,
        };
        let measured_rate = counts / cfg.update_period;
        trace.push(TraceSample {
            time_s: t,
            measured_rate,
            commanded_current: state.current,
        });
        feedback_step(measured_rate, &mut state, cfg);
    }
    Ok(trace)
}

/// Box–Muller from 53-bit uniforms.
fn standard_normal(rng: &mut dyn RngCore) -> f64 {
    let u1 = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Fits the exponential settling of `|target - measured|` after a step at
/// `t_start`, returning the fitted time constant in seconds. Samples are
/// used until the error decays below 5% of its initial magnitude.
pub fn fit_settling_time_constant(trace: &[TraceSample], target: f64, t_start: f64) -> Result<f64> {
    let settling: Vec<(f64, f64)> = trace
        .iter()
        .filter(|s| s.time_s >= t_start)
        .map(|s| (s.time_s - t_start, (target - s.measured_rate).abs()))
        .collect();
    let initial = settling.first().map(|&(_, e)| e).unwrap_or(0.0);
    if initial <= 0.0 {
        return Err(Error::Fit(
            "no initial error to fit a settling curve".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = settling
        .iter()
        .take_while(|&&(_, e)| e > 0.05 * initial)
        .map(|&(t, e)| (t, e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Fit(format!(
            "only {} samples in the settling region",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if slope >= 0.0 {
        return Err(Error::Fit("error is not decaying".into()));
    }
    Ok(-1.0 / slope)
}

/// Largest relative span (max - min over mean) of the commanded rate over
/// any window holding `window_counts` consecutive measured counts.
pub fn max_drift_over_count_window(
    trace: &[TraceSample],
    cfg: &FeedbackConfig,
    window_counts: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let mut lo = 0;
    let mut acc = 0.0;
    for hi in 0..trace.len() {
        acc += trace[hi].measured_rate * cfg.update_period;
        while acc - trace[lo].measured_rate * cfg.update_period >= window_counts {
            acc -= trace[lo].measured_rate * cfg.update_period;
            lo += 1;
        }
        if acc < window_counts {
            continue;
        }
        let window = &trace[lo..=hi];
        let commanded: Vec<f64> = window
            .iter()
            .map(|s| s.commanded_current * cfg.k_led)
            .collect();
        let max = commanded.iter().cloned().fold(f64::MIN, f64::max);
        let min = commanded.iter().cloned().fold(f64::MAX, f64::min);
        let mean = commanded.iter().sum::<f64>() / commanded.len() as f64;
        if mean > 0.0 {
            worst = worst.max((max - min) / mean);
        }
    }
    worst
}

/// CSV rows `time_s,measured_rate,commanded_current`.
pub fn trace_csv(trace: &[TraceSample]) -> String {
    let mut s = String::from("time_s,measured_rate,commanded_current\n");
    for p in trace {
        s.push_str(&format!(
            "{:.3},{:.3},{:.9}\n",
            p.time_s, p.measured_rate, p.commanded_current
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> FeedbackConfig {
        FeedbackConfig {
            target_rate: 1.2e6,
            time_constant: 16.0,
            update_period: 1.0,
            k_led: 1.2e6,
        }
    }

    #[test]
    fn zero_error_leaves_current_unchanged() {
        let cfg = cfg();
        let mut state = LoopState { current: 1.0 };
        feedback_step(cfg.target_rate, &mut state, &cfg);
        assert_eq!(state.current, 1.0);
    }

    #[test]
    fn current_stays_non_negative() {
        let cfg = cfg();
        let mut state = LoopState { current: 0.001 };
        for _ in 0..100 {
            feedback_step(10.0 * cfg.target_rate, &mut state, &cfg);
        }
        assert!(state.current >= 0.0);
    }

    #[test]
    fn update_period_bound_enforced() {
        let bad = FeedbackConfig {
            update_period: 3.0,
            ..cfg()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cold_start_settles_without_overshoot() {
        let cfg = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trace = simulate_loop(&cfg, 0.0, 120.0, |_| 1.0, Some(&mut rng)).unwrap();
        let max_rate = trace
            .iter()
            .map(|s| s.commanded_current * cfg.k_led)
            .fold(f64::MIN, f64::max);
        assert!(
            max_rate <= 1.05 * cfg.target_rate,
            "overshoot to {max_rate}"
        );
        let last = trace.last().unwrap();
        assert!((last.measured_rate - cfg.target_rate).abs() < 0.01 * cfg.target_rate);
    }

    #[test]
    fn step_disturbance_recovers_with_the_configured_time_constant() {
        let cfg = cfg();
        let t_step = 80.0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trace = simulate_loop(
            &cfg,
            1.0,
            240.0,
            |t| if t < t_step { 1.0 } else { 0.9 },
            Some(&mut rng),
        )
        .unwrap();
        // measured rate returns to within 1% of target
        let last = trace.last().unwrap();
        assert!(
            (last.measured_rate - cfg.target_rate).abs() < 0.01 * cfg.target_rate,
            "settled at {}",
            last.measured_rate
        );
        let tau = fit_settling_time_constant(&trace, cfg.target_rate, t_step).unwrap();
        assert!(
            (tau - 16.0).abs() <= 0.25 * 16.0,
            "fitted time constant {tau}"
        );
    }

    #[test]
    fn equilibrium_point_is_the_target() {
        // constant disturbance: unique fixed point at measured == target
        let cfg = cfg();
        let trace = simulate_loop(&cfg, 0.3, 400.0, |_| 0.85, None).unwrap();
        let last = trace.last().unwrap();
        assert!((last.measured_rate - cfg.target_rate).abs() < 1e-3 * cfg.target_rate);
        // fixed point: current * k_led * 0.85 == target
        assert!(
            (last.commanded_current * cfg.k_led * 0.85 - cfg.target_rate).abs()
                < 1e-2 * cfg.target_rate
        );
    }

    #[test]
    fn commanded_rate_is_stationary_over_block_windows() {
        let cfg = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let trace = simulate_loop(&cfg, 1.0, 400.0, |_| 1.0, Some(&mut rng)).unwrap();
        let equilibrium = &trace[trace.len() / 2..];
        let drift = max_drift_over_count_window(equilibrium, &cfg, (1u64 << 20) as f64);
        assert!(drift < 0.07, "drift {drift}");
    }
}
