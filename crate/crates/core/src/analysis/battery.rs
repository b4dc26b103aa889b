//! Desk-scale statistical randomness battery: monobit frequency, block
//! frequency, runs, serial (lag-1 and lag-2), and cumulative sums, with the
//! standard analytic p-value formulas.

use crate::analysis::special::{erfc, gamma_q, normal_cdf};
use crate::error::{Error, Result};

/// Minimum stream length the battery accepts.
pub const MIN_BITS: usize = 10_000;
/// Block size of the block-frequency test.
pub const BLOCK_BITS: usize = 128;

#[derive(Debug, Clone)]
pub struct TestResult {
    pub name: &'static str,
    pub statistic: f64,
    pub p_value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct BatteryReport {
    pub alpha: f64,
    pub bits_tested: usize,
    pub results: Vec<TestResult>,
}

impl BatteryReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    /// CSV rows `test,statistic,p_value,pass`.
    pub fn csv(&self) -> String {
        let mut s = String::from("test,statistic,p_value,pass\n");
        for r in &self.results {
            s.push_str(&format!(
                "{},{:.6},{:.6e},{}\n",
                r.name, r.statistic, r.p_value, r.pass
            ));
        }
        s
    }
}

fn result(name: &'static str, statistic: f64, p_value: f64, alpha: f64) -> TestResult {
    TestResult {
        name,
        statistic,
        p_value,
        pass: p_value >= alpha,
    }
}

/// Monobit frequency: `p = erfc(|sum(2b - 1)| / sqrt(2n))`.
pub fn monobit(bits: &[u8], alpha: f64) -> TestResult {
    let n = bits.len() as f64;
    let ones = bits.iter().map(|&b| b as i64).sum::<i64>();
    let s = (2 * ones - bits.len() as i64).abs() as f64;
    let s_obs = s / n.sqrt();
    result(
        "monobit",
        s_obs,
        erfc(s_obs / std::f64::consts::SQRT_2),
        alpha,
    )
}

/// Frequency within blocks of [`BLOCK_BITS`] bits:
/// `chi2 = 4 M sum (pi_i - 1/2)^2`, `p = Q(K/2, chi2/2)`.
pub fn block_frequency(bits: &[u8], block: usize, alpha: f64) -> TestResult {
    let k = bits.len() / block;
    let mut chi2 = 0.0;
    for blk in bits.chunks_exact(block).take(k) {
        let pi = blk.iter().map(|&b| b as u64).sum::<u64>() as f64 / block as f64;
        chi2 += (pi - 0.5) * (pi - 0.5);
    }
    chi2 *= 4.0 * block as f64;
    result(
        "block_frequency",
        chi2,
        gamma_q(k as f64 / 2.0, chi2 / 2.0),
        alpha,
    )
}

/// Total runs versus the expectation for the observed ones fraction.
pub fn runs(bits: &[u8], alpha: f64) -> TestResult {
    let n = bits.len() as f64;
    let pi = bits.iter().map(|&b| b as u64).sum::<u64>() as f64 / n;
    // frequency prerequisite per the standard formulation
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return result("runs", f64::NAN, 0.0, alpha);
    }
    let v = 1 + bits.windows(2).filter(|w| w[0] != w[1]).count();
    let num = (v as f64 - 2.0 * n * pi * (1.0 - pi)).abs();
    let den = 2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi);
    result("runs", v as f64, erfc(num / den), alpha)
}

/// psi-square statistic over overlapping `m`-bit patterns with cyclic
/// wraparound.
fn psi_square(bits: &[u8], m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let n = bits.len();
    let mut counts = vec![0u64; 1 << m];
    let mask = (1usize << m) - 1;
    let mut pattern = 0usize;
    // seed the first m-1 bits
    for &b in &bits[..m - 1] {
        pattern = ((pattern << 1) | b as usize) & mask;
    }
    for i in 0..n {
        let b = bits[(i + m - 1) % n];
        pattern = ((pattern << 1) | b as usize) & mask;
        counts[pattern] += 1;
    }
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    (1u64 << m) as f64 / n as f64 * sum_sq - n as f64
}

/// Generalized serial test at pattern length `m`:
/// `p = Q(2^(m-2), (psi2_m - psi2_{m-1}) / 2)`. `m = 2` probes lag-1
/// pair dependence, `m = 3` lag-2 triples.
pub fn serial(bits: &[u8], m: usize, alpha: f64) -> TestResult {
    assert!(m >= 2, "serial test needs pattern length >= 2");
    let del = psi_square(bits, m) - psi_square(bits, m - 1);
    let name: &'static str = match m {
        2 => "serial_lag1",
        3 => "serial_lag2",
        _ => "serial",
    };
    result(
        name,
        del,
        gamma_q((1u64 << (m - 2)) as f64, del / 2.0),
        alpha,
    )
}

/// Maximum cumulative-sum excursion, forward or backward, with the standard
/// normal-sum p-value.
pub fn cumulative_sums(bits: &[u8], forward: bool, alpha: f64) -> TestResult {
    let n = bits.len();
    let mut s = 0i64;
    let mut z = 0i64;
    for i in 0..n {
        let b = if forward { bits[i] } else { bits[n - 1 - i] };
        s += 2 * b as i64 - 1;
        z = z.max(s.abs());
    }
    let name: &'static str = if forward {
        "cusum_forward"
    } else {
        "cusum_backward"
    };
    // the first step already leaves the origin, so z >= 1
    let n_i = n as i64;
    let z_f = z as f64;
    let sqrt_n = (n as f64).sqrt();
    let mut p = 1.0;
    // summation bounds with truncating integer division, matching the
    // reference realization of the formula
    let k_hi = (n_i / z - 1) / 4;
    for k in (-n_i / z + 1) / 4..=k_hi {
        let k = k as f64;
        p -=
            normal_cdf((4.0 * k + 1.0) * z_f / sqrt_n) - normal_cdf((4.0 * k - 1.0) * z_f / sqrt_n);
    }
    for k in (-n_i / z - 3) / 4..=k_hi {
        let k = k as f64;
        p +=
            normal_cdf((4.0 * k + 3.0) * z_f / sqrt_n) - normal_cdf((4.0 * k + 1.0) * z_f / sqrt_n);
    }
    result(name, z_f, p.clamp(0.0, 1.0), alpha)
}

/// Runs the full battery on a stream of 0/1 bit values.
pub fn randomness_battery(bits: &[u8], alpha: f64) -> Result<BatteryReport> {
    if bits.len() < MIN_BITS {
        return Err(Error::InsufficientData {
            what: "bits",
            needed: MIN_BITS as u64,
            got: bits.len() as u64,
        });
    }
    debug_assert!(bits.iter().all(|&b| b <= 1), "bit values must be 0 or 1");
    let results = vec![
        monobit(bits, alpha),
        block_frequency(bits, BLOCK_BITS, alpha),
        runs(bits, alpha),
        serial(bits, 2, alpha),
        serial(bits, 3, alpha),
        cumulative_sums(bits, true, alpha),
        cumulative_sums(bits, false, alpha),
    ];
    Ok(BatteryReport {
        alpha,
        bits_tested: bits.len(),
        results,
    })
}
