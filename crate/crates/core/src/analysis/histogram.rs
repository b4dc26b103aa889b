//! Waiting-time histograms with exponential tail fitting and detection of
//! the short-interval deviation region.

use crate::error::{Error, Result};
use crate::source::CLOCK_PERIOD_NS;

/// Bins whose expected count falls below this are too noisy to judge the
/// observed/expected ratio.
const MIN_EXPECTED_FOR_RATIO: f64 = 50.0;
/// Bins below this count carry too little weight for the log-linear fit.
const MIN_COUNT_FOR_FIT: u64 = 10;
/// A bin deviates when observed/expected drops below this.
const DEVIATION_RATIO: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct HistogramFit {
    pub bin_width_ticks: u64,
    /// Bin `i` covers `[i * w, (i + 1) * w)` ticks.
    pub counts: Vec<u64>,
    /// Expected counts per bin from the fitted exponential.
    pub expected: Vec<f64>,
    /// Decay rate of the fitted exponential, per second.
    pub fitted_rate: f64,
    /// Upper edge (ns) of the bin where the short-interval deficit ends:
    /// zero when the first populated bin already matches the fit, i.e. a
    /// clean exponential from the start.
    pub deviation_boundary_ns: f64,
}

impl HistogramFit {
    /// CSV rows `bin_start_ns,count,expected`.
    pub fn csv(&self) -> String {
        let mut s = String::from("bin_start_ns,count,expected\n");
        let w = self.bin_width_ticks as f64 * CLOCK_PERIOD_NS;
        for (i, (&c, &e)) in self.counts.iter().zip(&self.expected).enumerate() {
            s.push_str(&format!("{:.1},{},{:.3}\n", i as f64 * w, c, e));
        }
        s
    }
}

/// Weighted least squares of `ln(count)` against the bin center, restricted
/// to bins above `from_bin` with enough counts. Returns (intercept, slope)
/// in per-tick units.
fn fit_log_linear(counts: &[u64], bin_width: u64, from_bin: usize) -> Result<(f64, f64)> {
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut populated = 0usize;
    for (i, &c) in counts.iter().enumerate().skip(from_bin) {
        if c < MIN_COUNT_FOR_FIT {
            continue;
        }
        populated += 1;
        let x = (i as f64 + 0.5) * bin_width as f64;
        let y = (c as f64).ln();
        let w = c as f64;
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    if populated < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 populated bins beyond bin {from_bin}, found {populated}"
        )));
    }
    let det = sw * sxx - sx * sx;
    if det.abs() < f64::EPSILON * sw * sxx {
        return Err(Error::Fit("degenerate bin layout".into()));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy * sxx - sx * sxy) / det;
    if slope >= 0.0 {
        return Err(Error::Fit(format!(
            "non-decaying histogram (slope {slope:.3e} per tick)"
        )));
    }
    Ok((intercept, slope))
}

/// Bins the intervals, fits the exponential over the region beyond the
/// deviation boundary (iterating fit and boundary to a fixed point), and
/// reports the fitted rate plus the boundary below which observed counts
/// fall short of the fit.
pub fn waiting_time_histogram(intervals: &[u64], bin_width_ticks: u64) -> Result<HistogramFit> {
    if intervals.is_empty() {
        return Err(Error::EmptyInput("waiting_time_histogram needs intervals"));
    }
    if bin_width_ticks == 0 {
        return Err(Error::Config("bin width must be positive".into()));
    }
    let max = *intervals.iter().max().unwrap();
    let n_bins = (max / bin_width_ticks + 1) as usize;
    let mut counts = vec![0u64; n_bins];
    for &t in intervals {
        counts[(t / bin_width_ticks) as usize] += 1;
    }

    let mut recovery_bin = 0usize; // fit region starts here
    let mut fit = fit_log_linear(&counts, bin_width_ticks, recovery_bin)?;
    for _ in 0..8 {
        let next = find_recovery_bin(&counts, bin_width_ticks, fit);
        if next == recovery_bin {
            break;
        }
        recovery_bin = next;
        fit = fit_log_linear(&counts, bin_width_ticks, recovery_bin)?;
    }

    let (intercept, slope) = fit;
    let expected: Vec<f64> = (0..n_bins)
        .map(|i| (intercept + slope * (i as f64 + 0.5) * bin_width_ticks as f64).exp())
        .collect();
    // The affected region is only confirmed over by the end of the bin where
    // the ratio first recovers, so the boundary is that bin's upper edge.
    let deviation_boundary_ns = if recovery_bin == 0 {
        0.0
    } else {
        (recovery_bin as f64 + 1.0) * bin_width_ticks as f64 * CLOCK_PERIOD_NS
    };
    Ok(HistogramFit {
        bin_width_ticks,
        counts,
        expected,
        fitted_rate: -slope / (CLOCK_PERIOD_NS * 1e-9),
        deviation_boundary_ns,
    })
}

/// Index of the first bin whose observed/expected ratio reaches
/// `DEVIATION_RATIO`, or 0 when there is no deficit prefix at all. Intervals
/// are at least one tick, so at unit bin width the tick-0 bin is structurally
/// empty and never judged.
fn find_recovery_bin(counts: &[u64], bin_width: u64, (intercept, slope): (f64, f64)) -> usize {
    let start = if bin_width == 1 { 1 } else { 0 };
    let mut saw_deficit = false;
    for (i, &c) in counts.iter().enumerate().skip(start) {
        let expected = (intercept + slope * (i as f64 + 0.5) * bin_width as f64).exp();
        if expected < MIN_EXPECTED_FOR_RATIO {
            break; // expected counts only decay; nothing further is judgeable
        }
        if c as f64 / expected >= DEVIATION_RATIO {
            return if saw_deficit { i } else { 0 };
        }
        saw_deficit = true;
    }
    if saw_deficit {
        counts.len()
    } else {
        0
    }
}
