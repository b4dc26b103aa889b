//! Time tags to filtered intervals to symbols of the 4-letter alphabet.

use crate::error::{Error, Result};
use crate::source::TimeTagStream;

/// Device alphabet size.
pub const ALPHABET: u8 = 4;

/// One letter of the 4-ary alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol(u8);

impl Symbol {
    pub fn new(value: u8) -> Result<Symbol> {
        if value >= ALPHABET {
            return Err(Error::Config(format!(
                "symbol value {value} outside alphabet of size {ALPHABET}"
            )));
        }
        Ok(Symbol(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FilterConfig {
    /// Intervals shorter than this many clock ticks are rejected;
    /// `ticks == cutoff` is kept.
    pub cutoff_ticks: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { cutoff_ticks: 10 }
    }
}

/// Waiting times between adjacent tags, in clock ticks. Strict monotonicity
/// of the tag stream guarantees every interval is at least one tick.
pub fn intervals(stream: &TimeTagStream) -> Vec<u64> {
    stream.ticks().windows(2).map(|w| w[1] - w[0]).collect()
}

/// Keeps exactly the samples with `ticks >= cutoff`. Each interval is judged
/// on its own; dropping one does not touch its neighbours.
pub fn filter_intervals(intervals: &[u64], cfg: &FilterConfig) -> Vec<u64> {
    intervals
        .iter()
        .copied()
        .filter(|&t| t >= cfg.cutoff_ticks)
        .collect()
}

/// Bi-directional interval-to-symbol map: sweeps the alphabet up then down
/// over eight consecutive tick values (0,1,2,3,3,2,1,0), pairing a
/// higher-probability tick with a lower-probability one per letter.
///
/// Panics if `ticks < cutoff_ticks`; the filter must run first.
pub fn map_symbol(ticks: u64, cutoff_ticks: u64) -> Symbol {
    assert!(
        ticks >= cutoff_ticks,
        "interval of {ticks} ticks below cutoff {cutoff_ticks}; filter must run first"
    );
    let m = ((ticks - cutoff_ticks) % 8) as u8;
    Symbol(if m < 4 { m } else { 7 - m })
}

pub fn map_symbols(intervals: &[u64], cutoff_ticks: u64) -> Vec<Symbol> {
    intervals
        .iter()
        .map(|&t| map_symbol(t, cutoff_ticks))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SymbolStats {
    pub counts: [u64; ALPHABET as usize],
    pub frequencies: [f64; ALPHABET as usize],
    /// Pearson statistic against the uniform distribution (3 degrees of freedom).
    pub chi_square: f64,
    /// Empirical Shannon entropy in bits per symbol.
    pub entropy_bits: f64,
}

pub fn symbol_stats(symbols: &[Symbol]) -> Result<SymbolStats> {
    if symbols.is_empty() {
        return Err(Error::EmptyInput("symbol_stats needs at least one symbol"));
    }
    let mut counts = [0u64; ALPHABET as usize];
    for s in symbols {
        counts[s.value() as usize] += 1;
    }
    let n = symbols.len() as f64;
    let expected = n / ALPHABET as f64;
    let mut frequencies = [0.0; ALPHABET as usize];
    let mut chi_square = 0.0;
    let mut entropy_bits = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let f = c as f64 / n;
        frequencies[i] = f;
        let d = c as f64 - expected;
        chi_square += d * d / expected;
        if f > 0.0 {
            entropy_bits -= f * f.log2();
        }
    }
    Ok(SymbolStats {
        counts,
        frequencies,
        chi_square,
        entropy_bits,
    })
}
