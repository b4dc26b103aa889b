//! One-sample Kolmogorov–Smirnov machinery for distributional checks
//! against fully specified CDFs.

/// Two-sided KS statistic of `sorted` samples against `cdf`.
///
/// Panics if the samples are empty or not sorted ascending.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!sorted.is_empty(), "KS needs at least one sample");
    debug_assert!(
        sorted.windows(2).all(|w| w[0] <= w[1]),
        "samples not sorted"
    );
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic two-sided acceptance: `sqrt(n) * d <= c(alpha)` with
/// `c(alpha) = sqrt(-ln(alpha / 2) / 2)` (c(0.01) ≈ 1.6276).
pub fn ks_pass(d: f64, n: usize, alpha: f64) -> bool {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    (n as f64).sqrt() * d <= c
}
