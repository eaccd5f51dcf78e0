//! Distribution and correlation analysis: geometric binning, power-law
//! exponent fits, Pearson correlation, ranked (Zipf) curves.
//!
//! Everything here is a pure function over slices; nothing touches the
//! graph machinery except [`per_class_distribution`], which reads the class
//! table to slice a value vector by in-degree.

use thiserror::Error;

use crate::graph::DegreeClassTable;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("input is empty")]
    EmptyInput,
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("bin ratio must exceed 1, got {0}")]
    InvalidRatio(f64),
    #[error("samples must be positive and finite (offender: {0})")]
    NonPositiveSample(f64),
    #[error("correlation undefined: {0}")]
    DegenerateInput(String),
    #[error("tail above x_min = {x_min} holds {found} samples; need at least {need}")]
    TooFewTailSamples { x_min: f64, found: usize, need: usize },
    #[error("degenerate tail: all samples above x_min are equal")]
    DegenerateTail,
    #[error("x_min must be positive, got {0}")]
    InvalidXMin(f64),
    #[error("no candidate x_min produced a valid fit")]
    ScanFailed,
}

/// Geometrically binned series: edges grow by a fixed ratio from the
/// smallest sample. Empty bins are kept (count 0, NaN means) so the series
/// is plot-ready.
#[derive(Debug, Clone)]
pub struct LogBinnedSeries {
    /// Bin edges, length bins + 1; bin i covers [edges[i], edges[i+1]).
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mean_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    pub var_y: Vec<f64>,
}

impl LogBinnedSeries {
    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Probability density of bin `i` when the series is a histogram:
    /// count / (total * width).
    pub fn density(&self, i: usize) -> f64 {
        let width = self.edges[i + 1] - self.edges[i];
        self.counts[i] as f64 / (self.total_count() as f64 * width)
    }
}

/// Conditional mean (and variance) of `y` within geometric bins of `x`.
/// All `x` must be positive; bins anchor at the smallest sample.
pub fn log_binned_mean(
    x: &[f64],
    y: &[f64],
    ratio: f64,
) -> Result<LogBinnedSeries, AnalyticsError> {
    if x.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch(x.len(), y.len()));
    }
    if !(ratio > 1.0) {
        return Err(AnalyticsError::InvalidRatio(ratio));
    }
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    for &v in x {
        if !(v > 0.0) || !v.is_finite() {
            return Err(AnalyticsError::NonPositiveSample(v));
        }
        x_min = x_min.min(v);
        x_max = x_max.max(v);
    }
    let log_ratio = ratio.ln();
    let bins = if x_max == x_min {
        1
    } else {
        ((x_max / x_min).ln() / log_ratio).ceil().max(1.0) as usize
    };
    let index = |v: f64| -> usize {
        let i = ((v / x_min).ln() / log_ratio).floor();
        (i.max(0.0) as usize).min(bins - 1)
    };

    let mut counts = vec![0u64; bins];
    let mut sum_x = vec![0.0f64; bins];
    let mut sum_y = vec![0.0f64; bins];
    for (&xv, &yv) in x.iter().zip(y) {
        let b = index(xv);
        counts[b] += 1;
        sum_x[b] += xv;
        sum_y[b] += yv;
    }
    let mean_x: Vec<f64> = counts
        .iter()
        .zip(&sum_x)
        .map(|(&c, &s)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    let mean_y: Vec<f64> = counts
        .iter()
        .zip(&sum_y)
        .map(|(&c, &s)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    let mut var_y = vec![0.0f64; bins];
    for (&xv, &yv) in x.iter().zip(y) {
        let b = index(xv);
        let d = yv - mean_y[b];
        var_y[b] += d * d;
    }
    for (v, &c) in var_y.iter_mut().zip(&counts) {
        if c > 0 {
            *v /= c as f64;
        } else {
            *v = f64::NAN;
        }
    }
    let edges = (0..=bins).map(|i| x_min * ratio.powi(i as i32)).collect();
    Ok(LogBinnedSeries {
        edges,
        counts,
        mean_x,
        mean_y,
        var_y,
    })
}

/// Maximum-likelihood power-law fit of a sample tail.
#[derive(Debug, Clone, Copy)]
pub struct PowerLawFit {
    /// Density exponent: P(x) ~ x^(-exponent) above x_min.
    pub exponent: f64,
    pub x_min: f64,
    /// Samples at or above x_min.
    pub sample_count: usize,
    /// Kolmogorov-Smirnov distance between the tail and the fitted law.
    pub ks_distance: f64,
}

/// Minimum tail size accepted by the fitters.
pub const MIN_TAIL_SAMPLES: usize = 100;

/// Continuous MLE (Hill estimator): exponent = 1 + n / sum(ln(x/x_min))
/// over the tail x >= x_min.
pub fn fit_power_law(samples: &[f64], x_min: f64) -> Result<PowerLawFit, AnalyticsError> {
    if !(x_min > 0.0) {
        return Err(AnalyticsError::InvalidXMin(x_min));
    }
    let mut tail: Vec<f64> = samples.iter().copied().filter(|&v| v >= x_min).collect();
    if tail.len() < MIN_TAIL_SAMPLES {
        return Err(AnalyticsError::TooFewTailSamples {
            x_min,
            found: tail.len(),
            need: MIN_TAIL_SAMPLES,
        });
    }
    tail.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    if tail[0] == tail[tail.len() - 1] {
        return Err(AnalyticsError::DegenerateTail);
    }
    let n = tail.len() as f64;
    let log_sum: f64 = tail.iter().map(|&v| (v / x_min).ln()).sum();
    let exponent = 1.0 + n / log_sum;

    // KS distance against the fitted tail CDF 1 - (x/x_min)^(1-exponent).
    let mut ks: f64 = 0.0;
    for (i, &v) in tail.iter().enumerate() {
        let model = 1.0 - (v / x_min).powf(1.0 - exponent);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        ks = ks.max((model - lo).abs()).max((model - hi).abs());
    }
    Ok(PowerLawFit {
        exponent,
        x_min,
        sample_count: tail.len(),
        ks_distance: ks,
    })
}

/// Discrete MLE for integer samples (degrees): solves
/// d/dβ [ -β Σ ln k - n ln ζ(β, x_min) ] = 0 by bisection, where
/// ζ(β, a) = Σ_{k>=a} k^(-β).
pub fn fit_power_law_discrete(
    samples: &[u64],
    x_min: u64,
) -> Result<PowerLawFit, AnalyticsError> {
    if x_min == 0 {
        return Err(AnalyticsError::InvalidXMin(0.0));
    }
    let tail: Vec<u64> = samples.iter().copied().filter(|&v| v >= x_min).collect();
    if tail.len() < MIN_TAIL_SAMPLES {
        return Err(AnalyticsError::TooFewTailSamples {
            x_min: x_min as f64,
            found: tail.len(),
            need: MIN_TAIL_SAMPLES,
        });
    }
    let lo_val = *tail.iter().min().unwrap();
    let hi_val = *tail.iter().max().unwrap();
    if lo_val == hi_val {
        return Err(AnalyticsError::DegenerateTail);
    }
    let n = tail.len() as f64;
    let mean_log: f64 = tail.iter().map(|&v| (v as f64).ln()).sum::<f64>() / n;

    // E_model[ln k] is strictly decreasing in beta; bracket and bisect.
    let target = mean_log;
    let expected_log = |beta: f64| {
        let (z, zlog) = zeta_sums(beta, x_min);
        zlog / z
    };
    let mut lo = 1.0 + 1e-6;
    let mut hi = 30.0;
    if expected_log(lo) <= target {
        return Err(AnalyticsError::DegenerateInput(format!(
            "mean log {target} too large for a power-law exponent above 1"
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if expected_log(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let exponent = 0.5 * (lo + hi);

    // KS distance on the observed support.
    let mut sorted = tail.clone();
    sorted.sort_unstable();
    let (z_all, _) = zeta_sums(exponent, x_min);
    let mut ks: f64 = 0.0;
    let mut seen = 0usize;
    let mut i = 0usize;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        seen += j - i;
        let emp = seen as f64 / n;
        let (z_above, _) = zeta_sums(exponent, v + 1);
        let model = 1.0 - z_above / z_all;
        ks = ks.max((emp - model).abs());
        i = j;
    }
    Ok(PowerLawFit {
        exponent,
        x_min: x_min as f64,
        sample_count: tail.len(),
        ks_distance: ks,
    })
}

/// Partial Hurwitz-zeta sums: (Σ_{k>=a} k^-β, Σ_{k>=a} ln(k) k^-β), by
/// direct summation with an integral tail correction.
fn zeta_sums(beta: f64, a: u64) -> (f64, f64) {
    let cutoff = 100_000u64.max(a.saturating_mul(10));
    let mut z = 0.0f64;
    let mut zlog = 0.0f64;
    let mut k = a;
    while k <= cutoff {
        let kf = k as f64;
        let w = kf.powf(-beta);
        z += w;
        zlog += kf.ln() * w;
        k += 1;
    }
    // Midpoint-rule tails: ∫_{c+1/2}^∞ x^-β dx and ∫ ln(x) x^-β dx.
    let c = cutoff as f64 + 0.5;
    let bm1 = beta - 1.0;
    let t = c.powf(-bm1) / bm1;
    z += t;
    zlog += t * (c.ln() + 1.0 / bm1);
    (z, zlog)
}

/// Default tail start: the 1st percentile of the positive samples, so the
/// fit covers the bulk of the distribution rather than only its far end.
pub fn default_x_min(samples: &[f64]) -> Result<f64, AnalyticsError> {
    let mut positive: Vec<f64> = samples.iter().copied().filter(|&v| v > 0.0).collect();
    if positive.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    positive.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = positive.len() / 100;
    Ok(positive[idx.min(positive.len() - 1)])
}

/// Scans candidate x_min values (sample quantiles between the 1st and 90th
/// percentile) and keeps the fit with the smallest KS distance.
pub fn fit_power_law_scan(samples: &[f64]) -> Result<PowerLawFit, AnalyticsError> {
    let mut positive: Vec<f64> = samples.iter().copied().filter(|&v| v > 0.0).collect();
    if positive.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    positive.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = positive.len();
    let mut best: Option<PowerLawFit> = None;
    let mut last_candidate = f64::NAN;
    for step in 0..=40 {
        let pct = 0.01 + 0.89 * step as f64 / 40.0;
        let candidate = positive[((pct * n as f64) as usize).min(n - 1)];
        if candidate == last_candidate {
            continue;
        }
        last_candidate = candidate;
        if let Ok(fit) = fit_power_law(&positive, candidate) {
            if best.is_none_or(|b| fit.ks_distance < b.ks_distance) {
                best = Some(fit);
            }
        }
    }
    best.ok_or(AnalyticsError::ScanFailed)
}

/// Pearson's correlation coefficient, centered two-pass computation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalyticsError::DegenerateInput(
            "need at least two samples".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::DegenerateInput(
            "an argument is constant".into(),
        ));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Log-binned histogram of the values held by nodes with the given
/// in-degree (any out-degree).
pub fn per_class_distribution(
    values: &[f64],
    table: &DegreeClassTable,
    k_in: u32,
    ratio: f64,
) -> Result<LogBinnedSeries, AnalyticsError> {
    if values.len() != table.node_count() {
        return Err(AnalyticsError::LengthMismatch(
            values.len(),
            table.node_count(),
        ));
    }
    let class_values: Vec<f64> = values
        .iter()
        .enumerate()
        .filter(|(i, _)| table.classes()[table.class_of(*i as u32)].k_in == k_in)
        .map(|(_, &v)| v)
        .collect();
    if class_values.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    log_binned_mean(&class_values, &class_values, ratio)
}

/// Values sorted descending, paired with their 1-based rank.
pub fn zipf_curve(values: &[f64]) -> Vec<(u64, f64)> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    order
        .into_iter()
        .enumerate()
        .map(|(r, i)| ((r + 1) as u64, values[i]))
        .collect()
}

/// Ordinary least squares of y on x; returns (slope, intercept).
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64), AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalyticsError::DegenerateInput(
            "need at least two samples".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0f64, 0.0f64);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(AnalyticsError::DegenerateInput("x is constant".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
