//! Scores a full synthetic-benchmark pipeline run against the toolkit's
//! published consistency targets and packages the numbers for serialization.
//!
//! The checks mirror what the analysis is supposed to deliver on an
//! uncorrelated graph: fast convergence, class means matching both the
//! recursion and the closed form, a heavy-tailed value distribution with the
//! in-degree exponent, shrinking relative fluctuations, and a Zipf curve
//! consistent with the fitted exponent.

use serde::Serialize;

use crate::analytics;
use crate::graph::{DegreeClassTable, DirectedGraph};
use crate::meanfield::{MeanFieldSolution, UncorrelatedModel, VarianceForm};
use crate::pagerank::PageRankVector;

/// One scored quantity with its acceptance threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Metric {
    fn at_most(value: f64, threshold: f64) -> Self {
        Self {
            value,
            threshold,
            pass: value <= threshold && value.is_finite(),
        }
    }

    fn at_least(value: f64, threshold: f64) -> Self {
        Self {
            value,
            threshold,
            pass: value >= threshold && value.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineMetrics {
    pub nodes: usize,
    pub edges: usize,
    pub mean_in_degree: f64,
    pub dangling_nodes: usize,

    pub pagerank_sum_error: Metric,
    pub pagerank_floor_ok: bool,
    pub pagerank_iterations: Metric,
    pub meanfield_iterations: Metric,

    pub meanfield_median_rel_error: Metric,
    pub meanfield_log_pearson: Metric,
    pub closed_form_binned_max_rel_error: Metric,

    pub pagerank_tail_exponent: f64,
    pub pagerank_tail_exponent_ok: bool,

    pub cov_spearman: Metric,
    pub variance_binned_max_rel_dev: Metric,
    pub variance_clamps: usize,

    pub class1_tail_exponent: Option<f64>,
    pub class1_tail_exponent_ok: bool,
    pub top_bin_mass_within_half: Metric,

    pub zipf_slope: f64,
    pub zipf_slope_deviation: Metric,

    pub edge_degree_correlation: f64,
    pub edge_degree_correlation_ok: bool,
    pub pagerank_indegree_pearson: Metric,

    pub all_pass: bool,
}

/// Minimum bin population for the binned comparisons.
const MIN_BIN_NODES: u64 = 100;
/// Minimum class population for the mean-field scatter comparison.
const MIN_CLASS_NODES: u32 = 100;
/// Minimum bin population for the within-class concentration check.
const MIN_TOP_BIN_NODES: u64 = 200;

/// Evaluates every pipeline metric. `variances` must come from the
/// fluctuation recursion and `empirical` from pooling the exact vector.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_pipeline(
    graph: &DirectedGraph,
    table: &DegreeClassTable,
    pagerank: &PageRankVector,
    means: &MeanFieldSolution,
    variances: &MeanFieldSolution,
    empirical: &MeanFieldSolution,
    model: &UncorrelatedModel,
    bin_ratio: f64,
) -> PipelineMetrics {
    let n = graph.node_count();
    let q = pagerank.q;
    let values = &pagerank.values;

    let sum_error = (pagerank.sum() - 1.0).abs();
    let floor = q / n as f64;
    let floor_ok = values.iter().all(|&v| v >= floor);

    let pagerank_iterations = Metric {
        value: pagerank.iterations as f64,
        threshold: 100.0,
        pass: pagerank.converged && pagerank.iterations < 100,
    };
    let meanfield_iterations = Metric {
        value: means.iterations as f64,
        threshold: 50.0,
        pass: means.converged && means.iterations <= 50,
    };

    // Mean-field scatter against the empirical class averages.
    let mut rel_errors = Vec::new();
    let mut log_mf = Vec::new();
    let mut log_emp = Vec::new();
    for c in 0..table.len() {
        if table.counts()[c] < MIN_CLASS_NODES {
            continue;
        }
        let mf = means.means[c];
        let emp = empirical.means[c];
        rel_errors.push((mf - emp).abs() / emp);
        log_mf.push(mf.ln());
        log_emp.push(emp.ln());
    }
    rel_errors.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let median_rel = if rel_errors.is_empty() {
        f64::NAN
    } else {
        rel_errors[rel_errors.len() / 2]
    };
    let log_pearson = analytics::pearson(&log_mf, &log_emp).unwrap_or(f64::NAN);

    // Node-level series binned by in-degree.
    let k_in: Vec<f64> = graph.in_degrees().iter().map(|&d| d as f64).collect();
    let positive: Vec<(f64, f64)> = k_in
        .iter()
        .zip(values)
        .filter(|(&k, _)| k >= 1.0)
        .map(|(&k, &p)| (k, p))
        .collect();
    let xs: Vec<f64> = positive.iter().map(|&(k, _)| k).collect();
    let ys: Vec<f64> = positive.iter().map(|&(_, p)| p).collect();
    let binned = analytics::log_binned_mean(&xs, &ys, bin_ratio)
        .expect("in-degree binning cannot fail on a non-empty graph");

    let mut closed_form_dev: f64 = 0.0;
    for b in 0..binned.bin_count() {
        if binned.counts[b] < MIN_BIN_NODES || binned.mean_x[b] < 10.0 {
            continue;
        }
        let predicted = model.mean(binned.mean_x[b]);
        closed_form_dev = closed_form_dev.max((binned.mean_y[b] - predicted).abs() / predicted);
    }

    // Tail exponent of the value distribution.
    let beta = analytics::default_x_min(values)
        .and_then(|x_min| analytics::fit_power_law(values, x_min))
        .map(|f| f.exponent)
        .unwrap_or(f64::NAN);
    let beta_ok = (beta - 2.1).abs() <= 0.2;

    // Per-bin coefficient of variation and its trend.
    let mut bin_k = Vec::new();
    let mut bin_cov = Vec::new();
    for b in 0..binned.bin_count() {
        if binned.counts[b] < MIN_BIN_NODES {
            continue;
        }
        bin_k.push(binned.mean_x[b]);
        bin_cov.push(binned.var_y[b].sqrt() / binned.mean_y[b]);
    }
    let cov_trend = spearman(&bin_k, &bin_cov).unwrap_or(f64::NAN);

    // Recursion variances pooled per bin against the closed form.
    let var_dev = binned_variance_deviation(table, variances, model, &binned, bin_ratio);

    // Within-class distribution shape checks.
    let class1: Vec<f64> = graph
        .in_degrees()
        .iter()
        .zip(values)
        .filter(|(&k, _)| k == 1)
        .map(|(_, &p)| p)
        .collect();
    let class1_fit = analytics::fit_power_law_scan(&class1).ok();
    let class1_exponent = class1_fit.map(|f| f.exponent);
    let class1_ok = class1_exponent.is_some_and(|e| e.is_finite() && e > 1.5);

    let top_mass = top_bin_concentration(&binned, &xs, &ys, model);

    // Zipf curve: log value against log rank over the three largest decades
    // of the ranking (rank >= N/1000), regressed as value on rank.
    let ranked = analytics::zipf_curve(values);
    let start = (n / 1000).max(1);
    let lr: Vec<f64> = ranked[start - 1..]
        .iter()
        .map(|&(r, _)| (r as f64).ln())
        .collect();
    let lp: Vec<f64> = ranked[start - 1..].iter().map(|&(_, p)| p.ln()).collect();
    let zipf_slope = analytics::linear_fit(&lr, &lp).map(|(s, _)| s).unwrap_or(f64::NAN);
    let alpha = beta - 1.0;
    let zipf_dev = (zipf_slope - (-1.0 / alpha)).abs();

    let edge_corr = graph.edge_degree_correlation().unwrap_or(f64::NAN);
    let edge_corr_ok = edge_corr.is_finite() && edge_corr.abs() < 0.05;
    let pr_pearson = analytics::pearson(&k_in, values).unwrap_or(f64::NAN);

    let metrics = PipelineMetrics {
        nodes: n,
        edges: graph.edge_count(),
        mean_in_degree: graph.mean_in_degree().unwrap_or(f64::NAN),
        dangling_nodes: graph.dangling_count(),
        pagerank_sum_error: Metric::at_most(sum_error, 1e-12),
        pagerank_floor_ok: floor_ok,
        pagerank_iterations,
        meanfield_iterations,
        meanfield_median_rel_error: Metric::at_most(median_rel, 0.10),
        meanfield_log_pearson: Metric::at_least(log_pearson, 0.95),
        closed_form_binned_max_rel_error: Metric::at_most(closed_form_dev, 0.15),
        pagerank_tail_exponent: beta,
        pagerank_tail_exponent_ok: beta_ok,
        cov_spearman: Metric::at_most(cov_trend, -0.8),
        variance_binned_max_rel_dev: Metric::at_most(var_dev, 0.20),
        variance_clamps: variances.negative_variance_clamps,
        class1_tail_exponent: class1_exponent,
        class1_tail_exponent_ok: class1_ok,
        top_bin_mass_within_half: Metric::at_least(top_mass, 0.5),
        zipf_slope,
        zipf_slope_deviation: Metric::at_most(zipf_dev, 0.15),
        edge_degree_correlation: edge_corr,
        edge_degree_correlation_ok: edge_corr_ok,
        pagerank_indegree_pearson: Metric::at_least(pr_pearson, 0.5),
        all_pass: false,
    };
    finalize(metrics)
}

fn finalize(mut m: PipelineMetrics) -> PipelineMetrics {
    m.all_pass = m.pagerank_sum_error.pass
        && m.pagerank_floor_ok
        && m.pagerank_iterations.pass
        && m.meanfield_iterations.pass
        && m.meanfield_median_rel_error.pass
        && m.meanfield_log_pearson.pass
        && m.closed_form_binned_max_rel_error.pass
        && m.pagerank_tail_exponent_ok
        && m.cov_spearman.pass
        && m.variance_binned_max_rel_dev.pass
        && m.class1_tail_exponent_ok
        && m.top_bin_mass_within_half.pass
        && m.zipf_slope_deviation.pass
        && m.edge_degree_correlation_ok
        && m.pagerank_indegree_pearson.pass;
    m
}

fn binned_variance_deviation(
    table: &DegreeClassTable,
    variances: &MeanFieldSolution,
    model: &UncorrelatedModel,
    binned: &analytics::LogBinnedSeries,
    bin_ratio: f64,
) -> f64 {
    let vars = match &variances.variances {
        Some(v) => v,
        None => return f64::NAN,
    };
    let bins = binned.bin_count();
    let x_min = binned.edges[0];
    let log_ratio = bin_ratio.ln();
    let mut pooled = vec![0.0f64; bins];
    let mut weights = vec![0.0f64; bins];
    for ((class, &count), &var) in table.classes().iter().zip(table.counts()).zip(vars) {
        let k = class.k_in as f64;
        if k < x_min {
            continue;
        }
        let b = (((k / x_min).ln() / log_ratio).floor().max(0.0) as usize).min(bins - 1);
        pooled[b] += count as f64 * var;
        weights[b] += count as f64;
    }
    let mut worst: f64 = 0.0;
    for b in 0..bins {
        if binned.counts[b] < MIN_BIN_NODES || weights[b] == 0.0 {
            continue;
        }
        let recursion = pooled[b] / weights[b];
        if recursion <= 0.0 {
            continue;
        }
        let closed = match model.variance(binned.mean_x[b], VarianceForm::Full) {
            Ok(v) => v,
            Err(_) => return f64::INFINITY,
        };
        worst = worst.max((closed - recursion).abs() / recursion);
    }
    worst
}

/// Fraction of the largest well-populated in-degree bin whose values sit
/// within 50% of the closed-form mean for their own degree.
fn top_bin_concentration(
    binned: &analytics::LogBinnedSeries,
    k_in: &[f64],
    values: &[f64],
    model: &UncorrelatedModel,
) -> f64 {
    let bins = binned.bin_count();
    let mut target = None;
    for b in (0..bins).rev() {
        if binned.counts[b] >= MIN_TOP_BIN_NODES {
            target = Some(b);
            break;
        }
    }
    let Some(b) = target else {
        return f64::NAN;
    };
    let (lo, hi) = (binned.edges[b], binned.edges[b + 1]);
    let mut total = 0u64;
    let mut inside = 0u64;
    for (&k, &p) in k_in.iter().zip(values) {
        let in_bin = if b + 1 == bins {
            k >= lo
        } else {
            k >= lo && k < hi
        };
        if !in_bin {
            continue;
        }
        total += 1;
        let m = model.mean(k);
        if (p - m).abs() <= 0.5 * m {
            inside += 1;
        }
    }
    if total == 0 {
        f64::NAN
    } else {
        inside as f64 / total as f64
    }
}

/// Spearman rank correlation (average ranks on ties). The monotonicity
/// score used by the fluctuation-trend check.
fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let rx = ranks(x);
    let ry = ranks(y);
    analytics::pearson(&rx, &ry).ok()
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j - 1) as f64 / 2.0 + 1.0;
        for &idx in &order[i..j] {
            out[idx] = avg;
        }
        i = j;
    }
    out
}
