//! `reproduce`: one seeded run of the whole benchmark pipeline, writing the
//! figure-ready CSVs and a metrics summary with pass/fail per check.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;

use rankfield::{
    evaluate_pipeline, log_binned_mean, pearson, per_class_distribution, web_like_spec,
    zipf_curve, ConvergenceSpec, UncorrelatedModel,
};

use crate::output::{self, cell, emit_summary};
use crate::pipeline::{solve_classes, SolvedClasses};

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    nodes: usize,
    /// Directory for every artifact (created if missing).
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(short, long, default_value_t = 0.15)]
    q: f64,
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1.3)]
    bin_ratio: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

pub fn run(args: ReproduceArgs) -> Result<()> {
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let path = |name: &str| args.out_dir.join(name);

    let spec = web_like_spec(args.nodes, args.seed);
    let generated = rankfield::generate(&spec)?;
    generated
        .graph
        .write_edge_list(output::create(&path("edges.txt"))?)?;

    let conv = ConvergenceSpec::new(args.tolerance, args.max_iterations)?;
    let solved = solve_classes(generated.graph, args.q, &conv, args.threads)?;
    let model = UncorrelatedModel::from_graph(&solved.graph, args.q)?;
    let metrics = evaluate_pipeline(
        &solved.graph,
        &solved.table,
        &solved.pagerank,
        &solved.means,
        &solved.variances,
        &solved.empirical,
        &model,
        args.bin_ratio,
    );

    let provenance = json!({
        "spec": spec,
        "seed": args.seed,
        "nodes": solved.graph.node_count(),
        "edges": solved.graph.edge_count(),
        "requested_edges": generated.requested_edges,
        "dropped_edges": generated.dropped_edges,
        "realized_mean_in_degree": solved.graph.mean_in_degree().ok(),
        "edge_degree_correlation": metrics.edge_degree_correlation,
        "dangling_nodes": solved.graph.dangling_count(),
    });
    {
        let mut w = output::create(&path("sidecar.json"))?;
        writeln!(w, "{provenance:#}")?;
    }

    output::write_pagerank_csv(
        output::create(&path("pagerank.csv"))?,
        &solved.pagerank.values,
    )?;

    // Value distribution histogram.
    let hist = log_binned_mean(&solved.pagerank.values, &solved.pagerank.values, args.bin_ratio)?;
    output::write_histogram_csv(
        output::create(&path("fig1_distribution.csv"))?,
        "pagerank",
        &hist,
    )?;

    // Per-class mean-field vs empirical table.
    solved.write_class_csv(output::create(&path("fig2_class_means.csv"))?)?;

    // Binned mean PageRank vs in-degree with the closed-form line.
    let (xs, ys) = in_degree_series(&solved);
    let binned = log_binned_mean(&xs, &ys, args.bin_ratio)?;
    {
        let mut w = output::create(&path("fig3_mean_vs_indegree.csv"))?;
        writeln!(w, "k_in,count,pagerank_mean,closed_form_mean")?;
        for b in 0..binned.bin_count() {
            let closed = if binned.counts[b] > 0 {
                model.mean(binned.mean_x[b])
            } else {
                f64::NAN
            };
            writeln!(
                w,
                "{},{},{},{}",
                cell(binned.mean_x[b]),
                binned.counts[b],
                cell(binned.mean_y[b]),
                cell(closed),
            )?;
        }
    }

    // Coefficient of variation per bin.
    let rows = cov_rows(&solved, &model, args.bin_ratio)?;
    write_cov_csv(output::create(&path("fig4_cov_vs_indegree.csv"))?, &rows)?;

    // Within-class distributions for representative in-degrees.
    {
        let mut w = output::create(&path("fig5_class_distributions.csv"))?;
        writeln!(w, "k_in,pagerank_bin_low,pagerank_bin_high,count,density")?;
        for k in [1u32, 10, 100] {
            let Ok(hist) =
                per_class_distribution(&solved.pagerank.values, &solved.table, k, args.bin_ratio)
            else {
                continue;
            };
            for b in 0..hist.bin_count() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    k,
                    hist.edges[b],
                    hist.edges[b + 1],
                    hist.counts[b],
                    cell(hist.density(b)),
                )?;
            }
        }
    }

    // Rank-ordered curve.
    {
        let mut w = output::create(&path("fig6_zipf.csv"))?;
        writeln!(w, "rank,pagerank")?;
        for (r, v) in zipf_curve(&solved.pagerank.values) {
            writeln!(w, "{r},{v}")?;
        }
    }

    let summary = json!({
        "command": "reproduce",
        "config": {
            "seed": args.seed,
            "nodes": args.nodes,
            "out_dir": args.out_dir,
            "q": args.q,
            "tolerance": args.tolerance,
            "max_iterations": args.max_iterations,
            "bin_ratio": args.bin_ratio,
            "threads": args.threads,
        },
        "generator": provenance,
        "files": [
            "edges.txt", "sidecar.json", "pagerank.csv",
            "fig1_distribution.csv", "fig2_class_means.csv",
            "fig3_mean_vs_indegree.csv", "fig4_cov_vs_indegree.csv",
            "fig5_class_distributions.csv", "fig6_zipf.csv",
        ],
        "metrics": metrics,
        "all_pass": metrics.all_pass,
    });
    {
        let mut w = output::create(&path("summary.json"))?;
        writeln!(w, "{summary:#}")?;
    }
    emit_summary(&summary);
    Ok(())
}

fn in_degree_series(solved: &SolvedClasses) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&k, &v) in solved
        .graph
        .in_degrees()
        .iter()
        .zip(&solved.pagerank.values)
    {
        if k >= 1 {
            xs.push(k as f64);
            ys.push(v);
        }
    }
    (xs, ys)
}

pub struct CovRow {
    pub k_in: f64,
    pub count: u64,
    pub empirical: f64,
    pub recursion: f64,
    pub closed_form: f64,
    pub large_k: f64,
}

/// Per-bin coefficient of variation: empirical spread, the fluctuation
/// recursion pooled over the bin's classes, and the two closed forms.
pub fn cov_rows(
    solved: &SolvedClasses,
    model: &UncorrelatedModel,
    bin_ratio: f64,
) -> Result<Vec<CovRow>> {
    use rankfield::CovForm;

    let (xs, ys) = in_degree_series(solved);
    let binned = log_binned_mean(&xs, &ys, bin_ratio)?;
    let bins = binned.bin_count();
    let x_min = binned.edges[0];
    let log_ratio = bin_ratio.ln();

    let vars = solved.variances.variances.as_ref().unwrap();
    let mut pooled_var = vec![0.0f64; bins];
    let mut pooled_mean = vec![0.0f64; bins];
    let mut weight = vec![0.0f64; bins];
    for (c, class) in solved.table.classes().iter().enumerate() {
        let k = class.k_in as f64;
        if k < x_min {
            continue;
        }
        let b = (((k / x_min).ln() / log_ratio).floor().max(0.0) as usize).min(bins - 1);
        let w = solved.table.counts()[c] as f64;
        pooled_var[b] += w * vars[c];
        pooled_mean[b] += w * solved.means.means[c];
        weight[b] += w;
    }

    let mut rows = Vec::new();
    for b in 0..bins {
        if binned.counts[b] == 0 {
            continue;
        }
        let k = binned.mean_x[b];
        let empirical = binned.var_y[b].sqrt() / binned.mean_y[b];
        let recursion = if weight[b] > 0.0 && pooled_mean[b] > 0.0 {
            (pooled_var[b] / weight[b]).sqrt() / (pooled_mean[b] / weight[b])
        } else {
            f64::NAN
        };
        let closed_form = model
            .coefficient_of_variation(k, CovForm::Exact)
            .unwrap_or(f64::NAN);
        let large_k = model
            .coefficient_of_variation(k, CovForm::LargeK)
            .unwrap_or(f64::NAN);
        rows.push(CovRow {
            k_in: k,
            count: binned.counts[b],
            empirical,
            recursion,
            closed_form,
            large_k,
        });
    }
    Ok(rows)
}

pub fn write_cov_csv<W: Write>(mut w: W, rows: &[CovRow]) -> Result<()> {
    writeln!(
        w,
        "k_in,count,cov_empirical,cov_recursion,cov_closed_form,cov_large_k"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.k_in,
            r.count,
            cell(r.empirical),
            cell(r.recursion),
            cell(r.closed_form),
            cell(r.large_k),
        )?;
    }
    Ok(())
}

/// Monotone-trend score of the empirical CoV over the well-populated bins.
pub fn cov_spearman(rows: &[CovRow]) -> Option<f64> {
    let filtered: Vec<&CovRow> = rows.iter().filter(|r| r.count >= 100).collect();
    if filtered.len() < 2 {
        return None;
    }
    let ranks = |values: &[f64]| -> Vec<f64> {
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
    };
    let k: Vec<f64> = filtered.iter().map(|r| r.k_in).collect();
    let cov: Vec<f64> = filtered.iter().map(|r| r.empirical).collect();
    pearson(&ranks(&k), &ranks(&cov)).ok()
}
