//! Subcommand implementations (everything except `reproduce`).

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde_json::json;

use rankfield::{
    calibrate_amplitude, default_x_min, fit_power_law, fit_power_law_discrete,
    fit_power_law_scan, linear_fit, log_binned_mean, marginal_over_out_degree, pearson,
    per_class_distribution, power_iteration_threaded, residual, zipf_curve, DegreeLaw,
    GeneratorSpec, IngestOptions, MultiEdgePolicy, OutDegreeLaw, RankObservation,
    SelfLoopPolicy, UncorrelatedModel,
};

use crate::args::{ModelOpts, SolverOpts};
use crate::output::{self, cell, emit_summary};
use crate::pipeline::{load_graph, solve_classes};

// ---------------------------------------------------------------- ingest

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Edge-list file, plain text or gzip.
    #[arg(long)]
    input: PathBuf,
    /// Normalized (dense-id) edge list destination.
    #[arg(long)]
    output: PathBuf,
    /// Write the "original_id dense_id" map here.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Drop repeated (source, target) pairs.
    #[arg(long)]
    dedup: bool,
    /// Drop edges whose source equals their target.
    #[arg(long)]
    drop_self_loops: bool,
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let opts = IngestOptions {
        dedup: args.dedup,
        drop_self_loops: args.drop_self_loops,
    };
    let (graph, mapping) = rankfield::read_edge_list_path(&args.input, opts)
        .with_context(|| format!("reading edge list {}", args.input.display()))?;
    graph.write_edge_list(output::create(&args.output)?)?;
    if let Some(path) = &args.mapping {
        mapping.write(output::create(path)?)?;
    }
    emit_summary(&json!({
        "command": "ingest",
        "config": {
            "input": args.input,
            "output": args.output,
            "mapping": args.mapping,
            "dedup": args.dedup,
            "drop_self_loops": args.drop_self_loops,
        },
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "mean_in_degree": graph.mean_in_degree().ok(),
        "dangling_nodes": graph.dangling_count(),
        "ids_were_dense": mapping.is_identity(),
    }));
    Ok(())
}

// -------------------------------------------------------------- generate

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum OutLawKind {
    /// Out-degrees are a seeded permutation of the in-degree sequence.
    Shuffle,
    PowerLaw,
    Constant,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum PolicyArg {
    Allow,
    Reject,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    seed: u64,
    /// Edge-list destination.
    #[arg(long)]
    output: PathBuf,
    /// Provenance JSON (spec, seed, realized statistics).
    #[arg(long)]
    sidecar: Option<PathBuf>,

    #[arg(long, default_value_t = 2.1)]
    gamma_in: f64,
    #[arg(long, default_value_t = 1)]
    min_in: u32,
    /// In-degree cap; defaults to floor(sqrt(nodes)).
    #[arg(long)]
    max_in: Option<u32>,
    /// Zipf-Mandelbrot head shift of the in-degree law.
    #[arg(long, default_value_t = 0.0)]
    shift_in: f64,

    #[arg(long, value_enum, default_value_t = OutLawKind::Shuffle)]
    out_law: OutLawKind,
    #[arg(long, default_value_t = 2.1)]
    gamma_out: f64,
    #[arg(long, default_value_t = 1)]
    min_out: u32,
    #[arg(long)]
    max_out: Option<u32>,
    #[arg(long, default_value_t = 0.0)]
    shift_out: f64,
    /// Constant out-degree (with --out-law constant).
    #[arg(long)]
    constant_out: Option<u32>,

    #[arg(long, value_enum, default_value_t = PolicyArg::Allow)]
    multi_edges: PolicyArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::Allow)]
    self_loops: PolicyArg,
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let out_law = match args.out_law {
        OutLawKind::Shuffle => OutDegreeLaw::ShuffleOfIn,
        OutLawKind::PowerLaw => OutDegreeLaw::Law(DegreeLaw::PowerLaw {
            exponent: args.gamma_out,
            min_degree: args.min_out,
            max_degree: args.max_out,
            shift: args.shift_out,
        }),
        OutLawKind::Constant => {
            let k = args
                .constant_out
                .context("--out-law constant requires --constant-out")?;
            OutDegreeLaw::Law(DegreeLaw::Constant(k))
        }
    };
    let spec = GeneratorSpec {
        node_count: args.nodes,
        in_law: DegreeLaw::PowerLaw {
            exponent: args.gamma_in,
            min_degree: args.min_in,
            max_degree: args.max_in,
            shift: args.shift_in,
        },
        out_law,
        seed: args.seed,
        multi_edges: match args.multi_edges {
            PolicyArg::Allow => MultiEdgePolicy::Allow,
            PolicyArg::Reject => MultiEdgePolicy::Reject,
        },
        self_loops: match args.self_loops {
            PolicyArg::Allow => SelfLoopPolicy::Allow,
            PolicyArg::Reject => SelfLoopPolicy::Reject,
        },
    };
    let edge_file = output::create(&args.output)?;
    let sidecar_file = args.sidecar.as_ref().map(|p| output::create(p)).transpose()?;
    let generated = rankfield::generate(&spec)?;
    let graph = &generated.graph;
    graph.write_edge_list(edge_file)?;

    let provenance = json!({
        "spec": spec,
        "seed": args.seed,
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "requested_edges": generated.requested_edges,
        "dropped_edges": generated.dropped_edges,
        "realized_mean_in_degree": graph.mean_in_degree().ok(),
        "edge_degree_correlation": graph.edge_degree_correlation().ok(),
        "dangling_nodes": graph.dangling_count(),
    });
    if let Some(mut w) = sidecar_file {
        writeln!(w, "{provenance:#}")?;
    }
    emit_summary(&json!({
        "command": "generate",
        "config": { "output": args.output, "sidecar": args.sidecar },
        "provenance": provenance,
    }));
    Ok(())
}

// -------------------------------------------------------------- pagerank

#[derive(Args, Debug)]
pub struct PagerankArgs {
    #[arg(long)]
    input: PathBuf,
    /// CSV destination; omitted = CSV on stdout, summary on stderr.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverOpts,
}

pub fn pagerank(args: PagerankArgs) -> Result<()> {
    let out_file = args.output.as_ref().map(|p| output::create(p)).transpose()?;
    let (graph, _) = load_graph(&args.input)?;
    let spec = args.solver.spec()?;
    let pr = power_iteration_threaded(&graph, args.solver.q, &spec, args.solver.threads)?;
    let summary = json!({
        "command": "pagerank",
        "config": {
            "input": args.input,
            "output": args.output,
            "solver": args.solver.config_json(),
        },
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "iterations": pr.iterations,
        "converged": pr.converged,
        "residual": residual(&graph, pr.q, &pr.values),
        "q": pr.q,
        "sum": pr.sum(),
    });
    match out_file {
        Some(file) => {
            output::write_pagerank_csv(file, &pr.values)?;
            emit_summary(&summary);
        }
        None => {
            let stdout = std::io::stdout();
            output::write_pagerank_csv(stdout.lock(), &pr.values)?;
            eprintln!("{summary:#}");
        }
    }
    Ok(())
}

// ------------------------------------------------------------- meanfield

#[derive(Args, Debug)]
pub struct MeanfieldArgs {
    #[arg(long)]
    input: PathBuf,
    /// Per-class CSV destination.
    #[arg(long)]
    classes: Option<PathBuf>,
    /// Marginal-over-out-degree CSV destination.
    #[arg(long)]
    marginal: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverOpts,
}

pub fn meanfield(args: MeanfieldArgs) -> Result<()> {
    let classes_file = args.classes.as_ref().map(|p| output::create(p)).transpose()?;
    let marginal_file = args.marginal.as_ref().map(|p| output::create(p)).transpose()?;
    let (graph, _) = load_graph(&args.input)?;
    let spec = args.solver.spec()?;
    let solved = solve_classes(graph, args.solver.q, &spec, args.solver.threads)?;

    if let Some(file) = classes_file {
        solved.write_class_csv(file)?;
    }
    if let Some(mut w) = marginal_file {
        writeln!(w, "k_in,count,p_mf,p_empirical,sigma2_mf,sigma2_empirical")?;
        let mf = marginal_over_out_degree(&solved.variances, &solved.table);
        let emp = marginal_over_out_degree(&solved.empirical, &solved.table);
        for (row_mf, row_emp) in mf.iter().zip(&emp) {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                row_mf.0,
                row_mf.1,
                row_mf.2,
                row_emp.2,
                cell(row_mf.3.unwrap_or(f64::NAN)),
                cell(row_emp.3.unwrap_or(f64::NAN)),
            )?;
        }
    }
    emit_summary(&json!({
        "command": "meanfield",
        "config": {
            "input": args.input,
            "classes": args.classes,
            "marginal": args.marginal,
            "solver": args.solver.config_json(),
        },
        "nodes": solved.graph.node_count(),
        "edges": solved.graph.edge_count(),
        "classes": solved.table.len(),
        "pagerank_iterations": solved.pagerank.iterations,
        "meanfield_iterations": solved.means.iterations,
        "variance_iterations": solved.variances.iterations,
        "converged": solved.means.converged && solved.variances.converged && solved.pagerank.converged,
        "variance_clamps": solved.variances.negative_variance_clamps,
        "weighted_sum": solved.means.weighted_sum(&solved.table),
    }));
    Ok(())
}

// ---------------------------------------------------------- fluctuations

#[derive(Args, Debug)]
pub struct FluctuationsArgs {
    #[arg(long)]
    input: PathBuf,
    /// Per-bin coefficient-of-variation CSV destination.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1.3)]
    bin_ratio: f64,
    #[command(flatten)]
    solver: SolverOpts,
}

pub fn fluctuations(args: FluctuationsArgs) -> Result<()> {
    let out_file = args.output.as_ref().map(|p| output::create(p)).transpose()?;
    let (graph, _) = load_graph(&args.input)?;
    let spec = args.solver.spec()?;
    let solved = solve_classes(graph, args.solver.q, &spec, args.solver.threads)?;
    let model = UncorrelatedModel::from_graph(&solved.graph, args.solver.q)?;

    let rows = crate::reproduce::cov_rows(&solved, &model, args.bin_ratio)?;
    if let Some(file) = out_file {
        crate::reproduce::write_cov_csv(file, &rows)?;
    }
    let trend = crate::reproduce::cov_spearman(&rows);
    emit_summary(&json!({
        "command": "fluctuations",
        "config": {
            "input": args.input,
            "output": args.output,
            "bin_ratio": args.bin_ratio,
            "solver": args.solver.config_json(),
        },
        "bins": rows.len(),
        "cov_spearman": trend,
        "variance_iterations": solved.variances.iterations,
        "variance_clamps": solved.variances.negative_variance_clamps,
        "converged": solved.variances.converged,
    }));
    Ok(())
}

// ------------------------------------------------------------------ stats

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    /// PageRank histogram CSV destination.
    #[arg(long)]
    distribution: Option<PathBuf>,
    /// Binned PageRank-vs-in-degree CSV destination.
    #[arg(long)]
    binned: Option<PathBuf>,
    /// In-degrees whose within-class histogram to emit.
    #[arg(long = "class-k-in")]
    class_k_in: Vec<u32>,
    /// Stacked within-class histogram CSV destination.
    #[arg(long)]
    class_dist: Option<PathBuf>,
    /// Tail start for the PageRank exponent fit (default: 1st percentile).
    #[arg(long, conflicts_with = "scan")]
    x_min: Option<f64>,
    /// Pick the tail start by scanning for the best fit instead.
    #[arg(long)]
    scan: bool,
    #[arg(long, default_value_t = 1.3)]
    bin_ratio: f64,
    #[command(flatten)]
    solver: SolverOpts,
}

pub fn stats(args: StatsArgs) -> Result<()> {
    if args.class_dist.is_some() && args.class_k_in.is_empty() {
        bail!("--class-dist requires at least one --class-k-in");
    }
    let dist_file = args
        .distribution
        .as_ref()
        .map(|p| output::create(p))
        .transpose()?;
    let binned_file = args.binned.as_ref().map(|p| output::create(p)).transpose()?;
    let class_file = args
        .class_dist
        .as_ref()
        .map(|p| output::create(p))
        .transpose()?;
    let (graph, _) = load_graph(&args.input)?;
    let spec = args.solver.spec()?;
    let pr = power_iteration_threaded(&graph, args.solver.q, &spec, args.solver.threads)?;
    let table = graph.class_partition();

    let beta_fit = if args.scan {
        fit_power_law_scan(&pr.values)
    } else {
        let x_min = match args.x_min {
            Some(x) => x,
            None => default_x_min(&pr.values)?,
        };
        fit_power_law(&pr.values, x_min)
    };
    let in_degrees: Vec<u64> = graph.in_degrees().iter().map(|&d| d as u64).collect();
    let min_in = in_degrees.iter().copied().filter(|&d| d > 0).min();
    let degree_fit = min_in.and_then(|m| fit_power_law_discrete(&in_degrees, m).ok());

    let k_in_f: Vec<f64> = graph.in_degrees().iter().map(|&d| d as f64).collect();
    let pr_degree_pearson = pearson(&k_in_f, &pr.values).ok();
    let edge_corr = graph.edge_degree_correlation().ok();

    if let Some(file) = dist_file {
        let hist = log_binned_mean(&pr.values, &pr.values, args.bin_ratio)?;
        output::write_histogram_csv(file, "pagerank", &hist)?;
    }
    if let Some(mut w) = binned_file {
        let model = UncorrelatedModel::from_graph(&graph, args.solver.q)?;
        let pairs: Vec<(f64, f64)> = k_in_f
            .iter()
            .zip(&pr.values)
            .filter(|(&k, _)| k >= 1.0)
            .map(|(&k, &p)| (k, p))
            .collect();
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let series = log_binned_mean(&xs, &ys, args.bin_ratio)?;
        writeln!(w, "k_in,count,pagerank_mean,closed_form_mean")?;
        for b in 0..series.bin_count() {
            writeln!(
                w,
                "{},{},{},{}",
                cell(series.mean_x[b]),
                series.counts[b],
                cell(series.mean_y[b]),
                cell(if series.counts[b] > 0 {
                    model.mean(series.mean_x[b])
                } else {
                    f64::NAN
                }),
            )?;
        }
    }
    if let Some(mut w) = class_file {
        writeln!(w, "k_in,pagerank_bin_low,pagerank_bin_high,count,density")?;
        for &k in &args.class_k_in {
            let hist = per_class_distribution(&pr.values, &table, k, args.bin_ratio)
                .with_context(|| format!("no nodes with in-degree {k}"))?;
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

    emit_summary(&json!({
        "command": "stats",
        "config": {
            "input": args.input,
            "distribution": args.distribution,
            "binned": args.binned,
            "class_k_in": args.class_k_in,
            "class_dist": args.class_dist,
            "x_min": args.x_min,
            "scan": args.scan,
            "bin_ratio": args.bin_ratio,
            "solver": args.solver.config_json(),
        },
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "mean_in_degree": graph.mean_in_degree().ok(),
        "dangling_nodes": graph.dangling_count(),
        "pagerank_exponent": beta_fit.as_ref().ok().map(|f| json!({
            "exponent": f.exponent,
            "x_min": f.x_min,
            "tail_samples": f.sample_count,
            "ks_distance": f.ks_distance,
        })),
        "pagerank_exponent_error": beta_fit.as_ref().err().map(|e| e.to_string()),
        "in_degree_exponent": degree_fit.map(|f| json!({
            "exponent": f.exponent,
            "x_min": f.x_min,
            "tail_samples": f.sample_count,
            "ks_distance": f.ks_distance,
        })),
        "pagerank_indegree_pearson": pr_degree_pearson,
        "edge_degree_correlation": edge_corr,
    }));
    Ok(())
}

// ------------------------------------------------------------------- zipf

#[derive(Args, Debug)]
pub struct ZipfArgs {
    #[arg(long)]
    input: PathBuf,
    /// rank,pagerank CSV destination; omitted = CSV on stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverOpts,
}

pub fn zipf(args: ZipfArgs) -> Result<()> {
    let out_file = args.output.as_ref().map(|p| output::create(p)).transpose()?;
    let (graph, _) = load_graph(&args.input)?;
    let spec = args.solver.spec()?;
    let pr = power_iteration_threaded(&graph, args.solver.q, &spec, args.solver.threads)?;
    let curve = zipf_curve(&pr.values);

    // Tail slope over the three largest decades of the ranking.
    let start = (curve.len() / 1000).max(1);
    let lr: Vec<f64> = curve[start - 1..]
        .iter()
        .map(|&(r, _)| (r as f64).ln())
        .collect();
    let lp: Vec<f64> = curve[start - 1..].iter().map(|&(_, v)| v.ln()).collect();
    let slope = linear_fit(&lr, &lp).map(|(s, _)| s).ok();

    let write_curve = |mut w: Box<dyn Write>| -> Result<()> {
        writeln!(w, "rank,pagerank")?;
        for &(r, v) in &curve {
            writeln!(w, "{r},{v}")?;
        }
        Ok(())
    };
    let summary = json!({
        "command": "zipf",
        "config": {
            "input": args.input,
            "output": args.output,
            "solver": args.solver.config_json(),
        },
        "nodes": graph.node_count(),
        "tail_slope": slope,
        "implied_alpha": slope.map(|s| -1.0 / s),
        "top_value": curve.first().map(|&(_, v)| v),
    });
    match out_file {
        Some(file) => {
            write_curve(Box::new(file))?;
            emit_summary(&summary);
        }
        None => {
            write_curve(Box::new(std::io::stdout().lock()))?;
            eprintln!("{summary:#}");
        }
    }
    Ok(())
}

// -------------------------------------------------- predict / invert / fit

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// In-link count of the page.
    #[arg(long = "k-in")]
    k_in: u64,
    /// Number of results in the list.
    #[arg(long)]
    hits: u64,
    #[command(flatten)]
    model: ModelOpts,
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let model = args.model.model()?;
    let p = model.expected_pagerank(args.k_in as f64);
    let global = model.global_rank(p)?;
    let local = model.local_rank(global, args.hits);
    emit_summary(&json!({
        "command": "predict",
        "config": { "k_in": args.k_in, "hits": args.hits, "model": model },
        "pagerank": p,
        "global_rank": global,
        "local_rank": local,
    }));
    Ok(())
}

#[derive(Args, Debug)]
pub struct InvertArgs {
    /// Desired position in the list.
    #[arg(long)]
    target_rank: f64,
    /// Number of results in the list.
    #[arg(long)]
    hits: u64,
    #[command(flatten)]
    model: ModelOpts,
}

pub fn invert(args: InvertArgs) -> Result<()> {
    let model = args.model.model()?;
    let k = model.required_inlinks(args.target_rank, args.hits)?;
    emit_summary(&json!({
        "command": "invert",
        "config": { "target_rank": args.target_rank, "hits": args.hits, "model": model },
        "required_k_in": k,
        "predicted_rank_at_k": model.predict_local_rank(k, args.hits),
    }));
    Ok(())
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// CSV of observations: k_in,n,rank (header optional).
    #[arg(long)]
    observations: PathBuf,
    #[command(flatten)]
    model: ModelOpts,
}

pub fn calibrate(args: CalibrateArgs) -> Result<()> {
    let text = fs::read_to_string(&args.observations)
        .with_context(|| format!("reading {}", args.observations.display()))?;
    let mut observations = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            bail!("line {}: expected k_in,n,rank", idx + 1);
        }
        if idx == 0 && fields[0].parse::<u64>().is_err() {
            continue; // header row
        }
        let parse = |s: &str, what: &str| -> Result<u64> {
            s.parse::<u64>()
                .with_context(|| format!("line {}: invalid {what} {s:?}", idx + 1))
        };
        observations.push(RankObservation::new(
            parse(fields[0], "k_in")?,
            parse(fields[1], "n")?,
            parse(fields[2], "rank")?,
        )?);
    }
    let base = args.model.model()?;
    let calibration = calibrate_amplitude(&observations, &base)?;
    emit_summary(&json!({
        "command": "calibrate",
        "config": {
            "observations": args.observations,
            "base_model": base,
        },
        "observation_count": observations.len(),
        "amplitude": calibration.model.amplitude,
        "loss": calibration.loss,
        "model": calibration.model,
    }));
    Ok(())
}
