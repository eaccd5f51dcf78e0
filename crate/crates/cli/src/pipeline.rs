//! Shared load-and-solve plumbing for the analysis subcommands.

use std::path::Path;

use anyhow::{Context, Result};
use rankfield::{
    aggregate_by_class, power_iteration_threaded, solve_class_means, solve_class_variances,
    ConvergenceSpec, DegreeClassTable, DirectedGraph, IngestOptions, MeanFieldSolution,
    NodeMapping, PageRankVector,
};

pub fn load_graph(path: &Path) -> Result<(DirectedGraph, NodeMapping)> {
    rankfield::read_edge_list_path(path, IngestOptions::default())
        .with_context(|| format!("reading edge list {}", path.display()))
}

/// Everything the class-level analyses need from one graph.
pub struct SolvedClasses {
    pub graph: DirectedGraph,
    pub table: DegreeClassTable,
    pub pagerank: PageRankVector,
    pub means: MeanFieldSolution,
    pub variances: MeanFieldSolution,
    pub empirical: MeanFieldSolution,
}

pub fn solve_classes(
    graph: DirectedGraph,
    q: f64,
    spec: &ConvergenceSpec,
    threads: usize,
) -> Result<SolvedClasses> {
    let table = graph.class_partition();
    let pagerank = power_iteration_threaded(&graph, q, spec, threads)?;
    let means = solve_class_means(&graph, &table, q, spec)?;
    let variances = solve_class_variances(&graph, &table, q, spec, &means)?;
    let empirical = aggregate_by_class(&pagerank.values, &table)?;
    Ok(SolvedClasses {
        graph,
        table,
        pagerank,
        means,
        variances,
        empirical,
    })
}

impl SolvedClasses {
    /// Per-class table: solved and empirical means and variances.
    pub fn write_class_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "k_in,k_out,count,p_mf,p_empirical,sigma2_mf,sigma2_empirical"
        )?;
        let var_mf = self.variances.variances.as_ref().unwrap();
        let var_emp = self.empirical.variances.as_ref().unwrap();
        for (c, class) in self.table.classes().iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                class.k_in,
                class.k_out,
                self.table.counts()[c],
                self.means.means[c],
                self.empirical.means[c],
                var_mf[c],
                var_emp[c],
            )?;
        }
        Ok(())
    }
}
