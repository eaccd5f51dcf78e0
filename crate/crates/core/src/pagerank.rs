//! Exact PageRank by power iteration, with a dense linear-solve oracle.
//!
//! The update is the random-surfer recurrence: with probability `q` the
//! walker jumps to a uniformly random node, otherwise it follows a random
//! out-link; mass sitting on dangling nodes is redistributed uniformly every
//! step. Keeping the dangling term explicit makes every iterate a probability
//! vector, so normalization can be asserted per iteration, and the computed
//! values never fall below the jump floor q/N.

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::DirectedGraph;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("jump probability must satisfy 0 < q < 1, got {0}")]
    InvalidDamping(f64),
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("invalid convergence spec: {0}")]
    InvalidSpec(String),
    #[error("dense solve refused: {0} nodes exceeds the {1}-node guard")]
    TooLargeForDenseSolve(usize, usize),
    #[error("dense system is singular")]
    SingularSystem,
}

/// Stopping rule for the iterative solvers: maximum relative per-vertex
/// change below `tolerance`, or give up after `max_iterations`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSpec {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            max_iterations: 200,
        }
    }
}

impl ConvergenceSpec {
    pub fn new(tolerance: f64, max_iterations: usize) -> Result<Self, SolveError> {
        let spec = Self {
            tolerance,
            max_iterations,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub(crate) fn validate(&self) -> Result<(), SolveError> {
        if !(self.tolerance > 0.0) {
            return Err(SolveError::InvalidSpec(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(SolveError::InvalidSpec(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A normalized PageRank vector together with how it was obtained.
#[derive(Debug, Clone)]
pub struct PageRankVector {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub q: f64,
    /// False when the iteration budget ran out; the values then hold the
    /// last iterate.
    pub converged: bool,
}

impl PageRankVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn check_inputs(g: &DirectedGraph, q: f64) -> Result<(), SolveError> {
    if g.node_count() == 0 {
        return Err(SolveError::EmptyGraph);
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(SolveError::InvalidDamping(q));
    }
    Ok(())
}

/// Runs the power iteration serially.
pub fn power_iteration(
    g: &DirectedGraph,
    q: f64,
    spec: &ConvergenceSpec,
) -> Result<PageRankVector, SolveError> {
    power_iteration_threaded(g, q, spec, 1)
}

/// Runs the power iteration, updating target nodes on up to `threads`
/// worker threads. Each entry is accumulated in a fixed order over the
/// predecessor list, so the result is bit-identical to the serial run.
pub fn power_iteration_threaded(
    g: &DirectedGraph,
    q: f64,
    spec: &ConvergenceSpec,
    threads: usize,
) -> Result<PageRankVector, SolveError> {
    check_inputs(g, q)?;
    spec.validate()?;
    let n = g.node_count();
    let inv_n = 1.0 / n as f64;
    let jump = q * inv_n;
    let follow = 1.0 - q;

    let inv_out: Vec<f64> = g
        .out_degrees()
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
        .collect();
    let dangling: Vec<usize> = (0..n).filter(|&v| g.out_degree(v as u32) == 0).collect();

    let pool = (threads > 1)
        .then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .ok()
        })
        .flatten();

    let mut current = vec![inv_n; n];
    let mut next = vec![0.0f64; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < spec.max_iterations {
        let dangling_mass: f64 = dangling.iter().map(|&v| current[v]).sum();
        let base = jump + follow * dangling_mass * inv_n;

        let update = |(i, out): (usize, &mut f64)| {
            let mut acc = 0.0;
            for &j in g.predecessors(i as u32) {
                acc += current[j as usize] * inv_out[j as usize];
            }
            *out = base + follow * acc;
        };
        match &pool {
            Some(pool) => pool.install(|| {
                next.par_iter_mut().enumerate().for_each(update);
            }),
            None => next.iter_mut().enumerate().for_each(update),
        }

        iterations += 1;
        let mut max_rel: f64 = 0.0;
        for (old, new) in current.iter().zip(&next) {
            if old.abs() > 1e-300 {
                max_rel = max_rel.max(((new - old) / old).abs());
            }
        }
        std::mem::swap(&mut current, &mut next);
        if max_rel < spec.tolerance {
            converged = true;
            break;
        }
    }

    Ok(PageRankVector {
        values: current,
        iterations,
        q,
        converged,
    })
}

/// Node-count guard for the dense oracle.
pub const DENSE_SOLVE_MAX_NODES: usize = 2000;

/// Solves the stationary equations directly as a dense linear system:
/// (I - (1-q) Mᵀ) p = q/N, where M is the surfer transition matrix with
/// uniform rows for dangling nodes. Test oracle for the power iteration;
/// refuses graphs above [`DENSE_SOLVE_MAX_NODES`].
pub fn exact_solve(g: &DirectedGraph, q: f64) -> Result<PageRankVector, SolveError> {
    check_inputs(g, q)?;
    let n = g.node_count();
    if n > DENSE_SOLVE_MAX_NODES {
        return Err(SolveError::TooLargeForDenseSolve(n, DENSE_SOLVE_MAX_NODES));
    }
    let follow = 1.0 - q;
    let inv_n = 1.0 / n as f64;

    let mut a = nalgebra::DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        let d = g.out_degree(j as u32);
        if d == 0 {
            let w = follow * inv_n;
            for i in 0..n {
                a[(i, j)] -= w;
            }
        } else {
            let w = follow / d as f64;
            for &t in g.successors(j as u32) {
                a[(t as usize, j)] -= w;
            }
        }
    }
    let b = nalgebra::DVector::from_element(n, q * inv_n);
    let mut x = a.lu().solve(&b).ok_or(SolveError::SingularSystem)?;
    let total: f64 = x.iter().sum();
    x /= total;

    Ok(PageRankVector {
        values: x.data.into(),
        iterations: 0,
        q,
        converged: true,
    })
}

/// Applies the update once to `values` and returns the maximum relative
/// per-vertex discrepancy; zero (to rounding) exactly at the fixed point.
pub fn residual(g: &DirectedGraph, q: f64, values: &[f64]) -> f64 {
    let n = g.node_count();
    assert_eq!(values.len(), n, "value vector does not match the graph");
    if n == 0 {
        return 0.0;
    }
    let inv_n = 1.0 / n as f64;
    let follow = 1.0 - q;
    let dangling_mass: f64 = (0..n)
        .filter(|&v| g.out_degree(v as u32) == 0)
        .map(|v| values[v])
        .sum();
    let base = q * inv_n + follow * dangling_mass * inv_n;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        for &j in g.predecessors(i as u32) {
            acc += values[j as usize] / g.out_degree(j) as f64;
        }
        let next = base + follow * acc;
        if values[i] > 0.0 {
            worst = worst.max(((next - values[i]) / values[i]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::IngestOptions;

    const Q: f64 = 0.15;

    fn graph(n: usize, edges: &[(u32, u32)]) -> DirectedGraph {
        DirectedGraph::from_edges(n, edges, IngestOptions::default()).unwrap()
    }

    fn assert_probability_vector(pr: &PageRankVector, n: usize) {
        assert!((pr.sum() - 1.0).abs() < 1e-12, "sum {}", pr.sum());
        let floor = pr.q / n as f64;
        for (i, &v) in pr.values.iter().enumerate() {
            assert!(v >= floor, "node {i}: {v} below floor {floor}");
        }
    }

    #[test]
    fn cycle_is_uniform() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let pr = power_iteration(&g, Q, &ConvergenceSpec::default()).unwrap();
        assert!(pr.converged);
        for &v in &pr.values {
            assert!((v - 1.0 / 3.0).abs() < 1e-9);
        }
        assert_probability_vector(&pr, 3);
    }

    #[test]
    fn two_node_chain_matches_hand_solution() {
        // 0 -> 1 with node 1 dangling reduces to a 2x2 system whose solution
        // is (20/57, 37/57).
        let g = graph(2, &[(0, 1)]);
        let spec = ConvergenceSpec::new(1e-12, 1000).unwrap();
        let pr = power_iteration(&g, Q, &spec).unwrap();
        assert!(pr.converged);
        assert!((pr.values[0] - 20.0 / 57.0).abs() < 1e-10);
        assert!((pr.values[1] - 37.0 / 57.0).abs() < 1e-10);

        let exact = exact_solve(&g, Q).unwrap();
        assert!((exact.values[0] - 20.0 / 57.0).abs() < 1e-12);
        assert!((exact.values[1] - 37.0 / 57.0).abs() < 1e-12);
        for (a, b) in pr.values.iter().zip(&exact.values) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn edgeless_graph_is_uniform() {
        let g = graph(5, &[]);
        let pr = power_iteration(&g, Q, &ConvergenceSpec::default()).unwrap();
        assert!(pr.converged);
        assert_eq!(pr.iterations, 1);
        for &v in &pr.values {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_solve_cycle_uniform() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let pr = exact_solve(&g, Q).unwrap();
        for &v in &pr.values {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_solve_guard() {
        let g = graph(2001, &[(0, 1)]);
        assert!(matches!(
            exact_solve(&g, Q),
            Err(SolveError::TooLargeForDenseSolve(2001, _))
        ));
    }

    #[test]
    fn oracle_equivalence_on_seeded_graphs() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..8 {
            let n = rng.random_range(10..60usize);
            let e = rng.random_range(n..4 * n);
            let mut edges = Vec::with_capacity(e);
            for _ in 0..e {
                edges.push((
                    rng.random_range(0..n as u32),
                    rng.random_range(0..n as u32),
                ));
            }
            let g = graph(n, &edges);
            let spec = ConvergenceSpec::new(1e-13, 500).unwrap();
            let pi = power_iteration(&g, Q, &spec).unwrap();
            let es = exact_solve(&g, Q).unwrap();
            assert!(pi.converged);
            let dev = pi
                .values
                .iter()
                .zip(&es.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(dev < 1e-10, "max deviation {dev}");
            assert_probability_vector(&pi, n);
            assert_probability_vector(&es, n);
        }
    }

    #[test]
    fn threaded_run_matches_serial_bitwise() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(7);
        let n = 200usize;
        let mut edges = Vec::new();
        for _ in 0..1000 {
            edges.push((
                rng.random_range(0..n as u32),
                rng.random_range(0..n as u32),
            ));
        }
        let g = graph(n, &edges);
        let spec = ConvergenceSpec::default();
        let serial = power_iteration(&g, Q, &spec).unwrap();
        let parallel = power_iteration_threaded(&g, Q, &spec, 4).unwrap();
        assert_eq!(serial.iterations, parallel.iterations);
        for (a, b) in serial.values.iter().zip(&parallel.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn non_convergence_reports_status() {
        let g = graph(2, &[(0, 1)]);
        let spec = ConvergenceSpec::new(1e-12, 2).unwrap();
        let pr = power_iteration(&g, Q, &spec).unwrap();
        assert!(!pr.converged);
        assert_eq!(pr.iterations, 2);
        assert!((pr.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_is_small_at_fixed_points() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let uniform = vec![1.0 / 3.0; 3];
        assert!(residual(&g, Q, &uniform) < 1e-12);

        let chain = graph(2, &[(0, 1)]);
        let exact = exact_solve(&chain, Q).unwrap();
        assert!(residual(&chain, Q, &exact.values) < 1e-10);
    }

    #[test]
    fn residual_positive_off_fixed_point() {
        let g = graph(4, &[(1, 0), (2, 0), (3, 0)]);
        let uniform = vec![0.25; 4];
        // One application moves mass toward the hub, so the discrepancy at
        // the hub is (new - old)/old > 0.
        assert!(residual(&g, Q, &uniform) > 0.1);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let g = graph(2, &[(0, 1)]);
        assert!(matches!(
            power_iteration(&g, 0.0, &ConvergenceSpec::default()),
            Err(SolveError::InvalidDamping(_))
        ));
        assert!(matches!(
            power_iteration(&g, 1.0, &ConvergenceSpec::default()),
            Err(SolveError::InvalidDamping(_))
        ));
        let empty =
            DirectedGraph::from_edges(0, &[], IngestOptions::default()).unwrap();
        assert!(matches!(
            power_iteration(&empty, Q, &ConvergenceSpec::default()),
            Err(SolveError::EmptyGraph)
        ));
        assert!(ConvergenceSpec::new(0.0, 10).is_err());
        assert!(ConvergenceSpec::new(1e-5, 0).is_err());
    }
}
