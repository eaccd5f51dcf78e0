//! Degree-class mean-field estimates of PageRank and its fluctuations.
//!
//! Instead of tracking every node, nodes are pooled into (k_in, k_out)
//! classes and the recurrence is closed over class averages: each
//! predecessor's value is replaced by the average of its class. The
//! class-to-class transition probabilities are never materialized — the sums
//! are evaluated as empirical averages over the actual predecessor edges,
//! which is both exact and cheap. On networks without degree-degree
//! correlations the fixed point has the closed form
//!
//! ```text
//! p̄(k) = q/N + (1-q) k_in / (N <k_in>)
//! ```
//!
//! independent of k_out, and the within-class variance admits a matching
//! closed form; [`UncorrelatedModel`] evaluates both from graph moments.

use thiserror::Error;

use crate::graph::{DegreeClassTable, DirectedGraph};
use crate::pagerank::ConvergenceSpec;

#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error("jump probability must satisfy 0 < q < 1, got {0}")]
    InvalidDamping(f64),
    #[error("graph has no edges; the class recursion needs at least one")]
    NoEdges,
    #[error("value vector length {0} does not match the class table over {1} nodes")]
    SizeMismatch(usize, usize),
    #[error("class means have not converged; solve the means first")]
    MeansNotConverged,
    #[error("invalid convergence spec: {0}")]
    InvalidSpec(String),
    #[error("uncorrelated closed form is invalid: {0}")]
    ModelInvalid(String),
    #[error("large-k coefficient of variation is undefined at k_in = 0")]
    ZeroInDegree,
}

/// Per-class solution: means always, second moments and variances when the
/// producing operation computes them. Indexed like the class table.
#[derive(Debug, Clone)]
pub struct MeanFieldSolution {
    pub means: Vec<f64>,
    pub second_moments: Option<Vec<f64>>,
    pub variances: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// Negative intermediate variances clamped to zero during the recursion.
    pub negative_variance_clamps: usize,
}

impl MeanFieldSolution {
    /// Class-count-weighted total; 1 for any normalized solution.
    pub fn weighted_sum(&self, table: &DegreeClassTable) -> f64 {
        self.means
            .iter()
            .zip(table.counts())
            .map(|(&m, &c)| m * c as f64)
            .sum()
    }
}

/// Pools an exact per-node vector into class averages, with the empirical
/// within-class variance and second moment alongside.
pub fn aggregate_by_class(
    values: &[f64],
    table: &DegreeClassTable,
) -> Result<MeanFieldSolution, MeanFieldError> {
    if values.len() != table.node_count() {
        return Err(MeanFieldError::SizeMismatch(
            values.len(),
            table.node_count(),
        ));
    }
    let nc = table.len();
    let mut means = vec![0.0f64; nc];
    for (i, &v) in values.iter().enumerate() {
        means[table.class_of(i as u32)] += v;
    }
    for (m, &c) in means.iter_mut().zip(table.counts()) {
        *m /= c as f64;
    }
    let mut variances = vec![0.0f64; nc];
    for (i, &v) in values.iter().enumerate() {
        let c = table.class_of(i as u32);
        let d = v - means[c];
        variances[c] += d * d;
    }
    for (s, &c) in variances.iter_mut().zip(table.counts()) {
        *s /= c as f64;
    }
    let second = means
        .iter()
        .zip(&variances)
        .map(|(&m, &v)| v + m * m)
        .collect();
    Ok(MeanFieldSolution {
        means,
        second_moments: Some(second),
        variances: Some(variances),
        iterations: 0,
        converged: true,
        negative_variance_clamps: 0,
    })
}

struct ClassContext<'a> {
    g: &'a DirectedGraph,
    table: &'a DegreeClassTable,
    /// Total in-edges per class: count * k_in.
    in_edges: Vec<f64>,
    /// Classes with k_out == 0 (their mass is redistributed uniformly).
    dangling: Vec<usize>,
}

impl<'a> ClassContext<'a> {
    fn new(
        g: &'a DirectedGraph,
        table: &'a DegreeClassTable,
        q: f64,
    ) -> Result<Self, MeanFieldError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(MeanFieldError::InvalidDamping(q));
        }
        if g.edge_count() == 0 {
            return Err(MeanFieldError::NoEdges);
        }
        if g.node_count() != table.node_count() {
            return Err(MeanFieldError::SizeMismatch(
                table.node_count(),
                g.node_count(),
            ));
        }
        let in_edges = table
            .classes()
            .iter()
            .zip(table.counts())
            .map(|(cl, &cnt)| cnt as f64 * cl.k_in as f64)
            .collect();
        let dangling = table
            .classes()
            .iter()
            .enumerate()
            .filter(|(_, cl)| cl.k_out == 0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            g,
            table,
            in_edges,
            dangling,
        })
    }

    /// acc[class(i)] += f(class(j), j) over every edge j -> i.
    fn sweep_edges(&self, acc: &mut [f64], f: impl Fn(usize, u32) -> f64) {
        acc.fill(0.0);
        for i in 0..self.g.node_count() as u32 {
            let ci = self.table.class_of(i);
            let mut sum = 0.0;
            for &j in self.g.predecessors(i) {
                sum += f(self.table.class_of(j), j);
            }
            acc[ci] += sum;
        }
    }

    fn max_relative_change(old: &[f64], new: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (&o, &n) in old.iter().zip(new) {
            if o.abs() > 1e-300 {
                worst = worst.max(((n - o) / o).abs());
            } else if n.abs() > 1e-300 {
                worst = worst.max(1.0);
            }
        }
        worst
    }
}

/// Iterates the class-average recurrence to its fixed point.
///
/// Starting from the constant 1/N, each step sets
/// `p̄(k) = q/N + (1-q) k_in * avg(p̄(k') / k'_out)` with the average taken
/// over the actual predecessor edges of the class, adds the uniformly
/// redistributed mass of dangling classes, and renormalizes the
/// count-weighted total to one. When every class is a singleton this is
/// exactly the per-node update, so the fixed point reproduces exact
/// PageRank.
pub fn solve_class_means(
    g: &DirectedGraph,
    table: &DegreeClassTable,
    q: f64,
    spec: &ConvergenceSpec,
) -> Result<MeanFieldSolution, MeanFieldError> {
    spec.validate()
        .map_err(|e| MeanFieldError::InvalidSpec(e.to_string()))?;
    let ctx = ClassContext::new(g, table, q)?;
    let n = g.node_count() as f64;
    let nc = table.len();
    let follow = 1.0 - q;

    let mut means = vec![1.0 / n; nc];
    let mut acc = vec![0.0f64; nc];
    let mut iterations = 0;
    let mut converged = false;
    let inv_out: Vec<f64> = g
        .out_degrees()
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
        .collect();

    while iterations < spec.max_iterations {
        let current = &means;
        ctx.sweep_edges(&mut acc, |cj, j| current[cj] * inv_out[j as usize]);
        let dangling_mass: f64 = ctx
            .dangling
            .iter()
            .map(|&c| table.counts()[c] as f64 * current[c])
            .sum();
        let base = q / n + follow * dangling_mass / n;
        let mut next: Vec<f64> = (0..nc)
            .map(|c| {
                let cnt = table.counts()[c] as f64;
                base + follow * acc[c] / cnt
            })
            .collect();
        let total: f64 = next
            .iter()
            .zip(table.counts())
            .map(|(&m, &c)| m * c as f64)
            .sum();
        for m in &mut next {
            *m /= total;
        }
        iterations += 1;
        let worst = ClassContext::max_relative_change(&means, &next);
        means = next;
        if worst < spec.tolerance {
            converged = true;
            break;
        }
    }

    Ok(MeanFieldSolution {
        means,
        second_moments: None,
        variances: None,
        iterations,
        converged,
        negative_variance_clamps: 0,
    })
}

/// Iterates the within-class variance recurrence to its fixed point, given
/// converged class means.
///
/// Writing s(k') for a predecessor's squared edge weight 1/k'_out², each
/// step sets
///
/// ```text
/// σ²(k) = (1-q)² k_in [ avg(σ²(k')/k'_out²)
///                     + avg(p̄(k')²/k'_out²) - avg(p̄(k')/k'_out)² ]
/// ```
///
/// with averages over the class's predecessor edges. The last two terms are
/// constant across iterations and are precomputed. Negative intermediates
/// (impossible in exact arithmetic, guarded anyway) are clamped to zero and
/// counted.
pub fn solve_class_variances(
    g: &DirectedGraph,
    table: &DegreeClassTable,
    q: f64,
    spec: &ConvergenceSpec,
    means: &MeanFieldSolution,
) -> Result<MeanFieldSolution, MeanFieldError> {
    spec.validate()
        .map_err(|e| MeanFieldError::InvalidSpec(e.to_string()))?;
    if !means.converged {
        return Err(MeanFieldError::MeansNotConverged);
    }
    if means.means.len() != table.len() {
        return Err(MeanFieldError::SizeMismatch(means.means.len(), table.len()));
    }
    let ctx = ClassContext::new(g, table, q)?;
    let nc = table.len();
    let follow_sq = (1.0 - q) * (1.0 - q);
    let m = &means.means;
    let inv_out: Vec<f64> = g
        .out_degrees()
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / d as f64 })
        .collect();

    // Constant part: (1-q)^2 k_in (avg((p̄/k_out)²) - avg(p̄/k_out)²).
    let mut acc = vec![0.0f64; nc];
    ctx.sweep_edges(&mut acc, |cj, j| m[cj] * inv_out[j as usize]);
    let s1: Vec<f64> = (0..nc)
        .map(|c| {
            if ctx.in_edges[c] > 0.0 {
                acc[c] / ctx.in_edges[c]
            } else {
                0.0
            }
        })
        .collect();
    ctx.sweep_edges(&mut acc, |cj, j| {
        let w = m[cj] * inv_out[j as usize];
        w * w
    });
    let base: Vec<f64> = (0..nc)
        .map(|c| {
            if ctx.in_edges[c] > 0.0 {
                let k_in = table.classes()[c].k_in as f64;
                follow_sq * k_in * (acc[c] / ctx.in_edges[c] - s1[c] * s1[c])
            } else {
                0.0
            }
        })
        .collect();

    let mut variances = vec![0.0f64; nc];
    let mut iterations = 0;
    let mut converged = false;
    let mut clamps = 0usize;

    while iterations < spec.max_iterations {
        let current = &variances;
        ctx.sweep_edges(&mut acc, |cj, j| {
            let w = inv_out[j as usize];
            current[cj] * w * w
        });
        let next: Vec<f64> = (0..nc)
            .map(|c| {
                if ctx.in_edges[c] <= 0.0 {
                    return 0.0;
                }
                let k_in = table.classes()[c].k_in as f64;
                let v = follow_sq * k_in * (acc[c] / ctx.in_edges[c]) + base[c];
                if v < 0.0 {
                    clamps += 1;
                    0.0
                } else {
                    v
                }
            })
            .collect();
        iterations += 1;
        let worst = ClassContext::max_relative_change(&variances, &next);
        variances = next;
        if worst < spec.tolerance {
            converged = true;
            break;
        }
    }

    let second = means
        .means
        .iter()
        .zip(&variances)
        .map(|(&mu, &v)| v + mu * mu)
        .collect();
    Ok(MeanFieldSolution {
        means: means.means.clone(),
        second_moments: Some(second),
        variances: Some(variances),
        iterations,
        converged,
        negative_variance_clamps: clamps,
    })
}

/// Marginal over out-degree: count-weighted class averages keyed by k_in
/// alone, as `(k_in, node count, mean, variance)` sorted by k_in. The
/// variance column is the count-weighted average of the per-class values
/// when the solution carries them.
pub fn marginal_over_out_degree(
    solution: &MeanFieldSolution,
    table: &DegreeClassTable,
) -> Vec<(u32, u32, f64, Option<f64>)> {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<u32, (u64, f64, f64)> = BTreeMap::new();
    for (c, class) in table.classes().iter().enumerate() {
        let cnt = table.counts()[c] as u64;
        let entry = acc.entry(class.k_in).or_insert((0, 0.0, 0.0));
        entry.0 += cnt;
        entry.1 += cnt as f64 * solution.means[c];
        if let Some(vars) = &solution.variances {
            entry.2 += cnt as f64 * vars[c];
        }
    }
    acc.into_iter()
        .map(|(k_in, (cnt, msum, vsum))| {
            let mean = msum / cnt as f64;
            let var = solution.variances.as_ref().map(|_| vsum / cnt as f64);
            (k_in, cnt as u32, mean, var)
        })
        .collect()
}

/// Selects between the full uncorrelated variance closed form and its
/// heavy-tail simplification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceForm {
    Full,
    HeavyTail,
}

/// Selects the coefficient-of-variation flavor: the exact ratio of the
/// closed forms, or the large-k asymptotic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovForm {
    Exact,
    LargeK,
}

/// Graph moments entering the uncorrelated closed forms. The reciprocal
/// moments weight dangling nodes with zero (they are never predecessors),
/// normalizing by the full node count; the mean in-degree counts every node.
#[derive(Debug, Clone, Copy)]
pub struct UncorrelatedModel {
    pub node_count: usize,
    pub mean_k_in: f64,
    pub q: f64,
    pub mean_inv_k_out: f64,
    pub mean_k_in_over_k_out: f64,
    pub mean_k_in_sq_over_k_out: f64,
}

impl UncorrelatedModel {
    pub fn from_graph(g: &DirectedGraph, q: f64) -> Result<Self, MeanFieldError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(MeanFieldError::InvalidDamping(q));
        }
        if g.edge_count() == 0 {
            return Err(MeanFieldError::NoEdges);
        }
        let n = g.node_count() as f64;
        let (mut inv, mut k_over, mut k_sq_over) = (0.0f64, 0.0f64, 0.0f64);
        for v in 0..g.node_count() as u32 {
            let ko = g.out_degree(v);
            if ko == 0 {
                continue;
            }
            let ki = g.in_degree(v) as f64;
            let ko = ko as f64;
            inv += 1.0 / ko;
            k_over += ki / ko;
            k_sq_over += ki * ki / ko;
        }
        Ok(Self {
            node_count: g.node_count(),
            mean_k_in: g.edge_count() as f64 / n,
            q,
            mean_inv_k_out: inv / n,
            mean_k_in_over_k_out: k_over / n,
            mean_k_in_sq_over_k_out: k_sq_over / n,
        })
    }

    /// Closed-form class mean: q/N at k_in = 0, exactly 1/N at the mean
    /// in-degree, linear in between and beyond.
    pub fn mean(&self, k_in: f64) -> f64 {
        let n = self.node_count as f64;
        (self.q + (1.0 - self.q) * (k_in / self.mean_k_in)) / n
    }

    /// Closed-form within-class variance, proportional to k_in.
    ///
    /// The full form divides by `1 - (1-q)²/<k_in> * <k_in/k_out>`, the sum
    /// of the geometric series propagating fluctuations along paths; it must
    /// be positive for the series to converge. The heavy-tail form keeps
    /// only the dominant `<k_in²/k_out>` term.
    pub fn variance(&self, k_in: f64, form: VarianceForm) -> Result<f64, MeanFieldError> {
        let n = self.node_count as f64;
        let q = self.q;
        let follow = 1.0 - q;
        let mk = self.mean_k_in;
        match form {
            VarianceForm::HeavyTail => Ok(follow.powi(4) / (n * n * mk.powi(3))
                * self.mean_k_in_sq_over_k_out
                * k_in),
            VarianceForm::Full => {
                let weighted_sq = q * q * mk * mk * self.mean_inv_k_out
                    + 2.0 * q * follow * mk * self.mean_k_in_over_k_out
                    + follow * follow * self.mean_k_in_sq_over_k_out;
                let numerator = weighted_sq / mk - 1.0;
                let denominator = 1.0 - follow * follow / mk * self.mean_k_in_over_k_out;
                if denominator <= 0.0 {
                    return Err(MeanFieldError::ModelInvalid(format!(
                        "fluctuation series diverges: denominator {denominator}"
                    )));
                }
                if numerator < 0.0 {
                    return Err(MeanFieldError::ModelInvalid(format!(
                        "negative variance numerator {numerator}"
                    )));
                }
                Ok(follow * follow / (n * n * mk * mk) * numerator / denominator * k_in)
            }
        }
    }

    /// σ(k)/p̄(k). The exact form is the ratio of the closed forms; the
    /// large-k form is `(1-q) sqrt(<k_in²/k_out> / (<k_in> k_in))`, which
    /// decays as k_in^(-1/2).
    pub fn coefficient_of_variation(
        &self,
        k_in: f64,
        form: CovForm,
    ) -> Result<f64, MeanFieldError> {
        match form {
            CovForm::Exact => {
                let var = self.variance(k_in, VarianceForm::Full)?;
                Ok(var.sqrt() / self.mean(k_in))
            }
            CovForm::LargeK => {
                if k_in <= 0.0 {
                    return Err(MeanFieldError::ZeroInDegree);
                }
                Ok((1.0 - self.q)
                    * (self.mean_k_in_sq_over_k_out / (self.mean_k_in * k_in)).sqrt())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::IngestOptions;
    use crate::pagerank::{exact_solve, power_iteration};

    const Q: f64 = 0.15;

    fn graph(n: usize, edges: &[(u32, u32)]) -> DirectedGraph {
        DirectedGraph::from_edges(n, edges, IngestOptions::default()).unwrap()
    }

    fn tight() -> ConvergenceSpec {
        ConvergenceSpec::new(1e-12, 2000).unwrap()
    }

    #[test]
    fn cycle_single_class_is_uniform() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let t = g.class_partition();
        let sol = solve_class_means(&g, &t, Q, &tight()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.means.len(), 1);
        assert!((sol.means[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((sol.weighted_sum(&t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_classes_reproduce_exact_pagerank() {
        // 0 -> 1: both classes are singletons, so the class recurrence is the
        // per-node recurrence and must land on (20/57, 37/57).
        let g = graph(2, &[(0, 1)]);
        let t = g.class_partition();
        let sol = solve_class_means(&g, &t, Q, &tight()).unwrap();
        assert!(sol.converged);
        let exact = exact_solve(&g, Q).unwrap();
        for (c, class) in t.classes().iter().enumerate() {
            let node = if class.k_in == 0 { 0 } else { 1 };
            assert!(
                (sol.means[c] - exact.values[node]).abs() < 1e-10,
                "class {:?}: {} vs {}",
                class,
                sol.means[c],
                exact.values[node]
            );
        }
    }

    #[test]
    fn aggregate_star_classes() {
        let g = graph(4, &[(1, 0), (2, 0), (3, 0)]);
        let t = g.class_partition();
        let pr = exact_solve(&g, Q).unwrap();
        let agg = aggregate_by_class(&pr.values, &t).unwrap();
        // Class (3,0) is the hub alone; class (0,1) holds the three leaves,
        // which are symmetric.
        for (c, class) in t.classes().iter().enumerate() {
            if class.k_in == 3 {
                assert!((agg.means[c] - pr.values[0]).abs() < 1e-15);
                assert_eq!(agg.variances.as_ref().unwrap()[c], 0.0);
            } else {
                assert!((agg.means[c] - pr.values[1]).abs() < 1e-15);
                assert!(agg.variances.as_ref().unwrap()[c] < 1e-30);
            }
        }
        assert!((agg.weighted_sum(&t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_size_mismatch() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let t = g.class_partition();
        assert!(matches!(
            aggregate_by_class(&[0.5, 0.5], &t),
            Err(MeanFieldError::SizeMismatch(2, 3))
        ));
    }

    #[test]
    fn aggregate_normalization_on_seeded_graph() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(3);
        let n = 1000usize;
        let mut edges = Vec::new();
        for _ in 0..5000 {
            edges.push((
                rng.random_range(0..n as u32),
                rng.random_range(0..n as u32),
            ));
        }
        let g = graph(n, &edges);
        let t = g.class_partition();
        let pr = power_iteration(&g, Q, &ConvergenceSpec::default()).unwrap();
        let agg = aggregate_by_class(&pr.values, &t).unwrap();
        // Direct summation cross-check of the normalization invariant.
        let direct: f64 = pr.values.iter().sum();
        assert!((agg.weighted_sum(&t) - direct).abs() < 1e-10);
        assert!((agg.weighted_sum(&t) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn closed_form_mean_anchors_and_example() {
        let m = UncorrelatedModel {
            node_count: 100,
            mean_k_in: 5.0,
            q: Q,
            mean_inv_k_out: 0.0,
            mean_k_in_over_k_out: 0.0,
            mean_k_in_sq_over_k_out: 0.0,
        };
        assert_eq!(m.mean(0.0), Q / 100.0);
        assert_eq!(m.mean(5.0), 1.0 / 100.0);
        assert!((m.mean(20.0) - 0.0355).abs() < 1e-15);
    }

    #[test]
    fn variance_closed_forms() {
        let m = UncorrelatedModel {
            node_count: 100_000,
            mean_k_in: 10.0,
            q: Q,
            mean_inv_k_out: 0.15,
            mean_k_in_over_k_out: 1.5,
            mean_k_in_sq_over_k_out: 220.0,
        };
        // Both forms vanish at k_in = 0 and are linear in k_in.
        for form in [VarianceForm::Full, VarianceForm::HeavyTail] {
            assert_eq!(m.variance(0.0, form).unwrap(), 0.0);
            let v1 = m.variance(7.0, form).unwrap();
            let v2 = m.variance(14.0, form).unwrap();
            assert!((v2 / v1 - 2.0).abs() < 1e-12);
        }
        // Spreadsheet-style independent evaluation of the full form.
        let q: f64 = Q;
        let f = 1.0 - q;
        let mk = 10.0;
        let n = 100_000.0;
        let m2 = q * q * mk * mk * 0.15 + 2.0 * q * f * mk * 1.5 + f * f * 220.0;
        let expected = f * f / (n * n * mk * mk) * (m2 / mk - 1.0)
            / (1.0 - f * f / mk * 1.5)
            * 7.0;
        let got = m.variance(7.0, VarianceForm::Full).unwrap();
        assert!((got - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn variance_diverging_series_is_model_invalid() {
        let m = UncorrelatedModel {
            node_count: 100,
            mean_k_in: 1.0,
            q: Q,
            mean_inv_k_out: 1.0,
            mean_k_in_over_k_out: 2.0,
            mean_k_in_sq_over_k_out: 2.0,
        };
        assert!(matches!(
            m.variance(1.0, VarianceForm::Full),
            Err(MeanFieldError::ModelInvalid(_))
        ));
    }

    #[test]
    fn coefficient_of_variation_forms() {
        let m = UncorrelatedModel {
            node_count: 100_000,
            mean_k_in: 10.0,
            q: Q,
            mean_inv_k_out: 0.15,
            mean_k_in_over_k_out: 1.5,
            mean_k_in_sq_over_k_out: 220.0,
        };
        // Quadrupling k_in halves the large-k form.
        let c1 = m.coefficient_of_variation(25.0, CovForm::LargeK).unwrap();
        let c2 = m.coefficient_of_variation(100.0, CovForm::LargeK).unwrap();
        assert!((c1 / c2 - 2.0).abs() < 1e-12);
        // Exact ratio at the mean in-degree is N * sigma (p̄ = 1/N there).
        let cov = m.coefficient_of_variation(10.0, CovForm::Exact).unwrap();
        let sigma = m.variance(10.0, VarianceForm::Full).unwrap().sqrt();
        assert!((cov - 100_000.0 * sigma).abs() / cov < 1e-12);
        assert!(matches!(
            m.coefficient_of_variation(0.0, CovForm::LargeK),
            Err(MeanFieldError::ZeroInDegree)
        ));
    }

    #[test]
    fn variance_recursion_on_symmetric_graphs() {
        let g = graph(3, &[(0, 1), (1, 2), (2, 0)]);
        let t = g.class_partition();
        let means = solve_class_means(&g, &t, Q, &tight()).unwrap();
        let sol = solve_class_variances(&g, &t, Q, &tight(), &means).unwrap();
        assert!(sol.converged);
        // One symmetric class: every predecessor carries the same mean, so
        // the spread term vanishes.
        assert!(sol.variances.as_ref().unwrap()[0].abs() < 1e-30);
        assert_eq!(sol.negative_variance_clamps, 0);
    }

    #[test]
    fn variance_recursion_singletons_reported_alongside_empirical_zero() {
        let g = graph(2, &[(0, 1)]);
        let t = g.class_partition();
        let means = solve_class_means(&g, &t, Q, &tight()).unwrap();
        let sol = solve_class_variances(&g, &t, Q, &tight(), &means).unwrap();
        assert!(sol.converged);
        for &v in sol.variances.as_ref().unwrap() {
            assert!(v >= 0.0 && v.is_finite());
        }
        // Empirical variance of singleton classes is identically zero.
        let pr = exact_solve(&g, Q).unwrap();
        let agg = aggregate_by_class(&pr.values, &t).unwrap();
        for &v in agg.variances.as_ref().unwrap() {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn variance_requires_converged_means() {
        let g = graph(2, &[(0, 1)]);
        let t = g.class_partition();
        let spec = ConvergenceSpec::new(1e-12, 1).unwrap();
        let means = solve_class_means(&g, &t, Q, &spec).unwrap();
        assert!(!means.converged);
        assert!(matches!(
            solve_class_variances(&g, &t, Q, &tight(), &means),
            Err(MeanFieldError::MeansNotConverged)
        ));
    }

    #[test]
    fn no_edges_rejected() {
        let g = graph(3, &[]);
        let t = g.class_partition();
        assert!(matches!(
            solve_class_means(&g, &t, Q, &tight()),
            Err(MeanFieldError::NoEdges)
        ));
        assert!(matches!(
            UncorrelatedModel::from_graph(&g, Q),
            Err(MeanFieldError::NoEdges)
        ));
    }

    #[test]
    fn marginal_weights_by_class_count() {
        let g = graph(4, &[(0, 2), (1, 2), (2, 3), (3, 0), (3, 1)]);
        let t = g.class_partition();
        let pr = exact_solve(&g, Q).unwrap();
        let agg = aggregate_by_class(&pr.values, &t).unwrap();
        let marginal = marginal_over_out_degree(&agg, &t);
        let total: u32 = marginal.iter().map(|r| r.1).sum();
        assert_eq!(total as usize, g.node_count());
        // Count-weighted means over the marginal reproduce the global total.
        let sum: f64 = marginal.iter().map(|r| r.1 as f64 * r.2).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        // Keyed and sorted by k_in.
        for w in marginal.windows(2) {
            assert!(w[0].0 < w[1].0);
        }
    }

    #[test]
    fn moments_skip_dangling_nodes() {
        // Node 1 dangles: it contributes to the mean in-degree but not to
        // the reciprocal moments.
        let g = graph(2, &[(0, 1)]);
        let m = UncorrelatedModel::from_graph(&g, Q).unwrap();
        assert!((m.mean_k_in - 0.5).abs() < 1e-15);
        assert!((m.mean_inv_k_out - 0.5).abs() < 1e-15); // (1/1)/2
        assert_eq!(m.mean_k_in_over_k_out, 0.0); // node 0 has k_in 0
        assert_eq!(m.mean_k_in_sq_over_k_out, 0.0);
    }
}
