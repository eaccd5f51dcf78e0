//! Compact directed-graph storage with dual CSR adjacency.
//!
//! Graphs are immutable after construction. Both directions are stored
//! (offset-indexed contiguous arrays) because the solvers iterate over
//! predecessors while generators and exporters iterate over successors.
//! Node ids are dense `u32` indices in `[0, N)`; text ingestion remaps
//! arbitrary (possibly sparse) ids onto that range.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::analytics;

/// Dense node index, stable for the lifetime of a graph.
pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: malformed edge record: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: node id overflows the supported id range")]
    IdOverflow { line: usize },
    #[error("graph capacity exceeded: {0} distinct nodes")]
    Capacity(usize),
    #[error("edge ({0}, {1}) references a node id >= node count {2}")]
    InvalidNodeId(u64, u64, usize),
    #[error("operation requires a non-empty graph")]
    EmptyGraph,
    #[error("degree-degree correlation is undefined: {0}")]
    DegenerateCorrelation(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How raw edge multiplicities are treated during construction.
///
/// Raw crawls contain duplicate links and self-loops, and the random-surfer
/// update is well defined with both, so the default keeps them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestOptions {
    /// Drop repeated (source, target) pairs, keeping the first occurrence.
    pub dedup: bool,
    /// Drop edges with source == target.
    pub drop_self_loops: bool,
}

/// Immutable directed multigraph in compressed sparse row form, both
/// directions, with cached per-node degrees.
#[derive(Debug, Clone)]
pub struct DirectedGraph {
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    k_in: Vec<u32>,
    k_out: Vec<u32>,
}

impl DirectedGraph {
    /// Builds a graph over `node_count` nodes from raw edge pairs.
    ///
    /// Isolated nodes are allowed; every edge endpoint must be below
    /// `node_count`. Duplicate edges and self-loops are kept or dropped
    /// according to `opts`.
    pub fn from_edges(
        node_count: usize,
        edges: &[(NodeId, NodeId)],
        opts: IngestOptions,
    ) -> Result<Self, GraphError> {
        for &(s, t) in edges {
            if (s as usize) >= node_count || (t as usize) >= node_count {
                return Err(GraphError::InvalidNodeId(s as u64, t as u64, node_count));
            }
        }
        let filtered: Vec<(NodeId, NodeId)>;
        let edges = if opts.dedup || opts.drop_self_loops {
            let mut seen = HashMap::new();
            filtered = edges
                .iter()
                .copied()
                .filter(|&(s, t)| {
                    if opts.drop_self_loops && s == t {
                        return false;
                    }
                    if opts.dedup {
                        return seen.insert((s, t), ()).is_none();
                    }
                    true
                })
                .collect();
            &filtered[..]
        } else {
            edges
        };

        let mut k_out = vec![0u32; node_count];
        let mut k_in = vec![0u32; node_count];
        for &(s, t) in edges {
            k_out[s as usize] += 1;
            k_in[t as usize] += 1;
        }

        let out_offsets = prefix_sum(&k_out);
        let in_offsets = prefix_sum(&k_in);
        let mut out_targets = vec![0 as NodeId; edges.len()];
        let mut in_sources = vec![0 as NodeId; edges.len()];
        let mut out_cursor = out_offsets.clone();
        let mut in_cursor = in_offsets.clone();
        // Stable fill: within a node, adjacency keeps input edge order.
        for &(s, t) in edges {
            out_targets[out_cursor[s as usize]] = t;
            out_cursor[s as usize] += 1;
            in_sources[in_cursor[t as usize]] = s;
            in_cursor[t as usize] += 1;
        }

        Ok(Self {
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            k_in,
            k_out,
        })
    }

    pub fn node_count(&self) -> usize {
        self.k_in.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    /// Successor list of `v`, one entry per outgoing edge.
    pub fn successors(&self, v: NodeId) -> &[NodeId] {
        &self.out_targets[self.out_offsets[v as usize]..self.out_offsets[v as usize + 1]]
    }

    /// Predecessor list of `v`, one entry per incoming edge.
    pub fn predecessors(&self, v: NodeId) -> &[NodeId] {
        &self.in_sources[self.in_offsets[v as usize]..self.in_offsets[v as usize + 1]]
    }

    pub fn in_degree(&self, v: NodeId) -> u32 {
        self.k_in[v as usize]
    }

    pub fn out_degree(&self, v: NodeId) -> u32 {
        self.k_out[v as usize]
    }

    pub fn in_degrees(&self) -> &[u32] {
        &self.k_in
    }

    pub fn out_degrees(&self) -> &[u32] {
        &self.k_out
    }

    /// A dangling node has no outgoing edges; its walker mass is
    /// redistributed uniformly by the solvers.
    pub fn is_dangling(&self, v: NodeId) -> bool {
        self.k_out[v as usize] == 0
    }

    pub fn dangling_count(&self) -> usize {
        self.k_out.iter().filter(|&&d| d == 0).count()
    }

    /// All edges in source-major order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count() as NodeId)
            .flat_map(move |s| self.successors(s).iter().map(move |&t| (s, t)))
    }

    /// Mean in-degree E/N (equals the mean out-degree).
    pub fn mean_in_degree(&self) -> Result<f64, GraphError> {
        if self.node_count() == 0 {
            return Err(GraphError::EmptyGraph);
        }
        Ok(self.edge_count() as f64 / self.node_count() as f64)
    }

    /// Pearson correlation, over edges, between the source's out-degree and
    /// the target's in-degree. Near zero on stub-matched random graphs; the
    /// usual scalar check that a graph carries no degree-degree correlations.
    pub fn edge_degree_correlation(&self) -> Result<f64, GraphError> {
        if self.edge_count() < 2 {
            return Err(GraphError::DegenerateCorrelation(
                "need at least two edges".into(),
            ));
        }
        let mut xs = Vec::with_capacity(self.edge_count());
        let mut ys = Vec::with_capacity(self.edge_count());
        for (s, t) in self.edges() {
            xs.push(self.k_out[s as usize] as f64);
            ys.push(self.k_in[t as usize] as f64);
        }
        analytics::pearson(&xs, &ys)
            .map_err(|e| GraphError::DegenerateCorrelation(e.to_string()))
    }

    /// Partitions the nodes into (k_in, k_out) degree classes.
    pub fn class_partition(&self) -> DegreeClassTable {
        DegreeClassTable::new(&self.k_in, &self.k_out)
    }

    /// Writes the plain-text edge list, one `source target` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (s, t) in self.edges() {
            writeln!(w, "{} {}", s, t)?;
        }
        Ok(())
    }
}

fn prefix_sum(degrees: &[u32]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(degrees.len() + 1);
    let mut acc = 0usize;
    offsets.push(0);
    for &d in degrees {
        acc += d as usize;
        offsets.push(acc);
    }
    offsets
}

/// One in/out degree pair; nodes sharing both degrees form a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DegreeClass {
    pub k_in: u32,
    pub k_out: u32,
}

/// Partition of the nodes into degree classes, with per-class counts and a
/// node-to-class index. Classes are sorted by (k_in, k_out).
#[derive(Debug, Clone)]
pub struct DegreeClassTable {
    classes: Vec<DegreeClass>,
    counts: Vec<u32>,
    class_of: Vec<u32>,
}

impl DegreeClassTable {
    fn new(k_in: &[u32], k_out: &[u32]) -> Self {
        let mut index: HashMap<DegreeClass, u32> = HashMap::new();
        for (&ki, &ko) in k_in.iter().zip(k_out) {
            let len = index.len() as u32;
            index.entry(DegreeClass { k_in: ki, k_out: ko }).or_insert(len);
        }
        let mut classes: Vec<DegreeClass> = index.keys().copied().collect();
        classes.sort_unstable();
        let remap: HashMap<DegreeClass, u32> = classes
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as u32))
            .collect();
        let mut counts = vec![0u32; classes.len()];
        let class_of: Vec<u32> = k_in
            .iter()
            .zip(k_out)
            .map(|(&ki, &ko)| {
                let c = remap[&DegreeClass { k_in: ki, k_out: ko }];
                counts[c as usize] += 1;
                c
            })
            .collect();
        Self {
            classes,
            counts,
            class_of,
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[DegreeClass] {
        &self.classes
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn class_of(&self, v: NodeId) -> usize {
        self.class_of[v as usize] as usize
    }

    pub fn class_indices(&self) -> &[u32] {
        &self.class_of
    }

    pub fn node_count(&self) -> usize {
        self.class_of.len()
    }

    /// Fraction of nodes in class `c`: P(k) = count / N.
    pub fn probability(&self, c: usize) -> f64 {
        self.counts[c] as f64 / self.node_count() as f64
    }
}

/// Mapping from original file ids to the dense ids used internally.
/// Dense ids are assigned in ascending order of the original ids, so a file
/// that already uses `0..N` round-trips unchanged.
#[derive(Debug, Clone)]
pub struct NodeMapping {
    originals: Vec<u64>,
}

impl NodeMapping {
    pub fn len(&self) -> usize {
        self.originals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.originals.is_empty()
    }

    /// Original id for a dense id.
    pub fn original(&self, dense: NodeId) -> u64 {
        self.originals[dense as usize]
    }

    pub fn is_identity(&self) -> bool {
        self.originals
            .iter()
            .enumerate()
            .all(|(i, &o)| o == i as u64)
    }

    /// Writes `original_id dense_id` per line.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (dense, &orig) in self.originals.iter().enumerate() {
            writeln!(w, "{} {}", orig, dense)?;
        }
        Ok(())
    }
}

/// Parses a whitespace-separated edge list: one `source target` pair of
/// decimal ids per line, `#` lines ignored, blank lines ignored. Sparse ids
/// are remapped onto `[0, N)` in ascending order of the original ids.
pub fn read_edge_list<R: BufRead>(
    reader: R,
    opts: IngestOptions,
) -> Result<(DirectedGraph, NodeMapping), GraphError> {
    let mut raw_edges: Vec<(u64, u64)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let src = parse_id(fields.next(), trimmed, line_no)?;
        let tgt = parse_id(fields.next(), trimmed, line_no)?;
        if fields.next().is_some() {
            return Err(GraphError::Parse {
                line: line_no,
                reason: format!("expected two fields, got more: {:?}", trimmed),
            });
        }
        raw_edges.push((src, tgt));
    }

    let mut ids: Vec<u64> = raw_edges.iter().flat_map(|&(s, t)| [s, t]).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() > u32::MAX as usize {
        return Err(GraphError::Capacity(ids.len()));
    }
    let dense: HashMap<u64, NodeId> = ids
        .iter()
        .enumerate()
        .map(|(i, &o)| (o, i as NodeId))
        .collect();
    let edges: Vec<(NodeId, NodeId)> = raw_edges
        .iter()
        .map(|&(s, t)| (dense[&s], dense[&t]))
        .collect();
    let graph = DirectedGraph::from_edges(ids.len(), &edges, opts)?;
    Ok((graph, NodeMapping { originals: ids }))
}

fn parse_id(field: Option<&str>, line: &str, line_no: usize) -> Result<u64, GraphError> {
    let tok = field.ok_or_else(|| GraphError::Parse {
        line: line_no,
        reason: format!("expected two fields: {:?}", line),
    })?;
    tok.parse::<u64>().map_err(|_| {
        if !tok.is_empty() && tok.bytes().all(|b| b.is_ascii_digit()) {
            GraphError::IdOverflow { line: line_no }
        } else {
            GraphError::Parse {
                line: line_no,
                reason: format!("invalid node id {:?}", tok),
            }
        }
    })
}

/// Reads an edge-list file, transparently decompressing gzip input
/// (detected by the magic bytes, not the file name).
pub fn read_edge_list_path<P: AsRef<Path>>(
    path: P,
    opts: IngestOptions,
) -> Result<(DirectedGraph, NodeMapping), GraphError> {
    let mut file = BufReader::new(File::open(path)?);
    let head = file.fill_buf()?;
    let gzipped = head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b;
    if gzipped {
        read_edge_list(BufReader::new(flate2::read::GzDecoder::new(file)), opts)
    } else {
        read_edge_list(file, opts)
    }
}

/// Reads an edge list from any raw reader without gzip sniffing.
pub fn read_edge_list_plain<R: Read>(
    reader: R,
    opts: IngestOptions,
) -> Result<(DirectedGraph, NodeMapping), GraphError> {
    read_edge_list(BufReader::new(reader), opts)
}
