//! Node-level network measures on the follow graph.
//!
//! PageRank is computed by power iteration with uniform teleportation and
//! uniform redistribution of dangling mass. Rank flows along follow edges
//! `u -> v`, so widely-followed accounts rank high. The clustering
//! coefficient is `2T / (d (d - 1))` on the undirected projection, where `T`
//! counts closed triangles through the node and `d` is its undirected
//! degree; nodes with `d < 2` get 0.
//!
//! All computations are read-only over the graph and parallelize over
//! disjoint node ranges; per-node reductions run in fixed (index) order, so
//! results do not depend on the thread count.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::graph::FollowGraph;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("damping factor must lie strictly between 0 and 1, got {0}")]
    InvalidDamping(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
}

/// A named per-node metric; `values[i]` belongs to node index `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeMetricVector {
    pub metric: String,
    pub values: Vec<f64>,
}

impl NodeMetricVector {
    fn new(metric: &str, values: Vec<f64>) -> Self {
        NodeMetricVector {
            metric: metric.to_owned(),
            values,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PageRankConfig {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            tolerance: 1e-10,
            max_iterations: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PageRankResult {
    pub scores: NodeMetricVector,
    pub iterations: usize,
    pub converged: bool,
}

/// Power-iteration PageRank.
///
/// Scores sum to 1; iteration stops when the L1 change drops below
/// `tolerance` or after `max_iterations` (reported via `converged`).
pub fn pagerank(g: &FollowGraph, cfg: &PageRankConfig) -> Result<PageRankResult, MetricsError> {
    let n = g.node_count();
    if n == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    if !(cfg.damping > 0.0 && cfg.damping < 1.0) {
        return Err(MetricsError::InvalidDamping(cfg.damping));
    }
    if cfg.tolerance.is_nan() || cfg.tolerance <= 0.0 {
        return Err(MetricsError::InvalidTolerance(cfg.tolerance));
    }

    let d = cfg.damping;
    let inv_n = 1.0 / n as f64;
    let inv_out: Vec<f64> = (0..n as u32)
        .map(|u| {
            let deg = g.out_degree(u);
            if deg == 0 {
                0.0
            } else {
                1.0 / deg as f64
            }
        })
        .collect();

    let mut scores = vec![inv_n; n];
    let mut next = vec![0.0f64; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        // Scalar reductions are sequential in node order so the result is
        // identical for every thread count.
        let dangling: f64 = (0..n)
            .filter(|&u| inv_out[u] == 0.0)
            .map(|u| scores[u])
            .sum();
        let base = (1.0 - d) * inv_n + d * dangling * inv_n;

        next.par_iter_mut().enumerate().for_each(|(v, out)| {
            let mut acc = 0.0;
            for &u in g.followers(v as u32) {
                acc += scores[u as usize] * inv_out[u as usize];
            }
            *out = base + d * acc;
        });

        let delta: f64 = scores
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut scores, &mut next);
        iterations += 1;
        if delta < cfg.tolerance {
            converged = true;
            break;
        }
    }

    Ok(PageRankResult {
        scores: NodeMetricVector::new("pagerank", scores),
        iterations,
        converged,
    })
}

/// Per-node clustering coefficient on the undirected projection.
pub fn clustering_coefficient(g: &FollowGraph) -> NodeMetricVector {
    let und = g.undirected();
    let n = und.node_count();
    let values: Vec<f64> = (0..n as u32)
        .into_par_iter()
        .map(|u| {
            let nbrs = und.neighbors(u);
            let deg = nbrs.len();
            if deg < 2 {
                return 0.0;
            }
            // Each closed triangle {u, v, w} is seen twice here (through v
            // and through w), which is exactly the 2T numerator.
            let mut twice_triangles = 0usize;
            for &v in nbrs {
                twice_triangles += sorted_intersection_len(nbrs, und.neighbors(v));
            }
            twice_triangles as f64 / (deg * (deg - 1)) as f64
        })
        .collect();
    NodeMetricVector::new("clustering_coefficient", values)
}

fn sorted_intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0usize, 0usize, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

#[derive(Clone, Debug)]
pub struct DegreeVectors {
    pub in_degree: NodeMetricVector,
    pub out_degree: NodeMetricVector,
    pub undirected: NodeMetricVector,
}

/// In-, out-, and undirected degrees. The undirected degree counts distinct
/// neighbors in either direction, so a mutual follow contributes one.
pub fn degrees(g: &FollowGraph) -> DegreeVectors {
    let n = g.node_count();
    let und = g.undirected();
    let mut in_d = Vec::with_capacity(n);
    let mut out_d = Vec::with_capacity(n);
    let mut und_d = Vec::with_capacity(n);
    for u in 0..n as u32 {
        in_d.push(g.in_degree(u) as f64);
        out_d.push(g.out_degree(u) as f64);
        und_d.push(und.degree(u) as f64);
    }
    DegreeVectors {
        in_degree: NodeMetricVector::new("in_degree", in_d),
        out_degree: NodeMetricVector::new("out_degree", out_d),
        undirected: NodeMetricVector::new("degree", und_d),
    }
}

/// Writes metric vectors as `user_id,metric,value` rows, metric-major, with
/// nodes in id order.
pub fn write_metrics_csv<W: Write>(
    g: &FollowGraph,
    metrics: &[&NodeMetricVector],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "user_id,metric,value")?;
    for m in metrics {
        for (i, value) in m.values.iter().enumerate() {
            writeln!(w, "{},{},{}", g.user_id(i as u32), m.metric, value)?;
        }
    }
    Ok(())
}
