//! Immutable directed follow graph.
//!
//! An edge `u -> v` means user `u` follows user `v`. The graph stores both
//! adjacency directions as compressed sparse rows over densely re-indexed
//! nodes; the id <-> index map is stable: node indices follow the
//! lexicographic order of user ids, so the same edge set always produces the
//! same graph regardless of input order.

use std::collections::HashMap;
use std::io::Write;

use thiserror::Error;

use crate::UserId;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node {0} is not in the graph")]
    UnknownNode(UserId),
    #[error("graph is empty")]
    Empty,
}

/// Compressed adjacency: `targets[offsets[u]..offsets[u + 1]]` are the
/// neighbors of node `u`, sorted ascending, without duplicates.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Csr {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Csr {
    fn neighbors(&self, u: u32) -> &[u32] {
        &self.targets[self.offsets[u as usize] as usize..self.offsets[u as usize + 1] as usize]
    }

    fn from_sorted_edges(n: usize, edges: &[(u32, u32)], transpose: bool) -> Csr {
        let mut counts = vec![0u32; n + 1];
        for &(s, t) in edges {
            let key = if transpose { t } else { s };
            counts[key as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts;
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; edges.len()];
        for &(s, t) in edges {
            let (key, val) = if transpose { (t, s) } else { (s, t) };
            targets[cursor[key as usize] as usize] = val;
            cursor[key as usize] += 1;
        }
        // Edges are iterated in (source, target) order, so for the forward
        // view targets are already ascending per node; for the transpose the
        // sources arrive ascending as well.
        Csr { offsets, targets }
    }
}

/// Immutable directed graph over user ids.
#[derive(Clone, Debug, PartialEq)]
pub struct FollowGraph {
    ids: Vec<UserId>,
    index: HashMap<UserId, u32>,
    fwd: Csr,
    rev: Csr,
}

/// Result of building a graph, with counts of normalized input anomalies.
#[derive(Debug)]
pub struct GraphBuild {
    pub graph: FollowGraph,
    pub self_loops_dropped: usize,
    pub duplicates_collapsed: usize,
}

impl FollowGraph {
    /// Builds a graph from `(follower, followee)` pairs.
    ///
    /// Self-loops are dropped and duplicate edges collapsed; both are
    /// counted in the returned [`GraphBuild`].
    pub fn from_edges<I>(edges: I) -> GraphBuild
    where
        I: IntoIterator<Item = (UserId, UserId)>,
    {
        let raw: Vec<(UserId, UserId)> = edges.into_iter().collect();

        let mut ids: Vec<UserId> = Vec::with_capacity(raw.len() * 2);
        for (a, b) in &raw {
            ids.push(a.clone());
            ids.push(b.clone());
        }
        ids.sort_unstable();
        ids.dedup();

        let index: HashMap<UserId, u32> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();

        let mut self_loops_dropped = 0usize;
        let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(raw.len());
        for (a, b) in &raw {
            let s = index[a.as_str()];
            let t = index[b.as_str()];
            if s == t {
                self_loops_dropped += 1;
            } else {
                pairs.push((s, t));
            }
        }
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        let duplicates_collapsed = before - pairs.len();

        let n = ids.len();
        let fwd = Csr::from_sorted_edges(n, &pairs, false);
        let rev = Csr::from_sorted_edges(n, &pairs, true);

        GraphBuild {
            graph: FollowGraph {
                ids,
                index,
                fwd,
                rev,
            },
            self_loops_dropped,
            duplicates_collapsed,
        }
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.fwd.targets.len()
    }

    pub fn node_index(&self, id: &UserId) -> Option<u32> {
        self.index.get(id.as_str()).copied()
    }

    pub fn user_id(&self, node: u32) -> &UserId {
        &self.ids[node as usize]
    }

    /// User ids in node-index order.
    pub fn ids(&self) -> &[UserId] {
        &self.ids
    }

    /// Out-neighbors: the users that `node` follows.
    pub fn followees(&self, node: u32) -> &[u32] {
        self.fwd.neighbors(node)
    }

    /// In-neighbors: the users that follow `node`.
    pub fn followers(&self, node: u32) -> &[u32] {
        self.rev.neighbors(node)
    }

    pub fn out_degree(&self, node: u32) -> usize {
        self.followees(node).len()
    }

    pub fn in_degree(&self, node: u32) -> usize {
        self.followers(node).len()
    }

    /// Undirected projection: for each node, the distinct users adjacent in
    /// either direction, sorted ascending.
    pub fn undirected(&self) -> UndirectedProjection {
        let n = self.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(self.edge_count());
        offsets.push(0u32);
        for u in 0..n as u32 {
            let fwd = self.followees(u);
            let rev = self.followers(u);
            // Merge two sorted lists, dropping duplicates (mutual follows).
            let (mut i, mut j) = (0usize, 0usize);
            while i < fwd.len() || j < rev.len() {
                let next = match (fwd.get(i), rev.get(j)) {
                    (Some(&a), Some(&b)) if a == b => {
                        i += 1;
                        j += 1;
                        a
                    }
                    (Some(&a), Some(&b)) if a < b => {
                        i += 1;
                        a
                    }
                    (Some(_), Some(&b)) => {
                        j += 1;
                        b
                    }
                    (Some(&a), None) => {
                        i += 1;
                        a
                    }
                    (None, Some(&b)) => {
                        j += 1;
                        b
                    }
                    (None, None) => unreachable!(),
                };
                neighbors.push(next);
            }
            offsets.push(neighbors.len() as u32);
        }
        UndirectedProjection { offsets, neighbors }
    }

    /// Edges in canonical order: sorted by follower id then followee id.
    pub fn canonical_edges(&self) -> impl Iterator<Item = (&UserId, &UserId)> + '_ {
        (0..self.node_count() as u32).flat_map(move |u| {
            self.followees(u)
                .iter()
                .map(move |&v| (self.user_id(u), self.user_id(v)))
        })
    }

    /// Writes the canonical tab-separated edge list.
    ///
    /// Rebuilding a graph from this output yields an identical graph.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (a, b) in self.canonical_edges() {
            writeln!(w, "{a}\t{b}")?;
        }
        Ok(())
    }
}

/// Symmetric adjacency derived from a [`FollowGraph`].
#[derive(Clone, Debug)]
pub struct UndirectedProjection {
    offsets: Vec<u32>,
    neighbors: Vec<u32>,
}

impl UndirectedProjection {
    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, u: u32) -> &[u32] {
        &self.neighbors[self.offsets[u as usize] as usize..self.offsets[u as usize + 1] as usize]
    }

    pub fn degree(&self, u: u32) -> usize {
        self.neighbors(u).len()
    }
}
