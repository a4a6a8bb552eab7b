// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Simple undirected graphs on dense vertex indices.
//!
//! A [`Graph`] keeps its edges sorted and normalized, so subgraphs of a host
//! graph are plain graphs on the same vertex count.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{AsdError, Result};

/// An unordered edge stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
}

impl Edge {
    /// Normalized edge between `a` and `b`. Panics on a self-loop.
    pub fn new(a: usize, b: usize) -> Edge {
        assert_ne!(a, b, "self-loop");
        if a < b {
            Edge { u: a, v: b }
        } else {
            Edge { u: b, v: a }
        }
    }

    pub fn touches(&self, x: usize) -> bool {
        self.u == x || self.v == x
    }

    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }

    pub fn shares_vertex(&self, e: &Edge) -> bool {
        self.touches(e.u) || self.touches(e.v)
    }
}

/// Simple undirected graph.
///
/// Edges are sorted and distinct. The same type is used for host graphs and
/// for parts of a decomposition, which live on the host's vertex set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// Builds a graph, rejecting loops, duplicates and out-of-range endpoints.
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        let mut edges = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(AsdError::InvalidGraph(format!("self-loop at {a}")));
            }
            if a >= n || b >= n {
                return Err(AsdError::InvalidGraph(format!("edge ({a},{b}) out of range for n={n}")));
            }
            edges.push(Edge::new(a, b));
        }
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(AsdError::InvalidGraph(format!(
                    "duplicate edge ({},{})",
                    w[0].u, w[0].v
                )));
            }
        }
        Ok(Graph { n, edges })
    }

    /// Builds a graph from edges, sorting and dropping duplicates.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Graph {
        let mut edges: Vec<Edge> = edges.into_iter().collect();
        edges.sort_unstable();
        edges.dedup();
        debug_assert!(edges.iter().all(|e| e.v < n));
        Graph { n, edges }
    }

    pub fn empty(n: usize) -> Graph {
        Graph { n, edges: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.binary_search(e).is_ok()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.contains(&Edge::new(a, b))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    pub fn degree(&self, x: usize) -> usize {
        self.edges.iter().filter(|e| e.touches(x)).count()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
        }
        adj
    }

    /// Non-isolated vertices in increasing order.
    pub fn vertices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.edges.iter().flat_map(|e| [e.u, e.v]).collect();
        set.into_iter().collect()
    }

    pub fn vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for e in &self.edges {
            mask[e.u] = true;
            mask[e.v] = true;
        }
        mask
    }

    /// Subgraph on the same vertex set with the given edges.
    pub fn with_edges(&self, edges: impl IntoIterator<Item = Edge>) -> Graph {
        Graph::from_edges(self.n, edges)
    }

    pub fn union(&self, other: &Graph) -> Graph {
        let n = self.n.max(other.n);
        Graph::from_edges(n, self.edges.iter().chain(other.edges.iter()).copied())
    }

    /// Edges of `self` that are not in `other`.
    pub fn difference(&self, other: &Graph) -> Graph {
        Graph {
            n: self.n,
            edges: self.edges.iter().filter(|e| !other.contains(e)).copied().collect(),
        }
    }

    /// Subgraph induced on the vertices where `keep` is true.
    pub fn induced(&self, keep: &[bool]) -> Graph {
        Graph {
            n: self.n,
            edges: self.edges.iter().filter(|e| keep[e.u] && keep[e.v]).copied().collect(),
        }
    }

    pub fn is_matching(&self) -> bool {
        self.max_degree() <= 1
    }

    /// Same edges on a larger vertex set.
    pub fn widen(&self, n: usize) -> Graph {
        assert!(n >= self.n);
        Graph {
            n,
            edges: self.edges.clone(),
        }
    }

    /// Relabels non-isolated vertices to `0..k`, returning the old label of
    /// each new vertex.
    pub fn compact(&self) -> (Graph, Vec<usize>) {
        let verts = self.vertices();
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in verts.iter().enumerate() {
            index[v] = i;
        }
        let g = Graph::from_edges(
            verts.len(),
            self.edges.iter().map(|e| Edge::new(index[e.u], index[e.v])),
        );
        (g, verts)
    }

    /// Applies a vertex relabeling given as `map[old] = new`.
    pub fn relabel(&self, map: &[usize], n: usize) -> Graph {
        Graph::from_edges(n, self.edges.iter().map(|e| Edge::new(map[e.u], map[e.v])))
    }

    /// Edge sets of the connected components, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<Edge>> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let a = find(&mut parent, e.u);
            let b = find(&mut parent, e.v);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut slot = vec![usize::MAX; self.n];
        let mut out: Vec<Vec<Edge>> = Vec::new();
        for v in self.vertices() {
            let r = find(&mut parent, v);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
        }
        for e in &self.edges {
            let r = find(&mut parent, e.u);
            out[slot[r]].push(*e);
        }
        out
    }

    /// Serializes into the edge-list text format.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.n);
        for e in &self.edges {
            let _ = writeln!(s, "{} {}", e.u, e.v);
        }
        s
    }
}

/// Parses the edge-list format: a vertex count, then one `u v` pair per line
/// with `u < v`. `#` starts a comment.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|_| AsdError::Parse {
                line: line_no,
                message: format!("expected a non-negative integer, found {s:?}"),
            })
        };
        match n {
            None => {
                if fields.len() != 1 {
                    return Err(AsdError::Parse {
                        line: line_no,
                        message: "first line must hold the vertex count".into(),
                    });
                }
                n = Some(parse(fields[0])?);
            }
            Some(count) => {
                if fields.len() != 2 {
                    return Err(AsdError::Parse {
                        line: line_no,
                        message: format!("expected \"u v\", found {line:?}"),
                    });
                }
                let (u, v) = (parse(fields[0])?, parse(fields[1])?);
                if u == v {
                    return Err(AsdError::InvalidGraph(format!("line {line_no}: self-loop at {u}")));
                }
                if u > v {
                    return Err(AsdError::Parse {
                        line: line_no,
                        message: format!("endpoints must satisfy u < v, found {u} {v}"),
                    });
                }
                if v >= count {
                    return Err(AsdError::Parse {
                        line: line_no,
                        message: format!("vertex {v} out of range for n={count}"),
                    });
                }
                pairs.push((u, v));
            }
        }
    }
    let n = n.ok_or(AsdError::Parse {
        line: 1,
        message: "missing vertex count".into(),
    })?;
    Graph::new(n, pairs)
}

/// Number of edges `C(m, 2)`.
pub fn binom2(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// The `m` with `C(m,2) < e <= C(m+1,2)`, and `t = e - C(m,2)`. Zero edges
/// give `(0, 0)`.
pub fn asd_shape(e: usize) -> (usize, usize) {
    if e == 0 {
        return (0, 0);
    }
    let mut m = ((2.0 * e as f64).sqrt() as usize).max(1);
    while binom2(m + 1) < e {
        m += 1;
    }
    while m > 1 && binom2(m) >= e {
        m -= 1;
    }
    (m, e - binom2(m))
}

/// Part sizes of an ascending decomposition of a graph with `e` edges:
/// `i` for `i <= t` and `i - 1` afterwards.
pub fn asd_sizes(e: usize) -> Vec<usize> {
    let (m, t) = asd_shape(e);
    (1..=m).map(|i| if i <= t { i } else { i - 1 }).collect()
}
