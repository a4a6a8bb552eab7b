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

//! Isomorphic star forests from bipartite graphs, and the star/forest
//! interleaving.

use std::collections::BTreeMap;

use crate::census::{is_r_divisible, split_copies};
use crate::coloring::konig_color;
use crate::error::{AsdError, Result};
use crate::graph::{Edge, Graph};

/// A star forest with its centers and their leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarForestPart {
    pub part: Graph,
    pub centers: BTreeMap<usize, Vec<usize>>,
}

impl StarForestPart {
    fn from_centers(n: usize, centers: BTreeMap<usize, Vec<usize>>) -> StarForestPart {
        let part = Graph::from_edges(
            n,
            centers
                .iter()
                .flat_map(|(&c, leaves)| leaves.iter().map(move |&x| Edge::new(c, x))),
        );
        StarForestPart { part, centers }
    }

    /// Sorted star sizes.
    pub fn star_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.centers.values().map(Vec::len).collect();
        sizes.sort_unstable();
        sizes
    }
}

fn side_marks(n: usize, x: &[usize], y: &[usize]) -> Result<Vec<u8>> {
    let mut side = vec![0u8; n];
    for &v in x {
        side[v] |= 1;
    }
    for &v in y {
        side[v] |= 2;
    }
    if side.contains(&3) {
        return Err(AsdError::pre("star_forest_decompose", "the two sides overlap"));
    }
    Ok(side)
}

/// Splits a bipartite graph whose `X`-degrees are below `d` into `d`
/// isomorphic star forests centered in `Y` and a remainder of maximum
/// degree below `d`.
///
/// The star at `y` has `⌊d(y)/d⌋` leaves. The `d(y) mod d` highest-indexed
/// neighbors of `y` form the remainder; the others are cut into groups of
/// `d` in ascending order, each group becomes one vertex of an auxiliary
/// `d`-regular-on-the-right bipartite graph, and a König coloring of it
/// gives the forests.
pub fn star_forest_decompose(h: &Graph, x: &[usize], y: &[usize], d: usize) -> Result<(Vec<StarForestPart>, Graph)> {
    const OP: &str = "star_forest_decompose";
    if d == 0 {
        return Err(AsdError::pre(OP, "d must be positive"));
    }
    let side = side_marks(h.n(), x, y)?;
    if let Some(e) = h.edges().iter().find(|e| side[e.u] | side[e.v] != 3) {
        return Err(AsdError::pre(
            OP,
            format!("edge ({},{}) does not cross the bipartition", e.u, e.v),
        ));
    }
    let degrees = h.degrees();
    if let Some(&v) = x.iter().find(|&&v| degrees[v] >= d) {
        return Err(AsdError::pre(
            OP,
            format!("vertex {v} in X has degree {} >= d = {d}", degrees[v]),
        ));
    }
    let adj = h.adjacency();
    let mut ys: Vec<usize> = y.to_vec();
    ys.sort_unstable();
    ys.dedup();

    let mut remainder = Vec::new();
    // Auxiliary right vertex j stands for group j of centre owner[j].
    let mut owner = Vec::new();
    let mut aux_edges = Vec::new();
    for &c in &ys {
        let nbrs = &adj[c];
        let keep = nbrs.len() - nbrs.len() % d;
        remainder.extend(nbrs[keep..].iter().map(|&v| Edge::new(c, v)));
        for group in nbrs[..keep].chunks(d) {
            let aux = h.n() + owner.len();
            owner.push(c);
            aux_edges.extend(group.iter().map(|&v| Edge::new(v, aux)));
        }
    }
    let remainder = h.with_edges(remainder);
    if owner.is_empty() {
        let empty = StarForestPart::from_centers(h.n(), BTreeMap::new());
        return Ok((vec![empty; d], remainder));
    }
    let aux = Graph::from_edges(h.n() + owner.len(), aux_edges);
    let right: Vec<usize> = (h.n()..aux.n()).collect();
    let classes = konig_color(&aux, x, &right)?;
    debug_assert_eq!(classes.len(), d);
    let forests = classes
        .iter()
        .map(|class| {
            let mut centers: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for e in class.edges() {
                centers.entry(owner[e.v - h.n()]).or_default().push(e.u);
            }
            for leaves in centers.values_mut() {
                leaves.sort_unstable();
            }
            StarForestPart::from_centers(h.n(), centers)
        })
        .collect();
    Ok((forests, remainder))
}

/// Center of a star with at least two edges, or the smaller endpoint of a
/// single edge.
pub fn star_center(s: &Graph) -> Option<usize> {
    match s.edge_count() {
        0 => None,
        1 => Some(s.edges()[0].u),
        k => {
            let deg = s.degrees();
            (0..s.n()).find(|&v| deg[v] == k)
        }
    }
}

/// Result of interleaving a 4-divisible graph with an even star.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarForestSplit {
    pub h_parts: Vec<Graph>,
    pub s_parts: Vec<Graph>,
}

/// Splits a 4-divisible `h` and an edge-disjoint star `s` of even size into
/// four copies of `h/4` and four stars, with `s_1` holding half of `s` and
/// each `h_i` vertex-disjoint from `s_i`.
pub fn combine_star_forest(h: &Graph, s: &Graph) -> Result<StarForestSplit> {
    const OP: &str = "combine_star_forest";
    if !s.edge_count().is_multiple_of(2) {
        return Err(AsdError::pre(OP, format!("star size {} is odd", s.edge_count())));
    }
    if !is_r_divisible(h, 4) {
        return Err(AsdError::pre(OP, "h is not 4-divisible"));
    }
    let mut copies = split_copies(h, 4).ok_or_else(|| AsdError::Unsupported {
        op: OP,
        detail: "h has components without exact shape".into(),
    })?;
    let empty = Graph::empty(h.n().max(s.n()));
    let Some(c) = star_center(s) else {
        return Ok(StarForestSplit {
            h_parts: copies,
            s_parts: vec![empty; 4],
        });
    };
    if s.edges().iter().any(|e| !e.touches(c)) {
        return Err(AsdError::pre(OP, "s is not a star"));
    }
    if s.edges().iter().any(|e| h.contains(e)) {
        return Err(AsdError::pre(OP, "s and h share an edge"));
    }
    if let Some(pos) = copies.iter().position(|g| g.degree(c) > 0) {
        let holder = copies.remove(pos);
        copies.push(holder);
    }
    let leaves: Vec<usize> = s.edges().iter().map(|e| e.other(c)).collect();
    let overlap = |g: &Graph| leaves.iter().filter(|&&v| g.degree(v) > 0).count();
    let mut first: Vec<Graph> = copies.drain(..3).collect();
    first.sort_by_key(|g| overlap(g));
    first.extend(copies);
    let copies = first;

    let half = s.edge_count() / 2;
    let s1: Vec<usize> = leaves
        .iter()
        .copied()
        .filter(|&v| copies[0].degree(v) == 0)
        .take(half)
        .collect();
    if s1.len() < half {
        return Err(AsdError::infeasible(OP, "not enough leaves avoid the first copy"));
    }
    let rest: Vec<usize> = leaves.iter().copied().filter(|v| !s1.contains(v)).collect();
    let (s2, s3): (Vec<usize>, Vec<usize>) = rest.into_iter().partition(|&v| copies[2].degree(v) > 0);
    let star = |ls: &[usize]| s.with_edges(ls.iter().map(|&v| Edge::new(c, v)));
    Ok(StarForestSplit {
        s_parts: vec![star(&s1), star(&s2), star(&s3), s.with_edges([])],
        h_parts: copies,
    })
}
