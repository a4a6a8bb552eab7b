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

//! Independent checks of ascending decompositions.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::census::{components, Shape};
use crate::decomposition::{image_edges, Decomposition, Witness, WitnessKind};
use crate::graph::{asd_shape, asd_sizes, Edge, Graph};

type VertexMap = Vec<(usize, usize)>;

/// Largest vertex count handled by the unstructured search in [`embeds`].
pub const SEARCH_VERTEX_CAP: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub check: String,
    pub index: usize,
    pub detail: String,
}

/// Outcome of [`verify_decomposition`]. `ok` holds iff there are no failures
/// and no undecided pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub failures: Vec<Failure>,
    pub undecided: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Failed,
    Undecided,
}

impl VerifyReport {
    pub fn verdict(&self) -> Verdict {
        if !self.failures.is_empty() {
            Verdict::Failed
        } else if !self.undecided.is_empty() {
            Verdict::Undecided
        } else {
            Verdict::Ok
        }
    }
}

/// Checks disjointness, cover, the size sequence, and every consecutive
/// pair (by witness when present, otherwise by [`embeds`]).
pub fn verify_decomposition(g: &Graph, d: &Decomposition) -> VerifyReport {
    let mut failures = Vec::new();
    let mut fail = |check: &str, index: usize, detail: String| {
        failures.push(Failure {
            check: check.to_string(),
            index,
            detail,
        })
    };
    let mut owner: BTreeMap<Edge, usize> = BTreeMap::new();
    for (i, part) in d.parts.iter().enumerate() {
        for e in part.edges() {
            if !g.contains(e) {
                fail("cover", i, format!("edge ({},{}) is not in the graph", e.u, e.v));
            }
            if let Some(j) = owner.insert(*e, i) {
                fail("disjoint", i, format!("edge ({},{}) also in part {j}", e.u, e.v));
            }
        }
    }
    for e in g.edges() {
        if !owner.contains_key(e) {
            fail("union", 0, format!("edge ({},{}) is in no part", e.u, e.v));
        }
    }
    let (m, t) = asd_shape(g.edge_count());
    if d.m != m || d.t != t {
        fail(
            "sizes",
            0,
            format!("declared (m,t) = ({},{}), expected ({m},{t})", d.m, d.t),
        );
    }
    let expected = asd_sizes(g.edge_count());
    if d.parts.len() != expected.len() {
        fail(
            "sizes",
            0,
            format!("{} parts, expected {}", d.parts.len(), expected.len()),
        );
    }
    for (i, (part, &want)) in d.parts.iter().zip(&expected).enumerate() {
        if part.edge_count() != want {
            fail(
                "sizes",
                i,
                format!("part has {} edges, expected {want}", part.edge_count()),
            );
        }
    }

    let pairs = d.parts.len().saturating_sub(1);
    let mut undecided = Vec::new();
    if !d.witnesses.is_empty() && d.witnesses.len() != pairs {
        fail(
            "witnesses",
            0,
            format!("{} witnesses for {pairs} pairs", d.witnesses.len()),
        );
    } else {
        for i in 0..pairs {
            let (a, b) = (&d.parts[i], &d.parts[i + 1]);
            if let Some(w) = d.witnesses.get(i) {
                if let Err(detail) = validate_witness(a, b, w) {
                    fail("witness", i, detail);
                }
            } else {
                match embeds(a, b) {
                    EmbedOutcome::Found(_) => {}
                    EmbedOutcome::Absent => fail("ascending", i, format!("part {i} does not embed in part {}", i + 1)),
                    EmbedOutcome::Undecided => undecided.push(i),
                }
            }
        }
    }
    VerifyReport {
        ok: failures.is_empty() && undecided.is_empty(),
        failures,
        undecided,
    }
}

/// Validates a witness for the pair `(from, to)`.
pub fn validate_witness(from: &Graph, to: &Graph, w: &Witness) -> Result<(), String> {
    let domain: Vec<usize> = w.map.iter().map(|p| p.0).collect();
    if domain != from.vertices() {
        return Err("map domain differs from the part's vertex set".into());
    }
    let mut values: Vec<usize> = w.map.iter().map(|p| p.1).collect();
    values.sort_unstable();
    if values.windows(2).any(|p| p[0] == p[1]) {
        return Err("map is not injective".into());
    }
    if values.last().is_some_and(|&v| v >= to.n()) {
        return Err("map leaves the vertex range".into());
    }
    let image = image_edges(from, &w.map);
    if let Some(e) = image.iter().find(|e| !to.contains(e)) {
        return Err(format!("image edge ({},{}) missing from the next part", e.u, e.v));
    }
    match w.kind {
        WitnessKind::Iso => {
            if to.edge_count() != from.edge_count() {
                return Err("isomorphism between parts of different sizes".into());
            }
        }
        WitnessKind::Ext => {
            if to.edge_count() != from.edge_count() + 1 {
                return Err("extension must add exactly one edge".into());
            }
            match w.extra_edge {
                Some(e) if to.contains(&e) && image.binary_search(&e).is_err() => {}
                _ => return Err("extra edge missing or already covered".into()),
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedOutcome {
    Found(Witness),
    Absent,
    Undecided,
}

/// Decides whether `h1` is isomorphic to a subgraph of `h2`.
///
/// Star forests are decided exactly by comparing sorted star sizes. Other
/// component-structured inputs first try a component-by-component
/// assignment; if that fails and both graphs have at most
/// [`SEARCH_VERTEX_CAP`] vertices a full search decides, otherwise the
/// result is undecided.
pub fn embeds(h1: &Graph, h2: &Graph) -> EmbedOutcome {
    if h1.edge_count() > h2.edge_count() || !degrees_dominated(h1, h2) {
        return EmbedOutcome::Absent;
    }
    if h1.is_empty() {
        return EmbedOutcome::Found(Witness::from_map(h1, h2, Vec::new()));
    }
    let c1 = components(h1);
    let c2 = components(h2);
    let stars = |cs: &[crate::census::Component]| cs.iter().all(|c| matches!(c.shape, Shape::Star(_)));
    if stars(&c1) && stars(&c2) {
        return match star_forest_map(&c1, &c2) {
            Some(map) => EmbedOutcome::Found(Witness::from_map(h1, h2, map)),
            None => EmbedOutcome::Absent,
        };
    }
    if let Some(map) = structured_map(h1, h2) {
        return EmbedOutcome::Found(Witness::from_map(h1, h2, map));
    }
    if h1.vertices().len() <= SEARCH_VERTEX_CAP && h2.vertices().len() <= SEARCH_VERTEX_CAP {
        return match search_embedding(h1, h2, usize::MAX) {
            SearchOutcome::Found(map) => EmbedOutcome::Found(Witness::from_map(h1, h2, map)),
            _ => EmbedOutcome::Absent,
        };
    }
    EmbedOutcome::Undecided
}

fn degrees_dominated(h1: &Graph, h2: &Graph) -> bool {
    let sorted = |g: &Graph| {
        let mut d: Vec<usize> = g.degrees().into_iter().filter(|&x| x > 0).collect();
        d.sort_unstable_by(|a, b| b.cmp(a));
        d
    };
    let (d1, d2) = (sorted(h1), sorted(h2));
    d1.len() <= d2.len() && d1.iter().zip(&d2).all(|(a, b)| a <= b)
}

/// Largest stars of `h1` go to the largest stars of `h2`, center to center.
fn star_forest_map(c1: &[crate::census::Component], c2: &[crate::census::Component]) -> Option<Vec<(usize, usize)>> {
    let size = |c: &crate::census::Component| c.edges.len();
    let mut a: Vec<&crate::census::Component> = c1.iter().collect();
    let mut b: Vec<&crate::census::Component> = c2.iter().collect();
    a.sort_by_key(|c| std::cmp::Reverse(size(c)));
    b.sort_by_key(|c| std::cmp::Reverse(size(c)));
    if a.len() > b.len() {
        return None;
    }
    let mut map = Vec::new();
    for (x, y) in a.iter().zip(&b) {
        if size(x) > size(y) {
            return None;
        }
        map.extend(x.order.iter().copied().zip(y.order.iter().copied()));
    }
    Some(map)
}

/// Injects the non-edge components of `h1` into distinct components of
/// `h2`, then places the isolated edges of `h1` on free edges.
fn structured_map(h1: &Graph, h2: &Graph) -> Option<Vec<(usize, usize)>> {
    let c1 = components(h1);
    let c2 = components(h2);
    let big: Vec<&crate::census::Component> = c1.iter().filter(|c| c.shape != Shape::Star(1)).collect();
    let singles = c1.len() - big.len();
    let graphs2: Vec<Graph> = c2
        .iter()
        .map(|c| Graph::from_edges(h2.n(), c.edges.iter().copied()))
        .collect();
    // Candidate component maps, computed lazily per pair.
    let mut cache: BTreeMap<(usize, usize), Option<VertexMap>> = BTreeMap::new();
    let mut fits = |i: usize, j: usize| -> Option<Vec<(usize, usize)>> {
        cache
            .entry((i, j))
            .or_insert_with(|| component_map(big[i], &c2[j], &graphs2[j]))
            .clone()
    };
    let adj: Vec<Vec<usize>> = (0..big.len())
        .map(|i| (0..c2.len()).filter(|&j| fits(i, j).is_some()).collect())
        .collect();
    let assignment = crate::matching::bipartite_matching(big.len(), c2.len(), &adj);
    if assignment.iter().any(Option::is_none) {
        return None;
    }
    let mut map = Vec::new();
    let mut used = vec![false; h2.n()];
    for (i, j) in assignment.iter().enumerate() {
        let part = fits(i, j.unwrap()).unwrap();
        for &(_, y) in &part {
            used[y] = true;
        }
        map.extend(part);
    }
    let free = free_matching(h2, &used, singles)?;
    for (c, e) in c1.iter().filter(|c| c.shape == Shape::Star(1)).zip(free) {
        map.push((c.order[0], e.u));
        map.push((c.order[1], e.v));
    }
    Some(map)
}

fn component_map(
    c: &crate::census::Component,
    target: &crate::census::Component,
    target_graph: &Graph,
) -> Option<Vec<(usize, usize)>> {
    if c.edges.len() > target.edges.len() {
        return None;
    }
    if c.shape == target.shape && c.shape.is_exact() {
        return Some(c.order.iter().copied().zip(target.order.iter().copied()).collect());
    }
    if let Shape::Star(k) = c.shape {
        let adj = target_graph.adjacency();
        let center = (0..adj.len()).find(|&v| adj[v].len() >= k)?;
        let mut map = vec![(c.order[0], center)];
        map.extend(c.order[1..].iter().copied().zip(adj[center].iter().copied()));
        return Some(map);
    }
    let g = Graph::from_edges(target_graph.n(), c.edges.iter().copied());
    search_embedding(&g, target_graph, 100_000).found()
}

/// Up to `count` pairwise disjoint edges of `h` avoiding `used`, preferring
/// edges at low-degree vertices.
fn free_matching(h: &Graph, used: &[bool], count: usize) -> Option<Vec<Edge>> {
    if count == 0 {
        return Some(Vec::new());
    }
    let mut taken = used.to_vec();
    let mut out = Vec::new();
    let mut deg = vec![0usize; h.n()];
    for e in h.edges() {
        if !taken[e.u] && !taken[e.v] {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
    }
    let mut candidates: Vec<Edge> = h.edges().to_vec();
    candidates.sort_by_key(|e| (deg[e.u].min(deg[e.v]), deg[e.u] + deg[e.v], *e));
    for e in candidates {
        if out.len() == count {
            break;
        }
        if !taken[e.u] && !taken[e.v] {
            taken[e.u] = true;
            taken[e.v] = true;
            out.push(e);
        }
    }
    (out.len() == count).then_some(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(Vec<(usize, usize)>),
    Absent,
    /// The node budget ran out first.
    Exhausted,
}

impl SearchOutcome {
    pub fn found(self) -> Option<Vec<(usize, usize)>> {
        match self {
            SearchOutcome::Found(m) => Some(m),
            _ => None,
        }
    }
}

/// Backtracking search for an embedding of `h1` into `h2` (subgraph, not
/// induced), visiting at most `budget` nodes.
pub fn search_embedding(h1: &Graph, h2: &Graph, budget: usize) -> SearchOutcome {
    let mut found = None;
    let complete = for_each_embedding(h1, h2, budget, |map| {
        found = Some(map.to_vec());
        ControlFlow::Break(())
    });
    match (found, complete) {
        (Some(m), _) => SearchOutcome::Found(m),
        (None, true) => SearchOutcome::Absent,
        (None, false) => SearchOutcome::Exhausted,
    }
}

/// Calls `visit` with every embedding of `h1` into `h2` (as sorted
/// `(x, φ(x))` pairs) until it breaks. Returns false if the budget ran out.
pub fn for_each_embedding(
    h1: &Graph,
    h2: &Graph,
    budget: usize,
    mut visit: impl FnMut(&[(usize, usize)]) -> ControlFlow<()>,
) -> bool {
    let (g1, labels1) = h1.compact();
    let (g2, labels2) = h2.compact();
    if g1.n() > g2.n() || g1.edge_count() > g2.edge_count() {
        return true;
    }
    if g1.n() == 0 {
        let _ = visit(&[]);
        return true;
    }
    let adj1 = g1.adjacency();
    let adj2 = g2.adjacency();
    let n1 = g1.n();
    // Connectivity-first vertex order, starting from the highest degree.
    let mut order = Vec::with_capacity(n1);
    let mut placed = vec![false; n1];
    let mut links = vec![0usize; n1];
    while order.len() < n1 {
        let next = (0..n1)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| (links[v], adj1[v].len(), std::cmp::Reverse(v)))
            .unwrap();
        placed[next] = true;
        order.push(next);
        for &w in &adj1[next] {
            links[w] += 1;
        }
    }
    let mut pos = vec![0; n1];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let parents: Vec<Vec<usize>> = order
        .iter()
        .map(|&v| adj1[v].iter().copied().filter(|&w| pos[w] < pos[v]).collect())
        .collect();
    let mut by_degree: Vec<usize> = (0..g2.n()).collect();
    by_degree.sort_by_key(|&w| std::cmp::Reverse(adj2[w].len()));

    struct State<'a> {
        order: &'a [usize],
        parents: &'a [Vec<usize>],
        adj1: &'a [Vec<usize>],
        adj2: &'a [Vec<usize>],
        by_degree: &'a [usize],
        map: Vec<usize>,
        used: Vec<bool>,
        budget: usize,
        exhausted: bool,
    }

    fn extend(s: &mut State<'_>, depth: usize, emit: &mut dyn FnMut(&[usize]) -> ControlFlow<()>) -> ControlFlow<()> {
        if depth == s.order.len() {
            return emit(&s.map);
        }
        if s.budget == 0 {
            s.exhausted = true;
            return ControlFlow::Break(());
        }
        s.budget -= 1;
        let v = s.order[depth];
        let need = s.adj1[v].len();
        let candidates: Vec<usize> = match s.parents[depth].first() {
            Some(&p) => s.adj2[s.map[p]].clone(),
            None => s.by_degree.to_vec(),
        };
        for w in candidates {
            if s.used[w] || s.adj2[w].len() < need {
                continue;
            }
            let consistent = s.parents[depth]
                .iter()
                .all(|&p| s.adj2[s.map[p]].binary_search(&w).is_ok());
            if !consistent {
                continue;
            }
            s.map[v] = w;
            s.used[w] = true;
            let flow = extend(s, depth + 1, emit);
            s.used[w] = false;
            if flow.is_break() {
                return flow;
            }
        }
        ControlFlow::Continue(())
    }

    let mut state = State {
        order: &order,
        parents: &parents,
        adj1: &adj1,
        adj2: &adj2,
        by_degree: &by_degree,
        map: vec![usize::MAX; n1],
        used: vec![false; g2.n()],
        budget,
        exhausted: false,
    };
    let mut buffer = Vec::with_capacity(n1);
    let mut emit = |local: &[usize]| {
        buffer.clear();
        buffer.extend((0..n1).map(|v| (labels1[v], labels2[local[v]])));
        buffer.sort_unstable();
        visit(&buffer)
    };
    let _ = extend(&mut state, 0, &mut emit);
    !state.exhausted
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, pairs: &[(usize, usize)]) -> Graph {
        Graph::new(n, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn embed_examples() {
        let s2 = g(3, &[(0, 1), (0, 2)]);
        let s3 = g(4, &[(3, 0), (3, 1), (3, 2)]);
        match embeds(&s2, &s3) {
            EmbedOutcome::Found(w) => {
                assert_eq!(w.apply(0), Some(3));
            }
            other => panic!("{other:?}"),
        }
        let k3 = g(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!(matches!(embeds(&s2, &k3), EmbedOutcome::Found(_)));
        let p4 = g(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(embeds(&s3, &p4), EmbedOutcome::Absent);
        let m2 = g(4, &[(0, 1), (2, 3)]);
        assert!(matches!(embeds(&m2, &p4), EmbedOutcome::Found(_)));
        assert_eq!(embeds(&p4, &m2), EmbedOutcome::Absent);
    }

    #[test]
    fn verify_examples() {
        let k3 = g(3, &[(0, 1), (1, 2), (0, 2)]);
        let h1 = g(3, &[(0, 1)]);
        let h2 = g(3, &[(1, 2), (0, 2)]);
        let d = Decomposition::from_parts(vec![h1.clone(), h2.clone()], Vec::new());
        assert!(verify_decomposition(&k3, &d).ok);

        let w = Witness::from_map(&h1, &h2, vec![(0, 0), (1, 2)]);
        let d = Decomposition::from_parts(vec![h1.clone(), h2.clone()], vec![w]);
        assert!(verify_decomposition(&k3, &d).ok);

        let shared = Decomposition::from_parts(vec![h1.clone(), g(3, &[(0, 1), (0, 2)])], Vec::new());
        let r = verify_decomposition(&k3, &shared);
        assert!(r.failures.iter().any(|f| f.check == "disjoint" && f.index == 1));

        let four = g(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        let bad = Decomposition::from_parts(vec![g(4, &[(0, 1)]), g(4, &[(1, 2), (2, 3), (0, 3)])], Vec::new());
        let r = verify_decomposition(&four, &bad);
        assert!(r.failures.iter().any(|f| f.check == "sizes"));
    }

    #[test]
    fn bad_witnesses_rejected() {
        let h1 = g(4, &[(0, 1)]);
        let h2 = g(4, &[(1, 2), (2, 3)]);
        let not_injective = Witness {
            kind: WitnessKind::Ext,
            map: vec![(0, 2), (1, 2)],
            extra_edge: Some(Edge::new(1, 2)),
        };
        assert!(validate_witness(&h1, &h2, &not_injective).is_err());
        let wrong_extra = Witness {
            kind: WitnessKind::Ext,
            map: vec![(0, 1), (1, 2)],
            extra_edge: Some(Edge::new(1, 2)),
        };
        assert!(validate_witness(&h1, &h2, &wrong_extra).is_err());
        let good = Witness {
            kind: WitnessKind::Ext,
            map: vec![(0, 1), (1, 2)],
            extra_edge: Some(Edge::new(2, 3)),
        };
        assert!(validate_witness(&h1, &h2, &good).is_ok());
    }

    #[test]
    fn search_counts_embeddings() {
        let e = g(2, &[(0, 1)]);
        let k3 = g(3, &[(0, 1), (1, 2), (0, 2)]);
        let mut count = 0;
        assert!(for_each_embedding(&e, &k3, usize::MAX, |_| {
            count += 1;
            ControlFlow::Continue(())
        }));
        assert_eq!(count, 6);
    }
}
