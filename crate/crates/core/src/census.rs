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

//! Component shapes, censuses and isomorphisms between component-structured
//! graphs.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::graph::{Edge, Graph};

/// Largest component that receives an exact canonical code.
pub const CANON_VERTEX_CAP: usize = 16;
const CANON_NODE_BUDGET: usize = 200_000;

/// Isomorphism type of a connected component.
///
/// Recognized families are checked in the order star, complete bipartite,
/// path, cycle, so every component gets exactly one tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Shape {
    /// Star with the given number of edges (`K_2` is `Star(1)`).
    Star(usize),
    /// `K_{a,b}` with `2 <= a <= b`.
    CompleteBipartite(usize, usize),
    /// Path with the given number of edges (at least 3).
    Path(usize),
    /// Cycle of the given length (3 or at least 5).
    Cycle(usize),
    /// Canonical code of a small unrecognized component.
    Other(String),
    /// Unrecognized component above the canonical-code cap. Equal tags do not
    /// imply isomorphism.
    Large {
        vertices: usize,
        edges: usize,
        invariant: u64,
    },
}

impl Shape {
    pub fn edge_count(&self) -> usize {
        match self {
            Shape::Star(k) | Shape::Path(k) | Shape::Cycle(k) => *k,
            Shape::CompleteBipartite(a, b) => a * b,
            Shape::Other(code) => code.split(':').nth(1).and_then(|s| s.parse().ok()).unwrap_or(0),
            Shape::Large { edges, .. } => *edges,
        }
    }

    pub fn vertex_count(&self) -> usize {
        match self {
            Shape::Star(k) | Shape::Path(k) => k + 1,
            Shape::Cycle(k) => *k,
            Shape::CompleteBipartite(a, b) => a + b,
            Shape::Other(code) => code.split(':').next().and_then(|s| s.parse().ok()).unwrap_or(0),
            Shape::Large { vertices, .. } => *vertices,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Shape::Large { .. })
    }
}

/// A connected component with its shape and a canonical vertex order.
///
/// Two components with the same exact shape are isomorphic through their
/// canonical orders: the i-th vertex of one maps to the i-th of the other.
#[derive(Debug, Clone)]
pub struct Component {
    pub shape: Shape,
    pub order: Vec<usize>,
    pub edges: Vec<Edge>,
}

/// Multiset of component shapes of a graph.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ComponentCensus {
    pub entries: BTreeMap<Shape, usize>,
}

impl ComponentCensus {
    pub fn edge_total(&self) -> usize {
        self.entries.iter().map(|(s, c)| s.edge_count() * c).sum()
    }

    pub fn component_count(&self) -> usize {
        self.entries.values().sum()
    }

    /// False if some class relies on a non-exact tag.
    pub fn is_exact(&self) -> bool {
        self.entries.keys().all(Shape::is_exact)
    }

    pub fn is_r_divisible(&self, r: usize) -> bool {
        self.entries.values().all(|c| c % r == 0)
    }

    /// Census with every count divided by `r`.
    pub fn divided(&self, r: usize) -> ComponentCensus {
        ComponentCensus {
            entries: self
                .entries
                .iter()
                .filter(|(_, c)| **c >= r)
                .map(|(s, c)| (s.clone(), c / r))
                .collect(),
        }
    }

    pub fn plus(&self, other: &ComponentCensus) -> ComponentCensus {
        let mut entries = self.entries.clone();
        for (s, c) in &other.entries {
            *entries.entry(s.clone()).or_insert(0) += c;
        }
        ComponentCensus { entries }
    }

    pub fn count(&self, shape: &Shape) -> usize {
        self.entries.get(shape).copied().unwrap_or(0)
    }
}

/// Census of `g`.
pub fn census(g: &Graph) -> ComponentCensus {
    let mut entries = BTreeMap::new();
    for comp in components(g) {
        *entries.entry(comp.shape).or_insert(0) += 1;
    }
    ComponentCensus { entries }
}

/// True iff every isomorphism class of components occurs a multiple of `r`
/// times.
pub fn is_r_divisible(g: &Graph, r: usize) -> bool {
    assert!(r > 0);
    let comps = components(g);
    let mut exact: BTreeMap<&Shape, usize> = BTreeMap::new();
    let mut large: Vec<&Component> = Vec::new();
    for c in &comps {
        if c.shape.is_exact() {
            *exact.entry(&c.shape).or_insert(0) += 1;
        } else {
            large.push(c);
        }
    }
    if exact.values().any(|c| c % r != 0) {
        return false;
    }
    // Large components are grouped by pairwise isomorphism tests.
    let mut classes: Vec<(Graph, usize)> = Vec::new();
    for c in large {
        let g = Graph::from_edges(g.n(), c.edges.iter().copied());
        match classes.iter_mut().find(|(rep, _)| isomorphic_connected(rep, &g)) {
            Some(entry) => entry.1 += 1,
            None => classes.push((g, 1)),
        }
    }
    classes.iter().all(|(_, c)| c % r == 0)
}

fn isomorphic_connected(a: &Graph, b: &Graph) -> bool {
    a.edge_count() == b.edge_count()
        && a.vertices().len() == b.vertices().len()
        && crate::verifier::search_embedding(a, b, usize::MAX).found().is_some()
}

/// Components of `g` with shapes and canonical orders, ordered by smallest
/// vertex.
pub fn components(g: &Graph) -> Vec<Component> {
    g.components().into_iter().map(classify).collect()
}

/// Classifies one connected component given by its edges.
pub fn classify(edges: Vec<Edge>) -> Component {
    let mut verts: Vec<usize> = edges.iter().flat_map(|e| [e.u, e.v]).collect();
    verts.sort_unstable();
    verts.dedup();
    let k = verts.len();
    let local = |x: usize| verts.binary_search(&x).unwrap();
    let mut adj = vec![Vec::new(); k];
    for e in &edges {
        let (a, b) = (local(e.u), local(e.v));
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
    }
    let e = edges.len();
    let (shape, order) = classify_local(k, e, &adj);
    Component {
        shape,
        order: order.into_iter().map(|i| verts[i]).collect(),
        edges,
    }
}

fn classify_local(k: usize, e: usize, adj: &[Vec<usize>]) -> (Shape, Vec<usize>) {
    let deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    if e + 1 == k && max_deg == e {
        let center = deg.iter().position(|&d| d == e).unwrap();
        let mut order = vec![center];
        order.extend(adj[center].iter().copied());
        return (Shape::Star(e), order);
    }
    if let Some((a_side, b_side)) = bipartition(k, adj) {
        let (a, b) = (a_side.len(), b_side.len());
        if a >= 2 && b >= 2 && a * b == e {
            let (first, second) = if a < b || (a == b && a_side[0] < b_side[0]) {
                (a_side, b_side)
            } else {
                (b_side, a_side)
            };
            let shape = Shape::CompleteBipartite(first.len(), second.len());
            return (shape, first.into_iter().chain(second).collect());
        }
    }
    if max_deg <= 2 && e + 1 == k {
        let start = deg.iter().position(|&d| d == 1).unwrap();
        return (Shape::Path(e), walk(start, adj));
    }
    if max_deg <= 2 && e == k {
        return (Shape::Cycle(e), walk(0, adj));
    }
    if k <= CANON_VERTEX_CAP {
        if let Some((code, order)) = canonical_form(k, adj) {
            return (Shape::Other(format!("{k}:{e}:{code:x}")), order);
        }
    }
    let invariant = refinement_invariant(k, adj);
    (
        Shape::Large {
            vertices: k,
            edges: e,
            invariant,
        },
        (0..k).collect(),
    )
}

fn bipartition(k: usize, adj: &[Vec<usize>]) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut side = vec![u8::MAX; k];
    let mut stack = vec![0];
    side[0] = 0;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if side[y] == u8::MAX {
                side[y] = 1 - side[x];
                stack.push(y);
            } else if side[y] == side[x] {
                return None;
            }
        }
    }
    let a = (0..k).filter(|&x| side[x] == 0).collect();
    let b = (0..k).filter(|&x| side[x] == 1).collect();
    Some((a, b))
}

/// Walks a path from an endpoint, or a cycle from vertex 0 toward its
/// smaller neighbor.
fn walk(start: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut order = vec![start];
    let mut prev = usize::MAX;
    let mut cur = start;
    loop {
        let next = adj[cur].iter().copied().find(|&y| y != prev && y != start);
        match next {
            Some(y) if order.len() < adj.len() => {
                order.push(y);
                prev = cur;
                cur = y;
            }
            _ => break,
        }
    }
    order
}

fn refine(colors: &mut [u32], adj: &[Vec<usize>]) {
    let mut classes = count_classes(colors);
    loop {
        let sigs: Vec<(u32, Vec<u32>)> = (0..colors.len())
            .map(|v| {
                let mut nb: Vec<u32> = adj[v].iter().map(|&w| colors[w]).collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let mut sorted = sigs.clone();
        sorted.sort();
        sorted.dedup();
        for (v, sig) in sigs.iter().enumerate() {
            colors[v] = sorted.binary_search(sig).unwrap() as u32;
        }
        let next = sorted.len();
        if next == classes {
            break;
        }
        classes = next;
    }
}

fn count_classes(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Individualization-refinement canonical form. Returns the adjacency code
/// under the canonical order and the order itself, or `None` when the search
/// budget runs out.
fn canonical_form(k: usize, adj: &[Vec<usize>]) -> Option<(u128, Vec<usize>)> {
    let mut colors = vec![0u32; k];
    refine(&mut colors, adj);
    let mut best: Option<(u128, Vec<usize>)> = None;
    let mut budget = CANON_NODE_BUDGET;
    if !canon_search(colors, adj, &mut best, &mut budget) {
        return None;
    }
    best
}

fn canon_search(
    colors: Vec<u32>,
    adj: &[Vec<usize>],
    best: &mut Option<(u128, Vec<usize>)>,
    budget: &mut usize,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    let k = colors.len();
    if count_classes(&colors) == k {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&v| colors[v]);
        let code = adjacency_code(&order, adj);
        if best.as_ref().is_none_or(|(c, _)| code < *c) {
            *best = Some((code, order));
        }
        return true;
    }
    // First non-singleton cell.
    let mut size = vec![0usize; k];
    for &c in &colors {
        size[c as usize] += 1;
    }
    let cell = (0..k).find(|&c| size[c] > 1).unwrap() as u32;
    for v in 0..k {
        if colors[v] != cell {
            continue;
        }
        let mut next: Vec<u32> = colors.iter().map(|&c| c * 2 + 1).collect();
        next[v] = cell * 2;
        refine(&mut next, adj);
        if !canon_search(next, adj, best, budget) {
            return false;
        }
    }
    true
}

fn adjacency_code(order: &[usize], adj: &[Vec<usize>]) -> u128 {
    let k = order.len();
    let mut pos = vec![0; k];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut code: u128 = 0;
    let mut bit = 0;
    for i in 0..k {
        for j in (i + 1)..k {
            if adj[order[i]].binary_search(&order[j]).is_ok() {
                code |= 1u128 << bit;
            }
            bit += 1;
        }
    }
    let _ = pos;
    code
}

fn refinement_invariant(k: usize, adj: &[Vec<usize>]) -> u64 {
    let mut colors = vec![0u32; k];
    refine(&mut colors, adj);
    // FNV-1a over the color histogram and colored degree multisets.
    let mut sigs: Vec<(u32, Vec<u32>)> = (0..k)
        .map(|v| {
            let mut nb: Vec<u32> = adj[v].iter().map(|&w| colors[w]).collect();
            nb.sort_unstable();
            (colors[v], nb)
        })
        .collect();
    sigs.sort();
    let mut h: u64 = 0xcbf29ce484222325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    for (c, nb) in sigs {
        feed(c as u64);
        feed(nb.len() as u64);
        for x in nb {
            feed(x as u64);
        }
    }
    h
}

/// An isomorphism between `a` and `b`, as pairs `(x, φ(x))` over the
/// non-isolated vertices of `a`. Isolated vertices are ignored.
pub fn isomorphism(a: &Graph, b: &Graph) -> Option<Vec<(usize, usize)>> {
    if a.edge_count() != b.edge_count() {
        return None;
    }
    let ca = components(a);
    let cb = components(b);
    if ca.len() != cb.len() {
        return None;
    }
    let mut by_shape: BTreeMap<&Shape, Vec<&Component>> = BTreeMap::new();
    for c in &cb {
        by_shape.entry(&c.shape).or_default().push(c);
    }
    let mut cursor: BTreeMap<&Shape, usize> = BTreeMap::new();
    let mut map = Vec::new();
    let mut pending_large: Vec<&Component> = Vec::new();
    for c in &ca {
        if !c.shape.is_exact() {
            pending_large.push(c);
            continue;
        }
        let pool = by_shape.get(&c.shape)?;
        let slot = cursor.entry(&c.shape).or_insert(0);
        let target = pool.get(*slot)?;
        *slot += 1;
        map.extend(c.order.iter().copied().zip(target.order.iter().copied()));
    }
    // Large components: pair by pairwise search.
    let mut free: Vec<&Component> = cb.iter().filter(|c| !c.shape.is_exact()).collect();
    for c in pending_large {
        let src = Graph::from_edges(a.n(), c.edges.iter().copied());
        let mut found = None;
        for (i, t) in free.iter().enumerate() {
            if t.shape != c.shape {
                continue;
            }
            let dst = Graph::from_edges(b.n(), t.edges.iter().copied());
            if let Some(w) = crate::verifier::search_embedding(&src, &dst, usize::MAX).found() {
                found = Some((i, w));
                break;
            }
        }
        let (i, w) = found?;
        free.remove(i);
        map.extend(w);
    }
    map.sort_unstable();
    Some(map)
}

/// Splits an `r`-divisible graph into `r` isomorphic copies. Within each
/// shape class the components, ordered by smallest vertex, are dealt out in
/// consecutive blocks.
pub fn split_copies(g: &Graph, r: usize) -> Option<Vec<Graph>> {
    let comps = components(g);
    if !comps.iter().all(|c| c.shape.is_exact()) {
        return None;
    }
    let mut classes: BTreeMap<&Shape, Vec<&Component>> = BTreeMap::new();
    for c in &comps {
        classes.entry(&c.shape).or_default().push(c);
    }
    let mut copies: Vec<Vec<Edge>> = vec![Vec::new(); r];
    for list in classes.values() {
        if list.len() % r != 0 {
            return None;
        }
        let block = list.len() / r;
        for (j, c) in list.iter().enumerate() {
            copies[j / block].extend(c.edges.iter().copied());
        }
    }
    Some(
        copies
            .into_iter()
            .map(|edges| Graph::from_edges(g.n(), edges))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, pairs: &[(usize, usize)]) -> Graph {
        Graph::new(n, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn census_examples() {
        let m3 = g(6, &[(0, 1), (2, 3), (4, 5)]);
        let c = census(&m3);
        assert_eq!(c.entries.get(&Shape::Star(1)), Some(&3));
        assert_eq!(c.edge_total(), 3);

        let k22 = g(4, &[(0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(
            census(&k22).entries.keys().collect::<Vec<_>>(),
            vec![&Shape::CompleteBipartite(2, 2)]
        );

        // A four-cycle is K_{2,2}; the star takes its own tag.
        let mixed = g(8, &[(0, 1), (0, 2), (0, 3), (4, 5), (5, 6), (6, 7), (4, 7)]);
        let c = census(&mixed);
        assert_eq!(c.count(&Shape::Star(3)), 1);
        assert_eq!(c.count(&Shape::CompleteBipartite(2, 2)), 1);
        assert_eq!(c.edge_total(), 7);
    }

    #[test]
    fn recognized_shapes() {
        let p4 = g(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(components(&p4)[0].shape, Shape::Path(3));
        let c5 = g(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]);
        assert_eq!(components(&c5)[0].shape, Shape::Cycle(5));
        let k3 = g(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(components(&k3)[0].shape, Shape::Cycle(3));
        let k4 = g(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        match &components(&k4)[0].shape {
            Shape::Other(code) => assert!(code.starts_with("4:6:")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn divisibility() {
        let m4 = g(8, &[(0, 1), (2, 3), (4, 5), (6, 7)]);
        assert!(is_r_divisible(&m4, 4));
        assert!(!is_r_divisible(&m4, 3));
        assert!(is_r_divisible(&Graph::empty(5), 7));
    }

    #[test]
    fn isomorphism_composes_orders() {
        let a = g(6, &[(0, 1), (1, 2), (1, 3), (4, 5)]);
        let b = g(7, &[(6, 2), (3, 5), (5, 0), (5, 4)]);
        let map = isomorphism(&a, &b).unwrap();
        let phi: BTreeMap<usize, usize> = map.into_iter().collect();
        for e in a.edges() {
            assert!(b.has_edge(phi[&e.u], phi[&e.v]));
        }
        let c = g(6, &[(0, 1), (1, 2), (2, 3), (4, 5)]);
        assert!(isomorphism(&a, &c).is_none());
    }

    #[test]
    fn split_into_copies() {
        let m4 = g(8, &[(0, 1), (2, 3), (4, 5), (6, 7)]);
        let parts = split_copies(&m4, 2).unwrap();
        assert_eq!(parts[0].edges(), &[Edge::new(0, 1), Edge::new(2, 3)]);
        assert!(split_copies(&m4, 3).is_none());
    }
}
