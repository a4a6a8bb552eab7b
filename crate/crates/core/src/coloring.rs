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

//! Edge colorings and matching decompositions.

use crate::decomposition::{Decomposition, Witness};
use crate::error::{AsdError, Result};
use crate::graph::{asd_shape, Edge, Graph};

const NONE: u32 = u32::MAX;

/// Proper edge coloring state: `at[v * width + c]` is the neighbor joined to
/// `v` by an edge of color `c`.
struct Palette {
    width: usize,
    at: Vec<u32>,
}

impl Palette {
    fn new(n: usize, width: usize) -> Palette {
        Palette {
            width,
            at: vec![NONE; n * width],
        }
    }

    fn get(&self, v: usize, c: usize) -> Option<usize> {
        let w = self.at[v * self.width + c];
        (w != NONE).then_some(w as usize)
    }

    fn is_free(&self, v: usize, c: usize) -> bool {
        self.at[v * self.width + c] == NONE
    }

    fn free(&self, v: usize) -> usize {
        (0..self.width)
            .find(|&c| self.is_free(v, c))
            .expect("palette has a free color")
    }

    fn set(&mut self, a: usize, b: usize, c: usize) {
        self.at[a * self.width + c] = b as u32;
        self.at[b * self.width + c] = a as u32;
    }

    fn clear(&mut self, a: usize, b: usize, c: usize) {
        self.at[a * self.width + c] = NONE;
        self.at[b * self.width + c] = NONE;
    }

    fn color_of(&self, a: usize, b: usize) -> Option<usize> {
        (0..self.width).find(|&c| self.at[a * self.width + c] == b as u32)
    }

    /// Swaps colors `c` and `d` along the alternating path that leaves
    /// `start` on a `first`-colored edge.
    fn invert_path(&mut self, start: usize, first: usize, second: usize) {
        let mut path = Vec::new();
        let mut x = start;
        let mut col = first;
        while let Some(y) = self.get(x, col) {
            path.push((x, y, col));
            x = y;
            col = if col == first { second } else { first };
            if x == start {
                break;
            }
        }
        for &(a, b, c) in &path {
            self.clear(a, b, c);
        }
        for &(a, b, c) in &path {
            let swapped = if c == first { second } else { first };
            self.set(a, b, swapped);
        }
    }

    fn classes(&self, g: &Graph) -> Vec<Graph> {
        let mut buckets: Vec<Vec<Edge>> = vec![Vec::new(); self.width];
        for e in g.edges() {
            let c = self.color_of(e.u, e.v).expect("every edge colored");
            buckets[c].push(*e);
        }
        buckets
            .into_iter()
            .filter(|b| !b.is_empty())
            .map(|b| g.with_edges(b))
            .collect()
    }
}

/// Colors the edges of `g` with at most `Δ+1` colors by fan rotation and
/// alternating-path inversion, returning the non-empty color classes.
pub fn vizing_color(g: &Graph) -> Vec<Graph> {
    if g.is_empty() {
        return Vec::new();
    }
    let width = g.max_degree() + 1;
    let mut pal = Palette::new(g.n(), width);
    let adj = g.adjacency();
    let mut in_fan = vec![false; g.n()];
    for e in g.edges() {
        let u = e.u;
        // Maximal fan at u starting from the uncolored edge.
        let mut fan = vec![e.v];
        in_fan[e.v] = true;
        loop {
            let last = *fan.last().unwrap();
            let next = adj[u]
                .iter()
                .copied()
                .find(|&w| !in_fan[w] && pal.color_of(u, w).is_some_and(|c| pal.is_free(last, c)));
            match next {
                Some(w) => {
                    in_fan[w] = true;
                    fan.push(w);
                }
                None => break,
            }
        }
        for &w in &fan {
            in_fan[w] = false;
        }
        let c = pal.free(u);
        let d = pal.free(*fan.last().unwrap());
        if c != d {
            pal.invert_path(u, d, c);
        }
        // Longest prefix that is still a fan, stopping where d is free.
        let mut w_idx = None;
        for i in 0..fan.len() {
            if i > 0 {
                let ok = pal.color_of(u, fan[i]).is_some_and(|col| pal.is_free(fan[i - 1], col));
                if !ok {
                    break;
                }
            }
            if pal.is_free(fan[i], d) {
                w_idx = Some(i);
                break;
            }
        }
        let w_idx = w_idx.expect("fan vertex with the free color exists");
        // Rotate the prefix: each fan edge takes its successor's color.
        for i in 0..w_idx {
            let next_col = pal.color_of(u, fan[i + 1]).unwrap();
            pal.clear(u, fan[i + 1], next_col);
            pal.set(u, fan[i], next_col);
        }
        pal.set(u, fan[w_idx], d);
    }
    pal.classes(g)
}

/// Colors a bipartite graph with exactly `Δ` colors. `left` and `right`
/// list the two sides; every edge must join them.
pub fn konig_color(g: &Graph, left: &[usize], right: &[usize]) -> Result<Vec<Graph>> {
    let mut side = vec![0u8; g.n()];
    for &x in left {
        side[x] |= 1;
    }
    for &y in right {
        side[y] |= 2;
    }
    if side.contains(&3) {
        return Err(AsdError::pre("konig_color", "the two sides overlap"));
    }
    if let Some(e) = g.edges().iter().find(|e| side[e.u] | side[e.v] != 3) {
        return Err(AsdError::pre(
            "konig_color",
            format!("edge ({},{}) does not cross the bipartition", e.u, e.v),
        ));
    }
    if g.is_empty() {
        return Ok(Vec::new());
    }
    let width = g.max_degree();
    let mut pal = Palette::new(g.n(), width);
    for e in g.edges() {
        let (u, v) = (e.u, e.v);
        let a = pal.free(u);
        if !pal.is_free(v, a) {
            let b = pal.free(v);
            pal.invert_path(v, a, b);
        }
        pal.set(u, v, a);
    }
    let classes = pal.classes(g);
    debug_assert_eq!(classes.len(), width);
    Ok(classes)
}

/// Rebalances edge-disjoint matchings until their sizes differ by at most
/// one, keeping their union.
///
/// Each step takes the first smallest and first largest matching and swaps
/// the first (by smallest vertex) component of their union that is a path
/// with more edges in the larger one.
pub fn balance_matchings(family: &[Graph]) -> Vec<Graph> {
    let mut fam: Vec<Vec<Edge>> = family.iter().map(|g| g.edges().to_vec()).collect();
    let n = family.iter().map(Graph::n).max().unwrap_or(0);
    loop {
        let sizes: Vec<usize> = fam.iter().map(Vec::len).collect();
        let Some(&lo) = sizes.iter().min() else { break };
        let hi = *sizes.iter().max().unwrap();
        if hi - lo <= 1 {
            break;
        }
        let i = sizes.iter().position(|&s| s == lo).unwrap();
        let k = sizes.iter().position(|&s| s == hi).unwrap();
        let union = Graph::from_edges(n, fam[i].iter().chain(&fam[k]).copied());
        let big = Graph::from_edges(n, fam[k].iter().copied());
        let path = union
            .components()
            .into_iter()
            .find(|comp| {
                let in_big = comp.iter().filter(|e| big.contains(e)).count();
                2 * in_big > comp.len()
            })
            .expect("larger matching dominates some component");
        let small_set = Graph::from_edges(n, fam[i].iter().copied());
        let (to_small, to_big): (Vec<Edge>, Vec<Edge>) = path.iter().partition(|e| big.contains(e));
        fam[i].retain(|e| !path.contains(e));
        fam[k].retain(|e| !path.contains(e));
        debug_assert!(to_big.iter().all(|e| small_set.contains(e)));
        fam[i].extend(to_small);
        fam[k].extend(to_big);
    }
    fam.into_iter()
        .zip(family)
        .map(|(edges, g)| g.with_edges(edges))
        .collect()
}

/// Witness between two matchings with `|b| - |a|` in `{0, 1}`: the i-th
/// edge of `a` goes onto the i-th edge of `b`.
pub fn matching_witness(a: &Graph, b: &Graph) -> Witness {
    let map = a
        .edges()
        .iter()
        .zip(b.edges())
        .flat_map(|(x, y)| [(x.u, y.u), (x.v, y.v)])
        .collect();
    Witness::from_map(a, b, map)
}

/// Ascending decomposition into matchings of a graph with
/// `Δ <= ⌊m/2⌋ - 1`.
///
/// A matching `M*` of size `t` is cut from the largest color class; the
/// rest is colored again and balanced into `⌊m/2⌋` equal matchings, which
/// are split into complementary prefix/suffix pairs of sizes `i` and
/// `m-1-i` (even `m`) or `m-i` (odd `m`).
pub fn matching_asd(g: &Graph) -> Result<Decomposition> {
    const OP: &str = "matching_asd";
    let e = g.edge_count();
    if e == 0 {
        return Ok(Decomposition::empty());
    }
    let (m, t) = asd_shape(e);
    let half = m / 2;
    let delta = g.max_degree();
    if delta + 1 > half {
        return Err(AsdError::pre(
            OP,
            format!("Δ = {delta} exceeds ⌊m/2⌋ - 1 = {} for m = {m}", half as i64 - 1),
        ));
    }
    let classes = vizing_color(g);
    let largest = classes
        .iter()
        .enumerate()
        .max_by_key(|(i, c)| (c.edge_count(), std::cmp::Reverse(*i)))
        .map(|(_, c)| c)
        .unwrap();
    if largest.edge_count() < t {
        return Err(AsdError::infeasible(
            OP,
            format!("largest color class is smaller than t = {t}"),
        ));
    }
    let m_star = g.with_edges(largest.edges()[..t].iter().copied());
    let rest = g.difference(&m_star);
    let mut family = vizing_color(&rest);
    if family.len() > half {
        return Err(AsdError::infeasible(OP, "coloring used more than ⌊m/2⌋ classes"));
    }
    family.resize(half, Graph::empty(g.n()));
    let family = balance_matchings(&family);
    let per = if m % 2 == 0 { m - 1 } else { m };
    debug_assert!(family.iter().all(|f| f.edge_count() == per));

    // h[j] has j edges for j in 1..m.
    let mut h: Vec<Graph> = vec![Graph::empty(g.n()); m];
    let split = |f: &Graph, i: usize| {
        (
            f.with_edges(f.edges()[..i].iter().copied()),
            f.with_edges(f.edges()[i..].iter().copied()),
        )
    };
    if m % 2 == 0 {
        h[m - 1] = family[half - 1].clone();
        for i in 1..half {
            let (a, b) = split(&family[i - 1], i);
            h[i] = a;
            h[m - 1 - i] = b;
        }
    } else {
        for i in 1..=half {
            let (a, b) = split(&family[i - 1], i);
            h[i] = a;
            h[m - i] = b;
        }
    }
    let mut parts: Vec<Graph> = Vec::with_capacity(m);
    parts.extend(h[1..t].iter().cloned());
    parts.push(m_star);
    parts.extend(h[t..m].iter().cloned());
    let witnesses = parts.windows(2).map(|w| matching_witness(&w[0], &w[1])).collect();
    Ok(Decomposition::from_parts(parts, witnesses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, Family, GeneratorSpec};
    use crate::verifier::verify_decomposition;

    fn build(family: Family) -> Graph {
        generate(&GeneratorSpec { family, seed: 0 }).unwrap()
    }

    fn assert_partition(g: &Graph, classes: &[Graph]) {
        let mut all: Vec<Edge> = classes.iter().flat_map(|c| c.edges().to_vec()).collect();
        all.sort();
        assert_eq!(all, g.edges());
        assert!(classes.iter().all(Graph::is_matching));
    }

    #[test]
    fn vizing_examples() {
        let c5 = build(Family::Cycle(5));
        let classes = vizing_color(&c5);
        assert_eq!(classes.len(), 3);
        let mut sizes: Vec<usize> = classes.iter().map(Graph::edge_count).collect();
        sizes.sort();
        assert_eq!(sizes, vec![1, 2, 2]);
        assert_partition(&c5, &classes);
        let k4 = build(Family::Complete(4));
        let classes = vizing_color(&k4);
        assert!(classes.len() <= 4);
        assert_partition(&k4, &classes);
        assert_eq!(vizing_color(&build(Family::Matching(1))).len(), 1);
    }

    #[test]
    fn konig_examples() {
        let k22 = build(Family::CompleteBipartite(2, 2));
        let classes = konig_color(&k22, &[0, 1], &[2, 3]).unwrap();
        assert_eq!(classes.len(), 2);
        assert!(classes.iter().all(|c| c.edge_count() == 2));
        let k33 = build(Family::CompleteBipartite(3, 3));
        let classes = konig_color(&k33, &[0, 1, 2], &[3, 4, 5]).unwrap();
        assert_eq!(classes.len(), 3);
        assert_partition(&k33, &classes);
        let p = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(konig_color(&p, &[1], &[0, 2]).unwrap().len(), 2);
        assert!(konig_color(&p, &[0, 1], &[2]).is_err());
    }

    #[test]
    fn balance_examples() {
        let two = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        let out = balance_matchings(&[two.clone(), Graph::empty(4)]);
        assert_eq!(out.iter().map(Graph::edge_count).collect::<Vec<_>>(), vec![1, 1]);
        let p4 = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let a = p4.with_edges([Edge::new(0, 1), Edge::new(2, 3)]);
        let b = p4.with_edges([Edge::new(1, 2)]);
        let out = balance_matchings(&[a.clone(), b.clone()]);
        assert_eq!(out, vec![a, b]);
        let three = build(Family::Matching(3));
        let out = balance_matchings(&[three, Graph::empty(6), Graph::empty(6)]);
        assert!(out.iter().all(|g| g.edge_count() == 1));
    }

    #[test]
    fn matching_asd_examples() {
        let c21 = build(Family::Cycle(21));
        let d = matching_asd(&c21).unwrap();
        assert_eq!(d.sizes(), vec![1, 2, 3, 4, 5, 6]);
        assert!(verify_decomposition(&c21, &d).ok);
        let c16 = build(Family::Cycle(16));
        let d = matching_asd(&c16).unwrap();
        assert_eq!(d.sizes(), vec![1, 1, 2, 3, 4, 5]);
        assert!(verify_decomposition(&c16, &d).ok);
        assert!(matches!(
            matching_asd(&build(Family::Complete(4))),
            Err(AsdError::Precondition { .. })
        ));
    }
}
