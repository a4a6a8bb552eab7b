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

//! Almost-decompositions of dense graphs into isomorphic `K_{t,t}`-forests.

use crate::error::{AsdError, Result};
use crate::graph::{Edge, Graph};

/// Projective plane of prime order `p` over `GF(p)^3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectivePlane {
    pub order: usize,
    /// Normalized representative of each point: first nonzero coordinate 1.
    pub points: Vec<[usize; 3]>,
    /// Sorted point indices on each line.
    pub lines: Vec<Vec<usize>>,
    index: Vec<u32>,
}

pub fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Smallest prime that is at least `x`.
pub fn next_prime(x: usize) -> usize {
    (x.max(2)..).find(|&p| is_prime(p)).unwrap()
}

impl ProjectivePlane {
    pub fn new(p: usize) -> Result<ProjectivePlane> {
        if !is_prime(p) {
            return Err(AsdError::pre("projective_plane", format!("{p} is not prime")));
        }
        let mut points = Vec::with_capacity(p * p + p + 1);
        points.push([0, 0, 1]);
        points.extend((0..p).map(|z| [0, 1, z]));
        points.extend((0..p * p).map(|k| [1, k / p, k % p]));
        let mut index = vec![u32::MAX; p * p * p];
        for (i, v) in points.iter().enumerate() {
            index[(v[0] * p + v[1]) * p + v[2]] = i as u32;
        }
        // Lines are the same vectors read as normals.
        let lines = points
            .iter()
            .map(|l| {
                (0..points.len())
                    .filter(|&i| {
                        let x = points[i];
                        (l[0] * x[0] + l[1] * x[1] + l[2] * x[2]) % p == 0
                    })
                    .collect()
            })
            .collect();
        Ok(ProjectivePlane {
            order: p,
            points,
            lines,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn normalize(&self, mut v: [usize; 3]) -> usize {
        let p = self.order;
        let lead = v.iter().copied().find(|&x| x != 0).expect("nonzero vector");
        let inv = (1..p).find(|&y| lead * y % p == 1).unwrap();
        for x in v.iter_mut() {
            *x = *x * inv % p;
        }
        self.index[(v[0] * p + v[1]) * p + v[2]] as usize
    }

    /// The unique line through two distinct points.
    pub fn line_through(&self, a: usize, b: usize) -> usize {
        let p = self.order;
        let (x, y) = (self.points[a], self.points[b]);
        // Coordinates are below p, so each product is below p^2.
        let cross = [
            (x[1] * y[2] + p * p - x[2] * y[1]) % p,
            (x[2] * y[0] + p * p - x[0] * y[2]) % p,
            (x[0] * y[1] + p * p - x[1] * y[0]) % p,
        ];
        self.normalize(cross)
    }
}

/// Edge partition of `g` along the lines of a projective plane of order
/// `p`, the smallest prime with `p >= ⌈√n⌉`, with vertex `v` placed on
/// point `v`. Graphs on fewer than 4 vertices come back as one part.
pub fn plane_partition(g: &Graph) -> (usize, Vec<Graph>) {
    let n = g.n();
    if n < 4 {
        return (0, vec![g.clone()]);
    }
    let p = next_prime((n as f64).sqrt().ceil() as usize);
    let plane = ProjectivePlane::new(p).expect("prime order");
    let mut buckets: Vec<Vec<Edge>> = vec![Vec::new(); plane.len()];
    for e in g.edges() {
        buckets[plane.line_through(e.u, e.v)].push(*e);
    }
    (p, buckets.into_iter().map(|b| g.with_edges(b)).collect())
}

/// A copy of `K_{t,t}` given by its two sides.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct KttBlock {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl KttBlock {
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.left
            .iter()
            .flat_map(move |&a| self.right.iter().map(move |&b| Edge::new(a, b)))
    }

    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.left.iter().chain(&self.right).copied()
    }
}

fn combinations(pool: &[usize], t: usize, mut visit: impl FnMut(&[usize]) -> bool) {
    fn rec(
        pool: &[usize],
        t: usize,
        start: usize,
        cur: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if cur.len() == t {
            return visit(cur);
        }
        for i in start..pool.len() {
            if pool.len() - i < t - cur.len() {
                break;
            }
            cur.push(pool[i]);
            if rec(pool, t, i + 1, cur, visit) {
                return true;
            }
            cur.pop();
        }
        false
    }
    rec(pool, t, 0, &mut Vec::with_capacity(t), &mut visit);
}

fn find_block(adj: &[Vec<bool>], nbrs: &[Vec<usize>], v: usize, t: usize) -> Option<KttBlock> {
    let n = adj.len();
    let mut found = None;
    combinations(&nbrs[v], t, |right| {
        let left: Vec<usize> = (0..n)
            .filter(|&u| !right.contains(&u) && right.iter().all(|&b| adj[u][b]))
            .take(t)
            .collect();
        if left.len() == t {
            found = Some(KttBlock {
                left,
                right: right.to_vec(),
            });
            return true;
        }
        false
    });
    found
}

/// Removes copies of `K_{t,t}` greedily until none is left. Candidate
/// copies are found vertex by vertex from `t`-subsets of the neighborhood.
pub fn greedy_ktt_extract(h: &Graph, t: usize) -> (Vec<KttBlock>, Graph) {
    assert!(t >= 1);
    let (local, labels) = h.compact();
    let n = local.n();
    let mut adj = vec![vec![false; n]; n];
    for e in local.edges() {
        adj[e.u][e.v] = true;
        adj[e.v][e.u] = true;
    }
    let mut nbrs = local.adjacency();
    let mut blocks = Vec::new();
    let mut v = 0;
    while v < n {
        if nbrs[v].len() < t {
            v += 1;
            continue;
        }
        match find_block(&adj, &nbrs, v, t) {
            Some(b) => {
                for e in b.edges() {
                    adj[e.u][e.v] = false;
                    adj[e.v][e.u] = false;
                    nbrs[e.u].retain(|&x| x != e.v);
                    nbrs[e.v].retain(|&x| x != e.u);
                }
                blocks.push(b);
            }
            // Removing edges never creates a block, so v is done for good.
            None => v += 1,
        }
    }
    let mut leftover = Vec::new();
    for a in 0..n {
        for &b in &nbrs[a] {
            if a < b {
                leftover.push(Edge::new(labels[a], labels[b]));
            }
        }
    }
    let relabel = |xs: &[usize]| {
        let mut out: Vec<usize> = xs.iter().map(|&x| labels[x]).collect();
        out.sort_unstable();
        out
    };
    let blocks = blocks
        .into_iter()
        .map(|b| {
            let (l, r) = (relabel(&b.left), relabel(&b.right));
            if l < r {
                KttBlock { left: l, right: r }
            } else {
                KttBlock { left: r, right: l }
            }
        })
        .collect();
    (blocks, h.with_edges(leftover))
}

/// True iff `h` contains a `K_{t,t}`.
pub fn has_ktt(h: &Graph, t: usize) -> bool {
    let (local, _) = h.compact();
    let n = local.n();
    let mut adj = vec![vec![false; n]; n];
    for e in local.edges() {
        adj[e.u][e.v] = true;
        adj[e.v][e.u] = true;
    }
    let nbrs = local.adjacency();
    (0..n).any(|v| nbrs[v].len() >= t && find_block(&adj, &nbrs, v, t).is_some())
}

/// The `2t`-uniform hypergraph of vertex sets of `K_{t,t}` copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverHypergraph {
    pub n: usize,
    pub blocks: Vec<KttBlock>,
}

impl CoverHypergraph {
    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.n];
        for b in &self.blocks {
            for v in b.vertices() {
                deg[v] += 1;
            }
        }
        deg.into_iter().max().unwrap_or(0)
    }

    pub fn uniformity(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.left.len() + b.right.len())
    }
}

/// Hyperedge classes of a greedy matching decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperMatching {
    /// Indices into the cover's blocks, one list per class.
    pub classes: Vec<Vec<usize>>,
    pub target: usize,
}

impl HyperMatching {
    pub fn achieved(&self) -> usize {
        self.classes.len()
    }

    /// Largest class count greedy can produce: every hyperedge meets at
    /// most `r(Δ-1)` others.
    pub fn bound(cover: &CoverHypergraph) -> usize {
        1 + cover.uniformity() * cover.max_degree().saturating_sub(1)
    }
}

/// Puts every hyperedge, in order, into the lowest-indexed class it does
/// not conflict with.
pub fn hypergraph_match_decompose(cover: &CoverHypergraph, target: usize) -> HyperMatching {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut used: Vec<Vec<bool>> = Vec::new();
    for (i, b) in cover.blocks.iter().enumerate() {
        let slot = (0..classes.len()).find(|&c| b.vertices().all(|v| !used[c][v]));
        let c = slot.unwrap_or_else(|| {
            classes.push(Vec::new());
            used.push(vec![false; cover.n]);
            classes.len() - 1
        });
        classes[c].push(i);
        for v in b.vertices() {
            used[c][v] = true;
        }
    }
    HyperMatching { classes, target }
}

/// Common block count `s` and per-part multiplicities `σ` with
/// `σ_i s <= s_i` and `Σσ_i = k`, using `s = ⌊Σs_i / (k+l)⌋`.
pub fn divide_parts(l: usize, k: usize, sizes: &[usize]) -> Result<(usize, Vec<usize>)> {
    const OP: &str = "divide_parts";
    if sizes.len() != l || l == 0 || k == 0 {
        return Err(AsdError::pre(
            OP,
            format!("need l = {l} positive sizes and k = {k} > 0"),
        ));
    }
    let total: usize = sizes.iter().sum();
    if total < k + l {
        return Err(AsdError::pre(OP, format!("sum of sizes {total} < k + l = {}", k + l)));
    }
    let s = total / (k + l);
    let sigma = fill_sigma(s, k, sizes);
    Ok((s, sigma))
}

fn fill_sigma(s: usize, k: usize, sizes: &[usize]) -> Vec<usize> {
    let mut left = k;
    sizes
        .iter()
        .map(|&si| {
            let take = (si / s).min(left);
            left -= take;
            take
        })
        .collect()
}

/// A `K_{t,t}`-forest with its blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KttForestPart {
    pub part: Graph,
    pub blocks: Vec<KttBlock>,
}

/// Result of [`ktt_decompose_equal`].
#[derive(Debug, Clone, PartialEq)]
pub struct KttDecomposition {
    pub forests: Vec<KttForestPart>,
    pub remainder: Graph,
    /// Blocks per forest.
    pub block_count: usize,
    /// Matching classes produced by the greedy hypergraph step.
    pub classes: usize,
    /// Whether `n/√t <= k <= n²/t^{5/2}` held.
    pub in_regime: bool,
}

/// Splits `g` into `k` isomorphic `K_{t,t}`-forests and a remainder.
///
/// Blocks are extracted per line of a projective plane, then once more over
/// what is left globally, grouped into vertex-disjoint classes, and cut into
/// `k` forests of a common block count `s`. `s` is the largest value with
/// `Σ⌊s_i/s⌋ >= k`, which is never below the count from [`divide_parts`].
/// Graphs with fewer than `remainder_factor * n²/√t` edges, or too few
/// blocks for `k` forests, go entirely to the remainder.
pub fn ktt_decompose_equal(g: &Graph, t: usize, k: usize, remainder_factor: f64) -> KttDecomposition {
    assert!(t >= 1 && k >= 1);
    let n = g.vertices().len();
    let nf = n as f64;
    let tf = t as f64;
    let in_regime = nf / tf.sqrt() <= k as f64 && k as f64 <= nf * nf / tf.powf(2.5);
    let all_remainder = |classes| KttDecomposition {
        forests: vec![
            KttForestPart {
                part: g.with_edges([]),
                blocks: Vec::new()
            };
            k
        ],
        remainder: g.clone(),
        block_count: 0,
        classes,
        in_regime,
    };
    if (g.edge_count() as f64) < remainder_factor * nf * nf / tf.sqrt() || g.is_empty() {
        return all_remainder(0);
    }
    let (local, labels) = g.compact();
    let (_, lines) = plane_partition(&local);
    let mut blocks = Vec::new();
    let mut leftover = Vec::new();
    for part in &lines {
        let (b, rest) = greedy_ktt_extract(part, t);
        blocks.extend(b);
        leftover.extend_from_slice(rest.edges());
    }
    let (extra, _) = greedy_ktt_extract(&local.with_edges(leftover), t);
    blocks.extend(extra);
    let cover = CoverHypergraph { n: local.n(), blocks };
    let matching = hypergraph_match_decompose(&cover, k);
    let sizes: Vec<usize> = matching.classes.iter().map(Vec::len).collect();
    let Some(s) = (1..=sizes.iter().copied().max().unwrap_or(0))
        .rev()
        .find(|&s| sizes.iter().map(|x| x / s).sum::<usize>() >= k)
    else {
        return all_remainder(matching.achieved());
    };
    let sigma = fill_sigma(s, k, &sizes);
    let mut forests = Vec::with_capacity(k);
    for (class, &count) in matching.classes.iter().zip(&sigma) {
        for j in 0..count {
            let blocks: Vec<KttBlock> = class[j * s..(j + 1) * s]
                .iter()
                .map(|&i| {
                    let b = &cover.blocks[i];
                    KttBlock {
                        left: b.left.iter().map(|&x| labels[x]).collect(),
                        right: b.right.iter().map(|&x| labels[x]).collect(),
                    }
                })
                .collect();
            let part = g.with_edges(blocks.iter().flat_map(|b| b.edges().collect::<Vec<_>>()));
            forests.push(KttForestPart { part, blocks });
        }
    }
    let covered = Graph::from_edges(g.n(), forests.iter().flat_map(|f| f.part.edges().to_vec()));
    KttDecomposition {
        remainder: g.difference(&covered),
        forests,
        block_count: s,
        classes: matching.achieved(),
        in_regime,
    }
}
