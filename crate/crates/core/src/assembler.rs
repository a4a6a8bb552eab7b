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

//! Stacked almost-decompositions of graphs with linear maximum degree.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::census::{census, components, split_copies, Component, ComponentCensus, Shape};
use crate::coloring::{balance_matchings, vizing_color};
use crate::config::EngineConfig;
use crate::error::{AsdError, Result};
use crate::graph::{Edge, Graph};
use crate::ktt::ktt_decompose_equal;
use crate::matching::bipartite_matching;
use crate::star_forest::{combine_star_forest, star_forest_decompose};

/// Seed and budget for a randomized step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSettings {
    pub seed: u64,
    pub retry_budget: u32,
    /// Reject inputs below the concentration bound instead of trying.
    pub check_feasibility: bool,
}

impl RandomSettings {
    pub fn from_config(cfg: &EngineConfig) -> RandomSettings {
        RandomSettings {
            seed: cfg.seed,
            retry_budget: cfg.retry_budget,
            check_feasibility: cfg.check_feasibility,
        }
    }

    fn derived(self, salt: u64) -> RandomSettings {
        RandomSettings {
            seed: self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15),
            ..self
        }
    }
}

/// Seeded generator for attempt `attempt`.
pub(crate) fn attempt_rng(seed: u64, attempt: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    rng
}

/// Graphs that are pairwise edge-disjoint and share one census.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoFamily {
    pub parts: Vec<Graph>,
    pub shape: ComponentCensus,
    pub r: usize,
}

impl IsoFamily {
    fn new(parts: Vec<Graph>, r: usize) -> Result<IsoFamily> {
        let shape = parts.first().map(census).unwrap_or_default();
        if parts.iter().any(|p| census(p) != shape) {
            return Err(AsdError::infeasible("iso_family", "parts have different censuses"));
        }
        Ok(IsoFamily { parts, shape, r })
    }
}

/// Right-hand side of the concentration condition for splitting `h` into
/// five parts: `sqrt(ln5/2 * Σ a_j |V(F_j)|²)` with `a_j` the class counts
/// divided by five.
pub fn feasibility_bound(h: &Graph) -> f64 {
    let total: f64 = census(h)
        .entries
        .iter()
        .map(|(shape, &count)| (count / 5) as f64 * (shape.vertex_count() as f64).powi(2))
        .sum();
    (5f64.ln() / 2.0 * total).sqrt()
}

/// Five parts of `M ∪ H` and the number of random attempts used.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingForestSplit {
    pub parts: Vec<Graph>,
    pub attempts: u32,
}

fn exact_classes(h: &Graph, r: usize, op: &'static str) -> Result<Vec<Vec<Component>>> {
    let mut classes: BTreeMap<Shape, Vec<Component>> = BTreeMap::new();
    for c in components(h) {
        if !c.shape.is_exact() {
            return Err(AsdError::Unsupported {
                op,
                detail: "component above the canonical-code cap".into(),
            });
        }
        classes.entry(c.shape.clone()).or_default().push(c);
    }
    if let Some((shape, list)) = classes.iter().find(|(_, l)| l.len() % r != 0) {
        return Err(AsdError::pre(
            op,
            format!("{} components of shape {shape:?} is not divisible by {r}", list.len()),
        ));
    }
    Ok(classes.into_values().collect())
}

/// Splits `M ∪ H` into five parts, each a copy of `H/5` plus `|M|/5`
/// isolated matching edges.
///
/// Components of each class are taken five at a time and dealt to the
/// parts by a random permutation; an attempt is kept once every part
/// avoids more than `2ℓ` matching edges, and the matching edges are then
/// assigned by a perfect bipartite matching.
pub fn combine_matching_forest(m_part: &Graph, h: &Graph, rs: RandomSettings) -> Result<MatchingForestSplit> {
    const OP: &str = "combine_matching_forest";
    let n = m_part.n().max(h.n());
    if !m_part.is_matching() {
        return Err(AsdError::pre(OP, "m_part is not a matching"));
    }
    if !m_part.edge_count().is_multiple_of(5) || m_part.is_empty() {
        return Err(AsdError::pre(
            OP,
            format!("matching size {} is not a positive multiple of 5", m_part.edge_count()),
        ));
    }
    if h.is_empty() {
        return Err(AsdError::pre(OP, "h is empty"));
    }
    if m_part.edges().iter().any(|e| h.contains(e)) {
        return Err(AsdError::pre(OP, "m_part and h share an edge"));
    }
    let ell = m_part.edge_count() / 5;
    let classes = exact_classes(h, 5, OP)?;
    let bound = feasibility_bound(h);
    if rs.check_feasibility && ell as f64 <= bound {
        return Err(AsdError::infeasible(
            OP,
            format!("l = {ell} does not exceed the concentration bound {bound:.3}"),
        ));
    }
    let mut attempt = 0;
    let owners = loop {
        if attempt >= rs.retry_budget {
            return Err(AsdError::RandomizedFailure {
                op: OP,
                attempts: attempt as usize,
            });
        }
        let mut rng = attempt_rng(rs.seed, attempt);
        attempt += 1;
        let mut owner = vec![usize::MAX; n];
        for class in &classes {
            for chunk in class.chunks(5) {
                let mut perm = [0usize, 1, 2, 3, 4];
                perm.shuffle(&mut rng);
                for (c, &slot) in chunk.iter().zip(&perm) {
                    for &v in &c.order {
                        owner[v] = slot;
                    }
                }
            }
        }
        let avoided = |i: usize| {
            m_part
                .edges()
                .iter()
                .filter(|e| owner[e.u] != i && owner[e.v] != i)
                .count()
        };
        if (0..5).all(|i| avoided(i) > 2 * ell) {
            break owner;
        }
    };
    let adj: Vec<Vec<usize>> = m_part
        .edges()
        .iter()
        .map(|e| {
            (0..5 * ell)
                .filter(|slot| {
                    let i = slot / ell;
                    owners[e.u] != i && owners[e.v] != i
                })
                .collect()
        })
        .collect();
    let mate = bipartite_matching(5 * ell, 5 * ell, &adj);
    let mut parts: Vec<Vec<Edge>> = vec![Vec::new(); 5];
    for (e, slot) in m_part.edges().iter().zip(&mate) {
        let slot = slot.ok_or_else(|| AsdError::infeasible(OP, "no perfect assignment of matching edges"))?;
        parts[slot / ell].push(*e);
    }
    for e in h.edges() {
        parts[owners[e.u]].push(*e);
    }
    Ok(MatchingForestSplit {
        parts: parts.into_iter().map(|p| Graph::from_edges(n, p)).collect(),
        attempts: attempt,
    })
}

fn check_linear(op: &'static str, g: &Graph, m: usize, k: usize, eps: f64, cfg: &EngineConfig) -> Result<()> {
    let mf = m as f64;
    if g.max_degree() as f64 > cfg.c * mf {
        return Err(AsdError::pre(
            op,
            format!("Δ = {} exceeds c·m = {}", g.max_degree(), cfg.c * mf),
        ));
    }
    if g.edge_count() > m * m {
        return Err(AsdError::pre(
            op,
            format!("e = {} exceeds m² = {}", g.edge_count(), m * m),
        ));
    }
    if k == 0 || (k as f64) < eps * mf || k > m {
        return Err(AsdError::pre(
            op,
            format!("k = {k} outside [εm, m] = [{}, {m}]", eps * mf),
        ));
    }
    Ok(())
}

/// Drops, from every part, the last `count mod r` components of each shape.
/// Parts must share a census.
pub fn trim_to_divisible(parts: &[Graph], r: usize) -> (Vec<Graph>, Vec<Edge>) {
    let mut dropped = Vec::new();
    let kept = parts
        .iter()
        .map(|p| {
            let mut by_shape: BTreeMap<Shape, Vec<Component>> = BTreeMap::new();
            for c in components(p) {
                by_shape.entry(c.shape.clone()).or_default().push(c);
            }
            let mut keep = Vec::new();
            for list in by_shape.values() {
                let cut = list.len() - list.len() % r;
                for (i, c) in list.iter().enumerate() {
                    if i < cut {
                        keep.extend_from_slice(&c.edges);
                    } else {
                        dropped.extend_from_slice(&c.edges);
                    }
                }
            }
            p.with_edges(keep)
        })
        .collect();
    (kept, dropped)
}

/// Output of [`approx_star_forest`].
#[derive(Debug, Clone, PartialEq)]
pub struct StarForestStage {
    /// `k` isomorphic parts: stars, possibly with equal matchings.
    pub forests: Vec<Graph>,
    pub r1: Graph,
    /// Subgraph induced on the large-degree vertices.
    pub r2: Graph,
    /// Whether the matching edges of the small-degree part were folded in.
    pub matching_branch: bool,
    /// Set when the matching branch was wanted but the concentration bound
    /// failed, so the small-degree part went to `r1`.
    pub matching_branch_skipped: bool,
    pub attempts: u32,
}

/// `k` isomorphic star forests (plus equal matchings when the low-degree
/// part is large), with the rest split into `r1` and the subgraph `r2`
/// induced on vertices of degree at least `⌈k/5⌉`.
pub fn approx_star_forest(g: &Graph, m: usize, k: usize, eps: f64, cfg: &EngineConfig) -> Result<StarForestStage> {
    const OP: &str = "approx_star_forest";
    check_linear(OP, g, m, k, eps, cfg)?;
    let n = g.n();
    let kp = k.div_ceil(5);
    let deg = g.degrees();
    let large: Vec<bool> = deg.iter().map(|&d| d >= kp).collect();
    let y: Vec<usize> = (0..n).filter(|&v| large[v] && deg[v] > 0).collect();
    let x: Vec<usize> = (0..n).filter(|&v| !large[v] && deg[v] > 0).collect();
    let (cross, rest): (Vec<Edge>, Vec<Edge>) = g.edges().iter().partition(|e| large[e.u] != large[e.v]);
    let (inside_large, inside_small): (Vec<Edge>, Vec<Edge>) = rest.into_iter().partition(|e| large[e.u]);
    let r2 = g.with_edges(inside_large);
    let (forests, r0) = star_forest_decompose(&g.with_edges(cross), &x, &y, kp)?;
    let small = r0.union(&g.with_edges(inside_small));

    let forests: Vec<Graph> = forests.into_iter().map(|f| f.part).collect();
    let (forests, mut r1) = trim_to_divisible(&forests, 5);

    let mf = m as f64;
    let mut matching_branch = false;
    let mut skipped = false;
    let mut attempts = 0;
    let mut parts: Vec<Graph> = Vec::with_capacity(5 * kp);
    let wants_matchings = small.edge_count() as f64 > eps * eps * mf * mf;
    let mut matchings = Vec::new();
    if wants_matchings {
        let mut classes = vizing_color(&small);
        classes.resize(classes.len().max(kp), Graph::empty(n));
        let balanced = balance_matchings(&classes);
        let q = balanced.iter().map(Graph::edge_count).min().unwrap_or(0) / 5 * 5;
        if q > 0 && balanced.len() == kp {
            matchings = balanced
                .iter()
                .map(|mi| mi.with_edges(mi.edges()[..q].iter().copied()))
                .collect();
            let feasible = forests
                .iter()
                .all(|f| f.is_empty() || q as f64 / 5.0 > feasibility_bound(f));
            if !feasible && cfg.check_feasibility {
                skipped = true;
                matchings.clear();
            }
        }
    }
    if !matchings.is_empty() {
        matching_branch = true;
        let used = Graph::from_edges(n, matchings.iter().flat_map(|mi: &Graph| mi.edges().to_vec()));
        r1.extend_from_slice(small.difference(&used).edges());
        let rs = RandomSettings::from_config(cfg);
        for (i, (mi, f)) in matchings.iter().zip(&forests).enumerate() {
            if f.is_empty() {
                parts.extend(
                    mi.edges()
                        .chunks(mi.edge_count() / 5)
                        .map(|c| mi.with_edges(c.iter().copied())),
                );
                continue;
            }
            let split = combine_matching_forest(
                mi,
                f,
                RandomSettings {
                    check_feasibility: false,
                    ..rs.derived(i as u64)
                },
            )?;
            attempts += split.attempts;
            parts.extend(split.parts);
        }
    } else {
        r1.extend_from_slice(small.edges());
        for f in &forests {
            parts.extend(split_copies(f, 5).expect("5-divisible star forest"));
        }
    }
    let tail = parts.split_off(k.min(parts.len()));
    for p in tail {
        r1.extend_from_slice(p.edges());
    }
    parts.resize(k, Graph::empty(n));
    Ok(StarForestStage {
        forests: parts,
        r1: Graph::from_edges(n, r1),
        r2,
        matching_branch,
        matching_branch_skipped: skipped,
        attempts,
    })
}

/// Which case of [`approx_isomorphic`] ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoBranch {
    /// Few large-degree vertices: their subgraph went to the remainder.
    Small,
    /// `K_{t,t}`-forests of the large-degree subgraph were grafted on.
    Blocks,
}

/// Output of [`approx_isomorphic`].
#[derive(Debug, Clone, PartialEq)]
pub struct IsoStage {
    pub family: IsoFamily,
    pub remainder: Graph,
    pub branch: IsoBranch,
    pub attempts: u32,
}

/// `k` isomorphic `r`-divisible graphs with bounded components, plus a
/// remainder.
///
/// In the block case, star classes are cut to `c'_x` components: zero below
/// the threshold `ε²m/s²`, otherwise the largest multiple of `r` at most
/// `c_x - ε²m/s²`, further lowered (in steps of `r`) so that every part has
/// that many stars of the class clear of its block forest.
pub fn approx_isomorphic(g: &Graph, m: usize, k: usize, eps: f64, r: usize, cfg: &EngineConfig) -> Result<IsoStage> {
    const OP: &str = "approx_isomorphic";
    check_linear(OP, g, m, k, eps, cfg)?;
    let n = g.n();
    let stage = approx_star_forest(g, m, k, eps * eps, cfg)?;
    let mf = m as f64;
    let n2 = stage.r2.vertices().len();
    let mut rem: Vec<Edge> = stage.r1.edges().to_vec();
    if n2 as f64 <= cfg.t.powf(0.75) * mf.sqrt() {
        rem.extend_from_slice(stage.r2.edges());
        let (parts, dropped) = trim_to_divisible(&stage.forests, r);
        rem.extend(dropped);
        return Ok(IsoStage {
            family: IsoFamily::new(parts, r)?,
            remainder: Graph::from_edges(n, rem),
            branch: IsoBranch::Small,
            attempts: stage.attempts,
        });
    }
    let kd = ktt_decompose_equal(&stage.r2, cfg.block_side(), k, cfg.ktt_remainder_factor);
    rem.extend_from_slice(kd.remainder.edges());
    let keep_blocks = kd.block_count - kd.block_count % r;
    let blocks: Vec<Graph> = kd
        .forests
        .iter()
        .map(|f| {
            for b in &f.blocks[keep_blocks..] {
                rem.extend(b.edges());
            }
            Graph::from_edges(
                n,
                f.blocks[..keep_blocks]
                    .iter()
                    .flat_map(|b| b.edges().collect::<Vec<_>>()),
            )
        })
        .collect();

    let threshold = eps * eps * mf / (cfg.s * cfg.s);
    let per_part: Vec<BTreeMap<Shape, Vec<Component>>> = stage
        .forests
        .iter()
        .map(|f| {
            let mut by: BTreeMap<Shape, Vec<Component>> = BTreeMap::new();
            for c in components(f) {
                by.entry(c.shape.clone()).or_default().push(c);
            }
            by
        })
        .collect();
    let clear = |i: usize, c: &Component| c.order.iter().all(|&v| blocks[i].degree(v) == 0);
    let mut quota: BTreeMap<Shape, usize> = BTreeMap::new();
    if let Some(first) = per_part.first() {
        for (shape, list) in first {
            let cx = list.len() as f64;
            let mut target = if cx < threshold {
                0
            } else {
                ((cx - threshold).floor() as usize) / r * r
            };
            for (i, by) in per_part.iter().enumerate() {
                let avail = by.get(shape).map_or(0, |l| l.iter().filter(|c| clear(i, c)).count());
                target = target.min(avail / r * r);
            }
            quota.insert(shape.clone(), target);
        }
    }
    let mut parts = Vec::with_capacity(k);
    for (i, by) in per_part.iter().enumerate() {
        let mut keep: Vec<Edge> = blocks[i].edges().to_vec();
        for (shape, list) in by {
            let mut left = quota[shape];
            for c in list {
                if left > 0 && clear(i, c) {
                    keep.extend_from_slice(&c.edges);
                    left -= 1;
                } else {
                    rem.extend_from_slice(&c.edges);
                }
            }
        }
        parts.push(Graph::from_edges(n, keep));
    }
    Ok(IsoStage {
        family: IsoFamily::new(parts, r)?,
        remainder: Graph::from_edges(n, rem),
        branch: IsoBranch::Blocks,
        attempts: stage.attempts,
    })
}

/// Output of [`approx_isomorphic_stronger`].
#[derive(Debug, Clone, PartialEq)]
pub struct StrongFamily {
    /// Isomorphic 2-divisible parts.
    pub parts: Vec<Graph>,
    /// Ascending stars; star `i` is vertex-disjoint from part `i`.
    pub stars: Vec<Graph>,
    /// Isolated matching of each part: its `K_2` components.
    pub certificates: Vec<Graph>,
    pub remainder: Graph,
    pub shape: ComponentCensus,
    pub attempts: u32,
}

impl StrongFamily {
    /// Checks the structural contract.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.parts.len() != self.stars.len() || self.parts.len() != self.certificates.len() {
            return Err("length mismatch".into());
        }
        for (i, ((p, s), cert)) in self.parts.iter().zip(&self.stars).zip(&self.certificates).enumerate() {
            if census(p) != self.shape {
                return Err(format!("part {i} has a different census"));
            }
            if s.vertices().iter().any(|&v| p.degree(v) > 0) {
                return Err(format!("part {i} meets its star"));
            }
            if !cert
                .edges()
                .iter()
                .all(|e| p.contains(e) && p.degree(e.u) == 1 && p.degree(e.v) == 1)
            {
                return Err(format!("part {i} certificate is not an isolated matching"));
            }
        }
        if self.stars.windows(2).any(|w| w[0].edge_count() > w[1].edge_count()) {
            return Err("stars are not ascending".into());
        }
        if !self.shape.is_r_divisible(2) {
            return Err("shape is not 2-divisible".into());
        }
        Ok(())
    }
}

/// Isolated edges of `g`.
pub fn isolated_edges(g: &Graph) -> Graph {
    g.with_edges(
        g.edges()
            .iter()
            .copied()
            .filter(|e| g.degree(e.u) == 1 && g.degree(e.v) == 1),
    )
}

/// Maximal sequence of edge-disjoint stars of sizes `2, 4, 6, ...`, at most
/// `limit` of them, each centered at a vertex of largest remaining degree
/// (lowest index on ties) and using its lowest-indexed neighbors.
pub fn ascending_even_stars(g: &Graph, limit: usize) -> (Vec<Graph>, Graph) {
    let mut rest = g.clone();
    let mut stars = Vec::new();
    while stars.len() < limit {
        let want = 2 * (stars.len() + 1);
        let deg = rest.degrees();
        let Some(c) = (0..rest.n()).max_by_key(|&v| (deg[v], std::cmp::Reverse(v))) else {
            break;
        };
        if deg[c] < want {
            break;
        }
        let adj = rest.adjacency();
        let star = rest.with_edges(adj[c][..want].iter().map(|&v| Edge::new(c, v)));
        rest = rest.difference(&star);
        stars.push(star);
    }
    (stars, rest)
}

/// `k` isomorphic 2-divisible parts with isolated matchings, an ascending
/// sequence of stars each vertex-disjoint from its part, and a remainder.
pub fn approx_isomorphic_stronger(g: &Graph, m: usize, k: usize, eps: f64, cfg: &EngineConfig) -> Result<StrongFamily> {
    const OP: &str = "approx_isomorphic_stronger";
    let mf = m as f64;
    if (g.edge_count() as f64) < cfg.edge_floor * mf * mf {
        return Err(AsdError::pre(
            OP,
            format!(
                "e = {} below {}·m² = {}",
                g.edge_count(),
                cfg.edge_floor,
                cfg.edge_floor * mf * mf
            ),
        ));
    }
    check_linear(OP, g, m, k, eps, cfg)?;
    let n = g.n();
    let kp = k.div_ceil(20);
    let mut classes = vizing_color(g);
    classes.resize(classes.len().max(kp), Graph::empty(n));
    let mut balanced = balance_matchings(&classes);
    balanced.sort_by_key(|c| std::cmp::Reverse(c.edge_count()));
    balanced.truncate(kp);
    let q = balanced.iter().map(Graph::edge_count).min().unwrap_or(0) / 40 * 40;
    if q == 0 {
        return Err(AsdError::infeasible(OP, "matchings too small to keep 40 edges each"));
    }
    let matchings: Vec<Graph> = balanced
        .iter()
        .map(|c| c.with_edges(c.edges()[..q].iter().copied()))
        .collect();
    let used = Graph::from_edges(n, matchings.iter().flat_map(|mi| mi.edges().to_vec()));
    let rest = g.difference(&used);
    let iso = approx_isomorphic(&rest, m, kp, eps.powi(4), 40, cfg)?;
    let mut attempts = iso.attempts;

    let rs = RandomSettings::from_config(cfg);
    let mut fives: Vec<Graph> = Vec::with_capacity(5 * kp);
    for (i, (mi, h)) in matchings.iter().zip(&iso.family.parts).enumerate() {
        if h.is_empty() {
            fives.extend(mi.edges().chunks(q / 5).map(|c| mi.with_edges(c.iter().copied())));
            continue;
        }
        let split = combine_matching_forest(mi, h, rs.derived(1000 + i as u64))?;
        attempts += split.attempts;
        fives.extend(split.parts);
    }

    let (stars, r2) = ascending_even_stars(&iso.remainder, fives.len());
    let mut pairs: Vec<(Graph, Graph)> = Vec::with_capacity(4 * fives.len());
    for (j, h) in fives.iter().enumerate() {
        match stars.get(j) {
            Some(s) => {
                let split = combine_star_forest(h, s)?;
                pairs.extend(split.h_parts.into_iter().zip(split.s_parts));
            }
            None => {
                let copies =
                    split_copies(h, 4).ok_or_else(|| AsdError::infeasible(OP, "combined part is not 4-divisible"))?;
                pairs.extend(copies.into_iter().map(|c| (c, Graph::empty(n))));
            }
        }
    }
    let mut drop = pairs.len().saturating_sub(k);
    let mut rem: Vec<Edge> = r2.edges().to_vec();
    let mut i = pairs.len();
    while drop > 0 && i > 0 {
        i -= 1;
        if pairs[i].1.is_empty() {
            rem.extend_from_slice(pairs.remove(i).0.edges());
            drop -= 1;
        }
    }
    if drop > 0 || pairs.len() != k {
        return Err(AsdError::infeasible(OP, "not enough pairs with empty stars to drop"));
    }
    pairs.sort_by_key(|(_, s)| s.edge_count());
    let (parts, stars): (Vec<Graph>, Vec<Graph>) = pairs.into_iter().unzip();
    let certificates = parts.iter().map(isolated_edges).collect();
    let shape = parts.first().map(census).unwrap_or_default();
    let family = StrongFamily {
        parts,
        stars,
        certificates,
        remainder: Graph::from_edges(n, rem),
        shape,
        attempts,
    };
    family.validate().map_err(|d| AsdError::infeasible(OP, d))?;
    Ok(family)
}
