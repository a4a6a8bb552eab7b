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

//! Top-level decomposition: high-degree peeling, the bounded-degree core,
//! substar allocation, and star-forest decompositions, with an exact
//! search for small instances.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::ops::ControlFlow;

use serde::Serialize;

use crate::ascending::asd_bounded_degree;
use crate::census::{census, components, Component};
use crate::config::EngineConfig;
use crate::decomposition::{Decomposition, Witness};
use crate::error::{AsdError, Result, Stage};
use crate::graph::{asd_shape, asd_sizes, Edge, Graph};
use crate::separator::{separate_items, Separator, SeparatorConfig};
use crate::verifier::{embeds, for_each_embedding, validate_witness, verify_decomposition, EmbedOutcome};

/// A star given by its center and sorted leaves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Star {
    pub center: usize,
    pub leaves: Vec<usize>,
}

impl Star {
    pub fn size(&self) -> usize {
        self.leaves.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.leaves.iter().map(move |&x| Edge::new(self.center, x))
    }

    pub fn to_graph(&self, n: usize) -> Graph {
        Graph::from_edges(n, self.edges())
    }
}

/// Peeled stars in removal order and the remaining core.
#[derive(Debug, Clone, PartialEq)]
pub struct PeelResult {
    pub core: Graph,
    pub stars: Vec<Star>,
}

impl PeelResult {
    pub fn degrees(&self) -> Vec<usize> {
        self.stars.iter().map(Star::size).collect()
    }
}

/// Repeatedly removes a vertex of maximum degree (lowest index on ties)
/// while its degree exceeds `c·√e` for the current edge count `e`.
pub fn peel(g: &Graph, c: f64) -> PeelResult {
    let mut adj: Vec<BTreeSet<usize>> = g.adjacency().into_iter().map(|a| a.into_iter().collect()).collect();
    let mut e = g.edge_count();
    let mut stars = Vec::new();
    while e > 0 {
        let (v, d) = adj
            .iter()
            .enumerate()
            .map(|(v, a)| (v, a.len()))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if d as f64 <= c * (e as f64).sqrt() {
            break;
        }
        let leaves: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &x in &leaves {
            adj[x].remove(&v);
        }
        e -= d;
        stars.push(Star { center: v, leaves });
    }
    let core = g.with_edges(
        adj.iter()
            .enumerate()
            .flat_map(|(v, a)| a.iter().filter(move |&&x| x > v).map(move |&x| Edge::new(v, x))),
    );
    PeelResult { core, stars }
}

fn star_witness(from: &Star, to: &Star) -> Vec<(usize, usize)> {
    if from.leaves.is_empty() {
        return Vec::new();
    }
    let mut map = vec![(from.center, to.center)];
    map.extend(from.leaves.iter().copied().zip(to.leaves.iter().copied()));
    map
}

/// Ascending decomposition of edge-disjoint stars into single stars of
/// sizes `sizes`, each cut from one input star.
///
/// When the sizes are `1, ..., m` the cut is found by the separator;
/// otherwise by exact search over the size multiset.
pub fn asd_stars(stars: &[Star], n: usize, sizes: &[usize]) -> Result<Decomposition> {
    const OP: &str = "asd_stars";
    let stars: Vec<&Star> = stars.iter().filter(|s| s.size() > 0).collect();
    let targets: Vec<usize> = stars.iter().map(|s| s.size()).collect();
    if targets.iter().sum::<usize>() != sizes.iter().sum::<usize>() {
        return Err(AsdError::pre(OP, "star sizes and part sizes have different totals"));
    }
    if sizes.is_empty() {
        return Ok(Decomposition::empty());
    }
    let triangular = sizes.iter().enumerate().all(|(i, &s)| s == i + 1);
    let bins: Vec<usize> = if triangular {
        let res = Separator::new(SeparatorConfig::default()).separate(sizes.len(), &targets)?;
        let mut bins = vec![0; sizes.len()];
        for (j, part) in res.parts.iter().enumerate() {
            for &x in part {
                bins[x - 1] = j;
            }
        }
        bins
    } else {
        separate_items(sizes, &targets, SeparatorConfig::default().memo_after)
            .ok_or_else(|| AsdError::infeasible(OP, format!("sizes {sizes:?} do not separate the stars {targets:?}")))?
    };
    let mut cursor = vec![0; stars.len()];
    let mut pieces = Vec::with_capacity(sizes.len());
    for (i, &s) in sizes.iter().enumerate() {
        let j = bins[i];
        let star = Star {
            center: stars[j].center,
            leaves: stars[j].leaves[cursor[j]..cursor[j] + s].to_vec(),
        };
        cursor[j] += s;
        pieces.push(star);
    }
    let parts: Vec<Graph> = pieces.iter().map(|s| s.to_graph(n)).collect();
    let witnesses = pieces
        .windows(2)
        .zip(parts.windows(2))
        .map(|(w, p)| Witness::from_map(&p[0], &p[1], star_witness(&w[0], &w[1])))
        .collect();
    Ok(Decomposition::from_parts(parts, witnesses))
}

/// Star-forest decomposition of a graph whose components are stars and
/// whose edge count is triangular.
pub fn asd_star_forest(g: &Graph) -> Result<Decomposition> {
    const OP: &str = "asd_star_forest";
    let e = g.edge_count();
    let (m, t) = asd_shape(e);
    if t != m {
        return Err(AsdError::pre(OP, format!("e = {e} is not triangular")));
    }
    let mut stars = Vec::new();
    for comp in g.components() {
        let cg = g.with_edges(comp.iter().copied());
        let center =
            crate::star_forest::star_center(&cg).ok_or_else(|| AsdError::pre(OP, "a component is not a star"))?;
        let mut leaves: Vec<usize> = comp.iter().map(|e| e.other(center)).collect();
        leaves.sort_unstable();
        stars.push(Star { center, leaves });
    }
    asd_stars(&stars, g.n(), &asd_sizes(e))
}

/// Substars attached to the core parts and the stars left over.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// `Ŝ_{r+1}, ..., Ŝ_m`, possibly empty.
    pub substars: Vec<Star>,
    /// Remaining parts of the peeled stars, in peel order.
    pub residual: Vec<Star>,
}

/// Cuts a substar of size `sizes[j] - e(core_parts[j])` for each core part,
/// from the last part down, avoiding the vertices of that part.
///
/// The substar is taken from the largest residual star (lowest peel index
/// on ties) that has enough leaves outside the part, using its
/// lowest-index such leaves.
pub fn allocate_substars(stars: &[Star], core_parts: &[Graph], sizes: &[usize], r: usize) -> Result<Allocation> {
    const OP: &str = "allocate_substars";
    if core_parts.len() != sizes.len() {
        return Err(AsdError::pre(OP, "one size per core part is required"));
    }
    let mut residual: Vec<Star> = stars.to_vec();
    let mut substars = vec![
        Star {
            center: 0,
            leaves: Vec::new()
        };
        core_parts.len()
    ];
    for j in (0..core_parts.len()).rev() {
        let i = r + j + 1;
        let h = &core_parts[j];
        let need = sizes[j]
            .checked_sub(h.edge_count())
            .ok_or_else(|| AsdError::infeasible(OP, format!("H_{i} has more than e_{i} = {} edges", sizes[j])))?;
        if need == 0 {
            continue;
        }
        let mask = h.vertex_mask();
        let inside = |x: usize| mask.get(x).copied().unwrap_or(false);
        let mut order: Vec<usize> = (0..residual.len()).collect();
        order.sort_by_key(|&q| (std::cmp::Reverse(residual[q].size()), q));
        let pick = order.into_iter().find(|&q| {
            !inside(residual[q].center) && residual[q].leaves.iter().filter(|&&x| !inside(x)).count() >= need
        });
        let Some(q) = pick else {
            return Err(AsdError::infeasible(
                OP,
                format!("no residual star has {need} leaves avoiding H_{i}"),
            ));
        };
        let star = &mut residual[q];
        let chosen: Vec<usize> = star.leaves.iter().copied().filter(|&x| !inside(x)).take(need).collect();
        star.leaves.retain(|x| chosen.binary_search(x).is_err());
        substars[j] = Star {
            center: star.center,
            leaves: chosen,
        };
    }
    Ok(Allocation { substars, residual })
}

/// How the peeled core is split into `H_{r+1}, ..., H_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreMode {
    /// Bounded-degree decomposition once the core is large enough, single
    /// edges otherwise.
    Auto,
    SingleEdges,
}

/// One configuration tried by [`asd`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rung {
    pub c: f64,
    pub mode: CoreMode,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    Empty,
    Fallback,
    Stars,
    Pipeline,
}

/// Record of what [`asd_traced`] tried.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct AsdTrace {
    pub route: Option<Route>,
    pub fallback_nodes: u64,
    pub fallback_error: Option<String>,
    pub rungs: Vec<Rung>,
    pub peeled: usize,
    pub core_edges: usize,
    pub r: usize,
}

/// Decomposes `g` into an ascending chain; see [`asd_traced`].
pub fn asd(g: &Graph, cfg: &EngineConfig) -> Result<Decomposition> {
    asd_traced(g, cfg).0
}

/// Decomposes `g`, recording the route taken.
///
/// Instances with `m <= cfg.fallback_m` go to the exact search first. The
/// peeling pipeline then runs with the configured `c`; under the desk
/// profile failures are retried with a single-edge core and with smaller
/// `c` down to `0.5/√e`, at most `cfg.retry_budget` configurations in
/// total. Every result is verified before it is returned.
pub fn asd_traced(g: &Graph, cfg: &EngineConfig) -> (Result<Decomposition>, AsdTrace) {
    let mut trace = AsdTrace::default();
    let e = g.edge_count();
    if e == 0 {
        trace.route = Some(Route::Empty);
        return (Ok(Decomposition::empty()), trace);
    }
    let (m, _) = asd_shape(e);
    if m <= cfg.fallback_m {
        let mut search = FallbackSearch::new(g, cfg.fallback_budget);
        let res = search.run();
        trace.fallback_nodes = search.nodes;
        match res {
            Ok(d) => {
                trace.route = Some(Route::Fallback);
                return (checked(g, d), trace);
            }
            Err(err @ AsdError::Infeasible { .. }) => {
                return (Err(err.at(Stage::Fallback)), trace);
            }
            Err(err) => trace.fallback_error = Some(err.to_string()),
        }
    }
    let mut rungs = vec![(cfg.c, CoreMode::Auto)];
    if !cfg.is_paper() {
        rungs.push((cfg.c, CoreMode::SingleEdges));
        let floor = 0.5 / (e as f64).sqrt();
        let mut c = cfg.c / 2.0;
        while c > floor {
            rungs.push((c, CoreMode::Auto));
            rungs.push((c, CoreMode::SingleEdges));
            c /= 2.0;
        }
        rungs.push((floor, CoreMode::Auto));
        rungs.truncate((cfg.retry_budget as usize).max(1));
    }
    let mut first_err = None;
    for (c, mode) in rungs {
        let res = pipeline(g, cfg, c, mode, &mut trace).and_then(|d| checked(g, d));
        match res {
            Ok(d) => {
                trace.rungs.push(Rung { c, mode, error: None });
                return (Ok(d), trace);
            }
            Err(err) => {
                trace.rungs.push(Rung {
                    c,
                    mode,
                    error: Some(err.to_string()),
                });
                first_err.get_or_insert(err);
            }
        }
    }
    trace.route = None;
    (Err(first_err.expect("at least one rung runs")), trace)
}

fn checked(g: &Graph, d: Decomposition) -> Result<Decomposition> {
    let report = verify_decomposition(g, &d);
    if report.ok {
        return Ok(d);
    }
    let detail = report
        .failures
        .first()
        .map(|f| format!("{} at {}: {}", f.check, f.index, f.detail))
        .unwrap_or_else(|| "undecided pair".into());
    Err(AsdError::infeasible("asd", detail).at(Stage::Verify))
}

fn pipeline(g: &Graph, cfg: &EngineConfig, c: f64, mode: CoreMode, trace: &mut AsdTrace) -> Result<Decomposition> {
    let n = g.n();
    let e = g.edge_count();
    let (m, _) = asd_shape(e);
    let sizes = asd_sizes(e);
    let peeled = peel(g, c);
    trace.peeled = peeled.stars.len();
    trace.core_edges = peeled.core.edge_count();
    if peeled.core.is_empty() {
        trace.route = Some(Route::Stars);
        trace.r = m;
        return asd_stars(&peeled.stars, n, &sizes).map_err(|err| err.at(Stage::StarForest));
    }
    trace.route = Some(Route::Pipeline);
    let core = &peeled.core;
    let ec = core.edge_count();
    let (tc, _) = asd_shape(ec);
    let (r, core_parts, core_witnesses) = if mode == CoreMode::Auto && tc >= cfg.core_threshold {
        let d = asd_bounded_degree(core, cfg).map_err(|err| err.at(Stage::Core))?;
        (m - tc, d.parts, d.witnesses)
    } else {
        if ec > m {
            return Err(AsdError::infeasible("asd", format!("core has {ec} edges, more than m = {m}")).at(Stage::Core));
        }
        let parts: Vec<Graph> = core.edges().iter().map(|&x| Graph::from_edges(n, [x])).collect();
        let witnesses = core
            .edges()
            .windows(2)
            .zip(parts.windows(2))
            .map(|(w, p)| Witness::from_map(&p[0], &p[1], vec![(w[0].u, w[1].u), (w[0].v, w[1].v)]))
            .collect();
        (m - ec, parts, witnesses)
    };
    trace.r = r;
    let alloc = allocate_substars(&peeled.stars, &core_parts, &sizes[r..], r).map_err(|err| err.at(Stage::Substars))?;
    let low = asd_stars(&alloc.residual, n, &sizes[..r]).map_err(|err| err.at(Stage::StarForest))?;

    let high: Vec<Graph> = core_parts
        .iter()
        .zip(&alloc.substars)
        .map(|(h, s)| h.union(&s.to_graph(n)))
        .collect();
    let mut witnesses = low.witnesses;
    if let (Some(last), Some(first)) = (low.parts.last(), high.first()) {
        let center = crate::star_forest::star_center(last).expect("low parts are stars");
        let leaves: Vec<usize> = last.edges().iter().map(|x| x.other(center)).collect();
        let from = Star { center, leaves };
        let structured = Witness::from_map(last, first, star_witness(&from, &alloc.substars[0]));
        witnesses.push(seam(last, first, structured, r)?);
    }
    for j in 0..high.len().saturating_sub(1) {
        let (s1, s2) = (&alloc.substars[j], &alloc.substars[j + 1]);
        let mut map = core_witnesses[j].map.clone();
        if s1.size() <= s2.size() {
            map.extend(star_witness(s1, s2));
        }
        let structured = Witness::from_map(&high[j], &high[j + 1], map);
        witnesses.push(seam(&high[j], &high[j + 1], structured, r + j + 1)?);
    }
    let mut parts = low.parts;
    parts.extend(high);
    Ok(Decomposition::from_parts(parts, witnesses))
}

fn seam(from: &Graph, to: &Graph, structured: Witness, i: usize) -> Result<Witness> {
    if validate_witness(from, to, &structured).is_ok() {
        return Ok(structured);
    }
    match embeds(from, to) {
        EmbedOutcome::Found(w) => Ok(w),
        _ => Err(AsdError::infeasible("asd", format!("part {i} does not embed into part {}", i + 1)).at(Stage::Seam)),
    }
}

fn lookup(map: &[(usize, usize)], v: usize) -> usize {
    map[map.binary_search_by_key(&v, |p| p.0).expect("mapped vertex")].1
}

/// Exhaustive search for an ascending decomposition of `g`.
///
/// Each part is the image of the previous part under an embedding into the
/// unused edges, plus one more edge whenever the size sequence steps up.
/// Failed states are remembered by the unused edge set and the isomorphism
/// type of the last part.
pub fn fallback_search(g: &Graph, cfg: &EngineConfig) -> Result<Decomposition> {
    FallbackSearch::new(g, cfg.fallback_budget).run()
}

struct FallbackSearch<'a> {
    g: &'a Graph,
    sizes: Vec<usize>,
    budget: u64,
    nodes: u64,
    exhausted: bool,
    failed: HashSet<(u128, String)>,
    chain: Vec<(u128, Vec<(usize, usize)>)>,
}

impl<'a> FallbackSearch<'a> {
    fn new(g: &'a Graph, budget: u64) -> Self {
        FallbackSearch {
            g,
            sizes: asd_sizes(g.edge_count()),
            budget,
            nodes: 0,
            exhausted: false,
            failed: HashSet::new(),
            chain: Vec::new(),
        }
    }

    fn graph(&self, mask: u128) -> Graph {
        self.g.with_edges(
            (0..self.g.edge_count())
                .filter(|&j| mask >> j & 1 == 1)
                .map(|j| self.g.edges()[j]),
        )
    }

    fn mask_of(&self, edges: &[Edge]) -> u128 {
        edges
            .iter()
            .map(|x| 1u128 << self.g.edges().binary_search(x).expect("edge of g"))
            .fold(0, |a, b| a | b)
    }

    fn run(&mut self) -> Result<Decomposition> {
        const OP: &str = "fallback_search";
        let e = self.g.edge_count();
        if e > 128 {
            return Err(AsdError::Unsupported {
                op: OP,
                detail: format!("{e} edges exceed the search cap of 128"),
            });
        }
        let all = if e == 128 { u128::MAX } else { (1u128 << e) - 1 };
        for j in 0..e {
            let h = 1u128 << j;
            self.chain.push((h, Vec::new()));
            if self.extend(0, h, all & !h) {
                return Ok(self.finish());
            }
            self.chain.pop();
            if self.exhausted {
                break;
            }
        }
        if self.exhausted {
            Err(AsdError::Unsupported {
                op: OP,
                detail: format!("node budget {} exhausted", self.budget),
            })
        } else {
            Err(AsdError::infeasible(OP, "no ascending decomposition exists"))
        }
    }

    fn extend(&mut self, i: usize, h: u128, rest: u128) -> bool {
        if i + 1 == self.sizes.len() {
            return rest == 0;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return false;
        }
        let hg = self.graph(h);
        let shape = census(&hg);
        let key = (
            rest,
            if shape.is_exact() {
                format!("{:?}", shape.entries)
            } else {
                format!("#{h:x}")
            },
        );
        if self.failed.contains(&key) {
            return false;
        }
        let Some(images) = self.images(&hg, rest) else {
            self.exhausted = true;
            return false;
        };
        let grow = self.sizes[i + 1] - self.sizes[i];
        for (img, map) in images {
            let free = rest & !img;
            let nexts: Vec<u128> = if grow == 0 {
                vec![img]
            } else {
                (0..128)
                    .filter(|&j| free >> j & 1 == 1)
                    .map(|j| img | 1u128 << j)
                    .collect()
            };
            for next in nexts {
                self.chain.push((next, map.clone()));
                if self.extend(i + 1, next, rest & !next) {
                    return true;
                }
                self.chain.pop();
                if self.exhausted {
                    return false;
                }
            }
        }
        self.failed.insert(key);
        false
    }

    /// Distinct images of `h` among the edges in `rest`, one map each.
    ///
    /// Components are placed one at a time on unused vertices. Images of a
    /// single component are deduplicated, and consecutive components of
    /// equal shape take images in increasing order, so permutations of
    /// interchangeable components are visited once.
    fn images(&mut self, h: &Graph, rest: u128) -> Option<BTreeMap<u128, Vec<(usize, usize)>>> {
        let mut comps = components(h);
        comps.sort_by(|a, b| (b.edges.len(), &b.shape).cmp(&(a.edges.len(), &a.shape)));
        let mut out = BTreeMap::new();
        let mut used = vec![false; self.g.n()];
        let ok = self.place(&comps, 0, rest, &mut used, 0, &mut Vec::new(), 0, &mut out);
        ok.then_some(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn place(
        &mut self,
        comps: &[Component],
        ci: usize,
        rest: u128,
        used: &mut Vec<bool>,
        acc: u128,
        map: &mut Vec<(usize, usize)>,
        prev: u128,
        out: &mut BTreeMap<u128, Vec<(usize, usize)>>,
    ) -> bool {
        if ci == comps.len() {
            out.entry(acc).or_insert_with(|| {
                let mut m = map.clone();
                m.sort_unstable();
                m
            });
            return true;
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let comp = &comps[ci];
        let cg = self.g.with_edges(comp.edges.iter().copied());
        let free = (0..self.g.edge_count())
            .filter(|&j| rest >> j & 1 == 1)
            .map(|j| self.g.edges()[j])
            .filter(|e| !used[e.u] && !used[e.v]);
        let target = self.g.with_edges(free);
        let mut local: BTreeMap<u128, Vec<(usize, usize)>> = BTreeMap::new();
        let room = self.budget.saturating_sub(self.nodes) as usize;
        let mut visited = 0u64;
        let complete = for_each_embedding(&cg, &target, room, |m| {
            visited += 1;
            let img: Vec<Edge> = comp
                .edges
                .iter()
                .map(|x| Edge::new(lookup(m, x.u), lookup(m, x.v)))
                .collect();
            local.entry(self.mask_of(&img)).or_insert_with(|| m.to_vec());
            if visited as usize > room {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        self.nodes += visited;
        if !complete || self.nodes > self.budget {
            return false;
        }
        let same = ci > 0 && comps[ci - 1].shape == comp.shape && comp.shape.is_exact();
        for (img, m) in local {
            if same && img <= prev {
                continue;
            }
            for &(_, y) in &m {
                used[y] = true;
            }
            let len = map.len();
            map.extend_from_slice(&m);
            let ok = self.place(comps, ci + 1, rest, used, acc | img, map, img, out);
            map.truncate(len);
            for &(_, y) in &m {
                used[y] = false;
            }
            if !ok {
                return false;
            }
        }
        true
    }

    fn finish(&self) -> Decomposition {
        let parts: Vec<Graph> = self.chain.iter().map(|(mask, _)| self.graph(*mask)).collect();
        let witnesses = (1..parts.len())
            .map(|i| Witness::from_map(&parts[i - 1], &parts[i], self.chain[i].1.clone()))
            .collect();
        Decomposition::from_parts(parts, witnesses)
    }
}
