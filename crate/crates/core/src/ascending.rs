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

//! Ascending chains: triangle slicing of isomorphic parts, matching
//! stripping, and ascending decompositions of graphs with linear maximum
//! degree.

use rand::seq::index::sample;

use crate::assembler::{approx_isomorphic_stronger, attempt_rng, StrongFamily};
use crate::census::{isomorphism, split_copies};
use crate::coloring::matching_asd;
use crate::config::EngineConfig;
use crate::decomposition::{Decomposition, Witness};
use crate::error::{AsdError, Result, Stage};
use crate::graph::{asd_shape, asd_sizes, Edge, Graph};
use crate::verifier::{embeds, validate_witness, EmbedOutcome};

/// Parameters of a triangle slicing. All indices are 1-based as in the
/// chain `F_{b+1}, ..., F_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlicePlan {
    pub m: usize,
    pub a: usize,
    pub b: usize,
    pub k: usize,
    pub l: usize,
    pub t1: usize,
    pub t2: usize,
    pub h: usize,
}

impl SlicePlan {
    /// Offsets `i` with `e(F_{b+i}) = e(F_{b+i+1})` forced by the slicing.
    pub fn plateaus(&self) -> Vec<usize> {
        let mut out = vec![self.t1, self.k, 2 * self.k - self.t1, 2 * self.k, 2 * self.k + self.t2];
        out.retain(|&i| i < 2 * self.k + self.l);
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.m != self.b + 2 * self.k + self.l {
            return Err(format!(
                "m = {} differs from b + 2k + l = {}",
                self.m,
                self.b + 2 * self.k + self.l
            ));
        }
        if self.k < 2 || !(1..self.k).contains(&self.t1) {
            return Err(format!("t1 = {} outside [1, k-1] for k = {}", self.t1, self.k));
        }
        if self.l == 0 || !(1..=self.l).contains(&self.t2) {
            return Err(format!("t2 = {} outside [1, l] for l = {}", self.t2, self.l));
        }
        if self.h != self.a + self.b + self.k {
            return Err(format!(
                "h = {} differs from a + b + k = {}",
                self.h,
                self.a + self.b + self.k
            ));
        }
        Ok(())
    }
}

/// `(k, l)` with `l` in `{l0, l0+1}`, `l0 = max(1, ⌊εm⌋)`, chosen so that
/// `m - b - l` is even, and `k = (m - b - l)/2`.
pub fn slice_shape(m: usize, b: usize, eps: f64) -> Result<(usize, usize)> {
    let l0 = ((eps * m as f64).floor() as usize).max(1);
    let l = if (m.wrapping_sub(b + l0)).is_multiple_of(2) {
        l0
    } else {
        l0 + 1
    };
    if m < b + l + 4 {
        return Err(AsdError::pre(
            "slice_shape",
            format!("m = {m} too small for b = {b}, l = {l}"),
        ));
    }
    Ok(((m - b - l) / 2, l))
}

/// Edge counts of a family about to be sliced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceStats {
    /// Half the edge count of one part.
    pub h: usize,
    pub parts: usize,
    pub star_edges: usize,
    pub remainder_edges: usize,
    pub total_edges: usize,
}

impl SliceStats {
    pub fn of(family: &StrongFamily) -> SliceStats {
        let part = family.parts.first().map_or(0, Graph::edge_count);
        let star_edges = family.stars.iter().map(Graph::edge_count).sum();
        SliceStats {
            h: part / 2,
            parts: family.parts.len(),
            star_edges,
            remainder_edges: family.remainder.edge_count(),
            total_edges: part * family.parts.len() + star_edges + family.remainder.edge_count(),
        }
    }
}

/// Plan for slicing `k + l` parts into `F_{b+1}, ..., F_m`, placing one
/// plateau at `plateau` when it lies in `[b+1, m]`.
pub fn plan_slice(
    m: usize,
    b: usize,
    l: usize,
    stats: &SliceStats,
    plateau: Option<usize>,
    paper: bool,
) -> Result<SlicePlan> {
    const OP: &str = "plan_slice";
    if m < b + l || !(m - b - l).is_multiple_of(2) {
        return Err(AsdError::pre(
            OP,
            format!("m - b - l = {m} - {b} - {l} is not a non-negative even number"),
        ));
    }
    let k = (m - b - l) / 2;
    if stats.parts != k + l {
        return Err(AsdError::pre(
            OP,
            format!("family has {} parts, expected k + l = {}", stats.parts, k + l),
        ));
    }
    if 2 * stats.h * stats.parts + stats.star_edges + stats.remainder_edges != stats.total_edges {
        return Err(AsdError::pre(OP, "edge counts of the family do not add up"));
    }
    if stats.h < k + b {
        return Err(AsdError::infeasible(OP, format!("h = {} < k + b = {}", stats.h, k + b)));
    }
    let a = stats.h - k - b;
    let (mut t1, mut t2) = (1, 1);
    if let Some(t) = plateau.filter(|&t| t > b && t <= m) {
        let u = t - b;
        if u < k {
            t1 = u;
        } else if u > k && u < 2 * k {
            t1 = 2 * k - u;
        } else if u > 2 * k {
            t2 = u - 2 * k;
        }
    }
    if paper {
        let q = (b * b) as f64 / m as f64;
        if (a as f64) < q / 3.0 || a as f64 > 2.0 * q / 3.0 {
            return Err(AsdError::infeasible(
                OP,
                format!(
                    "a = {a} outside [b²/3m, 2b²/3m] = [{:.3}, {:.3}]",
                    q / 3.0,
                    2.0 * q / 3.0
                ),
            ));
        }
    }
    let plan = SlicePlan {
        m,
        a,
        b,
        k,
        l,
        t1,
        t2,
        h: stats.h,
    };
    plan.validate().map_err(|d| AsdError::pre(OP, d))?;
    Ok(plan)
}

/// Consecutive parts with a witness per pair and an isolated matching per
/// part.
#[derive(Debug, Clone, PartialEq)]
pub struct AscendingChain {
    pub parts: Vec<Graph>,
    pub witnesses: Vec<Witness>,
    pub certificates: Vec<Graph>,
}

impl AscendingChain {
    pub fn sizes(&self) -> Vec<usize> {
        self.parts.iter().map(Graph::edge_count).collect()
    }

    /// Validates every witness and certificate.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.witnesses.len() + 1 != self.parts.len().max(1) {
            return Err("witness count mismatch".into());
        }
        for (i, w) in self.witnesses.iter().enumerate() {
            validate_witness(&self.parts[i], &self.parts[i + 1], w).map_err(|d| format!("pair {i}: {d}"))?;
        }
        for (i, (p, c)) in self.parts.iter().zip(&self.certificates).enumerate() {
            if !c
                .edges()
                .iter()
                .all(|e| p.contains(e) && p.degree(e.u) == 1 && p.degree(e.v) == 1)
            {
                return Err(format!("certificate {i} is not an isolated matching of its part"));
            }
        }
        Ok(())
    }
}

/// Output of [`triangle_slice`].
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleSlice {
    pub chain: AscendingChain,
    pub r_prime: Graph,
    /// Stars that were empty when one edge was to be moved off each.
    pub skipped_empty: usize,
}

#[derive(Debug, Clone, Copy)]
struct Slice {
    row: usize,
    lo: usize,
    hi: usize,
    star: bool,
}

fn dense(map: &[(usize, usize)], n: usize) -> Vec<usize> {
    let mut out = vec![usize::MAX; n];
    for &(a, b) in map {
        out[a] = b;
    }
    out
}

fn invert(map: &[usize]) -> Vec<usize> {
    let mut out = vec![usize::MAX; map.len()];
    for (a, &b) in map.iter().enumerate() {
        if b != usize::MAX {
            out[b] = a;
        }
    }
    out
}

/// Cuts the isomorphic parts of `family` along a common edge order into
/// the chain `A_1^+..A_{t1}^+, A_{t1+1}^-..A_k^-, B_k^-..B_{t1+1}^-,
/// B_{t1}^+..B_1^+, C_{k+1}..C_{k+l}`.
///
/// The order lists one half of the part first, its isolated edges leading,
/// and the mirror image of that half second, so prefixes of length `h` and
/// the complementary suffixes are isomorphic. Rows are identified through
/// isomorphisms with the first part.
pub fn triangle_slice(family: &StrongFamily, plan: &SlicePlan) -> Result<TriangleSlice> {
    const OP: &str = "triangle_slice";
    plan.validate().map_err(|d| AsdError::pre(OP, d))?;
    let (k, l, h) = (plan.k, plan.l, plan.h);
    let rows = k + l;
    if family.parts.len() != rows || family.stars.len() != rows {
        return Err(AsdError::pre(
            OP,
            format!("family has {} parts, plan needs {rows}", family.parts.len()),
        ));
    }
    let template = &family.parts[0];
    let n = template.n();
    if template.edge_count() != 2 * h {
        return Err(AsdError::pre(
            OP,
            format!("parts have {} edges, plan needs 2h = {}", template.edge_count(), 2 * h),
        ));
    }
    let copies = split_copies(template, 2).ok_or_else(|| AsdError::pre(OP, "parts are not 2-divisible"))?;
    let phi = dense(
        &isomorphism(&copies[0], &copies[1]).ok_or_else(|| AsdError::pre(OP, "halves differ"))?,
        n,
    );
    let first = &copies[0];
    let (mut order, rest): (Vec<Edge>, Vec<Edge>) = first
        .edges()
        .iter()
        .partition(|e| first.degree(e.u) == 1 && first.degree(e.v) == 1);
    let isolated = order.len();
    order.extend(rest);
    let mirrored: Vec<Edge> = order.iter().map(|e| Edge::new(phi[e.u], phi[e.v])).collect();
    order.extend(mirrored);

    let mut psi = Vec::with_capacity(rows);
    for (i, p) in family.parts.iter().enumerate() {
        let map = if i == 0 {
            (0..n).map(|v| (v, v)).collect()
        } else {
            isomorphism(template, p)
                .ok_or_else(|| AsdError::pre(OP, format!("part {i} is not isomorphic to part 0")))?
        };
        psi.push(dense(&map, n.max(p.n())));
    }
    let psi_inv: Vec<Vec<usize>> = psi.iter().map(|p| invert(p)).collect();
    let row_edge = |row: usize, pos: usize| {
        let e = order[pos];
        Edge::new(psi[row][e.u], psi[row][e.v])
    };

    // One edge moves off each star after the t2-plateau if needed.
    let mut stars = family.stars.clone();
    let mut moved = Vec::new();
    let mut skipped_empty = 0;
    let (p, q) = (k + plan.t2 - 1, k + plan.t2);
    if q < rows && stars[p].edge_count() != stars[q].edge_count() {
        for s in stars[q..].iter_mut() {
            match s.edges().last().copied() {
                Some(e) => {
                    moved.push(e);
                    *s = s.with_edges(s.edges()[..s.edge_count() - 1].iter().copied());
                }
                None => skipped_empty += 1,
            }
        }
    }

    let (a, b, t1) = (plan.a, plan.b, plan.t1);
    let mut slices = Vec::with_capacity(2 * k + l);
    for i in 1..=k {
        let plus = i <= t1;
        let len = a + b + i + usize::from(plus);
        slices.push(Slice {
            row: i - 1,
            lo: 0,
            hi: len,
            star: false,
        });
    }
    for i in (1..=k).rev() {
        let plus = i <= t1;
        let lo = a + b + i + usize::from(plus);
        slices.push(Slice {
            row: i - 1,
            lo,
            hi: 2 * h,
            star: false,
        });
    }
    for i in k + 1..=rows {
        slices.push(Slice {
            row: i - 1,
            lo: a + b + 2,
            hi: 2 * h,
            star: true,
        });
    }
    if slices.iter().any(|s| s.lo > s.hi || s.hi > 2 * h) {
        return Err(AsdError::pre(OP, "slice bounds exceed the part"));
    }

    let iso_positions: Vec<usize> = (0..isolated).chain(h..h + isolated).collect();
    let mut parts = Vec::with_capacity(slices.len());
    let mut certificates = Vec::with_capacity(slices.len());
    for s in &slices {
        let mut edges: Vec<Edge> = (s.lo..s.hi).map(|pos| row_edge(s.row, pos)).collect();
        if s.star {
            edges.extend_from_slice(stars[s.row].edges());
        }
        parts.push(Graph::from_edges(n, edges));
        certificates.push(Graph::from_edges(
            n,
            iso_positions
                .iter()
                .filter(|&&pos| pos >= s.lo && pos < s.hi)
                .map(|&pos| row_edge(s.row, pos)),
        ));
    }

    let mut witnesses = Vec::with_capacity(slices.len().saturating_sub(1));
    for j in 0..slices.len().saturating_sub(1) {
        let (s, t) = (slices[j], slices[j + 1]);
        let from = &parts[j];
        let to = &parts[j + 1];
        let mirror = s.row == t.row && s.lo == 0 && t.hi == 2 * h && t.lo == s.hi;
        let mut map: Vec<(usize, usize)> = Vec::new();
        for v in from.vertices() {
            if s.star && stars[s.row].degree(v) > 0 {
                continue;
            }
            let x = psi_inv[s.row][v];
            let y = if mirror { phi[x] } else { x };
            map.push((v, psi[t.row][y]));
        }
        if s.star {
            let (src, dst) = (&stars[s.row], &stars[t.row]);
            if let (Some(c1), Some(c2)) = (star_center(src), star_center(dst)) {
                map.push((c1, c2));
                let l1 = src.edges().iter().map(|e| e.other(c1));
                let l2 = dst.edges().iter().map(|e| e.other(c2));
                map.extend(l1.zip(l2));
            }
        }
        let w = Witness::from_map(from, to, map);
        validate_witness(from, to, &w).map_err(|d| AsdError::infeasible(OP, format!("slice pair {j}: {d}")))?;
        witnesses.push(w);
    }

    let mut r_prime: Vec<Edge> = family.remainder.edges().to_vec();
    r_prime.extend(moved);
    for row in k..rows {
        r_prime.extend((0..(a + b + 2).min(2 * h)).map(|pos| row_edge(row, pos)));
    }
    Ok(TriangleSlice {
        chain: AscendingChain {
            parts,
            witnesses,
            certificates,
        },
        r_prime: Graph::from_edges(n, r_prime),
        skipped_empty,
    })
}

fn star_center(s: &Graph) -> Option<usize> {
    crate::star_forest::star_center(s)
}

/// Targets and acceptance bound for [`strip_matchings`].
#[derive(Debug, Clone, PartialEq)]
pub struct StripPlan {
    pub targets: Vec<usize>,
    pub seed: u64,
    pub retry_budget: u32,
    /// Required bound on `Δ(F ∪ background)`.
    pub max_degree_bound: usize,
    pub background: Graph,
}

impl StripPlan {
    pub fn excesses(&self, chain: &AscendingChain) -> Vec<isize> {
        chain
            .parts
            .iter()
            .zip(&self.targets)
            .map(|(p, &t)| p.edge_count() as isize - t as isize)
            .collect()
    }
}

/// Output of [`strip_matchings`].
#[derive(Debug, Clone, PartialEq)]
pub struct StripOutcome {
    pub stripped: AscendingChain,
    pub f_part: Graph,
    pub attempts: u32,
}

/// Removes from each part a uniformly random set of `x_i` edges of its
/// isolated matching, so part `i` keeps `targets[i]` edges, resampling
/// until the removed edges (with the background) respect the degree bound.
/// Witnesses are rebuilt: removed images are replaced by spare isolated
/// edges of the next part.
pub fn strip_matchings(chain: &AscendingChain, plan: &StripPlan) -> Result<StripOutcome> {
    const OP: &str = "strip_matchings";
    if plan.targets.len() != chain.parts.len() {
        return Err(AsdError::pre(OP, "one target per part is required"));
    }
    let mut xs = Vec::with_capacity(chain.parts.len());
    for (i, x) in plan.excesses(chain).into_iter().enumerate() {
        if x < 0 || x as usize > chain.certificates[i].edge_count() {
            return Err(AsdError::pre(
                OP,
                format!(
                    "part {i} needs to drop {x} isolated edges, has {}",
                    chain.certificates[i].edge_count()
                ),
            ));
        }
        xs.push(x as usize);
    }
    let n = chain.parts.first().map_or(0, Graph::n);
    let mut attempt = 0;
    let removed: Vec<Vec<Edge>> = loop {
        if attempt >= plan.retry_budget {
            return Err(AsdError::RandomizedFailure {
                op: OP,
                attempts: attempt as usize,
            });
        }
        let mut rng = attempt_rng(plan.seed, attempt);
        attempt += 1;
        let picks: Vec<Vec<Edge>> = chain
            .certificates
            .iter()
            .zip(&xs)
            .map(|(c, &x)| {
                let mut idx = sample(&mut rng, c.edge_count(), x).into_vec();
                idx.sort_unstable();
                idx.into_iter().map(|j| c.edges()[j]).collect()
            })
            .collect();
        let f = Graph::from_edges(n.max(plan.background.n()), picks.iter().flatten().copied());
        if f.union(&plan.background.widen(f.n())).max_degree() <= plan.max_degree_bound {
            break picks;
        }
    };
    let parts: Vec<Graph> = chain
        .parts
        .iter()
        .zip(&removed)
        .map(|(p, r)| p.difference(&p.with_edges(r.iter().copied())))
        .collect();
    let certificates: Vec<Graph> = chain
        .certificates
        .iter()
        .zip(&removed)
        .map(|(c, r)| c.difference(&c.with_edges(r.iter().copied())))
        .collect();
    let mut witnesses = Vec::with_capacity(chain.witnesses.len());
    for (i, w) in chain.witnesses.iter().enumerate() {
        let (from, to) = (&parts[i], &parts[i + 1]);
        witnesses.push(recertify(from, to, w).map_err(|d| AsdError::infeasible(OP, format!("pair {i}: {d}")))?);
    }
    Ok(StripOutcome {
        f_part: Graph::from_edges(n, removed.into_iter().flatten()),
        stripped: AscendingChain {
            parts,
            witnesses,
            certificates,
        },
        attempts: attempt,
    })
}

fn recertify(from: &Graph, to: &Graph, old: &Witness) -> std::result::Result<Witness, String> {
    let mut map = Vec::new();
    let mut orphans = Vec::new();
    let mut image = Vec::new();
    for e in from.edges() {
        let (a, b) = (old.apply(e.u), old.apply(e.v));
        let (Some(a), Some(b)) = (a, b) else {
            return Err("old witness does not cover the part".into());
        };
        let img = Edge::new(a, b);
        if to.contains(&img) {
            image.push(img);
            map.push((e.u, a));
            map.push((e.v, b));
        } else if from.degree(e.u) == 1 && from.degree(e.v) == 1 {
            orphans.push(*e);
        } else {
            return Err("a removed image edge has a non-isolated preimage".into());
        }
    }
    image.sort_unstable();
    let spare: Vec<Edge> = to
        .edges()
        .iter()
        .copied()
        .filter(|e| to.degree(e.u) == 1 && to.degree(e.v) == 1 && image.binary_search(e).is_err())
        .collect();
    if spare.len() < orphans.len() {
        return Err("not enough spare isolated edges".into());
    }
    for (x, y) in orphans.iter().zip(&spare) {
        map.push((x.u, y.u));
        map.push((x.v, y.v));
    }
    let w = Witness::from_map(from, to, map);
    validate_witness(from, to, &w)?;
    Ok(w)
}

/// Ascending decomposition of a graph with linear maximum degree.
///
/// Graphs with `Δ <= ⌊m/2⌋ - 1` are split into matchings directly. Others
/// go through [`linear_asd`].
pub fn asd_bounded_degree(g: &Graph, cfg: &EngineConfig) -> Result<Decomposition> {
    const OP: &str = "asd_bounded_degree";
    let e = g.edge_count();
    if e == 0 {
        return Ok(Decomposition::empty());
    }
    let (m, _) = asd_shape(e);
    let delta = g.max_degree();
    if delta < m / 2 {
        return matching_asd(g).map_err(|err| err.at(Stage::Matchings));
    }
    if delta as f64 > cfg.c * m as f64 {
        return Err(AsdError::pre(
            OP,
            format!("Δ = {delta} exceeds c·m = {}", cfg.c * m as f64),
        ));
    }
    linear_asd(g, cfg)
}

/// The full chain: stronger isomorphic family, triangle slicing, matching
/// stripping, and matchings for the leftover `F ∪ R'`.
pub fn linear_asd(g: &Graph, cfg: &EngineConfig) -> Result<Decomposition> {
    const OP: &str = "linear_asd";
    let e = g.edge_count();
    let (m, t) = asd_shape(e);
    let b = (cfg.delta * m as f64).floor() as usize;
    let (k, l) = slice_shape(m, b, cfg.eps)?;
    let family =
        approx_isomorphic_stronger(g, m, k + l, cfg.eps * cfg.eps, cfg).map_err(|err| err.at(Stage::Family))?;
    let stats = SliceStats::of(&family);
    let plan = plan_slice(m, b, l, &stats, Some(t), cfg.is_paper()).map_err(|err| err.at(Stage::Slice))?;
    let slice = triangle_slice(&family, &plan).map_err(|err| err.at(Stage::Slice))?;
    let sizes = asd_sizes(e);
    let bound = if cfg.is_paper() {
        b / 50
    } else {
        (b / 2).saturating_sub(1)
    };
    let strip = StripPlan {
        targets: sizes[b..].to_vec(),
        seed: cfg.seed,
        retry_budget: cfg.retry_budget,
        max_degree_bound: bound,
        background: slice.r_prime.clone(),
    };
    let out = strip_matchings(&slice.chain, &strip).map_err(|err| err.at(Stage::Strip))?;
    let leftover = out.f_part.union(&slice.r_prime.widen(out.f_part.n()));
    let low = if b == 0 {
        if !leftover.is_empty() {
            return Err(AsdError::infeasible(OP, "leftover edges with b = 0"));
        }
        Decomposition::empty()
    } else {
        matching_asd(&leftover).map_err(|err| err.at(Stage::Matchings))?
    };
    if low.parts.len() != b {
        return Err(AsdError::infeasible(
            OP,
            format!("leftover split into {} parts, expected b = {b}", low.parts.len()),
        ));
    }
    let mut parts = low.parts;
    let mut witnesses = low.witnesses;
    if let (Some(last), Some(next)) = (parts.last(), out.stripped.parts.first()) {
        match embeds(last, next) {
            EmbedOutcome::Found(w) => witnesses.push(w),
            _ => {
                return Err(
                    AsdError::infeasible(OP, "matching part does not embed into the first chain part").at(Stage::Seam),
                )
            }
        }
    }
    parts.extend(out.stripped.parts);
    witnesses.extend(out.stripped.witnesses);
    Ok(Decomposition::from_parts(parts, witnesses))
}
