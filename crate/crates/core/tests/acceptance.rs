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

//! Acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p asd-core --test acceptance`. The process exits
//! with a non-zero status when any criterion fails.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use asd_core::ascending::{triangle_slice, SlicePlan};
use asd_core::assembler::{combine_matching_forest, feasibility_bound, RandomSettings, StrongFamily};
use asd_core::census::{census, isomorphism, ComponentCensus};
use asd_core::coloring::{balance_matchings, konig_color, matching_asd, vizing_color};
use asd_core::config::EngineConfig;
use asd_core::engine::{asd, asd_traced, Route};
use asd_core::generate::{generate, Family, GeneratorSpec};
use asd_core::graph::{asd_sizes, binom2};
use asd_core::ktt::{divide_parts, plane_partition, ProjectivePlane};
use asd_core::separator::{compute_t, Separator, SeparatorConfig};
use asd_core::star_forest::star_forest_decompose;
use asd_core::verifier::{verify_decomposition, Verdict};
use asd_core::{Edge, Graph};

/// Wall-clock limits.
const SEPARATOR_LIMIT: Duration = Duration::from_secs(300);
const END_TO_END_LIMIT: Duration = Duration::from_secs(600);
/// Largest `m` for the separator oracle.
const SEPARATOR_MAX_M: usize = 14;
/// Multisets with more than `m` targets are enumerated up to this `m` and
/// sampled above it.
const WIDE_EXHAUSTIVE_M: usize = 12;
const WIDE_SAMPLES: usize = 20_000;
/// Required success rate of the matching/forest combination.
const COMBINE_RATE: f64 = 0.99;
const COMBINE_BUDGET: u32 = 64;

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("separator oracle equivalence", separator_oracle),
        ("residue pairs T(n)", residue_pairs),
        ("edge coloring", edge_coloring),
        ("matching balancing", balancing),
        ("matching decomposition", matching_decomposition),
        ("star forests", star_forests),
        ("projective planes", projective_planes),
        ("part division", part_division),
        ("matching/forest combination", matching_forest),
        ("triangle slicing", slicing),
        ("end-to-end decomposition", end_to_end),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sorted_edges<'a>(graphs: impl IntoIterator<Item = &'a Graph>) -> Vec<Edge> {
    let mut out: Vec<Edge> = graphs.into_iter().flat_map(|g| g.edges().iter().copied()).collect();
    out.sort_unstable();
    out
}

/// Checks that `classes` are matchings whose edges are exactly those of `g`.
fn matching_partition(g: &Graph, classes: &[Graph]) -> Result<(), String> {
    ensure(classes.iter().all(Graph::is_matching), || {
        "a class is not a matching".into()
    })?;
    ensure(sorted_edges(classes) == sorted_edges([g]), || {
        "classes do not partition the edges".into()
    })
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, e: usize) -> Graph {
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    all.shuffle(rng);
    all.truncate(e);
    Graph::new(n, all).unwrap()
}

// ---------------------------------------------------------------------------
// Separation

/// Sums of at most 14 blocks, seven bits each, sorted ascending.
fn pack(sums: &[u8]) -> u128 {
    sums.iter().fold(0u128, |acc, &s| acc << 7 | s as u128)
}

/// Every multiset of `k` block sums realized by a partition of `1..=m`
/// into `k` nonempty blocks.
fn realizable(m: usize, k: usize) -> HashSet<u128> {
    let mut level: HashSet<u128> = HashSet::from([pack(&vec![0u8; k])]);
    for x in (1..=m).rev() {
        let mut next = HashSet::with_capacity(level.len() * 2);
        for &state in &level {
            let mut sums = vec![0u8; k];
            let mut s = state;
            for slot in sums.iter_mut().rev() {
                *slot = (s & 0x7f) as u8;
                s >>= 7;
            }
            for j in 0..k {
                if j > 0 && sums[j] == sums[j - 1] {
                    continue;
                }
                let mut grown = sums.clone();
                grown[j] += x as u8;
                grown.sort_unstable();
                if grown.iter().filter(|&&v| v == 0).count() < x {
                    next.insert(pack(&grown));
                }
            }
        }
        level = next;
    }
    level
}

/// Calls `visit` on every partition of `n` into exactly `k` parts, largest
/// first.
fn for_each_partition(n: usize, k: usize, visit: &mut dyn FnMut(&[usize])) {
    fn rec(rest: usize, k: usize, max: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if k == 0 {
            if rest == 0 {
                visit(cur);
            }
            return;
        }
        if rest < k || rest > k * max {
            return;
        }
        let hi = max.min(rest - (k - 1));
        let lo = rest.div_ceil(k);
        for x in (lo..=hi).rev() {
            cur.push(x);
            rec(rest - x, k - 1, x, cur, visit);
            cur.pop();
        }
    }
    rec(n, k, n, &mut Vec::with_capacity(k), visit);
}

fn exact_parts(m: usize, targets: &[usize], parts: &[Vec<usize>]) -> bool {
    if parts.len() != targets.len() {
        return false;
    }
    let mut seen = vec![false; m + 1];
    for (p, &t) in parts.iter().zip(targets) {
        if p.iter().sum::<usize>() != t {
            return false;
        }
        for &x in p {
            if x == 0 || x > m || std::mem::replace(&mut seen[x], true) {
                return false;
            }
        }
    }
    seen[1..].iter().all(|&s| s)
}

fn separator_oracle() -> Result<String, String> {
    let start = Instant::now();
    let mut sep = Separator::new(SeparatorConfig::default());
    let (mut checked, mut feasible, mut wide) = (0u64, 0u64, 0u64);
    for m in 1..=SEPARATOR_MAX_M {
        let total = binom2(m + 1);
        for k in 1..=m {
            let oracle = realizable(m, k);
            let mut fault = None;
            for_each_partition(total, k, &mut |targets| {
                if fault.is_some() {
                    return;
                }
                checked += 1;
                let mut key: Vec<u8> = targets.iter().map(|&t| t as u8).collect();
                key.sort_unstable();
                let expect = oracle.contains(&pack(&key));
                match sep.separate(m, targets) {
                    Ok(res) if expect && exact_parts(m, targets, &res.parts) => feasible += 1,
                    Err(_) if !expect => {}
                    Ok(_) if expect => fault = Some(format!("m={m} {targets:?}: parts are not exact")),
                    other => {
                        fault = Some(format!(
                            "m={m} {targets:?}: oracle says {expect}, got {:?}",
                            other.is_ok()
                        ))
                    }
                }
            });
            if let Some(f) = fault {
                return Err(f);
            }
        }
        // More targets than elements can never be separated.
        if m <= WIDE_EXHAUSTIVE_M {
            for k in m + 1..=total {
                let mut fault = None;
                for_each_partition(total, k, &mut |targets| {
                    wide += 1;
                    if fault.is_none() && sep.separate(m, targets).is_ok() {
                        fault = Some(format!("m={m} {targets:?} separated with {k} > m parts"));
                    }
                });
                if let Some(f) = fault {
                    return Err(f);
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
            for _ in 0..WIDE_SAMPLES {
                let k = rng.gen_range(m + 1..=total);
                let mut cuts: Vec<usize> = (1..total)
                    .collect::<Vec<_>>()
                    .choose_multiple(&mut rng, k - 1)
                    .copied()
                    .collect();
                cuts.sort_unstable();
                cuts.push(total);
                let targets: Vec<usize> = cuts
                    .iter()
                    .scan(0, |prev, &c| Some(c - std::mem::replace(prev, c)))
                    .collect();
                wide += 1;
                ensure(sep.separate(m, &targets).is_err(), || {
                    format!("m={m} {targets:?} separated with {k} > m parts")
                })?;
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < SEPARATOR_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{checked} multisets with <= m targets for m <= {SEPARATOR_MAX_M} ({feasible} separable, all exact), {wide} with more targets rejected"
    ))
}

fn residue_pairs() -> Result<String, String> {
    let mut cases = 0;
    for m in (2..=40).step_by(2) {
        for n in 1..=3 * m {
            let got = compute_t(n, m).map_err(|e| e.to_string())?;
            let mut brute = Vec::new();
            for x in 1..=m {
                for y in x + 1..=m {
                    if (x + y) % (m + 1) == n % (m + 1) && x + y <= n {
                        brute.push((x, y));
                    }
                }
            }
            let mut sorted = got.clone();
            sorted.sort_unstable();
            ensure(sorted == brute, || format!("n={n} m={m}: {got:?} vs {brute:?}"))?;
            let bound = (n.min(m) as f64) / 2.0 - 1.0;
            ensure(got.len() as f64 >= bound, || {
                format!("n={n} m={m}: |T| = {} < {bound}", got.len())
            })?;
            cases += 1;
        }
    }
    Ok(format!(
        "{cases} (n, m) pairs agree with enumeration and meet the bound"
    ))
}

// ---------------------------------------------------------------------------
// Coloring

fn edge_coloring() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut edges = 0;
    for seed in 0..1000 {
        let n = rng.gen_range(2..=200);
        let e = rng.gen_range(0..=binom2(n).min(4 * n));
        let g = random_graph(&mut rng, n, e);
        let classes = vizing_color(&g);
        matching_partition(&g, &classes).map_err(|d| format!("vizing seed {seed}: {d}"))?;
        ensure(classes.len() <= g.max_degree() + 1, || {
            format!(
                "vizing seed {seed}: {} classes for max degree {}",
                classes.len(),
                g.max_degree()
            )
        })?;

        let left = rng.gen_range(1..n);
        let mut pairs = Vec::new();
        for u in 0..left {
            for v in left..n {
                if rng.gen_bool(0.08) {
                    pairs.push((u, v));
                }
            }
        }
        let b = Graph::new(n, pairs).unwrap();
        let (l, r): (Vec<usize>, Vec<usize>) = ((0..left).collect(), (left..n).collect());
        let classes = konig_color(&b, &l, &r).map_err(|e| format!("konig seed {seed}: {e}"))?;
        matching_partition(&b, &classes).map_err(|d| format!("konig seed {seed}: {d}"))?;
        ensure(classes.len() == b.max_degree(), || {
            format!(
                "konig seed {seed}: {} classes for max degree {}",
                classes.len(),
                b.max_degree()
            )
        })?;
        edges += g.edge_count() + b.edge_count();
    }
    Ok(format!("1000 general and 1000 bipartite graphs, {edges} edges"))
}

fn balancing() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for seed in 0..1000 {
        let n = rng.gen_range(2..=60);
        let e = rng.gen_range(0..=binom2(n).min(3 * n));
        let g = random_graph(&mut rng, n, e);
        let mut family = vizing_color(&g);
        for _ in 0..rng.gen_range(0..=3) {
            family.push(Graph::empty(n));
        }
        family.shuffle(&mut rng);
        let out = balance_matchings(&family);
        ensure(out.len() == family.len(), || {
            format!("seed {seed}: class count changed")
        })?;
        matching_partition(&g, &out).map_err(|d| format!("seed {seed}: {d}"))?;
        let sizes: Vec<usize> = out.iter().map(Graph::edge_count).collect();
        let (lo, hi) = (
            sizes.iter().min().copied().unwrap_or(0),
            sizes.iter().max().copied().unwrap_or(0),
        );
        ensure(hi - lo <= 1, || format!("seed {seed}: sizes {sizes:?}"))?;
    }
    Ok("1000 families balanced to within one edge".into())
}

/// Random graph with `e` edges and maximum degree at most `cap`.
fn capped_graph(rng: &mut ChaCha8Rng, e: usize, cap: usize) -> Graph {
    let mut n = (2 * e).div_ceil(cap) + rng.gen_range(0..8);
    loop {
        let mut deg = vec![0; n];
        let mut seen = HashSet::new();
        let mut pairs = Vec::new();
        let mut tries = 0;
        while pairs.len() < e && tries < 50 * e {
            tries += 1;
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u == v || deg[u] >= cap || deg[v] >= cap || !seen.insert((u.min(v), u.max(v))) {
                continue;
            }
            deg[u] += 1;
            deg[v] += 1;
            pairs.push((u, v));
        }
        if pairs.len() == e {
            return Graph::new(n, pairs).unwrap();
        }
        n += 4;
    }
}

fn cycle_union(rng: &mut ChaCha8Rng, e: usize) -> Graph {
    let mut pairs = Vec::new();
    let (mut rest, mut base) = (e, 0);
    while rest > 0 {
        let mut len = rng.gen_range(3..=12).min(rest);
        if rest - len < 3 {
            len = rest;
        }
        pairs.extend((0..len).map(|j| (base + j, base + (j + 1) % len)));
        base += len;
        rest -= len;
    }
    Graph::new(base, pairs).unwrap()
}

fn matching_decomposition() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut largest = 0;
    for seed in 0..100 {
        let m = rng.gen_range(6..=40);
        let e = rng.gen_range(binom2(m) + 1..=binom2(m + 1));
        let cap = m / 2 - 1;
        let g = if seed % 2 == 0 {
            cycle_union(&mut rng, e)
        } else {
            capped_graph(&mut rng, e, cap)
        };
        ensure(g.max_degree() <= cap, || {
            format!("instance {seed} exceeds the degree cap")
        })?;
        let d = matching_asd(&g).map_err(|err| format!("instance {seed} (m={m}, e={e}): {err}"))?;
        ensure(d.sizes() == asd_sizes(e), || {
            format!("instance {seed}: sizes {:?}", d.sizes())
        })?;
        let report = verify_decomposition(&g, &d);
        ensure(report.verdict() == Verdict::Ok, || {
            format!("instance {seed}: {:?}", report.failures)
        })?;
        largest = largest.max(m);
    }
    Ok(format!("100 graphs verified, largest m = {largest}"))
}

// ---------------------------------------------------------------------------
// Stars and blocks

fn star_forests() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for seed in 0..1000 {
        let nx = rng.gen_range(1..=30);
        let ny = rng.gen_range(1..=15);
        let d = rng.gen_range(1..=6);
        let ys: Vec<usize> = (nx..nx + ny).collect();
        let mut pairs = Vec::new();
        for x in 0..nx {
            let deg = rng.gen_range(0..d).min(ny);
            for &y in ys.choose_multiple(&mut rng, deg) {
                pairs.push((x, y));
            }
        }
        let h = Graph::new(nx + ny, pairs).unwrap();
        let xs: Vec<usize> = (0..nx).collect();
        let (parts, rem) = star_forest_decompose(&h, &xs, &ys, d).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(parts.len() == d, || format!("seed {seed}: {} forests", parts.len()))?;
        let shape = census(&parts[0].part);
        for p in &parts {
            ensure(census(&p.part) == shape, || format!("seed {seed}: forests differ"))?;
            for &y in &ys {
                let size = p.centers.get(&y).map_or(0, Vec::len);
                ensure(size == h.degree(y) / d, || {
                    format!("seed {seed}: star at {y} has {size} leaves")
                })?;
            }
        }
        ensure(rem.max_degree() < d, || {
            format!("seed {seed}: remainder degree {}", rem.max_degree())
        })?;
        let mut all: Vec<&Graph> = parts.iter().map(|p| &p.part).collect();
        all.push(&rem);
        ensure(sorted_edges(all) == sorted_edges([&h]), || {
            format!("seed {seed}: edges not partitioned")
        })?;
    }
    Ok("1000 bipartite instances".into())
}

fn det3(a: [usize; 3], b: [usize; 3], c: [usize; 3], p: usize) -> usize {
    let m = |x: usize, y: usize| x * y % p;
    let plus = m(a[0], m(b[1], c[2])) + m(a[1], m(b[2], c[0])) + m(a[2], m(b[0], c[1]));
    let minus = m(a[2], m(b[1], c[0])) + m(a[0], m(b[2], c[1])) + m(a[1], m(b[0], c[2]));
    (plus + 3 * p - minus) % p
}

fn projective_planes() -> Result<String, String> {
    for p in [2, 3, 5, 7, 11, 13] {
        let plane = ProjectivePlane::new(p).map_err(|e| e.to_string())?;
        let size = p * p + p + 1;
        ensure(plane.points.len() == size && plane.lines.len() == size, || {
            format!("p={p}: wrong counts")
        })?;
        let distinct: BTreeSet<[usize; 3]> = plane.points.iter().copied().collect();
        ensure(distinct.len() == size, || format!("p={p}: repeated point"))?;
        for pt in &plane.points {
            let lead = pt.iter().find(|&&c| c != 0);
            ensure(lead == Some(&1) && pt.iter().all(|&c| c < p), || {
                format!("p={p}: {pt:?} not normalized")
            })?;
        }
        let mut on = vec![0; size];
        let mut pair_lines = HashMap::new();
        for line in &plane.lines {
            ensure(line.len() == p + 1, || {
                format!("p={p}: line with {} points", line.len())
            })?;
            for (i, &a) in line.iter().enumerate() {
                on[a] += 1;
                for &b in &line[i + 1..] {
                    *pair_lines.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                }
                if i >= 2 {
                    let pts = &plane.points;
                    ensure(det3(pts[line[0]], pts[line[1]], pts[a], p) == 0, || {
                        format!("p={p}: line is not collinear")
                    })?;
                }
            }
        }
        ensure(on.iter().all(|&c| c == p + 1), || {
            format!("p={p}: point on the wrong number of lines")
        })?;
        ensure(
            pair_lines.len() == binom2(size) && pair_lines.values().all(|&c| c == 1),
            || format!("p={p}: a pair of points is not on exactly one line"),
        )?;
        for i in 0..size {
            for j in i + 1..size {
                let common = plane.lines[i]
                    .iter()
                    .filter(|x| plane.lines[j].binary_search(x).is_ok())
                    .count();
                ensure(common == 1, || format!("p={p}: lines {i},{j} share {common} points"))?;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
        for _ in 0..50 {
            let (a, b) = (rng.gen_range(0..size), rng.gen_range(0..size));
            if a != b {
                let line = &plane.lines[plane.line_through(a, b)];
                ensure(line.contains(&a) && line.contains(&b), || {
                    format!("p={p}: line through {a},{b}")
                })?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..300 {
        let n = rng.gen_range(4..=80);
        let e = rng.gen_range(0..=binom2(n).min(5 * n));
        let g = random_graph(&mut rng, n, e);
        let (p, parts) = plane_partition(&g);
        ensure(p * p >= n, || format!("graph {seed}: order {p} too small for n = {n}"))?;
        ensure(sorted_edges(&parts) == sorted_edges([&g]), || {
            format!("graph {seed}: edges not partitioned")
        })?;
        for part in &parts {
            ensure(part.vertices().len() <= p + 1, || {
                format!("graph {seed}: part with {} vertices", part.vertices().len())
            })?;
        }
    }
    Ok("orders 2..13 exhaustive, 300 graph partitions".into())
}

fn part_division() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut done = 0;
    while done < 10_000 {
        let l = rng.gen_range(1..=12);
        let k = rng.gen_range(1..=30);
        let sizes: Vec<usize> = (0..l).map(|_| rng.gen_range(1..=60)).collect();
        let total: usize = sizes.iter().sum();
        if total < k + l {
            continue;
        }
        done += 1;
        let (s, sigma) = divide_parts(l, k, &sizes).map_err(|e| format!("{l} {k} {sizes:?}: {e}"))?;
        let ctx = || format!("l={l} k={k} sizes={sizes:?} -> s={s} sigma={sigma:?}");
        ensure(s == total / (k + l) && sigma.len() == l, ctx)?;
        ensure(sigma.iter().zip(&sizes).all(|(&g, &x)| g * s <= x), ctx)?;
        ensure(sigma.iter().sum::<usize>() == k, ctx)?;
        // total - s k <= (l/k) total + k, scaled by k.
        ensure(k * (total - s * k) <= l * total + k * k, ctx)?;
    }
    Ok("10000 random inputs".into())
}

// ---------------------------------------------------------------------------
// Assembly

/// Component shapes used to build divisible forests.
fn shape_edges(shape: usize) -> Vec<(usize, usize)> {
    match shape {
        0 => vec![(0, 1)],
        1 => vec![(0, 1), (1, 2)],
        2 => vec![(0, 1), (0, 2), (0, 3)],
        3 => vec![(0, 1), (1, 2), (2, 3)],
        4 => vec![(0, 1), (0, 2), (0, 3), (0, 4)],
        _ => vec![(0, 1), (1, 2), (2, 3), (3, 4)],
    }
}

fn isolated_edges(count: usize) -> ComponentCensus {
    census(&Graph::new(2 * count, (0..count).map(|j| (2 * j, 2 * j + 1))).unwrap())
}

fn matching_forest() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut ok, mut attempts) = (0, 0);
    let total = 1000;
    for seed in 0..total {
        let mut pairs = Vec::new();
        let mut n = 0;
        let count = rng.gen_range(1..=4);
        let shapes: Vec<usize> = (0..6)
            .collect::<Vec<_>>()
            .choose_multiple(&mut rng, count)
            .copied()
            .collect();
        for &shape in &shapes {
            let edges = shape_edges(shape);
            let size = edges.iter().map(|&(_, v)| v).max().unwrap() + 1;
            for _ in 0..5 * rng.gen_range(1..=3) {
                pairs.extend(edges.iter().map(|&(u, v)| (n + u, n + v)));
                n += size;
            }
        }
        let h0 = Graph::new(n, pairs.clone()).unwrap();
        let ell = feasibility_bound(&h0).floor() as usize + 1 + rng.gen_range(0..=2);
        let extra = 10 * ell;
        let mut verts: Vec<usize> = (0..n + extra).collect();
        verts.shuffle(&mut rng);
        let mut m_pairs = Vec::new();
        for pair in verts.chunks(2) {
            if m_pairs.len() == 5 * ell {
                break;
            }
            if !h0.has_edge(pair[0], pair[1]) {
                m_pairs.push((pair[0], pair[1]));
            }
        }
        ensure(m_pairs.len() == 5 * ell, || {
            format!("instance {seed}: matching too small")
        })?;
        let h = Graph::new(n + extra, pairs).unwrap();
        let m_part = Graph::new(n + extra, m_pairs).unwrap();
        let rs = RandomSettings {
            seed,
            retry_budget: COMBINE_BUDGET,
            check_feasibility: true,
        };
        let Ok(split) = combine_matching_forest(&m_part, &h, rs) else {
            continue;
        };
        let want = census(&h).divided(5).plus(&isolated_edges(ell));
        ensure(split.parts.len() == 5, || {
            format!("instance {seed}: {} parts", split.parts.len())
        })?;
        for p in &split.parts {
            ensure(census(p) == want, || format!("instance {seed}: part census differs"))?;
        }
        ensure(sorted_edges(&split.parts) == sorted_edges([&h, &m_part]), || {
            format!("instance {seed}: edges not partitioned")
        })?;
        ok += 1;
        attempts += split.attempts;
    }
    let rate = ok as f64 / total as f64;
    ensure(rate >= COMBINE_RATE, || {
        format!("success rate {rate:.3} below {COMBINE_RATE}")
    })?;
    Ok(format!(
        "{ok}/{total} within {COMBINE_BUDGET} attempts, {attempts} attempts in total"
    ))
}

/// Rows of the slicing sweep: `k + l` relabeled copies of a 2-divisible
/// forest with `2h` edges, each with its own star.
fn slice_family(k: usize, l: usize, h: usize, stars: &[usize], seed: u64) -> StrongFamily {
    let path = match h {
        0..=2 => 0,
        3..=4 => 2,
        _ => 3,
    };
    let mut half: Vec<(usize, usize)> = (0..path).map(|j| (j, j + 1)).collect();
    let mut v = if path > 0 { path + 1 } else { 0 };
    for _ in path..h {
        half.push((v, v + 1));
        v += 2;
    }
    let part_vertices = 2 * v;
    let max_star = stars.iter().copied().max().unwrap_or(0);
    let width = part_vertices + max_star + 1;
    let rows = k + l;
    let n = rows * width;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut parts, mut star_graphs, mut certificates) = (Vec::new(), Vec::new(), Vec::new());
    for r in 0..rows {
        let o = r * width;
        let mut label: Vec<usize> = (0..part_vertices).collect();
        label.shuffle(&mut rng);
        let edges = half.iter().flat_map(|&(a, b)| [(a, b), (a + v, b + v)]);
        let part = Graph::new(n, edges.map(|(a, b)| (o + label[a], o + label[b]))).unwrap();
        let iso = part
            .edges()
            .iter()
            .filter(|e| part.degree(e.u) == 1 && part.degree(e.v) == 1)
            .copied();
        certificates.push(Graph::from_edges(n, iso));
        let size = if r >= k { stars[r - k] } else { 0 };
        let c = o + part_vertices;
        star_graphs.push(Graph::new(n, (1..=size).map(|j| (c, c + j))).unwrap());
        parts.push(part);
    }
    StrongFamily {
        shape: census(&parts[0]),
        parts,
        stars: star_graphs,
        certificates,
        remainder: Graph::empty(n),
        attempts: 0,
    }
}

fn slicing() -> Result<String, String> {
    let mut runs = 0;
    for k in 2..=10 {
        for l in 1..=3 {
            for a in 0..=5 {
                for b in 0..=6 {
                    for variant in 0..2 {
                        let stars: Vec<usize> = (0..l).map(|j| if variant == 0 { 0 } else { j }).collect();
                        let h = a + b + k;
                        let family = slice_family(k, l, h, &stars, (k * 1000 + l * 100 + a * 10 + b) as u64);
                        for t1 in 1..k {
                            for t2 in 1..=l {
                                let plan = SlicePlan {
                                    m: b + 2 * k + l,
                                    a,
                                    b,
                                    k,
                                    l,
                                    t1,
                                    t2,
                                    h,
                                };
                                check_slice(&family, &plan, &stars).map_err(|d| {
                                    format!("k={k} l={l} a={a} b={b} t1={t1} t2={t2} stars={stars:?}: {d}")
                                })?;
                                runs += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(format!("{runs} parameter combinations"))
}

fn check_slice(family: &StrongFamily, plan: &SlicePlan, stars: &[usize]) -> Result<(), String> {
    let (k, l, a, b) = (plan.k, plan.l, plan.a, plan.b);
    let out = triangle_slice(family, plan).map_err(|e| e.to_string())?;
    out.chain.check()?;
    let sizes = out.chain.sizes();
    ensure(sizes.len() == 2 * k + l, || format!("{} parts", sizes.len()))?;
    ensure(sizes[0] == a + b + 2, || format!("first part has {} edges", sizes[0]))?;
    ensure(sizes.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1), || {
        format!("sizes {sizes:?}")
    })?;

    // Star sizes after one edge moves off every star beyond the t2 plateau.
    let mut moved = stars.to_vec();
    if plan.t2 < l && stars[plan.t2 - 1] != stars[plan.t2] {
        for s in &mut moved[plan.t2..] {
            *s = s.saturating_sub(1);
        }
    }
    let mut expected: BTreeSet<usize> = [plan.t1, k, 2 * k - plan.t1, 2 * k, 2 * k + plan.t2]
        .into_iter()
        .filter(|&i| i < 2 * k + l)
        .collect();
    expected.extend((1..l).filter(|&j| moved[j - 1] == moved[j]).map(|j| 2 * k + j));
    let found: BTreeSet<usize> = (1..sizes.len()).filter(|&i| sizes[i - 1] == sizes[i]).collect();
    ensure(found == expected, || {
        format!("plateaus {found:?}, expected {expected:?}")
    })?;

    for i in 1..=k {
        let (lo, hi) = (&out.chain.parts[i - 1], &out.chain.parts[2 * k - i]);
        ensure(sorted_edges([lo, hi]) == sorted_edges([&family.parts[i - 1]]), || {
            format!("row {i} is not split in two")
        })?;
    }
    let mut everything: Vec<&Graph> = out.chain.parts.iter().collect();
    everything.push(&out.r_prime);
    let mut source: Vec<&Graph> = family.parts.iter().chain(&family.stars).collect();
    source.push(&family.remainder);
    ensure(sorted_edges(everything) == sorted_edges(source), || {
        "edges are not conserved".into()
    })
}

// ---------------------------------------------------------------------------
// End to end

/// Refined color classes, used to bucket candidates for isomorphism tests.
fn invariant(g: &Graph) -> Vec<u64> {
    let adj = g.adjacency();
    let mut color: Vec<u64> = adj.iter().map(|a| a.len() as u64).collect();
    for _ in 0..3 {
        color = adj
            .iter()
            .enumerate()
            .map(|(v, a)| {
                let mut around: Vec<u64> = a.iter().map(|&u| color[u]).collect();
                around.sort_unstable();
                around.iter().fold(color[v].wrapping_mul(0x100_0000_01b3), |h, &c| {
                    (h ^ c).wrapping_mul(0x100_0000_01b3)
                })
            })
            .collect();
    }
    color.sort_unstable();
    color
}

/// One representative of every isomorphism class of graphs with `e`
/// edges and no isolated vertices, per edge count up to `e`.
fn all_graphs(e: usize) -> Vec<Vec<Graph>> {
    let mut levels = vec![vec![Graph::new(2, [(0, 1)]).unwrap()]];
    while levels.len() < e {
        let mut buckets: HashMap<Vec<u64>, Vec<Graph>> = HashMap::new();
        let mut next = Vec::new();
        for g in levels.last().unwrap() {
            let n = g.n();
            let mut candidates = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if !g.has_edge(u, v) {
                        candidates.push((n, (u, v)));
                    }
                }
                candidates.push((n + 1, (u, n)));
            }
            candidates.push((n + 2, (n, n + 1)));
            for (size, (u, v)) in candidates {
                let pairs = g.edges().iter().map(|x| (x.u, x.v)).chain([(u, v)]);
                let h = Graph::new(size, pairs).unwrap();
                let bucket = buckets.entry(invariant(&h)).or_default();
                if bucket.iter().all(|x| isomorphism(x, &h).is_none()) {
                    bucket.push(h.clone());
                    next.push(h);
                }
            }
        }
        levels.push(next);
    }
    levels
}

fn decomposes(g: &Graph, cfg: &EngineConfig) -> Result<Route, String> {
    let (res, trace) = asd_traced(g, cfg);
    let d = res.map_err(|e| e.to_string())?;
    let report = verify_decomposition(g, &d);
    ensure(report.verdict() == Verdict::Ok, || format!("{:?}", report.failures))?;
    ensure(d.sizes() == asd_sizes(g.edge_count()), || {
        format!("sizes {:?}", d.sizes())
    })?;
    trace.route.ok_or_else(|| "no route recorded".into())
}

fn family_graph(family: Family, seed: u64) -> Graph {
    generate(&GeneratorSpec { family, seed }).unwrap()
}

fn end_to_end() -> Result<String, String> {
    let start = Instant::now();
    let desk = EngineConfig::desk();
    let mut count = 0;

    // Known counts of graphs with q edges and no isolated vertices.
    const CLASSES: [usize; 10] = [1, 2, 5, 11, 26, 68, 177, 497, 1476, 4613];
    let levels = all_graphs(10);
    for (q, level) in levels.iter().enumerate() {
        ensure(level.len() == CLASSES[q], || {
            format!("{} classes with {} edges, expected {}", level.len(), q + 1, CLASSES[q])
        })?;
    }
    for m in 1..=4 {
        for (i, g) in levels[binom2(m + 1) - 1].iter().enumerate() {
            decomposes(g, &desk).map_err(|d| format!("class {i} with m={m}: {d}"))?;
            count += 1;
        }
    }
    let exhaustive = count;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in 5..=6 {
        let e = binom2(m + 1);
        for s in 0..300 {
            let n = rng.gen_range(m + 2..=2 * e);
            let n = (n..).find(|&n| binom2(n) >= e).unwrap();
            let g = random_graph(&mut rng, n, e);
            decomposes(&g, &desk).map_err(|d| format!("sample {s} with m={m}: {d}"))?;
            count += 1;
        }
    }
    let families = [
        Family::Complete(7),
        Family::CompleteBipartite(3, 5),
        Family::CompleteBipartite(3, 7),
        Family::CompleteBipartite(1, 15),
        Family::CompleteBipartite(1, 21),
        Family::Cycle(15),
        Family::Cycle(21),
        Family::Matching(15),
        Family::Matching(21),
        Family::StarForest(vec![6, 9]),
        Family::StarForest(vec![7, 7, 7]),
        Family::StarForest(vec![1, 2, 3, 4, 5, 6]),
        Family::RandomGnm { n: 7, m: 21 },
        Family::RandomGnm { n: 12, m: 15 },
    ];
    for family in families {
        let name = family.to_string();
        decomposes(&family_graph(family, 0), &desk).map_err(|d| format!("{name}: {d}"))?;
        count += 1;
    }
    let small = count;

    let mut structured = desk.clone();
    structured.fallback_m = 0;
    for m in 1..=40 {
        let e = binom2(m + 1);
        let q = (e / (2 * (m + 1))).max(1);
        let mut sizes = vec![m + 1; q - 1];
        sizes.push(e - (q - 1) * (m + 1));
        let mut graphs = vec![
            ("star", family_graph(Family::StarForest(vec![e]), 0)),
            ("star forest", family_graph(Family::StarForest(sizes), 0)),
        ];
        // Below the core threshold only the exact search handles these.
        if m >= structured.core_threshold {
            graphs.push(("cycle", family_graph(Family::Cycle(e), 0)));
            graphs.push(("cycle union", cycle_union(&mut rng, e)));
            graphs.push(("matching", family_graph(Family::Matching(e), 0)));
        }
        for (name, g) in graphs {
            let route = decomposes(&g, &structured).map_err(|d| format!("{name} with m={m}: {d}"))?;
            ensure(matches!(route, Route::Stars | Route::Pipeline), || {
                format!("{name} with m={m} took {route:?}")
            })?;
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < END_TO_END_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{exhaustive} classes for m <= 4, {} sampled or generated graphs for m <= 6, {} structured graphs up to m = 40",
        small - exhaustive,
        count - small
    ))
}

// ---------------------------------------------------------------------------
// Determinism

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_asd"))
        .args(args)
        .output()
        .expect("run asd");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let graphs = [
        ("gnm.txt", "gnm:9:21"),
        ("forest.txt", "star-forest:9,9,10"),
        ("cycle.txt", "cycle:45"),
    ];
    for (file, family) in graphs {
        let (code, text) = run_cli(&["generate", family, "--seed", "5"]);
        ensure(code == 0, || format!("generate {family} exited {code}"))?;
        std::fs::write(path(file), text).map_err(|e| e.to_string())?;
    }
    let (code, text) = run_cli(&["decompose", &path("gnm.txt"), "--seed", "3"]);
    ensure(code == 0, || format!("decompose exited {code}"))?;
    std::fs::write(path("gnm.json"), text).map_err(|e| e.to_string())?;

    let commands: Vec<Vec<String>> = vec![
        vec!["generate".into(), "gnm:40:200".into(), "--seed".into(), "17".into()],
        vec!["decompose".into(), path("gnm.txt"), "--seed".into(), "3".into()],
        vec![
            "decompose".into(),
            path("forest.txt"),
            "--seed".into(),
            "1".into(),
            "--fallback-m".into(),
            "0".into(),
        ],
        vec![
            "decompose".into(),
            path("cycle.txt"),
            "--seed".into(),
            "2".into(),
            "--verify".into(),
        ],
        vec![
            "decompose".into(),
            path("gnm.txt"),
            "--profile".into(),
            "paper".into(),
            "--seed".into(),
            "4".into(),
        ],
        vec!["verify".into(), path("gnm.txt"), path("gnm.json")],
        vec!["separate".into(), "12".into(), "30,20,28".into()],
        vec!["bench".into(), "coloring".into(), "--seeds".into(), "4".into()],
        vec!["bench".into(), "asd-desk".into(), "--seeds".into(), "8".into()],
        vec!["bench".into(), "separator-oracle".into(), "--max-m".into(), "7".into()],
    ];
    for cmd in &commands {
        let args: Vec<&str> = cmd.iter().map(String::as_str).collect();
        let first = run_cli(&args);
        for _ in 0..2 {
            let again = run_cli(&args);
            ensure(again == first, || {
                format!("`asd {}` differs between runs", args.join(" "))
            })?;
        }
        ensure(!first.1.is_empty(), || {
            format!("`asd {}` printed nothing", args.join(" "))
        })?;
        serde_json::from_slice::<serde_json::Value>(&first.1)
            .or_else(|_| {
                if args[0] == "generate" {
                    Ok(serde_json::Value::Null)
                } else {
                    Err(())
                }
            })
            .map_err(|_| format!("`asd {}` did not print JSON", args.join(" ")))?;
    }

    let mut cfg = EngineConfig::desk();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..20 {
        cfg.seed = seed;
        let g = random_graph(&mut rng, 9, 21);
        let first = asd(&g, &cfg).map(|d| d.to_json()).map_err(|e| e.to_string());
        let second = asd(&g, &cfg).map(|d| d.to_json()).map_err(|e| e.to_string());
        ensure(first == second, || format!("library output differs for seed {seed}"))?;
    }
    Ok(format!(
        "{} CLI commands run three times each, 20 library runs twice each",
        commands.len()
    ))
}
