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

//! Partitioning `{1, ..., m}` into sets with prescribed sums.
//!
//! Large instances are solved by the pair-system recursion: numbers are
//! grouped into pairs `{x, m+1-x}` that each sum to `m+1`, residues modulo
//! `m+1` are fixed with pairs drawn from `T(n)`, and the rest is filled with
//! whole pairs. Everything else goes to an exact search.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{AsdError, Result};

/// Thresholds of the pair-system recursion, plus the exact-search limits.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorConfig {
    /// Entry requires `a_i >= min(entry_step * i, entry_mult * (m+1))`.
    pub entry_step: usize,
    pub entry_mult: usize,
    /// Per-step requirement `a_j >= min(step * j, large_mult * (m+1))`.
    pub step: usize,
    pub large_mult: usize,
    /// Coefficient in `l >= tail_mult * (k-i+1)`.
    pub tail_mult: usize,
    /// Largest `m` handed to the exact search.
    pub fallback_cap: usize,
    /// Search nodes after which failed states are memoized.
    pub memo_after: usize,
}

impl Default for SeparatorConfig {
    fn default() -> Self {
        SeparatorConfig {
            entry_step: 1600,
            entry_mult: 20,
            step: 16,
            large_mult: 3,
            tail_mult: 5,
            fallback_cap: 64,
            memo_after: 256,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolvePath {
    Paper,
    Fallback,
}

/// Disjoint parts with the requested sums, in the order of the targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeparationResult {
    pub m: usize,
    pub parts: Vec<Vec<usize>>,
    pub path: SolvePath,
}

/// Available pairs `{x, m+1-x}` for `x` in `1..=m/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSystem {
    m: usize,
    available: Vec<bool>,
}

impl PairSystem {
    /// All of `P_m`.
    pub fn full(m: usize) -> Result<PairSystem> {
        if m == 0 || m % 2 == 1 {
            return Err(AsdError::pre(
                "pair system",
                format!("m = {m} must be even and positive"),
            ));
        }
        Ok(PairSystem {
            m,
            available: vec![true; m / 2 + 1],
        }
        .without(0))
    }

    /// The pairs whose smaller element is listed.
    pub fn from_smaller(m: usize, xs: &[usize]) -> Result<PairSystem> {
        let mut s = PairSystem::full(m)?;
        s.available.iter_mut().for_each(|a| *a = false);
        for &x in xs {
            if x == 0 || x > m / 2 {
                return Err(AsdError::pre("pair system", format!("{x} is not in [m/2]")));
            }
            s.available[x] = true;
        }
        Ok(s)
    }

    fn without(mut self, x: usize) -> PairSystem {
        self.available[x] = false;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.available.iter().filter(|&&a| a).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn slot(&self, z: usize) -> usize {
        z.min(self.m + 1 - z)
    }

    /// Whether `z` lies in the union of the available pairs.
    pub fn covers(&self, z: usize) -> bool {
        (1..=self.m).contains(&z) && self.available[self.slot(z)]
    }

    fn take_pair_of(&mut self, z: usize) {
        let s = self.slot(z);
        debug_assert!(self.available[s]);
        self.available[s] = false;
    }

    /// Removes and returns the available pair with the smallest element.
    fn take_lowest(&mut self) -> Option<(usize, usize)> {
        let x = (1..self.available.len()).find(|&x| self.available[x])?;
        self.available[x] = false;
        Some((x, self.m + 1 - x))
    }

    /// Available pairs as `(x, m+1-x)`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (1..self.available.len())
            .filter(|&x| self.available[x])
            .map(|x| (x, self.m + 1 - x))
            .collect()
    }
}

/// `T(n)`: pairs `x < y` in `[m]` with `x + y ≡ n (mod m+1)` and
/// `x + y <= n`, ordered by `x`.
pub fn compute_t(n: usize, m: usize) -> Result<Vec<(usize, usize)>> {
    if m == 0 || m % 2 == 1 {
        return Err(AsdError::pre("compute_t", format!("m = {m} must be even and positive")));
    }
    if n == 0 {
        return Err(AsdError::pre("compute_t", "n must be positive"));
    }
    let q = m + 1;
    let mut out = Vec::new();
    for x in 1..=m {
        let y = (n % q + q - x % q) % q;
        if y > x && y <= m && x + y <= n {
            out.push((x, y));
        }
    }
    Ok(out)
}

/// Part `i` receives `lambdas[i]` whole pairs, lowest pairs first.
pub fn separate_divisible(lambdas: &[usize], pairs: &PairSystem) -> Result<Vec<Vec<usize>>> {
    let mut s = pairs.clone();
    divisible_into(lambdas, &mut s)
}

fn divisible_into(lambdas: &[usize], s: &mut PairSystem) -> Result<Vec<Vec<usize>>> {
    let need: usize = lambdas.iter().sum();
    if s.len() < need {
        return Err(AsdError::infeasible(
            "separate_divisible",
            format!("{need} pairs needed, {} available", s.len()),
        ));
    }
    Ok(lambdas
        .iter()
        .map(|&l| {
            let mut part = Vec::with_capacity(2 * l);
            for _ in 0..l {
                let (x, y) = s.take_lowest().expect("counted above");
                part.extend([x, y]);
            }
            part.sort_unstable();
            part
        })
        .collect())
}

/// Separates targets congruent in total to `0 mod (m+1)`.
///
/// Residues are fixed from the last target down: a pair `(x, y)` in
/// `T(a_k)` with both ends available becomes `b_k`, and the complements
/// `m+1-x`, `m+1-y` are charged to the previous target. The differences
/// `a_i - b_i` are then multiples of `m+1` and are filled with whole pairs.
/// Returns the residual sequence `b` and the parts.
pub fn separate_congruent(
    targets: &[usize],
    pairs: &PairSystem,
    cfg: &SeparatorConfig,
) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    let mut s = pairs.clone();
    congruent_into(targets, &mut s, cfg)
}

fn congruent_into(
    targets: &[usize],
    s: &mut PairSystem,
    cfg: &SeparatorConfig,
) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    const OP: &str = "separate_congruent";
    let m = s.m;
    let q = m + 1;
    let k = targets.len();
    if k == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let total: usize = targets.iter().sum();
    if !total.is_multiple_of(q) {
        return Err(AsdError::pre(OP, format!("sum {total} is not divisible by m+1 = {q}")));
    }
    let ell = total / q;
    for (i, &a) in targets.iter().enumerate() {
        let floor = if i + 1 < k { cfg.large_mult * q } else { q };
        if a < floor {
            return Err(AsdError::pre(OP, format!("a_{} = {a} < {floor}", i + 1)));
        }
    }
    if s.len() < ell {
        return Err(AsdError::pre(OP, format!("|S| = {} < l = {ell}", s.len())));
    }
    // A single target needs only its own pairs.
    if k > 1 && 4 * s.len() < m + 8 * k {
        return Err(AsdError::pre(
            OP,
            format!("|S| = {} < m/4 + 2k = {}", s.len(), m as f64 / 4.0 + 2.0 * k as f64),
        ));
    }

    let mut reduced = targets.to_vec();
    let mut b = vec![0usize; k];
    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); k];
    for j in (1..k).rev() {
        let n = reduced[j];
        let (x, y) = compute_t(n, m)?
            .into_iter()
            .find(|&(x, y)| s.covers(x) && s.covers(y))
            .ok_or_else(|| AsdError::infeasible(OP, format!("no available pair in T({n})")))?;
        b[j] += x + y;
        parts[j].extend([x, y]);
        s.take_pair_of(x);
        if x + y != q {
            s.take_pair_of(y);
            let charge = 2 * q - x - y;
            reduced[j - 1] -= charge;
            b[j - 1] += charge;
            parts[j - 1].extend([q - x, q - y]);
        }
    }
    let (x, y) = s
        .take_lowest()
        .ok_or_else(|| AsdError::infeasible(OP, "no pair left for the first target"))?;
    b[0] += q;
    parts[0].extend([x, y]);

    let lambdas: Vec<usize> = targets
        .iter()
        .zip(&b)
        .map(|(&a, &bi)| {
            debug_assert!(bi <= a && (a - bi) % q == 0);
            (a - bi) / q
        })
        .collect();
    for (part, extra) in parts.iter_mut().zip(divisible_into(&lambdas, s)?) {
        part.extend(extra);
        part.sort_unstable();
    }
    Ok((b, parts))
}

/// Pair-system recursion on sorted targets for even `m`, starting from the
/// full pair system. `parts` is indexed like `sorted`.
fn paper_even(m: usize, sorted: &[usize], parts: &mut [Vec<usize>], cfg: &SeparatorConfig) -> Result<()> {
    const OP: &str = "separate";
    let q = m + 1;
    let k = sorted.len();
    let mut s = PairSystem::full(m)?;
    // Current values and the original slot of each position.
    let mut seq: Vec<(usize, usize)> = sorted.iter().copied().zip(0..).collect();
    let mut i = 1;
    loop {
        let rest = &seq[i - 1..];
        let total: usize = rest.iter().map(|p| p.0).sum();
        if !total.is_multiple_of(q) {
            return Err(AsdError::infeasible(
                OP,
                format!("tail sum {total} not divisible by {q}"),
            ));
        }
        let ell = total / q;
        for (off, &(a, _)) in rest.iter().enumerate() {
            let j = i + off;
            let floor = (cfg.step * j).min(cfg.large_mult * q);
            if a < floor {
                return Err(AsdError::infeasible(
                    OP,
                    format!("a_{j} = {a} < min(16j, 3(m+1)) = {floor}"),
                ));
            }
        }
        if s.len() < ell {
            return Err(AsdError::infeasible(OP, format!("|S| = {} < l = {ell}", s.len())));
        }
        let (mi, ki, li) = (m as i64, k as i64, ell as i64);
        let ii = i as i64;
        if 2 * li < mi - 8 * ii + 2 || 4 * li < mi + 16 * (ki - ii) || ell < cfg.tail_mult * (k - i + 1) {
            return Err(AsdError::infeasible(
                OP,
                format!("l = {ell} violates the step bounds at i = {i}"),
            ));
        }
        if i == k {
            let (a, slot) = seq[k - 1];
            let extra = divisible_into(&[a / q], &mut s)?;
            parts[slot].extend(extra.into_iter().flatten());
            return Ok(());
        }
        if seq[i - 1].0 >= cfg.large_mult * q {
            let values: Vec<usize> = rest.iter().map(|p| p.0).collect();
            let (_, found) = congruent_into(&values, &mut s, cfg)?;
            for (&(_, slot), part) in rest.iter().zip(found) {
                parts[slot].extend(part);
            }
            return Ok(());
        }
        let (a, slot) = seq[i - 1];
        let (x, y) = compute_t(a, m)?
            .into_iter()
            .find(|&(x, y)| s.covers(x) && s.covers(y))
            .ok_or_else(|| AsdError::infeasible(OP, format!("no available pair in T({a})")))?;
        parts[slot].extend([x, y]);
        s.take_pair_of(x);
        if x + y != q {
            s.take_pair_of(y);
            let last = seq.len() - 1;
            seq[last].0 -= 2 * q - x - y;
            parts[seq[last].1].extend([q - x, q - y]);
        }
        let rem = a - x - y;
        let fill = divisible_into(&[rem / q], &mut s)?;
        parts[slot].extend(fill.into_iter().flatten());
        seq[i - 1].0 = 0;
        seq[i..].sort();
        i += 1;
    }
}

/// Reusable solver with working buffers for the exact search.
#[derive(Debug, Default)]
pub struct Separator {
    cfg: SeparatorConfig,
    exact: ExactSearch,
    order: Vec<usize>,
    sorted: Vec<usize>,
}

impl Separator {
    pub fn new(cfg: SeparatorConfig) -> Separator {
        Separator {
            cfg,
            ..Separator::default()
        }
    }

    pub fn config(&self) -> &SeparatorConfig {
        &self.cfg
    }

    /// Separates `[m]` into parts summing to `targets` (any order).
    pub fn separate(&mut self, m: usize, targets: &[usize]) -> Result<SeparationResult> {
        let mut assign = Vec::new();
        let path = self.separate_into(m, targets, &mut assign)?;
        let mut parts = vec![Vec::new(); targets.len()];
        for (x, &p) in assign.iter().enumerate() {
            parts[p as usize].push(x + 1);
        }
        Ok(SeparationResult { m, parts, path })
    }

    /// Like [`Separator::separate`], writing the target index of each number
    /// `x` to `assign[x-1]`.
    pub fn separate_into(&mut self, m: usize, targets: &[usize], assign: &mut Vec<u32>) -> Result<SolvePath> {
        const OP: &str = "separate";
        if targets.is_empty() || targets.contains(&0) {
            return Err(AsdError::pre(OP, "targets must be non-empty and positive"));
        }
        let total: usize = targets.iter().sum();
        if total != m * (m + 1) / 2 {
            return Err(AsdError::pre(
                OP,
                format!("targets sum to {total}, expected C(m+1,2) = {}", m * (m + 1) / 2),
            ));
        }
        self.order.clear();
        self.order.extend(0..targets.len());
        self.order.sort_by_key(|&i| (targets[i], i));
        self.sorted.clear();
        self.sorted.extend(self.order.iter().map(|&i| targets[i]));

        let entry_ok = self
            .sorted
            .iter()
            .enumerate()
            .all(|(i, &a)| a >= (self.cfg.entry_step * (i + 1)).min(self.cfg.entry_mult * (m + 1)));
        let mut paper_err = None;
        if entry_ok {
            match self.paper(m) {
                Ok(parts) => {
                    assign.clear();
                    assign.resize(m, u32::MAX);
                    for (pos, part) in parts.iter().enumerate() {
                        for &x in part {
                            assign[x - 1] = self.order[pos] as u32;
                        }
                    }
                    debug_assert!(assign.iter().all(|&a| a != u32::MAX));
                    return Ok(SolvePath::Paper);
                }
                Err(e) => paper_err = Some(e),
            }
        }
        if m > self.cfg.fallback_cap {
            return Err(paper_err.unwrap_or_else(|| AsdError::Unsupported {
                op: OP,
                detail: format!(
                    "m = {m} exceeds the exact-search cap {} and the entry bounds fail",
                    self.cfg.fallback_cap
                ),
            }));
        }
        let items: Vec<usize> = (1..=m).rev().collect();
        if !self.exact.solve(&items, &self.sorted, self.cfg.memo_after) {
            return Err(AsdError::infeasible(OP, format!("[{m}] does not separate the targets")));
        }
        assign.clear();
        assign.resize(m, 0);
        for (pos, &slot) in self.exact.placement.iter().enumerate() {
            assign[items[pos] - 1] = self.order[slot] as u32;
        }
        Ok(SolvePath::Fallback)
    }

    fn paper(&self, m: usize) -> Result<Vec<Vec<usize>>> {
        let k = self.sorted.len();
        let mut parts = vec![Vec::new(); k];
        let mut sorted = self.sorted.clone();
        let mut even_m = m;
        if m % 2 == 1 {
            // Odd m: the largest target takes m itself.
            sorted[k - 1] = sorted[k - 1]
                .checked_sub(m)
                .filter(|&a| a > 0)
                .ok_or_else(|| AsdError::infeasible("separate", "largest target too small for odd reduction"))?;
            parts[k - 1].push(m);
            even_m = m - 1;
        }
        // The reduction may break the ordering; keep slots aligned.
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by_key(|&i| (sorted[i], i));
        let resorted: Vec<usize> = idx.iter().map(|&i| sorted[i]).collect();
        let mut tmp = vec![Vec::new(); k];
        paper_even(even_m, &resorted, &mut tmp, &self.cfg)?;
        for (pos, part) in tmp.into_iter().enumerate() {
            parts[idx[pos]].extend(part);
        }
        for p in parts.iter_mut() {
            p.sort_unstable();
        }
        Ok(parts)
    }
}

/// Separates `[m]` with a fresh solver.
pub fn separate(m: usize, targets: &[usize], cfg: &SeparatorConfig) -> Result<SeparationResult> {
    Separator::new(cfg.clone()).separate(m, targets)
}

/// Exact partition of an arbitrary multiset of positive items into bins
/// with prescribed sums. Returns, for each item, the index of its bin.
pub fn separate_items(items: &[usize], targets: &[usize], memo_after: usize) -> Option<Vec<usize>> {
    if items.iter().sum::<usize>() != targets.iter().sum::<usize>() || items.contains(&0) {
        return None;
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(items[i]));
    let sorted_items: Vec<usize> = order.iter().map(|&i| items[i]).collect();
    let mut search = ExactSearch::default();
    if !search.solve(&sorted_items, targets, memo_after) {
        return None;
    }
    let mut out = vec![0; items.len()];
    for (pos, &bin) in search.placement.iter().enumerate() {
        out[order[pos]] = bin;
    }
    Some(out)
}

/// Depth-first search over items in decreasing order. Bins are tracked by
/// their remaining capacity only, so bins with equal remainders are never
/// branched on twice.
#[derive(Debug, Default)]
struct ExactSearch {
    items: Vec<usize>,
    count: Vec<u32>,
    present: Vec<u64>,
    choice: Vec<usize>,
    placement: Vec<usize>,
    nodes: usize,
    memo_after: usize,
    failed: HashSet<Vec<u32>>,
}

impl ExactSearch {
    fn solve(&mut self, items: &[usize], caps: &[usize], memo_after: usize) -> bool {
        let max_cap = caps.iter().copied().max().unwrap_or(0);
        if !Self::prefix_feasible(items, caps) {
            return false;
        }
        self.items.clear();
        self.items.extend_from_slice(items);
        self.count.clear();
        self.count.resize(max_cap + 1, 0);
        self.present.clear();
        self.present.resize(max_cap / 64 + 1, 0);
        for &c in caps {
            self.add(c);
        }
        self.choice.clear();
        self.choice.resize(items.len(), 0);
        self.nodes = 0;
        self.memo_after = memo_after;
        self.failed.clear();
        if !self.dfs(0) {
            return false;
        }
        // Replay the capacity choices onto concrete bins.
        let mut by_rem: Vec<Vec<usize>> = vec![Vec::new(); max_cap + 1];
        for (bin, &c) in caps.iter().enumerate().rev() {
            by_rem[c].push(bin);
        }
        self.placement.clear();
        for (pos, &x) in items.iter().enumerate() {
            let c = self.choice[pos];
            let bin = by_rem[c].pop().expect("replay follows the search");
            self.placement.push(bin);
            if c > x {
                by_rem[c - x].push(bin);
            }
        }
        true
    }

    /// Bins of capacity at most `v` can only use items at most `v`.
    fn prefix_feasible(items: &[usize], caps: &[usize]) -> bool {
        let mut caps_sorted = caps.to_vec();
        caps_sorted.sort_unstable();
        let mut items_sorted = items.to_vec();
        items_sorted.sort_unstable();
        let mut cap_sum = 0;
        let mut item_sum = 0;
        let mut it = 0;
        for (i, &c) in caps_sorted.iter().enumerate() {
            cap_sum += c;
            if i + 1 < caps_sorted.len() && caps_sorted[i + 1] == c {
                continue;
            }
            while it < items_sorted.len() && items_sorted[it] <= c {
                item_sum += items_sorted[it];
                it += 1;
            }
            if cap_sum > item_sum {
                return false;
            }
        }
        true
    }

    fn add(&mut self, c: usize) {
        if c == 0 {
            return;
        }
        if self.count[c] == 0 {
            self.present[c / 64] |= 1 << (c % 64);
        }
        self.count[c] += 1;
    }

    fn remove(&mut self, c: usize) {
        if c == 0 {
            return;
        }
        self.count[c] -= 1;
        if self.count[c] == 0 {
            self.present[c / 64] &= !(1 << (c % 64));
        }
    }

    /// Largest present capacity strictly below `bound`.
    fn prev_present(&self, bound: usize) -> Option<usize> {
        if bound == 0 {
            return None;
        }
        let mut w = (bound - 1) / 64;
        let mut mask = if (bound - 1) % 64 == 63 {
            u64::MAX
        } else {
            (1u64 << ((bound - 1) % 64 + 1)) - 1
        };
        loop {
            let bits = self.present[w] & mask;
            if bits != 0 {
                return Some(w * 64 + 63 - bits.leading_zeros() as usize);
            }
            if w == 0 {
                return None;
            }
            w -= 1;
            mask = u64::MAX;
        }
    }

    fn key(&self, pos: usize) -> Vec<u32> {
        let mut key = vec![pos as u32];
        let mut c = self.count.len();
        while let Some(v) = self.prev_present(c) {
            key.push(v as u32);
            key.push(self.count[v]);
            c = v;
        }
        key
    }

    fn dfs(&mut self, pos: usize) -> bool {
        if pos == self.items.len() {
            return true;
        }
        self.nodes += 1;
        let memo = self.nodes > self.memo_after;
        if memo && self.failed.contains(&self.key(pos)) {
            return false;
        }
        let x = self.items[pos];
        if x < self.count.len() && self.count[x] > 0 {
            self.choice[pos] = x;
            self.remove(x);
            if self.dfs(pos + 1) {
                return true;
            }
            self.add(x);
        }
        let mut bound = self.count.len();
        while let Some(c) = self.prev_present(bound) {
            bound = c;
            if c <= x {
                break;
            }
            self.choice[pos] = c;
            self.remove(c);
            self.add(c - x);
            if self.dfs(pos + 1) {
                return true;
            }
            self.remove(c - x);
            self.add(c);
        }
        if memo {
            let key = self.key(pos);
            self.failed.insert(key);
        }
        false
    }
}
