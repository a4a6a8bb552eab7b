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

//! Command-line front end for the `asd` binary.
//!
//! Machine output is JSON on standard output (or the `--out` file); the
//! human-readable summary goes to standard error. Exit codes: 0 success,
//! 1 verification failed, 2 verification undecided, 3 usage, parse or
//! infeasibility errors.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::coloring::{konig_color, vizing_color};
use crate::config::{EngineConfig, Profile};
use crate::decomposition::Decomposition;
use crate::engine::asd_traced;
use crate::error::{AsdError, Result};
use crate::generate::{generate, Family, GeneratorSpec};
use crate::graph::{binom2, parse_graph, Graph};
use crate::separator::{separate, SeparatorConfig};
use crate::verifier::{verify_decomposition, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "asd", version, about = "Ascending subgraph decompositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decompose a graph given as an edge list (`-` for standard input).
    Decompose(DecomposeArgs),
    /// Split 1..=m into parts with the given sums.
    Separate {
        m: usize,
        /// Comma-separated target sums.
        targets: String,
    },
    /// Check a decomposition against its graph.
    Verify { graph: PathBuf, decomposition: PathBuf },
    /// Print a generated graph as an edge list.
    Generate {
        /// gnm:N:M, star-forest:A,B,.., cycle:N, matching:N, complete:N or
        /// complete-bipartite:A:B.
        family: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark suite: coloring, asd-desk or separator-oracle.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    input: PathBuf,
    #[arg(long, default_value = "desk")]
    profile: Profile,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Verify the result and report through the exit code.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    fallback_m: Option<usize>,
    #[arg(long)]
    retry_budget: Option<u32>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    suite: String,
    /// Number of seeds for the randomized suites.
    #[arg(long, default_value_t = 8)]
    seeds: u64,
    /// Largest m enumerated by the separator-oracle suite.
    #[arg(long, default_value_t = 10)]
    max_m: usize,
    /// Include wall-clock timings (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let _ = write!(err, "{e}");
            return EXIT_ERROR;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Decompose(args) => decompose(args, out, err),
        Command::Separate { m, targets } => {
            let targets = targets
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| AsdError::pre("separate", format!("bad target list: {e}")))?;
            let res = separate(m, &targets, &SeparatorConfig::default())?;
            writeln!(out, "{}", serde_json::to_string(&res)?)?;
            writeln!(err, "separated [{m}] into {} parts", res.parts.len())?;
            Ok(EXIT_OK)
        }
        Command::Verify { graph, decomposition } => {
            let g = parse_graph(&read_input(&graph)?)?;
            let d = Decomposition::from_json(&read_input(&decomposition)?, g.n())?;
            let report = verify_decomposition(&g, &d);
            writeln!(out, "{}", serde_json::to_string(&report)?)?;
            let verdict = report.verdict();
            writeln!(
                err,
                "{verdict:?}: {} failures, {} undecided pairs",
                report.failures.len(),
                report.undecided.len()
            )?;
            Ok(verdict_code(verdict))
        }
        Command::Generate {
            family,
            seed,
            out: path,
        } => {
            let family: Family = family.parse()?;
            let g = generate(&GeneratorSpec { family, seed })?;
            emit(&g.to_edge_list(), path.as_deref(), out)?;
            writeln!(err, "{} vertices, {} edges", g.n(), g.edge_count())?;
            Ok(EXIT_OK)
        }
        Command::Bench(args) => bench(args, out, err),
    }
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Ok => EXIT_OK,
        Verdict::Failed => EXIT_FAILED,
        Verdict::Undecided => EXIT_UNDECIDED,
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(fs::read_to_string(path)?)
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn decompose(args: DecomposeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let g = parse_graph(&read_input(&args.input)?)?;
    let mut cfg = EngineConfig::for_profile(args.profile);
    cfg.seed = args.seed;
    if let Some(f) = args.fallback_m {
        cfg.fallback_m = f;
    }
    if let Some(r) = args.retry_budget {
        cfg.retry_budget = r;
    }
    let (res, trace) = asd_traced(&g, &cfg);
    let d = res?;
    emit(&format!("{}\n", d.to_json()), args.out.as_deref(), out)?;
    writeln!(
        err,
        "{} edges into {} parts {:?} via {:?}",
        g.edge_count(),
        d.parts.len(),
        d.sizes(),
        trace.route
    )?;
    if !args.verify {
        return Ok(EXIT_OK);
    }
    let report = verify_decomposition(&g, &d);
    writeln!(err, "verification: {:?}", report.verdict())?;
    Ok(verdict_code(report.verdict()))
}

#[derive(Serialize)]
struct BenchReport {
    suite: String,
    cases: Vec<Value>,
    summary: Value,
}

fn bench(args: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let report = match args.suite.as_str() {
        "coloring" => bench_coloring(&args)?,
        "asd-desk" => bench_asd(&args)?,
        "separator-oracle" => bench_separator(&args)?,
        other => {
            return Err(AsdError::pre(
                "bench",
                format!("unknown suite {other:?}; expected coloring, asd-desk or separator-oracle"),
            ));
        }
    };
    writeln!(out, "{}", serde_json::to_string(&report)?)?;
    writeln!(err, "{}: {}", report.suite, report.summary)?;
    Ok(EXIT_OK)
}

fn timed<T>(timing: bool, f: impl FnOnce() -> T) -> (T, Option<u128>) {
    let start = Instant::now();
    let v = f();
    (v, timing.then(|| start.elapsed().as_micros()))
}

fn is_matching_partition(g: &Graph, classes: &[Graph]) -> bool {
    let mut all: Vec<_> = classes.iter().flat_map(|c| c.edges().iter().copied()).collect();
    all.sort_unstable();
    classes.iter().all(Graph::is_matching) && all == g.edges()
}

fn bench_coloring(args: &BenchArgs) -> Result<BenchReport> {
    let mut cases = Vec::new();
    let mut ok_count = 0;
    for seed in 0..args.seeds {
        let n = 40 + (seed as usize * 37) % 160;
        let g = generate(&GeneratorSpec {
            family: Family::RandomGnm { n, m: 2 * n },
            seed,
        })?;
        let (classes, vizing_us) = timed(args.timing, || vizing_color(&g));
        let half = n / 2;
        let bip = g.with_edges(g.edges().iter().copied().filter(|e| (e.u < half) != (e.v < half)));
        let left: Vec<usize> = (0..half).collect();
        let right: Vec<usize> = (half..n).collect();
        let (kclasses, konig_us) = timed(args.timing, || konig_color(&bip, &left, &right));
        let kclasses = kclasses?;
        let ok = classes.len() <= g.max_degree() + 1
            && is_matching_partition(&g, &classes)
            && kclasses.len() == bip.max_degree()
            && is_matching_partition(&bip, &kclasses);
        ok_count += usize::from(ok);
        let mut case = json!({
            "seed": seed,
            "n": n,
            "edges": g.edge_count(),
            "max_degree": g.max_degree(),
            "vizing_classes": classes.len(),
            "bipartite_max_degree": bip.max_degree(),
            "konig_classes": kclasses.len(),
            "ok": ok,
        });
        if let (Some(v), Some(k)) = (vizing_us, konig_us) {
            case["vizing_us"] = json!(v);
            case["konig_us"] = json!(k);
        }
        cases.push(case);
    }
    Ok(BenchReport {
        suite: args.suite.clone(),
        summary: json!({ "cases": cases.len(), "ok": ok_count }),
        cases,
    })
}

/// Instance for seed `seed` of the asd-desk suite: small random graphs
/// (exact search), long cycles, forests of large stars, and larger random
/// graphs, in rotation.
fn asd_instance(seed: u64) -> Result<(&'static str, usize, Graph)> {
    let i = (seed / 4) as usize;
    let (name, m, family) = match seed % 4 {
        0 => {
            let m = 3 + i % 6;
            (
                "gnm-small",
                m,
                Family::RandomGnm {
                    n: 2 * m + i % m,
                    m: binom2(m + 1),
                },
            )
        }
        1 => {
            let m = 9 + i % 32;
            ("cycle", m, Family::Cycle(binom2(m + 1)))
        }
        2 => {
            let m = 9 + i % 32;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rest = binom2(m + 1);
            let mut sizes = Vec::new();
            while rest >= 2 * (m + 1) {
                let s = rng.gen_range(m + 1..=rest - (m + 1));
                sizes.push(s);
                rest -= s;
            }
            sizes.push(rest);
            ("star-forest", m, Family::StarForest(sizes))
        }
        _ => {
            let m = 9 + i % 8;
            (
                "gnm",
                m,
                Family::RandomGnm {
                    n: 3 * m,
                    m: binom2(m + 1),
                },
            )
        }
    };
    Ok((name, m, generate(&GeneratorSpec { family, seed })?))
}

fn bench_asd(args: &BenchArgs) -> Result<BenchReport> {
    let mut cases = Vec::new();
    let mut by_family: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for seed in 0..args.seeds {
        let (family, m, g) = asd_instance(seed)?;
        let cfg = EngineConfig {
            seed,
            ..EngineConfig::desk()
        };
        let ((res, trace), us) = timed(args.timing, || asd_traced(&g, &cfg));
        let ok = res.as_ref().is_ok_and(|d| verify_decomposition(&g, d).ok);
        let tally = by_family.entry(family).or_default();
        tally.0 += 1;
        tally.1 += usize::from(ok);
        let mut case = json!({
            "seed": seed,
            "family": family,
            "m": m,
            "n": g.n(),
            "ok": ok,
            "error": res.as_ref().err().map(|e| e.to_string()),
            "route": trace.route,
            "rungs": trace.rungs.len(),
            "fallback_nodes": trace.fallback_nodes,
            "peeled": trace.peeled,
            "core_edges": trace.core_edges,
            "r": trace.r,
        });
        if let Some(us) = us {
            case["asd_us"] = json!(us);
        }
        cases.push(case);
    }
    let successes: usize = by_family.values().map(|t| t.1).sum();
    let rate = if cases.is_empty() {
        0.0
    } else {
        successes as f64 / cases.len() as f64
    };
    let families: BTreeMap<&str, Value> = by_family
        .into_iter()
        .map(|(k, (n, ok))| (k, json!({ "cases": n, "ok": ok })))
        .collect();
    Ok(BenchReport {
        suite: args.suite.clone(),
        summary: json!({ "cases": cases.len(), "ok": successes, "success_rate": rate, "families": families }),
        cases,
    })
}

/// Multisets of block sums over all set partitions of `1..=m`, built one
/// element at a time.
fn realized_sums(m: usize) -> HashSet<Vec<usize>> {
    let mut level: HashSet<Vec<usize>> = HashSet::from([Vec::new()]);
    for x in 1..=m {
        let mut next = HashSet::with_capacity(level.len() * 2);
        for sums in &level {
            for b in 0..=sums.len() {
                let mut s = sums.clone();
                if b == s.len() {
                    s.push(x);
                } else {
                    s[b] += x;
                }
                s.sort_unstable();
                next.insert(s);
            }
        }
        level = next;
    }
    level
}

/// Calls `f` on every partition of `n` into at most `k` parts, each in
/// non-decreasing order.
fn for_each_partition(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(rest: usize, min: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if rest == 0 {
            f(cur);
            return;
        }
        if k == 0 {
            return;
        }
        for x in min..=rest {
            let r = rest - x;
            if r != 0 && (r < x || k == 1) {
                continue;
            }
            cur.push(x);
            rec(rest - x, x, k - 1, cur, f);
            cur.pop();
        }
    }
    rec(n, 1, k, &mut Vec::new(), f);
}

fn bench_separator(args: &BenchArgs) -> Result<BenchReport> {
    let cfg = SeparatorConfig::default();
    let mut cases = Vec::new();
    let (mut total_checked, mut total_agree) = (0u64, 0u64);
    for m in 1..=args.max_m.min(14) {
        let (row, us) = timed(args.timing, || {
            let oracle = realized_sums(m);
            let (mut checked, mut agree) = (0u64, 0u64);
            for_each_partition(binom2(m + 1), m, &mut |targets| {
                checked += 1;
                let ok = separate(m, targets, &cfg)
                    .is_ok_and(|r| r.parts.iter().zip(targets).all(|(p, &t)| p.iter().sum::<usize>() == t));
                agree += u64::from(ok == oracle.contains(targets));
            });
            (checked, agree, oracle.len())
        });
        let (checked, agree, realized) = row;
        total_checked += checked;
        total_agree += agree;
        let mut case = json!({ "m": m, "multisets": checked, "separable": realized, "agree": agree });
        if let Some(us) = us {
            case["us"] = json!(us);
        }
        cases.push(case);
    }
    Ok(BenchReport {
        suite: args.suite.clone(),
        summary: json!({ "multisets": total_checked, "agree": total_agree }),
        cases,
    })
}
