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

//! Deterministic graph generators.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AsdError, Result};
use crate::graph::{Edge, Graph};

/// Graph family to generate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    RandomGnm { n: usize, m: usize },
    StarForest(Vec<usize>),
    Cycle(usize),
    Matching(usize),
    Complete(usize),
    CompleteBipartite(usize, usize),
}

/// A family together with the seed for its random choices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub seed: u64,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::RandomGnm { n, m } => write!(f, "gnm:{n}:{m}"),
            Family::StarForest(sizes) => {
                let s: Vec<String> = sizes.iter().map(usize::to_string).collect();
                write!(f, "star-forest:{}", s.join(","))
            }
            Family::Cycle(n) => write!(f, "cycle:{n}"),
            Family::Matching(n) => write!(f, "matching:{n}"),
            Family::Complete(n) => write!(f, "complete:{n}"),
            Family::CompleteBipartite(a, b) => write!(f, "complete-bipartite:{a}:{b}"),
        }
    }
}

impl FromStr for Family {
    type Err = AsdError;

    /// Parses `gnm:N:M`, `star-forest:A,B,..`, `cycle:N`, `matching:N`,
    /// `complete:N` or `complete-bipartite:A:B`.
    fn from_str(s: &str) -> Result<Family> {
        let bad = || AsdError::pre("generate", format!("unrecognized family {s:?}"));
        let mut fields = s.split(':');
        let name = fields.next().ok_or_else(bad)?;
        let args: Vec<&str> = fields.collect();
        let num = |i: usize| -> Result<usize> { args.get(i).and_then(|a| a.trim().parse().ok()).ok_or_else(bad) };
        let family = match (name, args.len()) {
            ("gnm" | "random-gnm", 2) => Family::RandomGnm { n: num(0)?, m: num(1)? },
            ("star-forest", 1) => Family::StarForest(
                args[0]
                    .split(',')
                    .map(|x| x.trim().parse().map_err(|_| bad()))
                    .collect::<Result<Vec<usize>>>()?,
            ),
            ("cycle", 1) => Family::Cycle(num(0)?),
            ("matching", 1) => Family::Matching(num(0)?),
            ("complete", 1) => Family::Complete(num(0)?),
            ("complete-bipartite", 2) => Family::CompleteBipartite(num(0)?, num(1)?),
            _ => return Err(bad()),
        };
        Ok(family)
    }
}

/// Generates the graph described by `spec`. Only `random-gnm` consumes the
/// seed; the result is a pure function of the spec.
pub fn generate(spec: &GeneratorSpec) -> Result<Graph> {
    let infeasible = |d: String| AsdError::infeasible("generate", d);
    match &spec.family {
        Family::RandomGnm { n, m } => {
            let total = n * n.saturating_sub(1) / 2;
            if *m > total {
                return Err(infeasible(format!("{m} edges exceed C({n},2) = {total}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut picked: Vec<usize> = sample(&mut rng, total, *m).into_vec();
            picked.sort_unstable();
            Ok(Graph::from_edges(*n, picked.into_iter().map(|idx| pair_at(*n, idx))))
        }
        Family::StarForest(sizes) => {
            if sizes.contains(&0) {
                return Err(infeasible("star sizes must be positive".into()));
            }
            let n: usize = sizes.iter().map(|s| s + 1).sum();
            let mut edges = Vec::new();
            let mut next = 0;
            for &s in sizes {
                let center = next;
                for leaf in 1..=s {
                    edges.push(Edge::new(center, center + leaf));
                }
                next += s + 1;
            }
            Ok(Graph::from_edges(n, edges))
        }
        Family::Cycle(n) => {
            if *n < 3 {
                return Err(infeasible(format!("cycle needs at least 3 vertices, got {n}")));
            }
            Ok(Graph::from_edges(*n, (0..*n).map(|i| Edge::new(i, (i + 1) % n))))
        }
        Family::Matching(k) => Ok(Graph::from_edges(2 * k, (0..*k).map(|i| Edge::new(2 * i, 2 * i + 1)))),
        Family::Complete(n) => Ok(Graph::from_edges(
            *n,
            (0..*n).flat_map(|i| ((i + 1)..*n).map(move |j| Edge::new(i, j))),
        )),
        Family::CompleteBipartite(a, b) => Ok(Graph::from_edges(
            a + b,
            (0..*a).flat_map(|i| (0..*b).map(move |j| Edge::new(i, a + j))),
        )),
    }
}

/// The `idx`-th pair of `C(n,2)` in lexicographic order.
fn pair_at(n: usize, mut idx: usize) -> Edge {
    let mut u = 0;
    while idx >= n - 1 - u {
        idx -= n - 1 - u;
        u += 1;
    }
    Edge::new(u, u + 1 + idx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::{census, Shape};

    fn run(family: Family, seed: u64) -> Graph {
        generate(&GeneratorSpec { family, seed }).unwrap()
    }

    #[test]
    fn families() {
        let m = run(Family::Matching(3), 0);
        assert_eq!(census(&m).count(&Shape::Star(1)), 3);
        let c = run(Family::Cycle(5), 0);
        assert_eq!(census(&c).count(&Shape::Cycle(5)), 1);
        assert_eq!(run(Family::Complete(5), 0).edge_count(), 10);
        assert_eq!(run(Family::CompleteBipartite(2, 3), 0).edge_count(), 6);
        assert_eq!(run(Family::StarForest(vec![3, 1]), 0).edge_count(), 4);
    }

    #[test]
    fn gnm_is_deterministic() {
        let f = Family::RandomGnm { n: 10, m: 20 };
        let a = run(f.clone(), 1);
        assert_eq!(a, run(f.clone(), 1));
        assert_eq!(a.edge_count(), 20);
        assert_ne!(a, run(f, 2));
        assert!(generate(&GeneratorSpec {
            family: Family::RandomGnm { n: 4, m: 7 },
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn pair_indexing_covers_all_pairs() {
        let n = 7;
        let all: Vec<Edge> = (0..21).map(|i| pair_at(n, i)).collect();
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 21);
        assert_eq!(all, sorted);
    }

    #[test]
    fn family_strings_round_trip() {
        for s in [
            "gnm:10:20",
            "star-forest:3,4",
            "cycle:5",
            "matching:2",
            "complete:4",
            "complete-bipartite:2:3",
        ] {
            let f: Family = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("wheel:5".parse::<Family>().is_err());
    }
}
