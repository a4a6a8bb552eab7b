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

//! Ascending decompositions, embedding witnesses and their JSON form.

use serde::{Deserialize, Serialize};

use crate::error::{AsdError, Result};
use crate::graph::{asd_shape, Edge, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessKind {
    /// The next part is the image.
    Iso,
    /// The next part is the image plus `extra_edge`.
    Ext,
}

/// Injective vertex map from the non-isolated vertices of one part into the
/// next part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub kind: WitnessKind,
    pub map: Vec<(usize, usize)>,
    pub extra_edge: Option<Edge>,
}

impl Witness {
    /// Builds a witness from a vertex map, naming the extra edge of `to` if
    /// it has one more edge than `from`.
    pub fn from_map(from: &Graph, to: &Graph, mut map: Vec<(usize, usize)>) -> Witness {
        map.sort_unstable();
        map.dedup();
        if to.edge_count() == from.edge_count() {
            return Witness {
                kind: WitnessKind::Iso,
                map,
                extra_edge: None,
            };
        }
        let image = image_edges(from, &map);
        let extra = to.edges().iter().find(|e| !image.contains(e)).copied();
        Witness {
            kind: WitnessKind::Ext,
            map,
            extra_edge: extra,
        }
    }

    /// Applies the witness to a vertex, if mapped.
    pub fn apply(&self, x: usize) -> Option<usize> {
        self.map.binary_search_by_key(&x, |p| p.0).ok().map(|i| self.map[i].1)
    }
}

/// Images of the edges of `g` under `map`, sorted. Edges with an unmapped
/// endpoint are skipped.
pub fn image_edges(g: &Graph, map: &[(usize, usize)]) -> Vec<Edge> {
    let mut sorted = map.to_vec();
    sorted.sort_unstable();
    let look = |x: usize| sorted.binary_search_by_key(&x, |p| p.0).ok().map(|i| sorted[i].1);
    let mut out: Vec<Edge> = g
        .edges()
        .iter()
        .filter_map(|e| match (look(e.u), look(e.v)) {
            (Some(a), Some(b)) if a != b => Some(Edge::new(a, b)),
            _ => None,
        })
        .collect();
    out.sort_unstable();
    out
}

/// Ordered parts `H_1, ..., H_m` with a witness per consecutive pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub m: usize,
    pub t: usize,
    pub parts: Vec<Graph>,
    pub witnesses: Vec<Witness>,
}

impl Decomposition {
    pub fn sizes(&self) -> Vec<usize> {
        self.parts.iter().map(Graph::edge_count).collect()
    }

    pub fn to_json(&self) -> String {
        let doc = DecompositionDoc {
            m: self.m,
            t: self.t,
            parts: self
                .parts
                .iter()
                .map(|p| p.edges().iter().map(|e| [e.u, e.v]).collect())
                .collect(),
            witnesses: self
                .witnesses
                .iter()
                .map(|w| WitnessDoc {
                    kind: w.kind,
                    map: w.map.iter().map(|&(a, b)| [a, b]).collect(),
                    extra_edge: w.extra_edge.map(|e| [e.u, e.v]),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("plain data serializes")
    }

    /// Parses the JSON form; parts live on `n` vertices.
    pub fn from_json(text: &str, n: usize) -> Result<Decomposition> {
        let doc: DecompositionDoc = serde_json::from_str(text)?;
        let edge = |[a, b]: [usize; 2]| -> Result<Edge> {
            if a == b || a >= n || b >= n {
                return Err(AsdError::InvalidGraph(format!("bad edge [{a},{b}] for n={n}")));
            }
            Ok(Edge::new(a, b))
        };
        let mut parts = Vec::new();
        for p in doc.parts {
            let edges = p.into_iter().map(edge).collect::<Result<Vec<_>>>()?;
            let count = edges.len();
            let g = Graph::from_edges(n, edges);
            if g.edge_count() != count {
                return Err(AsdError::InvalidGraph("repeated edge inside a part".into()));
            }
            parts.push(g);
        }
        let witnesses = doc
            .witnesses
            .into_iter()
            .map(|w| {
                Ok(Witness {
                    kind: w.kind,
                    map: w.map.into_iter().map(|[a, b]| (a, b)).collect(),
                    extra_edge: w.extra_edge.map(edge).transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Decomposition {
            m: doc.m,
            t: doc.t,
            parts,
            witnesses,
        })
    }

    /// Empty decomposition of an edgeless graph.
    pub fn empty() -> Decomposition {
        Decomposition {
            m: 0,
            t: 0,
            parts: Vec::new(),
            witnesses: Vec::new(),
        }
    }

    /// Assembles a decomposition, taking `m` and `t` from the edge total.
    pub fn from_parts(parts: Vec<Graph>, witnesses: Vec<Witness>) -> Decomposition {
        let e = parts.iter().map(Graph::edge_count).sum();
        let (m, t) = asd_shape(e);
        Decomposition { m, t, parts, witnesses }
    }
}

#[derive(Serialize, Deserialize)]
struct DecompositionDoc {
    m: usize,
    t: usize,
    parts: Vec<Vec<[usize; 2]>>,
    #[serde(default)]
    witnesses: Vec<WitnessDoc>,
}

#[derive(Serialize, Deserialize)]
struct WitnessDoc {
    kind: WitnessKind,
    map: Vec<[usize; 2]>,
    extra_edge: Option<[usize; 2]>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let a = Graph::new(3, [(0, 1)]).unwrap();
        let b = Graph::new(3, [(0, 2), (1, 2)]).unwrap();
        let w = Witness::from_map(&a, &b, vec![(0, 2), (1, 0)]);
        assert_eq!(w.kind, WitnessKind::Ext);
        assert_eq!(w.extra_edge, Some(Edge::new(1, 2)));
        let d = Decomposition::from_parts(vec![a, b], vec![w]);
        let text = d.to_json();
        assert_eq!(
            text,
            r#"{"m":2,"t":2,"parts":[[[0,1]],[[0,2],[1,2]]],"witnesses":[{"kind":"ext","map":[[0,2],[1,0]],"extra_edge":[1,2]}]}"#
        );
        assert_eq!(Decomposition::from_json(&text, 3).unwrap(), d);
        assert!(Decomposition::from_json(&text, 2).is_err());
    }
}
