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

//! Construction and verification of ascending subgraph decompositions.
//!
//! A graph with `e` edges, `C(m,2) < e <= C(m+1,2)`, is split into parts
//! `H_1, ..., H_m` of sizes `e_1 <= ... <= e_m` (consecutive sizes differ
//! by at most one) such that each part is isomorphic to a subgraph of the
//! next. Every decomposition produced here carries an explicit vertex map
//! per consecutive pair, so results can be checked in linear time.

pub mod ascending;
pub mod assembler;
pub mod census;
pub mod cli;
pub mod coloring;
pub mod config;
pub mod decomposition;
pub mod engine;
pub mod error;
pub mod generate;
pub mod graph;
pub mod ktt;
pub mod matching;
pub mod separator;
pub mod star_forest;
pub mod verifier;

pub use decomposition::{Decomposition, Witness, WitnessKind};
pub use error::{AsdError, Result, Stage};
pub use graph::{parse_graph, Edge, Graph};
