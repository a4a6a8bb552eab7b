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

//! Engine configuration and the two constant profiles.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::AsdError;
use crate::separator::SeparatorConfig;

/// Constant profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Literal asymptotic constants.
    Paper,
    /// Small constants that keep every structural contract.
    Desk,
}

impl FromStr for Profile {
    type Err = AsdError;

    fn from_str(s: &str) -> Result<Profile, AsdError> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(AsdError::Parse {
                line: 0,
                message: format!("unknown profile `{other}` (expected paper or desk)"),
            }),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        })
    }
}

/// All tunable constants of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineConfig {
    pub profile: Profile,
    /// Peeling threshold factor and linear degree bound.
    pub c: f64,
    pub eps: f64,
    /// Fraction of `m` handled by the final matching decomposition.
    pub delta: f64,
    /// Divisibility used by the stronger isomorphic decomposition.
    pub r: usize,
    /// Size of the `K_{t',t'}` blocks is `t = t'^2`.
    pub t: f64,
    /// Star-size cap.
    pub s: f64,
    pub fallback_m: usize,
    pub core_threshold: usize,
    pub retry_budget: u32,
    pub seed: u64,
    /// Node budget of the exact fallback search.
    pub fallback_budget: u64,
    /// Graphs with fewer than `factor * n^2 / sqrt(t)` edges skip the
    /// block decomposition.
    pub ktt_remainder_factor: f64,
    /// Lower edge bound `floor * m^2` of the stronger decomposition.
    pub edge_floor: f64,
    /// Reject matching/forest combinations below the concentration bound.
    pub check_feasibility: bool,
    #[serde(skip)]
    pub separator: SeparatorConfig,
}

impl EngineConfig {
    pub fn paper() -> EngineConfig {
        let c = 1e6;
        let eps = 0.01;
        EngineConfig {
            profile: Profile::Paper,
            c,
            eps,
            delta: 1e-13,
            r: 40,
            t: (eps.powi(-12) * c.powi(6)).ceil().powi(2),
            s: (5.0 / eps * c).ceil(),
            fallback_m: 8,
            core_threshold: 6,
            retry_budget: 64,
            seed: 0,
            fallback_budget: 2_000_000,
            ktt_remainder_factor: 4.0,
            edge_floor: 0.2,
            check_feasibility: true,
            separator: SeparatorConfig::default(),
        }
    }

    pub fn desk() -> EngineConfig {
        EngineConfig {
            profile: Profile::Desk,
            c: 3.0,
            eps: 0.1,
            delta: 0.25,
            r: 40,
            t: 4.0,
            s: 8.0,
            fallback_m: 8,
            core_threshold: 6,
            retry_budget: 64,
            seed: 0,
            fallback_budget: 2_000_000,
            ktt_remainder_factor: 0.0,
            edge_floor: 0.2,
            check_feasibility: true,
            separator: SeparatorConfig::default(),
        }
    }

    pub fn for_profile(profile: Profile) -> EngineConfig {
        match profile {
            Profile::Paper => EngineConfig::paper(),
            Profile::Desk => EngineConfig::desk(),
        }
    }

    /// Side length `t'` of the `K_{t',t'}` blocks.
    pub fn block_side(&self) -> usize {
        (self.t.sqrt().round() as usize).max(1)
    }

    pub fn is_paper(&self) -> bool {
        self.profile == Profile::Paper
    }
}

impl Default for EngineConfig {
    fn default() -> EngineConfig {
        EngineConfig::desk()
    }
}
