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

//! Maximum bipartite matching (Hopcroft–Karp).

use std::collections::VecDeque;

/// Maximum matching between `left` vertices `0..nl` and right vertices
/// `0..nr`, where `adj[i]` lists the right neighbors of left vertex `i`.
/// Returns the partner of each left vertex.
pub fn bipartite_matching(nl: usize, nr: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    const INF: usize = usize::MAX;
    let mut mate_l: Vec<Option<usize>> = vec![None; nl];
    let mut mate_r: Vec<Option<usize>> = vec![None; nr];
    let mut dist = vec![INF; nl];
    loop {
        // Layer the graph from free left vertices.
        let mut queue = VecDeque::new();
        for i in 0..nl {
            if mate_l[i].is_none() {
                dist[i] = 0;
                queue.push_back(i);
            } else {
                dist[i] = INF;
            }
        }
        let mut reachable_free = false;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                match mate_r[j] {
                    None => reachable_free = true,
                    Some(k) if dist[k] == INF => {
                        dist[k] = dist[i] + 1;
                        queue.push_back(k);
                    }
                    _ => {}
                }
            }
        }
        if !reachable_free {
            break;
        }
        let mut progressed = false;
        for i in 0..nl {
            if mate_l[i].is_none() && augment(i, adj, &mut mate_l, &mut mate_r, &mut dist) {
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    mate_l
}

fn augment(
    i: usize,
    adj: &[Vec<usize>],
    mate_l: &mut [Option<usize>],
    mate_r: &mut [Option<usize>],
    dist: &mut [usize],
) -> bool {
    for &j in &adj[i] {
        let ok = match mate_r[j] {
            None => true,
            Some(k) => dist[k] == dist[i].wrapping_add(1) && augment(k, adj, mate_l, mate_r, dist),
        };
        if ok {
            mate_l[i] = Some(j);
            mate_r[j] = Some(i);
            return true;
        }
    }
    dist[i] = usize::MAX;
    false
}
