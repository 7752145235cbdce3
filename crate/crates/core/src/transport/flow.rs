//! Successive shortest augmenting paths on a transportation problem with
//! integer costs.

use std::collections::VecDeque;
use std::ops::{Add, Sub};

pub(crate) trait Amount: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> {
    fn zero() -> Self;
    fn is_positive(self) -> bool;
    fn min(self, other: Self) -> Self {
        if other < self { other } else { self }
    }
}

impl Amount for i128 {
    fn zero() -> Self {
        0
    }

    fn is_positive(self) -> bool {
        self > 0
    }
}

impl Amount for f64 {
    fn zero() -> Self {
        0.0
    }

    fn is_positive(self) -> bool {
        self > 1e-12
    }
}

/// Minimum-cost flow from `supply` to `demand` (equal totals) where every
/// source may ship to every sink at `cost[i][j]`. Returns the flow matrix.
pub(crate) fn min_cost_transport<T: Amount>(supply: &[T], demand: &[T], cost: &[Vec<u32>]) -> Vec<Vec<T>> {
    let (m, n) = (supply.len(), demand.len());
    let mut flow = vec![vec![T::zero(); n]; m];
    let mut left: Vec<T> = supply.to_vec();
    let mut need: Vec<T> = demand.to_vec();
    // Nodes 0..m are sources, m..m+n sinks.
    loop {
        let mut dist = vec![i64::MAX; m + n];
        let mut parent = vec![usize::MAX; m + n];
        let mut queued = vec![false; m + n];
        let mut queue = VecDeque::new();
        for i in (0..m).filter(|&i| left[i].is_positive()) {
            dist[i] = 0;
            queue.push_back(i);
            queued[i] = true;
        }
        if queue.is_empty() {
            break;
        }
        while let Some(u) = queue.pop_front() {
            queued[u] = false;
            let relax = |v: usize, d: i64, dist: &mut Vec<i64>, parent: &mut Vec<usize>| -> bool {
                if d < dist[v] {
                    dist[v] = d;
                    parent[v] = u;
                    true
                } else {
                    false
                }
            };
            if u < m {
                for j in 0..n {
                    if relax(m + j, dist[u] + cost[u][j] as i64, &mut dist, &mut parent) && !queued[m + j] {
                        queued[m + j] = true;
                        queue.push_back(m + j);
                    }
                }
            } else {
                let j = u - m;
                for i in 0..m {
                    if flow[i][j].is_positive()
                        && relax(i, dist[u] - cost[i][j] as i64, &mut dist, &mut parent)
                        && !queued[i]
                    {
                        queued[i] = true;
                        queue.push_back(i);
                    }
                }
            }
        }
        let Some(sink) = (0..n)
            .filter(|&j| need[j].is_positive() && dist[m + j] != i64::MAX)
            .min_by_key(|&j| (dist[m + j], j))
        else {
            break;
        };
        let mut path = vec![m + sink];
        let mut at = m + sink;
        while parent[at] != usize::MAX {
            at = parent[at];
            path.push(at);
        }
        path.reverse();
        let source = path[0];
        let mut amount = left[source].min(need[sink]);
        for w in path.windows(2) {
            if w[0] >= m {
                amount = amount.min(flow[w[1]][w[0] - m]);
            }
        }
        for w in path.windows(2) {
            if w[0] < m {
                flow[w[0]][w[1] - m] = flow[w[0]][w[1] - m] + amount;
            } else {
                flow[w[1]][w[0] - m] = flow[w[1]][w[0] - m] - amount;
            }
        }
        left[source] = left[source] - amount;
        need[sink] = need[sink] - amount;
    }
    flow
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(flow: &[Vec<i128>], cost: &[Vec<u32>]) -> i128 {
        flow.iter().zip(cost).flat_map(|(f, c)| f.iter().zip(c).map(|(&a, &b)| a * b as i128)).sum()
    }

    #[test]
    fn crossing_is_uncrossed() {
        let cost = vec![vec![1, 3], vec![3, 1]];
        let f = min_cost_transport(&[1i128, 1], &[1, 1], &cost);
        assert_eq!(f, vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn rerouting_through_backward_arcs() {
        // Greedy would ship source 0 to sink 0 and pay 10 for the rest.
        let cost = vec![vec![1, 2], vec![1, 10]];
        let f = min_cost_transport(&[1i128, 1], &[1, 1], &cost);
        assert_eq!(total(&f, &cost), 3);
    }

    #[test]
    fn float_matches_integer() {
        let cost = vec![vec![0, 2, 5], vec![2, 0, 3], vec![5, 3, 0]];
        let fi = min_cost_transport(&[3i128, 1, 2], &[1, 4, 1], &cost);
        let ff = min_cost_transport(&[0.5f64, 1.0 / 6.0, 1.0 / 3.0], &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], &cost);
        let ci = total(&fi, &cost) as f64 / 6.0;
        let cf: f64 = ff.iter().zip(&cost).flat_map(|(f, c)| f.iter().zip(c).map(|(&a, &b)| a * b as f64)).sum();
        assert!((ci - cf).abs() < 1e-12);
    }
}
