//! Confluence checks on an explored multiway graph.
//!
//! Divergences are drawn from states at depth at most `horizon - join_budget`
//! (from every state when the graph is complete) and joins are searched in
//! the whole explored graph. A negative verdict is only given when the
//! relevant part of the graph is fully expanded.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{BitSet, MultiwayGraph};
use crate::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfluenceVariant {
    /// One-step divergences rejoin.
    Local,
    /// A one-step and a many-step divergence rejoin.
    Semi,
    /// One-step divergences rejoin with at most one step on one side.
    Strong,
    /// Distinct one-step divergences rejoin in exactly one step each.
    Diamond,
    /// Arbitrary divergences rejoin.
    Global,
}

impl ConfluenceVariant {
    pub const ALL: [ConfluenceVariant; 5] = [
        ConfluenceVariant::Local,
        ConfluenceVariant::Semi,
        ConfluenceVariant::Strong,
        ConfluenceVariant::Diamond,
        ConfluenceVariant::Global,
    ];
}

impl std::str::FromStr for ConfluenceVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "local" => Ok(Self::Local),
            "semi" => Ok(Self::Semi),
            "strong" => Ok(Self::Strong),
            "diamond" => Ok(Self::Diamond),
            "global" => Ok(Self::Global),
            other => Err(format!("unknown confluence variant {other:?}")),
        }
    }
}

/// States `a -> b` and `a -> c` (or `->*`) that were not rejoined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub source: String,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfluenceReport {
    pub variant: ConfluenceVariant,
    pub verdict: Verdict,
    pub witness: Option<Divergence>,
    pub join_budget: u32,
    /// Deepest source state considered; `None` when the whole graph was used.
    pub window_depth: Option<u32>,
    pub divergences_checked: usize,
}

enum Outcome {
    Joined,
    Open,
    Failed,
}

/// Two thirds of the horizon, rounded up, so a join may take twice as many
/// steps as the divergence it closes.
pub fn default_join_budget(horizon: u32) -> u32 {
    (2 * horizon).div_ceil(3)
}

pub fn check_confluence<S>(g: &MultiwayGraph<S>, variant: ConfluenceVariant, join_budget: u32) -> ConfluenceReport {
    let n = g.len();
    let complete = g.is_complete();
    let window_depth = (!complete).then(|| g.horizon().checked_sub(join_budget));
    let in_window = |i: usize| match window_depth {
        None => true,
        Some(None) => false,
        Some(Some(d)) => g.states[i].depth <= d,
    };
    let reach = g.reach_sets();
    let mut expanded = BitSet::new(n);
    for i in (0..n).filter(|&i| g.states[i].expanded) {
        expanded.insert(i);
    }
    let closed: Vec<bool> = reach.iter().map(|r| r.is_subset(&expanded)).collect();
    let succ_sets: Vec<BitSet> = (0..n)
        .map(|i| {
            let mut b = BitSet::new(n);
            for &j in g.successors(i) {
                b.insert(j);
            }
            b
        })
        .collect();

    let judge = |b: usize, c: usize| -> Outcome {
        match variant {
            ConfluenceVariant::Local | ConfluenceVariant::Semi | ConfluenceVariant::Global => {
                if reach[b].intersects(&reach[c]) {
                    Outcome::Joined
                } else if closed[b] && closed[c] {
                    Outcome::Failed
                } else {
                    Outcome::Open
                }
            }
            ConfluenceVariant::Strong => {
                let one_way = |x: usize, y: usize| reach[x].contains(y) || reach[x].intersects(&succ_sets[y]);
                if one_way(b, c) && one_way(c, b) {
                    Outcome::Joined
                } else if closed[b] && closed[c] {
                    Outcome::Failed
                } else {
                    Outcome::Open
                }
            }
            ConfluenceVariant::Diamond => {
                if succ_sets[b].intersects(&succ_sets[c]) {
                    Outcome::Joined
                } else if g.states[b].expanded && g.states[c].expanded {
                    Outcome::Failed
                } else {
                    Outcome::Open
                }
            }
        }
    };

    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut open = false;
    let mut checked = 0;
    let sources: Vec<usize> = (0..n).filter(|&a| in_window(a) && g.states[a].expanded).collect();
    for &a in &sources {
        let succ = g.successors(a);
        let pairs: Vec<(usize, usize)> = match variant {
            ConfluenceVariant::Local | ConfluenceVariant::Strong | ConfluenceVariant::Diamond => succ
                .iter()
                .enumerate()
                .flat_map(|(k, &b)| succ[k + 1..].iter().map(move |&c| (b, c)))
                .collect(),
            ConfluenceVariant::Semi => succ
                .iter()
                .flat_map(|&b| reach[a].iter().filter(|&c| in_window(c)).map(move |c| (b, c)))
                .collect(),
            ConfluenceVariant::Global => {
                let rs: Vec<usize> = reach[a].iter().filter(|&c| in_window(c)).collect();
                rs.iter().enumerate().flat_map(|(k, &b)| rs[k..].iter().map(move |&c| (b, c))).collect()
            }
        };
        for (b, c) in pairs {
            if b == c || !seen.insert((b.min(c), b.max(c))) {
                continue;
            }
            checked += 1;
            match judge(b, c) {
                Outcome::Joined => {}
                Outcome::Open => open = true,
                Outcome::Failed => {
                    return ConfluenceReport {
                        variant,
                        verdict: Verdict::No,
                        witness: Some(Divergence {
                            source: g.states[a].label.clone(),
                            left: g.states[b].label.clone(),
                            right: g.states[c].label.clone(),
                        }),
                        join_budget,
                        window_depth: window_depth.flatten(),
                        divergences_checked: checked,
                    };
                }
            }
        }
    }
    let verdict = if open || (window_depth == Some(None)) || (!complete && sources.is_empty()) {
        Verdict::Unknown
    } else {
        Verdict::Yes
    };
    ConfluenceReport {
        variant,
        verdict,
        witness: None,
        join_budget,
        window_depth: window_depth.flatten(),
        divergences_checked: checked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiway::{ExploreLimits, explore};
    use crate::rewrite::{StringRule, StringState, StringSystem};

    fn verdicts(rules: &[(&str, &str)], init: &str, depth: u32, budget: u32) -> Vec<Verdict> {
        let s = StringSystem::new(rules.iter().map(|&(l, r)| StringRule::new(l, r).unwrap()).collect());
        let g = explore(&s, &StringState::new(init), ExploreLimits::depth(depth)).unwrap();
        ConfluenceVariant::ALL.iter().map(|&v| check_confluence(&g, v, budget).verdict).collect()
    }

    #[test]
    fn budget_is_two_thirds_of_the_horizon() {
        assert_eq!(default_join_budget(6), 4);
        assert_eq!(default_join_budget(5), 4);
        assert_eq!(default_join_budget(0), 0);
    }

    #[test]
    fn terminating_confluent_system() {
        let v = verdicts(&[("A", "B"), ("BB", "B")], "AABA", 12, 2);
        assert!(v.iter().all(|&x| x == Verdict::Yes), "{v:?}");
    }

    #[test]
    fn two_normal_forms_refute_everything_but_diamond_on_leaves() {
        let s = StringSystem::new(vec![StringRule::new("A", "B").unwrap(), StringRule::new("A", "C").unwrap()]);
        let g = explore(&s, &StringState::new("A"), ExploreLimits::depth(5)).unwrap();
        let r = check_confluence(&g, ConfluenceVariant::Local, 1);
        assert_eq!(r.verdict, Verdict::No);
        let w = r.witness.unwrap();
        assert_eq!((w.source.as_str(), w.left.as_str(), w.right.as_str()), ("A", "B", "C"));
        assert_eq!(check_confluence(&g, ConfluenceVariant::Global, 1).verdict, Verdict::No);
    }

    #[test]
    fn growing_confluent_system_is_yes_or_unknown() {
        let v = verdicts(&[("A", "AB")], "AA", 5, 3);
        assert!(v.iter().all(|&x| x == Verdict::Yes), "{v:?}");
    }

    #[test]
    fn strong_but_not_diamond() {
        // From "AB": both sites reach "C", one in two steps.
        let v = verdicts(&[("AB", "C"), ("A", "D"), ("DB", "C")], "AB", 5, 1);
        assert_eq!(v[2], Verdict::Yes);
        assert_eq!(v[3], Verdict::No);
        assert_eq!(v[0], Verdict::Yes);
    }

    #[test]
    fn window_too_small_is_unknown() {
        let v = verdicts(&[("A", "AB")], "AA", 1, 2);
        assert!(v.iter().all(|&x| x == Verdict::Unknown), "{v:?}");
    }
}
