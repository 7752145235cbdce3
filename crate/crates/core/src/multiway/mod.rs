//! Multiway systems: every state reachable under every site, merged by
//! canonical form.

pub mod confluence;

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::hypercore::CanonicalKey;
use crate::rewrite::{RewriteError, RewriteSystem};

pub use confluence::{ConfluenceReport, ConfluenceVariant, Divergence, check_confluence, default_join_budget};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MultiwayError {
    #[error("state {0} is not in the multiway graph")]
    UnknownState(String),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

#[derive(Debug, Clone)]
pub struct MultiwayState<S> {
    pub key: CanonicalKey,
    pub state: S,
    pub label: String,
    /// Length of the shortest path from the initial state.
    pub depth: u32,
    /// Whether every successor of the state has been recorded.
    pub expanded: bool,
}

/// One rewrite between two states, described independently of rule order
/// and token ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rule: String,
    pub site: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreLimits {
    pub max_depth: u32,
    pub max_states: Option<usize>,
}

impl ExploreLimits {
    pub fn depth(max_depth: u32) -> Self {
        Self { max_depth, max_states: None }
    }
}

#[derive(Debug, Clone)]
pub struct MultiwayGraph<S> {
    states: Vec<MultiwayState<S>>,
    index: HashMap<CanonicalKey, usize>,
    transitions: Vec<Transition>,
    succ: Vec<Vec<usize>>,
    horizon: u32,
    truncated: bool,
}

/// Breadth-first exploration up to `limits.max_depth` generations. When the
/// state budget runs out the graph is marked truncated and states whose
/// successors were dropped stay unexpanded.
pub fn explore<R: RewriteSystem>(
    system: &R,
    initial: &R::State,
    limits: ExploreLimits,
) -> Result<MultiwayGraph<R::State>, MultiwayError> {
    let (key, rep) = system.canonical(initial);
    let mut g = MultiwayGraph {
        states: Vec::new(),
        index: HashMap::new(),
        transitions: Vec::new(),
        succ: Vec::new(),
        horizon: limits.max_depth,
        truncated: false,
    };
    g.push_state(system, key, rep, 0);
    let mut frontier = vec![0usize];
    for depth in 0..=limits.max_depth {
        let mut next = Vec::new();
        for &i in &frontier {
            let sites = system.sites(&g.states[i].state);
            if depth == limits.max_depth {
                g.states[i].expanded = sites.is_empty();
                continue;
            }
            let mut complete = true;
            for site in &sites {
                let (after, _) = system.apply(&g.states[i].state, site)?;
                let (k, rep) = system.canonical(&after);
                let j = match g.index.get(&k) {
                    Some(&j) => j,
                    None if limits.max_states.is_some_and(|m| g.states.len() >= m) => {
                        g.truncated = true;
                        complete = false;
                        continue;
                    }
                    None => {
                        let j = g.push_state(system, k, rep, depth + 1);
                        next.push(j);
                        j
                    }
                };
                let site_label = system.site_label(&g.states[i].state, site);
                g.transitions.push(Transition {
                    from: i,
                    to: j,
                    rule: system.rule_text(site.rule_index),
                    site: site_label,
                });
                if !g.succ[i].contains(&j) {
                    g.succ[i].push(j);
                }
            }
            g.states[i].expanded = complete;
        }
        frontier = next;
    }
    for s in &mut g.succ {
        s.sort_unstable();
    }
    Ok(g)
}

impl<S> MultiwayGraph<S> {
    fn push_state<R: RewriteSystem<State = S>>(&mut self, system: &R, key: CanonicalKey, state: S, depth: u32) -> usize {
        let i = self.states.len();
        let label = system.state_label(&state);
        self.index.insert(key.clone(), i);
        self.states.push(MultiwayState { key, state, label, depth, expanded: false });
        self.succ.push(Vec::new());
        i
    }

    pub fn states(&self) -> &[MultiwayState<S>] {
        &self.states
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, key: &CanonicalKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Distinct successor indices of state `i`.
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// True when every reachable state was found with all its successors.
    pub fn is_complete(&self) -> bool {
        !self.truncated && self.states.iter().all(|s| s.expanded)
    }

    /// Expanded states without successors.
    pub fn normal_forms(&self) -> Vec<usize> {
        (0..self.states.len()).filter(|&i| self.states[i].expanded && self.succ[i].is_empty()).collect()
    }

    fn lookup(&self, key: &CanonicalKey) -> Result<usize, MultiwayError> {
        self.index_of(key).ok_or_else(|| MultiwayError::UnknownState(key.short()))
    }

    fn distances_from(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.states.len()];
        dist[src] = 0;
        let mut q = VecDeque::from([src]);
        while let Some(u) = q.pop_front() {
            for &w in &self.succ[u] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        dist
    }

    /// Whether `y` can be reached from `x` in zero or more recorded steps.
    pub fn reachable(&self, x: &CanonicalKey, y: &CanonicalKey) -> Result<bool, MultiwayError> {
        let (i, j) = (self.lookup(x)?, self.lookup(y)?);
        Ok(self.distances_from(i)[j] != u32::MAX)
    }

    /// A common descendant of `x` and `y` minimizing the summed distance,
    /// ties broken by key.
    pub fn joinable(&self, x: &CanonicalKey, y: &CanonicalKey) -> Result<Option<CanonicalKey>, MultiwayError> {
        let (i, j) = (self.lookup(x)?, self.lookup(y)?);
        let (dx, dy) = (self.distances_from(i), self.distances_from(j));
        Ok((0..self.states.len())
            .filter(|&z| dx[z] != u32::MAX && dy[z] != u32::MAX)
            .min_by(|&a, &b| (dx[a] + dy[a], &self.states[a].key).cmp(&(dx[b] + dy[b], &self.states[b].key)))
            .map(|z| self.states[z].key.clone()))
    }

    /// Reflexive reachability sets as bitsets.
    pub(crate) fn reach_sets(&self) -> Vec<BitSet> {
        (0..self.states.len())
            .map(|i| {
                let mut b = BitSet::new(self.states.len());
                for (j, d) in self.distances_from(i).into_iter().enumerate() {
                    if d != u32::MAX {
                        b.insert(j);
                    }
                }
                b
            })
            .collect()
    }

    /// Transitions as order-independent tuples `(from key, to key, rule, site)`.
    pub fn transition_keys(&self) -> Vec<(CanonicalKey, CanonicalKey, String, String)> {
        let mut out: Vec<_> = self
            .transitions
            .iter()
            .map(|t| (self.states[t.from].key.clone(), self.states[t.to].key.clone(), t.rule.clone(), t.site.clone()))
            .collect();
        out.sort();
        out
    }

    pub fn to_dot(&self) -> String {
        let mut order: Vec<usize> = (0..self.states.len()).collect();
        order.sort_by(|&a, &b| self.states[a].key.cmp(&self.states[b].key));
        let mut out = String::from("digraph multiway {\n");
        for &i in &order {
            let s = &self.states[i];
            let _ = writeln!(out, "  \"{}\" [label=\"{}\"];", s.key.short(), escape(&s.label));
        }
        let mut edges: Vec<(String, String, String)> = self
            .transitions
            .iter()
            .map(|t| {
                (self.states[t.from].key.short(), self.states[t.to].key.short(), format!("{} {}", t.rule, t.site))
            })
            .collect();
        edges.sort();
        for (a, b, l) in edges {
            let _ = writeln!(out, "  \"{a}\" -> \"{b}\" [label=\"{}\"];", escape(&l));
        }
        out.push_str("}\n");
        out
    }

    pub fn summary(&self) -> MultiwaySummary {
        let mut order: Vec<usize> = (0..self.states.len()).collect();
        order.sort_by(|&a, &b| self.states[a].key.cmp(&self.states[b].key));
        MultiwaySummary {
            horizon: self.horizon,
            truncated: self.truncated,
            complete: self.is_complete(),
            states: order
                .iter()
                .map(|&i| StateSummary {
                    id: self.states[i].key.short(),
                    label: self.states[i].label.clone(),
                    depth: self.states[i].depth,
                    expanded: self.states[i].expanded,
                })
                .collect(),
            transitions: self
                .transition_keys()
                .into_iter()
                .map(|(a, b, rule, site)| TransitionSummary { from: a.short(), to: b.short(), rule, site })
                .collect(),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Debug, Clone, Serialize)]
pub struct StateSummary {
    pub id: String,
    pub label: String,
    pub depth: u32,
    pub expanded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionSummary {
    pub from: String,
    pub to: String,
    pub rule: String,
    pub site: String,
}

/// Serializable view with states ordered by key.
#[derive(Debug, Clone, Serialize)]
pub struct MultiwaySummary {
    pub horizon: u32,
    pub truncated: bool,
    pub complete: bool,
    pub states: Vec<StateSummary>,
    pub transitions: Vec<TransitionSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    pub(crate) fn new(n: usize) -> Self {
        Self { words: vec![0; n.div_ceil(64)] }
    }

    pub(crate) fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub(crate) fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub(crate) fn intersects(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub(crate) fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| w * 64 + b)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{StringRule, StringState, StringSystem};

    fn sys(rules: &[(&str, &str)]) -> StringSystem {
        StringSystem::new(rules.iter().map(|&(l, r)| StringRule::new(l, r).unwrap()).collect())
    }

    fn key(s: &StringSystem, text: &str) -> CanonicalKey {
        s.state_key(&StringState::new(text))
    }

    #[test]
    fn sorting_system_is_complete() {
        let s = sys(&[("BA", "AB")]);
        let g = explore(&s, &StringState::new("BBA"), ExploreLimits::depth(10)).unwrap();
        assert!(g.is_complete());
        let labels: Vec<&str> = g.states().iter().map(|st| st.label.as_str()).collect();
        assert_eq!(labels, vec!["BBA", "BAB", "ABB"]);
        assert_eq!(g.normal_forms().len(), 1);
    }

    #[test]
    fn horizon_leaves_frontier_unexpanded() {
        let s = sys(&[("A", "AB")]);
        let g = explore(&s, &StringState::new("A"), ExploreLimits::depth(3)).unwrap();
        assert_eq!(g.len(), 4);
        assert!(!g.is_complete());
        assert!(!g.states()[3].expanded);
    }

    #[test]
    fn budget_truncates() {
        let s = sys(&[("A", "AA")]);
        let limits = ExploreLimits { max_depth: 10, max_states: Some(3) };
        let g = explore(&s, &StringState::new("A"), limits).unwrap();
        assert!(g.truncated());
        assert_eq!(g.len(), 3);
    }

    #[test]
    fn reachability_and_joins() {
        let s = sys(&[("A", "B"), ("A", "C")]);
        let g = explore(&s, &StringState::new("AA"), ExploreLimits::depth(5)).unwrap();
        assert!(g.reachable(&key(&s, "AA"), &key(&s, "BC")).unwrap());
        assert!(!g.reachable(&key(&s, "BA"), &key(&s, "CA")).unwrap());
        assert_eq!(g.joinable(&key(&s, "BA"), &key(&s, "AB")).unwrap(), Some(key(&s, "BB")));
        assert_eq!(g.joinable(&key(&s, "BB"), &key(&s, "CC")).unwrap(), None);
        assert!(matches!(g.reachable(&key(&s, "Z"), &key(&s, "AA")), Err(MultiwayError::UnknownState(_))));
    }

    #[test]
    fn rule_order_does_not_change_graph() {
        let a = sys(&[("AB", "BA"), ("A", "BB")]);
        let b = sys(&[("A", "BB"), ("AB", "BA")]);
        let ga = explore(&a, &StringState::new("AAB"), ExploreLimits::depth(4)).unwrap();
        let gb = explore(&b, &StringState::new("AAB"), ExploreLimits::depth(4)).unwrap();
        assert_eq!(ga.transition_keys(), gb.transition_keys());
        assert_eq!(ga.to_dot(), gb.to_dot());
    }

    #[test]
    fn bitset_ops() {
        let mut a = BitSet::new(130);
        let mut b = BitSet::new(130);
        a.insert(129);
        a.insert(3);
        b.insert(129);
        assert!(a.intersects(&b));
        assert!(b.is_subset(&a));
        assert!(!a.is_subset(&b));
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![3, 129]);
    }
}
