//! Causal invariance up to a generation depth.
//!
//! An event's generation is one more than the largest generation among the
//! creators of the tokens it consumes; initial tokens count as generation
//! zero. Every maximal update order that fires only events of generation at
//! most `depth` is enumerated, merging histories whose annotated states
//! (tokens, the events so far, which event created each live token) are
//! isomorphic. The system is invariant to that depth when all maximal orders
//! give isomorphic causal graphs.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::Serialize;

use super::build_causal_graph;
use crate::Verdict;
use crate::hypercore::{CanonicalKey, EdgeId, EventId, canonize};
use crate::rewrite::{Event, RewriteSystem, Site};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InvarianceLimits {
    pub depth: u32,
    /// Cap on distinct annotated states visited.
    pub max_histories: usize,
}

impl InvarianceLimits {
    pub fn depth(depth: u32) -> Self {
        Self { depth, max_histories: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderStep {
    pub event: EventId,
    pub rule: String,
    pub site: String,
    pub state: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub verdict: Verdict,
    pub depth: u32,
    pub distinct_causal_graphs: usize,
    pub histories_explored: usize,
    pub budget_exhausted: bool,
    /// Two update orders whose causal graphs are not isomorphic.
    pub witness: Option<[Vec<OrderStep>; 2]>,
}

struct Node<S> {
    state: S,
    events: Vec<Event>,
    generation: HashMap<EventId, u32>,
    path: Vec<OrderStep>,
}

fn site_generation<R: RewriteSystem>(
    system: &R,
    state: &R::State,
    site: &Site,
    generation: &HashMap<EventId, u32>,
) -> u32 {
    let creators: HashMap<EdgeId, Option<EventId>> = system.live_tokens(state).into_iter().collect();
    1 + site
        .consumed
        .iter()
        .filter_map(|t| creators.get(t).copied().flatten())
        .map(|c| generation[&c])
        .max()
        .unwrap_or(0)
}

fn annotated_key<R: RewriteSystem>(system: &R, initial: &[EdgeId], node: &Node<R::State>) -> CanonicalKey {
    let ts = system.token_structure(&node.state);
    let mut s = ts.structure;
    let mut ev_vertex: BTreeMap<EventId, usize> = BTreeMap::new();
    for ev in &node.events {
        ev_vertex.insert(ev.id, s.add_vertex(u64::MAX));
    }
    let g = build_causal_graph(initial, &node.events, false).expect("histories are built by firing live sites");
    for (a, b) in g.edges() {
        s.add_tuple(u64::MAX - 1, vec![ev_vertex[&a], ev_vertex[&b]]);
    }
    for (token, creator) in system.live_tokens(&node.state) {
        if let Some(c) = creator {
            s.add_tuple(u64::MAX - 2, vec![ev_vertex[&c], ts.token_vertex[&token]]);
        }
    }
    canonize(&s).key
}

pub fn causal_invariance<R: RewriteSystem>(
    system: &R,
    initial: &R::State,
    limits: InvarianceLimits,
) -> InvarianceReport {
    let initial_tokens: Vec<EdgeId> = system.live_tokens(initial).into_iter().map(|(t, _)| t).collect();
    let mut stack = vec![Node {
        state: initial.clone(),
        events: Vec::new(),
        generation: HashMap::new(),
        path: Vec::new(),
    }];
    let mut visited: HashSet<CanonicalKey> = HashSet::new();
    let mut terminals: BTreeMap<CanonicalKey, Vec<OrderStep>> = BTreeMap::new();
    let mut exhausted = false;
    while let Some(node) = stack.pop() {
        if !visited.insert(annotated_key(system, &initial_tokens, &node)) {
            continue;
        }
        if visited.len() > limits.max_histories {
            exhausted = true;
            break;
        }
        let allowed: Vec<(Site, u32)> = system
            .sites(&node.state)
            .into_iter()
            .map(|s| {
                let g = site_generation(system, &node.state, &s, &node.generation);
                (s, g)
            })
            .filter(|&(_, g)| g <= limits.depth)
            .collect();
        if allowed.is_empty() {
            let g = build_causal_graph(&initial_tokens, &node.events, false)
                .expect("histories are built by firing live sites");
            terminals.entry(g.canonical_key()).or_insert(node.path);
            continue;
        }
        for (site, gen_) in allowed.into_iter().rev() {
            let Ok((state, event)) = system.apply(&node.state, &site) else {
                continue;
            };
            let mut generation = node.generation.clone();
            generation.insert(event.id, gen_);
            let mut path = node.path.clone();
            path.push(OrderStep {
                event: event.id,
                rule: system.rule_text(site.rule_index),
                site: system.site_label(&node.state, &site),
                state: system.state_label(&state),
            });
            let mut events = node.events.clone();
            events.push(event);
            stack.push(Node { state, events, generation, path });
        }
    }
    let distinct = terminals.len();
    let verdict = if distinct >= 2 {
        Verdict::No
    } else if exhausted {
        Verdict::Unknown
    } else {
        Verdict::Yes
    };
    let witness = (distinct >= 2).then(|| {
        let mut it = terminals.into_values();
        [it.next().expect("two terminals"), it.next().expect("two terminals")]
    });
    InvarianceReport {
        verdict,
        depth: limits.depth,
        distinct_causal_graphs: distinct,
        histories_explored: visited.len(),
        budget_exhausted: exhausted,
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::build_causal_graph;
    use crate::rewrite::{StringRule, StringState, StringSystem, replay};

    fn sys(rules: &[(&str, &str)]) -> StringSystem {
        StringSystem::new(rules.iter().map(|&(l, r)| StringRule::new(l, r).unwrap()).collect())
    }

    #[test]
    fn doubling_is_invariant() {
        let r = causal_invariance(&sys(&[("A", "AA")]), &StringState::new("A"), InvarianceLimits::depth(3));
        assert_eq!(r.verdict, Verdict::Yes);
        assert_eq!(r.distinct_causal_graphs, 1);
    }

    #[test]
    fn sorting_is_invariant() {
        let r = causal_invariance(&sys(&[("BA", "AB")]), &StringState::new("BBAA"), InvarianceLimits::depth(4));
        assert_eq!(r.verdict, Verdict::Yes);
    }

    #[test]
    fn overlapping_choices_break_invariance() {
        let s = sys(&[("AB", "A"), ("BA", "B")]);
        let r = causal_invariance(&s, &StringState::new("ABA"), InvarianceLimits::depth(3));
        assert_eq!(r.verdict, Verdict::No);
        let [a, b] = r.witness.unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn witness_orders_replay_to_different_graphs() {
        let s = sys(&[("AA", "BA"), ("BBB", "A"), ("A", "AB")]);
        let init = StringState::new("AA");
        let r = causal_invariance(&s, &init, InvarianceLimits::depth(3));
        assert_eq!(r.verdict, Verdict::No);
        let [a, b] = r.witness.unwrap();
        let key = |path: &[OrderStep]| {
            let mut state = init.clone();
            let mut events = Vec::new();
            for step in path {
                let site = s
                    .sites(&state)
                    .into_iter()
                    .find(|site| s.rule_text(site.rule_index) == step.rule && s.site_label(&state, site) == step.site)
                    .unwrap();
                let (next, ev) = s.apply(&state, &site).unwrap();
                events.push(ev);
                state = next;
            }
            let (_, replayed) = replay(&s, &init, &events).unwrap();
            let tokens: Vec<EdgeId> = s.live_tokens(&init).into_iter().map(|(t, _)| t).collect();
            build_causal_graph(&tokens, &replayed, false).unwrap().canonical_key()
        };
        assert_ne!(key(&a), key(&b));
    }

    #[test]
    fn budget_exhaustion_is_unknown() {
        let limits = InvarianceLimits { depth: 4, max_histories: 3 };
        let r = causal_invariance(&sys(&[("A", "AA")]), &StringState::new("A"), limits);
        assert_eq!(r.verdict, Verdict::Unknown);
        assert!(r.budget_exhausted);
    }
}
