//! Rewriting systems, update schemes and evolution traces.

pub mod hypergraph;
pub mod string;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypercore::{CanonicalKey, EdgeId, EventId, HypergraphError, Structure};

pub use hypergraph::{HypergraphSystem, Match, Pattern, PatternVar, Rule, apply_event, find_matches};
pub use string::{
    StringMatch, StringRule, StringState, StringSystem, Token, decode_path, encode_rules,
    encode_string, string_matches,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("rule {rule_index} does not apply at the given site")]
    StaleSite { rule_index: usize },
    #[error("rule index {0} is out of range")]
    UnknownRule(usize),
    #[error("replayed event {event} consumes {token}, which is not live")]
    ReplayMismatch { event: EventId, token: EdgeId },
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

/// A place where a rule can fire: the rule and the consumed tokens in
/// pattern order. Tokens are hyperedges, or string characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub rule_index: usize,
    pub consumed: Vec<EdgeId>,
}

/// One application of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub rule_index: usize,
    pub consumed: Vec<EdgeId>,
    pub created: Vec<EdgeId>,
    pub step: u32,
}

/// Tokens of a state as a colored structure, for canonical keys that also
/// cover causal history.
#[derive(Debug, Clone)]
pub struct TokenStructure {
    pub structure: Structure,
    pub token_vertex: BTreeMap<EdgeId, usize>,
}

pub trait RewriteSystem {
    type State: Clone + fmt::Debug;

    fn rule_count(&self) -> usize;
    fn rule_text(&self, rule_index: usize) -> String;

    /// Every site of the state, in a deterministic canonical order.
    fn sites(&self, state: &Self::State) -> Vec<Site>;

    /// Fires a site. Fresh ids come from the counters carried by the state.
    fn apply(&self, state: &Self::State, site: &Site) -> Result<(Self::State, Event), RewriteError>;

    /// Live tokens with the event that created each.
    fn live_tokens(&self, state: &Self::State) -> Vec<(EdgeId, Option<EventId>)>;

    /// Canonical key and representative of the state's isomorphism class.
    fn canonical(&self, state: &Self::State) -> (CanonicalKey, Self::State);

    fn state_key(&self, state: &Self::State) -> CanonicalKey {
        self.canonical(state).0
    }

    /// Human-readable description of a site, stable across equal states.
    fn site_label(&self, state: &Self::State, site: &Site) -> String;

    fn state_label(&self, state: &Self::State) -> String;

    fn token_structure(&self, state: &Self::State) -> TokenStructure;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateScheme {
    /// Fire the first site in canonical order.
    Sequential,
    /// Fire a uniformly chosen site, from a seeded generator.
    Random,
    /// Fire a maximal set of non-overlapping sites, chosen greedily in
    /// canonical order.
    Parallel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionTrace<S> {
    pub scheme: UpdateScheme,
    pub seed: u64,
    pub initial: S,
    pub events: Vec<Event>,
    pub final_state: S,
    pub steps_requested: u32,
    /// Step at which no site was left, if evolution stopped early.
    pub halted_at: Option<u32>,
}

pub fn evolve<R: RewriteSystem>(
    system: &R,
    initial: &R::State,
    scheme: UpdateScheme,
    steps: u32,
    seed: u64,
) -> Result<EvolutionTrace<R::State>, RewriteError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = initial.clone();
    let mut events = Vec::new();
    let mut halted_at = None;
    for step in 0..steps {
        let sites = system.sites(&state);
        if sites.is_empty() {
            halted_at = Some(step);
            break;
        }
        let chosen: Vec<Site> = match scheme {
            UpdateScheme::Sequential => vec![sites[0].clone()],
            UpdateScheme::Random => vec![sites[rng.random_range(0..sites.len())].clone()],
            UpdateScheme::Parallel => {
                let mut used = BTreeSet::new();
                sites
                    .into_iter()
                    .filter(|s| {
                        let free = s.consumed.iter().all(|t| !used.contains(t));
                        if free {
                            used.extend(s.consumed.iter().copied());
                        }
                        free
                    })
                    .collect()
            }
        };
        for site in &chosen {
            let (next, mut event) = system.apply(&state, site)?;
            event.step = step;
            events.push(event);
            state = next;
        }
    }
    Ok(EvolutionTrace {
        scheme,
        seed,
        initial: initial.clone(),
        events,
        final_state: state,
        steps_requested: steps,
        halted_at,
    })
}

/// Re-fires `events` in the given order from `initial`. Token ids minted
/// during replay may differ from the recorded ones; the returned events use
/// the replayed ids and the recorded event ids.
pub fn replay<R: RewriteSystem>(
    system: &R,
    initial: &R::State,
    events: &[Event],
) -> Result<(R::State, Vec<Event>), RewriteError> {
    let mut state = initial.clone();
    let mut rename: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
    let mut out = Vec::with_capacity(events.len());
    for ev in events {
        let live: BTreeSet<EdgeId> = system.live_tokens(&state).into_iter().map(|(t, _)| t).collect();
        let consumed: Vec<EdgeId> = ev.consumed.iter().map(|t| *rename.get(t).unwrap_or(t)).collect();
        if let Some((&orig, _)) = ev.consumed.iter().zip(&consumed).find(|(_, t)| !live.contains(t)) {
            return Err(RewriteError::ReplayMismatch { event: ev.id, token: orig });
        }
        let site = Site { rule_index: ev.rule_index, consumed };
        let (next, fired) = system.apply(&state, &site)?;
        rename.extend(ev.created.iter().copied().zip(fired.created.iter().copied()));
        out.push(Event { id: ev.id, step: ev.step, ..fired });
        state = next;
    }
    Ok((state, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(rules: &[(&str, &str)]) -> StringSystem {
        StringSystem::new(rules.iter().map(|&(l, r)| StringRule::new(l, r).unwrap()).collect())
    }

    #[test]
    fn sequential_fires_first_site() {
        let s = sys(&[("AB", "BA")]);
        let t = evolve(&s, &StringState::new("ABAB"), UpdateScheme::Sequential, 10, 0).unwrap();
        assert_eq!(t.final_state.as_string(), "BBAA");
        assert_eq!(t.events.len(), 3);
        assert_eq!(t.halted_at, Some(3));
    }

    #[test]
    fn parallel_fires_disjoint_sites() {
        let s = sys(&[("AB", "BA")]);
        let t = evolve(&s, &StringState::new("ABABAB"), UpdateScheme::Parallel, 1, 0).unwrap();
        assert_eq!(t.events.len(), 3);
        assert_eq!(t.final_state.as_string(), "BABABA");
        assert!(t.events.iter().all(|e| e.step == 0));
    }

    #[test]
    fn random_is_seeded() {
        let s = sys(&[("A", "AB"), ("B", "A")]);
        let a = evolve(&s, &StringState::new("A"), UpdateScheme::Random, 12, 7).unwrap();
        let b = evolve(&s, &StringState::new("A"), UpdateScheme::Random, 12, 7).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.final_state, b.final_state);
    }

    #[test]
    fn replay_reproduces_final_state() {
        let s = sys(&[("BB", "A"), ("AAB", "BAAB")]);
        let t = evolve(&s, &StringState::new("ABAAB"), UpdateScheme::Random, 8, 3).unwrap();
        let (state, events) = replay(&s, &t.initial, &t.events).unwrap();
        assert_eq!(state, t.final_state);
        assert_eq!(events, t.events);
    }

    #[test]
    fn replay_rejects_dead_tokens() {
        let s = sys(&[("A", "B")]);
        let t = evolve(&s, &StringState::new("A"), UpdateScheme::Sequential, 1, 0).unwrap();
        let doubled = vec![t.events[0].clone(), t.events[0].clone()];
        assert!(matches!(
            replay(&s, &t.initial, &doubled),
            Err(RewriteError::ReplayMismatch { .. })
        ));
    }
}
