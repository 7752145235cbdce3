//! Causal graphs of evolutions: light cones, achronal sets, Cauchy
//! developments and foliations.

pub mod invariance;
pub mod lorentz;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypercore::{CanonicalKey, EdgeId, EventId, Structure, canonize};
use crate::rewrite::{Event, EvolutionTrace, RewriteSystem};

pub use invariance::{InvarianceLimits, InvarianceReport, OrderStep, causal_invariance};
pub use lorentz::{
    Boost, BoostedCoord, BoostedCoordinates, Interval, Refoliation, boost, classify_interval, minkowski_norm,
    parse_velocity, refoliate,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CausalError {
    #[error("event {event} consumes {token}, which is not live")]
    DeadToken { event: EventId, token: EdgeId },
    #[error("event {event} creates {token}, which already exists")]
    DuplicateToken { event: EventId, token: EdgeId },
    #[error("event id {0} appears twice")]
    DuplicateEvent(EventId),
    #[error("event {0} is not in the causal graph")]
    UnknownEvent(EventId),
    #[error("the edges contain a cycle through {0}")]
    Cycle(EventId),
    #[error("invalid foliation: {0}")]
    InvalidFoliation(String),
    #[error("velocity {0} is outside [0, 1)")]
    VelocityOutOfRange(String),
    #[error("cannot parse velocity {0:?}")]
    BadVelocity(String),
    #[error("boost direction must be a nonzero vector of dimension {expected}")]
    BadDirection { expected: usize },
    #[error("boosted slicing puts {from} after its consequence {to}")]
    NonCausalSlicing { from: EventId, to: EventId },
}

/// Events as vertices; `a -> b` when `b` consumes a token created by `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    events: Vec<EventId>,
    index: HashMap<EventId, usize>,
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

/// Builds the causal graph of `events` fired in order from a state whose live
/// tokens are `initial`. Fails on a trace that consumes a dead token.
pub fn build_causal_graph(
    initial: &[EdgeId],
    events: &[Event],
    transitive_reduction: bool,
) -> Result<CausalGraph, CausalError> {
    let mut live: HashMap<EdgeId, Option<EventId>> = initial.iter().map(|&t| (t, None)).collect();
    let mut ever: BTreeSet<EdgeId> = initial.iter().copied().collect();
    let mut ids = BTreeSet::new();
    let mut edges = BTreeSet::new();
    for ev in events {
        if !ids.insert(ev.id) {
            return Err(CausalError::DuplicateEvent(ev.id));
        }
        for &t in &ev.consumed {
            match live.remove(&t) {
                None => return Err(CausalError::DeadToken { event: ev.id, token: t }),
                Some(Some(creator)) => {
                    edges.insert((creator, ev.id));
                }
                Some(None) => {}
            }
        }
        for &t in &ev.created {
            if !ever.insert(t) {
                return Err(CausalError::DuplicateToken { event: ev.id, token: t });
            }
            live.insert(t, Some(ev.id));
        }
    }
    let g = CausalGraph::from_edges(ids, edges)?;
    Ok(if transitive_reduction { g.transitive_reduction() } else { g })
}

/// Causal graph of a recorded evolution.
pub fn trace_causal_graph<R: RewriteSystem>(
    system: &R,
    trace: &EvolutionTrace<R::State>,
    transitive_reduction: bool,
) -> Result<CausalGraph, CausalError> {
    let initial: Vec<EdgeId> = system.live_tokens(&trace.initial).into_iter().map(|(t, _)| t).collect();
    build_causal_graph(&initial, &trace.events, transitive_reduction)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cones {
    /// Strict future `I+`.
    pub i_plus: BTreeSet<EventId>,
    /// Strict past `I-`.
    pub i_minus: BTreeSet<EventId>,
    /// Causal future `J+ = I+ ∪ {x}`.
    pub j_plus: BTreeSet<EventId>,
    /// Causal past `J- = I- ∪ {x}`.
    pub j_minus: BTreeSet<EventId>,
}

/// Ordered partition of the events into achronal slices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Foliation {
    /// Each slice sorted by event id.
    pub slices: Vec<Vec<EventId>>,
}

impl Foliation {
    pub fn slice_of(&self) -> BTreeMap<EventId, usize> {
        self.slices.iter().enumerate().flat_map(|(k, s)| s.iter().map(move |&e| (e, k))).collect()
    }

    /// Slices in order, events within a slice by id.
    pub fn order(&self) -> Vec<EventId> {
        self.slices.iter().flatten().copied().collect()
    }
}

/// Integer event coordinates: time and spatial position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coord {
    pub t: i64,
    pub x: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCoordinates {
    pub coords: BTreeMap<EventId, Coord>,
}

impl CausalGraph {
    /// Fails if the edges form a cycle. Edge endpoints are added as events.
    pub fn from_edges<E, I>(events: E, edges: I) -> Result<Self, CausalError>
    where
        E: IntoIterator<Item = EventId>,
        I: IntoIterator<Item = (EventId, EventId)>,
    {
        let edges: BTreeSet<(EventId, EventId)> = edges.into_iter().collect();
        let ids: BTreeSet<EventId> =
            events.into_iter().chain(edges.iter().flat_map(|&(a, b)| [a, b])).collect();
        let events: Vec<EventId> = ids.into_iter().collect();
        let index: HashMap<EventId, usize> = events.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut succ = vec![Vec::new(); events.len()];
        let mut pred = vec![Vec::new(); events.len()];
        for (a, b) in edges {
            if a == b {
                return Err(CausalError::Cycle(a));
            }
            succ[index[&a]].push(index[&b]);
            pred[index[&b]].push(index[&a]);
        }
        let g = Self { events, index, succ, pred };
        let order = g.topo_indices();
        if order.len() < g.events.len() {
            let stuck = (0..g.events.len()).find(|i| !order.contains(i)).expect("some event is on a cycle");
            return Err(CausalError::Cycle(g.events[stuck]));
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[EventId] {
        &self.events
    }

    pub fn contains(&self, e: EventId) -> bool {
        self.index.contains_key(&e)
    }

    pub fn edges(&self) -> Vec<(EventId, EventId)> {
        let mut out: Vec<(EventId, EventId)> = (0..self.events.len())
            .flat_map(|i| self.succ[i].iter().map(move |&j| (self.events[i], self.events[j])))
            .collect();
        out.sort();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    fn idx(&self, e: EventId) -> Result<usize, CausalError> {
        self.index.get(&e).copied().ok_or(CausalError::UnknownEvent(e))
    }

    pub fn successors(&self, e: EventId) -> Result<Vec<EventId>, CausalError> {
        Ok(self.succ[self.idx(e)?].iter().map(|&j| self.events[j]).collect())
    }

    pub fn predecessors(&self, e: EventId) -> Result<Vec<EventId>, CausalError> {
        Ok(self.pred[self.idx(e)?].iter().map(|&j| self.events[j]).collect())
    }

    fn topo_indices(&self) -> Vec<usize> {
        let mut indeg: Vec<usize> = self.pred.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..self.events.len()).filter(|&i| indeg[i] == 0).collect();
        let mut out = Vec::with_capacity(self.events.len());
        while let Some(u) = queue.pop_front() {
            out.push(u);
            for &w in &self.succ[u] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        out
    }

    pub fn topological_order(&self) -> Vec<EventId> {
        self.topo_indices().into_iter().map(|i| self.events[i]).collect()
    }

    /// Drops every edge implied by a longer path.
    pub fn transitive_reduction(&self) -> CausalGraph {
        let n = self.events.len();
        let order = self.topo_indices();
        let mut desc: Vec<Vec<bool>> = vec![vec![false; n]; n];
        for &u in order.iter().rev() {
            for &w in &self.succ[u] {
                desc[u][w] = true;
                let below = desc[w].clone();
                for (d, b) in desc[u].iter_mut().zip(below) {
                    *d |= b;
                }
            }
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for &v in &self.succ[u] {
                if !self.succ[u].iter().any(|&w| w != v && desc[w][v]) {
                    edges.push((self.events[u], self.events[v]));
                }
            }
        }
        CausalGraph::from_edges(self.events.clone(), edges).expect("a subgraph of a DAG is acyclic")
    }

    /// Equal exactly for isomorphic causal graphs.
    pub fn canonical_key(&self) -> CanonicalKey {
        let mut s = Structure::new(vec![0; self.events.len()]);
        for (i, out) in self.succ.iter().enumerate() {
            for &j in out {
                s.add_tuple(0, vec![i, j]);
            }
        }
        canonize(&s).key
    }

    fn sweep(&self, from: &[usize], forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.events.len()];
        let mut stack: Vec<usize> = Vec::new();
        for &s in from {
            let next = if forward { &self.succ[s] } else { &self.pred[s] };
            stack.extend(next.iter().copied());
        }
        while let Some(u) = stack.pop() {
            if seen[u] {
                continue;
            }
            seen[u] = true;
            let next = if forward { &self.succ[u] } else { &self.pred[u] };
            stack.extend(next.iter().copied().filter(|&w| !seen[w]));
        }
        seen
    }

    fn collect(&self, mask: &[bool]) -> BTreeSet<EventId> {
        mask.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| self.events[i]).collect()
    }

    fn indices(&self, set: &BTreeSet<EventId>) -> Result<Vec<usize>, CausalError> {
        set.iter().map(|&e| self.idx(e)).collect()
    }

    pub fn cones(&self, x: EventId) -> Result<Cones, CausalError> {
        let set = BTreeSet::from([x]);
        Ok(Cones {
            i_plus: self.strict_future(&set)?,
            i_minus: self.strict_past(&set)?,
            j_plus: self.causal_future(&set)?,
            j_minus: self.causal_past(&set)?,
        })
    }

    pub fn strict_future(&self, set: &BTreeSet<EventId>) -> Result<BTreeSet<EventId>, CausalError> {
        Ok(self.collect(&self.sweep(&self.indices(set)?, true)))
    }

    pub fn strict_past(&self, set: &BTreeSet<EventId>) -> Result<BTreeSet<EventId>, CausalError> {
        Ok(self.collect(&self.sweep(&self.indices(set)?, false)))
    }

    pub fn causal_future(&self, set: &BTreeSet<EventId>) -> Result<BTreeSet<EventId>, CausalError> {
        let mut out = self.strict_future(set)?;
        out.extend(set.iter().copied());
        Ok(out)
    }

    pub fn causal_past(&self, set: &BTreeSet<EventId>) -> Result<BTreeSet<EventId>, CausalError> {
        let mut out = self.strict_past(set)?;
        out.extend(set.iter().copied());
        Ok(out)
    }

    /// No member lies in the strict future of another.
    pub fn is_achronal(&self, set: &BTreeSet<EventId>) -> Result<bool, CausalError> {
        Ok(self.strict_future(set)?.is_disjoint(set))
    }

    /// `(D+(S), D-(S))`: events every past-directed (resp. future-directed)
    /// maximal path from which meets `S`.
    pub fn cauchy_development(
        &self,
        set: &BTreeSet<EventId>,
    ) -> Result<(BTreeSet<EventId>, BTreeSet<EventId>), CausalError> {
        let members = self.indices(set)?;
        let n = self.events.len();
        let mut in_set = vec![false; n];
        for &i in &members {
            in_set[i] = true;
        }
        let order = self.topo_indices();
        let mut plus = vec![false; n];
        for &u in &order {
            plus[u] = in_set[u] || (!self.pred[u].is_empty() && self.pred[u].iter().all(|&p| plus[p]));
        }
        let mut minus = vec![false; n];
        for &u in order.iter().rev() {
            minus[u] = in_set[u] || (!self.succ[u].is_empty() && self.succ[u].iter().all(|&s| minus[s]));
        }
        Ok((self.collect(&plus), self.collect(&minus)))
    }

    /// Achronal and with Cauchy development covering every event.
    pub fn is_cauchy_surface(&self, set: &BTreeSet<EventId>) -> Result<bool, CausalError> {
        if !self.is_achronal(set)? {
            return Ok(false);
        }
        let (plus, minus) = self.cauchy_development(set)?;
        Ok(plus.union(&minus).count() == self.events.len())
    }

    /// Checks that `f` partitions the events into achronal slices with every
    /// edge pointing to a later slice.
    pub fn validate_foliation(&self, f: &Foliation) -> Result<(), CausalError> {
        let slice = f.slice_of();
        let total: usize = f.slices.iter().map(Vec::len).sum();
        if total != slice.len() || slice.len() != self.events.len() || slice.keys().any(|e| !self.contains(*e)) {
            return Err(CausalError::InvalidFoliation("slices do not partition the events".into()));
        }
        for (a, b) in self.edges() {
            if slice[&a] >= slice[&b] {
                return Err(CausalError::InvalidFoliation(format!(
                    "edge {a} -> {b} does not advance between slices"
                )));
            }
        }
        Ok(())
    }

    /// Layers by longest path from the sources, with in-layer positions on a
    /// doubled integer lattice centered at zero. Positions follow the mean
    /// position of each event's predecessors, ties by event id.
    pub fn foliate_standard(&self) -> (Foliation, EventCoordinates) {
        let n = self.events.len();
        let mut layer = vec![0usize; n];
        for &u in &self.topo_indices() {
            for &w in &self.succ[u] {
                layer[w] = layer[w].max(layer[u] + 1);
            }
        }
        let depth = layer.iter().max().map_or(0, |&m| m + 1);
        let mut layers: Vec<Vec<usize>> = vec![Vec::new(); depth];
        for i in 0..n {
            layers[layer[i]].push(i);
        }
        let mut x = vec![0i64; n];
        for members in &mut layers {
            let key = |i: usize| -> (i128, i128) {
                let p = &self.pred[i];
                if p.is_empty() { (0, 1) } else { (p.iter().map(|&q| x[q] as i128).sum(), p.len() as i128) }
            };
            members.sort_by(|&a, &b| {
                let ((sa, na), (sb, nb)) = (key(a), key(b));
                (sa * nb).cmp(&(sb * na)).then(self.events[a].cmp(&self.events[b]))
            });
            let size = members.len() as i64;
            for (rank, &i) in members.iter().enumerate() {
                x[i] = 2 * rank as i64 - (size - 1);
            }
        }
        let slices = layers
            .iter()
            .map(|m| {
                let mut s: Vec<EventId> = m.iter().map(|&i| self.events[i]).collect();
                s.sort();
                s
            })
            .collect();
        let coords = (0..n).map(|i| (self.events[i], Coord { t: layer[i] as i64, x: vec![x[i]] })).collect();
        (Foliation { slices }, EventCoordinates { coords })
    }

    pub fn to_dot(&self, highlight: &BTreeSet<(EventId, EventId)>) -> String {
        let mut out = String::from("digraph causal {\n");
        for e in &self.events {
            let _ = writeln!(out, "  \"{}\";", e);
        }
        for (a, b) in self.edges() {
            let style = if highlight.contains(&(a, b)) { " [color=red]" } else { "" };
            let _ = writeln!(out, "  \"{a}\" -> \"{b}\"{style};");
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{StringRule, StringState, StringSystem, UpdateScheme, evolve};
    use proptest::prelude::*;

    fn e(i: u64) -> EventId {
        EventId(i)
    }

    fn dag(n: u64, edges: &[(u64, u64)]) -> CausalGraph {
        CausalGraph::from_edges((0..n).map(e), edges.iter().map(|&(a, b)| (e(a), e(b)))).unwrap()
    }

    fn set(ids: &[u64]) -> BTreeSet<EventId> {
        ids.iter().map(|&i| e(i)).collect()
    }

    #[test]
    fn edges_follow_token_flow() {
        let sys = StringSystem::new(vec![StringRule::new("AB", "BA").unwrap()]);
        let t = evolve(&sys, &StringState::new("ABAB"), UpdateScheme::Sequential, 10, 0).unwrap();
        let g = trace_causal_graph(&sys, &t, false).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edges(), vec![(e(0), e(2)), (e(1), e(2))]);
    }

    #[test]
    fn dead_token_rejected() {
        let ev = |id, c: &[u64], k: &[u64]| Event {
            id: EventId(id),
            rule_index: 0,
            consumed: c.iter().map(|&t| EdgeId(t)).collect(),
            created: k.iter().map(|&t| EdgeId(t)).collect(),
            step: 0,
        };
        let init = [EdgeId(0)];
        assert!(build_causal_graph(&init, &[ev(0, &[0], &[1]), ev(1, &[1], &[2])], false).is_ok());
        assert_eq!(
            build_causal_graph(&init, &[ev(0, &[0], &[1]), ev(1, &[0], &[2])], false),
            Err(CausalError::DeadToken { event: EventId(1), token: EdgeId(0) })
        );
        assert_eq!(
            build_causal_graph(&init, &[ev(0, &[0], &[0])], false),
            Err(CausalError::DuplicateToken { event: EventId(0), token: EdgeId(0) })
        );
    }

    #[test]
    fn cycle_rejected() {
        assert_eq!(
            CausalGraph::from_edges([], [(e(0), e(1)), (e(1), e(0))]).unwrap_err(),
            CausalError::Cycle(e(0))
        );
    }

    #[test]
    fn reduction_drops_shortcuts() {
        let g = dag(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(g.transitive_reduction().edges(), vec![(e(0), e(1)), (e(1), e(2))]);
    }

    #[test]
    fn cones_of_a_diamond() {
        let g = dag(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        let c = g.cones(e(1)).unwrap();
        assert_eq!(c.i_plus, set(&[3]));
        assert_eq!(c.j_minus, set(&[0, 1]));
        assert!(g.is_achronal(&set(&[1, 2])).unwrap());
        assert!(!g.is_achronal(&set(&[0, 3])).unwrap());
        assert!(g.is_cauchy_surface(&set(&[1, 2])).unwrap());
        assert!(!g.is_cauchy_surface(&set(&[1])).unwrap());
        let (plus, minus) = g.cauchy_development(&set(&[1])).unwrap();
        assert_eq!(plus, set(&[1]));
        assert_eq!(minus, set(&[1]));
        let (plus, minus) = g.cauchy_development(&set(&[1, 2])).unwrap();
        assert_eq!(plus, set(&[1, 2, 3]));
        assert_eq!(minus, set(&[0, 1, 2]));
    }

    #[test]
    fn standard_foliation_of_the_sorting_lattice() {
        let sys = StringSystem::new(vec![StringRule::new("AB", "BA").unwrap()]);
        let t = evolve(&sys, &StringState::new("ABABABAB"), UpdateScheme::Parallel, 20, 0).unwrap();
        let g = trace_causal_graph(&sys, &t, false).unwrap();
        assert_eq!(g.len(), 10);
        let (f, coords) = g.foliate_standard();
        let sizes: Vec<usize> = f.slices.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 3, 2, 1]);
        g.validate_foliation(&f).unwrap();
        for (a, b) in g.edges() {
            let (ca, cb) = (&coords.coords[&a], &coords.coords[&b]);
            assert_eq!(cb.t - ca.t, 1);
            assert_eq!((cb.x[0] - ca.x[0]).abs(), 1);
        }
        for s in &f.slices {
            assert!(g.is_achronal(&s.iter().copied().collect()).unwrap());
        }
    }

    #[test]
    fn foliation_validation() {
        let g = dag(3, &[(0, 1), (1, 2)]);
        let bad = Foliation { slices: vec![vec![e(0), e(1)], vec![e(2)]] };
        assert!(g.validate_foliation(&bad).is_err());
        let missing = Foliation { slices: vec![vec![e(0)], vec![e(1)]] };
        assert!(g.validate_foliation(&missing).is_err());
    }

    fn arb_dag() -> impl Strategy<Value = CausalGraph> {
        (1u64..12).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n), 0..30).prop_map(move |pairs| {
                let edges: Vec<(EventId, EventId)> = pairs
                    .into_iter()
                    .filter(|(a, b)| a != b)
                    .map(|(a, b)| (e(a.min(b)), e(a.max(b))))
                    .collect();
                CausalGraph::from_edges((0..n).map(e), edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn cone_identities(g in arb_dag(), pick in any::<prop::sample::Index>()) {
            let x = g.events()[pick.index(g.len())];
            let c = g.cones(x).unwrap();
            let mut jp = c.i_plus.clone();
            jp.insert(x);
            prop_assert_eq!(&jp, &c.j_plus);
            prop_assert!(!c.i_plus.contains(&x));
            prop_assert!(c.i_plus.is_disjoint(&c.i_minus));
            for y in &c.i_plus {
                prop_assert!(g.cones(*y).unwrap().i_minus.contains(&x));
            }
        }
    }
}
