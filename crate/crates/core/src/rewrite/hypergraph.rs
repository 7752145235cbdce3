//! Pattern rules on ordered hypergraphs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Event, RewriteError, RewriteSystem, Site, TokenStructure};
use crate::hypercore::{CanonicalKey, EdgeId, EventId, Hyperedge, Hypergraph, Structure, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternVar(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    pub edges: Vec<Vec<PatternVar>>,
}

/// `lhs -> rhs`. Variables are numbered by first appearance, left side
/// first; right-side variables absent from the left side are fresh.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    lhs: Pattern,
    rhs: Pattern,
    var_count: u32,
    fresh: Vec<PatternVar>,
    injective: bool,
}

const NAMES: [&str; 12] = ["x", "y", "z", "w", "u", "v", "a", "b", "c", "d", "p", "q"];

fn var_name(v: PatternVar) -> String {
    NAMES.get(v.0 as usize).map_or_else(|| format!("v{}", v.0), |s| s.to_string())
}

impl Rule {
    pub fn new(lhs: Vec<Vec<u32>>, rhs: Vec<Vec<u32>>) -> Result<Self, RewriteError> {
        if lhs.is_empty() {
            return Err(RewriteError::InvalidRule("left side has no hyperedges".into()));
        }
        if lhs.iter().chain(&rhs).any(|e| e.is_empty()) {
            return Err(RewriteError::InvalidRule("empty hyperedge in pattern".into()));
        }
        fn number(side: &[Vec<u32>], numbering: &mut BTreeMap<u32, PatternVar>) -> Pattern {
            let edges = side
                .iter()
                .map(|e| {
                    e.iter()
                        .map(|v| {
                            let next = PatternVar(numbering.len() as u32);
                            *numbering.entry(*v).or_insert(next)
                        })
                        .collect()
                })
                .collect();
            Pattern { edges }
        }
        let mut numbering = BTreeMap::new();
        let lhs = number(&lhs, &mut numbering);
        let lhs_vars = numbering.len() as u32;
        let rhs = number(&rhs, &mut numbering);
        let var_count = numbering.len() as u32;
        let fresh = (lhs_vars..var_count).map(PatternVar).collect();
        Ok(Self { lhs, rhs, var_count, fresh, injective: false })
    }

    /// Requires distinct pattern variables to bind distinct vertices.
    pub fn injective(mut self, injective: bool) -> Self {
        self.injective = injective;
        self
    }

    pub fn is_injective(&self) -> bool {
        self.injective
    }

    pub fn lhs(&self) -> &Pattern {
        &self.lhs
    }

    pub fn rhs(&self) -> &Pattern {
        &self.rhs
    }

    pub fn fresh_vars(&self) -> &[PatternVar] {
        &self.fresh
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.edges.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            let names: Vec<String> = e.iter().map(|&v| var_name(v)).collect();
            write!(f, "{{{}}}", names.join(","))?;
        }
        f.write_str("}")
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.lhs, self.rhs)
    }
}

/// An embedding of a rule's left side. `edges[k]` hosts pattern edge `k` and
/// `binding[v]` is the image of variable `v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Match {
    pub rule_index: usize,
    pub edges: Vec<EdgeId>,
    pub binding: Vec<VertexId>,
}

impl Match {
    fn sort_key(&self) -> (Vec<EdgeId>, usize, &[VertexId], &[EdgeId]) {
        let mut sorted = self.edges.clone();
        sorted.sort();
        (sorted, self.rule_index, &self.binding, &self.edges)
    }
}

fn bind(
    pattern: &[PatternVar],
    host: &[VertexId],
    binding: &mut [Option<VertexId>],
    injective: bool,
) -> Option<Vec<PatternVar>> {
    if pattern.len() != host.len() {
        return None;
    }
    let mut newly = Vec::new();
    for (&p, &v) in pattern.iter().zip(host) {
        match binding[p.0 as usize] {
            Some(b) if b != v => {
                for q in newly {
                    binding[q as usize] = None;
                }
                return None;
            }
            Some(_) => {}
            None => {
                if injective && binding.contains(&Some(v)) {
                    for q in newly {
                        binding[q as usize] = None;
                    }
                    return None;
                }
                binding[p.0 as usize] = Some(v);
                newly.push(p.0);
            }
        }
    }
    Some(newly.into_iter().map(PatternVar).collect())
}

/// All matches of `rule`, sorted by consumed edge set, then binding.
pub fn find_matches(h: &Hypergraph, rule: &Rule, rule_index: usize) -> Vec<Match> {
    let lhs_vars = (rule.var_count - rule.fresh.len() as u32) as usize;
    let mut out = Vec::new();
    let mut binding = vec![None; lhs_vars];
    let mut chosen: Vec<usize> = Vec::new();
    extend(h, rule, rule_index, &mut binding, &mut chosen, &mut out);
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    out
}

fn extend(
    h: &Hypergraph,
    rule: &Rule,
    rule_index: usize,
    binding: &mut Vec<Option<VertexId>>,
    chosen: &mut Vec<usize>,
    out: &mut Vec<Match>,
) {
    let k = chosen.len();
    if k == rule.lhs.edges.len() {
        out.push(Match {
            rule_index,
            edges: chosen.iter().map(|&i| h.edges()[i].id).collect(),
            binding: binding.iter().map(|b| b.expect("every lhs variable occurs in an edge")).collect(),
        });
        return;
    }
    for (i, e) in h.edges().iter().enumerate() {
        if chosen.contains(&i) {
            continue;
        }
        if let Some(newly) = bind(&rule.lhs.edges[k], &e.vertices, binding, rule.injective) {
            chosen.push(i);
            extend(h, rule, rule_index, binding, chosen, out);
            chosen.pop();
            for q in newly {
                binding[q.0 as usize] = None;
            }
        }
    }
}

/// Replaces the matched edges by the instantiated right side. Fresh
/// vertices, edges and the event id come from the hypergraph's counters.
pub fn apply_event(h: &Hypergraph, rule: &Rule, m: &Match) -> Result<(Hypergraph, Event), RewriteError> {
    let mut binding: Vec<VertexId> = m.binding.clone();
    let mut next_vertex = h.next_vertex();
    for _ in &rule.fresh {
        binding.push(VertexId(next_vertex));
        next_vertex += 1;
    }
    let event_id = EventId(h.next_event());
    let mut edges: Vec<Hyperedge> = Vec::with_capacity(h.edge_count());
    for e in h.edges() {
        if !m.edges.contains(&e.id) {
            edges.push(e.clone());
        }
    }
    if edges.len() + m.edges.len() != h.edge_count() {
        return Err(RewriteError::StaleSite { rule_index: m.rule_index });
    }
    let mut next_edge = h.next_edge();
    let mut created = Vec::with_capacity(rule.rhs.edges.len());
    for pe in &rule.rhs.edges {
        let id = EdgeId(next_edge);
        next_edge += 1;
        created.push(id);
        edges.push(Hyperedge {
            id,
            vertices: pe.iter().map(|v| binding[v.0 as usize]).collect(),
            creator: Some(event_id),
        });
    }
    let g = Hypergraph::from_parts(edges, next_vertex, next_edge, h.next_event() + 1)?;
    let event = Event { id: event_id, rule_index: m.rule_index, consumed: m.edges.clone(), created, step: 0 };
    Ok((g, event))
}

#[derive(Debug, Clone)]
pub struct HypergraphSystem {
    rules: Vec<Rule>,
}

impl HypergraphSystem {
    pub fn new(rules: Vec<Rule>) -> Self {
        Self { rules }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// All matches of all rules, sorted by consumed edge set, rule, binding.
    pub fn matches(&self, h: &Hypergraph) -> Vec<Match> {
        let mut all: Vec<Match> = self
            .rules
            .iter()
            .enumerate()
            .flat_map(|(i, r)| find_matches(h, r, i))
            .collect();
        all.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        all
    }

    fn rebind(&self, h: &Hypergraph, site: &Site) -> Result<Match, RewriteError> {
        let rule = self.rules.get(site.rule_index).ok_or(RewriteError::UnknownRule(site.rule_index))?;
        let stale = RewriteError::StaleSite { rule_index: site.rule_index };
        if site.consumed.len() != rule.lhs.edges.len() {
            return Err(stale);
        }
        let lhs_vars = (rule.var_count - rule.fresh.len() as u32) as usize;
        let mut binding = vec![None; lhs_vars];
        for (k, id) in site.consumed.iter().enumerate() {
            if site.consumed[..k].contains(id) {
                return Err(stale);
            }
            let e = h.edge(*id).ok_or(stale.clone())?;
            bind(&rule.lhs.edges[k], &e.vertices, &mut binding, rule.injective).ok_or(stale.clone())?;
        }
        Ok(Match {
            rule_index: site.rule_index,
            edges: site.consumed.clone(),
            binding: binding.into_iter().map(|b| b.expect("bound by its edge")).collect(),
        })
    }
}

pub(crate) fn edge_list_text(edges: &[&[VertexId]]) -> String {
    let parts: Vec<String> = edges
        .iter()
        .map(|e| format!("{{{}}}", e.iter().map(|v| v.0.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    format!("{{{}}}", parts.join(","))
}

impl RewriteSystem for HypergraphSystem {
    type State = Hypergraph;

    fn rule_count(&self) -> usize {
        self.rules.len()
    }

    fn rule_text(&self, rule_index: usize) -> String {
        self.rules[rule_index].to_string()
    }

    fn sites(&self, state: &Hypergraph) -> Vec<Site> {
        self.matches(state)
            .into_iter()
            .map(|m| Site { rule_index: m.rule_index, consumed: m.edges })
            .collect()
    }

    fn apply(&self, state: &Hypergraph, site: &Site) -> Result<(Hypergraph, Event), RewriteError> {
        let m = self.rebind(state, site)?;
        apply_event(state, &self.rules[site.rule_index], &m)
    }

    fn live_tokens(&self, state: &Hypergraph) -> Vec<(EdgeId, Option<EventId>)> {
        state.edges().iter().map(|e| (e.id, e.creator)).collect()
    }

    fn canonical(&self, state: &Hypergraph) -> (CanonicalKey, Hypergraph) {
        state.canonical_representative()
    }

    fn site_label(&self, state: &Hypergraph, site: &Site) -> String {
        let edges: Vec<&[VertexId]> = site
            .consumed
            .iter()
            .filter_map(|id| state.edge(*id).map(|e| e.vertices.as_slice()))
            .collect();
        edge_list_text(&edges)
    }

    fn state_label(&self, state: &Hypergraph) -> String {
        let edges: Vec<&[VertexId]> = state.edges().iter().map(|e| e.vertices.as_slice()).collect();
        edge_list_text(&edges)
    }

    fn token_structure(&self, state: &Hypergraph) -> TokenStructure {
        let verts: Vec<VertexId> = state.vertices().into_iter().collect();
        let index: BTreeMap<VertexId, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut s = Structure::new(vec![0; verts.len()]);
        let mut token_vertex = BTreeMap::new();
        for e in state.edges() {
            let node = s.add_vertex(1);
            token_vertex.insert(e.id, node);
            let mut t = vec![node];
            t.extend(e.vertices.iter().map(|v| index[v]));
            s.add_tuple(1, t);
        }
        TokenStructure { structure: s, token_vertex }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{UpdateScheme, evolve};

    fn rule(l: &[&[u32]], r: &[&[u32]]) -> Rule {
        Rule::new(l.iter().map(|e| e.to_vec()).collect(), r.iter().map(|e| e.to_vec()).collect()).unwrap()
    }

    fn h(lists: &[&[u64]]) -> Hypergraph {
        Hypergraph::from_edge_lists(lists.iter().map(|l| l.to_vec())).unwrap()
    }

    #[test]
    fn renumbering_and_fresh_vars() {
        let r = rule(&[&[7, 3], &[3, 9]], &[&[7, 9], &[9, 4]]);
        assert_eq!(r.var_count(), 4);
        assert_eq!(r.fresh_vars(), &[PatternVar(3)]);
        assert_eq!(r.to_string(), "{{x,y},{y,z}}->{{x,z},{z,w}}");
    }

    #[test]
    fn empty_lhs_rejected() {
        assert!(Rule::new(vec![], vec![vec![1]]).is_err());
        assert!(Rule::new(vec![vec![]], vec![]).is_err());
    }

    #[test]
    fn matches_are_sorted_and_complete() {
        let r = rule(&[&[1, 2], &[2, 3]], &[&[1, 3]]);
        let g = h(&[&[0, 1], &[1, 2], &[2, 0]]);
        let ms = find_matches(&g, &r, 0);
        assert_eq!(ms.len(), 3);
        let keys: Vec<Vec<u64>> = ms
            .iter()
            .map(|m| {
                let mut s: Vec<u64> = m.edges.iter().map(|e| e.0).collect();
                s.sort();
                s
            })
            .collect();
        assert_eq!(keys, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn non_injective_by_default() {
        let r = rule(&[&[1, 2]], &[&[1, 2], &[2, 3]]);
        let g = h(&[&[4, 4]]);
        assert_eq!(find_matches(&g, &r, 0).len(), 1);
        assert!(find_matches(&g, &r.clone().injective(true), 0).is_empty());
    }

    #[test]
    fn apply_mints_fresh_ids() {
        let r = rule(&[&[1, 2], &[2, 3]], &[&[1, 3], &[3, 4]]);
        let g = h(&[&[0, 1], &[1, 2]]);
        let m = &find_matches(&g, &r, 0)[0];
        let (g2, ev) = apply_event(&g, &r, m).unwrap();
        assert_eq!(g2.edge_multiset(), vec![vec![0, 2], vec![2, 3]]);
        assert_eq!(ev.consumed, vec![EdgeId(0), EdgeId(1)]);
        assert_eq!(ev.created, vec![EdgeId(2), EdgeId(3)]);
        assert_eq!(g2.next_vertex(), 4);
        assert!(g2.edges().iter().all(|e| e.creator == Some(EventId(0))));
    }

    #[test]
    fn stale_site_rejected() {
        let sys = HypergraphSystem::new(vec![rule(&[&[1, 2]], &[&[2, 1]])]);
        let g = h(&[&[0, 1]]);
        let bad = Site { rule_index: 0, consumed: vec![EdgeId(5)] };
        assert!(matches!(sys.apply(&g, &bad), Err(RewriteError::StaleSite { .. })));
    }

    #[test]
    fn growth_rule_evolves() {
        let sys = HypergraphSystem::new(vec![rule(&[&[1, 2]], &[&[1, 2], &[2, 3]])]);
        let t = evolve(&sys, &h(&[&[0, 1]]), UpdateScheme::Parallel, 4, 0).unwrap();
        assert_eq!(t.final_state.edge_count(), 16);
    }
}
