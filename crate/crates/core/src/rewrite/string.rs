//! String substitution systems, with characters tracked as tokens.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Event, RewriteError, RewriteSystem, Rule, Site, TokenStructure};
use crate::hypercore::{CanonicalKey, EdgeId, EventId, Hypergraph, Structure};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StringRule {
    lhs: Vec<char>,
    rhs: Vec<char>,
}

impl StringRule {
    pub fn new(lhs: &str, rhs: &str) -> Result<Self, RewriteError> {
        if lhs.is_empty() {
            return Err(RewriteError::InvalidRule("left side is empty".into()));
        }
        Ok(Self { lhs: lhs.chars().collect(), rhs: rhs.chars().collect() })
    }

    pub fn lhs(&self) -> &[char] {
        &self.lhs
    }

    pub fn rhs(&self) -> &[char] {
        &self.rhs
    }
}

impl fmt::Display for StringRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l: String = self.lhs.iter().collect();
        let r: String = self.rhs.iter().collect();
        write!(f, "{l}->{r}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub id: EdgeId,
    pub symbol: char,
    pub creator: Option<EventId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StringState {
    tokens: Vec<Token>,
    next_token: u64,
    next_event: u64,
}

impl StringState {
    pub fn new(s: &str) -> Self {
        let tokens: Vec<Token> = s
            .chars()
            .enumerate()
            .map(|(i, c)| Token { id: EdgeId(i as u64), symbol: c, creator: None })
            .collect();
        let next_token = tokens.len() as u64;
        Self { tokens, next_token, next_event: 0 }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn as_string(&self) -> String {
        self.tokens.iter().map(|t| t.symbol).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StringMatch {
    pub position: usize,
    pub rule_index: usize,
}

/// Occurrences of every left side in `s`, by position then rule index.
pub fn string_matches(s: &str, rules: &[StringRule]) -> Vec<StringMatch> {
    let chars: Vec<char> = s.chars().collect();
    matches_in(&chars, rules)
}

fn matches_in(chars: &[char], rules: &[StringRule]) -> Vec<StringMatch> {
    let mut out = Vec::new();
    for position in 0..chars.len() {
        for (rule_index, r) in rules.iter().enumerate() {
            if chars[position..].starts_with(&r.lhs) {
                out.push(StringMatch { position, rule_index });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct StringSystem {
    rules: Vec<StringRule>,
}

impl StringSystem {
    pub fn new(rules: Vec<StringRule>) -> Self {
        Self { rules }
    }

    pub fn rules(&self) -> &[StringRule] {
        &self.rules
    }

    /// Sorted distinct symbols of all rules.
    pub fn alphabet(&self) -> Vec<char> {
        let mut a: Vec<char> = self.rules.iter().flat_map(|r| r.lhs.iter().chain(&r.rhs)).copied().collect();
        a.sort();
        a.dedup();
        a
    }
}

impl RewriteSystem for StringSystem {
    type State = StringState;

    fn rule_count(&self) -> usize {
        self.rules.len()
    }

    fn rule_text(&self, rule_index: usize) -> String {
        self.rules[rule_index].to_string()
    }

    fn sites(&self, state: &StringState) -> Vec<Site> {
        let chars: Vec<char> = state.tokens.iter().map(|t| t.symbol).collect();
        matches_in(&chars, &self.rules)
            .into_iter()
            .map(|m| Site {
                rule_index: m.rule_index,
                consumed: state.tokens[m.position..m.position + self.rules[m.rule_index].lhs.len()]
                    .iter()
                    .map(|t| t.id)
                    .collect(),
            })
            .collect()
    }

    fn apply(&self, state: &StringState, site: &Site) -> Result<(StringState, Event), RewriteError> {
        let rule = self.rules.get(site.rule_index).ok_or(RewriteError::UnknownRule(site.rule_index))?;
        let stale = RewriteError::StaleSite { rule_index: site.rule_index };
        let first = site.consumed.first().ok_or(stale.clone())?;
        let p = state.tokens.iter().position(|t| t.id == *first).ok_or(stale.clone())?;
        let n = rule.lhs.len();
        if site.consumed.len() != n || p + n > state.tokens.len() {
            return Err(stale);
        }
        let window = &state.tokens[p..p + n];
        if window.iter().zip(&site.consumed).any(|(t, id)| t.id != *id)
            || window.iter().zip(&rule.lhs).any(|(t, c)| t.symbol != *c)
        {
            return Err(stale);
        }
        let event_id = EventId(state.next_event);
        let created: Vec<Token> = rule
            .rhs
            .iter()
            .enumerate()
            .map(|(i, &c)| Token { id: EdgeId(state.next_token + i as u64), symbol: c, creator: Some(event_id) })
            .collect();
        let mut tokens = Vec::with_capacity(state.tokens.len() + created.len() - n);
        tokens.extend_from_slice(&state.tokens[..p]);
        tokens.extend_from_slice(&created);
        tokens.extend_from_slice(&state.tokens[p + n..]);
        let next = StringState {
            tokens,
            next_token: state.next_token + created.len() as u64,
            next_event: state.next_event + 1,
        };
        let event = Event {
            id: event_id,
            rule_index: site.rule_index,
            consumed: site.consumed.clone(),
            created: created.iter().map(|t| t.id).collect(),
            step: 0,
        };
        Ok((next, event))
    }

    fn live_tokens(&self, state: &StringState) -> Vec<(EdgeId, Option<EventId>)> {
        state.tokens.iter().map(|t| (t.id, t.creator)).collect()
    }

    fn canonical(&self, state: &StringState) -> (CanonicalKey, StringState) {
        let s = state.as_string();
        let mut words = vec![s.chars().count() as u64];
        words.extend(s.chars().map(|c| c as u64));
        (CanonicalKey::from_words(&words), StringState::new(&s))
    }

    fn site_label(&self, state: &StringState, site: &Site) -> String {
        let pos = site
            .consumed
            .first()
            .and_then(|id| state.tokens.iter().position(|t| t.id == *id))
            .map_or_else(|| "?".to_string(), |p| p.to_string());
        format!("@{pos}")
    }

    fn state_label(&self, state: &StringState) -> String {
        state.as_string()
    }

    fn token_structure(&self, state: &StringState) -> TokenStructure {
        let mut s = Structure::new(state.tokens.iter().map(|t| t.symbol as u64 + 2).collect());
        for i in 1..state.tokens.len() {
            s.add_tuple(2, vec![i - 1, i]);
        }
        let token_vertex = state.tokens.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
        TokenStructure { structure: s, token_vertex }
    }
}

/// The directed path hypergraph of `s`: vertices `0..=len`, and for the
/// `i`-th character a hyperedge from `i` to `i + 1` whose arity (`2 + k`,
/// with the head repeated) encodes the symbol's index `k` in `alphabet`.
pub fn encode_string(s: &str, alphabet: &[char]) -> Result<Hypergraph, RewriteError> {
    let mut lists = Vec::new();
    for (i, c) in s.chars().enumerate() {
        let k = symbol_index(c, alphabet)?;
        let mut e = vec![i as u64, i as u64 + 1];
        e.extend(std::iter::repeat_n(i as u64 + 1, k));
        lists.push(e);
    }
    Ok(Hypergraph::from_edge_lists(lists)?)
}

fn symbol_index(c: char, alphabet: &[char]) -> Result<usize, RewriteError> {
    alphabet
        .iter()
        .position(|&a| a == c)
        .ok_or_else(|| RewriteError::InvalidRule(format!("symbol {c:?} is not in the alphabet")))
}

/// Hypergraph rules acting on [`encode_string`] paths exactly as the string
/// rules act on strings. Rules with an empty right side have no encoding.
pub fn encode_rules(rules: &[StringRule], alphabet: &[char]) -> Result<Vec<Rule>, RewriteError> {
    rules
        .iter()
        .map(|r| {
            if r.rhs.is_empty() {
                return Err(RewriteError::InvalidRule(format!("{r} deletes its match")));
            }
            let side = |syms: &[char], start: u32, end: u32, inner: u32| -> Result<Vec<Vec<u32>>, RewriteError> {
                let n = syms.len() as u32;
                let node = |i: u32| if i == 0 { start } else if i == n { end } else { inner + i };
                syms.iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        let i = i as u32;
                        let k = symbol_index(c, alphabet)?;
                        let mut e = vec![node(i), node(i + 1)];
                        e.extend(std::iter::repeat_n(node(i + 1), k));
                        Ok(e)
                    })
                    .collect()
            };
            let lhs = side(&r.lhs, 0, 1, 1000)?;
            let rhs = side(&r.rhs, 0, 1, 2000)?;
            Rule::new(lhs, rhs).map(|rule| rule.injective(true))
        })
        .collect()
}

/// Reads back a path produced by [`encode_string`] or its rewrites.
pub fn decode_path(h: &Hypergraph, alphabet: &[char]) -> Option<String> {
    if h.edge_count() == 0 {
        return Some(String::new());
    }
    let mut next: BTreeMap<u64, (u64, char)> = BTreeMap::new();
    let mut has_pred = std::collections::BTreeSet::new();
    for e in h.edges() {
        let (a, b) = (e.vertices[0].0, e.vertices.get(1)?.0);
        if e.vertices[2..].iter().any(|v| v.0 != b) {
            return None;
        }
        let c = *alphabet.get(e.vertices.len() - 2)?;
        if next.insert(a, (b, c)).is_some() {
            return None;
        }
        has_pred.insert(b);
    }
    let mut at = *next.keys().find(|v| !has_pred.contains(v))?;
    let mut out = String::new();
    while let Some(&(b, c)) = next.get(&at) {
        out.push(c);
        at = b;
        if out.len() > h.edge_count() {
            return None;
        }
    }
    (out.chars().count() == h.edge_count()).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::{HypergraphSystem, UpdateScheme, evolve};

    fn rules(rs: &[(&str, &str)]) -> Vec<StringRule> {
        rs.iter().map(|&(l, r)| StringRule::new(l, r).unwrap()).collect()
    }

    #[test]
    fn matches_ordered_by_position_then_rule() {
        let rs = rules(&[("B", "A"), ("AB", "BA")]);
        let ms = string_matches("ABB", &rs);
        let flat: Vec<(usize, usize)> = ms.iter().map(|m| (m.position, m.rule_index)).collect();
        assert_eq!(flat, vec![(0, 1), (1, 0), (2, 0)]);
    }

    #[test]
    fn overlapping_occurrences_found() {
        assert_eq!(string_matches("AAAA", &rules(&[("AA", "A")])).len(), 3);
    }

    #[test]
    fn apply_tracks_tokens() {
        let sys = StringSystem::new(rules(&[("AB", "BAA")]));
        let st = StringState::new("CAB");
        let site = &sys.sites(&st)[0];
        assert_eq!(site.consumed, vec![EdgeId(1), EdgeId(2)]);
        let (next, ev) = sys.apply(&st, site).unwrap();
        assert_eq!(next.as_string(), "CBAA");
        assert_eq!(ev.created, vec![EdgeId(3), EdgeId(4), EdgeId(5)]);
        assert_eq!(next.tokens()[0].id, EdgeId(0));
    }

    #[test]
    fn deletion_rule() {
        let sys = StringSystem::new(rules(&[("AB", "")]));
        let (next, ev) = sys.apply(&StringState::new("ABAB"), &sys.sites(&StringState::new("ABAB"))[0]).unwrap();
        assert_eq!(next.as_string(), "AB");
        assert!(ev.created.is_empty());
    }

    #[test]
    fn encoding_round_trip() {
        let alpha = ['A', 'B', 'C'];
        let h = encode_string("CABBA", &alpha).unwrap();
        assert_eq!(decode_path(&h, &alpha).as_deref(), Some("CABBA"));
    }

    #[test]
    fn encoded_rules_track_string_rules() {
        let rs = rules(&[("AB", "BA"), ("A", "AB")]);
        let alpha = ['A', 'B'];
        let hsys = HypergraphSystem::new(encode_rules(&rs, &alpha).unwrap());
        let ssys = StringSystem::new(rs);
        for init in ["ABA", "AABB", "BAB", "A"] {
            let h = encode_string(init, &alpha).unwrap();
            assert_eq!(hsys.sites(&h).len(), ssys.sites(&StringState::new(init)).len(), "{init}");
            let t = evolve(&hsys, &h, UpdateScheme::Sequential, 1, 0).unwrap();
            let decoded = decode_path(&t.final_state, &alpha).unwrap();
            let targets: Vec<String> = ssys
                .sites(&StringState::new(init))
                .iter()
                .map(|s| ssys.apply(&StringState::new(init), s).unwrap().0.as_string())
                .collect();
            assert!(targets.contains(&decoded), "{init} -> {decoded}");
        }
    }
}
