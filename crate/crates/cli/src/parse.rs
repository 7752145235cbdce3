//! Rule and state grammar.
//!
//! Hypergraph rules look like `{{x,y},{x,z}} -> {{x,z},{z,w}}` and string
//! rules like `AB -> A`. Rules are separated by `;` or newlines, and `#`
//! starts a comment running to the end of the line.

use std::collections::BTreeMap;
use std::fmt;

use causal_forge::hypercore::Hypergraph;
use causal_forge::rewrite::{Rule, StringRule};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleSet {
    Hypergraph(Vec<Rule>),
    Strings(Vec<StringRule>),
}

impl RuleSet {
    pub fn len(&self) -> usize {
        match self {
            RuleSet::Hypergraph(r) => r.len(),
            RuleSet::Strings(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `; `-separated rules, parseable by [`parse_rules`].
impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let texts: Vec<String> = match self {
            RuleSet::Hypergraph(r) => r.iter().map(Rule::to_string).collect(),
            RuleSet::Strings(r) => r.iter().map(StringRule::to_string).collect(),
        };
        f.write_str(&texts.join("; "))
    }
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

#[derive(Clone, Copy)]
struct Mark {
    line: usize,
    column: usize,
}

impl Cursor {
    fn new(text: &str) -> Self {
        Self { chars: text.chars().collect(), pos: 0, line: 1, column: 1 }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn mark(&self) -> Mark {
        Mark { line: self.line, column: self.column }
    }

    fn error_at(&self, at: Mark, message: impl Into<String>) -> ParseError {
        ParseError { line: at.line, column: at.column, message: message.into() }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        self.error_at(self.mark(), message)
    }

    fn found(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some('\n') => "end of line".into(),
            Some(c) => format!("{c:?}"),
        }
    }

    fn skip_comment(&mut self) {
        if self.peek() == Some('#') {
            while self.peek().is_some_and(|c| c != '\n') {
                self.bump();
            }
        }
    }

    /// Spaces and tabs, plus newlines when `newlines` is set.
    fn skip_blank(&mut self, newlines: bool) {
        loop {
            match self.peek() {
                Some(' ' | '\t' | '\r') => {
                    self.bump();
                }
                Some('\n') if newlines => {
                    self.bump();
                }
                Some('#') => self.skip_comment(),
                _ => return,
            }
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {c:?}, found {}", self.found())))
        }
    }

    fn arrow(&mut self) -> Result<(), ParseError> {
        let at = self.mark();
        if self.peek() == Some('-') {
            self.bump();
            if self.peek() == Some('>') {
                self.bump();
                return Ok(());
            }
        }
        Err(self.error_at(at, format!("expected \"->\", found {}", self.found())))
    }

    fn word(&mut self) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek().filter(|c| c.is_alphanumeric() || *c == '_') {
            out.push(c);
            self.bump();
        }
        out
    }

    /// `{{a,b},{c}}`, with blanks and newlines allowed inside the braces.
    fn edge_set(&mut self) -> Result<Vec<Vec<String>>, ParseError> {
        self.expect('{')?;
        let mut edges = Vec::new();
        self.skip_blank(true);
        if self.peek() == Some('}') {
            self.bump();
            return Ok(edges);
        }
        loop {
            self.skip_blank(true);
            edges.push(self.edge()?);
            self.skip_blank(true);
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some('}') => {
                    self.bump();
                    return Ok(edges);
                }
                _ => return Err(self.error(format!("expected ',' or '}}', found {}", self.found()))),
            }
        }
    }

    fn edge(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect('{')?;
        let mut names = Vec::new();
        loop {
            self.skip_blank(true);
            let name = self.word();
            if name.is_empty() {
                return Err(self.error(format!("expected a vertex name, found {}", self.found())));
            }
            names.push(name);
            self.skip_blank(true);
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some('}') => {
                    self.bump();
                    return Ok(names);
                }
                _ => return Err(self.error(format!("expected ',' or '}}', found {}", self.found()))),
            }
        }
    }

    /// Consumes a rule separator, or checks for the end of input.
    fn separator(&mut self) -> Result<(), ParseError> {
        self.skip_blank(false);
        match self.peek() {
            None => Ok(()),
            Some(';' | '\n') => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error(format!("expected ';' or a new line, found {}", self.found()))),
        }
    }

    fn at_end(&mut self) -> bool {
        loop {
            self.skip_blank(true);
            if self.peek() == Some(';') {
                self.bump();
            } else {
                return self.peek().is_none();
            }
        }
    }
}

enum Parsed {
    Hypergraph(Rule),
    String(StringRule),
}

fn number_names(sides: [&[Vec<String>]; 2]) -> [Vec<Vec<u32>>; 2] {
    let mut ids: BTreeMap<&str, u32> = BTreeMap::new();
    sides.map(|side| {
        side.iter()
            .map(|e| {
                e.iter()
                    .map(|name| {
                        let next = ids.len() as u32;
                        *ids.entry(name.as_str()).or_insert(next)
                    })
                    .collect()
            })
            .collect()
    })
}

fn rule(c: &mut Cursor) -> Result<Parsed, ParseError> {
    let start = c.mark();
    if c.peek() == Some('{') {
        let lhs = c.edge_set()?;
        c.skip_blank(false);
        c.arrow()?;
        c.skip_blank(false);
        let rhs = c.edge_set()?;
        if lhs.is_empty() {
            return Err(c.error_at(start, "rule has an empty left side"));
        }
        let [l, r] = number_names([&lhs, &rhs]);
        return Rule::new(l, r).map(Parsed::Hypergraph).map_err(|e| c.error_at(start, e.to_string()));
    }
    let lhs = c.word();
    if lhs.is_empty() && c.peek() != Some('-') {
        return Err(c.error(format!("expected a rule, found {}", c.found())));
    }
    c.skip_blank(false);
    c.arrow()?;
    c.skip_blank(false);
    let rhs = c.word();
    if lhs.is_empty() {
        return Err(c.error_at(start, "rule has an empty left side"));
    }
    StringRule::new(&lhs, &rhs).map(Parsed::String).map_err(|e| c.error_at(start, e.to_string()))
}

/// Parses one or more rules, all hypergraph rules or all string rules.
pub fn parse_rules(text: &str) -> Result<RuleSet, ParseError> {
    let mut c = Cursor::new(text);
    let mut hyper = Vec::new();
    let mut strings = Vec::new();
    while !c.at_end() {
        let start = c.mark();
        match rule(&mut c)? {
            Parsed::Hypergraph(r) if strings.is_empty() => hyper.push(r),
            Parsed::String(r) if hyper.is_empty() => strings.push(r),
            _ => return Err(c.error_at(start, "hypergraph and string rules cannot be mixed")),
        }
        c.separator()?;
    }
    match (hyper.is_empty(), strings.is_empty()) {
        (false, _) => Ok(RuleSet::Hypergraph(hyper)),
        (_, false) => Ok(RuleSet::Strings(strings)),
        _ => Err(c.error("no rules given")),
    }
}

/// A hypergraph such as `{{0,1},{1,2}}`. Numeric names are kept as vertex
/// ids; otherwise names are numbered by first appearance.
pub fn parse_hypergraph(text: &str) -> Result<Hypergraph, ParseError> {
    let mut c = Cursor::new(text);
    c.skip_blank(true);
    let start = c.mark();
    let edges = c.edge_set()?;
    c.skip_blank(true);
    if c.peek().is_some() {
        return Err(c.error(format!("unexpected {} after the hypergraph", c.found())));
    }
    let numeric: Option<Vec<Vec<u64>>> =
        edges.iter().map(|e| e.iter().map(|n| n.parse().ok()).collect()).collect();
    let lists = numeric.unwrap_or_else(|| {
        let mut ids: BTreeMap<&str, u64> = BTreeMap::new();
        edges
            .iter()
            .map(|e| {
                e.iter()
                    .map(|n| {
                        let next = ids.len() as u64;
                        *ids.entry(n.as_str()).or_insert(next)
                    })
                    .collect()
            })
            .collect()
    });
    Hypergraph::from_edge_lists(lists).map_err(|e| c.error_at(start, e.to_string()))
}

/// A string state: letters, digits and `_`, surrounding blanks ignored.
pub fn parse_string_state(text: &str) -> Result<String, ParseError> {
    let mut c = Cursor::new(text);
    c.skip_blank(true);
    let s = c.word();
    c.skip_blank(true);
    if c.peek().is_some() {
        return Err(c.error(format!("unexpected {} in string state", c.found())));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hypergraph_rule_with_fresh_vertex() {
        let RuleSet::Hypergraph(rules) = parse_rules("{{x,y},{x,z}} -> {{x,z},{z,w}}").unwrap() else {
            panic!("expected a hypergraph rule");
        };
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].fresh_vars().len(), 1);
        assert_eq!(rules[0], Rule::new(vec![vec![0, 1], vec![0, 2]], vec![vec![0, 2], vec![2, 3]]).unwrap());
    }

    #[test]
    fn two_string_rules() {
        let parsed = parse_rules("AB -> A; BA -> B").unwrap();
        let want = vec![StringRule::new("AB", "A").unwrap(), StringRule::new("BA", "B").unwrap()];
        assert_eq!(parsed, RuleSet::Strings(want));
        assert_eq!(parse_rules("AB->A\n\n# comment\nBA->B\n").unwrap(), parsed);
    }

    #[test]
    fn unbalanced_braces() {
        let e = parse_rules("{{x,y} -> {{x}}").unwrap_err();
        assert_eq!((e.line, e.column), (1, 8));
    }

    #[test]
    fn error_positions_span_lines() {
        let e = parse_rules("A->B\nAB => A").unwrap_err();
        assert_eq!((e.line, e.column), (2, 4));
        let e = parse_rules("{{x}}->{{x}}\nA->B").unwrap_err();
        assert_eq!((e.line, e.column), (2, 1));
        assert!(e.message.contains("mixed"));
    }

    #[test]
    fn empty_sides() {
        assert!(parse_rules("{} -> {{x}}").unwrap_err().message.contains("empty left side"));
        assert!(parse_rules("-> A").unwrap_err().message.contains("empty left side"));
        assert!(parse_rules("  ").unwrap_err().message.contains("no rules"));
        assert!(parse_rules("{{}} -> {}").is_err());
        assert_eq!(parse_rules("AB ->").unwrap(), RuleSet::Strings(vec![StringRule::new("AB", "").unwrap()]));
    }

    #[test]
    fn rules_spanning_lines_inside_braces() {
        let r = parse_rules("{{x,y},\n {y,z}} -> {{x,z}}").unwrap();
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn states() {
        let h = parse_hypergraph("{{0,1},{1,2}}").unwrap();
        assert_eq!(h.edge_multiset(), vec![vec![0, 1], vec![1, 2]]);
        let h = parse_hypergraph(" {{a,b}, {b,a}} ").unwrap();
        assert_eq!(h.edge_multiset(), vec![vec![0, 1], vec![1, 0]]);
        assert!(parse_hypergraph("{{0,1}} x").is_err());
        assert_eq!(parse_string_state(" ABAAB\n").unwrap(), "ABAAB");
        assert!(parse_string_state("AB BA").is_err());
    }

    fn hyper_rule() -> impl Strategy<Value = Rule> {
        let edge = prop::collection::vec(0u32..6, 1..4);
        (prop::collection::vec(edge.clone(), 1..4), prop::collection::vec(edge, 0..4))
            .prop_map(|(l, r)| Rule::new(l, r).unwrap())
    }

    fn string_rule() -> impl Strategy<Value = StringRule> {
        ("[A-D]{1,4}", "[A-D]{0,4}").prop_map(|(l, r)| StringRule::new(&l, &r).unwrap())
    }

    proptest! {
        #[test]
        fn hypergraph_rules_round_trip(rules in prop::collection::vec(hyper_rule(), 1..4)) {
            let set = RuleSet::Hypergraph(rules);
            prop_assert_eq!(parse_rules(&set.to_string()).unwrap(), set);
        }

        #[test]
        fn string_rules_round_trip(rules in prop::collection::vec(string_rule(), 1..4)) {
            let set = RuleSet::Strings(rules);
            prop_assert_eq!(parse_rules(&set.to_string()).unwrap(), set);
        }

        #[test]
        fn var_names_beyond_the_alphabet_round_trip(n in 12u32..30) {
            let rule = Rule::new(vec![(0..n).collect()], vec![(0..=n).collect()]).unwrap();
            let set = RuleSet::Hypergraph(vec![rule]);
            prop_assert_eq!(parse_rules(&set.to_string()).unwrap(), set);
        }
    }
}
