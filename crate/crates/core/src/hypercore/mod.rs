//! Ordered hypergraphs, graph distance and canonical forms.

pub mod canon;
pub mod generators;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canon::{CanonicalKey, Labeling, Structure, canonize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub u64);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HypergraphError {
    #[error("vertex {0} is not in the hypergraph")]
    UnknownVertex(VertexId),
    #[error("hyperedge {index} has no vertices")]
    EmptyEdge { index: usize },
    #[error("edge id {0} appears twice")]
    DuplicateEdgeId(EdgeId),
    #[error("counter {name} is not above every id in use")]
    StaleCounter { name: &'static str },
    #[error("invalid hypergraph json: {0}")]
    Json(String),
}

/// An ordered hyperedge. Two hyperedges with the same vertex sequence are
/// still distinct objects, told apart by `id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hyperedge {
    pub id: EdgeId,
    pub vertices: Vec<VertexId>,
    pub creator: Option<EventId>,
}

/// A finite multiset of ordered hyperedges together with the counters used to
/// mint fresh vertex, edge and event ids.
///
/// The vertex set is the union of the vertices of the edges.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Hypergraph {
    edges: Vec<Hyperedge>,
    next_vertex: u64,
    next_edge: u64,
    next_event: u64,
}

#[derive(Serialize, Deserialize)]
struct PlainJson {
    edges: Vec<Vec<u64>>,
}

/// Graph distance; `Infinite` when no path exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    Finite(u32),
    Infinite,
}

impl Distance {
    fn from_raw(d: u32) -> Self {
        if d == UNREACHED { Distance::Infinite } else { Distance::Finite(d) }
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => f.write_str("inf"),
        }
    }
}

pub(crate) const UNREACHED: u32 = u32::MAX;

impl Hypergraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a hypergraph from vertex sequences. Edge ids follow list order.
    pub fn from_edge_lists<I, E>(lists: I) -> Result<Self, HypergraphError>
    where
        I: IntoIterator<Item = E>,
        E: AsRef<[u64]>,
    {
        let mut edges = Vec::new();
        let mut next_vertex = 0;
        for (index, list) in lists.into_iter().enumerate() {
            let list = list.as_ref();
            if list.is_empty() {
                return Err(HypergraphError::EmptyEdge { index });
            }
            next_vertex = next_vertex.max(list.iter().max().unwrap() + 1);
            edges.push(Hyperedge {
                id: EdgeId(index as u64),
                vertices: list.iter().copied().map(VertexId).collect(),
                creator: None,
            });
        }
        let next_edge = edges.len() as u64;
        Ok(Self { edges, next_vertex, next_edge, next_event: 0 })
    }

    /// Assembles a hypergraph from explicit edges and counters, checking that
    /// ids are unique and that every counter is fresh.
    pub fn from_parts(
        edges: Vec<Hyperedge>,
        next_vertex: u64,
        next_edge: u64,
        next_event: u64,
    ) -> Result<Self, HypergraphError> {
        let mut seen = BTreeSet::new();
        for (index, e) in edges.iter().enumerate() {
            if e.vertices.is_empty() {
                return Err(HypergraphError::EmptyEdge { index });
            }
            if !seen.insert(e.id) {
                return Err(HypergraphError::DuplicateEdgeId(e.id));
            }
            if e.id.0 >= next_edge {
                return Err(HypergraphError::StaleCounter { name: "next_edge" });
            }
            if e.vertices.iter().any(|v| v.0 >= next_vertex) {
                return Err(HypergraphError::StaleCounter { name: "next_vertex" });
            }
            if e.creator.is_some_and(|c| c.0 >= next_event) {
                return Err(HypergraphError::StaleCounter { name: "next_event" });
            }
        }
        Ok(Self { edges, next_vertex, next_edge, next_event })
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Hyperedge> {
        self.edges.iter().find(|e| e.id == id)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_ids(&self) -> Vec<EdgeId> {
        self.edges.iter().map(|e| e.id).collect()
    }

    pub fn vertices(&self) -> BTreeSet<VertexId> {
        self.edges.iter().flat_map(|e| e.vertices.iter().copied()).collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices().len()
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.edges.iter().any(|e| e.vertices.contains(&v))
    }

    pub fn next_vertex(&self) -> u64 {
        self.next_vertex
    }

    pub fn next_edge(&self) -> u64 {
        self.next_edge
    }

    pub fn next_event(&self) -> u64 {
        self.next_event
    }

    /// Vertex sequences sorted lexicographically; equal for hypergraphs that
    /// differ only in edge ids, order and provenance.
    pub fn edge_multiset(&self) -> Vec<Vec<u64>> {
        let mut out: Vec<Vec<u64>> = self
            .edges
            .iter()
            .map(|e| e.vertices.iter().map(|v| v.0).collect())
            .collect();
        out.sort();
        out
    }

    /// Compact `{"edges":[[...],...]}` text. Parsing it back and writing it
    /// again yields the same bytes.
    pub fn to_json(&self) -> String {
        let plain = PlainJson {
            edges: self.edges.iter().map(|e| e.vertices.iter().map(|v| v.0).collect()).collect(),
        };
        serde_json::to_string(&plain).expect("plain hypergraph json is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, HypergraphError> {
        let plain: PlainJson =
            serde_json::from_str(text).map_err(|e| HypergraphError::Json(e.to_string()))?;
        Self::from_edge_lists(plain.edges)
    }

    /// Undirected skeleton: two vertices are adjacent when some hyperedge
    /// contains both.
    pub fn adjacency(&self) -> Adjacency {
        let mut arcs = Vec::new();
        for e in &self.edges {
            for (i, &a) in e.vertices.iter().enumerate() {
                for &b in &e.vertices[i + 1..] {
                    arcs.push((a, b));
                }
            }
        }
        Adjacency::from_arcs(self.vertices(), arcs, true)
    }

    /// Directed skeleton: every vertex of a hyperedge except the last points
    /// at the last one.
    pub fn directed_adjacency(&self) -> Adjacency {
        let mut arcs = Vec::new();
        for e in &self.edges {
            if let Some((&head, tail)) = e.vertices.split_last() {
                arcs.extend(tail.iter().map(|&t| (t, head)));
            }
        }
        Adjacency::from_arcs(self.vertices(), arcs, false)
    }

    pub fn distance(&self, x: VertexId, y: VertexId) -> Result<Distance, HypergraphError> {
        self.adjacency().distance(x, y)
    }

    pub fn directed_distance(&self, x: VertexId, y: VertexId) -> Result<Distance, HypergraphError> {
        self.directed_adjacency().distance(x, y)
    }

    pub fn ball(&self, x: VertexId, r: u32) -> Result<BTreeSet<VertexId>, HypergraphError> {
        let adj = self.adjacency();
        let dist = adj.bfs_from(x, Some(r))?;
        Ok(adj.collect(&dist, |d| d <= r))
    }

    pub fn sphere(&self, x: VertexId, r: u32) -> Result<BTreeSet<VertexId>, HypergraphError> {
        let adj = self.adjacency();
        let dist = adj.bfs_from(x, Some(r))?;
        Ok(adj.collect(&dist, |d| d == r))
    }

    /// `|B_r(x)|` for `r = 0..=r_max`.
    pub fn ball_counts(&self, x: VertexId, r_max: u32) -> Result<Vec<u64>, HypergraphError> {
        self.adjacency().ball_counts(x, r_max)
    }

    fn structure(&self) -> (Structure, Vec<VertexId>) {
        let ids: Vec<VertexId> = self.vertices().into_iter().collect();
        let index: HashMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut s = Structure::new(vec![0; ids.len()]);
        for e in &self.edges {
            s.add_tuple(0, e.vertices.iter().map(|v| index[v]).collect());
        }
        (s, ids)
    }

    /// Isomorphism-invariant key: equal exactly when the hypergraphs are
    /// isomorphic as multisets of ordered hyperedges.
    pub fn canonical_form(&self) -> CanonicalKey {
        canonize(&self.structure().0).key
    }

    /// Canonical key and the vertex relabeling onto `0..n` that realizes it.
    pub fn canonical_labeling(&self) -> (CanonicalKey, BTreeMap<VertexId, VertexId>) {
        let (s, ids) = self.structure();
        let lab = canonize(&s);
        let map = ids
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, VertexId(lab.label[i] as u64)))
            .collect();
        (lab.key, map)
    }

    /// The canonical representative of the isomorphism class: vertices
    /// `0..n`, edges sorted, edge ids `0..m`, no provenance.
    pub fn canonical_representative(&self) -> (CanonicalKey, Hypergraph) {
        let (key, map) = self.canonical_labeling();
        let mut lists: Vec<Vec<u64>> = self
            .edges
            .iter()
            .map(|e| e.vertices.iter().map(|v| map[v].0).collect())
            .collect();
        lists.sort();
        let rep = Hypergraph::from_edge_lists(lists).expect("edges of a valid hypergraph are nonempty");
        (key, rep)
    }

    /// Applies a vertex renaming. Vertices missing from `map` keep their id.
    pub fn relabel(&self, map: &BTreeMap<VertexId, VertexId>) -> Hypergraph {
        let edges: Vec<Hyperedge> = self
            .edges
            .iter()
            .map(|e| Hyperedge {
                id: e.id,
                vertices: e.vertices.iter().map(|v| *map.get(v).unwrap_or(v)).collect(),
                creator: e.creator,
            })
            .collect();
        let next_vertex = edges
            .iter()
            .flat_map(|e| e.vertices.iter().map(|v| v.0 + 1))
            .max()
            .unwrap_or(0)
            .max(self.next_vertex);
        Hypergraph { edges, next_vertex, next_edge: self.next_edge, next_event: self.next_event }
    }
}

/// Adjacency lists over a fixed vertex set, indexed `0..n` in ascending id order.
#[derive(Debug, Clone)]
pub struct Adjacency {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    out: Vec<Vec<usize>>,
}

impl Adjacency {
    /// Self loops are dropped and parallel arcs merged. With `symmetric` every
    /// arc is also added in reverse.
    pub fn from_arcs<V, A>(vertices: V, arcs: A, symmetric: bool) -> Self
    where
        V: IntoIterator<Item = VertexId>,
        A: IntoIterator<Item = (VertexId, VertexId)>,
    {
        let mut ids: Vec<VertexId> = vertices.into_iter().collect();
        let arcs: Vec<(VertexId, VertexId)> = arcs.into_iter().collect();
        ids.extend(arcs.iter().flat_map(|&(a, b)| [a, b]));
        ids.sort();
        ids.dedup();
        let index: HashMap<VertexId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut out = vec![Vec::new(); ids.len()];
        for (a, b) in arcs {
            if a == b {
                continue;
            }
            let (i, j) = (index[&a], index[&b]);
            out[i].push(j);
            if symmetric {
                out[j].push(i);
            }
        }
        for list in &mut out {
            list.sort_unstable();
            list.dedup();
        }
        Self { ids, index, out }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> VertexId {
        self.ids[i]
    }

    pub fn index_of(&self, v: VertexId) -> Result<usize, HypergraphError> {
        self.index.get(&v).copied().ok_or(HypergraphError::UnknownVertex(v))
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn neighbor_ids(&self, v: VertexId) -> Result<Vec<VertexId>, HypergraphError> {
        let i = self.index_of(v)?;
        Ok(self.out[i].iter().map(|&j| self.ids[j]).collect())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    /// Hop distances from `src`; unreached entries hold `u32::MAX`. With a
    /// cutoff the search stops expanding at that depth.
    pub fn bfs(&self, src: usize, cutoff: Option<u32>) -> Vec<u32> {
        let mut dist = vec![UNREACHED; self.ids.len()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            if cutoff.is_some_and(|c| dist[u] >= c) {
                continue;
            }
            for &w in &self.out[u] {
                if dist[w] == UNREACHED {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn bfs_from(&self, v: VertexId, cutoff: Option<u32>) -> Result<Vec<u32>, HypergraphError> {
        Ok(self.bfs(self.index_of(v)?, cutoff))
    }

    pub fn distance(&self, x: VertexId, y: VertexId) -> Result<Distance, HypergraphError> {
        let j = self.index_of(y)?;
        Ok(Distance::from_raw(self.bfs_from(x, None)?[j]))
    }

    pub fn ball_counts(&self, x: VertexId, r_max: u32) -> Result<Vec<u64>, HypergraphError> {
        let dist = self.bfs_from(x, Some(r_max))?;
        let mut counts = vec![0u64; r_max as usize + 1];
        for d in dist.into_iter().filter(|&d| d <= r_max) {
            counts[d as usize] += 1;
        }
        for r in 1..counts.len() {
            counts[r] += counts[r - 1];
        }
        Ok(counts)
    }

    fn collect(&self, dist: &[u32], keep: impl Fn(u32) -> bool) -> BTreeSet<VertexId> {
        dist.iter()
            .enumerate()
            .filter(|&(_, &d)| d != UNREACHED && keep(d))
            .map(|(i, _)| self.ids[i])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(lists: &[&[u64]]) -> Hypergraph {
        Hypergraph::from_edge_lists(lists.iter().map(|l| l.to_vec())).unwrap()
    }

    #[test]
    fn vertex_set_and_counters() {
        let g = h(&[&[0, 1], &[1, 2, 5]]);
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.next_vertex(), 6);
        assert_eq!(g.next_edge(), 2);
        assert!(g.contains_vertex(VertexId(5)));
        assert!(!g.contains_vertex(VertexId(3)));
    }

    #[test]
    fn empty_edge_rejected() {
        let err = Hypergraph::from_edge_lists(vec![vec![0u64], vec![]]).unwrap_err();
        assert_eq!(err, HypergraphError::EmptyEdge { index: 1 });
    }

    #[test]
    fn undirected_distances() {
        let g = h(&[&[0, 1], &[1, 2, 3], &[4, 4]]);
        assert_eq!(g.distance(VertexId(0), VertexId(3)).unwrap(), Distance::Finite(2));
        assert_eq!(g.distance(VertexId(0), VertexId(4)).unwrap(), Distance::Infinite);
        assert_eq!(
            g.distance(VertexId(0), VertexId(9)),
            Err(HypergraphError::UnknownVertex(VertexId(9)))
        );
        assert_eq!(g.ball_counts(VertexId(0), 3).unwrap(), vec![1, 2, 4, 4]);
        assert_eq!(g.sphere(VertexId(1), 1).unwrap().len(), 3);
    }

    #[test]
    fn directed_distance_follows_tail_to_head() {
        let g = h(&[&[0, 1], &[1, 2, 3]]);
        assert_eq!(g.directed_distance(VertexId(0), VertexId(3)).unwrap(), Distance::Finite(2));
        assert_eq!(g.directed_distance(VertexId(3), VertexId(0)).unwrap(), Distance::Infinite);
        assert_eq!(g.directed_distance(VertexId(0), VertexId(2)).unwrap(), Distance::Infinite);
    }

    #[test]
    fn duplicate_edges_count_in_canonical_form() {
        let once = h(&[&[0, 1]]);
        let twice = h(&[&[0, 1], &[0, 1]]);
        assert_ne!(once.canonical_form(), twice.canonical_form());
    }

    #[test]
    fn edge_order_within_hyperedge_matters() {
        let a = h(&[&[0, 1], &[1, 2]]);
        let b = h(&[&[0, 1], &[2, 1]]);
        assert_ne!(a.canonical_form(), b.canonical_form());
        let c = h(&[&[5, 7], &[7, 3]]);
        assert_eq!(a.canonical_form(), c.canonical_form());
    }

    #[test]
    fn from_parts_checks_counters() {
        let e = Hyperedge { id: EdgeId(3), vertices: vec![VertexId(0)], creator: None };
        assert!(Hypergraph::from_parts(vec![e.clone()], 1, 3, 0).is_err());
        assert!(Hypergraph::from_parts(vec![e], 1, 4, 0).is_ok());
    }

    fn arb_hypergraph() -> impl Strategy<Value = Hypergraph> {
        prop::collection::vec(prop::collection::vec(0u64..7, 1..4), 0..8)
            .prop_map(|lists| Hypergraph::from_edge_lists(lists).unwrap())
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_identical(g in arb_hypergraph()) {
            let text = g.to_json();
            let back = Hypergraph::from_json(&text).unwrap();
            prop_assert_eq!(back.to_json(), text);
            prop_assert_eq!(back.edge_multiset(), g.edge_multiset());
        }

        #[test]
        fn canonical_form_ignores_relabeling(g in arb_hypergraph(), seed in any::<u64>()) {
            let mut targets: Vec<u64> = (100..107).collect();
            let mut s = seed;
            for i in (1..targets.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                targets.swap(i, (s >> 33) as usize % (i + 1));
            }
            let map: BTreeMap<VertexId, VertexId> =
                (0..7).map(|i| (VertexId(i), VertexId(targets[i as usize]))).collect();
            prop_assert_eq!(g.relabel(&map).canonical_form(), g.canonical_form());
        }

        #[test]
        fn representative_has_same_key(g in arb_hypergraph()) {
            let (key, rep) = g.canonical_representative();
            prop_assert_eq!(rep.canonical_form(), key);
        }

        #[test]
        fn triangle_inequality(g in arb_hypergraph()) {
            let vs: Vec<VertexId> = g.vertices().into_iter().collect();
            let adj = g.adjacency();
            for &a in &vs {
                for &b in &vs {
                    for &c in &vs {
                        if let (Distance::Finite(ab), Distance::Finite(bc)) =
                            (adj.distance(a, b).unwrap(), adj.distance(b, c).unwrap())
                        {
                            let ac = adj.distance(a, c).unwrap().finite().unwrap();
                            prop_assert!(ac <= ab + bc);
                        }
                    }
                }
            }
        }
    }
}
