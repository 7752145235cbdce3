//! Planarity of the clique skeleton and Kuratowski witnesses.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::graph::UnGraph;
use serde::Serialize;

use crate::hypercore::{Adjacency, VertexId};

type Edge = (VertexId, VertexId);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KuratowskiKind {
    K5,
    K33,
}

/// Edge set of a subdivided K5 or K3,3, each edge as `(smaller, larger)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub kind: KuratowskiKind,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TangleReport {
    pub planar: bool,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TangleCount {
    pub count: usize,
    pub witnesses: Vec<Witness>,
}

fn skeleton_edges(adj: &Adjacency) -> Vec<Edge> {
    (0..adj.len())
        .flat_map(|i| adj.neighbors(i).iter().filter(move |&&j| j > i).map(move |&j| (adj.id(i), adj.id(j))))
        .collect()
}

fn planar_edges(edges: &[Edge]) -> bool {
    let mut index: BTreeMap<VertexId, u32> = BTreeMap::new();
    for &(a, b) in edges {
        for v in [a, b] {
            let next = index.len() as u32;
            index.entry(v).or_insert(next);
        }
    }
    let g = UnGraph::<(), ()>::from_edges(edges.iter().map(|(a, b)| (index[a], index[b])));
    rustworkx_core::planar::is_planar(&g)
}

/// Drops every edge whose removal keeps the graph nonplanar. What remains
/// is edge-minimal nonplanar, hence a Kuratowski subdivision.
fn extract_witness(edges: &[Edge]) -> Option<Witness> {
    let mut kept: Vec<Edge> = edges.to_vec();
    let mut i = 0;
    while i < kept.len() {
        let e = kept.remove(i);
        if planar_edges(&kept) {
            kept.insert(i, e);
            i += 1;
        }
    }
    let kind = verify_witness(&kept)?;
    Some(Witness { kind, edges: kept })
}

pub fn is_planar(adj: &Adjacency) -> TangleReport {
    let edges = skeleton_edges(adj);
    if planar_edges(&edges) {
        return TangleReport { planar: true, witnesses: Vec::new() };
    }
    let witness = extract_witness(&edges).expect("an edge-minimal nonplanar graph is a Kuratowski subdivision");
    TangleReport { planar: false, witnesses: vec![witness] }
}

/// Repeatedly extracts a witness and deletes its edges until the rest is
/// planar. The count is a lower bound on edge-disjoint tangles.
pub fn count_tangles(adj: &Adjacency) -> TangleCount {
    let mut edges = skeleton_edges(adj);
    let mut witnesses = Vec::new();
    while !planar_edges(&edges) {
        let w = extract_witness(&edges).expect("an edge-minimal nonplanar graph is a Kuratowski subdivision");
        let used: BTreeSet<Edge> = w.edges.iter().copied().collect();
        edges.retain(|e| !used.contains(e));
        witnesses.push(w);
    }
    TangleCount { count: witnesses.len(), witnesses }
}

/// Checks that `edges` form a subdivision of K5 or K3,3 by suppressing
/// degree-two vertices and inspecting what is left.
pub fn verify_witness(edges: &[Edge]) -> Option<KuratowskiKind> {
    let mut nbrs: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for &(a, b) in edges {
        let key = (a.min(b), a.max(b));
        if a == b || !seen.insert(key) {
            return None;
        }
        nbrs.entry(a).or_default().push(b);
        nbrs.entry(b).or_default().push(a);
    }
    if nbrs.values().any(|n| n.len() < 2) {
        return None;
    }
    let branch: BTreeSet<VertexId> = nbrs.iter().filter(|(_, n)| n.len() > 2).map(|(&v, _)| v).collect();
    // Walk from each branch vertex through degree-two vertices; every path
    // is met once from each end.
    let mut found: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
    let mut inner: BTreeSet<VertexId> = BTreeSet::new();
    for &b in &branch {
        for &first in &nbrs[&b] {
            let (mut prev, mut at) = (b, first);
            while !branch.contains(&at) {
                inner.insert(at);
                let n = &nbrs[&at];
                let next = if n[0] == prev { n[1] } else { n[0] };
                prev = at;
                at = next;
            }
            if at == b {
                return None;
            }
            *found.entry((b.min(at), b.max(at))).or_default() += 1;
        }
    }
    if inner.len() + branch.len() != nbrs.len() || found.values().any(|&c| c != 2) {
        return None;
    }
    let links: BTreeSet<(VertexId, VertexId)> = found.into_keys().collect();
    let degree: BTreeMap<VertexId, usize> = branch.iter().map(|&v| (v, nbrs[&v].len())).collect();
    match (branch.len(), links.len()) {
        (5, 10) if degree.values().all(|&d| d == 4) => Some(KuratowskiKind::K5),
        (6, 9) if degree.values().all(|&d| d == 3) => {
            let start = *branch.first().expect("six branch vertices");
            let side: BTreeSet<VertexId> = links
                .iter()
                .filter_map(|&(a, b)| (a == start).then_some(b).or((b == start).then_some(a)))
                .collect();
            let other: BTreeSet<VertexId> = branch.difference(&side).copied().collect();
            let crossing = links.iter().all(|(a, b)| side.contains(a) != side.contains(b));
            (side.len() == 3 && other.len() == 3 && crossing).then_some(KuratowskiKind::K33)
        }
        _ => None,
    }
}

/// DOT of the skeleton with witness edges drawn in red.
pub fn tangle_dot(adj: &Adjacency, witnesses: &[Witness]) -> String {
    let marked: BTreeSet<Edge> = witnesses.iter().flat_map(|w| w.edges.iter().copied()).collect();
    let mut out = String::from("graph skeleton {\n");
    for v in adj.ids() {
        out.push_str(&format!("  {v};\n"));
    }
    for e in skeleton_edges(adj) {
        let style = if marked.contains(&e) { " [color=red, penwidth=2]" } else { "" };
        out.push_str(&format!("  {} -- {}{style};\n", e.0, e.1));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercore::{Hypergraph, generators};
    use proptest::prelude::*;

    fn subdivide(h: &Hypergraph) -> Hypergraph {
        let mut lists = Vec::new();
        for (next, e) in (h.next_vertex()..).zip(h.edges()) {
            lists.push(vec![e.vertices[0].0, next]);
            lists.push(vec![next, e.vertices[1].0]);
        }
        Hypergraph::from_edge_lists(lists).unwrap()
    }

    #[test]
    fn small_cases() {
        assert!(is_planar(&generators::complete(4).adjacency()).planar);
        let k5 = is_planar(&generators::complete(5).adjacency());
        assert!(!k5.planar);
        assert_eq!(k5.witnesses[0].kind, KuratowskiKind::K5);
        assert_eq!(k5.witnesses[0].edges.len(), 10);
        let k33 = is_planar(&generators::complete_bipartite(3, 3).adjacency());
        assert_eq!(k33.witnesses[0].kind, KuratowskiKind::K33);
    }

    #[test]
    fn subdivisions_are_recognized() {
        let s = subdivide(&generators::complete_bipartite(3, 3));
        let r = is_planar(&s.adjacency());
        assert_eq!(r.witnesses[0].kind, KuratowskiKind::K33);
        assert_eq!(r.witnesses[0].edges.len(), 18);
    }

    #[test]
    fn petersen_contains_k33() {
        let outer = (0..5u64).map(|i| vec![i, (i + 1) % 5]);
        let spokes = (0..5u64).map(|i| vec![i, i + 5]);
        let inner = (0..5u64).map(|i| vec![i + 5, (i + 2) % 5 + 5]);
        let h = Hypergraph::from_edge_lists(outer.chain(spokes).chain(inner)).unwrap();
        let r = is_planar(&h.adjacency());
        assert!(!r.planar);
        assert_eq!(r.witnesses[0].kind, KuratowskiKind::K33);
    }

    #[test]
    fn verifier_rejects_non_witnesses() {
        let edges = |h: Hypergraph| skeleton_edges(&h.adjacency());
        assert_eq!(verify_witness(&edges(generators::complete(4))), None);
        assert_eq!(verify_witness(&edges(generators::cycle(7))), None);
        assert_eq!(verify_witness(&edges(generators::complete_bipartite(2, 4))), None);
        let mut k5_plus = edges(generators::complete(5));
        k5_plus.push((VertexId(0), VertexId(9)));
        assert_eq!(verify_witness(&k5_plus), None);
        // K3,3 with one side's edge added is no longer a bare subdivision.
        let mut k33 = edges(generators::complete_bipartite(3, 3));
        k33.push((VertexId(0), VertexId(1)));
        assert_eq!(verify_witness(&k33), None);
    }

    #[test]
    fn two_k5_components() {
        let mut lists: Vec<Vec<u64>> = Vec::new();
        for base in [0u64, 10] {
            for a in 0..5 {
                for b in a + 1..5 {
                    lists.push(vec![base + a, base + b]);
                }
            }
        }
        let adj = Hypergraph::from_edge_lists(lists).unwrap().adjacency();
        let c = count_tangles(&adj);
        assert_eq!(c.count, 2);
        assert!(c.witnesses.iter().all(|w| verify_witness(&w.edges) == Some(KuratowskiKind::K5)));
        assert!(tangle_dot(&adj, &c.witnesses).contains("0 -- 1 [color=red"));
    }

    #[test]
    fn hyperedges_expand_to_cliques() {
        let h = Hypergraph::from_edge_lists([vec![0u64, 1, 2, 3, 4]]).unwrap();
        assert!(!is_planar(&h.adjacency()).planar);
        assert!(count_tangles(&generators::triangular_torus(3, 3).adjacency()).count > 0);
    }

    #[test]
    fn planar_meshes_have_no_tangles() {
        assert_eq!(count_tangles(&generators::geodesic_sphere(2).adjacency()).count, 0);
        assert_eq!(count_tangles(&generators::grid(6, 6).adjacency()).count, 0);
    }

    /// Stacked triangulation: each new vertex lands in an existing face.
    fn stacked(choices: &[usize]) -> Hypergraph {
        let mut faces = vec![[0u64, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
        let mut lists: Vec<Vec<u64>> = vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]];
        for (k, &c) in choices.iter().enumerate() {
            let v = 4 + k as u64;
            let [a, b, d] = faces.swap_remove(c % faces.len());
            lists.extend([vec![a, v], vec![b, v], vec![d, v]]);
            faces.extend([[a, b, v], [a, d, v], [b, d, v]]);
        }
        Hypergraph::from_edge_lists(lists).unwrap()
    }

    proptest! {
        #[test]
        fn stacked_triangulations_are_planar(choices in proptest::collection::vec(any::<usize>(), 0..60)) {
            let adj = stacked(&choices).adjacency();
            prop_assert!(is_planar(&adj).planar);
            prop_assert_eq!(count_tangles(&adj).count, 0);
        }

        #[test]
        fn witnesses_verify_and_leave_a_planar_rest(
            n in 5u64..10,
            pairs in proptest::collection::vec((0u64..10, 0u64..10), 8..40),
        ) {
            let lists: Vec<Vec<u64>> = pairs.into_iter().filter(|(a, b)| a != b && *a < n && *b < n).map(|(a, b)| vec![a, b]).collect();
            prop_assume!(!lists.is_empty());
            let adj = Hypergraph::from_edge_lists(lists).unwrap().adjacency();
            let report = is_planar(&adj);
            prop_assert_eq!(report.planar, report.witnesses.is_empty());
            let c = count_tangles(&adj);
            let mut rest = skeleton_edges(&adj);
            for w in &c.witnesses {
                prop_assert_eq!(verify_witness(&w.edges), Some(w.kind));
                prop_assert!(!planar_edges(&w.edges));
                rest.retain(|e| !w.edges.contains(e));
            }
            prop_assert!(planar_edges(&rest));
        }
    }
}
