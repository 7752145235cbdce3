//! Curvature of directed hyperedges.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use super::{Curvature, DiscreteMeasure, Mass, Solver, TransportError, wasserstein1_on};
use crate::Scalar;
use crate::hypercore::{Adjacency, Hypergraph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectedEdge {
    pub tail: Vec<VertexId>,
    pub head: Vec<VertexId>,
}

/// Hyperedges as (tail set, head set) pairs, addressed by position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DirectedHypergraph {
    edges: Vec<DirectedEdge>,
}

fn as_set(mut vs: Vec<VertexId>) -> Vec<VertexId> {
    vs.sort();
    vs.dedup();
    vs
}

impl DirectedHypergraph {
    pub fn new<I, T, H>(edges: I) -> Self
    where
        I: IntoIterator<Item = (T, H)>,
        T: IntoIterator<Item = u64>,
        H: IntoIterator<Item = u64>,
    {
        let edges = edges
            .into_iter()
            .map(|(t, h)| DirectedEdge {
                tail: as_set(t.into_iter().map(VertexId).collect()),
                head: as_set(h.into_iter().map(VertexId).collect()),
            })
            .collect();
        Self { edges }
    }

    /// Reads each ordered hyperedge as all-but-last vertices pointing at the
    /// last vertex. A single-vertex hyperedge gets an empty tail.
    pub fn split(h: &Hypergraph) -> Self {
        let edges = h
            .edges()
            .iter()
            .map(|e| {
                let (last, rest) = e.vertices.split_last().expect("hyperedges are nonempty");
                DirectedEdge { tail: as_set(rest.to_vec()), head: vec![*last] }
            })
            .collect();
        Self { edges }
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    /// Hop metric where one step goes from any tail vertex to any head vertex.
    pub fn adjacency(&self) -> Adjacency {
        let vertices = self.edges.iter().flat_map(|e| e.tail.iter().chain(&e.head).copied());
        let arcs = self
            .edges
            .iter()
            .flat_map(|e| e.tail.iter().flat_map(move |&t| e.head.iter().map(move |&h| (t, h))));
        Adjacency::from_arcs(vertices.collect::<Vec<_>>(), arcs.collect::<Vec<_>>(), false)
    }
}

/// The incoming measure of the tail and the outgoing measure of the head of
/// edge `index`.
pub fn hyperedge_measures(
    g: &DirectedHypergraph,
    index: usize,
) -> Result<(DiscreteMeasure, DiscreteMeasure), TransportError> {
    let e = g.edges.get(index).ok_or(TransportError::UnknownEdge(index))?;
    if e.tail.is_empty() || e.head.is_empty() {
        return Err(TransportError::EmptySide(index));
    }
    let incoming = side_measure(g, &e.tail, |f| &f.head, |f| &f.tail)?;
    let outgoing = side_measure(g, &e.head, |f| &f.tail, |f| &f.head)?;
    Ok((incoming, outgoing))
}

/// For each vertex `x` of `side`, spreads `1/n` over the far ends of the
/// hyperedges touching `x` through `near`, or keeps it at `x` when there are
/// none.
fn side_measure(
    g: &DirectedHypergraph,
    side: &[VertexId],
    near: impl Fn(&DirectedEdge) -> &Vec<VertexId>,
    far: impl Fn(&DirectedEdge) -> &Vec<VertexId>,
) -> Result<DiscreteMeasure, TransportError> {
    let n = side.len() as i128;
    let mut mass: BTreeMap<VertexId, Mass> = BTreeMap::new();
    for &x in side {
        let touching: Vec<(usize, &DirectedEdge)> =
            g.edges.iter().enumerate().filter(|(_, f)| near(f).binary_search(&x).is_ok()).collect();
        if touching.is_empty() {
            *mass.entry(x).or_insert_with(Mass::zero) += Mass::new(1, n);
            continue;
        }
        let d = touching.len() as i128;
        for (i, f) in touching {
            let ends = far(f);
            if ends.binary_search(&x).is_ok() {
                return Err(TransportError::MassLoss { edge: i, vertex: x });
            }
            let share = Mass::new(1, n * d * ends.len() as i128);
            for &z in ends {
                *mass.entry(z).or_insert_with(Mass::zero) += share;
            }
        }
    }
    DiscreteMeasure::new(mass)
}

/// `1 - W1` between the incoming and outgoing measures of edge `index`,
/// with distances counted in directed hyperedge steps.
pub fn ollivier_ricci_hyperedge(g: &DirectedHypergraph, index: usize) -> Result<Curvature, TransportError> {
    let (a, b) = hyperedge_measures(g, index)?;
    let w = wasserstein1_on(&g.adjacency(), &a, &b, Solver::Auto)?;
    let kappa = match w.cost {
        Scalar::Exact(c) => Scalar::Exact(Mass::one() - c),
        Scalar::Approx(c) => Scalar::Approx(1.0 - c),
    };
    Ok(Curvature { kappa, distance: 1, transport_cost: w.cost })
}
