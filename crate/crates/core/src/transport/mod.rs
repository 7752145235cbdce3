//! Discrete probability measures on hypergraph vertices, 1-Wasserstein
//! distances and the curvatures built from them.

mod flow;
pub mod hyperedge;
pub mod sectional;

use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::Scalar;
use crate::hypercore::{Adjacency, Hypergraph, HypergraphError, UNREACHED, VertexId};

pub use hyperedge::{DirectedEdge, DirectedHypergraph, hyperedge_measures, ollivier_ricci_hyperedge};
pub use sectional::{
    SectionalCurvature, TransportMap, parallel_transport, ricci_direction, sectional_curvature,
};

pub type Mass = Ratio<i128>;

/// Supports above this size are solved in floating point under `Solver::Auto`.
pub const EXACT_SUPPORT_LIMIT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("mass {mass} at vertex {vertex} is negative")]
    NegativeMass { vertex: VertexId, mass: Mass },
    #[error("masses sum to {0}, not 1")]
    NotNormalized(Mass),
    #[error("no finite path from {from} to {to}")]
    Infeasible { from: VertexId, to: VertexId },
    #[error("curvature needs two distinct points, got {0} twice")]
    SamePoint(VertexId),
    #[error("{0} is not a neighbor of {1}")]
    NotNeighbor(VertexId, VertexId),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("hyperedge {0} has an empty tail or head")]
    EmptySide(usize),
    #[error("hyperedge {edge} feeds vertex {vertex} back into itself")]
    MassLoss { edge: usize, vertex: VertexId },
    #[error("no hyperedge with index {0}")]
    UnknownEdge(usize),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

/// Probability measure with finite support and rational masses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteMeasure {
    support: Vec<VertexId>,
    mass: Vec<Mass>,
}

impl DiscreteMeasure {
    /// Repeated vertices are merged and zero masses dropped.
    pub fn new<I: IntoIterator<Item = (VertexId, Mass)>>(points: I) -> Result<Self, TransportError> {
        let mut merged: BTreeMap<VertexId, Mass> = BTreeMap::new();
        for (v, m) in points {
            if m.is_negative() {
                return Err(TransportError::NegativeMass { vertex: v, mass: m });
            }
            *merged.entry(v).or_insert_with(Mass::zero) += m;
        }
        merged.retain(|_, m| !m.is_zero());
        let total: Mass = merged.values().sum();
        if total != Mass::one() {
            return Err(TransportError::NotNormalized(total));
        }
        let (support, mass) = merged.into_iter().unzip();
        Ok(Self { support, mass })
    }

    pub fn dirac(v: VertexId) -> Self {
        Self { support: vec![v], mass: vec![Mass::one()] }
    }

    /// Equal mass on each distinct vertex. Panics on an empty set.
    pub fn uniform<I: IntoIterator<Item = VertexId>>(vertices: I) -> Self {
        let mut support: Vec<VertexId> = vertices.into_iter().collect();
        support.sort();
        support.dedup();
        assert!(!support.is_empty(), "uniform measure on an empty set");
        let m = Mass::new(1, support.len() as i128);
        Self { mass: vec![m; support.len()], support }
    }

    pub fn support(&self) -> &[VertexId] {
        &self.support
    }

    pub fn mass(&self, v: VertexId) -> Mass {
        self.support.binary_search(&v).map(|i| self.mass[i]).unwrap_or_else(|_| Mass::zero())
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, Mass)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingEntry {
    pub from: VertexId,
    pub to: VertexId,
    pub mass: Scalar,
}

/// Transport plan; entries sorted by `(from, to)` with zero entries omitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Coupling {
    entries: Vec<CouplingEntry>,
}

impl Coupling {
    pub fn entries(&self) -> &[CouplingEntry] {
        &self.entries
    }

    pub fn row(&self, from: VertexId) -> impl Iterator<Item = &CouplingEntry> {
        self.entries.iter().filter(move |e| e.from == from)
    }

    pub fn source_marginal(&self) -> BTreeMap<VertexId, Scalar> {
        self.marginal(|e| e.from)
    }

    pub fn target_marginal(&self) -> BTreeMap<VertexId, Scalar> {
        self.marginal(|e| e.to)
    }

    fn marginal(&self, key: impl Fn(&CouplingEntry) -> VertexId) -> BTreeMap<VertexId, Scalar> {
        let mut out: BTreeMap<VertexId, Scalar> = BTreeMap::new();
        for e in &self.entries {
            let slot = out.entry(key(e)).or_insert(Scalar::Exact(Mass::zero()));
            *slot = *slot + e.mass;
        }
        out
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(|e| matches!(e.mass, Scalar::Exact(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transport {
    pub cost: Scalar,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    /// Exact unless either support exceeds `EXACT_SUPPORT_LIMIT`.
    #[default]
    Auto,
    Exact,
    Approx,
}

/// Optimal transport between `mu` and `nu` under `cost(u, v)`; `None` marks
/// an unreachable pair.
pub fn transport_with<F>(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    mut cost: F,
    solver: Solver,
) -> Result<Transport, TransportError>
where
    F: FnMut(VertexId, VertexId) -> Option<u32>,
{
    let mut matrix = Vec::with_capacity(mu.len());
    for &u in mu.support() {
        let mut row = Vec::with_capacity(nu.len());
        for &v in nu.support() {
            row.push(cost(u, v).ok_or(TransportError::Infeasible { from: u, to: v })?);
        }
        matrix.push(row);
    }
    let exact = match solver {
        Solver::Exact => true,
        Solver::Approx => false,
        Solver::Auto => mu.len().max(nu.len()) <= EXACT_SUPPORT_LIMIT,
    };
    let mut entries = Vec::new();
    let cost = if exact {
        let lcm = mu.mass.iter().chain(&nu.mass).fold(1i128, |l, m| l.lcm(m.denom()));
        let scale = |m: &Mass| (m * lcm).to_integer();
        let supply: Vec<i128> = mu.mass.iter().map(scale).collect();
        let demand: Vec<i128> = nu.mass.iter().map(scale).collect();
        let flow = flow::min_cost_transport(&supply, &demand, &matrix);
        let mut total = 0i128;
        for (i, row) in flow.iter().enumerate() {
            for (j, &f) in row.iter().enumerate().filter(|&(_, &f)| f > 0) {
                total += f * matrix[i][j] as i128;
                entries.push(CouplingEntry {
                    from: mu.support[i],
                    to: nu.support[j],
                    mass: Scalar::Exact(Mass::new(f, lcm)),
                });
            }
        }
        Scalar::Exact(Mass::new(total, lcm))
    } else {
        let as_f64 = |m: &Mass| m.to_f64().expect("masses convert to f64");
        let supply: Vec<f64> = mu.mass.iter().map(as_f64).collect();
        let demand: Vec<f64> = nu.mass.iter().map(as_f64).collect();
        let flow = flow::min_cost_transport(&supply, &demand, &matrix);
        let mut total = 0.0;
        for (i, row) in flow.iter().enumerate() {
            for (j, &f) in row.iter().enumerate().filter(|&(_, &f)| f > 1e-15) {
                total += f * matrix[i][j] as f64;
                entries.push(CouplingEntry { from: mu.support[i], to: nu.support[j], mass: Scalar::Approx(f) });
            }
        }
        Scalar::Approx(total)
    };
    Ok(Transport { cost, coupling: Coupling { entries } })
}

/// Transport under the hop metric of `adj`.
pub fn wasserstein1_on(
    adj: &Adjacency,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    solver: Solver,
) -> Result<Transport, TransportError> {
    let targets: Vec<usize> = nu.support().iter().map(|&v| adj.index_of(v)).collect::<Result<_, _>>()?;
    let mut rows: BTreeMap<VertexId, Vec<u32>> = BTreeMap::new();
    for &u in mu.support() {
        let dist = adj.bfs_from(u, None)?;
        rows.insert(u, targets.iter().map(|&j| dist[j]).collect());
    }
    let column: BTreeMap<VertexId, usize> = nu.support().iter().enumerate().map(|(j, &v)| (v, j)).collect();
    transport_with(
        mu,
        nu,
        |u, v| {
            let d = rows[&u][column[&v]];
            (d != UNREACHED).then_some(d)
        },
        solver,
    )
}

/// Transport under the distance of the undirected skeleton of `h`.
pub fn wasserstein1(h: &Hypergraph, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Transport, TransportError> {
    wasserstein1_on(&h.adjacency(), mu, nu, Solver::Auto)
}

/// One-step random walk used as the local volume measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Walk {
    /// Mass `1/deg` on each neighbor.
    #[default]
    Uniform,
    /// Mass `alpha` kept at the vertex, the rest spread uniformly over neighbors.
    Lazy(Mass),
}

pub fn walk_measure(adj: &Adjacency, x: VertexId, walk: Walk) -> Result<DiscreteMeasure, TransportError> {
    let neighbors = adj.neighbor_ids(x)?;
    if neighbors.is_empty() {
        return Ok(DiscreteMeasure::dirac(x));
    }
    let deg = neighbors.len() as i128;
    match walk {
        Walk::Uniform => Ok(DiscreteMeasure::uniform(neighbors)),
        Walk::Lazy(alpha) => {
            let rest = (Mass::one() - alpha) / deg;
            DiscreteMeasure::new(std::iter::once((x, alpha)).chain(neighbors.into_iter().map(|v| (v, rest))))
        }
    }
}

pub fn uniform_ball_measure(h: &Hypergraph, x: VertexId) -> Result<DiscreteMeasure, TransportError> {
    walk_measure(&h.adjacency(), x, Walk::Uniform)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curvature {
    pub kappa: Scalar,
    pub distance: u32,
    pub transport_cost: Scalar,
}

pub fn ollivier_ricci_on(
    adj: &Adjacency,
    p: VertexId,
    q: VertexId,
    walk: Walk,
    solver: Solver,
) -> Result<Curvature, TransportError> {
    if p == q {
        return Err(TransportError::SamePoint(p));
    }
    let d = adj.bfs_from(p, None)?[adj.index_of(q)?];
    if d == UNREACHED {
        return Err(TransportError::Infeasible { from: p, to: q });
    }
    let mp = walk_measure(adj, p, walk)?;
    let mq = walk_measure(adj, q, walk)?;
    let w = wasserstein1_on(adj, &mp, &mq, solver)?;
    let kappa = match w.cost {
        Scalar::Exact(c) => Scalar::Exact(Mass::one() - c / d as i128),
        Scalar::Approx(c) => Scalar::Approx(1.0 - c / d as f64),
    };
    Ok(Curvature { kappa, distance: d, transport_cost: w.cost })
}

/// `1 - W1(m_p, m_q) / d(p, q)` with uniform one-step measures.
pub fn ollivier_ricci_pair(h: &Hypergraph, p: VertexId, q: VertexId) -> Result<Curvature, TransportError> {
    ollivier_ricci_on(&h.adjacency(), p, q, Walk::Uniform, Solver::Auto)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeCurvature {
    pub p: VertexId,
    pub q: VertexId,
    pub kappa: Scalar,
}

/// Curvature of every skeleton edge `p < q`, in ascending order.
pub fn edge_curvatures(adj: &Adjacency, walk: Walk, solver: Solver) -> Result<Vec<EdgeCurvature>, TransportError> {
    let pairs: Vec<(VertexId, VertexId)> = (0..adj.len())
        .flat_map(|i| adj.neighbors(i).iter().filter(move |&&j| j > i).map(move |&j| (adj.id(i), adj.id(j))))
        .collect();
    pairs
        .into_par_iter()
        .map(|(p, q)| Ok(EdgeCurvature { p, q, kappa: ollivier_ricci_on(adj, p, q, walk, solver)?.kappa }))
        .collect()
}

/// Mean curvature of the edges at each non-isolated vertex.
pub fn vertex_curvatures(adj: &Adjacency, edges: &[EdgeCurvature]) -> BTreeMap<VertexId, Scalar> {
    let mut sums: BTreeMap<VertexId, (Scalar, i128)> = BTreeMap::new();
    for e in edges {
        for v in [e.p, e.q] {
            let slot = sums.entry(v).or_insert((Scalar::Exact(Mass::zero()), 0));
            slot.0 = slot.0 + e.kappa;
            slot.1 += 1;
        }
    }
    debug_assert!(sums.keys().all(|v| adj.index_of(*v).is_ok()));
    sums.into_iter()
        .map(|(v, (s, n))| {
            let mean = match s {
                Scalar::Exact(q) => Scalar::Exact(q / n),
                Scalar::Approx(x) => Scalar::Approx(x / n as f64),
            };
            (v, mean)
        })
        .collect()
}

pub fn edge_curvature_csv(edges: &[EdgeCurvature]) -> String {
    let mut out = String::from("pair,kappa\n");
    for e in edges {
        out.push_str(&format!("{}-{},{}\n", e.p, e.q, e.kappa));
    }
    out
}

pub fn vertex_curvature_csv(values: &BTreeMap<VertexId, Scalar>) -> String {
    let mut out = String::from("id,kappa\n");
    for (v, k) in values {
        out.push_str(&format!("{v},{k}\n"));
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::hypercore::generators;
    use proptest::prelude::*;

    pub(crate) fn q(a: i128, b: i128) -> Mass {
        Mass::new(a, b)
    }

    fn exact(s: Scalar) -> Mass {
        match s {
            Scalar::Exact(q) => q,
            Scalar::Approx(x) => panic!("expected an exact value, got {x}"),
        }
    }

    #[test]
    fn measure_validation() {
        let v = VertexId;
        assert!(DiscreteMeasure::new([(v(0), q(1, 2)), (v(0), q(1, 2))]).is_ok());
        assert_eq!(
            DiscreteMeasure::new([(v(0), q(1, 2))]),
            Err(TransportError::NotNormalized(q(1, 2)))
        );
        assert!(matches!(
            DiscreteMeasure::new([(v(0), q(3, 2)), (v(1), q(-1, 2))]),
            Err(TransportError::NegativeMass { .. })
        ));
        let m = DiscreteMeasure::new([(v(3), q(1, 1)), (v(1), q(0, 1))]).unwrap();
        assert_eq!(m.support(), &[v(3)]);
    }

    #[test]
    fn dirac_cost_is_distance() {
        let h = generators::path(6);
        let t = wasserstein1(&h, &DiscreteMeasure::dirac(VertexId(1)), &DiscreteMeasure::dirac(VertexId(4))).unwrap();
        assert_eq!(exact(t.cost), q(3, 1));
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let h = generators::cycle(6);
        let m = uniform_ball_measure(&h, VertexId(0)).unwrap();
        let t = wasserstein1(&h, &m, &m).unwrap();
        assert_eq!(exact(t.cost), q(0, 1));
        assert!(t.coupling.entries().iter().all(|e| e.from == e.to));
    }

    #[test]
    fn disconnected_support_is_infeasible() {
        let h = Hypergraph::from_edge_lists([vec![0u64, 1], vec![2, 3]]).unwrap();
        let r = wasserstein1(&h, &DiscreteMeasure::dirac(VertexId(0)), &DiscreteMeasure::dirac(VertexId(3)));
        assert!(matches!(r, Err(TransportError::Infeasible { .. })));
    }

    #[test]
    fn ball_measures() {
        let h = Hypergraph::from_edge_lists([vec![0u64, 1], vec![1, 2]]).unwrap();
        assert_eq!(uniform_ball_measure(&h, VertexId(0)).unwrap(), DiscreteMeasure::dirac(VertexId(1)));
        let g = generators::grid(5, 5);
        let m = uniform_ball_measure(&g, VertexId(generators::grid_vertex(5, 2, 2))).unwrap();
        assert_eq!(m.len(), 4);
        assert!(m.iter().all(|(_, x)| x == q(1, 4)));
        let lone = Hypergraph::from_edge_lists([vec![7u64]]).unwrap();
        assert_eq!(uniform_ball_measure(&lone, VertexId(7)).unwrap(), DiscreteMeasure::dirac(VertexId(7)));
    }

    #[test]
    fn lazy_walk_keeps_mass_home() {
        let adj = generators::cycle(5).adjacency();
        let m = walk_measure(&adj, VertexId(0), Walk::Lazy(q(1, 2))).unwrap();
        assert_eq!(m.mass(VertexId(0)), q(1, 2));
        assert_eq!(m.mass(VertexId(1)), q(1, 4));
    }

    #[test]
    fn known_curvatures() {
        let k = |h: &Hypergraph, a: u64, b: u64| exact(ollivier_ricci_pair(h, VertexId(a), VertexId(b)).unwrap().kappa);
        assert_eq!(k(&generators::complete(4), 0, 1), q(2, 3));
        assert_eq!(k(&generators::cycle(8), 0, 1), q(0, 1));
        assert_eq!(k(&generators::path(2), 0, 1), q(0, 1));
        let tree = generators::regular_tree(3, 5);
        assert_eq!(k(&tree, 0, 1), q(-2, 3));
    }

    #[test]
    fn same_point_rejected() {
        let h = generators::cycle(4);
        assert_eq!(ollivier_ricci_pair(&h, VertexId(1), VertexId(1)), Err(TransportError::SamePoint(VertexId(1))));
    }

    #[test]
    fn float_solver_agrees() {
        let adj = generators::torus(6, 6).adjacency();
        let a = ollivier_ricci_on(&adj, VertexId(0), VertexId(7), Walk::Uniform, Solver::Exact).unwrap();
        let b = ollivier_ricci_on(&adj, VertexId(0), VertexId(7), Walk::Uniform, Solver::Approx).unwrap();
        assert!((a.kappa.to_f64() - b.kappa.to_f64()).abs() < 1e-12);
    }

    #[test]
    fn edge_and_vertex_tables() {
        let adj = generators::complete(4).adjacency();
        let edges = edge_curvatures(&adj, Walk::Uniform, Solver::Exact).unwrap();
        assert_eq!(edges.len(), 6);
        let per_vertex = vertex_curvatures(&adj, &edges);
        assert!(per_vertex.values().all(|&k| k == Scalar::Exact(q(2, 3))));
        assert!(edge_curvature_csv(&edges).starts_with("pair,kappa\n0-1,2/3\n"));
        assert!(vertex_curvature_csv(&per_vertex).contains("3,2/3\n"));
    }

    pub(crate) fn connected_graph() -> impl Strategy<Value = Hypergraph> {
        (2usize..10)
            .prop_flat_map(|n| {
                (Just(n), proptest::collection::vec(any::<u32>(), n - 1), proptest::collection::vec((0..n, 0..n), 0..n))
            })
            .prop_map(|(n, parents, extra)| {
                let mut lists: Vec<Vec<u64>> =
                    (1..n).map(|i| vec![(parents[i - 1] as usize % i) as u64, i as u64]).collect();
                lists.extend(extra.into_iter().filter(|(a, b)| a != b).map(|(a, b)| vec![a as u64, b as u64]));
                Hypergraph::from_edge_lists(lists).unwrap()
            })
    }

    pub(crate) fn measure_on(n: usize) -> impl Strategy<Value = DiscreteMeasure> {
        proptest::collection::vec((0..n as u64, 1i128..6), 1..5).prop_map(|pts| {
            let total: i128 = pts.iter().map(|p| p.1).sum();
            DiscreteMeasure::new(pts.into_iter().map(|(v, w)| (VertexId(v), q(w, total)))).unwrap()
        })
    }

    fn graph_and_measures(k: usize) -> impl Strategy<Value = (Hypergraph, Vec<DiscreteMeasure>)> {
        connected_graph().prop_flat_map(move |h| {
            let n = h.vertex_count();
            (Just(h), proptest::collection::vec(measure_on(n), k))
        })
    }

    proptest! {
        #[test]
        fn w1_is_a_metric((h, ms) in graph_and_measures(3)) {
            let w = |a: &DiscreteMeasure, b: &DiscreteMeasure| exact(wasserstein1(&h, a, b).unwrap().cost);
            let (ab, ba, bc, ac) = (w(&ms[0], &ms[1]), w(&ms[1], &ms[0]), w(&ms[1], &ms[2]), w(&ms[0], &ms[2]));
            prop_assert_eq!(ab, ba);
            prop_assert!(ac <= ab + bc);
            prop_assert_eq!(ab.is_zero(), ms[0] == ms[1]);
            prop_assert!(w(&ms[0], &ms[0]).is_zero());
        }

        #[test]
        fn exact_marginals((h, ms) in graph_and_measures(2)) {
            let t = wasserstein1(&h, &ms[0], &ms[1]).unwrap();
            let rows = t.coupling.source_marginal();
            let cols = t.coupling.target_marginal();
            prop_assert_eq!(rows.len(), ms[0].len());
            for (v, m) in ms[0].iter() {
                prop_assert_eq!(rows[&v], Scalar::Exact(m));
            }
            for (v, m) in ms[1].iter() {
                prop_assert_eq!(cols[&v], Scalar::Exact(m));
            }
            let adj = h.adjacency();
            let attained = t.coupling.entries().iter().fold(Mass::zero(), |acc, e| {
                let d = adj.distance(e.from, e.to).unwrap().finite().unwrap();
                acc + exact(e.mass) * d as i128
            });
            prop_assert_eq!(attained, exact(t.cost));
        }

        #[test]
        fn float_marginals_close((h, ms) in graph_and_measures(2)) {
            let t = wasserstein1_on(&h.adjacency(), &ms[0], &ms[1], Solver::Approx).unwrap();
            for (v, m) in ms[0].iter() {
                prop_assert!((t.coupling.source_marginal()[&v].to_f64() - m.to_f64().unwrap()).abs() < 1e-12);
            }
            let e = exact(wasserstein1(&h, &ms[0], &ms[1]).unwrap().cost).to_f64().unwrap();
            prop_assert!((t.cost.to_f64() - e).abs() < 1e-9);
        }

        #[test]
        fn curvature_bounded_and_symmetric(h in connected_graph(), a in any::<u32>(), b in any::<u32>()) {
            let vs: Vec<VertexId> = h.vertices().into_iter().collect();
            let (p, q_) = (vs[a as usize % vs.len()], vs[b as usize % vs.len()]);
            prop_assume!(p != q_);
            let x = ollivier_ricci_pair(&h, p, q_).unwrap();
            let y = ollivier_ricci_pair(&h, q_, p).unwrap();
            prop_assert_eq!(x.kappa, y.kappa);
            prop_assert!(exact(x.kappa) <= Mass::one());
            let same = uniform_ball_measure(&h, p).unwrap() == uniform_ball_measure(&h, q_).unwrap();
            prop_assert_eq!(exact(x.kappa) == Mass::one(), same);
        }
    }
}
