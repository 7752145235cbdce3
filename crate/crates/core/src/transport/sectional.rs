//! Parallel transport of unit spheres and the sectional and directional Ricci
//! curvatures derived from it. All steps have unit length.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::Serialize;

use super::{Coupling, DiscreteMeasure, Mass, Solver, TransportError, wasserstein1_on};
use crate::Scalar;
use crate::hypercore::{Adjacency, UNREACHED, VertexId};

/// Image of the unit sphere at `x` in the unit sphere at `y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "map", rename_all = "snake_case")]
pub enum TransportMap {
    Bijection(BTreeMap<VertexId, VertexId>),
    Fractional(Coupling),
}

fn sphere(adj: &Adjacency, x: VertexId) -> Result<Vec<VertexId>, TransportError> {
    let s = adj.neighbor_ids(x)?;
    if s.is_empty() {
        return Err(TransportError::Degenerate(format!("vertex {x} has no neighbors")));
    }
    Ok(s)
}

fn sphere_coupling(adj: &Adjacency, x: VertexId, y: VertexId) -> Result<Coupling, TransportError> {
    if adj.bfs_from(x, None)?[adj.index_of(y)?] == UNREACHED {
        return Err(TransportError::Infeasible { from: x, to: y });
    }
    let sx = DiscreteMeasure::uniform(sphere(adj, x)?);
    let sy = DiscreteMeasure::uniform(sphere(adj, y)?);
    Ok(wasserstein1_on(adj, &sx, &sy, Solver::Auto)?.coupling)
}

/// Optimal coupling of the uniform unit-sphere measures, reported as a map
/// when it is a permutation.
pub fn parallel_transport(adj: &Adjacency, x: VertexId, y: VertexId) -> Result<TransportMap, TransportError> {
    if x == y {
        return Ok(TransportMap::Bijection(adj.neighbor_ids(x)?.into_iter().map(|v| (v, v)).collect()));
    }
    let c = sphere_coupling(adj, x, y)?;
    let (nx, ny) = (adj.neighbor_ids(x)?.len(), adj.neighbor_ids(y)?.len());
    let unit = Scalar::Exact(Mass::new(1, nx as i128));
    if nx == ny && c.entries().len() == nx && c.entries().iter().all(|e| e.mass == unit) {
        return Ok(TransportMap::Bijection(c.entries().iter().map(|e| (e.from, e.to)).collect()));
    }
    Ok(TransportMap::Fractional(c))
}

fn compare(a: Scalar, b: Scalar) -> Ordering {
    match (a, b) {
        (Scalar::Exact(p), Scalar::Exact(q)) => p.cmp(&q),
        _ => a.to_f64().total_cmp(&b.to_f64()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionalCurvature {
    pub k: Scalar,
    /// Where the direction `w` lands at `y = v`.
    pub transported: VertexId,
    pub separation: u32,
}

/// `K = 2(1 - d(w, w_y))`, where `y` is the step along `v` and `w_y` the
/// heaviest image of `w` under transport from `x` to `y`. Images other than
/// `x` are preferred, then the smallest id.
pub fn sectional_curvature(
    adj: &Adjacency,
    x: VertexId,
    v: VertexId,
    w: VertexId,
) -> Result<SectionalCurvature, TransportError> {
    if v == w {
        return Err(TransportError::Degenerate("the two directions coincide".into()));
    }
    let around = adj.neighbor_ids(x)?;
    for d in [v, w] {
        if around.binary_search(&d).is_err() {
            return Err(TransportError::NotNeighbor(d, x));
        }
    }
    let c = sphere_coupling(adj, x, v)?;
    let image = c
        .row(w)
        .min_by(|a, b| (a.to == x).cmp(&(b.to == x)).then(compare(b.mass, a.mass)).then(a.to.cmp(&b.to)))
        .ok_or_else(|| TransportError::Degenerate(format!("direction {w} has no image")))?
        .to;
    let d = adj.bfs_from(w, None)?[adj.index_of(image)?];
    Ok(SectionalCurvature {
        k: Scalar::Exact(Mass::from_integer(2 * (1 - d as i128))),
        transported: image,
        separation: d,
    })
}

/// Mean sectional curvature between `v` and every other direction at `x`.
pub fn ricci_direction(adj: &Adjacency, x: VertexId, v: VertexId) -> Result<Scalar, TransportError> {
    let around = adj.neighbor_ids(x)?;
    if around.len() < 2 {
        return Err(TransportError::Degenerate(format!("vertex {x} has fewer than two directions")));
    }
    let mut total = Scalar::Exact(Mass::from_integer(0));
    for &w in around.iter().filter(|&&w| w != v) {
        total = total + sectional_curvature(adj, x, v, w)?.k;
    }
    match total {
        Scalar::Exact(t) => Ok(Scalar::Exact(t / (around.len() as i128 - 1))),
        Scalar::Approx(t) => Ok(Scalar::Approx(t / (around.len() - 1) as f64)),
    }
}
