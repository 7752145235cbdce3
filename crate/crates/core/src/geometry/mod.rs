//! Geodesics, bundles of geodesic rays, and nonplanar tangles in hypergraph
//! skeletons.

mod planar;

use serde::Serialize;
use thiserror::Error;

use crate::hypercore::{Adjacency, HypergraphError, UNREACHED, VertexId};

pub use planar::{
    KuratowskiKind, TangleCount, TangleReport, Witness, count_tangles, is_planar, tangle_dot, verify_witness,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("no path from {0} to {1}")]
    Unreachable(VertexId, VertexId),
    #[error("{0} is not a neighbor of {1}")]
    NotNeighbor(VertexId, VertexId),
    #[error("bundle needs at least one seed")]
    NoSeeds,
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeodesicPath {
    pub vertices: Vec<VertexId>,
    pub length: u32,
}

/// The lexicographically smallest shortest path from `u` to `v`.
pub fn geodesic(adj: &Adjacency, u: VertexId, v: VertexId) -> Result<GeodesicPath, GeometryError> {
    let (iu, iv) = (adj.index_of(u)?, adj.index_of(v)?);
    let to_v = adj.bfs(iv, None);
    if to_v[iu] == UNREACHED {
        return Err(GeometryError::Unreachable(u, v));
    }
    let mut at = iu;
    let mut vertices = vec![u];
    while at != iv {
        // Neighbor lists ascend by id, so the first step closer is the smallest.
        at = *adj
            .neighbors(at)
            .iter()
            .find(|&&j| to_v[j] + 1 == to_v[at])
            .expect("a vertex at positive distance has a neighbor one step closer");
        vertices.push(adj.id(at));
    }
    Ok(GeodesicPath { length: to_v[iu], vertices })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BundleProfile {
    /// Each ray's vertices, starting with its seed.
    pub rays: Vec<Vec<VertexId>>,
    /// `separations[k]` holds `d(ray_i[k], ray_j[k])` for pairs `i < j` in order.
    pub separations: Vec<Vec<u32>>,
    /// Some ray stopped early; the profile ends at the shortest ray.
    pub truncated: bool,
}

impl BundleProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,i,j,separation\n");
        let n = self.rays.len();
        for (k, row) in self.separations.iter().enumerate() {
            let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
            for ((i, j), d) in pairs.zip(row) {
                out.push_str(&format!("{k},{i},{j},{d}\n"));
            }
        }
        out
    }
}

/// Rays from `(start, first step)` seeds. Each later step moves to the
/// neighbor farthest from the start, provided that distance grows, with the
/// smallest id winning ties.
pub fn bundle_divergence(
    adj: &Adjacency,
    seeds: &[(VertexId, VertexId)],
    steps: usize,
) -> Result<BundleProfile, GeometryError> {
    if seeds.is_empty() {
        return Err(GeometryError::NoSeeds);
    }
    let mut rays = Vec::with_capacity(seeds.len());
    let mut truncated = false;
    for &(s, d) in seeds {
        let (is, id) = (adj.index_of(s)?, adj.index_of(d)?);
        if !adj.neighbors(is).contains(&id) {
            return Err(GeometryError::NotNeighbor(d, s));
        }
        let from_start = adj.bfs(is, None);
        let mut ray = vec![is, id];
        while ray.len() <= steps {
            let at = *ray.last().expect("rays are nonempty");
            let next = adj
                .neighbors(at)
                .iter()
                .filter(|&&j| from_start[j] != UNREACHED && from_start[j] > from_start[at])
                .max_by_key(|&&j| (from_start[j], std::cmp::Reverse(j)));
            match next {
                Some(&j) => ray.push(j),
                None => {
                    truncated = true;
                    break;
                }
            }
        }
        ray.truncate(steps + 1);
        rays.push(ray);
    }
    let len = rays.iter().map(Vec::len).min().expect("at least one seed");
    let mut separations = Vec::with_capacity(len);
    for k in 0..len {
        let row_sources: Vec<Vec<u32>> = rays.iter().map(|r| adj.bfs(r[k], None)).collect();
        let mut row = Vec::new();
        for (i, from) in row_sources.iter().enumerate() {
            for ray in &rays[i + 1..] {
                row.push(from[ray[k]]);
            }
        }
        separations.push(row);
    }
    let rays = rays.into_iter().map(|r| r.into_iter().map(|i| adj.id(i)).collect()).collect();
    Ok(BundleProfile { rays, separations, truncated })
}
