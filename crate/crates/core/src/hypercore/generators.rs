//! Standard graphs as hypergraphs of binary edges, with vertices numbered
//! from zero.

use std::collections::{BTreeMap, BTreeSet};

use super::Hypergraph;

fn from_pairs(pairs: impl IntoIterator<Item = (u64, u64)>) -> Hypergraph {
    let mut seen = BTreeSet::new();
    let lists: Vec<[u64; 2]> = pairs
        .into_iter()
        .filter(|&(a, b)| a != b && seen.insert((a.min(b), a.max(b))))
        .map(|(a, b)| [a, b])
        .collect();
    Hypergraph::from_edge_lists(lists).expect("binary edges are nonempty")
}

pub fn path(n: u64) -> Hypergraph {
    from_pairs((1..n).map(|i| (i - 1, i)))
}

pub fn cycle(n: u64) -> Hypergraph {
    from_pairs((0..n).map(|i| (i, (i + 1) % n)))
}

pub fn complete(n: u64) -> Hypergraph {
    from_pairs((0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
}

pub fn complete_bipartite(a: u64, b: u64) -> Hypergraph {
    from_pairs((0..a).flat_map(|i| (0..b).map(move |j| (i, a + j))))
}

/// Vertex `(x, y)` of a `w`-wide grid or torus.
pub fn grid_vertex(w: u64, x: u64, y: u64) -> u64 {
    y * w + x
}

pub fn grid(w: u64, h: u64) -> Hypergraph {
    let mut pairs = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = grid_vertex(w, x, y);
            if x + 1 < w {
                pairs.push((v, v + 1));
            }
            if y + 1 < h {
                pairs.push((v, v + w));
            }
        }
    }
    from_pairs(pairs)
}

pub fn torus(w: u64, h: u64) -> Hypergraph {
    let mut pairs = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = grid_vertex(w, x, y);
            pairs.push((v, grid_vertex(w, (x + 1) % w, y)));
            pairs.push((v, grid_vertex(w, x, (y + 1) % h)));
        }
    }
    from_pairs(pairs)
}

/// Torus with one diagonal per square: the six-neighbor triangular lattice.
pub fn triangular_torus(w: u64, h: u64) -> Hypergraph {
    let mut pairs = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = grid_vertex(w, x, y);
            pairs.push((v, grid_vertex(w, (x + 1) % w, y)));
            pairs.push((v, grid_vertex(w, x, (y + 1) % h)));
            pairs.push((v, grid_vertex(w, (x + 1) % w, (y + 1) % h)));
        }
    }
    from_pairs(pairs)
}

/// Cubic lattice on an `n × n × n` torus; vertex `(x, y, z)` is `(z n + y) n + x`.
pub fn torus3(n: u64) -> Hypergraph {
    let id = |x: u64, y: u64, z: u64| (z % n * n + y % n) * n + x % n;
    let mut pairs = Vec::new();
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let v = id(x, y, z);
                pairs.push((v, id(x + 1, y, z)));
                pairs.push((v, id(x, y + 1, z)));
                pairs.push((v, id(x, y, z + 1)));
            }
        }
    }
    from_pairs(pairs)
}

/// Tree in which every internal vertex has `degree` neighbors, truncated at
/// `depth` levels below the root `0`.
pub fn regular_tree(degree: u64, depth: u32) -> Hypergraph {
    let mut pairs = Vec::new();
    let mut frontier = vec![0u64];
    let mut next = 1u64;
    for level in 0..depth {
        let kids = if level == 0 { degree } else { degree - 1 };
        let mut grown = Vec::new();
        for &p in &frontier {
            for _ in 0..kids {
                pairs.push((p, next));
                grown.push(next);
                next += 1;
            }
        }
        frontier = grown;
    }
    from_pairs(pairs)
}

/// Geodesic triangulation of the sphere: each icosahedron face split into
/// `freq²` triangles. Has `10 freq² + 2` vertices.
pub fn geodesic_sphere(freq: u64) -> Hypergraph {
    const FACES: [[u64; 3]; 20] = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    let mut ids: BTreeMap<Vec<(u64, u64)>, u64> = BTreeMap::new();
    let mut id_of = |face: [u64; 3], w: [u64; 3]| -> u64 {
        let mut key: Vec<(u64, u64)> =
            face.iter().zip(w).filter(|&(_, w)| w > 0).map(|(&v, w)| (v, w)).collect();
        key.sort();
        let fresh = ids.len() as u64;
        *ids.entry(key).or_insert(fresh)
    };
    let mut pairs = Vec::new();
    for face in FACES {
        for i in 0..=freq {
            for j in 0..=freq - i {
                let k = freq - i - j;
                let v = id_of(face, [i, j, k]);
                if i > 0 {
                    pairs.push((v, id_of(face, [i - 1, j + 1, k])));
                    pairs.push((v, id_of(face, [i - 1, j, k + 1])));
                }
                if j > 0 {
                    pairs.push((v, id_of(face, [i, j - 1, k + 1])));
                }
            }
        }
    }
    from_pairs(pairs)
}

/// Disk of the `{3, q}` triangulation grown in rings around vertex `0`.
/// `q = 6` is flat, `q > 6` hyperbolic. Inner vertices have degree `q`.
pub fn triangulated_disk(q: u64, rings: u32) -> Hypergraph {
    assert!(q >= 6, "ring growth needs q >= 6");
    let mut pairs = Vec::new();
    let mut degree: Vec<u64> = vec![q];
    let boundary: Vec<u64> = (1..=q).collect();
    for i in 0..q {
        pairs.push((0, boundary[i as usize]));
        pairs.push((boundary[i as usize], boundary[((i + 1) % q) as usize]));
        degree.push(3);
    }
    let mut boundary = boundary;
    for _ in 1..rings {
        let m = boundary.len();
        let mut next_id = degree.len() as u64;
        let mut fresh = |degree: &mut Vec<u64>| {
            degree.push(0);
            next_id += 1;
            next_id - 1
        };
        let shared: Vec<u64> = (0..m).map(|_| fresh(&mut degree)).collect();
        let mut ring = Vec::new();
        for (i, &b) in boundary.iter().enumerate() {
            let need = q - degree[b as usize];
            let before = shared[(i + m - 1) % m];
            let mut run = vec![before];
            for _ in 0..need - 2 {
                run.push(fresh(&mut degree));
            }
            run.push(shared[i]);
            for &w in &run {
                pairs.push((b, w));
                degree[b as usize] += 1;
                degree[w as usize] += 1;
            }
            ring.extend_from_slice(&run[1..]);
        }
        for i in 0..ring.len() {
            let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
            pairs.push((a, b));
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        boundary = ring;
    }
    from_pairs(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercore::VertexId;

    fn degrees(h: &Hypergraph) -> Vec<usize> {
        let adj = h.adjacency();
        (0..adj.len()).map(|i| adj.degree(i)).collect()
    }

    #[test]
    fn sizes() {
        assert_eq!(path(5).edge_count(), 4);
        assert_eq!(complete(5).edge_count(), 10);
        assert_eq!(complete_bipartite(3, 3).edge_count(), 9);
        assert_eq!(torus(6, 5).edge_count(), 60);
        assert_eq!(torus3(4).edge_count(), 192);
        assert_eq!(regular_tree(3, 3).vertex_count(), 1 + 3 + 6 + 12);
    }

    #[test]
    fn sphere_is_a_triangulation() {
        for f in 1..5 {
            let s = geodesic_sphere(f);
            let v = s.vertex_count() as u64;
            assert_eq!(v, 10 * f * f + 2);
            assert_eq!(s.edge_count() as u64, 3 * v - 6);
            let d = degrees(&s);
            assert_eq!(d.iter().filter(|&&x| x == 5).count(), 12);
            assert!(d.iter().all(|&x| x == 5 || x == 6));
        }
    }

    #[test]
    fn disk_inner_degrees() {
        for q in [6, 7, 8] {
            let g = triangulated_disk(q, 4);
            let adj = g.adjacency();
            let dist = adj.bfs_from(VertexId(0), None).unwrap();
            for (i, &d) in dist.iter().enumerate() {
                if d < 3 {
                    assert_eq!(adj.degree(i) as u64, q, "q={q} vertex {i}");
                }
            }
        }
        let flat = triangulated_disk(6, 4);
        assert_eq!(flat.ball_counts(VertexId(0), 3).unwrap(), vec![1, 7, 19, 37]);
    }
}
