//! Canonical labeling of vertex-colored structures made of tagged tuples.
//!
//! Color refinement followed by individualization, keeping the
//! lexicographically least leaf certificate. Transposition twins and
//! automorphisms discovered at equal leaves prune the search tree.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Bytes that are equal exactly for isomorphic structures.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalKey(Vec<u8>);

impl CanonicalKey {
    pub fn from_words(words: &[u64]) -> Self {
        Self(words.iter().flat_map(|w| w.to_be_bytes()).collect())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// 64-bit FNV-1a digest, for display.
    pub fn digest(&self) -> u64 {
        self.0.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }

    pub fn short(&self) -> String {
        format!("{:016x}", self.digest())
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short())
    }
}

/// Vertices `0..n` with integer colors, plus tagged ordered tuples.
#[derive(Debug, Clone, Default)]
pub struct Structure {
    colors: Vec<u64>,
    tuples: Vec<(u64, Vec<usize>)>,
}

impl Structure {
    pub fn new(colors: Vec<u64>) -> Self {
        Self { colors, tuples: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn add_vertex(&mut self, color: u64) -> usize {
        self.colors.push(color);
        self.colors.len() - 1
    }

    pub fn add_tuple(&mut self, tag: u64, vertices: Vec<usize>) {
        debug_assert!(vertices.iter().all(|&v| v < self.colors.len()));
        self.tuples.push((tag, vertices));
    }
}

#[derive(Debug, Clone)]
pub struct Labeling {
    pub key: CanonicalKey,
    /// `label[v]` is the canonical position of vertex `v`.
    pub label: Vec<usize>,
}

pub fn canonize(s: &Structure) -> Labeling {
    let n = s.colors.len();
    let mut incid = vec![Vec::new(); n];
    for (t, (_, vs)) in s.tuples.iter().enumerate() {
        for (p, &v) in vs.iter().enumerate() {
            incid[v].push((t, p));
        }
    }
    let mut c = Canonizer { s, incid, best: None, autos: Vec::new() };
    let initial = rank(&s.colors);
    c.search(initial, &mut Vec::new());
    let (cert, label) = c.best.expect("the search always reaches a leaf");
    Labeling { key: CanonicalKey::from_words(&cert), label }
}

type Signature<'a> = (u64, Vec<(u64, usize, &'a [u64])>);

struct Canonizer<'a> {
    s: &'a Structure,
    incid: Vec<Vec<(usize, usize)>>,
    best: Option<(Vec<u64>, Vec<usize>)>,
    autos: Vec<Vec<usize>>,
}

/// Dense ranks of the sorted distinct values.
fn rank<T: Ord>(sigs: &[T]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..sigs.len()).collect();
    order.sort_by(|&a, &b| sigs[a].cmp(&sigs[b]));
    let mut out = vec![0; sigs.len()];
    let mut r = 0;
    for (i, &v) in order.iter().enumerate() {
        if i > 0 && sigs[v] != sigs[order[i - 1]] {
            r += 1;
        }
        out[v] = r;
    }
    out
}

fn cell_count(colors: &[u64]) -> usize {
    colors.iter().copied().max().map_or(0, |m| m as usize + 1)
}

impl Canonizer<'_> {
    fn refine(&self, mut colors: Vec<u64>) -> Vec<u64> {
        let mut cells = cell_count(&colors);
        loop {
            let tcols: Vec<Vec<u64>> = self
                .s
                .tuples
                .iter()
                .map(|(_, vs)| vs.iter().map(|&v| colors[v]).collect())
                .collect();
            let sigs: Vec<Signature<'_>> = (0..colors.len())
                .map(|v| {
                    let mut l: Vec<(u64, usize, &[u64])> = self.incid[v]
                        .iter()
                        .map(|&(t, p)| (self.s.tuples[t].0, p, tcols[t].as_slice()))
                        .collect();
                    l.sort_unstable();
                    (colors[v], l)
                })
                .collect();
            let next = rank(&sigs);
            let next_cells = cell_count(&next);
            if next_cells == cells {
                return next;
            }
            cells = next_cells;
            colors = next;
        }
    }

    fn search(&mut self, colors: Vec<u64>, prefix: &mut Vec<usize>) {
        let colors = self.refine(colors);
        let n = colors.len();
        if cell_count(&colors) == n {
            self.leaf(colors.iter().map(|&c| c as usize).collect());
            return;
        }
        let mut sizes = vec![0usize; cell_count(&colors)];
        for &c in &colors {
            sizes[c as usize] += 1;
        }
        let target = (0..sizes.len())
            .filter(|&c| sizes[c] > 1)
            .min_by_key(|&c| (sizes[c], c))
            .expect("a non-discrete partition has a nontrivial cell") as u64;
        let cell: Vec<usize> = (0..n).filter(|&v| colors[v] == target).collect();
        let mut tried: Vec<usize> = Vec::new();
        for &v in &cell {
            if tried.iter().any(|&u| self.is_twin(u, v)) || self.in_orbit(v, &tried, prefix) {
                continue;
            }
            let mut next: Vec<u64> = colors.iter().map(|&c| 2 * c + 1).collect();
            next[v] = 2 * colors[v];
            prefix.push(v);
            self.search(next, prefix);
            prefix.pop();
            tried.push(v);
        }
    }

    fn certificate(&self, label: &[usize]) -> Vec<u64> {
        let n = label.len();
        let mut inv = vec![0; n];
        for (v, &l) in label.iter().enumerate() {
            inv[l] = v;
        }
        let mut tuples: Vec<Vec<u64>> = self
            .s
            .tuples
            .iter()
            .map(|(tag, vs)| {
                let mut t = vec![*tag, vs.len() as u64];
                t.extend(vs.iter().map(|&v| label[v] as u64));
                t
            })
            .collect();
        tuples.sort_unstable();
        let mut cert = vec![n as u64, tuples.len() as u64];
        cert.extend(inv.iter().map(|&v| self.s.colors[v]));
        cert.extend(tuples.into_iter().flatten());
        cert
    }

    fn leaf(&mut self, label: Vec<usize>) {
        let cert = self.certificate(&label);
        match &self.best {
            None => self.best = Some((cert, label)),
            Some((best, best_label)) => match cert.cmp(best) {
                std::cmp::Ordering::Less => self.best = Some((cert, label)),
                std::cmp::Ordering::Equal => {
                    let mut best_inv = vec![0; label.len()];
                    for (v, &l) in best_label.iter().enumerate() {
                        best_inv[l] = v;
                    }
                    let gamma: Vec<usize> = label.iter().map(|&l| best_inv[l]).collect();
                    if gamma.iter().enumerate().any(|(i, &g)| i != g) {
                        self.autos.push(gamma);
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }

    /// Whether swapping `u` and `v` maps the tuple multiset onto itself.
    fn is_twin(&self, u: usize, v: usize) -> bool {
        let mut ts: Vec<usize> = self.incid[u].iter().chain(&self.incid[v]).map(|&(t, _)| t).collect();
        ts.sort_unstable();
        ts.dedup();
        let swap = |w: usize| if w == u { v } else if w == v { u } else { w };
        let mut before: Vec<(u64, &[usize])> =
            ts.iter().map(|&t| (self.s.tuples[t].0, self.s.tuples[t].1.as_slice())).collect();
        let mut after: Vec<(u64, Vec<usize>)> = ts
            .iter()
            .map(|&t| (self.s.tuples[t].0, self.s.tuples[t].1.iter().map(|&w| swap(w)).collect()))
            .collect();
        before.sort_unstable();
        after.sort_unstable();
        before.len() == after.len()
            && before.iter().zip(&after).all(|(a, b)| a.0 == b.0 && a.1 == b.1.as_slice())
    }

    /// Whether `v` shares an orbit with an already explored branch under the
    /// known automorphisms that fix `prefix` pointwise.
    fn in_orbit(&self, v: usize, tried: &[usize], prefix: &[usize]) -> bool {
        if tried.is_empty() {
            return false;
        }
        let gens: Vec<&Vec<usize>> =
            self.autos.iter().filter(|g| prefix.iter().all(|&p| g[p] == p)).collect();
        if gens.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.s.colors.len()];
        let mut stack = vec![v];
        seen[v] = true;
        while let Some(w) = stack.pop() {
            if tried.contains(&w) {
                return true;
            }
            for g in &gens {
                if !seen[g[w]] {
                    seen[g[w]] = true;
                    stack.push(g[w]);
                }
            }
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize, offset: usize) -> Structure {
        let mut s = Structure::new(vec![0; n]);
        for i in 0..n {
            s.add_tuple(0, vec![(i + offset) % n, (i + offset + 1) % n]);
        }
        s
    }

    #[test]
    fn rotated_cycles_agree() {
        assert_eq!(canonize(&cycle(9, 0)).key, canonize(&cycle(9, 4)).key);
    }

    #[test]
    fn colors_distinguish() {
        let mut a = cycle(4, 0);
        let mut b = cycle(4, 0);
        a.colors[0] = 1;
        b.colors[1] = 1;
        assert_eq!(canonize(&a).key, canonize(&b).key);
        b.colors[3] = 1;
        assert_ne!(canonize(&a).key, canonize(&b).key);
    }

    #[test]
    fn labels_form_a_permutation() {
        let lab = canonize(&cycle(7, 2));
        let mut l = lab.label.clone();
        l.sort();
        assert_eq!(l, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn regular_graphs_separated() {
        // Two disjoint triangles versus a hexagon: both 2-regular on 6 vertices.
        let mut tri = Structure::new(vec![0; 6]);
        for (a, b) in [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)] {
            tri.add_tuple(0, vec![a, b]);
            tri.add_tuple(0, vec![b, a]);
        }
        let mut hex = Structure::new(vec![0; 6]);
        for i in 0..6 {
            hex.add_tuple(0, vec![i, (i + 1) % 6]);
            hex.add_tuple(0, vec![(i + 1) % 6, i]);
        }
        assert_ne!(canonize(&tri).key, canonize(&hex).key);
    }

    #[test]
    fn petersen_relabeled() {
        let outer: Vec<(usize, usize)> = (0..5).map(|i| (i, (i + 1) % 5)).collect();
        let inner: Vec<(usize, usize)> = (0..5).map(|i| (5 + i, 5 + (i + 2) % 5)).collect();
        let spokes: Vec<(usize, usize)> = (0..5).map(|i| (i, i + 5)).collect();
        let edges: Vec<(usize, usize)> = outer.into_iter().chain(inner).chain(spokes).collect();
        let perm = [3, 7, 1, 9, 0, 4, 8, 2, 6, 5];
        let mut a = Structure::new(vec![0; 10]);
        let mut b = Structure::new(vec![0; 10]);
        for &(x, y) in &edges {
            a.add_tuple(0, vec![x, y]);
            a.add_tuple(0, vec![y, x]);
            b.add_tuple(0, vec![perm[y], perm[x]]);
            b.add_tuple(0, vec![perm[x], perm[y]]);
        }
        assert_eq!(canonize(&a).key, canonize(&b).key);
    }
}
