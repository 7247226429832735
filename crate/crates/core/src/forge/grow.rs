//! Outward growth: enumerate balls built from one cube by gluing hexahedra
//! onto their boundary, until one is bounded by the target surface.
//!
//! Every state is a valid hex mesh of a ball, so its boundary is a quad
//! sphere with a known filling. A glue step attaches one hex along a disk of
//! one to five of its faces lying on the current boundary; its remaining
//! corners are fresh vertices. The checks below keep the mesh a valid
//! complex: the new hex may only meet old hexes and old boundary quads in a
//! vertex, an edge or a whole face. States are deduplicated by a canonical
//! hash of their boundary and expanded smallest boundary first. Fillings that
//! need an interior sheet ending in two loops that cross themselves, which
//! defeat the advancing front, show up this way after a few hundred
//! thousand states.

use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::hash::{Hash, Hasher};
use std::time::Instant;

use crate::cellcx::{HEX_EDGES, HEX_FACES};

pub(super) type Quad = [u32; 4];

const OPPOSITE: [usize; 6] = [1, 0, 4, 5, 2, 3];

fn sorted(q: &Quad) -> Quad {
    let mut s = *q;
    s.sort_unstable();
    s
}

fn ek(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

fn same_cycle(a: &Quad, b: &Quad) -> bool {
    (0..4).any(|r| (0..4).all(|i| a[i] == b[(i + r) % 4]) || (0..4).all(|i| a[i] == b[(r + 4 - i) % 4]))
}

fn quad_has_edge(q: &Quad, a: u32, b: u32) -> bool {
    (0..4).any(|i| ek(q[i], q[(i + 1) % 4]) == ek(a, b))
}

fn hex_has_edge(h: &[u32; 8], a: u32, b: u32) -> bool {
    HEX_EDGES.iter().any(|e| ek(h[e[0]], h[e[1]]) == ek(a, b))
}

fn hex_quads(h: &[u32; 8]) -> [Quad; 6] {
    HEX_FACES.map(|f| [h[f[0]], h[f[1]], h[f[2]], h[f[3]]])
}

/// Lookup tables for one state.
struct Ctx<'a> {
    surface: &'a [Quad],
    hexes: &'a [[u32; 8]],
    n_vertices: u32,
    face_of: HashMap<Quad, usize>,
    edge_faces: HashMap<(u32, u32), [usize; 2]>,
    vertex_faces: HashMap<u32, Vec<usize>>,
    adjacent: HashSet<(u32, u32)>,
    vertex_hexes: HashMap<u32, Vec<usize>>,
}

impl<'a> Ctx<'a> {
    fn new(surface: &'a [Quad], hexes: &'a [[u32; 8]], n_vertices: u32) -> Self {
        let mut face_of = HashMap::new();
        let mut edge_faces: HashMap<(u32, u32), [usize; 2]> = HashMap::new();
        let mut vertex_faces: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, q) in surface.iter().enumerate() {
            face_of.insert(sorted(q), i);
            for k in 0..4 {
                edge_faces.entry(ek(q[k], q[(k + 1) % 4])).and_modify(|x| x[1] = i).or_insert([i, usize::MAX]);
                vertex_faces.entry(q[k]).or_default().push(i);
            }
        }
        let mut adjacent = HashSet::new();
        let mut vertex_hexes: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, h) in hexes.iter().enumerate() {
            for e in HEX_EDGES {
                adjacent.insert(ek(h[e[0]], h[e[1]]));
            }
            for &v in h {
                vertex_hexes.entry(v).or_default().push(i);
            }
        }
        Ctx { surface, hexes, n_vertices, face_of, edge_faces, vertex_faces, adjacent, vertex_hexes }
    }

    /// Whether `h` can be glued on: its faces on the surface form a disk,
    /// its other corners are fresh, and it meets the mesh only in cells.
    fn fits(&self, h: &[u32; 8]) -> bool {
        if (1..8).any(|i| h[..i].contains(&h[i])) {
            return false;
        }
        let old = |v: u32| v < self.n_vertices;
        let quads = hex_quads(h);
        let mut glued = 0u8;
        for (fi, q) in quads.iter().enumerate() {
            if let Some(&s) = self.face_of.get(&sorted(q)) {
                if !same_cycle(&self.surface[s], q) {
                    return false;
                }
                glued |= 1 << fi;
            }
        }
        let k = glued.count_ones();
        if k == 0 || k == 6 {
            return false;
        }
        let on = |i: usize| glued >> i & 1 == 1;
        // connected, and four faces must not form a band
        let idx: Vec<usize> = (0..6).filter(|&i| on(i)).collect();
        let mut seen = 1u8 << idx[0];
        let mut stack = vec![idx[0]];
        while let Some(a) = stack.pop() {
            for &b in &idx {
                if OPPOSITE[a] != b && seen >> b & 1 == 0 {
                    seen |= 1 << b;
                    stack.push(b);
                }
            }
        }
        if seen != glued {
            return false;
        }
        if k == 4 {
            let free: Vec<usize> = (0..6).filter(|&i| !on(i)).collect();
            if OPPOSITE[free[0]] == free[1] {
                return false;
            }
        }
        let in_disk = |v: u32| (0..6).any(|i| on(i) && quads[i].contains(&v));
        if h.iter().any(|&v| old(v) && !in_disk(v)) {
            return false;
        }
        for i in 0..8 {
            for j in i + 1..8 {
                let (a, b) = (h[i], h[j]);
                if !(old(a) && old(b)) || !self.adjacent.contains(&ek(a, b)) {
                    continue;
                }
                // an existing edge between two corners must be a glued edge
                if !hex_has_edge(h, a, b) || !(0..6).any(|f| on(f) && quad_has_edge(&quads[f], a, b)) {
                    return false;
                }
            }
        }
        let mut near_hexes = vec![];
        let mut near_faces = vec![];
        for &v in h {
            if let Some(l) = self.vertex_hexes.get(&v) {
                near_hexes.extend_from_slice(l);
            }
            if let Some(l) = self.vertex_faces.get(&v) {
                near_faces.extend_from_slice(l);
            }
        }
        near_hexes.sort_unstable();
        near_hexes.dedup();
        near_faces.sort_unstable();
        near_faces.dedup();
        for &ki in &near_hexes {
            let other = &self.hexes[ki];
            let common: Vec<u32> = h.iter().copied().filter(|v| other.contains(v)).collect();
            let ok = match common.len() {
                1 => true,
                2 => hex_has_edge(h, common[0], common[1]) && hex_has_edge(other, common[0], common[1]),
                4 => {
                    let c = sorted(&[common[0], common[1], common[2], common[3]]);
                    quads.iter().any(|q| sorted(q) == c) && hex_quads(other).iter().any(|q| sorted(q) == c)
                }
                _ => false,
            };
            if !ok {
                return false;
            }
        }
        for &fi in &near_faces {
            let q = &self.surface[fi];
            let common: Vec<u32> = q.iter().copied().filter(|v| h.contains(v)).collect();
            let ok = match common.len() {
                0 | 1 => true,
                2 => quad_has_edge(q, common[0], common[1]) && hex_has_edge(h, common[0], common[1]),
                4 => quads.iter().enumerate().any(|(i, d)| on(i) && sorted(d) == sorted(q)),
                _ => false,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// Every distinct hex that fits, built on each surface quad with each
    /// subset of its neighbours folded in.
    fn moves(&self) -> Vec<[u32; 8]> {
        let mut out = vec![];
        let mut seen: HashSet<[u32; 8]> = HashSet::new();
        for (me, f) in self.surface.iter().enumerate() {
            // far corners of the neighbour across each side
            let mut side: [Option<(u32, u32)>; 4] = [None; 4];
            for (i, s) in side.iter_mut().enumerate() {
                let (a, b) = (f[i], f[(i + 1) % 4]);
                let pair = self.edge_faces[&ek(a, b)];
                let gi = if pair[0] == me { pair[1] } else { pair[0] };
                if gi == usize::MAX {
                    continue;
                }
                let g = &self.surface[gi];
                let ia = g.iter().position(|&x| x == a).expect("shared edge");
                let ib = g.iter().position(|&x| x == b).expect("shared edge");
                let na = if g[(ia + 1) % 4] == b { g[(ia + 3) % 4] } else { g[(ia + 1) % 4] };
                let nb = if g[(ib + 1) % 4] == a { g[(ib + 3) % 4] } else { g[(ib + 1) % 4] };
                *s = Some((na, nb));
            }
            'mask: for mask in 0u32..16 {
                let mut far: [Option<u32>; 4] = [None; 4];
                for i in 0..4 {
                    if mask >> i & 1 == 0 {
                        continue;
                    }
                    let Some((na, nb)) = side[i] else { continue 'mask };
                    for (slot, val) in [(i, na), ((i + 1) % 4, nb)] {
                        match far[slot] {
                            None => far[slot] = Some(val),
                            Some(x) if x == val => {}
                            _ => continue 'mask,
                        }
                    }
                }
                let mut fresh = self.n_vertices;
                let mut h = [f[0], f[1], f[2], f[3], 0, 0, 0, 0];
                for i in 0..4 {
                    h[4 + i] = far[i].unwrap_or_else(|| {
                        fresh += 1;
                        fresh - 1
                    });
                }
                // the same hex reached from another base quad
                let mut key = h.map(|v| if v >= self.n_vertices { u32::MAX } else { v });
                key.sort_unstable();
                if !seen.contains(&key) && self.fits(&h) {
                    seen.insert(key);
                    out.push(h);
                }
            }
        }
        out
    }
}

/// The surface after gluing `h`: its glued faces leave, the others arrive.
fn glue(surface: &[Quad], h: &[u32; 8]) -> Vec<Quad> {
    let hq = hex_quads(h);
    let hs: Vec<Quad> = hq.iter().map(sorted).collect();
    let mut out: Vec<Quad> = surface.iter().filter(|q| !hs.contains(&sorted(q))).copied().collect();
    let present: HashSet<Quad> = surface.iter().map(sorted).collect();
    out.extend(hq.iter().filter(|q| !present.contains(&sorted(q))));
    out
}

/// A 128-bit hash of the canonical code of a quad sphere: the smallest
/// breadth-first face traversal code over all starting flags, both
/// orientations. Start flags are prefiltered by their vertex degrees.
pub(super) fn canonical_hash(faces: &[Quad]) -> u128 {
    let mut idx: HashMap<u32, usize> = HashMap::new();
    let cycles: Vec<[usize; 4]> = faces
        .iter()
        .map(|q| {
            q.map(|v| {
                let n = idx.len();
                *idx.entry(v).or_insert(n)
            })
        })
        .collect();
    let nv = idx.len();
    let n = cycles.len();
    let mut deg = vec![0u32; nv];
    let mut open: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut across = vec![[usize::MAX; 4]; n];
    for (fi, c) in cycles.iter().enumerate() {
        for i in 0..4 {
            let (a, b) = (c[i], c[(i + 1) % 4]);
            deg[a] += 1;
            match open.remove(&(a.min(b), a.max(b))) {
                Some((g, j)) => {
                    across[fi][i] = g;
                    across[g][j] = fi;
                }
                None => {
                    open.insert((a.min(b), a.max(b)), (fi, i));
                }
            }
        }
    }
    let walk = |s: usize, fwd: bool| -> [usize; 4] { std::array::from_fn(|k| if fwd { (s + k) % 4 } else { (s + 4 - k) % 4 }) };
    let degrees = |f: usize, s: usize, fwd: bool| walk(s, fwd).map(|k| deg[cycles[f][k]]);
    let mut start = [u32::MAX; 4];
    for f in 0..n {
        for s in 0..4 {
            for fwd in [true, false] {
                start = start.min(degrees(f, s, fwd));
            }
        }
    }
    let mut best: Vec<u32> = vec![];
    let mut label = vec![u32::MAX; nv];
    let mut seen = vec![false; n];
    let mut code: Vec<u32> = Vec::with_capacity(4 * n);
    let mut queue = VecDeque::new();
    for f0 in 0..n {
        for s0 in 0..4 {
            for fw0 in [true, false] {
                if degrees(f0, s0, fw0) != start {
                    continue;
                }
                label.fill(u32::MAX);
                seen.fill(false);
                code.clear();
                queue.clear();
                queue.push_back((f0, s0, fw0));
                seen[f0] = true;
                let mut next = 0;
                let mut smaller = best.is_empty();
                let mut dead = false;
                'bfs: while let Some((f, s, fwd)) = queue.pop_front() {
                    let c = cycles[f];
                    let order = walk(s, fwd);
                    for &k in &order {
                        let v = c[k];
                        if label[v] == u32::MAX {
                            label[v] = next;
                            next += 1;
                        }
                        let at = code.len();
                        code.push(label[v]);
                        if !smaller {
                            if label[v] > best[at] {
                                dead = true;
                                break 'bfs;
                            }
                            smaller = label[v] < best[at];
                        }
                    }
                    for &k in &order {
                        let k2 = if fwd { (k + 1) % 4 } else { (k + 3) % 4 };
                        let g = across[f][if fwd { k } else { k2 }];
                        if seen[g] {
                            continue;
                        }
                        seen[g] = true;
                        let i = cycles[g].iter().position(|&x| x == c[k2]).expect("shared edge");
                        queue.push_back((g, i, cycles[g][(i + 1) % 4] == c[k]));
                    }
                }
                if !dead && smaller {
                    best.clone_from(&code);
                }
            }
        }
    }
    let mut h1 = DefaultHasher::new();
    best.hash(&mut h1);
    let mut h2 = DefaultHasher::new();
    0x9e37_79b9_7f4a_7c15u64.hash(&mut h2);
    best.hash(&mut h2);
    (u128::from(h1.finish()) << 64) | u128::from(h2.finish())
}

pub(super) struct GrowLimits {
    pub max_hexes: usize,
    pub max_faces: usize,
    pub max_states: usize,
    pub deadline: Instant,
}

pub(super) enum Grown {
    /// `accept` took a state.
    Found,
    Exhausted,
    Timeout,
}

struct Node {
    parent: u32,
    hex: [u32; 8],
}

/// Grows balls from a single cube until `accept` takes one. `accept` sees
/// the boundary and hexes of every new state whose hash equals `target`.
pub(super) fn grow(
    target: u128,
    limits: &GrowLimits,
    states: &mut u64,
    mut accept: impl FnMut(&[Quad], &[[u32; 8]]) -> bool,
) -> Grown {
    let cube = [0u32, 1, 2, 3, 4, 5, 6, 7];
    let start: Vec<Quad> = hex_quads(&cube).to_vec();
    if canonical_hash(&start) == target && accept(&start, &[cube]) {
        return Grown::Found;
    }
    let mut nodes = vec![Node { parent: u32::MAX, hex: cube }];
    let mut visited: HashSet<u128> = HashSet::from([canonical_hash(&start)]);
    let mut heap = BinaryHeap::from([(Reverse(start.len()), Reverse(1usize), 0u32)]);
    while let Some((_, Reverse(count), id)) = heap.pop() {
        *states += 1;
        if (*states).is_multiple_of(256) && Instant::now() > limits.deadline {
            return Grown::Timeout;
        }
        let mut hexes = vec![];
        let mut c = id;
        while c != u32::MAX {
            hexes.push(nodes[c as usize].hex);
            c = nodes[c as usize].parent;
        }
        hexes.reverse();
        let mut surface = start.clone();
        for h in &hexes[1..] {
            surface = glue(&surface, h);
        }
        let n_vertices = hexes.iter().flatten().max().map_or(0, |&v| v + 1);
        if count >= limits.max_hexes {
            continue;
        }
        let ctx = Ctx::new(&surface, &hexes, n_vertices);
        for h in ctx.moves() {
            let next = glue(&surface, &h);
            if next.len() > limits.max_faces {
                continue;
            }
            let key = canonical_hash(&next);
            if !visited.insert(key) {
                continue;
            }
            if key == target {
                let mut all = hexes.clone();
                all.push(h);
                if accept(&next, &all) {
                    return Grown::Found;
                }
            }
            if nodes.len() >= limits.max_states {
                return Grown::Exhausted;
            }
            nodes.push(Node { parent: id, hex: h });
            heap.push((Reverse(next.len()), Reverse(count + 1), (nodes.len() - 1) as u32));
        }
    }
    Grown::Exhausted
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_faces() -> Vec<Quad> {
        hex_quads(&[0, 1, 2, 3, 4, 5, 6, 7]).to_vec()
    }

    #[test]
    fn hash_ignores_labels_rotation_and_orientation() {
        let a = cube_faces();
        let perm = [5, 2, 7, 0, 3, 6, 1, 4];
        let mut b: Vec<Quad> = a.iter().map(|q| [perm[q[3] as usize], perm[q[2] as usize], perm[q[1] as usize], perm[q[0] as usize]]).collect();
        b.rotate_left(2);
        assert_eq!(canonical_hash(&a), canonical_hash(&b));
    }

    #[test]
    fn hash_separates_cube_from_block() {
        let block = glue(&cube_faces(), &[4, 5, 6, 7, 8, 9, 10, 11]);
        assert_eq!(block.len(), 10);
        assert_ne!(canonical_hash(&cube_faces()), canonical_hash(&block));
    }

    #[test]
    fn a_cube_has_six_single_face_gluings() {
        let cube = [0, 1, 2, 3, 4, 5, 6, 7];
        let faces = cube_faces();
        let ctx = Ctx::new(&faces, std::slice::from_ref(&cube), 8);
        let moves = ctx.moves();
        assert_eq!(moves.len(), 6);
        assert!(moves.iter().all(|h| h[4..].iter().all(|&v| v >= 8)));
    }

    #[test]
    fn unglued_corners_must_be_fresh() {
        let faces = cube_faces();
        let hexes = [[0, 1, 2, 3, 4, 5, 6, 7]];
        let ctx = Ctx::new(&faces, &hexes, 8);
        // corner 0 is old but not on the glued face
        assert!(!ctx.fits(&[4, 5, 6, 7, 8, 9, 10, 0]));
        assert!(ctx.fits(&[4, 5, 6, 7, 8, 9, 10, 11]));
    }
}
