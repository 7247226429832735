//! Advancing-front search for hexahedral fillings of a quad sphere.
//!
//! A partial filling is a set of hexahedra on the boundary vertices plus
//! fresh interior vertices. The front is every quad still missing a hex on
//! one side: boundary quads not yet covered and hex faces seen only once.
//! Each step picks the front quad with the fewest ways to place a hex on it
//! and branches over those placements. Every complete filling contains
//! exactly one hex on the chosen quad, so sibling branches never revisit the
//! same filling. Iterative deepening on the hex count makes the first
//! filling found one of minimum size for the candidate rules in force.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::grow::{canonical_hash, grow, GrowLimits, Grown};
use super::store::{Provenance, Template};
use super::{canonize, hex_complex, CanonicalBoundary};
use crate::cellcx::{validate, HEX_EDGES, HEX_FACES};
use crate::surface::QuadSurface;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("boundary has an odd number of faces ({0}); no hexahedral filling exists")]
    OddBoundary(usize),
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub max_hexes: usize,
    pub time_budget: Duration,
    /// Also try existing front vertices that are not yet joined to the
    /// corner they would be opposite to.
    pub far_candidates: bool,
    /// Largest filling tried by the advancing front.
    pub front_hexes: usize,
    /// Largest boundary kept while growing.
    pub max_faces: usize,
    /// States stored by the growth before it gives up.
    pub max_states: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            max_hexes: 128,
            time_budget: Duration::from_secs(60),
            far_candidates: false,
            front_hexes: 12,
            max_faces: 24,
            max_states: 2_500_000,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: u64,
    /// Candidate hexes fully checked.
    pub checks: u64,
    pub depth_reached: usize,
}

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Found(Template, SearchStats),
    /// Every filling with at most `max_hexes` hexes allowed by the candidate
    /// rules was ruled out.
    Exhausted(SearchStats),
    BudgetExceeded(SearchStats),
}

type Key = [u32; 4];

fn key(q: &[u32]) -> Key {
    let mut k = [q[0], q[1], q[2], q[3]];
    k.sort_unstable();
    k
}

/// Rotation and direction free form of a 4-cycle.
fn norm(q: &[u32]) -> Key {
    let i = (0..4).min_by_key(|&i| q[i]).unwrap_or(0);
    let (n1, n3) = (q[(i + 1) % 4], q[(i + 3) % 4]);
    if n1 < n3 {
        [q[i], n1, q[(i + 2) % 4], n3]
    } else {
        [q[i], n3, q[(i + 2) % 4], n1]
    }
}

#[derive(Clone, Debug)]
struct FaceInfo {
    cycle: Key,
    hexes: u8,
    boundary: bool,
}

impl FaceInfo {
    fn open(&self) -> bool {
        if self.boundary {
            self.hexes == 0
        } else {
            self.hexes == 1
        }
    }
}

/// Vertex ids are capped so adjacency fits a bitset.
const MAX_VERTICES: u32 = 128;

struct State {
    checks: std::cell::Cell<u64>,
    n_vertices: u32,
    hexes: Vec<[u32; 8]>,
    faces: HashMap<Key, FaceInfo>,
    front: BTreeSet<Key>,
    hexes_at: Vec<Vec<usize>>,
    boundary_at: Vec<Vec<Key>>,
    // edge multiplicities over boundary quads and hexes, and the adjacency they induce
    edges: HashMap<(u32, u32), u32>,
    adj: Vec<u128>,
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

fn hex_faces(h: &[u32; 8]) -> [Key; 6] {
    HEX_FACES.map(|f| [h[f[0]], h[f[1]], h[f[2]], h[f[3]]])
}

fn hex_has_edge(h: &[u32; 8], a: u32, b: u32) -> bool {
    HEX_EDGES.iter().any(|e| edge_key(h[e[0]], h[e[1]]) == edge_key(a, b))
}

fn quad_has_edge(q: &Key, a: u32, b: u32) -> bool {
    (0..4).any(|i| edge_key(q[i], q[(i + 1) % 4]) == edge_key(a, b))
}

fn bit(v: u32) -> u128 {
    1u128 << v
}

fn bits(mut m: u128) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let v = m.trailing_zeros();
            m &= m - 1;
            v
        })
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Corner {
    Old(u32),
    New,
}

struct Candidate {
    hex: [u32; 8],
    fresh: u32,
    closes: usize,
}

impl State {
    fn new(boundary: &CanonicalBoundary) -> Self {
        let n = boundary.vertex_count;
        let mut faces = HashMap::new();
        let mut boundary_at = vec![Vec::new(); n as usize];
        let mut boundary_edges = HashSet::new();
        let mut edges = HashMap::new();
        let mut adj = vec![0u128; n as usize];
        for f in &boundary.faces {
            let k = key(f);
            faces.insert(k, FaceInfo { cycle: norm(f), hexes: 0, boundary: true });
            for i in 0..4 {
                let (a, b) = (f[i], f[(i + 1) % 4]);
                boundary_at[a as usize].push(k);
                if boundary_edges.insert(edge_key(a, b)) {
                    edges.insert(edge_key(a, b), 1);
                    adj[a as usize] |= bit(b);
                    adj[b as usize] |= bit(a);
                }
            }
        }
        let front = faces.keys().copied().collect();
        Self {
            checks: Default::default(),
            n_vertices: n,
            hexes: Vec::new(),
            faces,
            front,
            hexes_at: vec![Vec::new(); n as usize],
            boundary_at,
            edges,
            adj,
        }
    }

    fn adjacent(&self, a: u32, b: u32) -> bool {
        a < self.n_vertices && self.adj[a as usize] & bit(b) != 0
    }

    fn front_neighbours(&self) -> Vec<u128> {
        let mut out = vec![0u128; self.n_vertices as usize];
        for k in &self.front {
            let c = self.faces[k].cycle;
            for i in 0..4 {
                let (a, b) = (c[i], c[(i + 1) % 4]);
                out[a as usize] |= bit(b);
                out[b as usize] |= bit(a);
            }
        }
        out
    }

    /// Whether `hex` can join the partial filling; returns how many of its
    /// faces close an open face.
    fn admissible(&self, hex: &[u32; 8]) -> Option<usize> {
        self.checks.set(self.checks.get() + 1);
        let mut closes = 0;
        for f in hex_faces(hex) {
            if let Some(info) = self.faces.get(&key(&f)) {
                if !info.open() || info.cycle != norm(&f) {
                    return None;
                }
                closes += 1;
            }
        }
        // two vertices of the hex already joined must be joined in the hex
        for (i, &a) in hex.iter().enumerate() {
            for &b in &hex[i + 1..] {
                if self.adjacent(a, b) && !hex_has_edge(hex, a, b) {
                    return None;
                }
            }
        }
        let old = |v: u32| v < self.n_vertices;
        // pairwise intersections with earlier hexes
        let mut others: Vec<usize> = hex.iter().filter(|&&v| old(v)).flat_map(|&v| self.hexes_at[v as usize].iter().copied()).collect();
        others.sort_unstable();
        others.dedup();
        for h in others {
            let other = &self.hexes[h];
            let mut shared = [0u32; 8];
            let mut n = 0;
            for &v in hex {
                if other.contains(&v) {
                    shared[n] = v;
                    n += 1;
                }
            }
            let ok = match n {
                1 => true,
                2 => hex_has_edge(hex, shared[0], shared[1]) && hex_has_edge(other, shared[0], shared[1]),
                4 => {
                    let k = key(&shared[..4]);
                    let a = hex_faces(hex).into_iter().find(|f| key(f) == k);
                    let b = hex_faces(other).into_iter().find(|f| key(f) == k);
                    matches!((a, b), (Some(a), Some(b)) if norm(&a) == norm(&b))
                }
                _ => false,
            };
            if !ok {
                return None;
            }
        }
        // and with the boundary quads, which all end up as hex faces
        let own = hex_faces(hex).map(|f| key(&f));
        for &v in hex {
            let Some(quads) = self.boundary_at.get(v as usize) else { continue };
            for q in quads {
                if own.contains(q) {
                    continue;
                }
                let cycle = self.faces[q].cycle;
                let mut shared = [0u32; 4];
                let mut n = 0;
                for &x in hex {
                    if cycle.contains(&x) {
                        shared[n] = x;
                        n += 1;
                    }
                }
                let ok = match n {
                    1 => true,
                    2 => hex_has_edge(hex, shared[0], shared[1]) && quad_has_edge(&cycle, shared[0], shared[1]),
                    _ => false,
                };
                if !ok {
                    return None;
                }
            }
        }
        Some(closes)
    }

    /// Candidate hexes on `face`, giving up once more than `cap` are found.
    fn candidates(&self, face: &Key, nbrs: &[u128], far: bool, cap: usize) -> Vec<Candidate> {
        let q = self.faces[face].cycle;
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut pick = [Corner::New; 4];
        self.enumerate(&q, nbrs, far, 0, &mut pick, &mut seen, &mut out, cap);
        // the opposite quad may be an open face, whatever its distance
        let qmask = q.iter().fold(0u128, |m, &v| m | bit(v));
        for t in &self.front {
            if out.len() > cap {
                break;
            }
            let c = self.faces[t].cycle;
            if c.iter().any(|&v| qmask & bit(v) != 0) {
                continue;
            }
            for shift in 0..4 {
                for rev in [false, true] {
                    let p: [u32; 4] = std::array::from_fn(|k| if rev { c[(shift + 4 - k) % 4] } else { c[(shift + k) % 4] });
                    if (0..4).all(|i| self.corner_ok(&q, i, p[i])) {
                        self.offer([q[0], q[1], q[2], q[3], p[0], p[1], p[2], p[3]], 0, &mut seen, &mut out);
                    }
                }
            }
        }
        out.sort_by(|a, b| b.closes.cmp(&a.closes).then(a.fresh.cmp(&b.fresh)).then(a.hex.cmp(&b.hex)));
        out
    }

    fn offer(&self, hex: [u32; 8], fresh: u32, seen: &mut HashSet<[u32; 8]>, out: &mut Vec<Candidate>) {
        if !seen.insert(hex) {
            return;
        }
        if let Some(closes) = self.admissible(&hex) {
            out.push(Candidate { hex, fresh, closes });
        }
    }

    /// An existing vertex opposite corner `i` must not already be joined to
    /// any other corner of the base quad.
    fn corner_ok(&self, q: &Key, i: usize, p: u32) -> bool {
        (0..4).all(|j| j == i || (q[j] != p && !self.adjacent(p, q[j])))
    }

    /// Whether the side quad `q[i-1], q[i], p_i, p_{i-1}` can still be part
    /// of a valid hex, given that both its top corners are existing vertices.
    fn side_ok(&self, side: [u32; 4]) -> bool {
        match self.faces.get(&key(&side)) {
            Some(info) => info.open() && info.cycle == norm(&side),
            None => true,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate(
        &self,
        q: &Key,
        nbrs: &[u128],
        far: bool,
        i: usize,
        pick: &mut [Corner; 4],
        seen: &mut HashSet<[u32; 8]>,
        out: &mut Vec<Candidate>,
        cap: usize,
    ) {
        if out.len() > cap {
            return;
        }
        if i == 4 {
            let mut fresh = 0;
            let mut hex = [q[0], q[1], q[2], q[3], 0, 0, 0, 0];
            for (k, c) in pick.iter().enumerate() {
                hex[4 + k] = match *c {
                    Corner::Old(v) => v,
                    Corner::New => {
                        fresh += 1;
                        self.n_vertices + fresh - 1
                    }
                };
            }
            if self.n_vertices + fresh <= MAX_VERTICES {
                self.offer(hex, fresh, seen, out);
            }
            return;
        }
        let mut options: u128 = if far { nbrs.iter().enumerate().filter(|(_, m)| **m != 0).fold(0, |m, (v, _)| m | bit(v as u32)) } else { nbrs[q[i] as usize] };
        // corners of the opposite quad tend to be joined to each other
        if i > 0 {
            if let Corner::Old(prev) = pick[i - 1] {
                options |= nbrs[prev as usize];
            }
        }
        if i == 3 {
            if let Corner::Old(first) = pick[0] {
                options |= nbrs[first as usize];
            }
        }
        for v in bits(options) {
            if pick[..i].contains(&Corner::Old(v)) || !self.corner_ok(q, i, v) {
                continue;
            }
            // the corner diagonally across the top quad must not be joined to v
            if i >= 2 {
                if let Corner::Old(d) = pick[i - 2] {
                    if self.adjacent(v, d) {
                        continue;
                    }
                }
            }
            if i > 0 {
                if let Corner::Old(b) = pick[i - 1] {
                    if !self.side_ok([q[i - 1], q[i], v, b]) {
                        continue;
                    }
                }
            }
            if i == 3 {
                if let Corner::Old(b) = pick[0] {
                    if !self.side_ok([q[3], q[0], b, v]) {
                        continue;
                    }
                }
            }
            pick[i] = Corner::Old(v);
            self.enumerate(q, nbrs, far, i + 1, pick, seen, out, cap);
        }
        pick[i] = Corner::New;
        self.enumerate(q, nbrs, far, i + 1, pick, seen, out, cap);
    }

    fn push(&mut self, hex: [u32; 8], fresh: u32) {
        self.n_vertices += fresh;
        self.hexes_at.resize(self.n_vertices as usize, Vec::new());
        self.adj.resize(self.n_vertices as usize, 0);
        let id = self.hexes.len();
        for &v in &hex {
            self.hexes_at[v as usize].push(id);
        }
        for e in HEX_EDGES {
            let (a, b) = (hex[e[0]], hex[e[1]]);
            *self.edges.entry(edge_key(a, b)).or_insert(0) += 1;
            self.adj[a as usize] |= bit(b);
            self.adj[b as usize] |= bit(a);
        }
        for f in hex_faces(&hex) {
            let k = key(&f);
            let info = self.faces.entry(k).or_insert(FaceInfo { cycle: norm(&f), hexes: 0, boundary: false });
            info.hexes += 1;
            if info.open() {
                self.front.insert(k);
            } else {
                self.front.remove(&k);
            }
        }
        self.hexes.push(hex);
    }

    fn pop(&mut self, fresh: u32) {
        let hex = self.hexes.pop().expect("non-empty");
        for f in hex_faces(&hex) {
            let k = key(&f);
            let info = self.faces.get_mut(&k).expect("face recorded");
            info.hexes -= 1;
            if !info.boundary && info.hexes == 0 {
                self.faces.remove(&k);
                self.front.remove(&k);
            } else if info.open() {
                self.front.insert(k);
            } else {
                self.front.remove(&k);
            }
        }
        for e in HEX_EDGES {
            let (a, b) = (hex[e[0]], hex[e[1]]);
            let k = edge_key(a, b);
            let m = self.edges.get_mut(&k).expect("edge recorded");
            *m -= 1;
            if *m == 0 {
                self.edges.remove(&k);
                self.adj[a as usize] &= !bit(b);
                self.adj[b as usize] &= !bit(a);
            }
        }
        for &v in &hex {
            self.hexes_at[v as usize].pop();
        }
        self.n_vertices -= fresh;
        self.hexes_at.truncate(self.n_vertices as usize);
        self.adj.truncate(self.n_vertices as usize);
    }
}

enum Step {
    Solved,
    Failed,
    Timeout,
}

struct Searcher<'a> {
    state: State,
    boundary: &'a CanonicalBoundary,
    opts: &'a SearchOptions,
    deadline: Instant,
    stats: SearchStats,
}

impl Searcher<'_> {
    fn dfs(&mut self, limit: usize) -> Step {
        self.stats.nodes += 1;
        self.stats.checks = self.state.checks.get();
        self.stats.depth_reached = self.stats.depth_reached.max(self.state.hexes.len());
        if Instant::now() > self.deadline {
            return Step::Timeout;
        }
        if self.state.front.is_empty() {
            return if self.verify() { Step::Solved } else { Step::Failed };
        }
        let room = limit - self.state.hexes.len();
        if room == 0 || self.state.front.len() > 6 * room {
            return Step::Failed;
        }
        let nbrs = self.state.front_neighbours();
        let mut best: Option<Vec<Candidate>> = None;
        for face in &self.state.front {
            let cap = best.as_ref().map_or(usize::MAX, |b| b.len());
            let cands = self.state.candidates(face, &nbrs, self.opts.far_candidates, cap);
            if best.as_ref().is_none_or(|b| cands.len() < b.len()) {
                let done = cands.len() <= 1;
                best = Some(cands);
                if done {
                    break;
                }
            }
        }
        for c in best.unwrap_or_default() {
            self.state.push(c.hex, c.fresh);
            let r = self.dfs(limit);
            if matches!(r, Step::Solved) {
                return r;
            }
            self.state.pop(c.fresh);
            if matches!(r, Step::Timeout) {
                return r;
            }
        }
        Step::Failed
    }

    fn verify(&self) -> bool {
        let cx = hex_complex(&self.state.hexes, self.state.n_vertices);
        validate(&cx, Some(&self.boundary.surface())).ok
    }
}

/// Searches for a filling of `boundary` with at most `max_hexes` hexahedra.
pub fn search_filling(boundary: &CanonicalBoundary, opts: &SearchOptions) -> Result<SearchOutcome, SearchError> {
    let n = boundary.face_count();
    if !n.is_multiple_of(2) {
        return Err(SearchError::OddBoundary(n));
    }
    let deadline = Instant::now() + opts.time_budget;
    let growing = opts.max_hexes > opts.front_hexes;
    // the front gets a tenth of the time when growth follows it
    let front_deadline = if growing { Instant::now() + opts.time_budget / 10 } else { deadline };
    let mut s = Searcher {
        state: State::new(boundary),
        boundary,
        opts,
        deadline: front_deadline,
        stats: SearchStats::default(),
    };
    let mut front_complete = true;
    let lower = n.div_ceil(6).max(1);
    for limit in lower..=opts.max_hexes.min(opts.front_hexes) {
        match s.dfs(limit) {
            Step::Solved => {
                let template = Template {
                    boundary: boundary.clone(),
                    vertex_count: s.state.n_vertices,
                    hexes: s.state.hexes.clone(),
                    provenance: Provenance::Searched(opts.max_hexes),
                };
                return Ok(SearchOutcome::Found(template, s.stats));
            }
            Step::Timeout if !growing => return Ok(SearchOutcome::BudgetExceeded(s.stats)),
            Step::Timeout => {
                front_complete = false;
                break;
            }
            Step::Failed => {}
        }
    }
    if !growing {
        return Ok(SearchOutcome::Exhausted(s.stats));
    }
    let mut stats = s.stats;
    let faces: Vec<[u32; 4]> = boundary.faces.clone();
    let limits = GrowLimits {
        max_hexes: opts.max_hexes,
        max_faces: opts.max_faces.max(n),
        max_states: opts.max_states,
        deadline,
    };
    let mut found = None;
    let outcome = grow(canonical_hash(&faces), &limits, &mut stats.nodes, |surface, hexes| {
        found = as_template(boundary, surface, hexes, opts.max_hexes);
        found.is_some()
    });
    stats.depth_reached = stats.depth_reached.max(found.as_ref().map_or(0, Template::hex_count));
    Ok(match (outcome, found) {
        (Grown::Found, Some(t)) => SearchOutcome::Found(t, stats),
        (Grown::Exhausted, _) if front_complete => SearchOutcome::Exhausted(stats),
        _ => SearchOutcome::BudgetExceeded(stats),
    })
}

/// Relabels a grown ball onto the canonical boundary, if its surface really
/// is isomorphic to it and the result verifies.
fn as_template(boundary: &CanonicalBoundary, surface: &[[u32; 4]], hexes: &[[u32; 8]], budget: usize) -> Option<Template> {
    let on: BTreeSet<u32> = surface.iter().flatten().copied().collect();
    let compact: HashMap<u32, u32> = on.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();
    let polys: Vec<[u32; 4]> = surface.iter().map(|q| q.map(|v| compact[&v])).collect();
    let canon = canonize(&QuadSurface::from_polygons(on.len(), &polys).ok()?).ok()?;
    if canon.boundary.signature != boundary.signature {
        return None;
    }
    let mut label: HashMap<u32, u32> = on.iter().map(|v| (*v, canon.label_of[&compact[v]])).collect();
    let inner: BTreeSet<u32> = hexes.iter().flatten().copied().filter(|v| !on.contains(v)).collect();
    let mut next = boundary.vertex_count;
    for v in inner {
        label.insert(v, next);
        next += 1;
    }
    let template = Template {
        boundary: boundary.clone(),
        vertex_count: next,
        hexes: hexes.iter().map(|h| h.map(|v| label[&v])).collect(),
        provenance: Provenance::Searched(budget),
    };
    template.verify().ok().map(|()| template)
}
