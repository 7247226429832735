//! Edge sets meeting every face an odd number of times, via a T-join on the
//! dual graph with T = all dual nodes.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use super::{dual_graph, matching, DualGraph, QuadSurface, SurfaceError};

/// Above this many faces the exact matcher is replaced by greedy + 2-swap.
pub const EXACT_MATCHING_LIMIT: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OddMethod {
    Matching,
    TreeJoin,
}

impl fmt::Display for OddMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OddMethod::Matching => "matching",
            OddMethod::TreeJoin => "tree-join",
        })
    }
}

impl FromStr for OddMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "matching" => Ok(OddMethod::Matching),
            "tree-join" | "tree_join" => Ok(OddMethod::TreeJoin),
            other => Err(format!("unknown odd-cover method `{other}`")),
        }
    }
}

/// A walk in the dual graph: `faces[i]` and `faces[i + 1]` share `edges[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualPath {
    pub faces: Vec<u32>,
    pub edges: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OddEdgeSet {
    pub edges: BTreeSet<u32>,
    /// Matched shortest paths; empty for the tree join.
    pub paths: Vec<DualPath>,
    pub method: OddMethod,
    /// False when the greedy fallback produced the matching.
    pub exact: bool,
}

impl OddEdgeSet {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: u32) -> bool {
        self.edges.contains(&e)
    }

    /// Faces meeting the set an even number of times (should be none).
    pub fn even_faces(&self, surface: &QuadSurface) -> Vec<u32> {
        surface
            .faces()
            .into_iter()
            .filter(|&f| {
                let hits = surface.face_edges(f).map(|es| es.iter().filter(|e| self.contains(**e)).count());
                hits.map_or(true, |h| h % 2 == 0)
            })
            .collect()
    }

    pub fn paths_edge_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.paths.iter().flat_map(|p| &p.edges).all(|&e| seen.insert(e))
    }

    /// Whether the union of the path arcs is acyclic.
    pub fn paths_form_forest(&self) -> bool {
        let arcs: BTreeSet<(u32, u32)> = self
            .paths
            .iter()
            .flat_map(|p| p.faces.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))))
            .collect();
        let mut parent = std::collections::BTreeMap::new();
        fn find(parent: &mut std::collections::BTreeMap<u32, u32>, x: u32) -> u32 {
            let p = *parent.entry(x).or_insert(x);
            if p == x {
                return x;
            }
            let r = find(parent, p);
            parent.insert(x, r);
            r
        }
        for (a, b) in arcs {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent.insert(ra, rb);
        }
        true
    }
}

pub fn odd_cover(surface: &QuadSurface, method: OddMethod) -> Result<OddEdgeSet, SurfaceError> {
    odd_cover_with_limit(surface, method, EXACT_MATCHING_LIMIT)
}

/// As [`odd_cover`], with an explicit node count above which matching is greedy.
pub fn odd_cover_with_limit(surface: &QuadSurface, method: OddMethod, exact_limit: usize) -> Result<OddEdgeSet, SurfaceError> {
    let n = surface.face_count();
    if !n.is_multiple_of(2) {
        return Err(SurfaceError::OddFaceCount(n));
    }
    let dual = dual_graph(surface);
    Ok(match method {
        OddMethod::Matching => by_matching(&dual, exact_limit),
        OddMethod::TreeJoin => by_tree_join(&dual),
    })
}

/// BFS tree from `root`: distance and parent arc per node.
fn bfs(dual: &DualGraph, root: usize) -> (Vec<u32>, Vec<Option<(usize, usize)>>) {
    let n = dual.nodes.len();
    let mut dist = vec![u32::MAX; n];
    let mut parent = vec![None; n];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for &(y, arc) in dual.neighbours(x) {
            if dist[y] == u32::MAX {
                dist[y] = dist[x] + 1;
                parent[y] = Some((x, arc));
                queue.push_back(y);
            }
        }
    }
    (dist, parent)
}

fn by_matching(dual: &DualGraph, exact_limit: usize) -> OddEdgeSet {
    let n = dual.nodes.len();
    let trees: Vec<_> = (0..n).map(|r| bfs(dual, r)).collect();
    let weight = |a: usize, b: usize| -> i64 {
        let d = trees[a].0[b];
        // disconnected pairs are priced out rather than forbidden
        if d == u32::MAX {
            4 * n as i64 + 4
        } else {
            d as i64
        }
    };
    let exact = n <= exact_limit;
    let pairs = if exact { matching::min_weight_perfect(n, weight) } else { matching::greedy_perfect(n, weight) };

    let mut edges = BTreeSet::new();
    let mut paths = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        // walk back from b along the BFS tree rooted at a
        let parent = &trees[a].1;
        let mut faces = vec![dual.nodes[b]];
        let mut arcs = Vec::new();
        let mut x = b;
        while let Some((p, arc)) = parent[x] {
            arcs.push(dual.arcs[arc].edge);
            faces.push(dual.nodes[p]);
            x = p;
        }
        faces.reverse();
        arcs.reverse();
        for &e in &arcs {
            if !edges.remove(&e) {
                edges.insert(e);
            }
        }
        paths.push(DualPath { faces, edges: arcs });
    }
    OddEdgeSet { edges, paths, method: OddMethod::Matching, exact }
}

fn by_tree_join(dual: &DualGraph) -> OddEdgeSet {
    let n = dual.nodes.len();
    let mut edges = BTreeSet::new();
    let mut visited = vec![false; n];
    for root in 0..n {
        if visited[root] {
            continue;
        }
        let (dist, parent) = bfs(dual, root);
        let mut order: Vec<usize> = (0..n).filter(|&x| dist[x] != u32::MAX).collect();
        order.sort_by_key(|&x| (dist[x], x));
        let mut parity = vec![false; n];
        for &x in order.iter().rev() {
            visited[x] = true;
            if let Some((p, arc)) = parent[x] {
                if !parity[x] {
                    edges.insert(dual.arcs[arc].edge);
                    parity[x] = true;
                    parity[p] = !parity[p];
                }
            }
        }
    }
    OddEdgeSet { edges, paths: Vec::new(), method: OddMethod::TreeJoin, exact: true }
}
