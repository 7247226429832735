//! Closed quadrilateral surfaces and the graph algorithms run on them.

mod curves;
pub mod matching;
mod oddcover;

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::cellcx::{self, is_quadrilateral, CellComplex, IdError, Vertex};

pub use curves::{dual_curves, CurveStep, DualCurve, DualCurveSet};
pub use oddcover::{odd_cover, odd_cover_with_limit, DualPath, OddEdgeSet, OddMethod, EXACT_MATCHING_LIMIT};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("face f{0} is not a quadrilateral")]
    NonQuadFace(u32),
    #[error("surface has an odd number of faces ({0})")]
    OddFaceCount(usize),
    #[error("edge e{edge} lies in {faces} faces; the surface is not closed")]
    NotClosed { edge: u32, faces: usize },
    #[error("the faces around vertex v{0} do not form a single disk")]
    NonManifoldVertex(u32),
    #[error("surface has {0} connected components")]
    Disconnected(usize),
    #[error("surface is not a sphere (Euler characteristic {0})")]
    NotASphere(i64),
    #[error("1-skeleton is not bipartite; odd cycle {0:?}")]
    NotBipartite(Vec<u32>),
    #[error("surface is not a valid cell complex: {0}")]
    InvalidComplex(String),
    #[error("face f{0} lies in more than two volumes")]
    NonManifoldFace(u32),
    #[error("a surface cannot contain volumes")]
    HasVolumes,
    #[error(transparent)]
    Id(#[from] IdError),
}

/// A 2-dimensional complex intended to be a closed quadrilateral surface.
///
/// Construction only checks that the complex has no volumes; the remaining
/// requirements are enforced by [`check_preconditions`].
#[derive(Clone, Debug)]
pub struct QuadSurface {
    cx: CellComplex,
}

impl QuadSurface {
    pub fn new(cx: CellComplex) -> Result<Self, SurfaceError> {
        if cx.count(3) > 0 {
            return Err(SurfaceError::HasVolumes);
        }
        Ok(Self { cx })
    }

    /// Builds a surface on vertices `0..n_vertices` from vertex cycles. Face
    /// `i` gets id `i`; edges are numbered by first appearance.
    pub fn from_polygons<P: AsRef<[u32]>>(n_vertices: usize, polygons: &[P]) -> Result<Self, SurfaceError> {
        let mut cx = CellComplex::new();
        for _ in 0..n_vertices {
            cx.add_vertex();
        }
        for p in polygons {
            let p = p.as_ref();
            let mut edges = Vec::with_capacity(p.len());
            for i in 0..p.len() {
                edges.push(cx.edge_between(p[i], p[(i + 1) % p.len()])?);
            }
            cx.add_face_raw(edges)?;
        }
        Self::new(cx)
    }

    pub fn complex(&self) -> &CellComplex {
        &self.cx
    }

    pub fn into_complex(self) -> CellComplex {
        self.cx
    }

    pub fn vertex_count(&self) -> usize {
        self.cx.count(0)
    }

    pub fn edge_count(&self) -> usize {
        self.cx.count(1)
    }

    pub fn face_count(&self) -> usize {
        self.cx.count(2)
    }

    pub fn vertices(&self) -> Vec<u32> {
        self.cx.vertex_ids().collect()
    }

    pub fn edges(&self) -> Vec<u32> {
        self.cx.edge_ids().collect()
    }

    pub fn faces(&self) -> Vec<u32> {
        self.cx.face_ids().collect()
    }

    pub fn edge_faces(&self, e: u32) -> &[u32] {
        self.cx.edge_faces(e)
    }

    pub fn edge(&self, e: u32) -> Result<[u32; 2], IdError> {
        self.cx.edge(e)
    }

    pub fn face_edges(&self, f: u32) -> Result<&[u32], IdError> {
        self.cx.face_edges(f)
    }

    pub fn face_vertices(&self, f: u32) -> Result<Vec<u32>, IdError> {
        self.cx.face_vertices(f)
    }

    pub fn coords(&self, v: u32) -> Option<[f64; 3]> {
        self.cx.vertex(v).ok().and_then(|x: &Vertex| x.coords)
    }

    /// Neighbours of `v` along edges, sorted by id.
    pub fn neighbours(&self, v: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .cx
            .vertex_edges(v)
            .iter()
            .filter_map(|&e| self.cx.edge(e).ok())
            .map(|[a, b]| if a == v { b } else { a })
            .collect();
        out.sort_unstable();
        out
    }

    /// The face across edge `e` from face `f`.
    pub fn opposite_face(&self, e: u32, f: u32) -> Option<u32> {
        self.edge_faces(e).iter().copied().find(|&g| g != f)
    }
}

/// The faces of `cx` lying in exactly one volume, with their edges and
/// vertices, keeping ids.
pub fn boundary_surface(cx: &CellComplex) -> Result<QuadSurface, SurfaceError> {
    let mut faces = Vec::new();
    for f in cx.face_ids() {
        match cx.face_volumes(f).len() {
            1 => faces.push(f),
            0 | 2 => {}
            _ => return Err(SurfaceError::NonManifoldFace(f)),
        }
    }
    QuadSurface::new(cx.subcomplex(&faces)?)
}

/// V - E + F over the live cells of the surface.
pub fn euler_characteristic(surface: &QuadSurface) -> i64 {
    surface.vertex_count() as i64 - surface.edge_count() as i64 + surface.face_count() as i64
}

/// Gate run before meshing: all faces quadrilateral, an even face count, a
/// valid closed connected 2-manifold with Euler characteristic 2, and a
/// bipartite 1-skeleton.
pub fn check_preconditions(surface: &QuadSurface) -> Result<(), SurfaceError> {
    let cx = surface.complex();
    for f in cx.face_ids() {
        if !is_quadrilateral(cx, f)? {
            return Err(SurfaceError::NonQuadFace(f));
        }
    }
    let n = surface.face_count();
    if !n.is_multiple_of(2) {
        return Err(SurfaceError::OddFaceCount(n));
    }
    check_closed_manifold(surface)?;
    let report = cellcx::validate(cx, None);
    if !report.ok {
        return Err(SurfaceError::InvalidComplex(
            report.violations.first().map(ToString::to_string).unwrap_or_default(),
        ));
    }
    let chi = euler_characteristic(surface);
    if chi != 2 {
        return Err(SurfaceError::NotASphere(chi));
    }
    bipartition(surface).map(|_| ())
}

fn check_closed_manifold(surface: &QuadSurface) -> Result<(), SurfaceError> {
    let cx = surface.complex();
    for e in cx.edge_ids() {
        let faces = cx.edge_faces(e).len();
        if faces != 2 {
            return Err(SurfaceError::NotClosed { edge: e, faces });
        }
    }
    for v in cx.vertex_ids() {
        let edges = cx.vertex_edges(v);
        if edges.is_empty() {
            return Err(SurfaceError::NonManifoldVertex(v));
        }
        // the faces around v, linked through the edges at v, must form one cycle
        let mut faces: Vec<u32> = edges.iter().flat_map(|&e| cx.edge_faces(e).iter().copied()).collect();
        faces.sort_unstable();
        faces.dedup();
        if faces.len() != edges.len() {
            return Err(SurfaceError::NonManifoldVertex(v));
        }
        let mut seen = vec![edges[0]];
        let mut stack = vec![edges[0]];
        while let Some(e) = stack.pop() {
            for &f in cx.edge_faces(e) {
                for &g in cx.face_edges(f)? {
                    if edges.contains(&g) && !seen.contains(&g) {
                        seen.push(g);
                        stack.push(g);
                    }
                }
            }
        }
        if seen.len() != edges.len() {
            return Err(SurfaceError::NonManifoldVertex(v));
        }
    }
    let components = components(surface);
    if components != 1 {
        return Err(SurfaceError::Disconnected(components));
    }
    Ok(())
}

fn components(surface: &QuadSurface) -> usize {
    let mut seen = BTreeMap::new();
    let mut count = 0;
    for v in surface.vertices() {
        if seen.contains_key(&v) {
            continue;
        }
        count += 1;
        seen.insert(v, ());
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            for y in surface.neighbours(x) {
                if seen.insert(y, ()).is_none() {
                    stack.push(y);
                }
            }
        }
    }
    count
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    U,
    V,
}

/// Two-colouring of the vertices with `|U| <= |V|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    class_of: BTreeMap<u32, Side>,
    sizes: (usize, usize),
}

impl Bipartition {
    pub fn class(&self, v: u32) -> Option<Side> {
        self.class_of.get(&v).copied()
    }

    pub fn sizes(&self) -> (usize, usize) {
        self.sizes
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Side)> + '_ {
        self.class_of.iter().map(|(&v, &s)| (v, s))
    }

    pub fn u_vertices(&self) -> Vec<u32> {
        self.iter().filter(|&(_, s)| s == Side::U).map(|(v, _)| v).collect()
    }

    /// The same colouring carried to another vertex numbering.
    pub fn transport(&self, map: impl Fn(u32) -> u32) -> Bipartition {
        Bipartition {
            class_of: self.class_of.iter().map(|(&v, &s)| (map(v), s)).collect(),
            sizes: self.sizes,
        }
    }
}

/// Breadth-first two-colouring from the smallest vertex id. The smaller
/// class is called U; on a tie U is the class of the smallest vertex.
pub fn bipartition(surface: &QuadSurface) -> Result<Bipartition, SurfaceError> {
    let mut colour: BTreeMap<u32, u8> = BTreeMap::new();
    let mut parent: BTreeMap<u32, u32> = BTreeMap::new();
    for root in surface.vertices() {
        if colour.contains_key(&root) {
            continue;
        }
        colour.insert(root, 0);
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            let cx = colour[&x];
            for y in surface.neighbours(x) {
                match colour.get(&y) {
                    None => {
                        colour.insert(y, 1 - cx);
                        parent.insert(y, x);
                        queue.push_back(y);
                    }
                    Some(&cy) if cy == cx => {
                        return Err(SurfaceError::NotBipartite(odd_cycle(&parent, x, y)));
                    }
                    Some(_) => {}
                }
            }
        }
    }
    let zeros = colour.values().filter(|&&c| c == 0).count();
    let ones = colour.len() - zeros;
    let u_colour = if zeros <= ones { 0 } else { 1 };
    let class_of = colour
        .into_iter()
        .map(|(v, c)| (v, if c == u_colour { Side::U } else { Side::V }))
        .collect();
    Ok(Bipartition { class_of, sizes: (zeros.min(ones), zeros.max(ones)) })
}

fn odd_cycle(parent: &BTreeMap<u32, u32>, x: u32, y: u32) -> Vec<u32> {
    let path_to_root = |mut v: u32| {
        let mut p = vec![v];
        while let Some(&u) = parent.get(&v) {
            p.push(u);
            v = u;
        }
        p
    };
    let px = path_to_root(x);
    let py = path_to_root(y);
    let meet = px.iter().copied().find(|v| py.contains(v)).expect("same tree");
    let mut cycle: Vec<u32> = px.iter().copied().take_while(|&v| v != meet).collect();
    cycle.push(meet);
    let back: Vec<u32> = py.iter().copied().take_while(|&v| v != meet).collect();
    cycle.extend(back.into_iter().rev());
    cycle
}

/// One arc of the dual graph, crossing primal edge `edge`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualArc {
    pub a: usize,
    pub b: usize,
    pub edge: u32,
}

/// Face adjacency graph: a node per face, an arc per edge.
#[derive(Clone, Debug)]
pub struct DualGraph {
    pub nodes: Vec<u32>,
    pub arcs: Vec<DualArc>,
    node_of: BTreeMap<u32, usize>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl DualGraph {
    pub fn node_of(&self, face: u32) -> Option<usize> {
        self.node_of.get(&face).copied()
    }

    /// `(neighbour node, arc index)` pairs, sorted.
    pub fn neighbours(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }
}

/// Dual graph ordered by primal ids. Edges not lying in exactly two faces
/// are skipped.
pub fn dual_graph(surface: &QuadSurface) -> DualGraph {
    let nodes = surface.faces();
    let node_of: BTreeMap<u32, usize> = nodes.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let mut arcs = Vec::new();
    let mut adjacency = vec![Vec::new(); nodes.len()];
    for e in surface.edges() {
        if let [f, g] = surface.edge_faces(e) {
            let (a, b) = (node_of[f], node_of[g]);
            let (a, b) = (a.min(b), a.max(b));
            adjacency[a].push((b, arcs.len()));
            adjacency[b].push((a, arcs.len()));
            arcs.push(DualArc { a, b, edge: e });
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
    }
    DualGraph { nodes, arcs, node_of, adjacency }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn cube_passes_preconditions() {
        let cube = gen::cube();
        check_preconditions(&cube).unwrap();
        assert_eq!(euler_characteristic(&cube), 2);
    }

    #[test]
    fn split_face_is_rejected() {
        // cube with the top face cut into two triangles
        let polys: Vec<Vec<u32>> = vec![
            vec![0, 3, 2, 1],
            vec![0, 1, 5, 4],
            vec![1, 2, 6, 5],
            vec![2, 3, 7, 6],
            vec![3, 0, 4, 7],
            vec![4, 5, 6],
            vec![4, 6, 7],
        ];
        let s = QuadSurface::from_polygons(8, &polys).unwrap();
        assert_eq!(check_preconditions(&s), Err(SurfaceError::NonQuadFace(5)));
    }

    #[test]
    fn odd_face_count_fires_before_topology() {
        // seven quads, not closed: parity is reported first
        let polys: Vec<[u32; 4]> = (0..7).map(|i| [4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3]).collect();
        let s = QuadSurface::from_polygons(28, &polys).unwrap();
        assert_eq!(check_preconditions(&s), Err(SurfaceError::OddFaceCount(7)));
    }

    #[test]
    fn open_surface_is_rejected() {
        let s = QuadSurface::from_polygons(4, &[[0, 1, 2, 3], [0, 3, 2, 1]]).unwrap();
        // two quads glued along all four edges: closed but not a valid complex
        assert!(matches!(check_preconditions(&s), Err(SurfaceError::InvalidComplex(_))));
        let ring = QuadSurface::from_polygons(8, &[[0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]]).unwrap();
        assert!(matches!(check_preconditions(&ring), Err(SurfaceError::NotClosed { .. })));
        assert!(bipartition(&ring).is_ok());
    }

    /// 3x3 quad torus: vertex (i, j) = 3i + j with wraparound.
    pub(crate) fn torus3() -> QuadSurface {
        let id = |i: u32, j: u32| 3 * (i % 3) + (j % 3);
        let polys: Vec<[u32; 4]> = (0..3)
            .flat_map(|i| (0..3).map(move |j| [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]))
            .collect();
        QuadSurface::from_polygons(9, &polys).unwrap()
    }

    #[test]
    fn torus_has_euler_characteristic_zero() {
        let t = torus3();
        assert_eq!((t.vertex_count(), t.edge_count(), t.face_count()), (9, 18, 9));
        assert_eq!(euler_characteristic(&t), 0);
        // nine faces: parity gate fires first
        assert_eq!(check_preconditions(&t), Err(SurfaceError::OddFaceCount(9)));
    }

    #[test]
    fn even_torus_is_not_a_sphere() {
        let id = |i: u32, j: u32| 4 * (i % 4) + (j % 4);
        let polys: Vec<[u32; 4]> = (0..4)
            .flat_map(|i| (0..4).map(move |j| [id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]))
            .collect();
        let t = QuadSurface::from_polygons(16, &polys).unwrap();
        assert_eq!(check_preconditions(&t), Err(SurfaceError::NotASphere(0)));
    }

    #[test]
    fn cube_bipartition_is_the_two_tetrads() {
        let cube = gen::cube();
        let bip = bipartition(&cube).unwrap();
        assert_eq!(bip.sizes(), (4, 4));
        assert_eq!(bip.class(0), Some(Side::U));
        let u = bip.u_vertices();
        // no two U vertices are adjacent
        for &a in &u {
            for b in cube.neighbours(a) {
                assert_eq!(bip.class(b), Some(Side::V));
            }
        }
    }

    #[test]
    fn grid_cube_bipartition_sizes() {
        // oracle: the colouring is the parity of the lattice coordinates; of
        // the 27 points of {0,1,2}^3 the hidden centre has odd sum, so the
        // surface keeps 14 even and 12 odd points
        let s = gen::grid_cube(2);
        let bip = bipartition(&s).unwrap();
        let odd = s
            .vertices()
            .into_iter()
            .filter(|&v| {
                let p = s.coords(v).unwrap();
                p.iter().map(|c| (c * 2.0).round() as i64).sum::<i64>() % 2 == 1
            })
            .count();
        assert_eq!(odd, 12);
        assert_eq!(bip.sizes(), (12, 14));
        for e in s.edges() {
            let [a, b] = s.edge(e).unwrap();
            assert_ne!(bip.class(a), bip.class(b));
        }
    }

    #[test]
    fn odd_cycle_certificate() {
        let tri = QuadSurface::from_polygons(3, &[[0, 1, 2]]).unwrap();
        match bipartition(&tri) {
            Err(SurfaceError::NotBipartite(c)) => {
                assert_eq!(c.len() % 2, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cube_dual_is_octahedron() {
        let d = dual_graph(&gen::cube());
        assert_eq!(d.nodes.len(), 6);
        assert_eq!(d.arcs.len(), 12);
        assert!((0..6).all(|n| d.degree(n) == 4));
        let d2 = dual_graph(&gen::grid_cube(2));
        assert_eq!((d2.nodes.len(), d2.arcs.len()), (24, 48));
    }
}
