//! Combinatorial cell complexes of dimension at most three.
//!
//! A [`CellComplex`] stores vertices, edges, faces and volumes with explicit
//! boundary incidences. Edges have two endpoint vertices, faces a cyclic
//! sequence of edges, and volumes an unordered set of faces. The inverse
//! (coboundary) incidences are kept up to date as cells are added and removed.
//!
//! Ids are allocated per dimension and never reused, so a cell id names the
//! same cell for the whole lifetime of a complex, even across deletions.

mod validate;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use validate::{
    is_combinatorial_cube, is_quadrilateral, validate, ValidationReport, Violation, ViolationCode,
};

/// Vertex order of a hexahedron: `[0, 1, 2, 3]` is one face traversed
/// cyclically and vertex `i + 4` is the neighbour of vertex `i` on the
/// opposite face.
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 1, 2, 3],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [1, 2, 6, 5],
    [2, 3, 7, 6],
    [3, 0, 4, 7],
];

/// The twelve edges of a hexahedron in [`HEX_FACES`] vertex order.
pub const HEX_EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Identifier of a cell: its dimension plus an index unique within that dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub dim: u8,
    pub index: u32,
}

impl CellId {
    pub const fn vertex(index: u32) -> Self {
        Self { dim: 0, index }
    }

    pub const fn edge(index: u32) -> Self {
        Self { dim: 1, index }
    }

    pub const fn face(index: u32) -> Self {
        Self { dim: 2, index }
    }

    pub const fn volume(index: u32) -> Self {
        Self { dim: 3, index }
    }
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = ["v", "e", "f", "c"][self.dim.min(3) as usize];
        write!(f, "{tag}{}", self.index)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdError {
    #[error("unknown cell {0}")]
    Unknown(CellId),
    #[error("cell {0} has the wrong dimension for this operation")]
    WrongDimension(CellId),
    #[error("cell {0} is still on the boundary of {1}")]
    InUse(CellId, CellId),
    #[error("edge endpoints must be two distinct vertices, got {0} and {1}")]
    DegenerateEdge(u32, u32),
    #[error("vertex cycle {0:?} is too short or repeats a vertex")]
    BadCycle(Vec<u32>),
}

/// Annotation carried by a vertex. Coordinates are never consulted by the
/// meshing pipeline; they only travel from input to output.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vertex {
    pub coords: Option<[f64; 3]>,
}

#[derive(Clone, Debug, Default)]
pub struct CellComplex {
    vertices: Vec<Option<Vertex>>,
    edges: Vec<Option<[u32; 2]>>,
    faces: Vec<Option<Vec<u32>>>,
    volumes: Vec<Option<Vec<u32>>>,
    // cofaces[d][i]: the (d+1)-cells having cell (d, i) on their boundary.
    cofaces: [Vec<Vec<u32>>; 3],
    edge_lookup: HashMap<(u32, u32), u32>,
    face_lookup: HashMap<Vec<u32>, u32>,
    hex_order: HashMap<u32, [u32; 8]>,
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn face_key(edges: &[u32]) -> Vec<u32> {
    let mut key = edges.to_vec();
    key.sort_unstable();
    key
}

fn push_slot<T>(slots: &mut Vec<Option<T>>, value: T) -> u32 {
    slots.push(Some(value));
    (slots.len() - 1) as u32
}

fn ensure_len<T>(v: &mut Vec<T>, len: usize, fill: impl Fn() -> T) {
    while v.len() < len {
        v.push(fill());
    }
}

impl CellComplex {
    pub fn new() -> Self {
        Self::default()
    }

    // ---- counts and iteration -------------------------------------------

    /// Number of live cells of dimension `dim`.
    pub fn count(&self, dim: u8) -> usize {
        match dim {
            0 => self.vertices.iter().flatten().count(),
            1 => self.edges.iter().flatten().count(),
            2 => self.faces.iter().flatten().count(),
            3 => self.volumes.iter().flatten().count(),
            _ => 0,
        }
    }

    /// One past the largest id ever allocated in dimension `dim`.
    pub fn id_bound(&self, dim: u8) -> u32 {
        (match dim {
            0 => self.vertices.len(),
            1 => self.edges.len(),
            2 => self.faces.len(),
            3 => self.volumes.len(),
            _ => 0,
        }) as u32
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = u32> + '_ {
        live_ids(&self.vertices)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = u32> + '_ {
        live_ids(&self.edges)
    }

    pub fn face_ids(&self) -> impl Iterator<Item = u32> + '_ {
        live_ids(&self.faces)
    }

    pub fn volume_ids(&self) -> impl Iterator<Item = u32> + '_ {
        live_ids(&self.volumes)
    }

    /// Every live cell, ordered by dimension and then index.
    pub fn cells(&self) -> Vec<CellId> {
        let mut out = Vec::new();
        out.extend(self.vertex_ids().map(CellId::vertex));
        out.extend(self.edge_ids().map(CellId::edge));
        out.extend(self.face_ids().map(CellId::face));
        out.extend(self.volume_ids().map(CellId::volume));
        out
    }

    pub fn contains(&self, id: CellId) -> bool {
        let i = id.index as usize;
        match id.dim {
            0 => matches!(self.vertices.get(i), Some(Some(_))),
            1 => matches!(self.edges.get(i), Some(Some(_))),
            2 => matches!(self.faces.get(i), Some(Some(_))),
            3 => matches!(self.volumes.get(i), Some(Some(_))),
            _ => false,
        }
    }

    fn check(&self, id: CellId, dim: u8) -> Result<(), IdError> {
        if id.dim != dim {
            return Err(IdError::WrongDimension(id));
        }
        if !self.contains(id) {
            return Err(IdError::Unknown(id));
        }
        Ok(())
    }

    // ---- accessors ------------------------------------------------------

    pub fn vertex(&self, v: u32) -> Result<&Vertex, IdError> {
        self.vertices
            .get(v as usize)
            .and_then(Option::as_ref)
            .ok_or(IdError::Unknown(CellId::vertex(v)))
    }

    pub fn edge(&self, e: u32) -> Result<[u32; 2], IdError> {
        self.edges
            .get(e as usize)
            .and_then(|x| *x)
            .ok_or(IdError::Unknown(CellId::edge(e)))
    }

    /// The cyclic edge sequence bounding face `f`.
    pub fn face_edges(&self, f: u32) -> Result<&[u32], IdError> {
        self.faces
            .get(f as usize)
            .and_then(Option::as_deref)
            .ok_or(IdError::Unknown(CellId::face(f)))
    }

    /// The faces bounding volume `c`.
    pub fn volume_faces(&self, c: u32) -> Result<&[u32], IdError> {
        self.volumes
            .get(c as usize)
            .and_then(Option::as_deref)
            .ok_or(IdError::Unknown(CellId::volume(c)))
    }

    /// Boundary of any cell as ids of dimension `dim - 1` (empty for vertices).
    pub fn boundary(&self, id: CellId) -> Result<Vec<CellId>, IdError> {
        Ok(match id.dim {
            0 => {
                self.vertex(id.index)?;
                Vec::new()
            }
            1 => self.edge(id.index)?.iter().map(|&v| CellId::vertex(v)).collect(),
            2 => self.face_edges(id.index)?.iter().map(|&e| CellId::edge(e)).collect(),
            3 => self.volume_faces(id.index)?.iter().map(|&f| CellId::face(f)).collect(),
            _ => return Err(IdError::Unknown(id)),
        })
    }

    /// Cells of dimension `dim + 1` having `id` on their boundary.
    pub fn coboundary(&self, id: CellId) -> Result<&[u32], IdError> {
        if !self.contains(id) {
            return Err(IdError::Unknown(id));
        }
        if id.dim >= 3 {
            return Ok(&[]);
        }
        Ok(self.cofaces[id.dim as usize]
            .get(id.index as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[]))
    }

    pub fn edge_faces(&self, e: u32) -> &[u32] {
        self.cofaces[1].get(e as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn face_volumes(&self, f: u32) -> &[u32] {
        self.cofaces[2].get(f as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn vertex_edges(&self, v: u32) -> &[u32] {
        self.cofaces[0].get(v as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn find_edge(&self, a: u32, b: u32) -> Option<u32> {
        self.edge_lookup.get(&edge_key(a, b)).copied()
    }

    /// Finds the face whose boundary is exactly the cycle through `cycle`.
    pub fn find_face(&self, cycle: &[u32]) -> Option<u32> {
        let mut edges = Vec::with_capacity(cycle.len());
        for i in 0..cycle.len() {
            edges.push(self.find_edge(cycle[i], cycle[(i + 1) % cycle.len()])?);
        }
        self.face_lookup.get(&face_key(&edges)).copied()
    }

    /// Vertex cycle of face `f`, derived by walking its edge cycle.
    ///
    /// The walk starts at the endpoint of the first edge that is not shared
    /// with the second one, so a face built from a vertex cycle reports that
    /// same cycle back.
    pub fn face_vertices(&self, f: u32) -> Result<Vec<u32>, IdError> {
        let edges = self.face_edges(f)?;
        let ends: Vec<[u32; 2]> = edges
            .iter()
            .map(|&e| self.edge(e))
            .collect::<Result<_, _>>()?;
        walk_cycle(&ends).ok_or_else(|| IdError::BadCycle(ends.iter().map(|e| e[0]).collect()))
    }

    /// Distinct vertices on the closure of any cell, sorted.
    pub fn cell_vertices(&self, id: CellId) -> Result<Vec<u32>, IdError> {
        let mut out = Vec::new();
        self.collect_vertices(id, &mut out)?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    fn collect_vertices(&self, id: CellId, out: &mut Vec<u32>) -> Result<(), IdError> {
        match id.dim {
            0 => {
                self.vertex(id.index)?;
                out.push(id.index);
            }
            1 => out.extend(self.edge(id.index)?),
            2 => {
                for &e in self.face_edges(id.index)? {
                    out.extend(self.edge(e)?);
                }
            }
            3 => {
                for &f in self.volume_faces(id.index)? {
                    for &e in self.face_edges(f)? {
                        out.extend(self.edge(e)?);
                    }
                }
            }
            _ => return Err(IdError::Unknown(id)),
        }
        Ok(())
    }

    /// All cells in the closure of `id` (the cell and everything on its boundary), sorted.
    pub fn closure(&self, id: CellId) -> Result<Vec<CellId>, IdError> {
        let mut out = vec![id];
        let mut frontier = vec![id];
        while let Some(c) = frontier.pop() {
            for b in self.boundary(c)? {
                out.push(b);
                frontier.push(b);
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Stored vertex order of a volume built with [`CellComplex::add_hex`],
    /// or one recovered from its incidences when the volume is a cube.
    pub fn hex_vertices(&self, c: u32) -> Option<[u32; 8]> {
        if let Some(order) = self.hex_order.get(&c) {
            return Some(*order);
        }
        validate::cube_vertex_order(self, c)
    }

    // ---- building -------------------------------------------------------

    pub fn add_vertex(&mut self) -> u32 {
        self.add_vertex_with(Vertex::default())
    }

    pub fn add_vertex_with(&mut self, vertex: Vertex) -> u32 {
        let id = push_slot(&mut self.vertices, vertex);
        ensure_len(&mut self.cofaces[0], self.vertices.len(), Vec::new);
        id
    }

    /// Makes sure vertex `v` exists, allocating intermediate ids as deleted
    /// slots. Used when reproducing a complex with prescribed vertex ids.
    pub fn ensure_vertex(&mut self, v: u32, vertex: Vertex) {
        let need = v as usize + 1;
        ensure_len(&mut self.vertices, need, || None);
        ensure_len(&mut self.cofaces[0], need, Vec::new);
        if self.vertices[v as usize].is_none() {
            self.vertices[v as usize] = Some(vertex);
        }
    }

    pub fn set_coords(&mut self, v: u32, coords: Option<[f64; 3]>) -> Result<(), IdError> {
        match self.vertices.get_mut(v as usize) {
            Some(Some(vx)) => {
                vx.coords = coords;
                Ok(())
            }
            _ => Err(IdError::Unknown(CellId::vertex(v))),
        }
    }

    /// Adds a new edge even if one with the same endpoints exists.
    pub fn add_edge_raw(&mut self, a: u32, b: u32) -> Result<u32, IdError> {
        self.check(CellId::vertex(a), 0)?;
        self.check(CellId::vertex(b), 0)?;
        if a == b {
            return Err(IdError::DegenerateEdge(a, b));
        }
        let id = push_slot(&mut self.edges, [a, b]);
        ensure_len(&mut self.cofaces[1], self.edges.len(), Vec::new);
        self.cofaces[0][a as usize].push(id);
        self.cofaces[0][b as usize].push(id);
        self.edge_lookup.entry(edge_key(a, b)).or_insert(id);
        Ok(id)
    }

    /// Returns the edge joining `a` and `b`, creating it if necessary.
    pub fn edge_between(&mut self, a: u32, b: u32) -> Result<u32, IdError> {
        match self.find_edge(a, b) {
            Some(e) => Ok(e),
            None => self.add_edge_raw(a, b),
        }
    }

    /// Adds a face with the given cyclic edge sequence without checking that
    /// the edges form a cycle; the validator reports malformed faces.
    pub fn add_face_raw(&mut self, edges: Vec<u32>) -> Result<u32, IdError> {
        for &e in &edges {
            self.check(CellId::edge(e), 1)?;
        }
        let key = face_key(&edges);
        let id = push_slot(&mut self.faces, edges.clone());
        ensure_len(&mut self.cofaces[2], self.faces.len(), Vec::new);
        let mut seen = edges.clone();
        seen.sort_unstable();
        seen.dedup();
        for e in seen {
            self.cofaces[1][e as usize].push(id);
        }
        self.face_lookup.entry(key).or_insert(id);
        Ok(id)
    }

    /// Returns the face bounded by the vertex cycle, creating edges and the
    /// face as needed.
    pub fn polygon(&mut self, cycle: &[u32]) -> Result<u32, IdError> {
        let mut distinct = cycle.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        if cycle.len() < 3 || distinct.len() != cycle.len() {
            return Err(IdError::BadCycle(cycle.to_vec()));
        }
        let mut edges = Vec::with_capacity(cycle.len());
        for i in 0..cycle.len() {
            edges.push(self.edge_between(cycle[i], cycle[(i + 1) % cycle.len()])?);
        }
        if let Some(&f) = self.face_lookup.get(&face_key(&edges)) {
            if self.contains(CellId::face(f)) {
                return Ok(f);
            }
        }
        self.add_face_raw(edges)
    }

    /// Adds a volume bounded by the given faces.
    pub fn add_volume(&mut self, faces: Vec<u32>) -> Result<u32, IdError> {
        for &f in &faces {
            self.check(CellId::face(f), 2)?;
        }
        let id = push_slot(&mut self.volumes, faces.clone());
        let mut seen = faces;
        seen.sort_unstable();
        seen.dedup();
        for f in seen {
            self.cofaces[2][f as usize].push(id);
        }
        Ok(id)
    }

    /// Adds a hexahedron on eight vertices in [`HEX_FACES`] order, reusing
    /// existing edges and faces.
    pub fn add_hex(&mut self, v: [u32; 8]) -> Result<u32, IdError> {
        let mut faces = Vec::with_capacity(6);
        for quad in HEX_FACES {
            faces.push(self.polygon(&quad.map(|i| v[i]))?);
        }
        let id = self.add_volume(faces)?;
        self.hex_order.insert(id, v);
        Ok(id)
    }

    /// Deletes a cell. The cell must not be on the boundary of a live cell.
    pub fn remove(&mut self, id: CellId) -> Result<(), IdError> {
        if !self.contains(id) {
            return Err(IdError::Unknown(id));
        }
        if id.dim < 3 {
            if let Some(&up) = self.cofaces[id.dim as usize][id.index as usize].first() {
                return Err(IdError::InUse(id, CellId { dim: id.dim + 1, index: up }));
            }
        }
        let i = id.index as usize;
        match id.dim {
            0 => self.vertices[i] = None,
            1 => {
                let [a, b] = self.edges[i].take().expect("checked live");
                for v in [a, b] {
                    self.cofaces[0][v as usize].retain(|&e| e != id.index);
                }
                if self.edge_lookup.get(&edge_key(a, b)) == Some(&id.index) {
                    self.edge_lookup.remove(&edge_key(a, b));
                    // another parallel edge may still exist
                    if let Some(&other) = self.cofaces[0][a as usize].iter().find(|&&e| {
                        self.edges[e as usize].is_some_and(|[x, y]| edge_key(x, y) == edge_key(a, b))
                    }) {
                        self.edge_lookup.insert(edge_key(a, b), other);
                    }
                }
            }
            2 => {
                let edges = self.faces[i].take().expect("checked live");
                for &e in &edges {
                    self.cofaces[1][e as usize].retain(|&f| f != id.index);
                }
                let key = face_key(&edges);
                if self.face_lookup.get(&key) == Some(&id.index) {
                    self.face_lookup.remove(&key);
                }
            }
            3 => {
                let faces = self.volumes[i].take().expect("checked live");
                for &f in &faces {
                    self.cofaces[2][f as usize].retain(|&c| c != id.index);
                }
                self.hex_order.remove(&id.index);
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    /// Copies the closure of the given faces into a new complex, keeping ids.
    pub fn subcomplex(&self, faces: &[u32]) -> Result<CellComplex, IdError> {
        let mut out = CellComplex::new();
        let mut faces = faces.to_vec();
        faces.sort_unstable();
        faces.dedup();
        let mut edges: Vec<u32> = Vec::new();
        for &f in &faces {
            edges.extend_from_slice(self.face_edges(f)?);
        }
        edges.sort_unstable();
        edges.dedup();
        let mut verts: Vec<u32> = Vec::new();
        for &e in &edges {
            verts.extend(self.edge(e)?);
        }
        verts.sort_unstable();
        verts.dedup();
        for &v in &verts {
            out.ensure_vertex(v, *self.vertex(v)?);
        }
        for &e in &edges {
            let [a, b] = self.edge(e)?;
            out.insert_edge_at(e, a, b);
        }
        for &f in &faces {
            out.insert_face_at(f, self.face_edges(f)?.to_vec());
        }
        Ok(out)
    }

    fn insert_edge_at(&mut self, id: u32, a: u32, b: u32) {
        let need = id as usize + 1;
        ensure_len(&mut self.edges, need, || None);
        ensure_len(&mut self.cofaces[1], need, Vec::new);
        self.edges[id as usize] = Some([a, b]);
        self.cofaces[0][a as usize].push(id);
        self.cofaces[0][b as usize].push(id);
        self.edge_lookup.entry(edge_key(a, b)).or_insert(id);
    }

    fn insert_face_at(&mut self, id: u32, edges: Vec<u32>) {
        let need = id as usize + 1;
        ensure_len(&mut self.faces, need, || None);
        ensure_len(&mut self.cofaces[2], need, Vec::new);
        let mut seen = edges.clone();
        seen.sort_unstable();
        seen.dedup();
        for e in seen {
            self.cofaces[1][e as usize].push(id);
        }
        self.face_lookup.entry(face_key(&edges)).or_insert(id);
        self.faces[id as usize] = Some(edges);
    }
}

fn live_ids<T>(slots: &[Option<T>]) -> impl Iterator<Item = u32> + '_ {
    slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_some())
        .map(|(i, _)| i as u32)
}

/// Walks a cyclic edge list given by endpoints and returns the visited vertex
/// sequence, or `None` if the edges do not form a closed walk.
pub(crate) fn walk_cycle(ends: &[[u32; 2]]) -> Option<Vec<u32>> {
    let first = ends.first()?;
    let starts = match ends.get(1) {
        Some(next) if next.contains(&first[0]) && !next.contains(&first[1]) => [first[1], first[0]],
        _ => [first[0], first[1]],
    };
    'start: for start in starts {
        let mut cur = start;
        let mut seq = Vec::with_capacity(ends.len());
        for e in ends {
            seq.push(cur);
            cur = if e[0] == cur {
                e[1]
            } else if e[1] == cur {
                e[0]
            } else {
                continue 'start;
            };
        }
        if cur == start {
            return Some(seq);
        }
    }
    None
}
