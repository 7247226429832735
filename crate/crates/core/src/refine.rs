//! Interior construction: split each shell quad along its U-U diagonal, cone
//! the triangles to one apex and cut every tetrahedron into four hexahedra.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cellcx::{CellComplex, IdError};
use crate::surface::{Bipartition, QuadSurface, Side};

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("face {0} does not alternate between the two colour classes")]
    NotAlternating(u32),
    #[error("degenerate tetrahedron {0:?}")]
    DegenerateTet([u32; 4]),
    #[error(transparent)]
    Id(#[from] IdError),
}

#[derive(Clone, Debug)]
pub struct TriangulatedShell {
    /// Chosen diagonal of every shell quad, smaller id first.
    pub diagonal_of: BTreeMap<u32, [u32; 2]>,
    /// Two triangles per quad, in face-id order.
    pub triangles: Vec<[u32; 3]>,
    /// The quad each triangle came from.
    pub source: Vec<u32>,
}

pub fn triangulate_shell(shell: &QuadSurface, bip: &Bipartition) -> Result<TriangulatedShell, RefineError> {
    let mut out = TriangulatedShell { diagonal_of: BTreeMap::new(), triangles: Vec::new(), source: Vec::new() };
    for f in shell.faces() {
        let c = shell.face_vertices(f)?;
        let side = |i: usize| bip.class(c[i % 4]);
        let start = (0..2)
            .find(|&i| side(i) == Some(Side::U) && side(i + 2) == Some(Side::U))
            .filter(|&i| side(i + 1) == Some(Side::V) && side(i + 3) == Some(Side::V))
            .ok_or(RefineError::NotAlternating(f))?;
        let [u1, v1, u2, v2] = [0, 1, 2, 3].map(|k| c[(start + k) % 4]);
        out.diagonal_of.insert(f, [u1.min(u2), u1.max(u2)]);
        out.triangles.push([u1, v1, u2]);
        out.triangles.push([u2, v2, u1]);
        out.source.extend([f, f]);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ConedTetMesh {
    pub apex: u32,
    /// Triangle corners followed by the apex.
    pub tets: Vec<[u32; 4]>,
}

/// Joins every triangle to `apex`.
pub fn cone(triangles: &[[u32; 3]], apex: u32) -> ConedTetMesh {
    ConedTetMesh { apex, tets: triangles.iter().map(|t| [t[0], t[1], t[2], apex]).collect() }
}

/// Cones the shell triangles to a fresh vertex of `cx`.
pub fn cone_tetrahedralize(tri: &TriangulatedShell, cx: &mut CellComplex) -> ConedTetMesh {
    let apex = cx.add_vertex();
    cone(&tri.triangles, apex)
}

/// Subdivision vertices shared between neighbouring tetrahedra.
#[derive(Clone, Debug, Default)]
pub struct MidpointRegistry {
    midpoints: BTreeMap<[u32; 2], u32>,
    centroids: BTreeMap<[u32; 3], u32>,
    bodies: Vec<u32>,
}

fn sorted<const N: usize>(mut key: [u32; N]) -> [u32; N] {
    key.sort_unstable();
    key
}

impl MidpointRegistry {
    pub fn midpoint(&self, a: u32, b: u32) -> Option<u32> {
        self.midpoints.get(&sorted([a, b])).copied()
    }

    pub fn centroid(&self, a: u32, b: u32, c: u32) -> Option<u32> {
        self.centroids.get(&sorted([a, b, c])).copied()
    }

    /// Body vertex of the `i`-th tetrahedron.
    pub fn body(&self, i: usize) -> Option<u32> {
        self.bodies.get(i).copied()
    }

    pub fn midpoint_count(&self) -> usize {
        self.midpoints.len()
    }

    pub fn centroid_count(&self) -> usize {
        self.centroids.len()
    }

    /// The three quads a split triangle leaves on its face, one per corner,
    /// each as (corner, midpoint, centroid, midpoint).
    pub fn triangle_quads(&self, t: [u32; 3]) -> Option<[[u32; 4]; 3]> {
        let cent = self.centroid(t[0], t[1], t[2])?;
        let mut out = [[0; 4]; 3];
        for i in 0..3 {
            let (c, x, y) = (t[i], t[(i + 1) % 3], t[(i + 2) % 3]);
            out[i] = [c, self.midpoint(c, x)?, cent, self.midpoint(c, y)?];
        }
        Some(out)
    }
}

/// Cuts every tetrahedron into the four hexahedra around its corners and
/// returns their volume ids. Shared edges and triangles get one subdivision
/// vertex each, so neighbouring tetrahedra are split consistently.
pub fn split_tets_to_hexes(
    cx: &mut CellComplex,
    mesh: &ConedTetMesh,
) -> Result<(Vec<u32>, MidpointRegistry), RefineError> {
    let mut reg = MidpointRegistry::default();
    for t in &mesh.tets {
        if sorted(*t).windows(2).any(|w| w[0] == w[1]) {
            return Err(RefineError::DegenerateTet(*t));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                reg.midpoints.entry(sorted([t[i], t[j]])).or_insert_with(|| cx.add_vertex());
            }
        }
        for skip in (0..4).rev() {
            let tri: Vec<u32> = (0..4).filter(|&k| k != skip).map(|k| t[k]).collect();
            reg.centroids.entry(sorted([tri[0], tri[1], tri[2]])).or_insert_with(|| cx.add_vertex());
        }
        reg.bodies.push(cx.add_vertex());
    }
    let mut hexes = Vec::with_capacity(4 * mesh.tets.len());
    for (ti, t) in mesh.tets.iter().enumerate() {
        for &c in t {
            let mut rest: Vec<u32> = t.iter().copied().filter(|&x| x != c).collect();
            rest.sort_unstable();
            let [a, b, d] = [rest[0], rest[1], rest[2]];
            let m = |x: u32| reg.midpoints[&sorted([c, x])];
            let f = |x: u32, y: u32| reg.centroids[&sorted([c, x, y])];
            let hex = [c, m(a), f(a, b), m(b), m(d), f(a, d), reg.bodies[ti], f(b, d)];
            hexes.push(cx.add_hex(hex)?);
        }
    }
    Ok((hexes, reg))
}
