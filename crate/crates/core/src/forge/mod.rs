//! Canonical forms of quad spheres, the filling search, and the template store.

mod grow;
mod search;
mod store;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cellcx::CellComplex;
use crate::surface::QuadSurface;

pub use search::{search_filling, SearchError, SearchOptions, SearchOutcome, SearchStats};
pub use store::{instantiate, instantiate_with, Provenance, StoreError, Template, TemplateStore};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CanonError {
    #[error("face f{0} is not a quadrilateral")]
    NonQuadFace(u32),
    #[error("edge e{0} does not lie in exactly two faces")]
    NotClosed(u32),
    #[error("surface is not connected")]
    Disconnected,
    #[error("surface is not orientable")]
    NonOrientable,
}

/// A quad sphere relabelled into canonical form.
///
/// Vertices are `0..vertex_count`; `faces` lists the vertex cycles in the
/// canonical traversal order. Two surfaces are isomorphic (allowing
/// reflection) exactly when their signatures agree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CanonicalBoundary {
    pub vertex_count: u32,
    pub faces: Vec<[u32; 4]>,
    pub signature: Vec<u8>,
}

impl CanonicalBoundary {
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Hex digest of the signature, used as the store key.
    pub fn key(&self) -> String {
        hex_digest(&self.signature)
    }

    /// The canonical boundary as a surface on vertex ids `0..vertex_count`.
    pub fn surface(&self) -> QuadSurface {
        QuadSurface::from_polygons(self.vertex_count as usize, &self.faces).expect("canonical faces are valid")
    }
}

impl fmt::Display for CanonicalBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "quad sphere V={} F={} key={}", self.vertex_count, self.faces.len(), &self.key()[..12])
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// The result of canonicalizing a concrete surface: the canonical form plus
/// the relabelling that produced it.
#[derive(Clone, Debug)]
pub struct Canonized {
    pub boundary: CanonicalBoundary,
    /// Original vertex id to canonical label.
    pub label_of: BTreeMap<u32, u32>,
}

impl Canonized {
    /// Canonical label to original vertex id.
    pub fn vertex_of(&self) -> Vec<u32> {
        let mut out = vec![0; self.label_of.len()];
        for (&v, &l) in &self.label_of {
            out[l as usize] = v;
        }
        out
    }
}

pub fn canonicalize(surface: &QuadSurface) -> Result<CanonicalBoundary, CanonError> {
    canonize(surface).map(|c| c.boundary)
}

/// Local copy of the surface as vertex cycles with face adjacency.
struct Quads {
    verts: Vec<u32>,
    cycles: Vec<[usize; 4]>,
    // across[f][i]: face on the other side of the side (cycle[i], cycle[i+1])
    across: Vec<[usize; 4]>,
}

impl Quads {
    fn new(surface: &QuadSurface) -> Result<Self, CanonError> {
        let verts = surface.vertices();
        let index: BTreeMap<u32, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let faces = surface.faces();
        let mut cycles = Vec::with_capacity(faces.len());
        let mut sides: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
        for (fi, &f) in faces.iter().enumerate() {
            let cyc = surface.face_vertices(f).map_err(|_| CanonError::NonQuadFace(f))?;
            let cyc: [usize; 4] = cyc
                .iter()
                .map(|v| index[v])
                .collect::<Vec<_>>()
                .try_into()
                .map_err(|_| CanonError::NonQuadFace(f))?;
            for i in 0..4 {
                let (a, b) = (cyc[i], cyc[(i + 1) % 4]);
                sides.entry((a.min(b), a.max(b))).or_default().push((fi, i));
            }
            cycles.push(cyc);
        }
        let mut across = vec![[usize::MAX; 4]; cycles.len()];
        for (&(a, b), owners) in &sides {
            let [(f, i), (g, j)] = owners.as_slice() else {
                let e = surface.complex().find_edge(verts[a], verts[b]).unwrap_or(u32::MAX);
                return Err(CanonError::NotClosed(e));
            };
            across[*f][*i] = *g;
            across[*g][*j] = *f;
        }
        Ok(Self { verts, cycles, across })
    }

    /// Position of directed side `a -> b` in face `f` walking in direction
    /// `dir`, as the index of `a`.
    fn locate(&self, f: usize, a: usize, b: usize) -> Option<(usize, bool)> {
        let c = &self.cycles[f];
        let i = c.iter().position(|&x| x == a)?;
        if c[(i + 1) % 4] == b {
            Some((i, true))
        } else if c[(i + 3) % 4] == b {
            Some((i, false))
        } else {
            None
        }
    }

    /// Traversal code from one flag; `None` if it exceeds `bound`.
    fn code(&self, face: usize, start: usize, forward: bool, bound: Option<&[u32]>) -> Option<(Vec<u32>, Vec<u32>)> {
        let n = self.cycles.len();
        let mut label = vec![u32::MAX; self.verts.len()];
        let mut next = 0u32;
        let mut seen = vec![false; n];
        let mut code = Vec::with_capacity(4 * n);
        let mut queue = VecDeque::from([(face, start, forward)]);
        seen[face] = true;
        let mut smaller = false;
        while let Some((f, s, fwd)) = queue.pop_front() {
            let c = &self.cycles[f];
            let walk: [usize; 4] = std::array::from_fn(|k| if fwd { (s + k) % 4 } else { (s + 4 - k) % 4 });
            for &k in &walk {
                let v = c[k];
                if label[v] == u32::MAX {
                    label[v] = next;
                    next += 1;
                }
                let at = code.len();
                code.push(label[v]);
                if let (Some(b), false) = (bound, smaller) {
                    match label[v].cmp(&b[at]) {
                        std::cmp::Ordering::Greater => return None,
                        std::cmp::Ordering::Less => smaller = true,
                        std::cmp::Ordering::Equal => {}
                    }
                }
            }
            for &k in &walk {
                // side from c[k] to the next vertex of the walk
                let k2 = if fwd { (k + 1) % 4 } else { (k + 3) % 4 };
                let side = if fwd { k } else { k2 };
                let g = self.across[f][side];
                if seen[g] {
                    continue;
                }
                seen[g] = true;
                // the neighbour runs the shared side the other way
                let (a, b) = (c[k2], c[k]);
                let (i, along) = self.locate(g, a, b)?;
                queue.push_back((g, i, along));
            }
        }
        if code.len() != 4 * n {
            return None;
        }
        Some((code, label))
    }
}

/// Canonical form by minimizing the breadth-first traversal code over every
/// starting flag (face, first vertex, direction).
pub fn canonize(surface: &QuadSurface) -> Result<Canonized, CanonError> {
    let q = Quads::new(surface)?;
    let mut best: Option<(Vec<u32>, Vec<u32>)> = None;
    for f in 0..q.cycles.len() {
        for s in 0..4 {
            for fwd in [true, false] {
                if let Some(found) = q.code(f, s, fwd, best.as_ref().map(|b| b.0.as_slice())) {
                    if best.as_ref().is_none_or(|b| found.0 < b.0) {
                        best = Some(found);
                    }
                }
            }
        }
    }
    let Some((code, label)) = best else {
        // no traversal reached every face
        if q.cycles.is_empty() {
            return Ok(Canonized {
                boundary: CanonicalBoundary { vertex_count: 0, faces: Vec::new(), signature: signature(0, &[]) },
                label_of: BTreeMap::new(),
            });
        }
        return Err(connectivity_or_orientation(&q));
    };
    if label.contains(&u32::MAX) {
        return Err(CanonError::Disconnected);
    }
    let faces: Vec<[u32; 4]> = code.chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
    let vertex_count = q.verts.len() as u32;
    let label_of = q.verts.iter().zip(&label).map(|(&v, &l)| (v, l)).collect();
    Ok(Canonized { boundary: CanonicalBoundary { vertex_count, signature: signature(vertex_count, &faces), faces }, label_of })
}

fn connectivity_or_orientation(q: &Quads) -> CanonError {
    let n = q.cycles.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(f) = stack.pop() {
        for &g in &q.across[f] {
            if !seen[g] {
                seen[g] = true;
                stack.push(g);
            }
        }
    }
    if seen.iter().all(|&s| s) {
        CanonError::NonOrientable
    } else {
        CanonError::Disconnected
    }
}

fn signature(vertex_count: u32, faces: &[[u32; 4]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 16 * faces.len());
    out.extend_from_slice(b"QS1");
    out.extend_from_slice(&vertex_count.to_be_bytes());
    out.extend_from_slice(&(faces.len() as u32).to_be_bytes());
    for f in faces {
        for v in f {
            out.extend_from_slice(&v.to_be_bytes());
        }
    }
    out
}

/// Hexahedra on explicit vertex ids, the shape of a template filling.
pub(crate) fn hex_complex(hexes: &[[u32; 8]], vertex_count: u32) -> CellComplex {
    let mut cx = CellComplex::new();
    for _ in 0..vertex_count {
        cx.add_vertex();
    }
    for h in hexes {
        cx.add_hex(*h).expect("distinct hex vertices");
    }
    cx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    fn relabel(s: &QuadSurface, perm: &[u32], reverse: bool) -> QuadSurface {
        let mut polys: Vec<Vec<u32>> = s
            .faces()
            .into_iter()
            .map(|f| {
                let mut c: Vec<u32> = s.face_vertices(f).unwrap().iter().map(|&v| perm[v as usize]).collect();
                if reverse {
                    c.reverse();
                }
                c
            })
            .collect();
        polys.rotate_left(3);
        QuadSurface::from_polygons(perm.len(), &polys).unwrap()
    }

    #[test]
    fn relabelled_cubes_agree() {
        let a = canonicalize(&gen::cube()).unwrap();
        let b = canonicalize(&relabel(&gen::cube(), &[5, 2, 7, 0, 3, 6, 1, 4], true)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.vertex_count, 8);
        assert_eq!(a.faces[0], [0, 1, 2, 3]);
    }

    #[test]
    fn different_surfaces_differ() {
        let cube = canonicalize(&gen::cube()).unwrap();
        let stack = canonicalize(&two_stack()).unwrap();
        assert_ne!(cube.signature, stack.signature);
        assert_ne!(cube.key(), stack.key());
    }

    pub(crate) fn two_stack() -> QuadSurface {
        // vertices (x, y, z) with x in 0..=2, y, z in 0..=1: id = x + 3y + 6z
        let id = |x: u32, y: u32, z: u32| x + 3 * y + 6 * z;
        let mut polys = Vec::new();
        for x in 0..2 {
            polys.push([id(x, 0, 0), id(x, 1, 0), id(x + 1, 1, 0), id(x + 1, 0, 0)]);
            polys.push([id(x, 0, 1), id(x + 1, 0, 1), id(x + 1, 1, 1), id(x, 1, 1)]);
            polys.push([id(x, 0, 0), id(x + 1, 0, 0), id(x + 1, 0, 1), id(x, 0, 1)]);
            polys.push([id(x, 1, 0), id(x, 1, 1), id(x + 1, 1, 1), id(x + 1, 1, 0)]);
        }
        polys.push([id(0, 0, 0), id(0, 0, 1), id(0, 1, 1), id(0, 1, 0)]);
        polys.push([id(2, 0, 0), id(2, 1, 0), id(2, 1, 1), id(2, 0, 1)]);
        QuadSurface::from_polygons(12, &polys).unwrap()
    }

    #[test]
    fn canonical_form_is_idempotent() {
        for s in [gen::cube(), gen::grid_cube(2), two_stack()] {
            let c = canonicalize(&s).unwrap();
            let again = canonicalize(&c.surface()).unwrap();
            assert_eq!(c, again);
        }
    }

    #[test]
    fn labels_map_faces_onto_canonical_faces() {
        let s = gen::grid_cube(2);
        let c = canonize(&s).unwrap();
        let norm = |mut q: Vec<u32>| {
            let i = q.iter().enumerate().min_by_key(|p| p.1).unwrap().0;
            q.rotate_left(i);
            if q[1] > q[3] {
                q[1..].reverse();
            }
            q
        };
        let mut mapped: Vec<Vec<u32>> = s
            .faces()
            .into_iter()
            .map(|f| norm(s.face_vertices(f).unwrap().iter().map(|v| c.label_of[v]).collect()))
            .collect();
        let mut canon: Vec<Vec<u32>> = c.boundary.faces.iter().map(|f| norm(f.to_vec())).collect();
        mapped.sort();
        canon.sort();
        assert_eq!(mapped, canon);
    }

    #[test]
    fn rejects_open_surfaces() {
        let s = QuadSurface::from_polygons(6, &[[0, 1, 2, 3], [1, 4, 5, 2]]).unwrap();
        assert!(matches!(canonicalize(&s), Err(CanonError::NotClosed(_))));
    }
}
