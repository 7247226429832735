//! The buffer layer between the input surface and its inner copy.
//!
//! Every input face becomes a prism cell. Once the interior is refined, each
//! wall picks up the midpoint of its shell edge and a split point on its
//! U-class pillar, which makes it a hexagon; the hexagon is then cut into two
//! or three quads so that every cell ends up with 16 or 18 quad sides.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cellcx::{CellComplex, CellId, IdError};
use crate::forge::{canonicalize, CanonError, CanonicalBoundary};
use crate::refine::{MidpointRegistry, TriangulatedShell};
use crate::surface::{Bipartition, OddEdgeSet, QuadSurface, Side, SurfaceError};

#[derive(Debug, Error)]
pub enum BufferError {
    #[error("edge {0} has no shell midpoint")]
    MissingMidpoint(u32),
    #[error("edge {0} does not join the two colour classes")]
    Monochromatic(u32),
    #[error("wall of edge {0} is not a hexagon yet")]
    NotSubdivided(u32),
    #[error("cell of face {face}: {three} three-split and {two} two-split walls")]
    Parity { face: u32, three: usize, two: usize },
    #[error("cell of face {face} has no quad-sphere boundary: {detail}")]
    Classification { face: u32, detail: String },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Id(#[from] IdError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SplitKind {
    Two,
    Three,
}

#[derive(Clone, Debug)]
pub struct Wall {
    pub edge: u32,
    /// The input edge's endpoints, U-class first.
    pub ends: [u32; 2],
    /// Current face id while the wall is a single polygon.
    pub face: Option<u32>,
    /// (b_U, b_V, shell b_V, shell midpoint, shell b_U, pillar split point).
    pub hexagon: Option<[u32; 6]>,
    pub split: Option<SplitKind>,
    /// Quads replacing the hexagon.
    pub quads: Vec<u32>,
    /// Interior vertex of a three-split.
    pub center: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct BufferCell {
    pub source_face: u32,
    /// The input face; never subdivided.
    pub top: u32,
    pub shell_face: u32,
    /// The prism volume until the layer is subdivided.
    pub volume: Option<u32>,
    /// The six quads refining the shell face.
    pub bottom: Vec<u32>,
    /// Input edges of the four walls.
    pub walls: [u32; 4],
}

#[derive(Clone, Debug)]
pub struct BufferLayer {
    pub shell_of: BTreeMap<u32, u32>,
    pub pillar_of: BTreeMap<u32, u32>,
    pub split_point_of: BTreeMap<u32, u32>,
    pub wall_of: BTreeMap<u32, Wall>,
    pub cells: Vec<BufferCell>,
    /// The unrefined inner copy, with the ids it has in the working complex.
    pub shell: QuadSurface,
}

impl BufferLayer {
    pub fn split_counts(&self, cell: &BufferCell) -> (usize, usize) {
        let kinds = cell.walls.map(|e| self.wall_of[&e].split);
        let three = kinds.iter().filter(|k| **k == Some(SplitKind::Three)).count();
        let two = kinds.iter().filter(|k| **k == Some(SplitKind::Two)).count();
        (three, two)
    }

    /// Boundary faces of a cell: top, bottom quads and wall quads.
    pub fn cell_faces(&self, cell: &BufferCell) -> Vec<u32> {
        let mut faces = vec![cell.top];
        faces.extend(&cell.bottom);
        for e in cell.walls {
            faces.extend(&self.wall_of[&e].quads);
        }
        faces
    }

    /// Map carrying input vertex ids to their shell copies.
    pub fn shell_map(&self) -> impl Fn(u32) -> u32 + '_ {
        |v| self.shell_of[&v]
    }
}

/// Adds an inner copy of `b` to `cx` (which must already hold `b`) joined by
/// one pillar per vertex, one wall per edge and one prism per face.
pub fn build_layer(cx: &mut CellComplex, b: &QuadSurface) -> Result<BufferLayer, BufferError> {
    let mut shell_of = BTreeMap::new();
    for v in b.vertices() {
        shell_of.insert(v, cx.add_vertex());
    }
    let mut pillar_of = BTreeMap::new();
    for (&v, &s) in &shell_of {
        pillar_of.insert(v, cx.edge_between(v, s)?);
    }
    let mut wall_of = BTreeMap::new();
    for e in b.edges() {
        let [a, c] = b.edge(e)?;
        cx.edge_between(shell_of[&a], shell_of[&c])?;
        let face = cx.polygon(&[a, c, shell_of[&c], shell_of[&a]])?;
        wall_of.insert(
            e,
            Wall { edge: e, ends: [a, c], face: Some(face), hexagon: None, split: None, quads: Vec::new(), center: None },
        );
    }
    let mut cells = Vec::new();
    let mut shell_faces = Vec::new();
    for f in b.faces() {
        let cyc = b.face_vertices(f)?;
        let inner: Vec<u32> = cyc.iter().map(|v| shell_of[v]).collect();
        let shell_face = cx.polygon(&inner)?;
        shell_faces.push(shell_face);
        let edges: [u32; 4] = b.face_edges(f)?.try_into().map_err(|_| SurfaceError::NonQuadFace(f))?;
        let mut sides = vec![f, shell_face];
        sides.extend(edges.iter().map(|e| wall_of[e].face.expect("fresh wall")));
        let volume = cx.add_volume(sides)?;
        cells.push(BufferCell { source_face: f, top: f, shell_face, volume: Some(volume), bottom: Vec::new(), walls: edges });
    }
    let shell = QuadSurface::new(cx.subcomplex(&shell_faces)?)?;
    Ok(BufferLayer { shell_of, pillar_of, split_point_of: BTreeMap::new(), wall_of, cells, shell })
}

/// Replaces the prisms by open cells: shell quads give way to their six
/// refined quads, U-class pillars are split and every wall becomes a hexagon.
pub fn apply_subdivisions(
    cx: &mut CellComplex,
    layer: &mut BufferLayer,
    bip: &Bipartition,
    reg: &MidpointRegistry,
    tri: &TriangulatedShell,
) -> Result<(), BufferError> {
    for cell in &mut layer.cells {
        if let Some(vol) = cell.volume.take() {
            cx.remove(CellId::volume(vol))?;
        }
    }
    let mut halves: BTreeMap<u32, Vec<[u32; 3]>> = BTreeMap::new();
    for (t, &f) in tri.triangles.iter().zip(&tri.source) {
        halves.entry(f).or_default().push(*t);
    }
    for cell in &mut layer.cells {
        cx.remove(CellId::face(cell.shell_face))?;
        let mut bottom = Vec::with_capacity(6);
        for t in halves.get(&cell.shell_face).into_iter().flatten() {
            let quads = reg.triangle_quads(*t).ok_or(BufferError::MissingMidpoint(cell.shell_face))?;
            for q in quads {
                bottom.push(cx.polygon(&q)?);
            }
        }
        cell.bottom = bottom;
    }
    for wall in layer.wall_of.values_mut() {
        if let Some(face) = wall.face.take() {
            cx.remove(CellId::face(face))?;
        }
        let [a, c] = wall.ends;
        wall.ends = match (bip.class(a), bip.class(c)) {
            (Some(Side::U), Some(Side::V)) => [a, c],
            (Some(Side::V), Some(Side::U)) => [c, a],
            _ => return Err(BufferError::Monochromatic(wall.edge)),
        };
        let (sa, sc) = (layer.shell_of[&a], layer.shell_of[&c]);
        if let Some(e) = cx.find_edge(sa, sc) {
            if cx.edge_faces(e).is_empty() {
                cx.remove(CellId::edge(e))?;
            }
        }
    }
    for (&v, &pillar) in &layer.pillar_of {
        if bip.class(v) != Some(Side::U) {
            continue;
        }
        cx.remove(CellId::edge(pillar))?;
        let q = cx.add_vertex();
        cx.edge_between(v, q)?;
        cx.edge_between(q, layer.shell_of[&v])?;
        layer.split_point_of.insert(v, q);
    }
    for wall in layer.wall_of.values_mut() {
        let [u, v] = wall.ends;
        let (su, sv) = (layer.shell_of[&u], layer.shell_of[&v]);
        let m = reg.midpoint(su, sv).ok_or(BufferError::MissingMidpoint(wall.edge))?;
        let hexagon = [u, v, sv, m, su, layer.split_point_of[&u]];
        wall.face = Some(cx.polygon(&hexagon)?);
        wall.hexagon = Some(hexagon);
    }
    Ok(())
}

/// Cuts every hexagonal wall: three quads around a new vertex for walls on
/// edges of `odd`, two quads along the chord from the shell copy of b_V to
/// the pillar split point otherwise.
pub fn split_walls(cx: &mut CellComplex, layer: &mut BufferLayer, odd: &OddEdgeSet) -> Result<(), BufferError> {
    for wall in layer.wall_of.values_mut() {
        let h = wall.hexagon.ok_or(BufferError::NotSubdivided(wall.edge))?;
        if let Some(face) = wall.face.take() {
            cx.remove(CellId::face(face))?;
        }
        let cycles: Vec<[u32; 4]> = if odd.contains(wall.edge) {
            let w = cx.add_vertex();
            wall.center = Some(w);
            wall.split = Some(SplitKind::Three);
            vec![[h[1], h[2], h[3], w], [h[3], h[4], h[5], w], [h[5], h[0], h[1], w]]
        } else {
            wall.split = Some(SplitKind::Two);
            vec![[h[2], h[3], h[4], h[5]], [h[5], h[0], h[1], h[2]]]
        };
        wall.quads = cycles.iter().map(|c| cx.polygon(c)).collect::<Result<_, _>>()?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CellKind {
    Q16,
    Q18,
}

#[derive(Clone, Debug)]
pub struct CellClass {
    pub source_face: u32,
    pub kind: CellKind,
    pub boundary: QuadSurface,
    pub canonical: CanonicalBoundary,
}

/// Extracts and canonicalizes every cell boundary after checking the
/// per-cell parity of the wall splits.
pub fn classify_cells(cx: &CellComplex, layer: &BufferLayer) -> Result<Vec<CellClass>, BufferError> {
    let mut out = Vec::with_capacity(layer.cells.len());
    for cell in &layer.cells {
        let face = cell.source_face;
        let (three, two) = layer.split_counts(cell);
        if three % 2 != 1 || two % 2 != 1 || three + two != 4 {
            return Err(BufferError::Parity { face, three, two });
        }
        let faces = layer.cell_faces(cell);
        let kind = match faces.len() {
            16 => CellKind::Q16,
            18 => CellKind::Q18,
            n => return Err(BufferError::Classification { face, detail: format!("{n} quads") }),
        };
        let boundary = QuadSurface::new(cx.subcomplex(&faces)?)?;
        let canonical = canonicalize(&boundary)
            .map_err(|e: CanonError| BufferError::Classification { face, detail: e.to_string() })?;
        out.push(CellClass { source_face: face, kind, boundary, canonical });
    }
    Ok(out)
}
