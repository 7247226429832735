//! Text formats: the quad subset of OFF, and `.hexc` hexahedral meshes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::cellcx::{CellComplex, IdError, Vertex};
use crate::surface::QuadSurface;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: face has {sides} sides, expected 4")]
    NonQuadFace { line: usize, sides: usize },
    #[error("line {line}: vertex index {index} out of range (have {count})")]
    IndexOutOfRange { line: usize, index: usize, count: usize },
    #[error("line {line}: {source}")]
    Id { line: usize, source: IdError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: &str) -> Result<T, FormatError> {
    tok.parse().map_err(|_| syntax(line, format!("bad number `{tok}`")))
}

pub fn read_quad_off(path: impl AsRef<Path>) -> Result<QuadSurface, FormatError> {
    parse_quad_off(&fs::read_to_string(path)?)
}

/// Parses an OFF file whose faces are all quadrilaterals. Vertex `i` of the
/// file becomes vertex id `i`, face `j` becomes face id `j`; the edge count
/// in the header is ignored and edges are recomputed.
pub fn parse_quad_off(text: &str) -> Result<QuadSurface, FormatError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| syntax(1, "empty file"))?;
    // "OFF" may share its line with the counts
    let mut counts: Vec<&str> = header.split_whitespace().collect();
    if counts.first() != Some(&"OFF") {
        return Err(syntax(hl, "missing OFF header"));
    }
    counts.remove(0);
    let cl = if counts.is_empty() {
        let (cl, l) = lines.next().ok_or_else(|| syntax(hl, "missing counts"))?;
        counts = l.split_whitespace().collect();
        cl
    } else {
        hl
    };
    if counts.len() < 2 || counts.len() > 3 {
        return Err(syntax(cl, "expected `V F E`"));
    }
    let nv: usize = parse_num(cl, counts[0])?;
    let nf: usize = parse_num(cl, counts[1])?;

    let mut cx = CellComplex::new();
    for _ in 0..nv {
        let (l, s) = lines.next().ok_or_else(|| syntax(cl, "unexpected end of file in vertices"))?;
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(syntax(l, "expected 3 coordinates"));
        }
        let mut p = [0.0; 3];
        for (c, t) in p.iter_mut().zip(&toks) {
            *c = parse_num(l, t)?;
        }
        cx.add_vertex_with(Vertex { coords: Some(p) });
    }
    for _ in 0..nf {
        let (l, s) = lines.next().ok_or_else(|| syntax(cl, "unexpected end of file in faces"))?;
        let toks: Vec<&str> = s.split_whitespace().collect();
        let sides: usize = parse_num(l, toks[0])?;
        if sides != 4 {
            return Err(FormatError::NonQuadFace { line: l, sides });
        }
        if toks.len() < 5 {
            return Err(syntax(l, "face line too short"));
        }
        // trailing tokens (per-face colours) are allowed and ignored
        let mut quad = [0u32; 4];
        for (q, t) in quad.iter_mut().zip(&toks[1..5]) {
            let index: usize = parse_num(l, t)?;
            if index >= nv {
                return Err(FormatError::IndexOutOfRange { line: l, index, count: nv });
            }
            *q = index as u32;
        }
        let mut edges = Vec::with_capacity(4);
        for i in 0..4 {
            edges.push(cx.edge_between(quad[i], quad[(i + 1) % 4]).map_err(|source| FormatError::Id { line: l, source })?);
        }
        cx.add_face_raw(edges).map_err(|source| FormatError::Id { line: l, source })?;
    }
    if let Some((l, _)) = lines.next() {
        return Err(syntax(l, "trailing content"));
    }
    Ok(QuadSurface::new(cx).expect("no volumes were added"))
}

/// Writes the surface as OFF. Vertex and face ids are compacted in order.
pub fn format_quad_off(surface: &QuadSurface) -> String {
    let verts = surface.vertices();
    let pos = |v: u32| verts.binary_search(&v).expect("live vertex");
    let faces = surface.faces();
    let mut out = String::from("OFF\n");
    let _ = writeln!(out, "{} {} {}", verts.len(), faces.len(), surface.edge_count());
    for &v in &verts {
        let [x, y, z] = surface.coords(v).unwrap_or([0.0; 3]);
        let _ = writeln!(out, "{x} {y} {z}");
    }
    for f in faces {
        let cycle = surface.face_vertices(f).expect("live face");
        let ids: Vec<String> = cycle.iter().map(|&v| pos(v).to_string()).collect();
        let _ = writeln!(out, "{} {}", cycle.len(), ids.join(" "));
    }
    out
}

pub fn write_quad_off(surface: &QuadSurface, path: impl AsRef<Path>) -> Result<(), FormatError> {
    Ok(fs::write(path, format_quad_off(surface))?)
}

/// A parsed `.hexc` file.
#[derive(Clone, Debug)]
pub struct HexcMesh {
    pub complex: CellComplex,
    /// Boundary quads as listed in the file.
    pub boundary: Vec<[u32; 4]>,
}

impl HexcMesh {
    /// The listed boundary as a surface on the mesh's vertex ids.
    pub fn boundary_surface(&self) -> Result<QuadSurface, IdError> {
        let mut cx = CellComplex::new();
        for q in &self.boundary {
            for &v in q {
                cx.ensure_vertex(v, Vertex::default());
            }
            cx.polygon(q)?;
        }
        Ok(QuadSurface::new(cx).expect("no volumes"))
    }
}

/// Faces of the complex lying in exactly one volume, by face id.
fn boundary_faces(cx: &CellComplex) -> Vec<u32> {
    cx.face_ids().filter(|&f| cx.face_volumes(f).len() == 1).collect()
}

/// Serializes a hex mesh. Volumes without a recoverable cube order are skipped.
pub fn format_hexc(cx: &CellComplex) -> String {
    let mut out = String::from("hexc 1\n");
    let _ = writeln!(out, "vertices {}", cx.count(0));
    for v in cx.vertex_ids() {
        match cx.vertex(v).ok().and_then(|x| x.coords) {
            Some([x, y, z]) => {
                let _ = writeln!(out, "v {v} {x} {y} {z}");
            }
            None => {
                let _ = writeln!(out, "v {v} -");
            }
        }
    }
    let hexes: Vec<[u32; 8]> = cx.volume_ids().filter_map(|c| cx.hex_vertices(c)).collect();
    let _ = writeln!(out, "hexes {}", hexes.len());
    for h in hexes {
        let ids: Vec<String> = h.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{}", ids.join(" "));
    }
    let boundary = boundary_faces(cx);
    let _ = writeln!(out, "boundary {}", boundary.len());
    for f in boundary {
        let ids: Vec<String> = cx.face_vertices(f).expect("live face").iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{}", ids.join(" "));
    }
    out
}

pub fn write_hexc(cx: &CellComplex, path: impl AsRef<Path>) -> Result<(), FormatError> {
    Ok(fs::write(path, format_hexc(cx))?)
}

pub fn read_hexc(path: impl AsRef<Path>) -> Result<HexcMesh, FormatError> {
    parse_hexc(&fs::read_to_string(path)?)
}

fn expect_block<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    keyword: &str,
    last: usize,
) -> Result<(usize, usize), FormatError> {
    let (l, s) = lines.next().ok_or_else(|| syntax(last, format!("missing `{keyword}` block")))?;
    match s.split_whitespace().collect::<Vec<_>>().as_slice() {
        [k, n] if *k == keyword => Ok((l, parse_num(l, n)?)),
        _ => Err(syntax(l, format!("expected `{keyword} <count>`"))),
    }
}

fn id_row<const N: usize>(line: usize, s: &str) -> Result<[u32; N], FormatError> {
    let toks: Vec<&str> = s.split_whitespace().collect();
    if toks.len() != N {
        return Err(syntax(line, format!("expected {N} vertex ids")));
    }
    let mut out = [0; N];
    for (o, t) in out.iter_mut().zip(&toks) {
        *o = parse_num(line, t)?;
    }
    Ok(out)
}

pub fn parse_hexc(text: &str) -> Result<HexcMesh, FormatError> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, "hexc 1")) => {}
        Some((l, _)) => return Err(syntax(l, "expected header `hexc 1`")),
        None => return Err(syntax(1, "empty file")),
    }
    let (mut last, nv) = expect_block(&mut lines, "vertices", 1)?;
    let mut cx = CellComplex::new();
    let mut known = std::collections::BTreeSet::new();
    for _ in 0..nv {
        let (l, s) = lines.next().ok_or_else(|| syntax(last, "unexpected end of file in vertices"))?;
        last = l;
        let toks: Vec<&str> = s.split_whitespace().collect();
        let coords = match toks.as_slice() {
            ["v", _, "-"] => None,
            ["v", _, x, y, z] => Some([parse_num(l, x)?, parse_num(l, y)?, parse_num(l, z)?]),
            _ => return Err(syntax(l, "expected `v id x y z` or `v id -`")),
        };
        let id: u32 = parse_num(l, toks[1])?;
        if !known.insert(id) {
            return Err(syntax(l, format!("duplicate vertex {id}")));
        }
        cx.ensure_vertex(id, Vertex { coords });
    }
    let check = |l: usize, ids: &[u32]| -> Result<(), FormatError> {
        match ids.iter().find(|v| !known.contains(v)) {
            Some(&v) => Err(syntax(l, format!("unknown vertex {v}"))),
            None => Ok(()),
        }
    };
    let (l, nh) = expect_block(&mut lines, "hexes", last)?;
    last = l;
    for _ in 0..nh {
        let (l, s) = lines.next().ok_or_else(|| syntax(last, "unexpected end of file in hexes"))?;
        last = l;
        let h: [u32; 8] = id_row(l, s)?;
        check(l, &h)?;
        cx.add_hex(h).map_err(|source| FormatError::Id { line: l, source })?;
    }
    let (l, nb) = expect_block(&mut lines, "boundary", last)?;
    last = l;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (l, s) = lines.next().ok_or_else(|| syntax(last, "unexpected end of file in boundary"))?;
        last = l;
        let q: [u32; 4] = id_row(l, s)?;
        check(l, &q)?;
        boundary.push(q);
    }
    if let Some((l, _)) = lines.next() {
        return Err(syntax(l, "trailing content"));
    }
    Ok(HexcMesh { complex: cx, boundary })
}
