//! Structural validation of cell complexes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::{walk_cycle, CellComplex, CellId, IdError, HEX_EDGES, HEX_FACES};
use crate::surface::QuadSurface;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationCode {
    NonQuadFace,
    NonCubeVolume,
    NonCellIntersection,
    DanglingBoundary,
    NonManifold,
    BoundaryMismatch,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub code: ViolationCode,
    pub cells: Vec<CellId>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code)?;
        for c in &self.cells {
            write!(f, " {c}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self { ok: violations.is_empty(), violations }
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    pub fn count(&self, code: ViolationCode) -> usize {
        self.violations.iter().filter(|v| v.code == code).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return write!(f, "ok");
        }
        writeln!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

/// True iff the face is bounded by a 4-cycle of distinct edges through four
/// distinct vertices.
pub fn is_quadrilateral(cx: &CellComplex, face: u32) -> Result<bool, IdError> {
    let edges = cx.face_edges(face)?;
    if edges.len() != 4 {
        return Ok(false);
    }
    let mut distinct = edges.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != 4 {
        return Ok(false);
    }
    let ends: Vec<[u32; 2]> = edges.iter().map(|&e| cx.edge(e)).collect::<Result<_, _>>()?;
    Ok(match walk_cycle(&ends) {
        Some(mut cycle) => {
            cycle.sort_unstable();
            cycle.dedup();
            cycle.len() == 4
        }
        None => false,
    })
}

/// True iff the volume has six quadrilateral faces whose incidences are
/// those of a cube.
pub fn is_combinatorial_cube(cx: &CellComplex, vol: u32) -> Result<bool, IdError> {
    cx.volume_faces(vol)?;
    Ok(cube_vertex_order(cx, vol).is_some())
}

/// Tries every placement of the reference cube (a corner image and an
/// ordering of its three neighbours, 48 in all) and returns the first vertex
/// order under which all cube edges and faces are present.
pub(crate) fn cube_vertex_order(cx: &CellComplex, vol: u32) -> Option<[u32; 8]> {
    let faces = cx.volume_faces(vol).ok()?;
    if faces.len() != 6 {
        return None;
    }
    let mut face_sets: Vec<Vec<u32>> = Vec::with_capacity(6);
    let mut edge_ids = Vec::with_capacity(24);
    for &f in faces {
        if !is_quadrilateral(cx, f).ok()? {
            return None;
        }
        let mut vs = cx.face_vertices(f).ok()?;
        vs.sort_unstable();
        face_sets.push(vs);
        edge_ids.extend_from_slice(cx.face_edges(f).ok()?);
    }
    edge_ids.sort_unstable();
    let mut edge_pairs: Vec<[u32; 2]> = Vec::with_capacity(12);
    let mut i = 0;
    while i < edge_ids.len() {
        let mut j = i;
        while j < edge_ids.len() && edge_ids[j] == edge_ids[i] {
            j += 1;
        }
        if j - i != 2 {
            return None;
        }
        let [a, b] = cx.edge(edge_ids[i]).ok()?;
        edge_pairs.push(if a < b { [a, b] } else { [b, a] });
        i = j;
    }
    if edge_pairs.len() != 12 {
        return None;
    }
    let mut verts: Vec<u32> = edge_pairs.iter().flatten().copied().collect();
    verts.sort_unstable();
    verts.dedup();
    if verts.len() != 8 {
        return None;
    }
    let neighbours = |v: u32| -> Vec<u32> {
        edge_pairs
            .iter()
            .filter_map(|&[a, b]| if a == v { Some(b) } else if b == v { Some(a) } else { None })
            .collect()
    };
    let has_edge = |a: u32, b: u32| edge_pairs.contains(&if a < b { [a, b] } else { [b, a] });
    let fourth = |a: u32, b: u32, c: u32| -> Option<u32> {
        face_sets
            .iter()
            .find(|s| s.contains(&a) && s.contains(&b) && s.contains(&c))
            .and_then(|s| s.iter().copied().find(|&x| x != a && x != b && x != c))
    };
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for &corner in &verts {
        let nb = neighbours(corner);
        if nb.len() != 3 {
            return None;
        }
        for p in PERMS {
            let (x, y, z) = (nb[p[0]], nb[p[1]], nb[p[2]]);
            // reference vertex (corner, x, xy, y) on the bottom, z above corner
            let Some(xy) = fourth(corner, x, y) else { continue };
            let Some(xz) = fourth(corner, x, z) else { continue };
            let Some(yz) = fourth(corner, y, z) else { continue };
            let Some(xyz) = verts
                .iter()
                .copied()
                .find(|v| ![corner, x, y, z, xy, xz, yz].contains(v))
            else {
                continue;
            };
            let order = [corner, x, xy, y, z, xz, xyz, yz];
            let mut distinct = order.to_vec();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() != 8 {
                continue;
            }
            let edges_ok = HEX_EDGES.iter().all(|&[a, b]| has_edge(order[a], order[b]));
            let faces_ok = HEX_FACES.iter().all(|q| {
                let mut s: Vec<u32> = q.iter().map(|&i| order[i]).collect();
                s.sort_unstable();
                face_sets.contains(&s)
            });
            if edges_ok && faces_ok {
                return Some(order);
            }
        }
    }
    None
}

/// Rotation- and reflection-normalized vertex cycle, used to compare faces
/// across complexes by vertex ids.
pub(crate) fn normalized_cycle(cycle: &[u32]) -> Vec<u32> {
    let n = cycle.len();
    if n == 0 {
        return Vec::new();
    }
    let start = (0..n).min_by_key(|&i| cycle[i]).unwrap_or(0);
    let fwd: Vec<u32> = (0..n).map(|k| cycle[(start + k) % n]).collect();
    let bwd: Vec<u32> = (0..n).map(|k| cycle[(start + n - k) % n]).collect();
    fwd.min(bwd)
}

struct CellData {
    id: CellId,
    verts: Vec<u32>,
    closure: Vec<CellId>,
}

/// Checks every structural requirement of a face-to-face complex of cubes
/// and, when `expect_boundary` is given, that the faces lying in exactly one
/// volume are precisely the faces of that surface (matched by vertex ids).
pub fn validate(cx: &CellComplex, expect_boundary: Option<&QuadSurface>) -> ValidationReport {
    let mut out = Vec::new();
    let mut sound: BTreeSet<CellId> = cx.vertex_ids().map(CellId::vertex).collect();

    for e in cx.edge_ids() {
        let [a, b] = cx.edge(e).expect("live edge");
        let id = CellId::edge(e);
        if !cx.contains(CellId::vertex(a)) || !cx.contains(CellId::vertex(b)) {
            out.push(dangling(id, format!("endpoint missing ({a}, {b})")));
        } else if a == b {
            out.push(dangling(id, format!("both endpoints are vertex {a}")));
        } else {
            sound.insert(id);
        }
    }

    for f in cx.face_ids() {
        let id = CellId::face(f);
        let edges = cx.face_edges(f).expect("live face");
        if let Some(&e) = edges.iter().find(|&&e| !sound.contains(&CellId::edge(e))) {
            out.push(dangling(id, format!("boundary edge e{e} missing or malformed")));
            continue;
        }
        let mut distinct = edges.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let ends: Vec<[u32; 2]> = edges.iter().map(|&e| cx.edge(e).expect("sound")).collect();
        if distinct.len() != edges.len() || walk_cycle(&ends).is_none() {
            out.push(dangling(id, "boundary edges do not form one closed cycle".into()));
            continue;
        }
        sound.insert(id);
        if !is_quadrilateral(cx, f).unwrap_or(false) {
            out.push(Violation {
                code: ViolationCode::NonQuadFace,
                cells: vec![id],
                detail: format!("face has {} edges", edges.len()),
            });
        }
    }

    for c in cx.volume_ids() {
        let id = CellId::volume(c);
        let faces = cx.volume_faces(c).expect("live volume");
        if let Some(&f) = faces.iter().find(|&&f| !sound.contains(&CellId::face(f))) {
            out.push(dangling(id, format!("boundary face f{f} missing or malformed")));
            continue;
        }
        sound.insert(id);
        if cube_vertex_order(cx, c).is_none() {
            out.push(Violation {
                code: ViolationCode::NonCubeVolume,
                cells: vec![id],
                detail: format!("{} faces, not a combinatorial cube", faces.len()),
            });
        }
    }

    for f in cx.face_ids() {
        let vols = cx.face_volumes(f);
        if vols.len() > 2 {
            let mut cells = vec![CellId::face(f)];
            cells.extend(vols.iter().map(|&c| CellId::volume(c)));
            out.push(Violation {
                code: ViolationCode::NonManifold,
                cells,
                detail: format!("face lies in {} volumes", vols.len()),
            });
        }
    }

    intersections(cx, &sound, &mut out);

    if let Some(expected) = expect_boundary {
        boundary_mismatch(cx, expected, &mut out);
    }

    ValidationReport::from_violations(out)
}

fn dangling(id: CellId, detail: String) -> Violation {
    Violation { code: ViolationCode::DanglingBoundary, cells: vec![id], detail }
}

fn intersections(cx: &CellComplex, sound: &BTreeSet<CellId>, out: &mut Vec<Violation>) {
    // vertices intersect everything in a cell or nothing, so skip them
    let data: Vec<CellData> = sound
        .iter()
        .filter(|id| id.dim > 0)
        .map(|&id| CellData {
            id,
            verts: cx.cell_vertices(id).expect("sound cell"),
            closure: cx.closure(id).expect("sound cell"),
        })
        .collect();
    let mut star: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, d) in data.iter().enumerate() {
        for &v in &d.verts {
            star.entry(v).or_default().push(i);
        }
    }
    let dims: HashMap<CellId, usize> = data.iter().enumerate().map(|(i, d)| (d.id, i)).collect();
    let mut vertices: Vec<_> = star.keys().copied().collect();
    vertices.sort_unstable();
    for v in vertices {
        let around = &star[&v];
        for (k, &i) in around.iter().enumerate() {
            for &j in &around[k + 1..] {
                let (a, b) = (&data[i], &data[j]);
                if first_common(&a.verts, &b.verts) != Some(v) {
                    continue;
                }
                if let Some(detail) = bad_intersection(a, b, &data, &dims) {
                    out.push(Violation {
                        code: ViolationCode::NonCellIntersection,
                        cells: vec![a.id, b.id],
                        detail,
                    });
                }
            }
        }
    }
}

fn first_common(a: &[u32], b: &[u32]) -> Option<u32> {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return Some(a[i]),
        }
    }
    None
}

fn bad_intersection(
    a: &CellData,
    b: &CellData,
    data: &[CellData],
    index: &HashMap<CellId, usize>,
) -> Option<String> {
    let shared: Vec<CellId> = a
        .closure
        .iter()
        .filter(|c| b.closure.binary_search(c).is_ok())
        .copied()
        .collect();
    let top = shared.iter().map(|c| c.dim).max()?;
    let maximal: Vec<CellId> = shared.iter().filter(|c| c.dim == top).copied().collect();
    if maximal.len() > 1 {
        return Some(format!(
            "shared cells {} have no common top cell",
            maximal.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        ));
    }
    let top_closure_len = if top == 0 {
        1
    } else {
        data[index[&maximal[0]]].closure.len()
    };
    if top_closure_len != shared.len() {
        return Some(format!("intersection is larger than the closure of {}", maximal[0]));
    }
    None
}

fn boundary_mismatch(cx: &CellComplex, expected: &QuadSurface, out: &mut Vec<Violation>) {
    let mut actual: HashMap<Vec<u32>, u32> = HashMap::new();
    for f in cx.face_ids() {
        if cx.face_volumes(f).len() == 1 {
            if let Ok(cycle) = cx.face_vertices(f) {
                actual.insert(normalized_cycle(&cycle), f);
            }
        }
    }
    let ecx = expected.complex();
    let mut wanted: HashMap<Vec<u32>, u32> = HashMap::new();
    for f in ecx.face_ids() {
        if let Ok(cycle) = ecx.face_vertices(f) {
            wanted.insert(normalized_cycle(&cycle), f);
        }
    }
    let mut missing: Vec<_> = wanted.iter().filter(|(k, _)| !actual.contains_key(*k)).collect();
    missing.sort_by_key(|(_, &f)| f);
    for (cycle, &f) in missing {
        out.push(Violation {
            code: ViolationCode::BoundaryMismatch,
            cells: vec![CellId::face(f)],
            detail: format!("expected boundary face {cycle:?} is not a boundary face"),
        });
    }
    let mut extra: Vec<_> = actual.iter().filter(|(k, _)| !wanted.contains_key(*k)).collect();
    extra.sort_by_key(|(_, &f)| f);
    for (cycle, &f) in extra {
        out.push(Violation {
            code: ViolationCode::BoundaryMismatch,
            cells: vec![CellId::face(f)],
            detail: format!("boundary face {cycle:?} is not in the expected surface"),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verts(cx: &mut CellComplex, n: usize) -> Vec<u32> {
        (0..n).map(|_| cx.add_vertex()).collect()
    }

    #[test]
    fn single_cube_is_valid() {
        let mut cx = CellComplex::new();
        verts(&mut cx, 8);
        let c = cx.add_hex([0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        assert!(is_combinatorial_cube(&cx, c).unwrap());
        let report = validate(&cx, None);
        assert!(report.ok, "{report}");
    }

    #[test]
    fn two_cubes_sharing_a_face_are_valid() {
        let mut cx = CellComplex::new();
        verts(&mut cx, 12);
        cx.add_hex([0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        cx.add_hex([4, 5, 6, 7, 8, 9, 10, 11]).unwrap();
        let report = validate(&cx, None);
        assert!(report.ok, "{report}");
        let shared = cx.find_face(&[4, 5, 6, 7]).unwrap();
        assert_eq!(cx.face_volumes(shared).len(), 2);
    }

    #[test]
    fn two_cubes_sharing_two_disjoint_faces_fail() {
        let mut cx = CellComplex::new();
        verts(&mut cx, 8);
        cx.add_hex([0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        // same top and bottom faces, glued with a quarter twist
        cx.add_hex([0, 1, 2, 3, 5, 6, 7, 4]).unwrap();
        let report = validate(&cx, None);
        assert!(report.has(ViolationCode::NonCellIntersection), "{report}");
    }

    #[test]
    fn triangle_is_not_a_quad() {
        let mut cx = CellComplex::new();
        verts(&mut cx, 3);
        let f = cx.polygon(&[0, 1, 2]).unwrap();
        assert!(!is_quadrilateral(&cx, f).unwrap());
        assert!(validate(&cx, None).has(ViolationCode::NonQuadFace));
    }

    #[test]
    fn quad_with_repeated_vertex_is_not_a_quad() {
        // closed walk a-b-a-c-a over four distinct edges
        let mut cx = CellComplex::new();
        verts(&mut cx, 3);
        let e1 = cx.add_edge_raw(0, 1).unwrap();
        let e2 = cx.add_edge_raw(1, 0).unwrap();
        let e3 = cx.add_edge_raw(0, 2).unwrap();
        let e4 = cx.add_edge_raw(2, 0).unwrap();
        let f = cx.add_face_raw(vec![e1, e2, e3, e4]).unwrap();
        assert!(!is_quadrilateral(&cx, f).unwrap());
        assert!(is_quadrilateral(&cx, 7).is_err());
        // the two parallel edges meet in two vertices
        assert!(validate(&cx, None).has(ViolationCode::NonCellIntersection));
    }

    #[test]
    fn tetrahedron_is_not_a_cube() {
        let mut cx = CellComplex::new();
        verts(&mut cx, 4);
        let faces = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]
            .iter()
            .map(|t| cx.polygon(t).unwrap())
            .collect();
        let c = cx.add_volume(faces).unwrap();
        assert!(!is_combinatorial_cube(&cx, c).unwrap());
        let report = validate(&cx, None);
        assert!(report.has(ViolationCode::NonCubeVolume));
        assert!(report.has(ViolationCode::NonQuadFace));
    }

    /// Independent check: search all 8! bijections from the reference cube.
    fn cube_isomorphic_brute_force(face_sets: &[Vec<u32>], verts: &[u32]) -> bool {
        fn permute(k: usize, perm: &mut Vec<u32>, used: &mut [bool], verts: &[u32], ok: &mut dyn FnMut(&[u32]) -> bool) -> bool {
            if k == verts.len() {
                return ok(perm);
            }
            for i in 0..verts.len() {
                if !used[i] {
                    used[i] = true;
                    perm.push(verts[i]);
                    if permute(k + 1, perm, used, verts, ok) {
                        return true;
                    }
                    perm.pop();
                    used[i] = false;
                }
            }
            false
        }
        let mut target: Vec<Vec<u32>> = face_sets.to_vec();
        target.sort();
        let mut check = |perm: &[u32]| {
            let mut mapped: Vec<Vec<u32>> = HEX_FACES
                .iter()
                .map(|q| {
                    let mut s: Vec<u32> = q.iter().map(|&i| perm[i]).collect();
                    s.sort_unstable();
                    s
                })
                .collect();
            mapped.sort();
            mapped == target
        };
        permute(0, &mut Vec::new(), &mut vec![false; verts.len()], verts, &mut check)
    }

    #[test]
    fn six_quads_that_are_not_a_cube() {
        let mut cx = CellComplex::new();
        verts(&mut cx, 8);
        // bottom face twice (sharing all four edges), no top face
        let bottom = cx.polygon(&[0, 1, 2, 3]).unwrap();
        let e: Vec<u32> = cx.face_edges(bottom).unwrap().to_vec();
        let bottom2 = cx.add_face_raw(vec![e[1], e[2], e[3], e[0]]).unwrap();
        let mut faces = vec![bottom, bottom2];
        for q in [[0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]] {
            faces.push(cx.polygon(&q).unwrap());
        }
        let c = cx.add_volume(faces.clone()).unwrap();
        assert_eq!(cx.cell_vertices(CellId::volume(c)).unwrap().len(), 8);
        let sets: Vec<Vec<u32>> = faces
            .iter()
            .map(|&f| {
                let mut s = cx.face_vertices(f).unwrap();
                s.sort_unstable();
                s
            })
            .collect();
        assert!(!cube_isomorphic_brute_force(&sets, &(0..8).collect::<Vec<_>>()));
        assert!(!is_combinatorial_cube(&cx, c).unwrap());

        // and the oracle agrees on a genuine cube with scrambled labels
        let mut cx2 = CellComplex::new();
        verts(&mut cx2, 8);
        let h = cx2.add_hex([3, 6, 0, 5, 7, 1, 4, 2]).unwrap();
        let sets2: Vec<Vec<u32>> = cx2
            .volume_faces(h)
            .unwrap()
            .iter()
            .map(|&f| {
                let mut s = cx2.face_vertices(f).unwrap();
                s.sort_unstable();
                s
            })
            .collect();
        assert!(cube_isomorphic_brute_force(&sets2, &(0..8).collect::<Vec<_>>()));
        assert!(is_combinatorial_cube(&cx2, h).unwrap());
    }

    #[test]
    fn face_in_three_volumes_is_non_manifold() {
        let mut cx = CellComplex::new();
        verts(&mut cx, 16);
        cx.add_hex([0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        cx.add_hex([4, 5, 6, 7, 8, 9, 10, 11]).unwrap();
        cx.add_hex([4, 5, 6, 7, 12, 13, 14, 15]).unwrap();
        assert!(validate(&cx, None).has(ViolationCode::NonManifold));
    }

    #[test]
    fn dangling_references_are_reported() {
        let mut cx = CellComplex::new();
        verts(&mut cx, 4);
        let f = cx.polygon(&[0, 1, 2, 3]).unwrap();
        let edges = cx.face_edges(f).unwrap().to_vec();
        // a face whose edges do not close up
        let g = cx.add_face_raw(vec![edges[0], edges[2]]).unwrap();
        let report = validate(&cx, None);
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::DanglingBoundary && v.cells == vec![CellId::face(g)]));
    }

    #[test]
    fn intersection_check_is_symmetric() {
        let mut cx = CellComplex::new();
        verts(&mut cx, 8);
        cx.add_hex([0, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        cx.add_hex([0, 1, 2, 3, 5, 6, 7, 4]).unwrap();
        let data: Vec<CellData> = cx
            .cells()
            .into_iter()
            .filter(|c| c.dim > 0)
            .map(|id| CellData {
                id,
                verts: cx.cell_vertices(id).unwrap(),
                closure: cx.closure(id).unwrap(),
            })
            .collect();
        let index: HashMap<CellId, usize> = data.iter().enumerate().map(|(i, d)| (d.id, i)).collect();
        for a in &data {
            for b in &data {
                assert_eq!(
                    bad_intersection(a, b, &data, &index).is_some(),
                    bad_intersection(b, a, &data, &index).is_some()
                );
            }
        }
    }
}
