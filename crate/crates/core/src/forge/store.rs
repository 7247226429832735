//! Verified templates and their on-disk store.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{canonicalize, canonize, hex_complex, CanonicalBoundary};
use crate::cellcx::{is_combinatorial_cube, validate, CellComplex, IdError, HEX_EDGES, HEX_FACES};
use crate::surface::QuadSurface;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{file}: line {line}: {msg}")]
    Format { file: String, line: usize, msg: String },
    #[error("template {key} failed verification: {detail}")]
    VerificationFailed { key: String, detail: String },
    #[error("cell boundary {found} does not match template {expected}")]
    SignatureMismatch { expected: String, found: String },
    #[error("cell boundary is not a quad sphere: {0}")]
    NotQuadSphere(String),
    #[error(transparent)]
    Id(#[from] IdError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// Found by the filling search with the given hex budget.
    Searched(usize),
    /// Written by hand.
    Authored,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Searched(budget) => write!(f, "searched {budget}"),
            Provenance::Authored => f.write_str("authored"),
        }
    }
}

/// A hexahedral filling of a canonical boundary. Vertices `0..V` of the
/// filling are the boundary's canonical labels; the rest are interior.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub boundary: CanonicalBoundary,
    pub vertex_count: u32,
    pub hexes: Vec<[u32; 8]>,
    pub provenance: Provenance,
}

impl Template {
    pub fn hex_count(&self) -> usize {
        self.hexes.len()
    }

    pub fn key(&self) -> String {
        self.boundary.key()
    }

    pub fn filling(&self) -> CellComplex {
        hex_complex(&self.hexes, self.vertex_count)
    }

    /// Whether every hex, and every face and edge inside the filling, meets
    /// the boundary in nothing, a vertex, a boundary edge or a boundary face.
    /// Fillings of two cells sharing a wall only meet in cells when both
    /// have this property.
    pub fn boundary_regular(&self) -> bool {
        let nb = self.boundary.vertex_count;
        let mut bedges = BTreeSet::new();
        let mut bfaces = BTreeSet::new();
        for f in &self.boundary.faces {
            for i in 0..4 {
                bedges.insert(sorted([f[i], f[(i + 1) % 4]]));
            }
            bfaces.insert(sorted(*f));
        }
        let on = |v: &u32| *v < nb;
        for h in &self.hexes {
            let faces = HEX_FACES.map(|f| sorted([h[f[0]], h[f[1]], h[f[2]], h[f[3]]]));
            let edges = HEX_EDGES.map(|e| sorted([h[e[0]], h[e[1]]]));
            let touch: Vec<u32> = h.iter().copied().filter(on).collect();
            let hex_ok = match touch.len() {
                0 | 1 => true,
                2 => edges.contains(&sorted([touch[0], touch[1]])) && bedges.contains(&sorted([touch[0], touch[1]])),
                4 => {
                    let q = sorted([touch[0], touch[1], touch[2], touch[3]]);
                    faces.contains(&q) && bfaces.contains(&q)
                }
                _ => false,
            };
            let face_ok = |q: &[u32; 4]| {
                if bfaces.contains(q) {
                    return true;
                }
                let touch: Vec<u32> = q.iter().copied().filter(on).collect();
                match touch.len() {
                    0 | 1 => true,
                    // adjacent in the quad exactly when the pair is one of its edges
                    2 => edges.contains(&sorted([touch[0], touch[1]])) && bedges.contains(&sorted([touch[0], touch[1]])),
                    _ => false,
                }
            };
            let edge_ok = |e: &[u32; 2]| bedges.contains(e) || !(on(&e[0]) && on(&e[1]));
            if !hex_ok || !faces.iter().all(face_ok) || !edges.iter().all(edge_ok) {
                return false;
            }
        }
        true
    }

    /// The same filling wrapped in a collar: one hex per boundary quad
    /// joining it to an inner copy, which the old filling now fills. The
    /// result is always boundary regular.
    pub fn pillowed(&self) -> Template {
        let nb = self.boundary.vertex_count;
        let copy = |v: u32| if v < nb { self.vertex_count + v } else { v };
        let mut hexes: Vec<[u32; 8]> = self
            .boundary
            .faces
            .iter()
            .map(|f| [f[0], f[1], f[2], f[3], copy(f[0]), copy(f[1]), copy(f[2]), copy(f[3])])
            .collect();
        hexes.extend(self.hexes.iter().map(|h| h.map(copy)));
        Template { boundary: self.boundary.clone(), vertex_count: self.vertex_count + nb, hexes, provenance: self.provenance }
    }

    /// Re-checks the filling: cubes only, valid complex, boundary equal to
    /// the canonical boundary.
    pub fn verify(&self) -> Result<(), StoreError> {
        let fail = |detail: String| StoreError::VerificationFailed { key: self.key(), detail };
        let recomputed = canonicalize(&self.boundary.surface()).map_err(|e| fail(e.to_string()))?;
        if recomputed != self.boundary {
            return Err(fail("boundary is not in canonical form".into()));
        }
        let n = self.vertex_count;
        if let Some(v) = self.hexes.iter().flatten().find(|&&v| v >= n) {
            return Err(fail(format!("vertex {v} out of range")));
        }
        if let Some(h) = self.hexes.iter().find(|h| (1..8).any(|i| h[..i].contains(&h[i]))) {
            return Err(fail(format!("hex {h:?} repeats a vertex")));
        }
        let cx = self.filling();
        for c in cx.volume_ids() {
            if !is_combinatorial_cube(&cx, c)? {
                return Err(fail(format!("volume c{c} is not a cube")));
            }
        }
        let report = validate(&cx, Some(&self.boundary.surface()));
        if !report.ok {
            return Err(fail(report.violations.iter().take(3).map(ToString::to_string).collect::<Vec<_>>().join("; ")));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("hexc-template 1\n");
        let _ = writeln!(out, "provenance {}", self.provenance);
        let _ = writeln!(out, "boundary {} {}", self.boundary.vertex_count, self.boundary.faces.len());
        for f in &self.boundary.faces {
            let _ = writeln!(out, "{} {} {} {}", f[0], f[1], f[2], f[3]);
        }
        let _ = writeln!(out, "filling {} {}", self.hexes.len(), self.vertex_count);
        for h in &self.hexes {
            let ids: Vec<String> = h.iter().map(u32::to_string).collect();
            let _ = writeln!(out, "{}", ids.join(" "));
        }
        out
    }

    /// Parses one template. The boundary may be given in any labelling; it
    /// is canonicalized and the filling relabelled to match. Not verified.
    pub fn parse(text: &str, file: &str) -> Result<Template, StoreError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        parse_one(&lines, file)
    }
}

fn sorted<const N: usize>(mut k: [u32; N]) -> [u32; N] {
    k.sort_unstable();
    k
}

fn format_err(file: &str, line: usize, msg: impl Into<String>) -> StoreError {
    StoreError::Format { file: file.to_string(), line, msg: msg.into() }
}

fn numbers(file: &str, line: usize, s: &str) -> Result<Vec<u32>, StoreError> {
    s.split_whitespace().map(|t| t.parse().map_err(|_| format_err(file, line, format!("bad number `{t}`")))).collect()
}

fn parse_one(lines: &[(usize, &str)], file: &str) -> Result<Template, StoreError> {
    let mut it = lines.iter().copied();
    let mut next = |what: &str| it.next().ok_or_else(|| format_err(file, lines.last().map_or(1, |l| l.0), format!("missing {what}")));
    let (l, header) = next("header")?;
    if header != "hexc-template 1" {
        return Err(format_err(file, l, "expected `hexc-template 1`"));
    }
    let (l, prov) = next("provenance")?;
    let provenance = match prov.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["provenance", "authored"] => Provenance::Authored,
        ["provenance", "searched", b] => Provenance::Searched(b.parse().map_err(|_| format_err(file, l, "bad budget"))?),
        _ => return Err(format_err(file, l, "expected `provenance searched N` or `provenance authored`")),
    };
    let (l, b) = next("boundary block")?;
    let (nv, nf) = match b.strip_prefix("boundary ").map(|r| numbers(file, l, r)) {
        Some(Ok(v)) if v.len() == 2 => (v[0], v[1] as usize),
        _ => return Err(format_err(file, l, "expected `boundary V F`")),
    };
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, s) = next("boundary face")?;
        let v = numbers(file, l, s)?;
        if v.len() != 4 || v.iter().any(|&x| x >= nv) {
            return Err(format_err(file, l, "expected 4 boundary vertex ids"));
        }
        faces.push([v[0], v[1], v[2], v[3]]);
    }
    let (l, f) = next("filling block")?;
    let (nh, total) = match f.strip_prefix("filling ").map(|r| numbers(file, l, r)) {
        Some(Ok(v)) if v.len() == 2 => (v[0] as usize, v[1]),
        _ => return Err(format_err(file, l, "expected `filling H V`")),
    };
    if total < nv {
        return Err(format_err(file, l, "filling has fewer vertices than its boundary"));
    }
    let mut hexes = Vec::with_capacity(nh);
    for _ in 0..nh {
        let (l, s) = next("hex")?;
        let v = numbers(file, l, s)?;
        let h: [u32; 8] = v.try_into().map_err(|_| format_err(file, l, "expected 8 vertex ids"))?;
        hexes.push(h);
    }
    if let Some((l, _)) = it.next() {
        return Err(format_err(file, l, "trailing content"));
    }

    let surface = QuadSurface::from_polygons(nv as usize, &faces).map_err(|e| format_err(file, 1, e.to_string()))?;
    let canon = canonize(&surface).map_err(|e| format_err(file, 1, format!("boundary: {e}")))?;
    // carry the filling over to canonical labels; interior ids are kept
    let relabel = |v: u32| if v < nv { canon.label_of.get(&v).copied().unwrap_or(v) } else { v };
    let hexes = hexes.into_iter().map(|h| h.map(relabel)).collect();
    Ok(Template { boundary: canon.boundary, vertex_count: total, hexes, provenance })
}

/// Templates keyed by boundary signature digest.
#[derive(Clone, Debug, Default)]
pub struct TemplateStore {
    templates: BTreeMap<String, Template>,
}

impl TemplateStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, boundary: &CanonicalBoundary) -> Option<&Template> {
        self.templates.get(&boundary.key()).filter(|t| t.boundary.signature == boundary.signature)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Template> {
        self.templates.values()
    }

    /// Adds a template after verifying it.
    pub fn insert(&mut self, template: Template) -> Result<(), StoreError> {
        template.verify()?;
        self.templates.insert(template.key(), template);
        Ok(())
    }

    /// Loads a directory of `*.tpl` files, or a single file holding any
    /// number of concatenated templates. Every template is re-verified.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let mut store = Self::new();
        if path.is_dir() {
            let mut files: Vec<_> = fs::read_dir(path)?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "tpl"))
                .collect();
            files.sort();
            for f in files {
                store.load_file(&f)?;
            }
        } else {
            store.load_file(path)?;
        }
        Ok(store)
    }

    fn load_file(&mut self, path: &Path) -> Result<(), StoreError> {
        let text = fs::read_to_string(path)?;
        let name = path.display().to_string();
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        let starts: Vec<usize> = lines.iter().enumerate().filter(|(_, (_, l))| l.starts_with("hexc-template")).map(|(i, _)| i).collect();
        if starts.first().is_some_and(|&s| s != 0) {
            return Err(format_err(&name, lines[0].0, "content before the first template"));
        }
        for (i, &s) in starts.iter().enumerate() {
            let end = starts.get(i + 1).copied().unwrap_or(lines.len());
            let t = parse_one(&lines[s..end], &name)?;
            self.insert(t)?;
        }
        Ok(())
    }

    /// Writes one `<key>.tpl` file per template into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), StoreError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (key, t) in &self.templates {
            fs::write(dir.join(format!("{key}.tpl")), t.to_text())?;
        }
        Ok(())
    }
}

/// Copies the template filling onto `cell_boundary`, whose vertices keep
/// their ids. Interior vertices are minted with `fresh`. Returns the hexes.
pub fn instantiate_with(
    template: &Template,
    cell_boundary: &QuadSurface,
    mut fresh: impl FnMut() -> u32,
) -> Result<Vec<[u32; 8]>, StoreError> {
    let canon = canonize(cell_boundary).map_err(|e| StoreError::NotQuadSphere(e.to_string()))?;
    if canon.boundary.signature != template.boundary.signature {
        return Err(StoreError::SignatureMismatch { expected: template.key(), found: canon.boundary.key() });
    }
    let mut map = canon.vertex_of();
    for _ in template.boundary.vertex_count..template.vertex_count {
        map.push(fresh());
    }
    Ok(template.hexes.iter().map(|h| h.map(|v| map[v as usize])).collect())
}

/// Fills `cell_boundary` with the template, returning a complex holding the
/// boundary's vertices (same ids) and the instantiated hexes.
pub fn instantiate(template: &Template, cell_boundary: &QuadSurface) -> Result<CellComplex, StoreError> {
    let mut cx = CellComplex::new();
    for v in cell_boundary.vertices() {
        cx.ensure_vertex(v, *cell_boundary.complex().vertex(v)?);
    }
    let mut next = cx.id_bound(0);
    let hexes = instantiate_with(template, cell_boundary, || {
        next += 1;
        next - 1
    })?;
    for v in cx.id_bound(0)..next {
        cx.ensure_vertex(v, Default::default());
    }
    for h in hexes {
        cx.add_hex(h)?;
    }
    Ok(cx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{search_filling, SearchOptions, SearchOutcome};
    use crate::gen;

    fn cube_template() -> Template {
        let b = canonicalize(&gen::cube()).unwrap();
        match search_filling(&b, &SearchOptions::default()).unwrap() {
            SearchOutcome::Found(t, _) => t,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = TemplateStore::new();
        let t = cube_template();
        store.insert(t.clone()).unwrap();
        store.save(dir.path()).unwrap();
        let back = TemplateStore::load(dir.path()).unwrap();
        assert_eq!(back.len(), 1);
        let u = back.get(&t.boundary).unwrap();
        assert_eq!(u.boundary.signature, t.boundary.signature);
        assert_eq!(u.hex_count(), 1);
    }

    #[test]
    fn tampered_filling_fails_verification() {
        let mut t = cube_template();
        t.hexes[0].swap(0, 1);
        assert!(matches!(t.verify(), Err(StoreError::VerificationFailed { .. })));
        let text = cube_template().to_text().replace("filling 1 8", "filling 0 8");
        let cut: String = text.lines().take_while(|l| !l.starts_with("filling")).map(|l| format!("{l}\n")).collect();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("bad.tpl");
        fs::write(&file, cut + "filling 0 8\n").unwrap();
        match TemplateStore::load(&file) {
            Err(StoreError::VerificationFailed { key, .. }) => assert_eq!(key, cube_template().key()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pillowing_makes_fillings_regular() {
        let t = cube_template();
        assert!(!t.boundary_regular());
        let p = t.pillowed();
        assert_eq!(p.hex_count(), 7);
        assert_eq!(p.vertex_count, 16);
        assert!(p.boundary_regular());
        p.verify().unwrap();
        let twice = p.pillowed();
        assert_eq!(twice.hex_count(), 13);
        twice.verify().unwrap();
    }

    #[test]
    fn regularity_rejects_an_interior_face_on_two_boundary_edges() {
        // grid_cube(2) filled by 8 hexes: the centre hex-faces between the
        // corner hexes run along pairs of boundary edges
        let b = canonicalize(&gen::grid_cube(2)).unwrap();
        let t = match search_filling(&b, &SearchOptions::default()).unwrap() {
            SearchOutcome::Found(t, _) => t,
            other => panic!("{other:?}"),
        };
        assert!(!t.boundary_regular());
        assert!(t.pillowed().boundary_regular());
    }

    #[test]
    fn empty_store_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("empty.tpl");
        fs::write(&file, "").unwrap();
        assert!(TemplateStore::load(&file).unwrap().is_empty());
        assert!(TemplateStore::load(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn instantiate_into_relabelled_cube() {
        let t = cube_template();
        let perm = [13u32, 11, 17, 10, 12, 16, 14, 15];
        let c = gen::cube();
        let polys: Vec<Vec<u32>> = c.faces().into_iter().map(|f| c.face_vertices(f).unwrap().iter().map(|&v| perm[v as usize]).collect()).collect();
        let mut cx = CellComplex::new();
        for _ in 0..18 {
            cx.add_vertex();
        }
        for p in &polys {
            cx.polygon(p).unwrap();
        }
        let target = QuadSurface::new(cx.subcomplex(&cx.face_ids().collect::<Vec<_>>()).unwrap()).unwrap();
        let filled = instantiate(&t, &target).unwrap();
        assert_eq!(filled.count(3), 1);
        let mut hv = filled.hex_vertices(0).unwrap().to_vec();
        hv.sort_unstable();
        assert_eq!(hv, vec![10, 11, 12, 13, 14, 15, 16, 17]);
        assert!(validate(&filled, Some(&target)).ok);
    }

    #[test]
    fn mismatched_signature() {
        let t = cube_template();
        assert!(matches!(instantiate(&t, &gen::grid_cube(2)), Err(StoreError::SignatureMismatch { .. })));
    }
}
