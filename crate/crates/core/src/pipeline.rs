//! The end-to-end mesher: input gate, interior refinement, buffer layer and
//! per-cell template instantiation.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::buffer::{self, BufferError};
use crate::cellcx::{validate, CellComplex, IdError, ValidationReport};
use crate::forge::{
    instantiate_with, search_filling, CanonicalBoundary, SearchError, SearchOptions, SearchOutcome, StoreError,
    Template, TemplateStore,
};
use crate::refine::{self, RefineError};
use crate::surface::{self, odd_cover, OddMethod, QuadSurface, SurfaceError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("precondition: {0}")]
    Precondition(SurfaceError),
    #[error("odd cover: {0}")]
    OddCover(SurfaceError),
    #[error("refinement: {0}")]
    Refine(#[from] RefineError),
    #[error("buffer layer: {0}")]
    Buffer(#[from] BufferError),
    #[error("template: {0}")]
    Template(#[from] StoreError),
    #[error("search: {0}")]
    Search(#[from] SearchError),
    #[error("assembly: {0}")]
    Assembly(#[from] IdError),
    #[error("final mesh failed validation with {} violations", .0.violations.len())]
    Validation(ValidationReport),
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub odd_method: OddMethod,
    /// Run the filling search on cell classes missing from the store.
    pub search_missing: bool,
    pub search: SearchOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { odd_method: OddMethod::Matching, search_missing: true, search: SearchOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshStats {
    pub n_boundary_faces: usize,
    pub interior_hexes: usize,
    pub buffer_hexes: usize,
    pub total_hexes: usize,
    /// Store key to number of cells filled with that template.
    pub templates_used: BTreeMap<String, usize>,
    pub odd_set_size: usize,
    pub ratio_total_over_n: f64,
}

#[derive(Debug)]
pub enum MeshOutcome {
    Meshed { mesh: CellComplex, stats: MeshStats },
    /// Cell classes with no template in the store and none found by search.
    NeedsTemplate(Vec<CanonicalBoundary>),
}

/// Meshes the ball bounded by `surface`. Templates found by search are added
/// to `store`; the caller decides whether to persist them.
pub fn hexmesh(
    surface: &QuadSurface,
    store: &mut TemplateStore,
    opts: &PipelineOptions,
) -> Result<MeshOutcome, PipelineError> {
    surface::check_preconditions(surface).map_err(PipelineError::Precondition)?;
    let bip = surface::bipartition(surface).map_err(PipelineError::Precondition)?;
    let odd = odd_cover(surface, opts.odd_method).map_err(PipelineError::OddCover)?;

    let mut cx = surface.complex().clone();
    let mut layer = buffer::build_layer(&mut cx, surface)?;
    let shell_bip = bip.transport(layer.shell_map());
    let tri = refine::triangulate_shell(&layer.shell, &shell_bip)?;
    let tets = refine::cone_tetrahedralize(&tri, &mut cx);
    let (interior, reg) = refine::split_tets_to_hexes(&mut cx, &tets)?;
    buffer::apply_subdivisions(&mut cx, &mut layer, &bip, &reg, &tri)?;
    buffer::split_walls(&mut cx, &mut layer, &odd)?;
    let classes = buffer::classify_cells(&cx, &layer)?;

    let mut missing: BTreeMap<String, CanonicalBoundary> = BTreeMap::new();
    let mut tried = BTreeSet::new();
    for class in &classes {
        let key = class.canonical.key();
        if store.get(&class.canonical).is_some() || !opts.search_missing || !tried.insert(key.clone()) {
            if store.get(&class.canonical).is_none() {
                missing.insert(key, class.canonical.clone());
            }
            continue;
        }
        match search_filling(&class.canonical, &opts.search)? {
            SearchOutcome::Found(template, _) => store.insert(template)?,
            _ => {
                missing.insert(key, class.canonical.clone());
            }
        }
    }
    if !missing.is_empty() {
        return Ok(MeshOutcome::NeedsTemplate(missing.into_values().collect()));
    }

    // neighbouring fillings meet properly only if each is boundary regular
    let mut regular: BTreeMap<String, Template> = BTreeMap::new();
    let mut templates_used: BTreeMap<String, usize> = BTreeMap::new();
    let mut buffer_hexes = 0;
    for class in &classes {
        let template = regular.entry(class.canonical.key()).or_insert_with(|| {
            let t = store.get(&class.canonical).expect("checked above");
            if t.boundary_regular() {
                t.clone()
            } else {
                t.pillowed()
            }
        });
        let hexes = instantiate_with(template, &class.boundary, || cx.add_vertex())?;
        for h in hexes {
            cx.add_hex(h)?;
        }
        buffer_hexes += template.hex_count();
        *templates_used.entry(template.key()).or_default() += 1;
    }

    let report = validate(&cx, Some(surface));
    if !report.ok {
        return Err(PipelineError::Validation(report));
    }
    let n = surface.face_count();
    let total = interior.len() + buffer_hexes;
    let stats = MeshStats {
        n_boundary_faces: n,
        interior_hexes: interior.len(),
        buffer_hexes,
        total_hexes: total,
        templates_used,
        odd_set_size: odd.len(),
        ratio_total_over_n: total as f64 / n as f64,
    };
    Ok(MeshOutcome::Meshed { mesh: cx, stats })
}
