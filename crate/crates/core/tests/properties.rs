use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use hexmesh_core::buffer::{apply_subdivisions, build_layer, classify_cells, split_walls};
use hexmesh_core::cellcx::{validate, CellComplex, Vertex};
use hexmesh_core::forge::{canonicalize, instantiate, search_filling, SearchOptions, SearchOutcome};
use hexmesh_core::io;
use hexmesh_core::refine::{cone_tetrahedralize, split_tets_to_hexes, triangulate_shell};
use hexmesh_core::surface::{bipartition, boundary_surface, dual_curves, odd_cover, OddMethod, QuadSurface};

/// Boundary of an a x b x c block of unit cubes. `seed` permutes the vertex
/// ids and rotates the face order.
fn block(dims: [u32; 3], seed: u64) -> QuadSurface {
    let [a, b, c] = dims;
    let lim = [a, b, c];
    let mut ids = BTreeMap::new();
    for x in 0..=a {
        for y in 0..=b {
            for z in 0..=c {
                if x == 0 || x == a || y == 0 || y == b || z == 0 || z == c {
                    let n = ids.len() as u32;
                    ids.insert([x, y, z], n);
                }
            }
        }
    }
    let mut faces = vec![];
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, lim[axis]] {
            for i in 0..lim[u] {
                for j in 0..lim[v] {
                    let at = |di: u32, dj: u32| {
                        let mut p = [0; 3];
                        p[axis] = side;
                        p[u] = i + di;
                        p[v] = j + dj;
                        ids[&p]
                    };
                    faces.push([at(0, 0), at(1, 0), at(1, 1), at(0, 1)]);
                }
            }
        }
    }
    // deterministic shuffle of ids and face order
    let n = ids.len() as u32;
    let mult = (2 * seed + 1) as u32;
    let relabel = |v: u32| (v.wrapping_mul(mult).wrapping_add(seed as u32)) % n;
    let perm_ok = (0..n).map(relabel).collect::<BTreeSet<_>>().len() == n as usize;
    let faces: Vec<[u32; 4]> = faces.iter().map(|f| if perm_ok { f.map(relabel) } else { *f }).collect();
    let k = seed as usize % faces.len();
    let rotated: Vec<[u32; 4]> = faces[k..].iter().chain(&faces[..k]).copied().collect();
    QuadSurface::from_polygons(n as usize, &rotated).unwrap()
}

fn dims() -> impl Strategy<Value = [u32; 3]> {
    [1u32..=3, 1u32..=3, 1u32..=2]
}

fn odd_on_every_face(s: &QuadSurface, set: &BTreeSet<u32>) -> bool {
    s.faces().iter().all(|&f| s.face_edges(f).unwrap().iter().filter(|e| set.contains(e)).count() % 2 == 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn odd_cover_is_odd_and_matching_no_larger(d in dims(), seed in 0u64..1000) {
        let s = block(d, seed);
        let m = odd_cover(&s, OddMethod::Matching).unwrap();
        let t = odd_cover(&s, OddMethod::TreeJoin).unwrap();
        prop_assert!(odd_on_every_face(&s, &m.edges));
        prop_assert!(odd_on_every_face(&s, &t.edges));
        prop_assert!(m.len() <= t.len());
    }

    #[test]
    fn bipartition_separates_every_edge(d in dims(), seed in 0u64..1000) {
        let s = block(d, seed);
        let bip = bipartition(&s).unwrap();
        for e in s.edges() {
            let [a, b] = s.edge(e).unwrap();
            prop_assert_ne!(bip.class(a), bip.class(b));
        }
    }

    #[test]
    fn dual_curves_cross_each_edge_once(d in dims(), seed in 0u64..1000) {
        let s = block(d, seed);
        let set = dual_curves(&s);
        prop_assert_eq!(set.total_length(), 2 * s.face_count());
        let mut crossed: BTreeMap<u32, usize> = BTreeMap::new();
        for c in &set.curves {
            for st in &c.steps {
                *crossed.entry(st.entry).or_default() += 1;
            }
        }
        prop_assert_eq!(crossed.len(), s.edge_count());
        prop_assert!(crossed.values().all(|&k| k == 1));
    }

    #[test]
    fn canonical_form_is_idempotent_and_label_free(d in dims(), s1 in 0u64..1000, s2 in 0u64..1000) {
        let c1 = canonicalize(&block(d, s1)).unwrap();
        let c2 = canonicalize(&block(d, s2)).unwrap();
        prop_assert_eq!(&c1.signature, &c2.signature);
        prop_assert_eq!(canonicalize(&c1.surface()).unwrap(), c1);
    }

    #[test]
    fn interior_and_buffer_invariants(d in dims(), seed in 0u64..1000, tree in any::<bool>()) {
        let s = block(d, seed);
        let n = s.face_count();
        let method = if tree { OddMethod::TreeJoin } else { OddMethod::Matching };
        let mut cx = s.complex().clone();
        let bip = bipartition(&s).unwrap();
        let odd = odd_cover(&s, method).unwrap();
        let mut layer = build_layer(&mut cx, &s).unwrap();
        let tri = triangulate_shell(&layer.shell, &bip.transport(layer.shell_map())).unwrap();
        let tets = cone_tetrahedralize(&tri, &mut cx);
        let (hexes, reg) = split_tets_to_hexes(&mut cx, &tets).unwrap();
        prop_assert_eq!(tets.tets.len(), 2 * n);
        prop_assert_eq!(hexes.len(), 4 * tets.tets.len());

        // the interior alone is valid and bounded by 6 quads per shell face
        let mut interior = CellComplex::new();
        for v in cx.vertex_ids() {
            interior.ensure_vertex(v, Vertex::default());
        }
        for &h in &hexes {
            interior.add_hex(cx.hex_vertices(h).unwrap()).unwrap();
        }
        prop_assert!(validate(&interior, None).ok);
        prop_assert_eq!(boundary_surface(&interior).unwrap().face_count(), 6 * n);

        apply_subdivisions(&mut cx, &mut layer, &bip, &reg, &tri).unwrap();
        split_walls(&mut cx, &mut layer, &odd).unwrap();
        classify_cells(&cx, &layer).unwrap();
        let mut uses: BTreeMap<u32, usize> = BTreeMap::new();
        let mut total = 0;
        for cell in &layer.cells {
            let (three, two) = layer.split_counts(cell);
            prop_assert!(three % 2 == 1 && two % 2 == 1 && three + two == 4);
            let faces = layer.cell_faces(cell);
            total += faces.len();
            for e in cell.walls {
                for &q in &layer.wall_of[&e].quads {
                    *uses.entry(q).or_default() += 1;
                }
            }
        }
        prop_assert!(uses.values().all(|&k| k == 2));
        prop_assert_eq!(total, 2 * uses.len() + n + 6 * n);
    }

    #[test]
    fn validation_ignores_insertion_order(d in dims(), seed in 0u64..1000) {
        let s = block(d, seed);
        let mut cx = s.complex().clone();
        let bip = bipartition(&s).unwrap();
        let tri = triangulate_shell(&s, &bip).unwrap();
        let tets = cone_tetrahedralize(&tri, &mut cx);
        let (hexes, _) = split_tets_to_hexes(&mut cx, &tets).unwrap();
        let corners: Vec<[u32; 8]> = hexes.iter().map(|&h| cx.hex_vertices(h).unwrap()).collect();
        let build = |order: &mut dyn Iterator<Item = &[u32; 8]>, extra: Option<[u32; 8]>| {
            let mut k = CellComplex::new();
            for v in cx.vertex_ids() {
                k.ensure_vertex(v, Vertex::default());
            }
            for h in order {
                k.add_hex(*h).unwrap();
            }
            if let Some(h) = extra {
                k.add_hex(h).unwrap();
            }
            validate(&k, None).ok
        };
        // a second copy of one hex twisted against the first makes a bad pair
        let h = corners[seed as usize % corners.len()];
        let twisted = [h[0], h[1], h[2], h[3], h[5], h[6], h[7], h[4]];
        prop_assert!(build(&mut corners.iter(), None));
        prop_assert!(build(&mut corners.iter().rev(), None));
        prop_assert!(!build(&mut corners.iter(), Some(twisted)));
        let mut rev = corners.iter().rev();
        prop_assert!(!build(&mut rev, Some(twisted)));
    }

    #[test]
    fn hexc_round_trip(d in dims(), seed in 0u64..1000) {
        let s = block(d, seed);
        let mut cx = s.complex().clone();
        let tri = triangulate_shell(&s, &bipartition(&s).unwrap()).unwrap();
        let tets = cone_tetrahedralize(&tri, &mut cx);
        split_tets_to_hexes(&mut cx, &tets).unwrap();
        let text = io::format_hexc(&cx);
        let back = io::parse_hexc(&text).unwrap();
        prop_assert_eq!(io::format_hexc(&back.complex), text);
        prop_assert_eq!(back.complex.count(3), cx.count(3));
    }

    #[test]
    fn off_round_trip(d in dims(), seed in 0u64..1000) {
        let s = block(d, seed);
        let text = io::format_quad_off(&s);
        let back = io::parse_quad_off(&text).unwrap();
        prop_assert_eq!(io::format_quad_off(&back), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// A searched template fills every relabelled copy of its boundary.
    #[test]
    fn instantiate_preserves_filling(seed in 0u64..1000) {
        let t = match search_filling(&canonicalize(&block([2, 1, 1], 0)).unwrap(), &SearchOptions::default()).unwrap() {
            SearchOutcome::Found(t, _) => t,
            other => panic!("no filling for a 2-block: {other:?}"),
        };
        prop_assert!(t.verify().is_ok());
        let target = block([2, 1, 1], seed);
        let filled = instantiate(&t, &target).unwrap();
        prop_assert_eq!(filled.count(3), t.hex_count());
        prop_assert!(validate(&filled, Some(&target)).ok);
    }
}
