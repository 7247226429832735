//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hexmesh_core::buffer::{apply_subdivisions, build_layer, classify_cells, split_walls};
use hexmesh_core::cellcx::{validate, CellComplex, Vertex, ViolationCode};
use hexmesh_core::forge::TemplateStore;
use hexmesh_core::gen;
use hexmesh_core::io;
use hexmesh_core::pipeline::{hexmesh, MeshOutcome, PipelineOptions};
use hexmesh_core::refine::{cone, cone_tetrahedralize, split_tets_to_hexes, triangulate_shell};
use hexmesh_core::surface::{bipartition, dual_curves, odd_cover, OddMethod, QuadSurface};

type Verdict = Result<String, String>;

const BIN: &str = env!("CARGO_BIN_EXE_hexmesh");
const STORE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../templates");

fn inputs() -> Vec<(String, QuadSurface)> {
    let mut v = vec![("cube".to_string(), gen::cube())];
    v.extend((1..=4).map(|k| (format!("grid_cube({k})"), gen::grid_cube(k))));
    v
}

fn odd_everywhere(s: &QuadSurface, edges: &BTreeSet<u32>) -> bool {
    s.faces().iter().all(|&f| s.face_edges(f).unwrap().iter().filter(|e| edges.contains(e)).count() % 2 == 1)
}

fn c1_odd_cover() -> Verdict {
    let t = Instant::now();
    for (name, s) in inputs() {
        for m in [OddMethod::Matching, OddMethod::TreeJoin] {
            let set = odd_cover(&s, m).map_err(|e| format!("{name} {m}: {e}"))?;
            if !odd_everywhere(&s, &set.edges) {
                return Err(format!("{name} {m}: some face has even incidence"));
            }
        }
    }
    let el = t.elapsed();
    if el > Duration::from_secs(5) {
        return Err(format!("took {el:.2?}"));
    }
    Ok(format!("5 inputs x 2 methods in {el:.2?}"))
}

fn c2_minimality() -> Verdict {
    let s = gen::cube();
    let edges = s.edges();
    let best = (0u32..1 << edges.len())
        .filter(|mask| {
            let set: BTreeSet<u32> = (0..edges.len()).filter(|i| mask >> i & 1 == 1).map(|i| edges[i]).collect();
            odd_everywhere(&s, &set)
        })
        .map(u32::count_ones)
        .min()
        .ok_or("no odd cover among all subsets")?;
    let got = odd_cover(&s, OddMethod::Matching).map_err(|e| e.to_string())?.len();
    if best == 3 && got == 3 {
        Ok(format!("brute-force minimum {best}, matching {got}"))
    } else {
        Err(format!("brute-force minimum {best}, matching {got}"))
    }
}

struct Stages {
    tets: usize,
    interior: usize,
    cells: Vec<(usize, usize, usize)>,
}

fn run_stages(s: &QuadSurface, m: OddMethod) -> Result<Stages, String> {
    let mut cx = s.complex().clone();
    let bip = bipartition(s).map_err(|e| e.to_string())?;
    let odd = odd_cover(s, m).map_err(|e| e.to_string())?;
    let mut layer = build_layer(&mut cx, s).map_err(|e| e.to_string())?;
    let tri = triangulate_shell(&layer.shell, &bip.transport(layer.shell_map())).map_err(|e| e.to_string())?;
    let tets = cone_tetrahedralize(&tri, &mut cx);
    let (interior, reg) = split_tets_to_hexes(&mut cx, &tets).map_err(|e| e.to_string())?;
    apply_subdivisions(&mut cx, &mut layer, &bip, &reg, &tri).map_err(|e| e.to_string())?;
    split_walls(&mut cx, &mut layer, &odd).map_err(|e| e.to_string())?;
    classify_cells(&cx, &layer).map_err(|e| e.to_string())?;
    let cells = layer
        .cells
        .iter()
        .map(|c| {
            let (three, two) = layer.split_counts(c);
            (three, two, layer.cell_faces(c).len())
        })
        .collect();
    Ok(Stages { tets: tets.tets.len(), interior: interior.len(), cells })
}

fn c3_interior_counts() -> Verdict {
    for k in 1..=3 {
        let s = gen::grid_cube(k);
        let n = s.face_count();
        let st = run_stages(&s, OddMethod::Matching)?;
        if st.tets != 2 * n || st.interior != 8 * n {
            return Err(format!("n={n}: {} tets, {} hexes", st.tets, st.interior));
        }
    }
    Ok("n=6,24,54: tets=2n, hexes=8n".into())
}

fn c4_buffer_parity() -> Verdict {
    let mut cells = 0;
    for (name, s) in inputs() {
        for m in [OddMethod::Matching, OddMethod::TreeJoin] {
            for (three, two, quads) in run_stages(&s, m)?.cells {
                if three % 2 != 1 || two % 2 != 1 || !(quads == 16 || quads == 18) {
                    return Err(format!("{name} {m}: cell with {three} three-splits, {two} two-splits, {quads} quads"));
                }
                cells += 1;
            }
        }
    }
    Ok(format!("{cells} cells over 10 runs"))
}

fn c5_validator() -> Verdict {
    let mut one = CellComplex::new();
    for v in 0..12 {
        one.ensure_vertex(v, Vertex::default());
    }
    one.add_hex([0, 1, 2, 3, 4, 5, 6, 7]).map_err(|e| e.to_string())?;
    let mut two = one.clone();
    two.add_hex([4, 5, 6, 7, 8, 9, 10, 11]).map_err(|e| e.to_string())?;
    let mut bad = one.clone();
    bad.add_hex([0, 1, 2, 3, 5, 6, 7, 4]).map_err(|e| e.to_string())?;
    let (r1, r2, r3) = (validate(&one, None), validate(&two, None), validate(&bad, None));
    if r1.ok && r2.ok && !r3.ok && r3.violations.iter().any(|v| v.code == ViolationCode::NonCellIntersection) {
        Ok("cube ok, face-sharing pair ok, two-face pair rejected".into())
    } else {
        Err(format!("single {}, shared face {}, two faces rejected {}", r1.ok, r2.ok, !r3.ok))
    }
}

fn hexmesh_bin(args: &[&str]) -> Result<(i32, String), String> {
    let out = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned()))
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn c6_end_to_end(dir: &Path) -> Verdict {
    let off = dir.join("cube.off");
    let hexc = dir.join("cube.hexc");
    let stats = dir.join("cube.json");
    let (code, _) = hexmesh_bin(&["gen", "cube", "-o", path_str(&off)])?;
    if code != 0 {
        return Err(format!("gen exited {code}"));
    }
    let (code, _) = hexmesh_bin(&[
        "generate",
        path_str(&off),
        "-o",
        path_str(&hexc),
        "--time-budget",
        "10",
        "--stats-json",
        path_str(&stats),
    ])?;
    if code != 0 {
        return Err(format!("generate exited {code}"));
    }
    let (code, _) = hexmesh_bin(&["validate", path_str(&hexc)])?;
    if code != 0 {
        return Err(format!("validate exited {code}"));
    }
    let mesh = io::read_hexc(&hexc).map_err(|e| e.to_string())?;
    let input = io::read_quad_off(&off).map_err(|e| e.to_string())?;
    let want: BTreeSet<Vec<u32>> = input.faces().iter().map(|&f| canonical_cycle(&input.face_vertices(f).unwrap())).collect();
    let got: BTreeSet<Vec<u32>> = mesh.boundary.iter().map(|q| canonical_cycle(q)).collect();
    if want != got {
        return Err(format!("boundary {got:?} differs from input {want:?}"));
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    if json["interior_hexes"] != 48 {
        return Err(format!("interior_hexes {}", json["interior_hexes"]));
    }
    Ok(format!("valid, boundary id-for-id, 48 interior of {} hexes", json["total_hexes"]))
}

fn canonical_cycle(c: &[u32]) -> Vec<u32> {
    let n = c.len();
    let i = (0..n).min_by_key(|&i| c[i]).unwrap_or(0);
    let fwd: Vec<u32> = (0..n).map(|k| c[(i + k) % n]).collect();
    let bwd: Vec<u32> = (0..n).map(|k| c[(i + n - k) % n]).collect();
    fwd.min(bwd)
}

fn c7_linear() -> Verdict {
    let store = TemplateStore::load(STORE).map_err(|e| e.to_string())?;
    let opts = PipelineOptions { search_missing: false, ..PipelineOptions::default() };
    let mut ratios = vec![];
    for k in 1..=4 {
        let s = gen::grid_cube(k);
        let t = Instant::now();
        let mut st = store.clone();
        match hexmesh(&s, &mut st, &opts).map_err(|e| format!("k={k}: {e}"))? {
            MeshOutcome::Meshed { stats, .. } => ratios.push(stats.ratio_total_over_n),
            MeshOutcome::NeedsTemplate(m) => return Err(format!("k={k}: {} cell class(es) lack a template", m.len())),
        }
        if k == 4 && t.elapsed() > Duration::from_secs(60) {
            return Err(format!("k=4 took {:.1?}", t.elapsed()));
        }
    }
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0f64), |(l, h), &r| (l.min(r), h.max(r)));
    if hi <= 2.0 * lo {
        Ok(format!("total/n in [{lo:.2}, {hi:.2}]"))
    } else {
        Err(format!("total/n in [{lo:.2}, {hi:.2}]"))
    }
}

/// Random triangulated sphere: vertex insertions and edge flips on a tetrahedron.
fn random_sphere(rng: &mut ChaCha8Rng, target: usize) -> (usize, Vec<[u32; 3]>) {
    let mut tris: Vec<[u32; 3]> = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
    let mut nv = 4u32;
    while tris.len() < target {
        let i = rng.gen_range(0..tris.len());
        let [a, b, c] = tris.swap_remove(i);
        tris.extend([[a, b, nv], [b, c, nv], [c, a, nv]]);
        nv += 1;
        for _ in 0..3 {
            flip_random(rng, &mut tris);
        }
    }
    (nv as usize, tris)
}

fn flip_random(rng: &mut ChaCha8Rng, tris: &mut [[u32; 3]]) {
    let i = rng.gen_range(0..tris.len());
    let k = rng.gen_range(0..3);
    let (a, b, c) = (tris[i][k], tris[i][(k + 1) % 3], tris[i][(k + 2) % 3]);
    // the other triangle on edge a-b runs b -> a
    let Some(j) = (0..tris.len()).find(|&j| j != i && (0..3).any(|m| tris[j][m] == b && tris[j][(m + 1) % 3] == a)) else {
        return;
    };
    let d = *tris[j].iter().find(|&&v| v != a && v != b).expect("triangle");
    let degree = |v: u32| tris.iter().filter(|t| t.contains(&v)).count();
    let has_edge = tris.iter().any(|t| t.contains(&c) && t.contains(&d));
    if has_edge || degree(a) <= 3 || degree(b) <= 3 {
        return;
    }
    tris[i] = [c, a, d];
    tris[j] = [d, b, c];
}

fn c8_refinement() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sizes: Vec<usize> = (2..=20).map(|k| 2 * k).collect();
    for trial in 0..20 {
        let target = *sizes.choose(&mut rng).expect("sizes");
        let (nv, tris) = random_sphere(&mut rng, target);
        let mut cx = CellComplex::new();
        for v in 0..=nv as u32 {
            cx.ensure_vertex(v, Vertex::default());
        }
        let mesh = cone(&tris, nv as u32);
        let (hexes, _) = split_tets_to_hexes(&mut cx, &mesh).map_err(|e| format!("trial {trial}: {e}"))?;
        let report = validate(&cx, None);
        if !report.ok || hexes.len() != 4 * mesh.tets.len() {
            return Err(format!("trial {trial}: {} tets, {} hexes, valid {}", mesh.tets.len(), hexes.len(), report.ok));
        }
    }
    Ok("20 spheres with 4..40 triangles".into())
}

fn c9_dual_curves() -> Verdict {
    let cube = dual_curves(&gen::cube());
    let lens: Vec<usize> = cube.curves.iter().map(|c| c.len()).collect();
    if lens != [4, 4, 4] || cube.self_intersections.iter().any(|&x| x != 0) {
        return Err(format!("cube curves {lens:?}, self {:?}", cube.self_intersections));
    }
    for (name, s) in inputs() {
        let total = dual_curves(&s).total_length();
        if total != 2 * s.face_count() {
            return Err(format!("{name}: total length {total}, F={}", s.face_count()));
        }
    }
    Ok("cube 3x4, simple; total 2F on 5 inputs".into())
}

fn c10_determinism(dir: &Path) -> Verdict {
    let off = dir.join("g2.off");
    hexmesh_bin(&["gen", "grid-cube:2", "-o", path_str(&off)])?;
    let mut outputs = vec![];
    for run in 0..2 {
        let hexc = dir.join(format!("g2-{run}.hexc"));
        let stats = dir.join(format!("g2-{run}.json"));
        let (code, _) = hexmesh_bin(&[
            "generate",
            path_str(&off),
            "-o",
            path_str(&hexc),
            "--time-budget",
            "10",
            "--stats-json",
            path_str(&stats),
        ])?;
        if code != 0 {
            return Err(format!("run {run} exited {code}"));
        }
        outputs.push((std::fs::read(&hexc).map_err(|e| e.to_string())?, std::fs::read(&stats).map_err(|e| e.to_string())?));
    }
    if outputs[0] == outputs[1] {
        Ok(format!("{} bytes of mesh identical", outputs[0].0.len()))
    } else {
        Err("outputs differ".into())
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir: PathBuf = tmp.path().to_path_buf();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict>)> = vec![
        ("odd cover on every face", Box::new(c1_odd_cover)),
        ("cube odd cover minimality", Box::new(c2_minimality)),
        ("interior tet and hex counts", Box::new(c3_interior_counts)),
        ("buffer cell parity", Box::new(c4_buffer_parity)),
        ("validator soundness", Box::new(c5_validator)),
        ("end-to-end cube", Box::new({
            let d = dir.clone();
            move || c6_end_to_end(&d)
        })),
        ("linear complexity", Box::new(c7_linear)),
        ("refinement consistency", Box::new(c8_refinement)),
        ("dual curves", Box::new(c9_dual_curves)),
        ("determinism", Box::new({
            let d = dir.clone();
            move || c10_determinism(&d)
        })),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
