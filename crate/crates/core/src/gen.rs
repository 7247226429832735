//! Test-case generators.

use crate::cellcx::{CellComplex, Vertex};
use crate::surface::QuadSurface;

/// The boundary of the unit cube; the same as `grid_cube(1)`.
pub fn cube() -> QuadSurface {
    grid_cube(1)
}

/// Surface of the cube with every side refined into a `k`-by-`k` grid.
///
/// Vertices are the boundary lattice points of `{0..k}^3`, numbered in
/// z-major, then y, then x order, with coordinates scaled into the unit
/// cube. Faces are listed side by side (`-x`, `+x`, `-y`, `+y`, `-z`, `+z`)
/// and oriented counterclockwise seen from outside.
///
/// # Panics
///
/// If `k` is zero.
pub fn grid_cube(k: u32) -> QuadSurface {
    assert!(k >= 1, "grid_cube needs k >= 1");
    let n = k + 1;
    let on_surface = |p: [u32; 3]| p.iter().any(|&c| c == 0 || c == k);
    let mut id = vec![u32::MAX; (n * n * n) as usize];
    let index = |p: [u32; 3]| ((p[2] * n + p[1]) * n + p[0]) as usize;
    let mut cx = CellComplex::new();
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let p = [x, y, z];
                if on_surface(p) {
                    let coords = p.map(|c| f64::from(c) / f64::from(k));
                    id[index(p)] = cx.add_vertex_with(Vertex { coords: Some(coords) });
                }
            }
        }
    }
    for axis in 0..3 {
        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, k] {
            for j in 0..k {
                for i in 0..k {
                    let at = |di: u32, dj: u32| {
                        let mut p = [0; 3];
                        p[axis] = side;
                        p[b] = i + di;
                        p[c] = j + dj;
                        id[index(p)]
                    };
                    let mut quad = [at(0, 0), at(1, 0), at(1, 1), at(0, 1)];
                    if side == 0 {
                        quad.reverse();
                    }
                    cx.polygon(&quad).expect("lattice quad");
                }
            }
        }
    }
    QuadSurface::new(cx).expect("no volumes")
}
