//! Dual curves: chains of quads entered and left through opposite sides.

use std::collections::{BTreeMap, BTreeSet};

use super::QuadSurface;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CurveStep {
    pub face: u32,
    pub entry: u32,
    pub exit: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualCurve {
    pub steps: Vec<CurveStep>,
}

impl DualCurve {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualCurveSet {
    pub curves: Vec<DualCurve>,
    /// Per curve, the number of faces it passes through twice.
    pub self_intersections: Vec<usize>,
    /// Faces visited by two distinct curves.
    pub crossings: usize,
}

impl DualCurveSet {
    pub fn total_length(&self) -> usize {
        self.curves.iter().map(DualCurve::len).sum()
    }
}

fn opposite_side(surface: &QuadSurface, face: u32, edge: u32) -> Option<u32> {
    let edges = surface.face_edges(face).ok()?;
    if edges.len() != 4 {
        return None;
    }
    let i = edges.iter().position(|&e| e == edge)?;
    Some(edges[(i + 2) % 4])
}

/// Traces every dual curve, starting each one at the smallest edge not yet
/// crossed and heading into that edge's smaller face.
///
/// Faces that are not quadrilaterals, and edges without two faces, end a
/// curve early; the surface is expected to have passed the precondition gate.
pub fn dual_curves(surface: &QuadSurface) -> DualCurveSet {
    let mut crossed = BTreeSet::new();
    let mut curves = Vec::new();
    for start in surface.edges() {
        if crossed.contains(&start) {
            continue;
        }
        let Some(&first) = surface.edge_faces(start).iter().min() else {
            continue;
        };
        let mut steps = Vec::new();
        let (mut face, mut entry) = (first, start);
        crossed.insert(start);
        loop {
            let Some(exit) = opposite_side(surface, face, entry) else { break };
            steps.push(CurveStep { face, entry, exit });
            crossed.insert(exit);
            let Some(next) = surface.opposite_face(exit, face) else { break };
            if exit == start && next == first {
                break;
            }
            if steps.len() > 2 * surface.face_count() {
                break;
            }
            face = next;
            entry = exit;
        }
        curves.push(DualCurve { steps });
    }

    let mut visits: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, c) in curves.iter().enumerate() {
        for s in &c.steps {
            visits.entry(s.face).or_default().push(i);
        }
    }
    let mut self_intersections = vec![0; curves.len()];
    let mut crossings = 0;
    for owners in visits.values() {
        match owners.as_slice() {
            [a, b] if a == b => self_intersections[*a] += 1,
            [_, _] => crossings += 1,
            _ => {}
        }
    }
    DualCurveSet { curves, self_intersections, crossings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn cube_has_three_bands() {
        let d = dual_curves(&gen::cube());
        assert_eq!(d.curves.len(), 3);
        assert!(d.curves.iter().all(|c| c.len() == 4));
        assert_eq!(d.self_intersections, vec![0, 0, 0]);
        assert_eq!(d.crossings, 6);
    }

    #[test]
    fn grid_cube_curve_counts() {
        for k in 1..=4u32 {
            let s = gen::grid_cube(k);
            let d = dual_curves(&s);
            assert_eq!(d.curves.len(), 3 * k as usize);
            assert_eq!(d.total_length(), 2 * s.face_count());
            let mut crossed: Vec<u32> = d.curves.iter().flat_map(|c| c.steps.iter().map(|s| s.exit)).collect();
            crossed.sort_unstable();
            assert_eq!(crossed, s.edges());
        }
    }

    #[test]
    fn steps_are_opposite_sides() {
        let s = gen::grid_cube(2);
        for c in dual_curves(&s).curves {
            for w in c.steps.windows(2) {
                assert_eq!(w[0].exit, w[1].entry);
            }
            let (first, last) = (c.steps[0], c.steps[c.len() - 1]);
            assert_eq!(last.exit, first.entry);
            for step in c.steps {
                let fv = s.face_edges(step.face).unwrap();
                let i = fv.iter().position(|&e| e == step.entry).unwrap();
                assert_eq!(fv[(i + 2) % 4], step.exit);
            }
        }
    }
}
