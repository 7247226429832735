//! Combinatorial hexahedral meshing of quadrilateral surfaces bounding a
//! topological ball.
//!
//! The input surface is wrapped in a buffer layer of prisms. The region
//! inside the layer is coned to a single vertex and every tetrahedron is cut
//! into four hexahedra; each prism of the layer, after its walls are split so
//! that it has an even number of quadrilateral sides, is filled from a store
//! of verified templates.

pub mod cellcx;
pub mod gen;
pub mod io;
pub mod surface;
pub mod forge;
pub mod refine;
pub mod buffer;
pub mod pipeline;
