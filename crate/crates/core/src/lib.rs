//! Surgical template design from triangle meshes.
//!
//! The crate turns an anatomy surface, a closed contour drawn on it and a set
//! of drill axes into a closed, printable template:
//!
//! 1. [`contour`] resamples control points with a Catmull–Rom spline and
//!    snaps the samples onto the surface.
//! 2. [`segmentation`] walks the contour along mesh edges, signs a distance
//!    scalar per vertex and clips the inner surface out at scalar zero.
//! 3. [`offset`] samples an exact distance field of the inner surface,
//!    extracts the isosurface at the template thickness and clips the outer
//!    shell.
//! 4. [`ruled`] joins the inner and outer borders with a minimal-span strip.
//! 5. [`boolean`] fuses drilling tubes from [`tube`] into the body.
//!
//! [`pipeline::generate_template`] runs all of it and reports per-stage
//! timings.

pub mod boolean;
pub mod bvh;
pub mod contour;
pub mod fixtures;
pub mod geometry;
pub mod mesh;
pub mod offset;
pub mod pipeline;
pub mod ruled;
pub mod segmentation;
pub mod tube;

pub use geometry::{Point3, Vec3};
pub use mesh::{BoundaryLoop, MeshError, TriangleMesh};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/segmentation.md")]
    mod segmentation {}
    #[doc = include_str!("../../../book/src/offset.md")]
    mod offset {}
    #[doc = include_str!("../../../book/src/ruled.md")]
    mod ruled {}
    #[doc = include_str!("../../../book/src/boolean.md")]
    mod boolean {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
