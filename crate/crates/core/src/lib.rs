//! Certified numerics for Fuchsian-group leaf metrics on the unit disk.
//!
//! The crate is organised bottom-up:
//!
//! * [`moebius`]: disk automorphisms, geodesics, half-planes, horocycles.
//! * [`group`]: finitely generated groups, word balls, Dirichlet domains.
//! * [`leafmetrics`]: the leaf invariants `α`, `β`, `ρ` with error bounds.
//! * [`horocycles`]: horocycle injectivity and displacement floors.
//! * [`constructor`]: the staged full-measure limit-group construction.
//! * [`localmodel`]: annulus and strip models near singular points.
//! * [`currents`]: Nevanlinna-type mass growth of analytic disks.
//! * [`shell`]: file formats, CSV/SVG output and provenance.

// `!(x > 0.0)` is how argument checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructor;
pub mod currents;
pub mod group;
pub mod horocycles;
pub mod leafmetrics;
pub mod localmodel;
pub mod moebius;
pub mod par;
pub mod shell;

pub use moebius::{
    BoundaryPoint, CircleArc, Classification, Complex, DiskAutomorphism, EuclideanDisk, Geodesic,
    GeometryError, HalfPlane, Horocycle,
};
