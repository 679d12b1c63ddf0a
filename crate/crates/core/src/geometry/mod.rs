//! Cubes, dyadic cubes and the analytic planar domains.

mod cube;
mod domain;
mod shape;

pub use cube::{dist, dyadic_roots, dyadic_side, norm, Cube, DyadicCube, Point};
pub use domain::{
    build_domain, component_count, cube_inside, label_components, stack_strips, DomainKind, DomainModel,
    DomainSpec, OpenSet, RectSpec, StripInfo,
};
pub use shape::{Disk, Rect, RectUnion};
