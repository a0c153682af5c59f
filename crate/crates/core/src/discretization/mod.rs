//! Graded meshes with `x0` as a node, the C1 cubic Hermite space on them, and
//! the weighted quadrature used to assemble forms.

mod hermite;
mod mesh;
pub mod quadrature;

pub use hermite::{evaluate, shape, DofMap, Side};
pub use mesh::Mesh;
pub use quadrature::{weighted_rule, QuadratureRule, SingularConvention, WeightKind};

use crate::error::Result;

pub fn build_mesh(n: usize, x0: f64, grading: f64) -> Result<Mesh> {
    Mesh::build(n, x0, grading)
}

pub fn hermite_basis(mesh: &Mesh) -> DofMap {
    DofMap::hermite(mesh)
}
