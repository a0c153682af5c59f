use std::collections::BTreeSet;

use crate::discretization::Mesh;
use crate::error::{Error, Result};

/// Which one-sided limit to take at a mesh node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Cubic Hermite shape functions on `[l, r]`, derivative order `d`, in the
/// local order (value left, slope left, value right, slope right).
pub fn shape(l: f64, r: f64, x: f64, d: usize) -> [f64; 4] {
    let h = r - l;
    let s = (x - l) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    match d {
        0 => [
            1.0 - 3.0 * s2 + 2.0 * s3,
            h * (s - 2.0 * s2 + s3),
            3.0 * s2 - 2.0 * s3,
            h * (s3 - s2),
        ],
        1 => [
            (6.0 * s2 - 6.0 * s) / h,
            1.0 - 4.0 * s + 3.0 * s2,
            (6.0 * s - 6.0 * s2) / h,
            3.0 * s2 - 2.0 * s,
        ],
        2 => [
            (12.0 * s - 6.0) / (h * h),
            (6.0 * s - 4.0) / h,
            (6.0 - 12.0 * s) / (h * h),
            (6.0 * s - 2.0) / h,
        ],
        3 => [12.0 / (h * h * h), 6.0 / (h * h), -12.0 / (h * h * h), 6.0 / (h * h)],
        _ => [0.0; 4],
    }
}

/// Value/slope degrees of freedom per node: node `i` owns dofs `2i` (value)
/// and `2i + 1` (slope). Represented functions are C1 on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    mesh: Mesh,
    constrained: BTreeSet<usize>,
}

impl DofMap {
    pub fn hermite(mesh: &Mesh) -> Self {
        DofMap {
            mesh: mesh.clone(),
            constrained: BTreeSet::new(),
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn total_dofs(&self) -> usize {
        2 * self.mesh.node_count()
    }

    pub fn value_dof(node: usize) -> usize {
        2 * node
    }

    pub fn slope_dof(node: usize) -> usize {
        2 * node + 1
    }

    pub fn element_dofs(e: usize) -> [usize; 4] {
        [2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3]
    }

    /// Pins `dof` to zero in every represented function.
    pub fn constrain(&mut self, dof: usize) {
        self.constrained.insert(dof);
    }

    pub fn constrained(&self) -> &BTreeSet<usize> {
        &self.constrained
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained.contains(&dof)
    }

    /// Unconstrained dofs in ascending order.
    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.total_dofs())
            .filter(|d| !self.constrained.contains(d))
            .collect()
    }

    /// Global dof -> position among free dofs.
    pub fn free_index(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        (0..self.total_dofs())
            .map(|d| {
                if self.constrained.contains(&d) {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect()
    }

    /// Global vector from a vector over free dofs (constrained entries zero).
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.total_dofs()];
        for (slot, d) in self.free_dofs().into_iter().enumerate() {
            out[d] = free[slot];
        }
        out
    }

    /// Free-dof vector from a global vector; constrained entries are dropped.
    pub fn restrict(&self, global: &[f64]) -> Vec<f64> {
        self.free_dofs().into_iter().map(|d| global[d]).collect()
    }

    /// Hermite interpolant of a function given with its derivative.
    pub fn interpolate(&self, f: impl Fn(f64) -> (f64, f64)) -> Vec<f64> {
        let mut dofs = vec![0.0; self.total_dofs()];
        for (i, &x) in self.mesh.nodes().iter().enumerate() {
            let (v, s) = f(x);
            dofs[Self::value_dof(i)] = v;
            dofs[Self::slope_dof(i)] = s;
        }
        for &c in &self.constrained {
            dofs[c] = 0.0;
        }
        dofs
    }

    /// `d`-th derivative of the represented function at `x`. At interior nodes
    /// the element on the right is used.
    pub fn evaluate(&self, dofs: &[f64], x: f64, d: usize) -> Result<f64> {
        let e = self.mesh.locate(x);
        self.evaluate_on(dofs, e, x, d)
    }

    /// One-sided evaluation at `x`; matters only for `d >= 2` at nodes.
    pub fn evaluate_side(&self, dofs: &[f64], x: f64, d: usize, side: Side) -> Result<f64> {
        let mut e = self.mesh.locate(x);
        if side == Side::Left && e > 0 && self.mesh.nodes()[e] == x {
            e -= 1;
        }
        self.evaluate_on(dofs, e, x, d)
    }

    /// Evaluation using the shape functions of element `e`.
    pub fn evaluate_on(&self, dofs: &[f64], e: usize, x: f64, d: usize) -> Result<f64> {
        if d > 3 {
            return Err(Error::invalid(format!("derivative order {d} exceeds 3")));
        }
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::invalid(format!("x = {x} outside [0, 1]")));
        }
        if dofs.len() != self.total_dofs() {
            return Err(Error::invalid(format!(
                "expected {} dofs, got {}",
                self.total_dofs(),
                dofs.len()
            )));
        }
        let (l, r) = self.mesh.element(e);
        let phi = shape(l, r, x, d);
        Ok(Self::element_dofs(e)
            .iter()
            .zip(phi)
            .map(|(&i, p)| dofs[i] * p)
            .sum())
    }
}

pub fn evaluate(dofs: &[f64], map: &DofMap, x: f64, d: usize) -> Result<f64> {
    map.evaluate(dofs, x, d)
}
