use serde::Serialize;

use crate::error::{Error, Result};

/// Nodes on `[0, 1]` with the degeneracy point as an exact node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    nodes: Vec<f64>,
    x0_index: usize,
    grading: f64,
}

impl Mesh {
    /// `n` elements split between the two sides of `x0` in proportion to their
    /// lengths. With `grading > 1` the element lengths on each side form a
    /// geometric progression with ratio `1 / grading` toward `x0`.
    pub fn build(n: usize, x0: f64, grading: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("mesh needs at least 2 elements, got {n}")));
        }
        if !(x0 > 0.0 && x0 < 1.0) {
            return Err(Error::invalid(format!(
                "degeneracy point must be interior, got x0 = {x0}"
            )));
        }
        if !(grading >= 1.0) || !grading.is_finite() {
            return Err(Error::invalid(format!("grading must be >= 1, got {grading}")));
        }
        let left = ((n as f64 * x0).round() as usize).clamp(1, n - 1);
        let right = n - left;

        let mut nodes = Vec::with_capacity(n + 1);
        // lengths from 0 toward x0 shrink by 1/grading
        let left_lengths = progression(left, grading, x0);
        let mut acc = 0.0;
        nodes.push(0.0);
        for (k, len) in left_lengths.iter().rev().enumerate() {
            if k + 1 == left {
                break;
            }
            acc += len;
            nodes.push(acc);
        }
        nodes.push(x0);
        let right_lengths = progression(right, grading, 1.0 - x0);
        let mut acc = x0;
        for len in right_lengths.iter().take(right - 1) {
            acc += len;
            nodes.push(acc);
        }
        nodes.push(1.0);

        if grading == 1.0 {
            // exact uniform placement avoids accumulated rounding
            for i in 1..left {
                nodes[i] = x0 * (i as f64 / left as f64);
            }
            for k in 1..right {
                nodes[left + k] = x0 + (1.0 - x0) * (k as f64 / right as f64);
            }
        }

        let mesh = Mesh {
            nodes,
            x0_index: left,
            grading,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Mesh from explicit nodes; `x0` must be one of them.
    pub fn from_nodes(nodes: Vec<f64>, x0: f64) -> Result<Self> {
        let x0_index = nodes
            .iter()
            .position(|&x| x == x0)
            .ok_or_else(|| Error::invalid(format!("x0 = {x0} is not a node")))?;
        let mesh = Mesh {
            nodes,
            x0_index,
            grading: 1.0,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let n = &self.nodes;
        if n.len() < 3 || n[0] != 0.0 || n[n.len() - 1] != 1.0 {
            return Err(Error::invalid("mesh must span [0, 1] with at least 2 elements"));
        }
        if n.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("mesh nodes must be strictly increasing"));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn x0_index(&self) -> usize {
        self.x0_index
    }

    pub fn x0(&self) -> f64 {
        self.nodes[self.x0_index]
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    pub fn elements(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn element(&self, e: usize) -> (f64, f64) {
        (self.nodes[e], self.nodes[e + 1])
    }

    /// Element containing `x`; interior nodes belong to the element on their right
    /// and `x = 1` to the last element.
    pub fn locate(&self, x: f64) -> usize {
        let last = self.element_count() - 1;
        match self.nodes.binary_search_by(|n| n.total_cmp(&x)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    pub fn max_element_length(&self) -> f64 {
        self.elements().map(|(l, r)| r - l).fold(0.0, f64::max)
    }
}

/// `count` lengths summing to `total`, ordered from the `x0` end outward, each
/// `grading` times the previous.
fn progression(count: usize, grading: f64, total: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|k| grading.powi(k as i32)).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|r| r / sum * total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_four_elements() {
        let m = Mesh::build(4, 0.5, 1.0).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(m.x0_index(), 2);
    }

    #[test]
    fn minimal_mesh() {
        let m = Mesh::build(2, 0.3, 1.0).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.3, 1.0]);
    }

    #[test]
    fn graded_lengths_follow_progression() {
        let m = Mesh::build(8, 0.5, 2.0).unwrap();
        let lengths: Vec<f64> = m.elements().map(|(l, r)| r - l).collect();
        let expected = [8.0, 4.0, 2.0, 1.0].map(|w| w / 15.0 * 0.5);
        for (got, want) in lengths[..4].iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
        // mirrored on the right
        for k in 0..4 {
            assert!((lengths[4 + k] - expected[3 - k]).abs() < 1e-15);
        }
        assert_eq!(m.x0(), 0.5);
    }

    #[test]
    fn rejects_boundary_degeneracy() {
        assert!(Mesh::build(4, 0.0, 1.0).is_err());
        assert!(Mesh::build(4, 1.0, 1.0).is_err());
        assert!(Mesh::build(1, 0.5, 1.0).is_err());
        assert!(Mesh::build(4, 0.5, 0.5).is_err());
    }

    #[test]
    fn locate_uses_right_element_at_nodes() {
        let m = Mesh::build(4, 0.5, 1.0).unwrap();
        assert_eq!(m.locate(0.0), 0);
        assert_eq!(m.locate(0.25), 1);
        assert_eq!(m.locate(0.3), 1);
        assert_eq!(m.locate(1.0), 3);
    }
}
