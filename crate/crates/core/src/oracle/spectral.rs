//! Dense generalized eigendecomposition of the pencil `K x = λ M x`.
//!
//! Deliberately independent of the banded solver used for time stepping.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forms::AssembledSystem;

/// Eigenvalues within `-CLIP_TOL · λ_max` of zero are reported as zero.
pub const CLIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending, as computed.
    pub raw_eigenvalues: Vec<f64>,
    /// Ascending, tiny negatives clipped to zero.
    pub eigenvalues: Vec<f64>,
    /// M-orthonormal eigenvectors as columns.
    pub eigenvectors: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub energy: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.raw_eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.raw_eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Number of eigenvalues with `|λ| ≤ rel · λ_max`.
    pub fn kernel_dimension(&self, rel: f64) -> usize {
        let tol = rel * self.max_eigenvalue().abs();
        self.raw_eigenvalues.iter().filter(|l| l.abs() <= tol).count()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    /// `max |VᵀMV - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.mass * &self.eigenvectors;
        let n = g.nrows();
        (g - DMatrix::identity(n, n)).amax()
    }

    /// `max |off-diagonal of VᵀKV| / λ_max`.
    pub fn diagonalization_defect(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.energy * &self.eigenvectors;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                if i != j {
                    worst = worst.max(g[(i, j)].abs());
                }
            }
        }
        worst / self.max_eigenvalue().abs().max(f64::MIN_POSITIVE)
    }
}

/// Full decomposition through the Cholesky factor of `M`.
pub fn dense_decompose(system: &AssembledSystem) -> Result<SpectralDecomposition> {
    decompose_dense(system.mass.to_dense(), system.energy.to_dense())
}

pub fn decompose_dense(mass: DMatrix<f64>, energy: DMatrix<f64>) -> Result<SpectralDecomposition> {
    let n = mass.nrows();
    let chol = mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Factorization { pivot: 0, value: f64::NAN })?;
    let l = chol.l();
    let lt = l.transpose();
    let singular = || Error::Factorization { pivot: 0, value: 0.0 };
    // C = L⁻¹ K L⁻ᵀ via two triangular solves
    let x = l.solve_lower_triangular(&energy).ok_or_else(singular)?;
    let mut c = l.solve_lower_triangular(&x.transpose()).ok_or_else(singular)?;
    c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let raw: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let q = eig.eigenvectors.column(k).into_owned();
        vectors.set_column(col, &lt.solve_upper_triangular(&q).ok_or_else(singular)?);
    }
    let scale = raw.last().copied().unwrap_or(0.0).abs();
    let clipped = raw
        .iter()
        .map(|&l| if l < 0.0 && l >= -CLIP_TOL * scale { 0.0 } else { l })
        .collect();
    Ok(SpectralDecomposition {
        raw_eigenvalues: raw,
        eigenvalues: clipped,
        eigenvectors: vectors,
        mass,
        energy,
    })
}

/// `u(t) = Σ e^{-λ_k t} ⟨u0, v_k⟩_M v_k`.
pub fn exact_propagator(decomp: &SpectralDecomposition, u0: &[f64], t: f64) -> Vec<f64> {
    let u = DVector::from_column_slice(u0);
    let coeffs = decomp.eigenvectors.transpose() * (&decomp.mass * u);
    let damped = DVector::from_iterator(
        coeffs.len(),
        coeffs
            .iter()
            .zip(&decomp.eigenvalues)
            .map(|(c, l)| c * (-l * t).exp()),
    );
    (&decomp.eigenvectors * damped).iter().copied().collect()
}

/// Smallest eigenvalue of the symmetric matrix `A`.
pub fn min_symmetric_eigenvalue(a: DMatrix<f64>) -> f64 {
    let sym = (&a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
