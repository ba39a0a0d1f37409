//! The projective plane embedded as `{ n nᵀ - I/3 }` in symmetric traceless
//! 3×3 matrices.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};

const DEGENERACY_GAP: f64 = 1e-10;

/// A symmetric traceless 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QTensor(Matrix3<f64>);

impl QTensor {
    /// `n nᵀ - I/3` for a unit vector `n`.
    pub fn from_director(n: &[f64]) -> Result<Self> {
        if n.len() != 3 {
            return Err(Error::Invalid("a director lives in R^3".into()));
        }
        let r = super::norm(n);
        if !(r >= 1e-6) {
            return Err(Error::Normalization { norm: r });
        }
        let v = Vector3::new(n[0], n[1], n[2]) / r;
        Ok(QTensor(v * v.transpose() - Matrix3::identity() / 3.0))
    }

    /// Wraps a matrix after checking symmetry and zero trace to 1e-12.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if (m - m.transpose()).abs().max() > 1e-12 || m.trace().abs() > 1e-12 {
            return Err(Error::Invalid("Q-tensor must be symmetric and traceless".into()));
        }
        Ok(QTensor(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Squared Frobenius distance to the embedded projective plane.
    pub fn manifold_distance_sq(&self) -> f64 {
        let p = project_to_target(&self.0).expect("symmetric by construction");
        (self.0 - p.q.0).norm_squared()
    }

    pub fn is_on_manifold(&self, tol: f64) -> bool {
        self.manifold_distance_sq().sqrt() <= tol
    }
}

/// Result of the nearest-point projection onto the embedded projective plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub q: QTensor,
    /// Unit eigenvector of the top eigenvalue, first nonzero component positive.
    pub director: Vector3<f64>,
    /// Top eigenvalue not separated from the next one by more than 1e-10.
    pub ambiguous: bool,
}

/// Nearest point `n nᵀ - I/3` to a symmetric matrix, `n` a top eigenvector.
pub fn project_to_target(m: &Matrix3<f64>) -> Result<Projection> {
    if (m - m.transpose()).abs().max() > 1e-9 {
        return Err(Error::Invalid("projection input must be symmetric".into()));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]];
    let ambiguous = top - eig.eigenvalues[order[1]] < DEGENERACY_GAP;
    let mut n: Vector3<f64> = if ambiguous {
        // Deterministic pick inside the top eigenspace: project the standard
        // basis in order and keep the first well-conditioned image.
        let basis: Vec<Vector3<f64>> = order
            .iter()
            .filter(|&&i| top - eig.eigenvalues[i] < DEGENERACY_GAP)
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        let mut chosen = Vector3::x();
        for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
            let proj: Vector3<f64> = basis.iter().map(|b| b * b.dot(&axis)).sum();
            if proj.norm_squared() >= 1.0 / 3.0 {
                chosen = proj.normalize();
                break;
            }
        }
        chosen
    } else {
        eig.eigenvectors.column(order[0]).normalize()
    };
    if let Some(first) = n.iter().find(|c| c.abs() > 1e-12) {
        if *first < 0.0 {
            n = -n;
        }
    }
    let q = QTensor(n * n.transpose() - Matrix3::identity() / 3.0);
    Ok(Projection { q, director: n, ambiguous })
}
