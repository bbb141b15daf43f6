//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

/// Pseudo-inverse of a symmetric matrix. Eigenvalues with magnitude below
/// `rel_cutoff * max|λ|` are treated as zero. Returns the inverse and the
/// number of retained eigenpairs.
pub fn symmetric_pinv(g: &DMatrix<f64>, rel_cutoff: f64) -> (DMatrix<f64>, usize) {
    let n = g.nrows();
    if n == 0 {
        return (DMatrix::zeros(0, 0), 0);
    }
    let eig = g.clone().symmetric_eigen();
    let radius = eig.eigenvalues.amax();
    let mut inv = DMatrix::zeros(n, n);
    let mut rank = 0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if radius == 0.0 || lambda.abs() <= rel_cutoff * radius {
            continue;
        }
        rank += 1;
        let v = eig.eigenvectors.column(k);
        inv += (v * v.transpose()) / lambda;
    }
    (inv, rank)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `v / ‖v‖`. Both projection construction and the Kaczmarz solver
/// normalize rows through this one function so their iterates agree bitwise.
pub fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let nrm = norm_sq(v).sqrt();
    if nrm == 0.0 || !nrm.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| x / nrm).collect())
}

/// Modified Gram–Schmidt. Vectors that fall below `drop_tol` (relative to
/// their original length) after orthogonalization are discarded. Every
/// vector after the first is orthogonalized twice.
pub fn orthonormalize(vectors: &[Vec<f64>], drop_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let orig = norm_sq(v).sqrt();
        if orig == 0.0 {
            continue;
        }
        if basis.is_empty() {
            if let Some(u) = normalize(v) {
                basis.push(u);
            }
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        if norm_sq(&w).sqrt() <= drop_tol * orig {
            continue;
        }
        if let Some(u) = normalize(&w) {
            basis.push(u);
        }
    }
    basis
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_of_singular_matrix() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (p, rank) = symmetric_pinv(&g, 1e-10);
        assert_eq!(rank, 1);
        for v in p.iter() {
            assert!((v - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn gram_schmidt_drops_dependent_vectors() {
        let vs = vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]];
        let b = orthonormalize(&vs, 1e-12);
        assert_eq!(b.len(), 2);
        assert!(dot(&b[0], &b[1]).abs() < 1e-15);
        assert!((norm_sq(&b[1]) - 1.0).abs() < 1e-15);
    }
}
