use nalgebra::{DMatrix, DVector};

use crate::dcsbm::Matrix;

/// Left eigenvector of a row-stochastic matrix for eigenvalue 1, normalized
/// to sum to one. `None` when the chain has no unique stationary law.
pub fn stationary_left(p: &Matrix) -> Option<Vec<f64>> {
    let k = p.len();
    if k == 0 {
        return None;
    }
    // Rows 0..k-1 of (Pᵀ − I)x = 0, last row replaced by Σx = 1.
    let mut a = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[k - 1] = 1.0;
    let x = a.lu().solve(&rhs)?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}
