//! Small dense-matrix helpers shared by the exact modules.

use nalgebra::DMatrix;

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `AB - BA`.
pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Left-to-right Kronecker product of the factors.
pub fn kron_all(factors: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for f in factors {
        out = out.kronecker(f);
    }
    out
}
