//! Dense helpers shared by the element builders.

use nalgebra::DMatrix;

use crate::error::{Result, VemError};

/// Solves `a x = b` by partial-pivot LU; `what` names the system in errors.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let lu = a.clone().lu();
    let x = lu
        .solve(b)
        .ok_or_else(|| VemError::Element(format!("singular {what} system")))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(VemError::Element(format!("non-finite solution of the {what} system")));
    }
    Ok(x)
}

/// `(I - d p)`: the non-polynomial part operator for a projector `p` with DOF matrix `d`.
pub fn complement(d: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.nrows();
    DMatrix::identity(n, n) - d * p
}

/// Symmetrises in place to remove round-off asymmetry.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
