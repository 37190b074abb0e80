//! Discrete inf-sup estimate for the velocity / (pressure, plate pressure) coupling.

use nalgebra::DMatrix;

use crate::coupling::{assemble, build_layout, BcSpec, Discretization, DofLayout, Loads};
use crate::error::{Result, VemError};
use crate::params::ModelParams;
use crate::sparse::{CsrMatrix, SparseLu};

/// Discrete inf-sup constants of `B1` on the unconstrained DOFs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfSup {
    /// Against the full product space (bulk pressure and plate pressure).
    pub total: f64,
    /// Divergence part only (bulk pressure).
    pub pressure: f64,
    /// Interface part only (plate pressure).
    pub plate: f64,
}

/// Smallest generalized singular values `beta^2 = min eig (B V^-1 B^T, Q)`,
/// where `V` is the assembled velocity energy (unit coefficients, so an H1
/// norm plus the slip term on Sigma) and `Q` is blockdiag(pressure mass,
/// unit-coefficient `c1`), i.e. L2 x H1. All forms are the same consistency
/// plus stabilization forms the solver uses.
pub fn inf_sup(disc: &Discretization, bc: &BcSpec) -> Result<InfSup> {
    let params = ModelParams::unity();
    let layout = build_layout(disc, bc)?;
    let sys = assemble(disc, &params, &Loads::zero(), &layout)?;
    let free = layout.free_dofs();
    let pick = |r: std::ops::Range<usize>| -> Vec<usize> { free.iter().copied().filter(|i| r.contains(i)).collect() };
    let u_free = pick(layout.u_range());
    let v = sys.raw.select(&u_free, &u_free);
    let beta = |q_free: &[usize]| {
        let b = sys.raw.select(q_free, &u_free);
        let q = pressure_metric(disc, &sys.raw, &layout, q_free);
        min_generalized_singular(&v, &b, &q)
    };
    Ok(InfSup {
        total: beta(&pick(layout.off_p()..layout.off_w()))?,
        pressure: beta(&pick(layout.p_range()))?,
        plate: beta(&pick(layout.phi_range()))?,
    })
}

/// `sqrt(min eig(B V^-1 B^T, Q))` for sparse SPD `V`, sparse `B` and dense SPD `Q`.
pub fn min_generalized_singular(v: &CsrMatrix, b: &CsrMatrix, q: &DMatrix<f64>) -> Result<f64> {
    let lu = SparseLu::new(v)?;
    let nq = b.nrows;
    let mut s = DMatrix::zeros(nq, nq);
    // columns of V^-1 B^T one at a time; B V^-1 B^T is small and dense
    let mut col = vec![0.0; v.nrows];
    for j in 0..nq {
        col.iter_mut().for_each(|c| *c = 0.0);
        for (i, v) in b.row(j) {
            col[i] = v;
        }
        let y = lu.solve(&col)?;
        let by = b.mul_vec(&y);
        for (i, val) in by.into_iter().enumerate() {
            s[(i, j)] = val;
        }
    }
    let s = 0.5 * (&s + s.transpose());

    let chol = q
        .clone()
        .cholesky()
        .ok_or_else(|| VemError::Solver("pressure metric is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| VemError::Solver("singular pressure metric factor".into()))?;
    let mut g = &linv * s * linv.transpose();
    crate::linalg::symmetrize(&mut g);
    let lam = g.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if !(lam > 0.0) {
        return Err(VemError::Solver(format!(
            "B1 is not surjective (smallest eigenvalue {lam:.3e})"
        )));
    }
    Ok(lam.sqrt())
}

/// `Q` on the free pressure DOFs: cellwise mass for `p`, `c1` for `phi`.
fn pressure_metric(disc: &Discretization, raw: &CsrMatrix, layout: &DofLayout, q_free: &[usize]) -> DMatrix<f64> {
    let n_p = layout.n_p;
    let n_q = n_p + layout.n_phi;
    let mut full = DMatrix::zeros(n_q, n_q);
    for (k, cell) in disc.cells.iter().enumerate() {
        let base = layout.p_dof(k, 0) - layout.off_p();
        let m = &cell.mass1;
        for a in 0..m.nrows() {
            for b in 0..m.ncols() {
                full[(base + a, base + b)] = m[(a, b)];
            }
        }
    }
    // the assembled (phi, phi) block is -c1
    let off = layout.off_p();
    for i in layout.phi_range() {
        for (j, v) in raw.row(i) {
            if layout.phi_range().contains(&j) {
                full[(i - off, j - off)] = -v;
            }
        }
    }
    DMatrix::from_fn(q_free.len(), q_free.len(), |a, b| {
        full[(q_free[a] - off, q_free[b] - off)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cube_mesh, tag_boundaries, TagRule};

    #[test]
    fn inf_sup_positive_on_coarse_cube() {
        let m = tag_boundaries(generate_cube_mesh(2, [0.0; 3], [1.0; 3]).unwrap(), &TagRule::example1()).unwrap();
        let d = Discretization::new(m).unwrap();
        let b = inf_sup(&d, &BcSpec::example1()).unwrap();
        assert!(b.total > 1e-3 && b.total < 10.0, "{b:?}");
        assert!(b.total <= b.pressure.min(b.plate) * (1.0 + 1e-8));
    }
}
