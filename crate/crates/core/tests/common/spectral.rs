//! Eigenvalue and block-structure checks of the assembled operator.

use biotvem::coupling::{assemble, build_layout, BcSpec, Discretization, Loads};
use biotvem::plate::local_b2_b3;
use biotvem::sparse::CsrMatrix;
use biotvem::ModelParams;
use nalgebra::DMatrix;

#[derive(Debug, Clone, Copy)]
pub struct SpectralReport {
    /// Smallest eigenvalue of the velocity block over free DOFs.
    pub a_min: f64,
    /// Smallest eigenvalue of the plate block over free DOFs.
    pub c2_min: f64,
    /// Smallest eigenvalue of the plate-pressure block, relative to its largest.
    pub c1_min_rel: f64,
    /// Largest violation of the block symmetry and skew relations.
    pub adjoint: f64,
}

fn eig_range(m: &DMatrix<f64>) -> (f64, f64) {
    let e = m.clone().symmetric_eigenvalues();
    (e.min(), e.max())
}

fn dense(raw: &CsrMatrix, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    raw.select(rows, cols).to_dense()
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

pub fn spectral_report(disc: &Discretization, p: &ModelParams) -> SpectralReport {
    let layout = build_layout(disc, &BcSpec::example1()).unwrap();
    let sys = assemble(disc, p, &Loads::zero(), &layout).unwrap();
    let raw = &sys.raw;
    let free = |r: std::ops::Range<usize>| -> Vec<usize> { r.filter(|&i| !layout.constrained[i]).collect() };
    let all = |r: std::ops::Range<usize>| -> Vec<usize> { r.collect() };
    let (u, pr, phi, w) = (
        all(layout.u_range()),
        all(layout.p_range()),
        all(layout.phi_range()),
        all(layout.w_range()),
    );

    let a = dense(raw, &free(layout.u_range()), &free(layout.u_range()));
    let c2 = dense(raw, &free(layout.w_range()), &free(layout.w_range()));
    let c1 = -dense(raw, &phi, &phi);
    let (c1_lo, c1_hi) = eig_range(&c1);

    let mut adjoint: f64 = 0.0;
    for blk in [&u, &w, &phi] {
        let m = dense(raw, blk, blk);
        adjoint = adjoint.max(max_diff(&m, &m.transpose()));
    }
    for (r, c) in [(&pr, &u), (&phi, &u)] {
        adjoint = adjoint.max(max_diff(&dense(raw, r, c), &dense(raw, c, r).transpose()));
    }
    for (r, c) in [(&pr, &pr), (&pr, &phi), (&pr, &w), (&u, &w)] {
        adjoint = adjoint
            .max(dense(raw, r, c).abs().max())
            .max(dense(raw, c, r).abs().max());
    }
    // φ-w coupling: symmetric part b_2, skew part b_3, assembled independently
    let mut b2 = DMatrix::<f64>::zeros(phi.len(), w.len());
    let mut b3 = b2.clone();
    for poly in 0..disc.surface.polygons.len() {
        let (pel, wel) = (&disc.pressures[poly], &disc.plates[poly]);
        let (l2, l3) = local_b2_b3(pel, wel, p);
        for (i, &v) in pel.global_dofs().iter().enumerate() {
            let gi = layout.phi_dof(v) - layout.off_phi();
            for (j, &g) in wel.global_dofs().iter().enumerate() {
                b2[(gi, g)] += l2[(i, j)];
                b3[(gi, g)] += l3[(i, j)];
            }
        }
    }
    let pw = dense(raw, &phi, &w);
    let wp = dense(raw, &w, &phi).transpose();
    let scale = b2.abs().max().max(b3.abs().max());
    adjoint = adjoint.max(max_diff(&(&pw + &wp), &(&b2 * 2.0)) / scale);
    adjoint = adjoint.max(max_diff(&(&pw - &wp), &(&b3 * 2.0)) / scale);

    SpectralReport {
        a_min: eig_range(&a).0,
        c2_min: eig_range(&c2).0,
        c1_min_rel: c1_lo / c1_hi,
        adjoint,
    }
}
