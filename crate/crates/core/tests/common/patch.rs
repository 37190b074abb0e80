//! Polynomial patch checks shared by the patch suite and the acceptance run.

use biotvem::geom;
use biotvem::linalg::max_abs;
use biotvem::mesh::{import_mesh, PlaneFrame, PolyMesh3, SurfaceMesh2};
use biotvem::plate::{build_plate_element, build_plate_pressure_element, vertex_lengths};
use biotvem::stokes::build_all;
use biotvem::ModelParams;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Worst deviations found, each already normalized.
#[derive(Debug, Clone, Copy, Default)]
pub struct PatchReport {
    /// Projector output minus the reproduced polynomial coefficients.
    pub projector: f64,
    /// `|S d|` over polynomial DOF vectors `d`, relative to `max |S|`.
    pub stabilizer: f64,
    /// Discrete minus exact bilinear form on random polynomial pairs, relative.
    pub consistency: f64,
    pub elements: usize,
}

impl PatchReport {
    fn projector(&mut self, v: f64) {
        self.projector = self.projector.max(v);
    }
    fn stabilizer(&mut self, s: &DMatrix<f64>, d: &DMatrix<f64>) {
        self.stabilizer = self.stabilizer.max(max_abs(&(s * d)) / max_abs(s).max(1.0));
    }
    /// Compares `aᵀ G b` for random coefficient pairs.
    fn consistency(&mut self, got: &DMatrix<f64>, exact: &DMatrix<f64>, rng: &mut ChaCha8Rng) {
        let scale = max_abs(exact).max(1.0);
        for _ in 0..20 {
            let a = DVector::from_fn(got.nrows(), |_, _| rng.gen_range(-1.0..1.0));
            let b = DVector::from_fn(got.nrows(), |_, _| rng.gen_range(-1.0..1.0));
            let d = a.dot(&((got - exact) * &b)).abs();
            self.consistency = self.consistency.max(d / (scale * a.norm() * b.norm()));
        }
    }
}

pub fn params() -> ModelParams {
    ModelParams {
        rho_f: 1.7,
        mu: 0.4,
        gamma: 1.3,
        rho_p: 0.8,
        d: 2.2,
        alpha: 0.6,
        c0: 0.5,
        kappa: 1.4,
        tau: 0.3,
    }
}

fn identity_error(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - DMatrix::identity(m.nrows(), m.ncols())))
}

pub fn stokes_patch(mesh: &PolyMesh3, p: &ModelParams, r: &mut PatchReport, rng: &mut ChaCha8Rng) {
    let (faces, cells) = build_all(mesh).unwrap();
    for fe in &faces {
        let dofs: Vec<DVector<f64>> = (0..6).map(|i| fe.dofs_of(|x| fe.monomials(x)[i])).collect();
        let d = DMatrix::from_columns(&dofs);
        r.projector(identity_error(&(&fe.pi_nabla * &d)));
        r.projector(identity_error(&(&fe.pi0_2 * &d)));
        r.projector(identity_error(&(&fe.pi0_3 * &d).rows(0, 6).into_owned()));
        r.projector(max_abs(&(&fe.pi0_3 * &d).rows(6, 4).into_owned()));
        r.elements += 1;
    }
    for el in &cells {
        let d = &el.dof_matrix;
        r.projector(identity_error(&(&el.pi_nabla * d)));
        r.projector(identity_error(&(&el.pi0 * d)));
        let (s0, s1) = el.stabilization_matrices(p);
        r.stabilizer(&s0, d);
        r.stabilizer(&s1, d);
        let got = d.transpose() * el.local_stokes_a(p) * d;
        let b2 = el.basis.with_degree(2);
        let mut exact = DMatrix::<f64>::zeros(30, 30);
        for (x, w) in el.quad.iter() {
            let v = b2.eval(x);
            let g = b2.grad(x);
            for c in 0..3 {
                for i in 0..10 {
                    for j in 0..10 {
                        exact[(c * 10 + i, c * 10 + j)] +=
                            w * (p.rho_f / p.tau * v[i] * v[j] + p.mu * geom::dot(&g[i], &g[j]));
                    }
                }
            }
        }
        r.consistency(&got, &exact, rng);
        r.elements += 1;
    }
}

pub fn plate_patch(s: &SurfaceMesh2, p: &ModelParams, r: &mut PatchReport, rng: &mut ChaCha8Rng) {
    let hz = vertex_lengths(s);
    for poly in 0..s.polygons.len() {
        let el = build_plate_element(s, poly, &hz, 2).unwrap();
        let d = &el.dof_matrix;
        r.projector(identity_error(&(&el.pi_nabla2 * d)));
        let (s0, s3) = el.stabilization_matrices(p);
        r.stabilizer(&s0, d);
        r.stabilizer(&s3, d);
        let b = el.geo.basis(2);
        let hs = b.hessian(&el.geo.centroid);
        let mut exact = DMatrix::<f64>::zeros(6, 6);
        for (x, w) in el.geo.quad.iter() {
            let v = b.eval(x);
            for i in 0..6 {
                for j in 0..6 {
                    let hh: f64 = hs[i]
                        .iter()
                        .flatten()
                        .zip(hs[j].iter().flatten())
                        .map(|(a, b)| a * b)
                        .sum();
                    exact[(i, j)] += w * (p.rho_p / p.tau.powi(3) * v[i] * v[j] + p.d / p.tau * hh);
                }
            }
        }
        r.consistency(&(d.transpose() * el.local_c2(p) * d), &exact, rng);

        let pel = build_plate_pressure_element(s, poly, 1).unwrap();
        let d = &pel.dof_matrix;
        r.projector(identity_error(&(&pel.pi_nabla * d)));
        let (s0, s1) = pel.stabilization_matrices(p);
        r.stabilizer(&s0, d);
        r.stabilizer(&s1, d);
        let b = pel.geo.basis(1);
        let mut exact = DMatrix::<f64>::zeros(3, 3);
        for (x, w) in pel.geo.quad.iter() {
            let v = b.eval(x);
            let g = b.grad(x);
            for i in 0..3 {
                for j in 0..3 {
                    exact[(i, j)] +=
                        w * (p.c0 / p.tau * v[i] * v[j] + p.kappa * (g[i][0] * g[j][0] + g[i][1] * g[j][1]));
                }
            }
        }
        r.consistency(&(d.transpose() * pel.local_c1(p) * d), &exact, rng);
        r.elements += 2;
    }
}

/// Regular hexagon plus an irregular pentagon sharing no vertices.
pub fn polygon_surface() -> SurfaceMesh2 {
    let mut vertices: Vec<[f64; 2]> = (0..6)
        .map(|i| {
            let t = std::f64::consts::PI * i as f64 / 3.0;
            [0.3 + 0.5 * t.cos(), -0.1 + 0.5 * t.sin()]
        })
        .collect();
    vertices.extend([[2.0, 0.0], [2.9, 0.1], [3.1, 0.8], [2.4, 1.3], [1.9, 0.7]]);
    let polygons = vec![(0..6).collect::<Vec<_>>(), (6..11).collect()];
    let mut edges = Vec::new();
    let mut polygon_edges = Vec::new();
    for poly in &polygons {
        let n = poly.len();
        let mut pe = Vec::new();
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            pe.push(edges.len());
            edges.push([a.min(b), a.max(b)]);
        }
        polygon_edges.push(pe);
    }
    let ne = edges.len();
    SurfaceMesh2 {
        frame: PlaneFrame {
            origin: [0.0; 3],
            e1: [1.0, 0.0, 0.0],
            e2: [0.0, 1.0, 0.0],
            normal: [0.0, 0.0, 1.0],
        },
        vertices,
        polygons,
        polygon_edges,
        edges,
        boundary_edge: vec![true; ne],
        boundary_vertex: vec![true; 11],
    }
}

/// Runs every element type on cube cells, a dodecahedron, squares and general polygons.
pub fn patch_report() -> PatchReport {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut r = PatchReport::default();
    stokes_patch(&super::cube(2), &p, &mut r, &mut rng);
    let dodeca = import_mesh(std::io::Cursor::new(super::dodecahedron_mesh_text(
        [0.5, 0.4, 0.3],
        0.25,
    )))
    .unwrap();
    stokes_patch(&dodeca, &p, &mut r, &mut rng);
    let (surface, _) = biotvem::mesh::extract_surface(&super::cube(3)).unwrap();
    plate_patch(&surface, &p, &mut r, &mut rng);
    plate_patch(&polygon_surface(), &p, &mut r, &mut rng);
    r
}
