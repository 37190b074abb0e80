//! C1 plate element of degree 2 and the linear plate-pressure element on
//! polygons of the interface mesh.
//!
//! Plate DOFs per vertex `z` are `w(z)`, `h_z ∂x w(z)`, `h_z ∂y w(z)`, with
//! `h_z` the mean length of the edges meeting at `z`. Along an edge the trace
//! is the cubic Hermite interpolant of the endpoint values and tangential
//! derivatives, and the normal derivative is linear.

use nalgebra::{DMatrix, DVector};

use crate::basis::MonomialBasis;
use crate::error::{Result, VemError};
use crate::geom::Point;
use crate::linalg;
use crate::mesh::SurfaceMesh2;
use crate::params::ModelParams;
use crate::quadrature::{self, QuadRule, DEFAULT_EXACTNESS};

/// Plate function returning a value and its gradient.
pub type ValueAndGradient<'a> = dyn Fn(&[f64; 2]) -> (f64, [f64; 2]) + 'a;

const DEGREE: usize = 2;

/// Characteristic length of each surface vertex: mean incident edge length.
pub fn vertex_lengths(surface: &SurfaceMesh2) -> Vec<f64> {
    let mut sum = vec![0.0; surface.vertices.len()];
    let mut count = vec![0usize; surface.vertices.len()];
    for (e, [a, b]) in surface.edges.iter().enumerate() {
        let l = surface.edge_length(e);
        sum[*a] += l;
        sum[*b] += l;
        count[*a] += 1;
        count[*b] += 1;
    }
    sum.iter().zip(&count).map(|(s, &c)| s / c.max(1) as f64).collect()
}

/// Shared polygon geometry.
#[derive(Debug, Clone)]
pub struct PolygonGeometry {
    pub polygon: usize,
    pub vertices: Vec<[f64; 2]>,
    pub global_vertices: Vec<usize>,
    pub area: f64,
    pub centroid: [f64; 2],
    pub h: f64,
    pub quad: QuadRule,
}

impl PolygonGeometry {
    pub fn new(surface: &SurfaceMesh2, p: usize) -> Result<Self> {
        let pts = surface.polygon_points(p);
        let quad = quadrature::quad_polygon(&pts, DEFAULT_EXACTNESS)?;
        let area = quad.measure();
        let cx = quad.integrate(|x| x[0]) / area;
        let cy = quad.integrate(|x| x[1]) / area;
        Ok(Self {
            polygon: p,
            vertices: surface.polygons[p].iter().map(|&v| surface.vertices[v]).collect(),
            global_vertices: surface.polygons[p].clone(),
            area,
            centroid: [cx, cy],
            h: crate::geom::diameter(&pts),
            quad,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Edge `i` from vertex `i` to `i + 1`: (length, unit tangent, outward unit normal).
    pub fn edge(&self, i: usize) -> (f64, [f64; 2], [f64; 2]) {
        let a = self.vertices[i];
        let b = self.vertices[(i + 1) % self.n_vertices()];
        let d = [b[0] - a[0], b[1] - a[1]];
        let l = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let t = [d[0] / l, d[1] / l];
        (l, t, [t[1], -t[0]])
    }

    pub fn basis(&self, degree: usize) -> MonomialBasis {
        MonomialBasis::new(2, &self.centroid, self.h, degree)
    }

    fn mass(&self, b: &MonomialBasis) -> DMatrix<f64> {
        let n = b.len();
        let mut m = DMatrix::zeros(n, n);
        for (p, w) in self.quad.iter() {
            let v = b.eval(p);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        m
    }
}

fn gauss3() -> [(f64, f64); 3] {
    let r = (0.6f64).sqrt();
    [
        (0.5 * (1.0 - r), 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 * (1.0 + r), 5.0 / 18.0),
    ]
}

/// C1 plate element.
#[derive(Debug, Clone)]
pub struct PlateElement {
    pub geo: PolygonGeometry,
    /// `h_z` per local vertex.
    pub hz: Vec<f64>,
    /// Coefficients over `M_2(F)` of the `H^2` projection (equal to the `L^2` one).
    pub pi_nabla2: DMatrix<f64>,
    /// Coefficients over `M_1(F)` of the `L^2` projection of the gradient, rows `c * 3 + b`.
    pub pi_grad: DMatrix<f64>,
    /// Constant projection of the Hessian, rows `2 * i + j`.
    pub pi_hess: DMatrix<f64>,
    /// DOFs of the monomials `M_2(F)`.
    pub dof_matrix: DMatrix<f64>,
    pub mass2: DMatrix<f64>,
}

impl PlateElement {
    pub fn n_dofs(&self) -> usize {
        3 * self.geo.n_vertices()
    }

    /// Global plate DOF indices (three per surface vertex).
    pub fn global_dofs(&self) -> Vec<usize> {
        self.geo
            .global_vertices
            .iter()
            .flat_map(|&v| (0..3).map(move |j| 3 * v + j))
            .collect()
    }

    /// DOFs of a function given by value and gradient.
    pub fn dofs_of(&self, f: &ValueAndGradient<'_>) -> DVector<f64> {
        let mut d = DVector::zeros(self.n_dofs());
        for (i, z) in self.geo.vertices.iter().enumerate() {
            let (v, g) = f(z);
            d[3 * i] = v;
            d[3 * i + 1] = self.hz[i] * g[0];
            d[3 * i + 2] = self.hz[i] * g[1];
        }
        d
    }

    /// Value and gradient at vertex `i` from local DOFs `d` (a column of coefficients).
    fn vertex_data(&self, i: usize) -> [(usize, f64, [f64; 2]); 3] {
        // DOF index, value weight, gradient weight
        let h = self.hz[i];
        [
            (3 * i, 1.0, [0.0, 0.0]),
            (3 * i + 1, 0.0, [1.0 / h, 0.0]),
            (3 * i + 2, 0.0, [0.0, 1.0 / h]),
        ]
    }

    /// Row vector (over local DOFs) of the edge trace at parameter `s ∈ [0, 1]` of edge `e`.
    pub fn trace_row(&self, e: usize, s: f64) -> DVector<f64> {
        let nv = self.geo.n_vertices();
        let (l, t, _) = self.geo.edge(e);
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        let mut r = DVector::zeros(self.n_dofs());
        for (vi, hv, ht) in [(e, h00, h10), ((e + 1) % nv, h01, h11)] {
            for (dof, val, grad) in self.vertex_data(vi) {
                r[dof] += hv * val + ht * l * (grad[0] * t[0] + grad[1] * t[1]);
            }
        }
        r
    }

    /// Row vector of the normal derivative at the endpoints of edge `e`.
    fn normal_rows(&self, e: usize) -> (DVector<f64>, DVector<f64>) {
        let nv = self.geo.n_vertices();
        let (_, _, n) = self.geo.edge(e);
        let mut ra = DVector::zeros(self.n_dofs());
        let mut rb = DVector::zeros(self.n_dofs());
        for (vi, r) in [(e, &mut ra), ((e + 1) % nv, &mut rb)] {
            for (dof, _, grad) in self.vertex_data(vi) {
                r[dof] += grad[0] * n[0] + grad[1] * n[1];
            }
        }
        (ra, rb)
    }

    /// Local `c_2h`.
    pub fn local_c2(&self, p: &ModelParams) -> DMatrix<f64> {
        let (s0, s2) = self.stabilization_matrices(p);
        let mass = self.pi_nabla2.transpose() * &self.mass2 * &self.pi_nabla2 * (p.rho_p / p.tau.powi(3));
        let hess = self.pi_hess.transpose() * &self.pi_hess * (p.d / p.tau * self.geo.area);
        let mut c = mass + s0 + hess + s2;
        linalg::symmetrize(&mut c);
        c
    }

    /// `(S3^0, S3^hess)` composed with `(I - Π)`.
    pub fn stabilization_matrices(&self, p: &ModelParams) -> (DMatrix<f64>, DMatrix<f64>) {
        let c = linalg::complement(&self.dof_matrix, &self.pi_nabla2);
        let ctc = c.transpose() * &c;
        let h = self.geo.h;
        (&ctc * (p.rho_p / p.tau.powi(3) * h * h), &ctc * (p.d / p.tau / (h * h)))
    }

    /// `(1/τ)(m, Π0 ζ)_F`.
    pub fn local_rhs_m(&self, m: &dyn Fn(&[f64; 2]) -> f64, p: &ModelParams) -> DVector<f64> {
        let b = self.geo.basis(2);
        let mut mm = DVector::zeros(6);
        for (x, w) in self.geo.quad.iter() {
            let v = m(&[x[0], x[1]]);
            let e = b.eval(x);
            for i in 0..6 {
                mm[i] += w * v * e[i];
            }
        }
        self.pi_nabla2.transpose() * mm / p.tau
    }
}

/// Builds the plate element on polygon `p`; `hz` is indexed by surface vertex.
pub fn build_plate_element(surface: &SurfaceMesh2, p: usize, hz: &[f64], k: usize) -> Result<PlateElement> {
    if k != DEGREE {
        return Err(VemError::Element(format!("plate element only at degree 2, got {k}")));
    }
    let geo = PolygonGeometry::new(surface, p)?;
    let hz_local: Vec<f64> = geo.global_vertices.iter().map(|&v| hz[v]).collect();
    let b2 = geo.basis(2);
    let b1 = geo.basis(1);
    let mass2 = geo.mass(&b2);
    let nv = geo.n_vertices();
    let mut el = PlateElement {
        geo,
        hz: hz_local,
        pi_nabla2: DMatrix::zeros(0, 0),
        pi_grad: DMatrix::zeros(0, 0),
        pi_hess: DMatrix::zeros(0, 0),
        dof_matrix: DMatrix::zeros(0, 0),
        mass2,
    };
    let n = el.n_dofs();

    // ∫_F ∇²w = Σ_e [(w(b) - w(a)) t ⊗ n + (L/2)(∂n w(a) + ∂n w(b)) n ⊗ n]
    let mut hint = DMatrix::<f64>::zeros(4, n);
    for e in 0..nv {
        let (l, t, nn) = el.geo.edge(e);
        let wa = el.trace_row(e, 0.0);
        let wb = el.trace_row(e, 1.0);
        let (na, nb) = el.normal_rows(e);
        let dw = wb - wa;
        let dn = (na + nb) * (0.5 * l);
        for i in 0..2 {
            for j in 0..2 {
                let mut row = hint.row_mut(2 * i + j);
                row += (&dw * (t[i] * nn[j]) + &dn * (nn[i] * nn[j])).transpose();
            }
        }
    }
    let pi_hess = &hint / el.geo.area;

    // H2 projection: Hessian rows from ∫ ∇²w : H_i, P1 part from vertex averages
    let hs = b2.hessian(&el.geo.centroid);
    let mut g = DMatrix::zeros(6, 6);
    let mut rhs = DMatrix::zeros(6, n);
    for i in 3..6 {
        for j in 3..6 {
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    s += hs[i][a][b] * hs[j][a][b];
                }
            }
            g[(i, j)] = s * el.geo.area;
        }
        let mut row = DVector::zeros(n);
        for a in 0..2 {
            for b in 0..2 {
                row += hint.row(2 * a + b).transpose() * hs[i][a][b];
            }
        }
        rhs.row_mut(i).copy_from(&row.transpose());
    }
    for (vi, z) in el.geo.vertices.clone().iter().enumerate() {
        let v = b2.eval(z);
        let gr = b2.grad(z);
        for j in 0..6 {
            g[(0, j)] += v[j] / nv as f64;
            g[(1, j)] += gr[j][0] / nv as f64;
            g[(2, j)] += gr[j][1] / nv as f64;
        }
        for (dof, val, grad) in el.vertex_data(vi) {
            rhs[(0, dof)] += val / nv as f64;
            rhs[(1, dof)] += grad[0] / nv as f64;
            rhs[(2, dof)] += grad[1] / nv as f64;
        }
    }
    let pi_nabla2 = linalg::solve(&g, &rhs, "plate H2 projection")?;

    // gradient L2 projection: ∫ ∂_c w m_b = -∫ w ∂_c m_b + ∫_∂F w m_b n_c
    let mass1 = el.geo.mass(&b1);
    let int_w = {
        let ints: Vec<f64> = (0..6).map(|j| el.geo.quad.integrate(|x| b2.eval(x)[j])).collect();
        let mut r = DVector::zeros(n);
        for j in 0..6 {
            r += pi_nabla2.row(j).transpose() * ints[j];
        }
        r
    };
    let mut gm = DMatrix::<f64>::zeros(6, n);
    for c in 0..2 {
        let row = gm.row(c * 3 + 1 + c) - int_w.transpose() / el.geo.h;
        gm.row_mut(c * 3 + 1 + c).copy_from(&row);
    }
    for e in 0..nv {
        let (l, _, nn) = el.geo.edge(e);
        let a = el.geo.vertices[e];
        let b = el.geo.vertices[(e + 1) % nv];
        for (s, w) in gauss3() {
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let m = b1.eval(&x);
            let tr = el.trace_row(e, s);
            for c in 0..2 {
                for bb in 0..3 {
                    let mut row = gm.row_mut(c * 3 + bb);
                    row += tr.transpose() * (w * l * m[bb] * nn[c]);
                }
            }
        }
    }
    let mut bd = DMatrix::zeros(6, 6);
    bd.view_mut((0, 0), (3, 3)).copy_from(&mass1);
    bd.view_mut((3, 3), (3, 3)).copy_from(&mass1);
    let pi_grad = linalg::solve(&bd, &gm, "plate gradient projection")?;

    el.pi_nabla2 = pi_nabla2;
    el.pi_grad = pi_grad;
    el.pi_hess = pi_hess;
    let mut dm = DMatrix::zeros(n, 6);
    for j in 0..6 {
        let d = el.dofs_of(&|x| {
            let g = b2.grad(x)[j];
            (b2.eval(x)[j], [g[0], g[1]])
        });
        dm.set_column(j, &d);
    }
    el.dof_matrix = dm;
    Ok(el)
}

/// Linear plate-pressure element (vertex values).
#[derive(Debug, Clone)]
pub struct PlatePressureElement {
    pub geo: PolygonGeometry,
    /// Coefficients over `M_1(F)` of the `H^1` projection (equal to the `L^2` one).
    pub pi_nabla: DMatrix<f64>,
    /// Constant projection of the gradient (2 rows).
    pub pi_grad: DMatrix<f64>,
    pub dof_matrix: DMatrix<f64>,
    pub mass1: DMatrix<f64>,
}

impl PlatePressureElement {
    pub fn n_dofs(&self) -> usize {
        self.geo.n_vertices()
    }

    pub fn global_dofs(&self) -> Vec<usize> {
        self.geo.global_vertices.clone()
    }

    pub fn dofs_of(&self, f: &dyn Fn(&[f64; 2]) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.n_dofs(), self.geo.vertices.iter().map(f))
    }

    /// `(S2^0, S2^grad)` composed with `(I - Π)`.
    pub fn stabilization_matrices(&self, p: &ModelParams) -> (DMatrix<f64>, DMatrix<f64>) {
        let c = linalg::complement(&self.dof_matrix, &self.pi_nabla);
        let ctc = c.transpose() * &c;
        let h = self.geo.h;
        (&ctc * (p.c0 / p.tau * h * h), &ctc * p.kappa)
    }

    /// Local `c_1h` on the plate pressure.
    pub fn local_c1(&self, p: &ModelParams) -> DMatrix<f64> {
        let (s0, s1) = self.stabilization_matrices(p);
        let mass = self.pi_nabla.transpose() * &self.mass1 * &self.pi_nabla * (p.c0 / p.tau);
        let grad = self.pi_grad.transpose() * &self.pi_grad * (p.kappa * self.geo.area);
        let mut c = mass + s0 + grad + s1;
        linalg::symmetrize(&mut c);
        c
    }

    /// `-(g, Π0 ψ)_F`.
    pub fn local_rhs_g(&self, g: &dyn Fn(&[f64; 2]) -> f64) -> DVector<f64> {
        let b = self.geo.basis(1);
        let mut gm = DVector::zeros(3);
        for (x, w) in self.geo.quad.iter() {
            let v = g(&[x[0], x[1]]);
            let e = b.eval(x);
            for i in 0..3 {
                gm[i] += w * v * e[i];
            }
        }
        -(self.pi_nabla.transpose() * gm)
    }
}

pub fn build_plate_pressure_element(surface: &SurfaceMesh2, p: usize, l: usize) -> Result<PlatePressureElement> {
    if l != DEGREE - 1 {
        return Err(VemError::Element(format!(
            "plate pressure element only at degree 1, got {l}"
        )));
    }
    let geo = PolygonGeometry::new(surface, p)?;
    let b1 = geo.basis(1);
    let nv = geo.n_vertices();
    let mut g = DMatrix::zeros(3, 3);
    let mut rhs = DMatrix::zeros(3, nv);
    let grads = b1.grad(&geo.centroid);
    for i in 1..3 {
        for j in 1..3 {
            g[(i, j)] = geo.area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
        }
    }
    let mut pi_grad = DMatrix::zeros(2, nv);
    for e in 0..nv {
        let (l, _, nn) = geo.edge(e);
        let a = geo.vertices[e];
        let b = geo.vertices[(e + 1) % nv];
        let (va, vb) = (b1.eval(&a), b1.eval(&b));
        for j in 0..3 {
            g[(0, j)] += 0.5 * l * (va[j] + vb[j]);
        }
        for (vi, wgt) in [(e, 0.5 * l), ((e + 1) % nv, 0.5 * l)] {
            rhs[(0, vi)] += wgt;
            for i in 1..3 {
                rhs[(i, vi)] += wgt * (grads[i][0] * nn[0] + grads[i][1] * nn[1]);
            }
            pi_grad[(0, vi)] += wgt * nn[0] / geo.area;
            pi_grad[(1, vi)] += wgt * nn[1] / geo.area;
        }
    }
    let pi_nabla = linalg::solve(&g, &rhs, "plate pressure H1 projection")?;
    let mass1 = geo.mass(&b1);
    let mut dm = DMatrix::zeros(nv, 3);
    for (i, z) in geo.vertices.iter().enumerate() {
        let v = b1.eval(z);
        for j in 0..3 {
            dm[(i, j)] = v[j];
        }
    }
    Ok(PlatePressureElement {
        geo,
        pi_nabla,
        pi_grad,
        dof_matrix: dm,
        mass1,
    })
}

/// Local `(b_2h, b_3h)` as (pressure DOFs x plate DOFs) matrices.
pub fn local_b2_b3(pel: &PlatePressureElement, el: &PlateElement, p: &ModelParams) -> (DMatrix<f64>, DMatrix<f64>) {
    // ∫_F Π0(∇ζ) per component
    let b1 = el.geo.basis(1);
    let ints: Vec<f64> = (0..3).map(|b| el.geo.quad.integrate(|x| b1.eval(x)[b])).collect();
    let mut int_grad = DMatrix::zeros(2, el.n_dofs());
    for c in 0..2 {
        for b in 0..3 {
            let row = int_grad.row(c) + el.pi_grad.row(c * 3 + b) * ints[b];
            int_grad.row_mut(c).copy_from(&row);
        }
    }
    let b2 = pel.pi_grad.transpose() * int_grad * (-p.alpha / p.tau);
    // cross mass between M_1 and M_2
    let bq = el.geo.basis(2);
    let mut m12 = DMatrix::zeros(3, 6);
    for (x, w) in el.geo.quad.iter() {
        let u = b1.eval(x);
        let v = bq.eval(x);
        for i in 0..3 {
            for j in 0..6 {
                m12[(i, j)] += w * u[i] * v[j];
            }
        }
    }
    let b3 = pel.pi_nabla.transpose() * m12 * &el.pi_nabla2 * (-1.0 / p.tau);
    (b2, b3)
}

/// Evaluates a scalar polynomial in `basis` with coefficients `c` at a plate point.
pub fn eval_poly(basis: &MonomialBasis, c: &[f64], x: &[f64; 2]) -> f64 {
    basis.eval(x).iter().zip(c).map(|(a, b)| a * b).sum()
}

/// Lifts a plate point to `[x, y, 0]`.
pub fn lift(x: &[f64; 2]) -> Point {
    [x[0], x[1], 0.0]
}
