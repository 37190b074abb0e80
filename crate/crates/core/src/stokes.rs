//! Enhanced divergence-free velocity space of degree 2 on polyhedra and the
//! piecewise-linear pressure space.
//!
//! Face DOFs (per velocity component) are the vertex values, the edge
//! midpoint values and the face mean. Cell DOFs are the three Cartesian
//! components at vertices and edge midpoints, the face means of `v·n_F`,
//! `v·t1_F`, `v·t2_F` in a per-face frame shared by both neighbours, and the
//! moments `(h_K/|K|) ∫ div v m` against the linear monomials.

use nalgebra::{DMatrix, DVector};

use crate::basis::{gradient_fields, ComplementBasis, MonomialBasis};
use crate::error::{Result, VemError};
use crate::geom::{self, Point};
use crate::linalg;
use crate::mesh::PolyMesh3;
use crate::params::ModelParams;
use crate::quadrature::{self, QuadRule, DEFAULT_EXACTNESS};

const DEGREE: usize = 2;
/// Vector monomials of degree <= 2 in 3D.
pub const N_VEC: usize = 30;
/// Entries of the projected gradient: 3 x 3 components times 4 linear monomials.
pub const N_GRAD: usize = 36;
/// Pressure unknowns per cell.
pub const N_PRESSURE: usize = 4;

fn check_degree(k: usize) -> Result<()> {
    if k != DEGREE {
        return Err(VemError::Element(format!("only degree 2 is implemented, got {k}")));
    }
    Ok(())
}

/// Scalar face space with its `H^1` and `L^2` projectors.
#[derive(Debug, Clone)]
pub struct StokesFaceElement {
    pub face: usize,
    pub center: Point,
    pub h: f64,
    pub area: f64,
    pub normal: Point,
    pub t1: Point,
    pub t2: Point,
    pub vertices: Vec<Point>,
    /// Local 2D monomials up to degree 3 in the `(t1, t2)` frame.
    pub basis: MonomialBasis,
    pub quad: QuadRule,
    /// Monomial coefficients (6) of the `H^1` projection per face DOF.
    pub pi_nabla: DMatrix<f64>,
    /// Monomial coefficients (10) of the degree-3 `L^2` projection.
    pub pi0_3: DMatrix<f64>,
    /// Monomial coefficients (6) of the degree-2 `L^2` projection.
    pub pi0_2: DMatrix<f64>,
}

impl StokesFaceElement {
    pub fn n_dofs(&self) -> usize {
        2 * self.vertices.len() + 1
    }

    pub fn local(&self, p: &Point) -> [f64; 2] {
        let d = geom::sub(p, &self.center);
        [geom::dot(&d, &self.t1), geom::dot(&d, &self.t2)]
    }

    /// Face monomials (degree <= 3) at a point of the face.
    pub fn monomials(&self, p: &Point) -> Vec<f64> {
        self.basis.eval(&self.local(p))
    }

    /// Face DOFs of a scalar function.
    pub fn dofs_of(&self, f: impl Fn(&Point) -> f64) -> DVector<f64> {
        let m = self.vertices.len();
        let mut d = DVector::zeros(self.n_dofs());
        for i in 0..m {
            d[i] = f(&self.vertices[i]);
            let mid = geom::scale(&geom::add(&self.vertices[i], &self.vertices[(i + 1) % m]), 0.5);
            d[m + i] = f(&mid);
        }
        d[2 * m] = self.quad.integrate(&f) / self.area;
        d
    }
}

/// Builds the face projectors of the scalar space at degree `k` (only 2).
pub fn build_face_projectors(mesh: &PolyMesh3, f: usize, k: usize) -> Result<StokesFaceElement> {
    check_degree(k)?;
    let face = &mesh.faces[f];
    let vertices = mesh.face_points(f);
    let m = vertices.len();
    let (t1, t2) = geom::tangent_frame(&face.normal, &geom::sub(&vertices[1], &vertices[0]));
    let h = face.diameter;
    let basis = MonomialBasis::new(2, &[0.0, 0.0], h, k + 1);
    let quad = quadrature::quad_polygon(&vertices, DEFAULT_EXACTNESS)?;
    let mut fe = StokesFaceElement {
        face: f,
        center: face.centroid,
        h,
        area: face.area,
        normal: face.normal,
        t1,
        t2,
        vertices,
        basis,
        quad,
        pi_nabla: DMatrix::zeros(0, 0),
        pi0_3: DMatrix::zeros(0, 0),
        pi0_2: DMatrix::zeros(0, 0),
    };
    let nd = fe.n_dofs();
    let b2 = fe.basis.with_degree(k);
    let n2 = b2.len();
    let n3 = fe.basis.len();

    // Gram matrices by quadrature
    let mut stiff = DMatrix::zeros(n2, n2);
    let mut mass = DMatrix::zeros(n3, n3);
    for (p, w) in fe.quad.iter() {
        let x = fe.local(p);
        let g = b2.grad(&x);
        let v = fe.basis.eval(&x);
        for i in 0..n2 {
            for j in 0..n2 {
                stiff[(i, j)] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            }
        }
        for i in 0..n3 {
            for j in 0..n3 {
                mass[(i, j)] += w * v[i] * v[j];
            }
        }
    }

    // boundary terms, Simpson on each edge is exact for cubic integrands
    let mut g = stiff.clone();
    let mut rhs = DMatrix::zeros(n2, nd);
    for j in 0..n2 {
        g[(0, j)] = 0.0;
    }
    let lap: Vec<f64> = {
        let hs = b2.hessian(&[0.0, 0.0]);
        hs.iter().map(|hm| hm[0][0] + hm[1][1]).collect()
    };
    for i in 1..n2 {
        rhs[(i, 2 * m)] -= lap[i] * fe.area;
    }
    for e in 0..m {
        let a = fe.local(&fe.vertices[e]);
        let b = fe.local(&fe.vertices[(e + 1) % m]);
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        let nrm = [d[1] / len, -d[0] / len];
        let pts = [
            (a, e, len / 6.0),
            (mid, m + e, 4.0 * len / 6.0),
            (b, (e + 1) % m, len / 6.0),
        ];
        for (x, dof, w) in pts {
            let vals = b2.eval(&x);
            let grads = b2.grad(&x);
            for j in 0..n2 {
                g[(0, j)] += w * vals[j];
            }
            rhs[(0, dof)] += w;
            for i in 1..n2 {
                rhs[(i, dof)] += w * (grads[i][0] * nrm[0] + grads[i][1] * nrm[1]);
            }
        }
    }
    let pi_nabla = linalg::solve(&g, &rhs, "face H1 projection")?;

    // L2 projection: P0 moment from the DOF, the rest from the enhancement
    let mut r = DMatrix::zeros(n3, nd);
    r[(0, 2 * m)] = fe.area;
    let enh = mass.view((1, 0), (n3 - 1, n2)) * &pi_nabla;
    r.view_mut((1, 0), (n3 - 1, nd)).copy_from(&enh);
    let pi0_3 = linalg::solve(&mass, &r, "face L2 projection")?;
    let m22 = mass.view((0, 0), (n2, n2)).into_owned();
    let m23 = mass.view((0, 0), (n2, n3)).into_owned();
    let pi0_2 = linalg::solve(&m22, &(m23 * &pi0_3), "face L2 projection")?;

    fe.pi_nabla = pi_nabla;
    fe.pi0_3 = pi0_3;
    fe.pi0_2 = pi0_2;
    Ok(fe)
}

/// Face data kept by a cell: frame, quadrature and its orientation in the cell.
#[derive(Debug, Clone)]
pub struct CellFace {
    pub face: usize,
    pub sign: f64,
    pub area: f64,
    pub normal: Point,
    pub t1: Point,
    pub t2: Point,
    pub quad: QuadRule,
}

/// Velocity element on one polyhedron with all projector representations.
#[derive(Debug, Clone)]
pub struct StokesCellElement {
    pub cell: usize,
    pub center: Point,
    pub h: f64,
    pub volume: f64,
    pub vertex_points: Vec<Point>,
    pub edge_midpoints: Vec<Point>,
    pub faces: Vec<CellFace>,
    /// Global velocity index of each local DOF.
    pub global_dofs: Vec<usize>,
    /// Cell monomials up to degree 3.
    pub basis: MonomialBasis,
    pub quad: QuadRule,
    /// Scalar mass matrix of the degree-2 monomials.
    pub mass2: DMatrix<f64>,
    /// Scalar mass matrix of the linear monomials.
    pub mass1: DMatrix<f64>,
    /// `H^1` projection, rows `c * 10 + i`.
    pub pi_nabla: DMatrix<f64>,
    /// `L^2` projection, rows `c * 10 + i`.
    pub pi0: DMatrix<f64>,
    /// `L^2` projection of the gradient onto linear tensors, rows `(c * 3 + j) * 4 + b`.
    pub pi_grad: DMatrix<f64>,
    /// Linear-monomial coefficients of `div v`.
    pub div_rep: DMatrix<f64>,
    /// Moments `∫ div v m_b` against the linear monomials.
    pub div_moments: DMatrix<f64>,
    /// DOFs of the vector monomials, columns `c * 10 + i`.
    pub dof_matrix: DMatrix<f64>,
}

/// Global velocity DOF numbering: vertices, then edges, faces and cells,
/// three entries each.
#[derive(Debug, Clone, Copy)]
pub struct VelocityNumbering {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_faces: usize,
    pub n_cells: usize,
}

impl VelocityNumbering {
    pub fn new(mesh: &PolyMesh3) -> Self {
        Self {
            n_vertices: mesh.vertices.len(),
            n_edges: mesh.edges.len(),
            n_faces: mesh.faces.len(),
            n_cells: mesh.cells.len(),
        }
    }

    pub fn total(&self) -> usize {
        3 * (self.n_vertices + self.n_edges + self.n_faces + self.n_cells)
    }

    pub fn vertex(&self, v: usize, c: usize) -> usize {
        3 * v + c
    }

    pub fn edge(&self, e: usize, c: usize) -> usize {
        3 * (self.n_vertices + e) + c
    }

    pub fn face(&self, f: usize, j: usize) -> usize {
        3 * (self.n_vertices + self.n_edges + f) + j
    }

    pub fn cell(&self, k: usize, j: usize) -> usize {
        3 * (self.n_vertices + self.n_edges + self.n_faces + k) + j
    }
}

/// `m[r, :] += s * row`.
fn add_row<S>(m: &mut DMatrix<f64>, r: usize, s: f64, row: &nalgebra::Matrix<f64, nalgebra::U1, nalgebra::Dyn, S>)
where
    S: nalgebra::storage::Storage<f64, nalgebra::U1, nalgebra::Dyn>,
{
    for (j, v) in row.iter().enumerate() {
        m[(r, j)] += s * v;
    }
}

fn block_diag(block: &DMatrix<f64>, copies: usize) -> DMatrix<f64> {
    let n = block.nrows();
    let mut out = DMatrix::zeros(n * copies, n * copies);
    for c in 0..copies {
        out.view_mut((c * n, c * n), (n, n)).copy_from(block);
    }
    out
}

impl StokesCellElement {
    pub fn n_dofs(&self) -> usize {
        self.global_dofs.len()
    }

    pub fn nv(&self) -> usize {
        self.vertex_points.len()
    }

    pub fn ne(&self) -> usize {
        self.edge_midpoints.len()
    }

    pub fn nf(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex_dof(&self, lv: usize, c: usize) -> usize {
        3 * lv + c
    }

    pub fn edge_dof(&self, le: usize, c: usize) -> usize {
        3 * (self.nv() + le) + c
    }

    /// `j = 0` normal, `1` and `2` tangential moments.
    pub fn face_dof(&self, lf: usize, j: usize) -> usize {
        3 * (self.nv() + self.ne() + lf) + j
    }

    pub fn div_dof(&self, a: usize) -> usize {
        3 * (self.nv() + self.ne() + self.nf()) + a
    }

    /// Local DOFs of a vector field given with its divergence.
    pub fn dofs_of(&self, u: &dyn Fn(&Point) -> [f64; 3], div: &dyn Fn(&Point) -> f64) -> DVector<f64> {
        let mut d = DVector::zeros(self.n_dofs());
        for (lv, p) in self.vertex_points.iter().enumerate() {
            let val = u(p);
            for c in 0..3 {
                d[self.vertex_dof(lv, c)] = val[c];
            }
        }
        for (le, p) in self.edge_midpoints.iter().enumerate() {
            let val = u(p);
            for c in 0..3 {
                d[self.edge_dof(le, c)] = val[c];
            }
        }
        for (lf, cf) in self.faces.iter().enumerate() {
            let mut acc = [0.0; 3];
            for (p, w) in cf.quad.iter() {
                let val = u(p);
                acc[0] += w * geom::dot(&val, &cf.normal);
                acc[1] += w * geom::dot(&val, &cf.t1);
                acc[2] += w * geom::dot(&val, &cf.t2);
            }
            for j in 0..3 {
                d[self.face_dof(lf, j)] = acc[j] / cf.area;
            }
        }
        let lin = self.basis.with_degree(1);
        let mut acc = [0.0; 3];
        for (p, w) in self.quad.iter() {
            let dv = div(p);
            let m = lin.eval(p);
            for a in 0..3 {
                acc[a] += w * dv * m[a + 1];
            }
        }
        for a in 0..3 {
            d[self.div_dof(a)] = acc[a] * self.h / self.volume;
        }
        d
    }

    /// Maps cell DOFs to the scalar face DOFs of component `c` on local face `lf`.
    pub fn trace_matrix(&self, mesh: &PolyMesh3, lf: usize, c: usize) -> DMatrix<f64> {
        let cf = &self.faces[lf];
        let face = &mesh.faces[cf.face];
        let cell = &mesh.cells[self.cell];
        let m = face.vertices.len();
        let mut t = DMatrix::zeros(2 * m + 1, self.n_dofs());
        for i in 0..m {
            let lv = cell
                .vertices
                .binary_search(&face.vertices[i])
                .expect("face vertex in cell");
            t[(i, self.vertex_dof(lv, c))] = 1.0;
            let le = cell.edges.binary_search(&face.edges[i]).expect("face edge in cell");
            t[(m + i, self.edge_dof(le, c))] = 1.0;
        }
        t[(2 * m, self.face_dof(lf, 0))] = cf.normal[c];
        t[(2 * m, self.face_dof(lf, 1))] = cf.t1[c];
        t[(2 * m, self.face_dof(lf, 2))] = cf.t2[c];
        t
    }

    /// Values at the face quadrature points of the face `L^2` projection
    /// (degree 3 or 2) of each velocity component: three `nq x ndof` matrices.
    pub fn face_trace_values(
        &self,
        mesh: &PolyMesh3,
        fe: &StokesFaceElement,
        lf: usize,
        degree: usize,
    ) -> [DMatrix<f64>; 3] {
        let proj = if degree == 3 { &fe.pi0_3 } else { &fe.pi0_2 };
        let nm = proj.nrows();
        let nq = fe.quad.len();
        let mut e = DMatrix::zeros(nq, nm);
        for (g, p) in fe.quad.points.iter().enumerate() {
            let v = fe.monomials(p);
            for a in 0..nm {
                e[(g, a)] = v[a];
            }
        }
        let ep = e * proj;
        std::array::from_fn(|c| &ep * self.trace_matrix(mesh, lf, c))
    }

    /// Value and gradient of a vector polynomial given by 30 coefficients.
    pub fn eval_vector(&self, coeffs: &[f64], x: &Point) -> ([f64; 3], [[f64; 3]; 3]) {
        let b2 = self.basis.with_degree(2);
        let v = b2.eval(x);
        let g = b2.grad(x);
        let mut val = [0.0; 3];
        let mut grad = [[0.0; 3]; 3];
        for c in 0..3 {
            for i in 0..10 {
                let a = coeffs[c * 10 + i];
                val[c] += a * v[i];
                for j in 0..3 {
                    grad[c][j] += a * g[i][j];
                }
            }
        }
        (val, grad)
    }

    /// Block-diagonal vector mass matrix of the degree-2 monomials.
    pub fn vector_mass(&self) -> DMatrix<f64> {
        block_diag(&self.mass2, 3)
    }

    /// Stabilisations `(S1^0, S1^grad)`, already composed with `(I - Π)`.
    pub fn stabilization_matrices(&self, params: &ModelParams) -> (DMatrix<f64>, DMatrix<f64>) {
        let c0 = linalg::complement(&self.dof_matrix, &self.pi0);
        let mut s0 = c0.transpose() * &c0 * (params.rho_f / params.tau * self.h.powi(3));
        let consistency = self.gradient_consistency(params);
        let floor = params.mu * self.h;
        let diag = DVector::from_iterator(
            self.n_dofs(),
            (0..self.n_dofs()).map(|i| consistency[(i, i)].max(floor)),
        );
        let cn = linalg::complement(&self.dof_matrix, &self.pi_nabla);
        let mut s1 = cn.transpose() * DMatrix::from_diagonal(&diag) * &cn;
        linalg::symmetrize(&mut s0);
        linalg::symmetrize(&mut s1);
        (s0, s1)
    }

    fn gradient_consistency(&self, params: &ModelParams) -> DMatrix<f64> {
        let m = block_diag(&self.mass1, 9);
        self.pi_grad.transpose() * m * &self.pi_grad * params.mu
    }

    /// Local bulk form without the interface slip term.
    pub fn local_stokes_a(&self, params: &ModelParams) -> DMatrix<f64> {
        let (s0, s1) = self.stabilization_matrices(params);
        let mass = self.pi0.transpose() * self.vector_mass() * &self.pi0 * (params.rho_f / params.tau);
        let mut a = mass + s0 + self.gradient_consistency(params) + s1;
        linalg::symmetrize(&mut a);
        a
    }

    /// `-∫ q div v` with rows indexed by the linear pressure monomials.
    pub fn local_b1_div(&self) -> DMatrix<f64> {
        -&self.div_moments
    }

    /// `(f, Π0 v)_K`.
    pub fn local_rhs_f(&self, f: &dyn Fn(&Point) -> [f64; 3]) -> DVector<f64> {
        let b2 = self.basis.with_degree(2);
        let mut fm = DVector::zeros(N_VEC);
        for (p, w) in self.quad.iter() {
            let fv = f(p);
            let m = b2.eval(p);
            for c in 0..3 {
                for i in 0..10 {
                    fm[c * 10 + i] += w * fv[c] * m[i];
                }
            }
        }
        self.pi0.transpose() * fm
    }
}

/// Builds the velocity element of cell `c`; `face_elems` is indexed by global face.
pub fn build_cell_element(
    mesh: &PolyMesh3,
    c: usize,
    face_elems: &[StokesFaceElement],
    k: usize,
) -> Result<StokesCellElement> {
    check_degree(k)?;
    let cell = &mesh.cells[c];
    let numbering = VelocityNumbering::new(mesh);
    let h = cell.diameter;
    let vol = cell.volume;
    let basis = MonomialBasis::new(3, &cell.centroid, h, k + 1);
    let quad = quadrature::quad_polyhedron(&mesh.cell_face_loops(c), DEFAULT_EXACTNESS)
        .map_err(|e| VemError::Element(format!("cell {c}: {e}")))?;
    let faces: Vec<CellFace> = cell
        .faces
        .iter()
        .zip(&cell.signs)
        .map(|(&f, &s)| {
            let fe = &face_elems[f];
            CellFace {
                face: f,
                sign: s,
                area: fe.area,
                normal: fe.normal,
                t1: fe.t1,
                t2: fe.t2,
                quad: fe.quad.clone(),
            }
        })
        .collect();
    let mut global_dofs = Vec::new();
    for &v in &cell.vertices {
        global_dofs.extend((0..3).map(|j| numbering.vertex(v, j)));
    }
    for &e in &cell.edges {
        global_dofs.extend((0..3).map(|j| numbering.edge(e, j)));
    }
    for &f in &cell.faces {
        global_dofs.extend((0..3).map(|j| numbering.face(f, j)));
    }
    global_dofs.extend((0..3).map(|j| numbering.cell(c, j)));
    let mut el = StokesCellElement {
        cell: c,
        center: cell.centroid,
        h,
        volume: vol,
        vertex_points: cell.vertices.iter().map(|&v| mesh.vertices[v]).collect(),
        edge_midpoints: cell
            .edges
            .iter()
            .map(|&e| {
                let [a, b] = mesh.edges[e];
                geom::scale(&geom::add(&mesh.vertices[a], &mesh.vertices[b]), 0.5)
            })
            .collect(),
        faces,
        global_dofs,
        basis,
        quad,
        mass2: DMatrix::zeros(0, 0),
        mass1: DMatrix::zeros(0, 0),
        pi_nabla: DMatrix::zeros(0, 0),
        pi0: DMatrix::zeros(0, 0),
        pi_grad: DMatrix::zeros(0, 0),
        div_rep: DMatrix::zeros(0, 0),
        div_moments: DMatrix::zeros(0, 0),
        dof_matrix: DMatrix::zeros(0, 0),
    };
    let n = el.n_dofs();
    let n3 = el.basis.len();
    let b2 = el.basis.with_degree(2);

    // volume Gram matrices
    let mut mass3 = DMatrix::zeros(n3, n3);
    let mut stiff2 = DMatrix::zeros(10, 10);
    for (p, w) in el.quad.iter() {
        let v = el.basis.eval(p);
        let g = b2.grad(p);
        for i in 0..n3 {
            for j in 0..n3 {
                mass3[(i, j)] += w * v[i] * v[j];
            }
        }
        for i in 0..10 {
            for j in 0..10 {
                stiff2[(i, j)] += w * geom::dot(&g[i], &g[j]);
            }
        }
    }
    let mass2 = mass3.view((0, 0), (10, 10)).into_owned();
    let mass1 = mass3.view((0, 0), (4, 4)).into_owned();

    // boundary functionals from the face L2 projections
    let mut flux = DMatrix::<f64>::zeros(n3, n); // Σ σ ∫_F m_q v·n_F
    let mut grad_face = DMatrix::<f64>::zeros(N_GRAD, n); // Σ σ n_j ∫_F v_c m_b
    let mut nabla_bdry = DMatrix::<f64>::zeros(N_VEC, n); // Σ σ ∫_F v_c ∇m_i·n_F
    let mut bdry_mono = [0.0; 10]; // ∫_∂K m_j
    for lf in 0..el.nf() {
        let cf = el.faces[lf].clone();
        let fe = &face_elems[cf.face];
        let vals = el.face_trace_values(mesh, fe, lf, 3);
        for (g, (p, w)) in cf.quad.iter().enumerate() {
            let m = el.basis.eval(p);
            let gm = b2.grad(p);
            for j in 0..10 {
                bdry_mono[j] += w * m[j];
            }
            for comp in 0..3 {
                let row = vals[comp].row(g);
                let sw = cf.sign * w;
                let nc = cf.normal[comp];
                if nc != 0.0 {
                    for q in 0..n3 {
                        add_row(&mut flux, q, sw * nc * m[q], &row);
                    }
                }
                for jdir in 0..3 {
                    let nj = cf.normal[jdir];
                    if nj == 0.0 {
                        continue;
                    }
                    for b in 0..4 {
                        add_row(&mut grad_face, (comp * 3 + jdir) * 4 + b, sw * nj * m[b], &row);
                    }
                }
                for i in 1..10 {
                    let dn = geom::dot(&gm[i], &cf.normal);
                    if dn != 0.0 {
                        add_row(&mut nabla_bdry, comp * 10 + i, sw * dn, &row);
                    }
                }
            }
        }
    }

    // divergence representation
    let mut div_moments = DMatrix::zeros(4, n);
    for (lf, cf) in el.faces.iter().enumerate() {
        div_moments[(0, el.face_dof(lf, 0))] = cf.sign * cf.area;
    }
    for a in 0..3 {
        div_moments[(a + 1, el.div_dof(a))] = vol / h;
    }
    let div_rep = linalg::solve(&mass1, &div_moments, "divergence")?;
    // ∫ div v m_q for every cubic monomial
    let div_q = mass3.view((0, 0), (n3, 4)) * &div_rep;

    // mean values ∫ v_c
    let mut int_v = DMatrix::zeros(3, n);
    for comp in 0..3 {
        let row = (flux.row(comp + 1) - div_q.row(comp + 1)) * h;
        int_v.row_mut(comp).copy_from(&row);
    }

    // H1 projection, component by component
    let lap: Vec<f64> = b2
        .hessian(&el.center)
        .iter()
        .map(|hm| hm[0][0] + hm[1][1] + hm[2][2])
        .collect();
    let mut g = stiff2.clone();
    for j in 0..10 {
        g[(0, j)] = bdry_mono[j];
    }
    let mut pi_nabla = DMatrix::zeros(N_VEC, n);
    for comp in 0..3 {
        let mut rhs = DMatrix::zeros(10, n);
        for (lf, cf) in el.faces.iter().enumerate() {
            rhs[(0, el.face_dof(lf, 0))] += cf.area * cf.normal[comp];
            rhs[(0, el.face_dof(lf, 1))] += cf.area * cf.t1[comp];
            rhs[(0, el.face_dof(lf, 2))] += cf.area * cf.t2[comp];
        }
        for i in 1..10 {
            let row = nabla_bdry.row(comp * 10 + i) - int_v.row(comp) * lap[i];
            rhs.row_mut(i).copy_from(&row);
        }
        let p = linalg::solve(&g, &rhs, "cell H1 projection")?;
        pi_nabla.view_mut((comp * 10, 0), (10, n)).copy_from(&p);
    }

    // L2 projection through the gradient / complement splitting
    let vmass = block_diag(&mass2, 3);
    let grads = gradient_fields(3, 2);
    let comp_fields = ComplementBasis::new(3, 2);
    let mut t = DMatrix::zeros(N_VEC, N_VEC);
    let mut r = DMatrix::zeros(N_VEC, n);
    for (row, f) in grads.iter().enumerate() {
        for (j, v) in f.iter().enumerate() {
            t[(row, j)] = *v;
        }
        let q = row + 1;
        let mom = (flux.row(q) - div_q.row(q)) * h;
        r.row_mut(row).copy_from(&mom);
    }
    let vm_pn = &vmass * &pi_nabla;
    for (k2, f) in comp_fields.fields().iter().enumerate() {
        let row = grads.len() + k2;
        let fv = DVector::from_column_slice(f);
        for (j, v) in f.iter().enumerate() {
            t[(row, j)] = *v;
        }
        let mom = fv.transpose() * &vm_pn;
        r.row_mut(row).copy_from(&mom);
    }
    if grads.len() + comp_fields.len() != N_VEC {
        return Err(VemError::Element("polynomial splitting has the wrong dimension".into()));
    }
    let moments = linalg::solve(&t, &r, "polynomial splitting")?;
    let pi0 = linalg::solve(&vmass, &moments, "cell L2 projection")?;

    // gradient projection onto linear tensors
    let mut gm = grad_face;
    for comp in 0..3 {
        for jdir in 0..3 {
            let row = (comp * 3 + jdir) * 4 + 1 + jdir;
            let upd = gm.row(row) - int_v.row(comp) / h;
            gm.row_mut(row).copy_from(&upd);
        }
    }
    let pi_grad = linalg::solve(&block_diag(&mass1, 9), &gm, "gradient projection")?;

    el.mass2 = mass2;
    el.mass1 = mass1;
    el.pi_nabla = pi_nabla;
    el.pi0 = pi0;
    el.pi_grad = pi_grad;
    el.div_rep = div_rep;
    el.div_moments = div_moments;
    el.dof_matrix = DMatrix::zeros(n, N_VEC);
    for comp in 0..3 {
        for i in 0..10 {
            let u = |x: &Point| {
                let mut v = [0.0; 3];
                v[comp] = b2.eval(x)[i];
                v
            };
            let dv = |x: &Point| b2.grad(x)[i][comp];
            let d = el.dofs_of(&u, &dv);
            el.dof_matrix.set_column(comp * 10 + i, &d);
        }
    }
    Ok(el)
}

/// Builds all face and cell velocity elements in parallel.
pub fn build_all(mesh: &PolyMesh3) -> Result<(Vec<StokesFaceElement>, Vec<StokesCellElement>)> {
    use rayon::prelude::*;
    let faces: Vec<StokesFaceElement> = (0..mesh.faces.len())
        .into_par_iter()
        .map(|f| build_face_projectors(mesh, f, DEGREE))
        .collect::<Result<_>>()?;
    let cells = (0..mesh.cells.len())
        .into_par_iter()
        .map(|c| build_cell_element(mesh, c, &faces, DEGREE))
        .collect::<Result<_>>()?;
    Ok((faces, cells))
}
