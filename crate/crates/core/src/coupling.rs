//! Interface terms on Sigma, global DOF layout over the four fields and
//! sparse assembly of the coupled system.
//!
//! Unknowns are ordered `u | p | φ | w`. With `B1 = B1div + B1Σ` the
//! assembled operator reads
//!
//! ```text
//! [ A    B1ᵀ        0        ] [u    ]   [F]
//! [ B1  -C1     B2ᵀ + B3ᵀ    ] [(p,φ)] = [G]
//! [ 0   B2 - B3     C2       ] [w    ]   [M]
//! ```

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Result, VemError};
use crate::geom::{self, Point};
use crate::mesh::{self, BoundaryTag, BulkSurfaceConnector, PolyMesh3, SurfaceMesh2};
use crate::params::ModelParams;
use crate::plate::{self, PlateElement, PlatePressureElement};
use crate::sparse::CsrMatrix;
use crate::stokes::{self, StokesCellElement, StokesFaceElement, VelocityNumbering, N_PRESSURE};

/// Bulk mesh, interface mesh and every local element.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: PolyMesh3,
    pub surface: SurfaceMesh2,
    pub connector: BulkSurfaceConnector,
    pub face_elems: Vec<StokesFaceElement>,
    pub cells: Vec<StokesCellElement>,
    pub plates: Vec<PlateElement>,
    pub pressures: Vec<PlatePressureElement>,
    pub numbering: VelocityNumbering,
    /// `(cell, local face)` of the bulk face under each surface polygon.
    pub sigma_faces: Vec<(usize, usize)>,
}

impl Discretization {
    /// Extracts the interface and builds all elements. The mesh must be tagged.
    pub fn new(mesh: PolyMesh3) -> Result<Self> {
        let (surface, connector) = mesh::extract_surface(&mesh)?;
        let (face_elems, cells) = stokes::build_all(&mesh)?;
        let hz = plate::vertex_lengths(&surface);
        let plates = (0..surface.polygons.len())
            .into_par_iter()
            .map(|p| plate::build_plate_element(&surface, p, &hz, 2))
            .collect::<Result<Vec<_>>>()?;
        let pressures = (0..surface.polygons.len())
            .into_par_iter()
            .map(|p| plate::build_plate_pressure_element(&surface, p, 1))
            .collect::<Result<Vec<_>>>()?;
        let mut sigma_faces = Vec::with_capacity(surface.polygons.len());
        for &f in &connector.polygon_to_face {
            let face = &mesh.faces[f];
            if face.cells.len() != 1 {
                return Err(VemError::Assembly(format!("Sigma face {f} is not a boundary face")));
            }
            let k = face.cells[0];
            let lf = cells[k]
                .faces
                .iter()
                .position(|cf| cf.face == f)
                .ok_or_else(|| VemError::Assembly(format!("Sigma face {f} missing from its cell {k}")))?;
            sigma_faces.push((k, lf));
        }
        let numbering = VelocityNumbering::new(&mesh);
        Ok(Self {
            mesh,
            surface,
            connector,
            face_elems,
            cells,
            plates,
            pressures,
            numbering,
            sigma_faces,
        })
    }

    /// Outward unit normal of the interface.
    pub fn n_sigma(&self) -> Point {
        self.surface.frame.normal
    }

    /// Plate coordinates of a bulk point on Sigma.
    pub fn to_plane(&self, x: &Point) -> [f64; 2] {
        self.surface.frame.to_plane(x)
    }

    /// Bulk mesh size (largest cell diameter).
    pub fn h_bulk(&self) -> f64 {
        self.mesh.h()
    }

    /// Plate mesh size (largest interface edge length).
    pub fn h_plate(&self) -> f64 {
        (0..self.surface.edges.len())
            .map(|e| self.surface.edge_length(e))
            .fold(0.0, f64::max)
    }
}

/// Boundary-condition specification.
#[derive(Debug, Clone, PartialEq)]
pub struct BcSpec {
    /// Tags whose closure carries Dirichlet velocity data.
    pub dirichlet: Vec<BoundaryTag>,
}

impl BcSpec {
    pub fn example1() -> Self {
        Self {
            dirichlet: vec![BoundaryTag::GammaU],
        }
    }
}

/// Global numbering of all four fields and the constrained DOFs.
#[derive(Debug, Clone)]
pub struct DofLayout {
    pub n_u: usize,
    pub n_p: usize,
    pub n_phi: usize,
    pub n_w: usize,
    pub constrained: Vec<bool>,
    /// Prescribed value of each constrained DOF (zero elsewhere).
    pub values: Vec<f64>,
}

impl DofLayout {
    pub fn total(&self) -> usize {
        self.n_u + self.n_p + self.n_phi + self.n_w
    }
    pub fn off_p(&self) -> usize {
        self.n_u
    }
    pub fn off_phi(&self) -> usize {
        self.n_u + self.n_p
    }
    pub fn off_w(&self) -> usize {
        self.n_u + self.n_p + self.n_phi
    }
    pub fn u_range(&self) -> std::ops::Range<usize> {
        0..self.n_u
    }
    pub fn p_range(&self) -> std::ops::Range<usize> {
        self.off_p()..self.off_phi()
    }
    pub fn phi_range(&self) -> std::ops::Range<usize> {
        self.off_phi()..self.off_w()
    }
    pub fn w_range(&self) -> std::ops::Range<usize> {
        self.off_w()..self.total()
    }
    pub fn p_dof(&self, cell: usize, a: usize) -> usize {
        self.off_p() + N_PRESSURE * cell + a
    }
    pub fn phi_dof(&self, v: usize) -> usize {
        self.off_phi() + v
    }
    pub fn w_dof(&self, v: usize, j: usize) -> usize {
        self.off_w() + 3 * v + j
    }
    pub fn free_dofs(&self) -> Vec<usize> {
        (0..self.total()).filter(|&i| !self.constrained[i]).collect()
    }
    pub fn constrained_dofs(&self) -> Vec<usize> {
        (0..self.total()).filter(|&i| self.constrained[i]).collect()
    }
    /// Copies prescribed values from a full-length vector (e.g. an interpolant).
    pub fn prescribe(&mut self, full: &[f64]) {
        assert_eq!(full.len(), self.total());
        for i in 0..self.total() {
            self.values[i] = if self.constrained[i] { full[i] } else { 0.0 };
        }
    }
}

/// Numbers the DOFs and marks Dirichlet velocity, interface-boundary plate
/// pressure and clamped plate DOFs as constrained.
pub fn build_layout(disc: &Discretization, bc: &BcSpec) -> Result<DofLayout> {
    for t in &bc.dirichlet {
        match t {
            BoundaryTag::Sigma => {
                return Err(VemError::Config(
                    "Sigma faces cannot carry Dirichlet velocity data".into(),
                ))
            }
            BoundaryTag::Interior => return Err(VemError::Config("interior faces cannot be Dirichlet".into())),
            _ => {}
        }
    }
    let mesh = &disc.mesh;
    let num = &disc.numbering;
    let nsv = disc.surface.vertices.len();
    let mut layout = DofLayout {
        n_u: num.total(),
        n_p: N_PRESSURE * mesh.cells.len(),
        n_phi: nsv,
        n_w: 3 * nsv,
        constrained: Vec::new(),
        values: Vec::new(),
    };
    layout.constrained = vec![false; layout.total()];
    layout.values = vec![0.0; layout.total()];
    for (f, face) in mesh.faces.iter().enumerate() {
        if !bc.dirichlet.contains(&mesh.tags[f]) {
            continue;
        }
        for c in 0..3 {
            for &v in &face.vertices {
                layout.constrained[num.vertex(v, c)] = true;
            }
            for &e in &face.edges {
                layout.constrained[num.edge(e, c)] = true;
            }
            layout.constrained[num.face(f, c)] = true;
        }
    }
    for (v, &b) in disc.surface.boundary_vertex.iter().enumerate() {
        if b {
            let i = layout.phi_dof(v);
            layout.constrained[i] = true;
            for j in 0..3 {
                let i = layout.w_dof(v, j);
                layout.constrained[i] = true;
            }
        }
    }
    Ok(layout)
}

/// Slip term `γ ∫_F (Π0 u × n)·(Π0 v × n)` on the cell DOFs, written with
/// `|a × n|² = |(I - n nᵀ) a|²`.
pub fn local_a_sigma(
    mesh: &PolyMesh3,
    cell: &StokesCellElement,
    fe: &StokesFaceElement,
    lf: usize,
    gamma: f64,
    n: &Point,
) -> DMatrix<f64> {
    let u = cell.face_trace_values(mesh, fe, lf, 2);
    let nd = cell.n_dofs();
    let mut a = DMatrix::zeros(nd, nd);
    for (g, w) in fe.quad.weights.iter().enumerate() {
        let rows: Vec<DVector<f64>> = (0..3).map(|c| u[c].row(g).transpose()).collect();
        let un = &rows[0] * n[0] + &rows[1] * n[1] + &rows[2] * n[2];
        for c in 0..3 {
            let tc = &rows[c] - &un * n[c];
            a += &tc * tc.transpose() * (gamma * w);
        }
    }
    crate::linalg::symmetrize(&mut a);
    a
}

/// `∫_F Π0_1 ψ (Π0_2 v · n)` as a (cell DOFs x polygon pressure DOFs) matrix.
pub fn local_b1_sigma(
    mesh: &PolyMesh3,
    cell: &StokesCellElement,
    fe: &StokesFaceElement,
    lf: usize,
    pel: &PlatePressureElement,
    frame: &mesh::PlaneFrame,
) -> DMatrix<f64> {
    let u = cell.face_trace_values(mesh, fe, lf, 2);
    let n = frame.normal;
    let un = &u[0] * n[0] + &u[1] * n[1] + &u[2] * n[2];
    let b = pel.geo.basis(1);
    let nq = fe.quad.len();
    let mut psi = DMatrix::zeros(nq, 3);
    for (g, x) in fe.quad.points.iter().enumerate() {
        let v = b.eval(&frame.to_plane(x));
        for a in 0..3 {
            psi[(g, a)] = v[a] * fe.quad.weights[g];
        }
    }
    un.transpose() * psi * &pel.pi_nabla
}

/// Vector field on the bulk domain.
pub type VectorField<'a> = &'a (dyn Fn(&Point) -> [f64; 3] + Sync);
/// Traction field given a point and an outward normal.
pub type TractionField<'a> = &'a (dyn Fn(&Point, &Point) -> [f64; 3] + Sync);
/// Plate field returning a value and its gradient.
pub type PlateJet<'a> = &'a (dyn Fn(&[f64; 2]) -> (f64, [f64; 2]) + Sync);

/// Right-hand-side data. Plate functions take plate coordinates.
pub struct Loads<'a> {
    pub f: VectorField<'a>,
    pub g: &'a (dyn Fn(&[f64; 2]) -> f64 + Sync),
    pub m: &'a (dyn Fn(&[f64; 2]) -> f64 + Sync),
    /// Traction `σ n` on GammaSigma faces, given the point and outward normal.
    pub traction: Option<TractionField<'a>>,
    /// Additional interface load on Sigma, tested against the velocity trace.
    pub interface: Option<VectorField<'a>>,
}

impl Loads<'_> {
    pub fn zero() -> Loads<'static> {
        Loads {
            f: &|_| [0.0; 3],
            g: &|_| 0.0,
            m: &|_| 0.0,
            traction: None,
            interface: None,
        }
    }
}

/// Assembled coupled system, before and after eliminating constraints.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    /// Full operator without constraints.
    pub raw: CsrMatrix,
    pub raw_rhs: Vec<f64>,
    /// Operator with identity rows on constrained DOFs and their columns moved to the RHS.
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub layout: DofLayout,
}

type Triplets = Vec<(usize, usize, f64)>;

fn push_dense(t: &mut Triplets, rows: &[usize], cols: &[usize], m: &DMatrix<f64>) {
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            let v = m[(i, j)];
            if v != 0.0 {
                t.push((r, c, v));
            }
        }
    }
}

/// Test-function integral `∫_F t · Π0_3 v` for a vector load `t` on a face of `cell`.
fn face_load(
    mesh: &PolyMesh3,
    cell: &StokesCellElement,
    fe: &StokesFaceElement,
    lf: usize,
    load: &dyn Fn(&Point) -> [f64; 3],
) -> DVector<f64> {
    let u = cell.face_trace_values(mesh, fe, lf, 3);
    let mut r = DVector::zeros(cell.n_dofs());
    for (g, x) in fe.quad.points.iter().enumerate() {
        let t = load(x);
        let w = fe.quad.weights[g];
        for c in 0..3 {
            r += u[c].row(g).transpose() * (w * t[c]);
        }
    }
    r
}

/// Assembles the coupled operator and right-hand side, then eliminates the
/// constrained DOFs symmetrically.
pub fn assemble(disc: &Discretization, params: &ModelParams, loads: &Loads, layout: &DofLayout) -> Result<BlockSystem> {
    let n = layout.total();
    if layout.n_u != disc.numbering.total() || layout.n_phi != disc.surface.vertices.len() {
        return Err(VemError::Assembly("layout does not match the discretization".into()));
    }
    let mesh = &disc.mesh;
    let frame = disc.surface.frame;
    let n_sigma = disc.n_sigma();

    // bulk cells
    let bulk: Vec<(Triplets, Vec<(usize, f64)>)> = disc
        .cells
        .par_iter()
        .map(|el| {
            let mut t = Triplets::new();
            let mut r = Vec::new();
            let a = el.local_stokes_a(params);
            push_dense(&mut t, &el.global_dofs, &el.global_dofs, &a);
            let b = el.local_b1_div();
            let prow: Vec<usize> = (0..N_PRESSURE).map(|q| layout.p_dof(el.cell, q)).collect();
            push_dense(&mut t, &prow, &el.global_dofs, &b);
            push_dense(&mut t, &el.global_dofs, &prow, &b.transpose());
            let f = el.local_rhs_f(loads.f);
            r.extend(el.global_dofs.iter().copied().zip(f.iter().copied()));
            if let Some(tr) = loads.traction {
                for (lf, cf) in el.faces.iter().enumerate() {
                    if mesh.tags[cf.face] == BoundaryTag::GammaSigma {
                        let nrm = geom::scale(&cf.normal, cf.sign);
                        let l = face_load(mesh, el, &disc.face_elems[cf.face], lf, &|x| tr(x, &nrm));
                        r.extend(el.global_dofs.iter().copied().zip(l.iter().copied()));
                    }
                }
            }
            (t, r)
        })
        .collect();

    // interface faces and plate polygons
    let surf: Vec<(Triplets, Vec<(usize, f64)>)> = (0..disc.surface.polygons.len())
        .into_par_iter()
        .map(|p| {
            let mut t = Triplets::new();
            let mut r = Vec::new();
            let (k, lf) = disc.sigma_faces[p];
            let el = &disc.cells[k];
            let fe = &disc.face_elems[disc.connector.polygon_to_face[p]];
            let pel = &disc.pressures[p];
            let wel = &disc.plates[p];
            let a = local_a_sigma(mesh, el, fe, lf, params.gamma, &n_sigma);
            push_dense(&mut t, &el.global_dofs, &el.global_dofs, &a);
            let phi: Vec<usize> = pel.global_dofs().iter().map(|&v| layout.phi_dof(v)).collect();
            let w: Vec<usize> = wel.global_dofs().iter().map(|&g| layout.off_w() + g).collect();
            let b1 = local_b1_sigma(mesh, el, fe, lf, pel, &frame);
            push_dense(&mut t, &el.global_dofs, &phi, &b1);
            push_dense(&mut t, &phi, &el.global_dofs, &b1.transpose());
            push_dense(&mut t, &phi, &phi, &(-pel.local_c1(params)));
            push_dense(&mut t, &w, &w, &wel.local_c2(params));
            let (b2, b3) = plate::local_b2_b3(pel, wel, params);
            push_dense(&mut t, &phi, &w, &(&b2 + &b3));
            push_dense(&mut t, &w, &phi, &(&b2 - &b3).transpose());
            let g = pel.local_rhs_g(loads.g);
            r.extend(phi.iter().copied().zip(g.iter().copied()));
            let m = wel.local_rhs_m(loads.m, params);
            r.extend(w.iter().copied().zip(m.iter().copied()));
            if let Some(il) = loads.interface {
                let l = face_load(mesh, el, fe, lf, il);
                r.extend(el.global_dofs.iter().copied().zip(l.iter().copied()));
            }
            (t, r)
        })
        .collect();

    let mut triplets = Triplets::new();
    let mut raw_rhs = vec![0.0; n];
    for (t, r) in bulk.into_iter().chain(surf) {
        triplets.extend(t);
        for (i, v) in r {
            raw_rhs[i] += v;
        }
    }
    let raw = CsrMatrix::from_triplets(n, n, triplets);
    let (matrix, rhs) = eliminate(&raw, &raw_rhs, layout);
    Ok(BlockSystem {
        raw,
        raw_rhs,
        matrix,
        rhs,
        layout: layout.clone(),
    })
}

/// Identity rows on constrained DOFs; constrained columns move to the RHS.
pub fn eliminate(a: &CsrMatrix, b: &[f64], layout: &DofLayout) -> (CsrMatrix, Vec<f64>) {
    let mut t = Triplets::with_capacity(a.nnz());
    let mut rhs = b.to_vec();
    for i in 0..a.nrows {
        if layout.constrained[i] {
            t.push((i, i, 1.0));
            rhs[i] = layout.values[i];
            continue;
        }
        for (j, v) in a.row(i) {
            if layout.constrained[j] {
                rhs[i] -= v * layout.values[j];
            } else {
                t.push((i, j, v));
            }
        }
    }
    (CsrMatrix::from_triplets(a.nrows, a.ncols, t), rhs)
}

/// Exact fields used to build interpolants. Plate functions take plate coordinates.
pub struct ExactFields<'a> {
    pub u: VectorField<'a>,
    pub div_u: &'a (dyn Fn(&Point) -> f64 + Sync),
    pub p: &'a (dyn Fn(&Point) -> f64 + Sync),
    pub phi: &'a (dyn Fn(&[f64; 2]) -> f64 + Sync),
    /// Value and gradient of the deflection.
    pub w: PlateJet<'a>,
}

/// DOF interpolant of exact fields; the pressure is the cellwise `L^2` projection.
pub fn interpolate(disc: &Discretization, layout: &DofLayout, ex: &ExactFields) -> Result<Vec<f64>> {
    let mut x = vec![0.0; layout.total()];
    for el in &disc.cells {
        let d = el.dofs_of(ex.u, ex.div_u);
        for (l, &g) in el.global_dofs.iter().enumerate() {
            x[g] = d[l];
        }
        let b1 = el.basis.with_degree(1);
        let mut pm = DMatrix::zeros(N_PRESSURE, 1);
        for (pt, w) in el.quad.iter() {
            let v = (ex.p)(pt);
            let m = b1.eval(pt);
            for a in 0..N_PRESSURE {
                pm[a] += w * v * m[a];
            }
        }
        let c = crate::linalg::solve(&el.mass1, &pm, "pressure projection")?;
        for a in 0..N_PRESSURE {
            x[layout.p_dof(el.cell, a)] = c[a];
        }
    }
    for (pel, wel) in disc.pressures.iter().zip(&disc.plates) {
        let d = pel.dofs_of(&|z| (ex.phi)(z));
        for (l, &v) in pel.global_dofs().iter().enumerate() {
            x[layout.phi_dof(v)] = d[l];
        }
        let d = wel.dofs_of(ex.w);
        for (l, &g) in wel.global_dofs().iter().enumerate() {
            x[layout.off_w() + g] = d[l];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cube_mesh, tag_boundaries, TagRule};
    use crate::sparse::SparseLu;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube(n: usize) -> Discretization {
        let m = tag_boundaries(generate_cube_mesh(n, [0.0; 3], [1.0; 3]).unwrap(), &TagRule::example1()).unwrap();
        Discretization::new(m).unwrap()
    }

    fn params() -> ModelParams {
        ModelParams {
            rho_f: 1.3,
            mu: 0.7,
            gamma: 1.9,
            alpha: 0.8,
            tau: 0.6,
            ..ModelParams::unity()
        }
    }

    /// Cell DOFs of a polynomial vector field (divergence computed by finite differences).
    fn dofs(el: &StokesCellElement, u: &dyn Fn(&Point) -> [f64; 3]) -> DVector<f64> {
        let div = |x: &Point| {
            let e = 1e-5;
            (0..3)
                .map(|c| {
                    let mut a = *x;
                    let mut b = *x;
                    a[c] += e;
                    b[c] -= e;
                    (u(&a)[c] - u(&b)[c]) / (2.0 * e)
                })
                .sum::<f64>()
        };
        el.dofs_of(u, &div)
    }

    #[test]
    fn slip_term_values() {
        let d = cube(1);
        let (k, lf) = d.sigma_faces[0];
        let el = &d.cells[k];
        let fe = &d.face_elems[d.connector.polygon_to_face[0]];
        let n = d.n_sigma();
        assert!((n[2] - 1.0).abs() < 1e-14);
        let a = local_a_sigma(&d.mesh, el, fe, lf, 1.0, &n);
        let vn = dofs(el, &|x| [0.0, 0.0, 1.0 + x[0] * x[1]]);
        assert!(vn.dot(&(&a * &vn)).abs() < 1e-12);
        let e1 = dofs(el, &|_| [1.0, 0.0, 0.0]);
        assert!((e1.dot(&(&a * &e1)) - 1.0).abs() < 1e-12);
        // cross-product formula against the tangential mass on random quadratic data
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |x: &Point| {
            [
                c[0] + c[1] * x[0] + c[2] * x[1] * x[1],
                c[3] + c[4] * x[0] * x[1] + c[5] * x[1],
                c[6] + c[7] * x[2] + c[8] * x[0],
            ]
        };
        let v = dofs(el, &f);
        let got = v.dot(&(&a * &v));
        let exact = fe.quad.integrate(|x| {
            let cr = geom::cross(&f(x), &n);
            geom::dot(&cr, &cr)
        });
        assert!((got - exact).abs() < 1e-12);
    }

    #[test]
    fn normal_pairing_values() {
        let d = cube(1);
        let (k, lf) = d.sigma_faces[0];
        let el = &d.cells[k];
        let fe = &d.face_elems[d.connector.polygon_to_face[0]];
        let pel = &d.pressures[0];
        let b = local_b1_sigma(&d.mesh, el, fe, lf, pel, &d.surface.frame);
        let one = pel.dofs_of(&|_| 1.0);
        let vn = dofs(el, &|_| [0.0, 0.0, 1.0]);
        assert!((vn.dot(&(&b * &one)) - 1.0).abs() < 1e-12);
        let vt = dofs(el, &|x| [x[1] * x[1], 1.0 + x[0], 0.0]);
        assert!((b.transpose() * vt).amax() < 1e-12);
        let psi = pel.dofs_of(&|z| 1.0 - z[0] + 2.0 * z[1]);
        let v = dofs(el, &|x| [x[0], x[2], x[0] * x[1] + x[1] * x[1] - x[2]]);
        let exact = fe
            .quad
            .integrate(|x| (1.0 - x[0] + 2.0 * x[1]) * (x[0] * x[1] + x[1] * x[1] - x[2]));
        assert!((v.dot(&(&b * &psi)) - exact).abs() < 1e-11);
    }

    #[test]
    fn layout_counts_and_errors() {
        let d = cube(1);
        let l = build_layout(&d, &BcSpec::example1()).unwrap();
        for v in 0..8 {
            for c in 0..3 {
                assert!(l.constrained[d.numbering.vertex(v, c)]);
            }
        }
        let d = cube(2);
        let l = build_layout(&d, &BcSpec::example1()).unwrap();
        // 27 vertices, 54 edges, 36 faces, 8 cells; 9 interface vertices
        assert_eq!(l.n_u, 3 * (27 + 54 + 36 + 8));
        assert_eq!(l.n_p, 32);
        assert_eq!((l.n_phi, l.n_w), (9, 27));
        assert_eq!(l.total(), 443);
        assert_eq!(l.free_dofs().iter().filter(|&&i| l.phi_range().contains(&i)).count(), 1);
        let bad = BcSpec {
            dirichlet: vec![BoundaryTag::GammaU, BoundaryTag::Sigma],
        };
        assert!(matches!(build_layout(&d, &bad), Err(VemError::Config(_))));
        let m = tag_boundaries(
            generate_cube_mesh(1, [0.0; 3], [1.0; 3]).unwrap(),
            &TagRule::all(BoundaryTag::GammaU),
        )
        .unwrap();
        assert!(Discretization::new(m).is_err());
    }

    #[test]
    fn block_structure() {
        let d = cube(2);
        let p = params();
        let l = build_layout(&d, &BcSpec::example1()).unwrap();
        let s = assemble(&d, &p, &Loads::zero(), &l).unwrap();
        let a = &s.raw;
        let (u, pp, phi, w) = (l.u_range(), l.p_range(), l.phi_range(), l.w_range());
        let q = l.off_p()..l.off_w();
        let auu = a.block(u.clone(), u.clone());
        assert!(auu.to_dense().relative_eq(&auu.transpose().to_dense(), 1e-13, 1e-12));
        assert_eq!(a.block(q.clone(), u.clone()), a.block(u.clone(), q.clone()).transpose());
        let c2 = a.block(w.clone(), w.clone()).to_dense();
        assert!(c2.relative_eq(&c2.transpose(), 1e-13, 1e-12));
        assert!(a.block(pp.clone(), pp.clone()).nnz() == 0);
        // block(2,3) - block(3,2)ᵀ = 2 B3ᵀ, assembled independently
        let diff = a.block(phi.clone(), w.clone()).to_dense() - a.block(w.clone(), phi.clone()).transpose().to_dense();
        let mut b3 = DMatrix::<f64>::zeros(l.n_phi, l.n_w);
        for (pel, wel) in d.pressures.iter().zip(&d.plates) {
            let (_, lb3) = plate::local_b2_b3(pel, wel, &p);
            for (i, &gi) in pel.global_dofs().iter().enumerate() {
                for (j, &gj) in wel.global_dofs().iter().enumerate() {
                    b3[(gi, gj)] += 2.0 * lb3[(i, j)];
                }
            }
        }
        assert!((diff - b3).amax() < 1e-14);
        // structural symmetry of the full pattern
        let t = a.transpose();
        assert_eq!(a.row_ptr, t.row_ptr);
        assert_eq!(a.col_idx, t.col_idx);
        // eliminated system keeps A symmetric
        let e = s.matrix.block(u.clone(), u);
        assert!(e.to_dense().relative_eq(&e.transpose().to_dense(), 1e-13, 1e-12));
    }

    #[test]
    fn single_polygon_matches_local_blocks() {
        let d = cube(1);
        let p = params();
        let l = build_layout(&d, &BcSpec::example1()).unwrap();
        let s = assemble(&d, &p, &Loads::zero(), &l).unwrap();
        let (b2, b3) = plate::local_b2_b3(&d.pressures[0], &d.plates[0], &p);
        let got = s.raw.block(l.phi_range(), l.w_range()).to_dense();
        let pel = &d.pressures[0];
        let wel = &d.plates[0];
        for (i, &gi) in pel.global_dofs().iter().enumerate() {
            for (j, &gj) in wel.global_dofs().iter().enumerate() {
                assert_eq!(got[(gi, gj)], b2[(i, j)] + b3[(i, j)]);
            }
        }
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        let d = cube(2);
        let l = build_layout(&d, &BcSpec::example1()).unwrap();
        let s = assemble(&d, &params(), &Loads::zero(), &l).unwrap();
        let lu = SparseLu::new(&s.matrix).unwrap();
        let x = lu.solve(&s.rhs).unwrap();
        assert!(x.iter().all(|v| *v == 0.0));
        let det_b = s.rhs.iter().all(|v| *v == 0.0);
        assert!(det_b);
    }

    #[test]
    fn assembly_is_deterministic() {
        let d = cube(2);
        let l = build_layout(&d, &BcSpec::example1()).unwrap();
        let f = |x: &Point| [x[0].sin(), x[1] * x[2], 1.0];
        let loads = Loads { f: &f, ..Loads::zero() };
        let a = assemble(&d, &params(), &loads, &l).unwrap();
        let b = assemble(&d, &params(), &loads, &l).unwrap();
        assert_eq!(a.raw, b.raw);
        assert_eq!(a.raw_rhs, b.raw_rhs);
    }
}
