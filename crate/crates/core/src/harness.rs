//! Manufactured solutions, computable errors, convergence rates and the
//! refinement-study driver.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::coupling::{self, BcSpec, Discretization, DofLayout, ExactFields, Loads};
use crate::error::{Result, VemError};
use crate::geom::{self, Point};
use crate::mesh::{self, BoundaryTag, PolyMesh3, TagRule};
use crate::params::ModelParams;
use crate::solver::{self, SolutionFields, SolveMode, SolverConfig};

/// Exact solution with the derivatives needed by the error norms and loads.
/// Plate quantities take plate coordinates.
pub trait ExactSolution: Sync {
    fn u(&self, x: &Point) -> [f64; 3];
    /// `grad[i][j] = ∂_j u_i`.
    fn grad_u(&self, x: &Point) -> [[f64; 3]; 3];
    fn p(&self, x: &Point) -> f64;
    fn phi(&self, z: &[f64; 2]) -> f64;
    fn grad_phi(&self, z: &[f64; 2]) -> [f64; 2];
    fn w(&self, z: &[f64; 2]) -> f64;
    fn grad_w(&self, z: &[f64; 2]) -> [f64; 2];
    fn hess_w(&self, z: &[f64; 2]) -> [[f64; 2]; 2];

    fn div_u(&self, x: &Point) -> f64 {
        let g = self.grad_u(x);
        g[0][0] + g[1][1] + g[2][2]
    }
}

/// Example 1: trigonometric flow on the unit cube with the interface at `x3 = 1`.
#[derive(Debug, Clone, Copy)]
pub struct ManufacturedCase {
    pub params: ModelParams,
}

pub fn example1_case(params: ModelParams) -> ManufacturedCase {
    ManufacturedCase { params }
}

const TWO_PI: f64 = 2.0 * PI;

impl ExactSolution for ManufacturedCase {
    fn u(&self, x: &Point) -> [f64; 3] {
        [
            x[2].cos() * x[1].sin(),
            x[0].cos() * x[2].sin(),
            x[1].cos() * x[0].sin(),
        ]
    }

    fn grad_u(&self, x: &Point) -> [[f64; 3]; 3] {
        let (s, c) = (|t: f64| t.sin(), |t: f64| t.cos());
        [
            [0.0, c(x[2]) * c(x[1]), -s(x[2]) * s(x[1])],
            [-s(x[0]) * s(x[2]), 0.0, c(x[0]) * c(x[2])],
            [c(x[1]) * c(x[0]), -s(x[1]) * s(x[0]), 0.0],
        ]
    }

    fn p(&self, x: &Point) -> f64 {
        (TWO_PI * x[0]).sin() * (TWO_PI * x[1]).sin()
    }

    fn phi(&self, z: &[f64; 2]) -> f64 {
        (TWO_PI * z[0]).sin() * (TWO_PI * z[1]).sin()
    }

    fn grad_phi(&self, z: &[f64; 2]) -> [f64; 2] {
        [
            TWO_PI * (TWO_PI * z[0]).cos() * (TWO_PI * z[1]).sin(),
            TWO_PI * (TWO_PI * z[0]).sin() * (TWO_PI * z[1]).cos(),
        ]
    }

    fn w(&self, z: &[f64; 2]) -> f64 {
        self.params.tau * z[1].cos() * z[0].sin()
    }

    fn grad_w(&self, z: &[f64; 2]) -> [f64; 2] {
        let t = self.params.tau;
        [t * z[1].cos() * z[0].cos(), -t * z[1].sin() * z[0].sin()]
    }

    fn hess_w(&self, z: &[f64; 2]) -> [[f64; 2]; 2] {
        let t = self.params.tau;
        let w = self.w(z);
        let xy = -t * z[1].sin() * z[0].cos();
        [[-w, xy], [xy, -w]]
    }
}

impl ManufacturedCase {
    pub fn grad_p(&self, x: &Point) -> [f64; 3] {
        [
            TWO_PI * (TWO_PI * x[0]).cos() * (TWO_PI * x[1]).sin(),
            TWO_PI * (TWO_PI * x[0]).sin() * (TWO_PI * x[1]).cos(),
            0.0,
        ]
    }

    /// `f = (ρ_f/τ) u - μ Δu + ∇p`, using `Δu = -2u`.
    pub fn f(&self, x: &Point) -> [f64; 3] {
        let q = &self.params;
        let u = self.u(x);
        let gp = self.grad_p(x);
        std::array::from_fn(|i| (q.rho_f / q.tau + 2.0 * q.mu) * u[i] + gp[i])
    }

    /// `g = (c0/τ) φ - (α/τ) Δw - κ Δφ`, using `Δw = -2w`, `Δφ = -8π² φ`.
    pub fn g(&self, z: &[f64; 2]) -> f64 {
        let q = &self.params;
        let phi = self.phi(z);
        q.c0 / q.tau * phi + 2.0 * q.alpha / q.tau * self.w(z) + 8.0 * PI * PI * q.kappa * phi
    }

    /// Plate load `m` such that `(ρ_p/τ²) w + D Δ²w + α Δφ = m - φ`.
    pub fn m(&self, z: &[f64; 2]) -> f64 {
        let q = &self.params;
        let w = self.w(z);
        let phi = self.phi(z);
        q.rho_p / (q.tau * q.tau) * w + 4.0 * q.d * w - 8.0 * PI * PI * q.alpha * phi + phi
    }

    /// Stress `σ = μ ∇u - p I`.
    pub fn stress(&self, x: &Point) -> [[f64; 3]; 3] {
        let g = self.grad_u(x);
        let p = self.p(x);
        std::array::from_fn(|i| std::array::from_fn(|j| self.params.mu * g[i][j] - if i == j { p } else { 0.0 }))
    }

    /// Traction `σ n` on the natural boundary.
    pub fn traction(&self, x: &Point, n: &Point) -> [f64; 3] {
        let s = self.stress(x);
        std::array::from_fn(|i| geom::dot(&s[i], n))
    }

    /// Residual of the interface conditions, `(I - n nᵀ)(σ n + γ u)` with `n = e3`,
    /// which the manufactured pair does not satisfy and is moved to the load.
    pub fn interface_load(&self, x: &Point) -> [f64; 3] {
        let n = [0.0, 0.0, 1.0];
        let t = self.traction(x, &n);
        let u = self.u(x);
        [t[0] + self.params.gamma * u[0], t[1] + self.params.gamma * u[1], 0.0]
    }
}

/// Computable errors of one refinement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub h_bulk: f64,
    pub h_plate: f64,
    pub e_u: f64,
    pub e_p: f64,
    pub e_w: f64,
    pub e_phi: f64,
    pub e_total: f64,
    pub iterations: usize,
}

/// Convergence rates between consecutive levels (`None` on the first level).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rates {
    pub total: Option<f64>,
    pub u: Option<f64>,
    pub p: Option<f64>,
    pub w: Option<f64>,
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocTable {
    pub reports: Vec<ErrorReport>,
    pub rates: Vec<Rates>,
}

/// `log(e2/e1) / log(h2/h1)`.
pub fn rate(e1: f64, e2: f64, h1: f64, h2: f64) -> f64 {
    (e2 / e1).ln() / (h2 / h1).ln()
}

/// Rates per consecutive pair; bulk fields and the total use `h_bulk`, plate fields `h_plate`.
pub fn eoc(reports: &[ErrorReport]) -> Result<EocTable> {
    if reports.len() < 2 {
        return Err(VemError::Config("convergence rates need at least two levels".into()));
    }
    let mut rates = vec![Rates::default()];
    for w in reports.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.h_bulk == b.h_bulk || a.h_plate == b.h_plate {
            return Err(VemError::Config("convergence rates need distinct mesh sizes".into()));
        }
        rates.push(Rates {
            total: Some(rate(a.e_total, b.e_total, a.h_bulk, b.h_bulk)),
            u: Some(rate(a.e_u, b.e_u, a.h_bulk, b.h_bulk)),
            p: Some(rate(a.e_p, b.e_p, a.h_bulk, b.h_bulk)),
            w: Some(rate(a.e_w, b.e_w, a.h_plate, b.h_plate)),
            phi: Some(rate(a.e_phi, b.e_phi, a.h_plate, b.h_plate)),
        });
    }
    Ok(EocTable {
        reports: reports.to_vec(),
        rates,
    })
}

impl EocTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h_bulk,h_plate,e_total,r_total,e_u,r_u,e_p,r_p,e_w,r_w,e_phi,r_phi,iters\n");
        let f = |r: Option<f64>| r.map(|v| format!("{v:.4}")).unwrap_or_default();
        for (j, (e, r)) in self.reports.iter().zip(&self.rates).enumerate() {
            let _ = writeln!(
                s,
                "{j},{:.6e},{:.6e},{:.6e},{},{:.6e},{},{:.6e},{},{:.6e},{},{:.6e},{},{}",
                e.h_bulk,
                e.h_plate,
                e.e_total,
                f(r.total),
                e.e_u,
                f(r.u),
                e.e_p,
                f(r.p),
                e.e_w,
                f(r.w),
                e.e_phi,
                f(r.phi),
                e.iterations
            );
        }
        s
    }

    /// Fixed-width table for the terminal.
    pub fn render(&self) -> String {
        let mut s = format!(
            "{:>9} {:>9} {:>9} {:>5} {:>9} {:>5} {:>9} {:>5} {:>9} {:>5} {:>9} {:>5} {:>3}\n",
            "h_bulk", "h_plate", "e_total", "r", "e_u", "r", "e_p", "r", "e_w", "r", "e_phi", "r", "it"
        );
        let f = |r: Option<f64>| r.map(|v| format!("{v:5.2}")).unwrap_or_else(|| "    *".into());
        for (e, r) in self.reports.iter().zip(&self.rates) {
            let _ = writeln!(
                s,
                "{:9.2e} {:9.2e} {:9.2e} {} {:9.2e} {} {:9.2e} {} {:9.2e} {} {:9.2e} {} {:>3}",
                e.h_bulk,
                e.h_plate,
                e.e_total,
                f(r.total),
                e.e_u,
                f(r.u),
                e.e_p,
                f(r.p),
                e.e_w,
                f(r.w),
                e.e_phi,
                f(r.phi),
                e.iterations
            );
        }
        s
    }
}

/// Full-norm errors of the projected discrete fields against an exact solution.
pub fn compute_errors(disc: &Discretization, layout: &DofLayout, x: &[f64], exact: &dyn ExactSolution) -> ErrorReport {
    use rayon::prelude::*;
    let (eu, ep): (f64, f64) = disc
        .cells
        .par_iter()
        .map(|el| {
            let d: Vec<f64> = el.global_dofs.iter().map(|&g| x[g]).collect();
            let coef = &el.pi_nabla * nalgebra::DVector::from_vec(d);
            let b1 = el.basis.with_degree(1);
            let pc: Vec<f64> = (0..4).map(|a| x[layout.p_dof(el.cell, a)]).collect();
            let mut su = 0.0;
            let mut sp = 0.0;
            for (pt, w) in el.quad.iter() {
                let (v, g) = el.eval_vector(coef.as_slice(), pt);
                let ue = exact.u(pt);
                let ge = exact.grad_u(pt);
                for c in 0..3 {
                    su += w * (ue[c] - v[c]).powi(2);
                    for j in 0..3 {
                        su += w * (ge[c][j] - g[c][j]).powi(2);
                    }
                }
                let ph: f64 = b1.eval(pt).iter().zip(&pc).map(|(m, c)| m * c).sum();
                sp += w * (exact.p(pt) - ph).powi(2);
            }
            (su, sp)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let (ephi, ew): (f64, f64) = disc
        .pressures
        .par_iter()
        .zip(&disc.plates)
        .map(|(pel, wel)| {
            let dphi =
                nalgebra::DVector::from_iterator(pel.n_dofs(), pel.global_dofs().iter().map(|&v| x[layout.phi_dof(v)]));
            let cphi = &pel.pi_nabla * dphi;
            let dw = nalgebra::DVector::from_iterator(
                wel.n_dofs(),
                wel.global_dofs().iter().map(|&g| x[layout.off_w() + g]),
            );
            let cw = &wel.pi_nabla2 * dw;
            let b1 = pel.geo.basis(1);
            let b2 = wel.geo.basis(2);
            let hs = b2.hessian(&wel.geo.centroid);
            let mut sphi = 0.0;
            let mut sw = 0.0;
            for (pt, wq) in pel.geo.quad.iter() {
                let z = [pt[0], pt[1]];
                let v = b1.eval(pt);
                let g = b1.grad(pt);
                let val: f64 = (0..3).map(|a| cphi[a] * v[a]).sum();
                let gr: [f64; 2] = std::array::from_fn(|c| (0..3).map(|a| cphi[a] * g[a][c]).sum());
                let ge = exact.grad_phi(&z);
                sphi += wq * ((exact.phi(&z) - val).powi(2) + (ge[0] - gr[0]).powi(2) + (ge[1] - gr[1]).powi(2));
                let v = b2.eval(pt);
                let g = b2.grad(pt);
                let val: f64 = (0..6).map(|a| cw[a] * v[a]).sum();
                let gr: [f64; 2] = std::array::from_fn(|c| (0..6).map(|a| cw[a] * g[a][c]).sum());
                let he = exact.hess_w(&z);
                let ge = exact.grad_w(&z);
                let mut s = (exact.w(&z) - val).powi(2) + (ge[0] - gr[0]).powi(2) + (ge[1] - gr[1]).powi(2);
                for i in 0..2 {
                    for j in 0..2 {
                        let hh: f64 = (0..6).map(|a| cw[a] * hs[a][i][j]).sum();
                        s += (he[i][j] - hh).powi(2);
                    }
                }
                sw += wq * s;
            }
            (sphi, sw)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let (e_u, e_p, e_w, e_phi) = (eu.sqrt(), ep.sqrt(), ew.sqrt(), ephi.sqrt());
    ErrorReport {
        h_bulk: disc.h_bulk(),
        h_plate: disc.h_plate(),
        e_u,
        e_p,
        e_w,
        e_phi,
        e_total: (e_u * e_u + e_p * e_p + e_w * e_w + e_phi * e_phi).sqrt(),
        iterations: 0,
    }
}

/// `‖div u_h‖_{0,Ω}` from the cellwise divergence representation.
pub fn divergence_norm(disc: &Discretization, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for el in &disc.cells {
        let d = nalgebra::DVector::from_iterator(el.n_dofs(), el.global_dofs.iter().map(|&g| x[g]));
        let c = &el.div_rep * d;
        s += c.dot(&(&el.mass1 * &c));
    }
    s.max(0.0).sqrt()
}

/// `‖Π∇ u_h‖_{1,Ω}`.
pub fn velocity_h1_norm(disc: &Discretization, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for el in &disc.cells {
        let d = nalgebra::DVector::from_iterator(el.n_dofs(), el.global_dofs.iter().map(|&g| x[g]));
        let coef = &el.pi_nabla * d;
        for (pt, w) in el.quad.iter() {
            let (v, g) = el.eval_vector(coef.as_slice(), pt);
            s += w * (v.iter().map(|a| a * a).sum::<f64>() + g.iter().flatten().map(|a| a * a).sum::<f64>());
        }
    }
    s.sqrt()
}

/// Everything produced by one Example-1 solve.
pub struct LevelResult {
    pub disc: Discretization,
    pub layout: DofLayout,
    pub solution: SolutionFields,
    pub report: ErrorReport,
}

/// Assembles and solves Example 1 on a tagged mesh, then evaluates the errors.
pub fn solve_example1(mesh: PolyMesh3, params: &ModelParams, cfg: &SolverConfig) -> Result<LevelResult> {
    params.validate()?;
    let disc = Discretization::new(mesh)?;
    check_example1_frame(&disc)?;
    let case = example1_case(*params);
    let mut layout = coupling::build_layout(&disc, &BcSpec::example1())?;
    let interp = interpolate_case(&disc, &layout, &case)?;
    layout.prescribe(&interp);
    let f = |x: &Point| case.f(x);
    let g = |z: &[f64; 2]| case.g(z);
    let m = |z: &[f64; 2]| case.m(z);
    let tr = |x: &Point, n: &Point| case.traction(x, n);
    let il = |x: &Point| case.interface_load(x);
    let loads = Loads {
        f: &f,
        g: &g,
        m: &m,
        traction: Some(&tr),
        interface: Some(&il),
    };
    let sys = coupling::assemble(&disc, params, &loads, &layout)?;
    let solution = solver::solve(&sys, cfg)?;
    let mut report = compute_errors(&disc, &layout, &solution.x, &case);
    report.iterations = solution.iterations;
    Ok(LevelResult {
        disc,
        layout,
        solution,
        report,
    })
}

/// DOF interpolant of any exact solution.
pub fn interpolate_case(disc: &Discretization, layout: &DofLayout, case: &dyn ExactSolution) -> Result<Vec<f64>> {
    let u = |x: &Point| case.u(x);
    let du = |x: &Point| case.div_u(x);
    let p = |x: &Point| case.p(x);
    let phi = |z: &[f64; 2]| case.phi(z);
    let w = |z: &[f64; 2]| (case.w(z), case.grad_w(z));
    coupling::interpolate(
        disc,
        layout,
        &ExactFields {
            u: &u,
            div_u: &du,
            p: &p,
            phi: &phi,
            w: &w,
        },
    )
}

/// The manufactured plate fields are written in `(x1, x2)`; the interface
/// must be the plane `x3 = 1` with the standard in-plane axes.
fn check_example1_frame(disc: &Discretization) -> Result<()> {
    let fr = &disc.surface.frame;
    let ok = (fr.normal[2] - 1.0).abs() < 1e-12
        && (fr.e1[0] - 1.0).abs() < 1e-12
        && (fr.e2[1] - 1.0).abs() < 1e-12
        && fr.to_plane(&[0.0, 0.0, 1.0]).iter().all(|v| v.abs() < 1e-12);
    if ok {
        Ok(())
    } else {
        Err(VemError::Config(
            "Example 1 needs the interface on x3 = 1 with outward normal e3".into(),
        ))
    }
}

/// Mesh source of a study.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshFamily {
    /// Uniform hexahedral meshes with the listed cells per axis.
    Cube(Vec<usize>),
    /// Imported meshes in the sectioned text format.
    Import(Vec<PathBuf>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub family: MeshFamily,
    pub params: ModelParams,
    pub solver: SolverConfig,
    pub output_dir: Option<PathBuf>,
}

/// Parses the flat `key = value` study format. Relative import paths are
/// resolved against `base`.
pub fn parse_study_config(text: &str, base: &Path) -> Result<StudyConfig> {
    let mut family = None::<String>;
    let mut levels = None::<String>;
    let mut files = None::<String>;
    let mut params = ModelParams::unity();
    let mut solver = SolverConfig::default();
    let mut output_dir = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| VemError::Parse { line: i + 1, msg };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
        let (k, v) = (k.trim(), v.trim());
        let num = |v: &str| v.parse::<f64>().map_err(|e| err(format!("bad number for {k}: {e}")));
        match k {
            "mesh.family" => family = Some(v.to_string()),
            "mesh.levels" => levels = Some(v.to_string()),
            "mesh.files" => files = Some(v.to_string()),
            "solver.mode" => solver.mode = v.parse::<SolveMode>()?,
            "solver.tol" => solver.tol = num(v)?,
            "solver.max_iter" => solver.max_iter = v.parse().map_err(|e| err(format!("bad integer for {k}: {e}")))?,
            "output.dir" => output_dir = Some(base.join(v)),
            _ => match k.strip_prefix("params.") {
                Some(name) => params.set(name, num(v)?)?,
                None => return Err(err(format!("unknown key '{k}'"))),
            },
        }
    }
    let family = match family.as_deref() {
        Some("cube") => {
            let lv = levels.ok_or_else(|| VemError::Config("mesh.levels is required for the cube family".into()))?;
            let ns = lv
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|e| VemError::Config(format!("bad level '{s}': {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            MeshFamily::Cube(ns)
        }
        Some("import") => {
            let fl = files.ok_or_else(|| VemError::Config("mesh.files is required for imported meshes".into()))?;
            MeshFamily::Import(
                fl.split(',')
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .map(|s| base.join(s))
                    .collect(),
            )
        }
        Some(other) => return Err(VemError::Config(format!("unknown mesh family '{other}'"))),
        None => return Err(VemError::Config("mesh.family is required".into())),
    };
    let n_levels = match &family {
        MeshFamily::Cube(v) => v.len(),
        MeshFamily::Import(v) => v.len(),
    };
    if n_levels == 0 {
        return Err(VemError::Config("the refinement list is empty".into()));
    }
    params.validate()?;
    solver.validate()?;
    Ok(StudyConfig {
        family,
        params,
        solver,
        output_dir,
    })
}

/// Loads a mesh from disk, applying the Example-1 tagging when the file
/// carries no interface tags.
pub fn load_mesh(path: &Path) -> Result<PolyMesh3> {
    let file = std::fs::File::open(path)?;
    let m = mesh::import_mesh(std::io::BufReader::new(file))?;
    if m.faces_with_tag(BoundaryTag::Sigma).is_empty() {
        mesh::tag_boundaries(m, &TagRule::example1())
    } else {
        Ok(m)
    }
}

fn level_mesh(family: &MeshFamily, j: usize) -> Result<PolyMesh3> {
    match family {
        MeshFamily::Cube(ns) => mesh::tag_boundaries(
            mesh::generate_cube_mesh(ns[j], [0.0; 3], [1.0; 3])?,
            &TagRule::example1(),
        ),
        MeshFamily::Import(paths) => load_mesh(&paths[j]),
    }
}

/// Mesh export followed by DOF and projected-polynomial coefficient sections.
pub fn export_fields(level: &LevelResult) -> String {
    let d = &level.disc;
    let l = &level.layout;
    let x = &level.solution.x;
    let mut s = d.mesh.export();
    let mut section = |name: &str, rows: Vec<Vec<f64>>| {
        let _ = writeln!(s, "{name} {}", rows.len());
        for r in rows {
            let v: Vec<String> = r.iter().map(|a| format!("{a:.17e}")).collect();
            let _ = writeln!(s, "{}", v.join(" "));
        }
    };
    section("VELOCITY_DOFS", x[l.u_range()].iter().map(|v| vec![*v]).collect());
    section(
        "VELOCITY_PROJECTION",
        d.cells
            .iter()
            .map(|el| {
                let dv = nalgebra::DVector::from_iterator(el.n_dofs(), el.global_dofs.iter().map(|&g| x[g]));
                let mut row = el.center.to_vec();
                row.push(el.h);
                row.extend((&el.pi_nabla * dv).iter());
                row
            })
            .collect(),
    );
    section(
        "PRESSURE",
        d.cells
            .iter()
            .map(|el| {
                let mut row = el.center.to_vec();
                row.push(el.h);
                row.extend((0..4).map(|a| x[l.p_dof(el.cell, a)]));
                row
            })
            .collect(),
    );
    section(
        "PLATE_VERTICES",
        d.surface
            .vertices
            .iter()
            .enumerate()
            .map(|(v, z)| {
                vec![
                    z[0],
                    z[1],
                    x[l.phi_dof(v)],
                    x[l.w_dof(v, 0)],
                    x[l.w_dof(v, 1)],
                    x[l.w_dof(v, 2)],
                ]
            })
            .collect(),
    );
    section(
        "DEFLECTION_PROJECTION",
        d.plates
            .iter()
            .map(|el| {
                let dv =
                    nalgebra::DVector::from_iterator(el.n_dofs(), el.global_dofs().iter().map(|&g| x[l.off_w() + g]));
                let mut row = el.geo.centroid.to_vec();
                row.push(el.geo.h);
                row.extend((&el.pi_nabla2 * dv).iter());
                row
            })
            .collect(),
    );
    s
}

/// Runs every level, writes `eoc.csv` and `fields_<j>.vem` when an output
/// directory is configured, and returns the rate table.
pub fn run_study(cfg: &StudyConfig) -> Result<EocTable> {
    let n = match &cfg.family {
        MeshFamily::Cube(v) => v.len(),
        MeshFamily::Import(v) => v.len(),
    };
    if n == 0 {
        return Err(VemError::Config("the refinement list is empty".into()));
    }
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut reports = Vec::with_capacity(n);
    for j in 0..n {
        let wrap = |e: VemError| VemError::Level {
            level: j,
            source: Box::new(e),
        };
        let mesh = level_mesh(&cfg.family, j).map_err(wrap)?;
        let level = solve_example1(mesh, &cfg.params, &cfg.solver).map_err(wrap)?;
        log::info!(
            "level {j}: h = {:.3e}, {} DOFs, e_total = {:.3e}",
            level.report.h_bulk,
            level.layout.total(),
            level.report.e_total
        );
        if let Some(dir) = &cfg.output_dir {
            std::fs::write(dir.join(format!("fields_{j}.vem")), export_fields(&level)).map_err(|e| wrap(e.into()))?;
        }
        reports.push(level.report);
    }
    let table = if reports.len() >= 2 {
        eoc(&reports)?
    } else {
        EocTable {
            rates: vec![Rates::default(); reports.len()],
            reports,
        }
    };
    if let Some(dir) = &cfg.output_dir {
        std::fs::write(dir.join("eoc.csv"), table.to_csv())?;
    }
    Ok(table)
}
