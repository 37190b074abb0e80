//! Monolithic direct solve and the bulk/plate fixed-point splitting.

use std::str::FromStr;

use crate::coupling::BlockSystem;
use crate::error::{Result, VemError};
use crate::sparse::{norm, CsrMatrix, SparseLu};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Monolithic,
    FixedPoint,
}

impl FromStr for SolveMode {
    type Err = VemError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monolithic" => Ok(Self::Monolithic),
            "fixed_point" => Ok(Self::FixedPoint),
            _ => Err(VemError::Config(format!("unknown solver mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub mode: SolveMode,
    /// Stopping tolerance on the l2 norm of the DOF increment.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative residual aimed at by iterative refinement.
    pub residual_target: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolveMode::Monolithic,
            tol: 1e-10,
            max_iter: 50,
            residual_target: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(VemError::Config(format!(
                "solver tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(VemError::Config("solver max iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Relative residual norms per field block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub u: f64,
    pub p: f64,
    pub phi: f64,
    pub w: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct SolutionFields {
    /// Full DOF vector `u | p | φ | w`.
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Increment norms of the fixed-point iteration (empty for monolithic solves).
    pub increments: Vec<f64>,
    pub residuals: Residuals,
    n: [usize; 4],
}

impl SolutionFields {
    fn new(x: Vec<f64>, sys: &BlockSystem, iterations: usize, increments: Vec<f64>) -> Self {
        let residuals = compute_residuals(sys, &x);
        let l = &sys.layout;
        Self {
            x,
            iterations,
            increments,
            residuals,
            n: [l.off_p(), l.off_phi(), l.off_w(), l.total()],
        }
    }
    pub fn u(&self) -> &[f64] {
        &self.x[..self.n[0]]
    }
    pub fn p(&self) -> &[f64] {
        &self.x[self.n[0]..self.n[1]]
    }
    pub fn phi(&self) -> &[f64] {
        &self.x[self.n[1]..self.n[2]]
    }
    pub fn w(&self) -> &[f64] {
        &self.x[self.n[2]..self.n[3]]
    }
}

fn relative(r: &[f64], b: &[f64]) -> f64 {
    let nb = norm(b);
    let nr = norm(r);
    if nb > 0.0 {
        nr / nb
    } else {
        nr
    }
}

/// Per-block relative residuals of the constrained system.
pub fn compute_residuals(sys: &BlockSystem, x: &[f64]) -> Residuals {
    let ax = sys.matrix.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(&sys.rhs).map(|(a, b)| b - a).collect();
    let l = &sys.layout;
    let part = |rg: std::ops::Range<usize>| relative(&r[rg.clone()], &sys.rhs[rg]);
    Residuals {
        u: part(l.u_range()),
        p: part(l.p_range()),
        phi: part(l.phi_range()),
        w: part(l.w_range()),
        total: relative(&r, &sys.rhs),
    }
}

pub fn solve(sys: &BlockSystem, cfg: &SolverConfig) -> Result<SolutionFields> {
    cfg.validate()?;
    match cfg.mode {
        SolveMode::Monolithic => solve_monolithic(sys, cfg),
        SolveMode::FixedPoint => solve_fixed_point(sys, cfg, None),
    }
}

/// Solves with one LU factorization and iterative refinement on
/// compensated residuals, stopping once the correction reaches round-off.
fn solve_refined(a: &CsrMatrix, lu: &SparseLu, b: &[f64], target: f64) -> Result<Vec<f64>> {
    let mut x = lu.solve(b)?;
    for _ in 0..6 {
        let r = a.residual_compensated(&x, b);
        let dx = lu.solve(&r)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        if norm(&dx) <= 4.0 * f64::EPSILON * norm(&x) && relative(&r, b) <= target {
            break;
        }
    }
    Ok(x)
}

pub fn solve_monolithic(sys: &BlockSystem, cfg: &SolverConfig) -> Result<SolutionFields> {
    let lu = SparseLu::new(&sys.matrix)?;
    let x = solve_refined(&sys.matrix, &lu, &sys.rhs, cfg.residual_target)?;
    let out = SolutionFields::new(x, sys, 1, Vec::new());
    if out.residuals.total > 1e-10 {
        return Err(VemError::Solver(format!(
            "relative residual {:.3e} above 1e-10 after refinement",
            out.residuals.total
        )));
    }
    Ok(out)
}

/// Alternates bulk Stokes solves (interface pressure frozen) and plate
/// solves (velocity frozen) until the DOF increment drops below the
/// tolerance. Both sub-matrices are factorized once. `initial` is a full
/// DOF vector to start from; the default is zero.
pub fn solve_fixed_point(sys: &BlockSystem, cfg: &SolverConfig, initial: Option<&[f64]>) -> Result<SolutionFields> {
    cfg.validate()?;
    let l = &sys.layout;
    let nb = l.off_phi();
    let n = l.total();
    let bulk = 0..nb;
    let plate = nb..n;
    let a_bb = sys.matrix.block(bulk.clone(), bulk.clone());
    let a_bp = sys.matrix.block(bulk.clone(), plate.clone());
    let a_pb = sys.matrix.block(plate.clone(), bulk.clone());
    let a_pp = sys.matrix.block(plate.clone(), plate.clone());
    let lu_b = SparseLu::new(&a_bb)?;
    let lu_p = SparseLu::new(&a_pp)?;
    let mut x = match initial {
        Some(x0) => {
            assert_eq!(x0.len(), n);
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut history = Vec::new();
    for it in 1..=cfg.max_iter {
        let coupling = a_bp.mul_vec(&x[plate.clone()]);
        let rb: Vec<f64> = sys.rhs[bulk.clone()]
            .iter()
            .zip(&coupling)
            .map(|(b, c)| b - c)
            .collect();
        let xb = solve_refined(&a_bb, &lu_b, &rb, cfg.residual_target)?;
        let coupling = a_pb.mul_vec(&xb);
        let rp: Vec<f64> = sys.rhs[plate.clone()]
            .iter()
            .zip(&coupling)
            .map(|(b, c)| b - c)
            .collect();
        let xp = solve_refined(&a_pp, &lu_p, &rp, cfg.residual_target)?;
        let new: Vec<f64> = xb.into_iter().chain(xp).collect();
        let inc = norm(&new.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        x = new;
        history.push(inc);
        log::debug!("fixed-point iteration {it}: increment {inc:.3e}");
        if inc < cfg.tol {
            return Ok(SolutionFields::new(x, sys, it, history));
        }
    }
    Err(VemError::NonConvergence {
        iterations: cfg.max_iter,
        last_increment: *history.last().unwrap_or(&f64::NAN),
        history,
    })
}
