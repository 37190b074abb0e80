//! Jet-based residuals of the manufactured Example-1 fields.

use biotvem::harness::{example1_case, ManufacturedCase};
use biotvem::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{point_jets, Jet};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

pub fn jet_u(x: &[f64; 3]) -> [Jet; 3] {
    let [a, b, c] = point_jets(x);
    [c.cos().mul(&b.sin()), a.cos().mul(&c.sin()), b.cos().mul(&a.sin())]
}

pub fn jet_p(x: &[f64; 3]) -> Jet {
    let [a, b, _] = point_jets(x);
    a.scale(TWO_PI).sin().mul(&b.scale(TWO_PI).sin())
}

pub fn laplacian(j: &Jet) -> f64 {
    j.d([2, 0, 0]) + j.d([0, 2, 0]) + j.d([0, 0, 2])
}

/// Awkward but valid coefficients so that no term hides behind a unit factor.
pub fn params() -> ModelParams {
    ModelParams {
        rho_f: 1.3,
        mu: 0.7,
        gamma: 2.1,
        rho_p: 0.9,
        d: 1.6,
        alpha: 0.45,
        c0: 0.3,
        kappa: 1.9,
        tau: 0.6,
    }
}

pub fn samples(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect()
}

/// Plate fields built from the bulk pair on `x3 = 1`: `w = τ u·n`, `φ = -(σn)·n`.
pub fn plate_jets(case: &ManufacturedCase, z: &[f64; 2]) -> (Jet, Jet) {
    let x = [z[0], z[1], 1.0];
    let u = jet_u(&x);
    let p = jet_p(&x);
    let w = u[2].scale(case.params.tau);
    // σn·n = μ ∂3 u3 - p; ∂3 u3 and all its planar derivatives up to
    // third order vanish, so φ = p together with its planar derivatives
    for a in 0..=3 {
        for b in 0..=3 - a {
            assert!(u[2].d([a, b, 1]).abs() < 1e-15);
        }
    }
    (w, p)
}

/// Largest absolute residual of the bulk momentum, continuity and both plate
/// equations over `n` random points.
pub fn max_pde_residual(q: ModelParams, n: usize) -> f64 {
    let case = example1_case(q);
    let lap2 = |j: &Jet| j.d([2, 0, 0]) + j.d([0, 2, 0]);
    let mut worst: f64 = 0.0;
    for x in samples(n, 1) {
        let u = jet_u(&x);
        let p = jet_p(&x);
        let f = case.f(&x);
        let gp = [p.d([1, 0, 0]), p.d([0, 1, 0]), p.d([0, 0, 1])];
        for i in 0..3 {
            worst = worst.max((q.rho_f / q.tau * u[i].value() - q.mu * laplacian(&u[i]) + gp[i] - f[i]).abs());
        }
        worst = worst.max((u[0].d([1, 0, 0]) + u[1].d([0, 1, 0]) + u[2].d([0, 0, 1])).abs());
        let z = [x[0], x[1]];
        let (w, phi) = plate_jets(&case, &z);
        let bilap = w.d([4, 0, 0]) + 2.0 * w.d([2, 2, 0]) + w.d([0, 4, 0]);
        let rg = q.c0 / q.tau * phi.value() - q.alpha / q.tau * lap2(&w) - q.kappa * lap2(&phi) - case.g(&z);
        let rm = q.rho_p / (q.tau * q.tau) * w.value() + q.d * bilap + q.alpha * lap2(&phi) + phi.value() - case.m(&z);
        worst = worst.max(rg.abs()).max(rm.abs());
    }
    worst
}
