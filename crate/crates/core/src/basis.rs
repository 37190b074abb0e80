//! Scaled monomial bases and the vector complement spaces `x ∧ P_{k-1}` (3D)
//! and `x^⊥ P_{k-1}` (2D).
//!
//! A scaled monomial is `((x - x_D) / h_D)^t` for a multi-index `t`. Members are
//! ordered graded-lexicographically (by total degree, then lexicographically
//! with the first coordinate dominant), so `1, x, y, z, x², xy, xz, y², yz, z², …`.

/// Multi-index of a monomial; unused trailing entries are zero.
pub type Exponent = [u8; 3];

/// Number of monomials of total degree `<= degree` in `dim` variables.
pub fn monomial_count(dim: usize, degree: usize) -> usize {
    // C(degree + dim, dim)
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 1..=dim {
        num *= degree + i;
        den *= i;
    }
    num / den
}

fn graded_lex(dim: usize, degree: usize) -> Vec<Exponent> {
    let mut out = Vec::with_capacity(monomial_count(dim, degree));
    for d in 0..=degree as u8 {
        match dim {
            1 => out.push([d, 0, 0]),
            2 => {
                for a in (0..=d).rev() {
                    out.push([a, d - a, 0]);
                }
            }
            3 => {
                for a in (0..=d).rev() {
                    for b in (0..=d - a).rev() {
                        out.push([a, b, d - a - b]);
                    }
                }
            }
            _ => panic!("unsupported dimension {dim}"),
        }
    }
    out
}

/// Scaled monomials `M_k(D)` centred at `x_D` with scaling `h_D`.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    dim: usize,
    degree: usize,
    center: [f64; 3],
    h: f64,
    exps: Vec<Exponent>,
}

impl MonomialBasis {
    /// `center` must have at least `dim` entries; extra entries are ignored.
    pub fn new(dim: usize, center: &[f64], h: f64, degree: usize) -> Self {
        assert!((1..=3).contains(&dim), "dimension must be 1, 2 or 3");
        assert!(h > 0.0, "scaling length must be positive");
        let mut c = [0.0; 3];
        c[..dim].copy_from_slice(&center[..dim]);
        Self {
            dim,
            degree,
            center: c,
            h,
            exps: graded_lex(dim, degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.dim]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self) -> &[Exponent] {
        &self.exps
    }

    /// Total degree of member `i`.
    pub fn degree_of(&self, i: usize) -> usize {
        self.exps[i].iter().map(|&e| e as usize).sum()
    }

    /// Number of members of degree `<= d`.
    pub fn count_up_to(&self, d: usize) -> usize {
        monomial_count(self.dim, d.min(self.degree))
    }

    pub fn index_of(&self, e: &Exponent) -> Option<usize> {
        self.exps.iter().position(|x| x == e)
    }

    /// Same centre and scaling, different degree.
    pub fn with_degree(&self, degree: usize) -> Self {
        Self::new(self.dim, &self.center, self.h, degree)
    }

    fn scaled(&self, x: &[f64]) -> [f64; 3] {
        let mut s = [0.0; 3];
        for d in 0..self.dim {
            s[d] = (x[d] - self.center[d]) / self.h;
        }
        s
    }

    fn powers(&self, s: &[f64; 3]) -> [[f64; 8]; 3] {
        let mut p = [[0.0; 8]; 3];
        for d in 0..3 {
            p[d][0] = 1.0;
            for e in 1..=self.degree.min(7) {
                p[d][e] = p[d][e - 1] * s[d];
            }
        }
        p
    }

    /// Values of all members at `x`.
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let p = self.powers(&self.scaled(x));
        for (o, e) in out.iter_mut().zip(&self.exps) {
            *o = p[0][e[0] as usize] * p[1][e[1] as usize] * p[2][e[2] as usize];
        }
    }

    /// Gradients (entries beyond `dim` are zero).
    pub fn grad(&self, x: &[f64]) -> Vec<[f64; 3]> {
        let p = self.powers(&self.scaled(x));
        let ih = 1.0 / self.h;
        self.exps
            .iter()
            .map(|e| {
                let mut g = [0.0; 3];
                for d in 0..self.dim {
                    if e[d] == 0 {
                        continue;
                    }
                    let mut v = e[d] as f64 * ih;
                    for dd in 0..3 {
                        let pw = if dd == d { e[dd] - 1 } else { e[dd] };
                        v *= p[dd][pw as usize];
                    }
                    g[d] = v;
                }
                g
            })
            .collect()
    }

    /// Hessians (entries beyond `dim` are zero).
    pub fn hessian(&self, x: &[f64]) -> Vec<[[f64; 3]; 3]> {
        let p = self.powers(&self.scaled(x));
        let ih2 = 1.0 / (self.h * self.h);
        self.exps
            .iter()
            .map(|e| {
                let mut hm = [[0.0; 3]; 3];
                for a in 0..self.dim {
                    for b in 0..self.dim {
                        let mut ee = [e[0] as i32, e[1] as i32, e[2] as i32];
                        let mut f = ee[a] as f64;
                        ee[a] -= 1;
                        f *= ee[b] as f64;
                        ee[b] -= 1;
                        if f == 0.0 {
                            continue;
                        }
                        let mut v = f * ih2;
                        for dd in 0..3 {
                            v *= p[dd][ee[dd] as usize];
                        }
                        hm[a][b] = v;
                    }
                }
                hm
            })
            .collect()
    }

    /// Evaluates the polynomial with the given coefficients.
    pub fn eval_poly(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        self.eval(x).iter().zip(coeffs).map(|(m, c)| m * c).sum()
    }
}

/// Coefficient vectors (over the vector monomial basis, component-major:
/// index `c * n_k + i`) of the gradients of the non-constant members of
/// `M_{k+1}`, up to the common factor `1/h`.
pub fn gradient_fields(dim: usize, k: usize) -> Vec<Vec<f64>> {
    let lower = graded_lex(dim, k);
    let n_k = lower.len();
    let upper = graded_lex(dim, k + 1);
    let mut out = Vec::new();
    for e in upper.iter().skip(1) {
        let mut f = vec![0.0; dim * n_k];
        for c in 0..dim {
            if e[c] == 0 {
                continue;
            }
            let mut r = *e;
            r[c] -= 1;
            let i = lower.iter().position(|x| *x == r).expect("lower degree monomial");
            f[c * n_k + i] = e[c] as f64;
        }
        out.push(f);
    }
    out
}

/// Scaled basis of `G_k^⊥`: `x ∧ P_{k-1}` in 3D, `x^⊥ P_{k-1}` in 2D, with
/// `x` measured from the element centre and scaled by `h`.
///
/// Members are stored as coefficient vectors over the vector monomials of
/// degree `k` (component-major), so they are independent of the element
/// geometry.
#[derive(Debug, Clone)]
pub struct ComplementBasis {
    dim: usize,
    degree: usize,
    fields: Vec<Vec<f64>>,
}

impl ComplementBasis {
    pub fn new(dim: usize, degree: usize) -> Self {
        assert!(dim == 2 || dim == 3, "complement basis only in 2D and 3D");
        let exps_k = graded_lex(dim, degree);
        let n_k = exps_k.len();
        let idx = |e: Exponent| exps_k.iter().position(|x| *x == e).expect("exponent in range");
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        if degree >= 1 {
            let lower = graded_lex(dim, degree - 1);
            for eb in &lower {
                // multiply a linear scaled coordinate into m_beta
                let shift = |d: usize| {
                    let mut e = *eb;
                    e[d] += 1;
                    idx(e)
                };
                if dim == 2 {
                    // (y, -x) m_beta
                    let mut f = vec![0.0; 2 * n_k];
                    f[shift(1)] += 1.0;
                    f[n_k + shift(0)] -= 1.0;
                    candidates.push(f);
                } else {
                    for c in 0..3 {
                        // (x × e_c) m_beta
                        let mut f = vec![0.0; 3 * n_k];
                        match c {
                            0 => {
                                f[n_k + shift(2)] += 1.0;
                                f[2 * n_k + shift(1)] -= 1.0;
                            }
                            1 => {
                                f[shift(2)] -= 1.0;
                                f[2 * n_k + shift(0)] += 1.0;
                            }
                            _ => {
                                f[shift(1)] += 1.0;
                                f[n_k + shift(0)] -= 1.0;
                            }
                        }
                        candidates.push(f);
                    }
                }
            }
        }
        Self {
            dim,
            degree,
            fields: select_independent(candidates, 1e-10),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn fields(&self) -> &[Vec<f64>] {
        &self.fields
    }

    /// Expected dimension of `G_k^⊥`.
    pub fn expected_dimension(dim: usize, k: usize) -> usize {
        if dim == 2 {
            if k == 0 {
                0
            } else {
                monomial_count(2, k - 1)
            }
        } else {
            3 * monomial_count(3, k) + 1 - monomial_count(3, k + 1)
        }
    }
}

/// Greedy Gram–Schmidt selection of a linearly independent subset.
fn select_independent(candidates: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for c in candidates {
        let mut r = c.clone();
        for q in &ortho {
            let p: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= p * qi;
            }
        }
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > tol * scale.max(1.0) {
            ortho.push(r.iter().map(|v| v / n).collect());
            kept.push(c);
        }
    }
    kept
}
