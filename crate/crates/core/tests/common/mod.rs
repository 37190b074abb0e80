#![allow(dead_code)]

pub mod manufactured;
pub mod patch;
pub mod spectral;

use biotvem::coupling::Discretization;
use biotvem::mesh::{generate_cube_mesh, tag_boundaries, PolyMesh3, TagRule};

pub fn cube(n: usize) -> PolyMesh3 {
    tag_boundaries(generate_cube_mesh(n, [0.0; 3], [1.0; 3]).unwrap(), &TagRule::example1()).unwrap()
}

pub fn cube_disc(n: usize) -> Discretization {
    Discretization::new(cube(n)).unwrap()
}

pub const VARS: usize = 3;
pub const ORDER: usize = 4;

/// Truncated Taylor expansion in three variables up to total degree 4.
/// Arithmetic on jets differentiates exactly, so derivatives read off the
/// coefficients are an oracle independent of any hand-derived formula.
#[derive(Debug, Clone)]
pub struct Jet {
    c: Vec<f64>,
}

fn exponents() -> &'static [[usize; VARS]] {
    use std::sync::OnceLock;
    static E: OnceLock<Vec<[usize; VARS]>> = OnceLock::new();
    E.get_or_init(|| {
        let mut v = Vec::new();
        for d in 0..=ORDER {
            for a in (0..=d).rev() {
                for b in (0..=d - a).rev() {
                    v.push([a, b, d - a - b]);
                }
            }
        }
        v
    })
}

fn index(e: &[usize; VARS]) -> Option<usize> {
    exponents().iter().position(|x| x == e)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = vec![0.0; exponents().len()];
        c[0] = v;
        Self { c }
    }

    /// Variable `i` expanded about `x0`.
    pub fn var(i: usize, x0: f64) -> Self {
        let mut j = Self::constant(x0);
        let mut e = [0; VARS];
        e[i] = 1;
        j.c[index(&e).unwrap()] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative with multi-index `e` at the expansion point.
    pub fn d(&self, e: [usize; VARS]) -> f64 {
        let k = index(&e).expect("derivative order above jet order");
        self.c[k] * e.iter().map(|&a| factorial(a)).product::<f64>()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            c: self.c.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let ex = exponents();
        let mut c = vec![0.0; ex.len()];
        for (i, a) in ex.iter().enumerate() {
            if self.c[i] == 0.0 {
                continue;
            }
            for (j, b) in ex.iter().enumerate() {
                let e = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                if e.iter().sum::<usize>() <= ORDER {
                    c[index(&e).unwrap()] += self.c[i] * o.c[j];
                }
            }
        }
        Self { c }
    }

    fn nilpotent(&self) -> Self {
        let mut d = self.clone();
        d.c[0] = 0.0;
        d
    }

    /// `sin(a0 + δ) = sin a0 cos δ + cos a0 sin δ` with the series of `δ` truncated.
    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let (sd, cd) = self.series();
        cd.scale(s).add(&sd.scale(c))
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let (sd, cd) = self.series();
        cd.scale(c).sub(&sd.scale(s))
    }

    /// `(sin δ, cos δ)` for the nilpotent part `δ`.
    fn series(&self) -> (Self, Self) {
        let d = self.nilpotent();
        let mut pow = Self::constant(1.0);
        let mut sin = Self::constant(0.0);
        let mut cos = Self::constant(0.0);
        for k in 0..=ORDER {
            let t = pow.scale(1.0 / factorial(k));
            match k % 4 {
                0 => cos = cos.add(&t),
                1 => sin = sin.add(&t),
                2 => cos = cos.sub(&t),
                _ => sin = sin.sub(&t),
            }
            pow = pow.mul(&d);
        }
        (sin, cos)
    }
}

pub fn point_jets(x: &[f64; 3]) -> [Jet; 3] {
    [Jet::var(0, x[0]), Jet::var(1, x[1]), Jet::var(2, x[2])]
}

/// Regular dodecahedron centred at `c` with circumradius `sqrt(3) r`,
/// written as a single-cell mesh file.
pub fn dodecahedron_mesh_text(c: [f64; 3], r: f64) -> String {
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<[f64; 3]> = Vec::new();
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                v.push([sx, sy, sz]);
            }
        }
    }
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            v.push([0.0, s1 / g, s2 * g]);
            v.push([s1 / g, s2 * g, 0.0]);
            v.push([s1 * g, 0.0, s2 / g]);
        }
    }
    // face normals are the icosahedron vertices
    let mut normals = Vec::new();
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            normals.push([0.0, s2 * g, s1]);
            normals.push([s2 * g, s1, 0.0]);
            normals.push([s1, 0.0, s2 * g]);
        }
    }
    let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let mut faces = Vec::new();
    for n in &normals {
        let top = v.iter().map(|p| dot(p, n)).fold(f64::MIN, f64::max);
        let mut ids: Vec<usize> = (0..v.len()).filter(|&i| (dot(&v[i], n) - top).abs() < 1e-9).collect();
        assert_eq!(ids.len(), 5);
        let ctr: [f64; 3] = std::array::from_fn(|k| ids.iter().map(|&i| v[i][k]).sum::<f64>() / 5.0);
        let e1: [f64; 3] = std::array::from_fn(|k| v[ids[0]][k] - ctr[k]);
        let e2 = [
            n[1] * e1[2] - n[2] * e1[1],
            n[2] * e1[0] - n[0] * e1[2],
            n[0] * e1[1] - n[1] * e1[0],
        ];
        let ang = |i: usize| {
            let d: [f64; 3] = std::array::from_fn(|k| v[i][k] - ctr[k]);
            dot(&d, &e2).atan2(dot(&d, &e1))
        };
        ids.sort_by(|&a, &b| ang(a).partial_cmp(&ang(b)).unwrap());
        faces.push(ids);
    }
    let mut s = format!("VERTICES {}\n", v.len());
    for p in &v {
        s += &format!("{} {} {}\n", c[0] + r * p[0], c[1] + r * p[1], c[2] + r * p[2]);
    }
    s += &format!("FACES {}\n", faces.len());
    for f in &faces {
        s += &f.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        s += "\n";
    }
    s += "CELLS 1\n";
    s += &(0..12).map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
    s += "\n";
    s
}
