//! Quadrature on segments, simplices, polygons and polyhedra.
//!
//! Simplex rules are collapsed-coordinate (Duffy) tensor products of
//! Gauss–Legendre rules. Polygons are fanned from their centroid and polyhedra
//! are coned from their centroid onto the fanned faces.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Result, VemError};
use crate::geom::{self, Point};

/// Default exactness for element integrals at degree 2.
pub const DEFAULT_EXACTNESS: usize = 6;

#[derive(Debug, Clone, Default)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: FnMut(&Point) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    fn extend(&mut self, other: QuadRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

/// Gauss–Legendre nodes and weights mapped to `[0, 1]`.
fn gauss_01(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("nonzero"));
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// Gauss rule on the segment `[a, b]` exact for degree `q`.
pub fn segment(a: &Point, b: &Point, q: usize) -> QuadRule {
    let len = geom::dist(a, b);
    let d = geom::sub(b, a);
    let mut r = QuadRule {
        exactness: q,
        ..Default::default()
    };
    for (s, w) in gauss_01(q / 2 + 1) {
        r.points.push(geom::axpy(a, s, &d));
        r.weights.push(w * len);
    }
    r
}

/// Collapsed Gauss rule on a triangle exact for degree `q`.
pub fn triangle(a: &Point, b: &Point, c: &Point, q: usize) -> QuadRule {
    let area = 0.5 * geom::norm(&geom::cross(&geom::sub(b, a), &geom::sub(c, a)));
    let e1 = geom::sub(b, a);
    let e2 = geom::sub(c, a);
    // the collapse Jacobian (1-u) adds one degree in u
    let n = (q + 2).div_ceil(2);
    let g = gauss_01(n);
    let mut r = QuadRule {
        exactness: q,
        ..Default::default()
    };
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            let s = u;
            let t = v * (1.0 - u);
            let p = geom::axpy(&geom::axpy(a, s, &e1), t, &e2);
            r.points.push(p);
            r.weights.push(wu * wv * (1.0 - u) * 2.0 * area);
        }
    }
    r
}

/// Collapsed Gauss rule on a tetrahedron exact for degree `q`.
pub fn tetrahedron(a: &Point, b: &Point, c: &Point, d: &Point, q: usize) -> QuadRule {
    let e1 = geom::sub(b, a);
    let e2 = geom::sub(c, a);
    let e3 = geom::sub(d, a);
    let vol = geom::dot(&e1, &geom::cross(&e2, &e3)).abs() / 6.0;
    let n = (q + 3).div_ceil(2);
    let g = gauss_01(n);
    let mut r = QuadRule {
        exactness: q,
        ..Default::default()
    };
    for &(u, wu) in &g {
        for &(v, wv) in &g {
            for &(x, wx) in &g {
                let s = u;
                let t = v * (1.0 - u);
                let z = x * (1.0 - u) * (1.0 - v);
                let p = geom::axpy(&geom::axpy(&geom::axpy(a, s, &e1), t, &e2), z, &e3);
                r.points.push(p);
                r.weights.push(wu * wv * wx * (1.0 - u).powi(2) * (1.0 - v) * 6.0 * vol);
            }
        }
    }
    r
}

fn segments_cross_2d(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2], tol: f64) -> bool {
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    (d1 > tol && d2 < -tol || d1 < -tol && d2 > tol) && (d3 > tol && d4 < -tol || d3 < -tol && d4 > tol)
}

/// Rejects polygons whose non-adjacent edges intersect.
pub fn check_simple(pts: &[Point]) -> Result<()> {
    let m = pts.len();
    if m < 3 {
        return Err(VemError::Geometry(format!("polygon with {m} vertices")));
    }
    let av = geom::area_vector(pts);
    let an = geom::norm(&av);
    if an <= 0.0 {
        return Err(VemError::Geometry("degenerate polygon with zero area".into()));
    }
    let n = geom::scale(&av, 1.0 / an);
    let (t1, t2) = geom::tangent_frame(&n, &geom::sub(&pts[1], &pts[0]));
    let c = geom::centroid_of(pts);
    let loc: Vec<[f64; 2]> = pts
        .iter()
        .map(|p| {
            let d = geom::sub(p, &c);
            [geom::dot(&d, &t1), geom::dot(&d, &t2)]
        })
        .collect();
    let tol = 1e-14 * an;
    for i in 0..m {
        for j in i + 1..m {
            if j == i + 1 || (i == 0 && j == m - 1) {
                continue;
            }
            if segments_cross_2d(loc[i], loc[(i + 1) % m], loc[j], loc[(j + 1) % m], tol) {
                return Err(VemError::Geometry(format!(
                    "self-intersecting polygon: edges {i} and {j} cross"
                )));
            }
        }
    }
    Ok(())
}

/// Fan rule on a planar polygon (vertices in loop order) exact for degree `q`.
pub fn quad_polygon(pts: &[Point], q: usize) -> Result<QuadRule> {
    check_simple(pts)?;
    Ok(polygon_fan(pts, &geom::centroid_of(pts), q))
}

fn polygon_fan(pts: &[Point], apex: &Point, q: usize) -> QuadRule {
    let mut r = QuadRule {
        exactness: q,
        ..Default::default()
    };
    let n = geom::area_vector(pts);
    let m = pts.len();
    for i in 0..m {
        let (a, b) = (&pts[i], &pts[(i + 1) % m]);
        // signed fan: triangles folded back over the apex subtract
        let s = geom::dot(&geom::cross(&geom::sub(a, apex), &geom::sub(b, apex)), &n);
        let mut t = triangle(apex, a, b, q);
        if s < 0.0 {
            t.weights.iter_mut().for_each(|w| *w = -*w);
        }
        r.extend(t);
    }
    r
}

/// Cone rule on a polyhedron given by its face loops, each oriented outward.
///
/// Fails if the face area vectors do not sum to zero (open cell).
pub fn quad_polyhedron(faces: &[Vec<Point>], q: usize) -> Result<QuadRule> {
    let mut sum = [0.0; 3];
    let mut all = Vec::new();
    for f in faces {
        sum = geom::add(&sum, &geom::area_vector(f));
        all.extend_from_slice(f);
    }
    let h = geom::diameter(&all);
    if geom::norm(&sum) > 1e-12 * h * h {
        return Err(VemError::Geometry(format!(
            "polyhedron is not closed: area vector sum {:.3e}",
            geom::norm(&sum)
        )));
    }
    let apex = geom::centroid_of(&all);
    let mut r = QuadRule {
        exactness: q,
        ..Default::default()
    };
    for f in faces {
        let fc = geom::centroid_of(f);
        let m = f.len();
        for i in 0..m {
            let (a, b) = (&f[i], &f[(i + 1) % m]);
            let det = geom::dot(
                &geom::sub(&fc, &apex),
                &geom::cross(&geom::sub(a, &apex), &geom::sub(b, &apex)),
            );
            let mut t = tetrahedron(&apex, &fc, a, b, q);
            if det < 0.0 {
                t.weights.iter_mut().for_each(|w| *w = -*w);
            }
            r.extend(t);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Vec<Point> {
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]]
    }

    fn unit_cube_faces() -> Vec<Vec<Point>> {
        let v = |i: usize| -> Point { [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64] };
        let loops = [
            [0, 2, 3, 1],
            [4, 5, 7, 6],
            [0, 1, 5, 4],
            [2, 6, 7, 3],
            [0, 4, 6, 2],
            [1, 3, 7, 5],
        ];
        loops.iter().map(|l| l.iter().map(|&i| v(i)).collect()).collect()
    }

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn segment_exactness() {
        for q in 0..10 {
            let r = segment(&[0.0; 3], &[2.0, 0.0, 0.0], q);
            for p in 0..=q as i32 {
                let v = r.integrate(|x| x[0].powi(p));
                let exact = 2f64.powi(p + 1) / (p + 1) as f64;
                assert!((v - exact).abs() < 1e-13 * exact, "q {q} p {p}");
            }
        }
    }

    #[test]
    fn reference_triangle_exactness() {
        // int x^a y^b over the unit simplex = a! b! / (a+b+2)!
        for q in 0..9 {
            let r = triangle(&[0.0; 3], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], q);
            for a in 0..=q as u32 {
                for b in 0..=(q as u32 - a) {
                    let v = r.integrate(|x| x[0].powi(a as i32) * x[1].powi(b as i32));
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!((v - exact).abs() < 1e-12 * exact, "q {q} a {a} b {b}");
                }
            }
        }
    }

    #[test]
    fn reference_tetrahedron_exactness() {
        for q in [0, 2, 4, 6, 7] {
            let r = tetrahedron(&[0.0; 3], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], q);
            for a in 0..=q as u32 {
                for b in 0..=(q as u32 - a) {
                    for c in 0..=(q as u32 - a - b) {
                        let v = r.integrate(|x| x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32));
                        let exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
                        assert!((v - exact).abs() < 1e-12 * exact);
                    }
                }
            }
        }
    }

    #[test]
    fn unit_square_rules() {
        let r = quad_polygon(&unit_square(), 0).unwrap();
        assert!((r.measure() - 1.0).abs() < 1e-13);
        let r = quad_polygon(&unit_square(), 4).unwrap();
        let v = r.integrate(|x| x[0] * x[0] * x[1] * x[1]);
        assert!((v - 1.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn regular_pentagon_area() {
        let pts: Vec<Point> = (0..5)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 5.0;
                [t.cos(), t.sin(), 0.0]
            })
            .collect();
        let shoelace: f64 = (0..5)
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % 5]);
                0.5 * (a[0] * b[1] - a[1] * b[0])
            })
            .sum();
        let r = quad_polygon(&pts, 6).unwrap();
        assert!((r.measure() - shoelace).abs() < 1e-13 * shoelace);
    }

    #[test]
    fn bowtie_is_rejected() {
        let pts = vec![[0.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(matches!(quad_polygon(&pts, 2), Err(VemError::Geometry(_))));
    }

    #[test]
    fn unit_cube_rules() {
        let r = quad_polyhedron(&unit_cube_faces(), 0).unwrap();
        assert!((r.measure() - 1.0).abs() < 1e-13);
        let r = quad_polyhedron(&unit_cube_faces(), 2).unwrap();
        let v = r.integrate(|x| x[0] * x[0]);
        assert!((v - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn open_polyhedron_is_rejected() {
        let mut faces = unit_cube_faces();
        faces.pop();
        assert!(quad_polyhedron(&faces, 2).is_err());
    }
}
