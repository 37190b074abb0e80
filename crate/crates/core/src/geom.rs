//! Small fixed-size vector helpers on `[f64; 3]`.

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn axpy(a: &Point, s: f64, b: &Point) -> Point {
    [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

pub fn normalize(a: &Point) -> Point {
    let n = norm(a);
    scale(a, 1.0 / n)
}

pub fn centroid_of(points: &[Point]) -> Point {
    let mut c = [0.0; 3];
    for p in points {
        c = add(&c, p);
    }
    scale(&c, 1.0 / points.len() as f64)
}

/// Largest pairwise distance.
pub fn diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max(dist(a, b));
        }
    }
    d
}

/// Newell area vector of a closed loop: direction is the loop normal, length its area.
pub fn area_vector(loop_pts: &[Point]) -> Point {
    let mut n = [0.0; 3];
    let c = centroid_of(loop_pts);
    let m = loop_pts.len();
    for i in 0..m {
        let a = sub(&loop_pts[i], &c);
        let b = sub(&loop_pts[(i + 1) % m], &c);
        n = add(&n, &cross(&a, &b));
    }
    scale(&n, 0.5)
}

/// Orthonormal tangent pair `(t1, t2)` with `t1 x t2 = n`.
pub fn tangent_frame(n: &Point, hint: &Point) -> (Point, Point) {
    let proj = axpy(hint, -dot(hint, n), n);
    let t1 = if norm(&proj) > 1e-12 {
        normalize(&proj)
    } else {
        // any axis not parallel to n
        let axis = if n[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        normalize(&axpy(&axis, -dot(&axis, n), n))
    };
    let t2 = cross(n, &t1);
    (t1, t2)
}
