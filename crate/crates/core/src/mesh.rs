//! Polyhedral bulk meshes, the flat interface surface mesh and the maps
//! between them.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use log::warn;

use crate::error::{Result, VemError};
use crate::geom::{self, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    GammaU,
    GammaSigma,
    Sigma,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Interior => "Interior",
            BoundaryTag::GammaU => "GammaU",
            BoundaryTag::GammaSigma => "GammaSigma",
            BoundaryTag::Sigma => "Sigma",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "Interior" => Some(BoundaryTag::Interior),
            "GammaU" => Some(BoundaryTag::GammaU),
            "GammaSigma" => Some(BoundaryTag::GammaSigma),
            "Sigma" => Some(BoundaryTag::Sigma),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Vertex loop, counterclockwise about `normal`.
    pub vertices: Vec<usize>,
    /// `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub edges: Vec<usize>,
    /// Owning cell first; a second entry for interior faces.
    pub cells: Vec<usize>,
    /// Unit normal, outward for the owner.
    pub normal: Point,
    pub area: f64,
    pub centroid: Point,
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub faces: Vec<usize>,
    /// `+1` when the face normal points out of this cell.
    pub signs: Vec<f64>,
    /// Sorted global vertex indices.
    pub vertices: Vec<usize>,
    /// Sorted global edge indices.
    pub edges: Vec<usize>,
    pub volume: f64,
    pub centroid: Point,
    pub diameter: f64,
}

#[derive(Debug, Clone)]
pub struct PolyMesh3 {
    pub vertices: Vec<Point>,
    /// Vertex pairs with `a < b`.
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<Face>,
    pub cells: Vec<Cell>,
    pub tags: Vec<BoundaryTag>,
}

fn polygon_geometry(pts: &[Point]) -> (Point, f64, Point) {
    let av = geom::area_vector(pts);
    let area = geom::norm(&av);
    let n = geom::scale(&av, 1.0 / area);
    let c0 = geom::centroid_of(pts);
    let mut c = [0.0; 3];
    let m = pts.len();
    for i in 0..m {
        let (a, b) = (&pts[i], &pts[(i + 1) % m]);
        let s = 0.5 * geom::dot(&geom::cross(&geom::sub(a, &c0), &geom::sub(b, &c0)), &n);
        let tc = geom::scale(&geom::add(&geom::add(&c0, a), b), 1.0 / 3.0);
        c = geom::axpy(&c, s, &tc);
    }
    (n, area, geom::scale(&c, 1.0 / area))
}

impl PolyMesh3 {
    /// Builds the mesh from vertex coordinates, face loops and cell face lists.
    ///
    /// The first cell listing a face owns it and the loop must be outward for
    /// that cell. Cells must be closed.
    pub fn from_raw(vertices: Vec<Point>, face_loops: Vec<Vec<usize>>, cell_faces: Vec<Vec<usize>>) -> Result<Self> {
        let nv = vertices.len();
        let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut faces = Vec::with_capacity(face_loops.len());
        for (fi, lp) in face_loops.into_iter().enumerate() {
            if lp.len() < 3 {
                return Err(VemError::Geometry(format!("face {fi} has fewer than 3 vertices")));
            }
            if let Some(&bad) = lp.iter().find(|&&v| v >= nv) {
                return Err(VemError::Geometry(format!("face {fi} references missing vertex {bad}")));
            }
            let mut fe = Vec::with_capacity(lp.len());
            for i in 0..lp.len() {
                let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                let key = (a.min(b), a.max(b));
                let id = *edge_map.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
                fe.push(id);
            }
            let pts: Vec<Point> = lp.iter().map(|&v| vertices[v]).collect();
            let (normal, area, centroid) = polygon_geometry(&pts);
            if !(area > 0.0) {
                return Err(VemError::Geometry(format!("face {fi} has zero area")));
            }
            let diameter = geom::diameter(&pts);
            let plane_dev = pts
                .iter()
                .map(|p| geom::dot(&geom::sub(p, &centroid), &normal).abs())
                .fold(0.0, f64::max);
            if plane_dev > 1e-10 * diameter {
                return Err(VemError::Geometry(format!(
                    "face {fi} is not planar (deviation {plane_dev:.3e})"
                )));
            }
            faces.push(Face {
                vertices: lp,
                edges: fe,
                cells: Vec::new(),
                normal,
                area,
                centroid,
                diameter,
            });
        }
        let nf = faces.len();
        let mut cells = Vec::with_capacity(cell_faces.len());
        for (ci, cf) in cell_faces.into_iter().enumerate() {
            let mut signs = Vec::with_capacity(cf.len());
            for &f in &cf {
                if f >= nf {
                    return Err(VemError::Topology {
                        cell: ci,
                        msg: format!("references missing face {f}"),
                    });
                }
                let owners = &mut faces[f].cells;
                if owners.len() >= 2 {
                    return Err(VemError::Topology {
                        cell: ci,
                        msg: format!("face {f} already shared by two cells"),
                    });
                }
                signs.push(if owners.is_empty() { 1.0 } else { -1.0 });
                owners.push(ci);
            }
            let mut vs: Vec<usize> = cf.iter().flat_map(|&f| faces[f].vertices.iter().copied()).collect();
            vs.sort_unstable();
            vs.dedup();
            let mut es: Vec<usize> = cf.iter().flat_map(|&f| faces[f].edges.iter().copied()).collect();
            es.sort_unstable();
            es.dedup();
            // closure and divergence-theorem geometry
            let pts: Vec<Point> = vs.iter().map(|&v| vertices[v]).collect();
            let diameter = geom::diameter(&pts);
            let mut closure = [0.0; 3];
            for (&f, &s) in cf.iter().zip(&signs) {
                closure = geom::axpy(&closure, s * faces[f].area, &faces[f].normal);
            }
            if geom::norm(&closure) > 1e-12 * diameter * diameter {
                return Err(VemError::Topology {
                    cell: ci,
                    msg: format!("cell is not closed (area vector sum {:.3e})", geom::norm(&closure)),
                });
            }
            let apex = geom::centroid_of(&pts);
            let mut volume = 0.0;
            let mut centroid = [0.0; 3];
            for (&f, &s) in cf.iter().zip(&signs) {
                let face = &faces[f];
                let m = face.vertices.len();
                for i in 0..m {
                    let a = vertices[face.vertices[i]];
                    let b = vertices[face.vertices[(i + 1) % m]];
                    let c = face.centroid;
                    let det = s * geom::dot(
                        &geom::sub(&c, &apex),
                        &geom::cross(&geom::sub(&a, &apex), &geom::sub(&b, &apex)),
                    );
                    let v = det / 6.0;
                    let tc = geom::scale(&geom::add(&geom::add(&apex, &a), &geom::add(&b, &c)), 0.25);
                    volume += v;
                    centroid = geom::axpy(&centroid, v, &tc);
                }
            }
            if !(volume > 0.0) {
                return Err(VemError::Topology {
                    cell: ci,
                    msg: format!("non-positive volume {volume:.3e} (faces inward?)"),
                });
            }
            cells.push(Cell {
                faces: cf,
                signs,
                vertices: vs,
                edges: es,
                volume,
                centroid: geom::scale(&centroid, 1.0 / volume),
                diameter,
            });
        }
        if let Some(f) = faces.iter().position(|f| f.cells.is_empty()) {
            return Err(VemError::Geometry(format!("face {f} belongs to no cell")));
        }
        let tags = faces
            .iter()
            .map(|f| {
                if f.cells.len() == 2 {
                    BoundaryTag::Interior
                } else {
                    // untagged boundary, resolved by tag_boundaries
                    BoundaryTag::GammaSigma
                }
            })
            .collect();
        Ok(Self {
            vertices,
            edges,
            faces,
            cells,
            tags,
        })
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.faces[f].cells.len() == 1
    }

    /// Largest cell diameter.
    pub fn h(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        geom::dist(&self.vertices[a], &self.vertices[b])
    }

    pub fn face_points(&self, f: usize) -> Vec<Point> {
        self.faces[f].vertices.iter().map(|&v| self.vertices[v]).collect()
    }

    /// Face loops of a cell, each oriented outward from the cell.
    pub fn cell_face_loops(&self, c: usize) -> Vec<Vec<Point>> {
        let cell = &self.cells[c];
        cell.faces
            .iter()
            .zip(&cell.signs)
            .map(|(&f, &s)| {
                let mut p = self.face_points(f);
                if s < 0.0 {
                    p.reverse();
                }
                p
            })
            .collect()
    }

    pub fn faces_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        (0..self.faces.len()).filter(|&f| self.tags[f] == tag).collect()
    }

    /// Serialises to the sectioned text format.
    pub fn export(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "VERTICES {}", self.vertices.len());
        for p in &self.vertices {
            let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
        }
        let _ = writeln!(s, "FACES {}", self.faces.len());
        for f in &self.faces {
            let v: Vec<String> = f.vertices.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{}", v.join(" "));
        }
        let _ = writeln!(s, "CELLS {}", self.cells.len());
        for c in &self.cells {
            let v: Vec<String> = c.faces.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{}", v.join(" "));
        }
        let _ = writeln!(s, "TAGS");
        for (f, t) in self.tags.iter().enumerate() {
            if *t != BoundaryTag::Interior {
                let _ = writeln!(s, "{f} {}", t.name());
            }
        }
        s
    }
}

/// Hexahedral mesh of the box `lo..hi` with `n` cells per axis.
pub fn generate_cube_mesh(n: usize, lo: Point, hi: Point) -> Result<PolyMesh3> {
    if n == 0 {
        return Err(VemError::Config("cube mesh needs n >= 1".into()));
    }
    if (0..3).any(|d| !(hi[d] > lo[d])) {
        return Err(VemError::Config("degenerate box".into()));
    }
    let m = n + 1;
    let vid = |i: usize, j: usize, k: usize| i + m * (j + m * k);
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let t = [i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64];
                vertices.push([
                    lo[0] + t[0] * (hi[0] - lo[0]),
                    lo[1] + t[1] * (hi[1] - lo[1]),
                    lo[2] + t[2] * (hi[2] - lo[2]),
                ]);
            }
        }
    }
    let mut face_map: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut face_loops: Vec<Vec<usize>> = Vec::new();
    let mut cell_faces = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let c = |a: usize, b: usize, d: usize| vid(i + a, j + b, k + d);
                // outward loops of the hexahedron
                let loops = [
                    [c(0, 0, 0), c(0, 1, 0), c(1, 1, 0), c(1, 0, 0)],
                    [c(0, 0, 1), c(1, 0, 1), c(1, 1, 1), c(0, 1, 1)],
                    [c(0, 0, 0), c(1, 0, 0), c(1, 0, 1), c(0, 0, 1)],
                    [c(0, 1, 0), c(0, 1, 1), c(1, 1, 1), c(1, 1, 0)],
                    [c(0, 0, 0), c(0, 0, 1), c(0, 1, 1), c(0, 1, 0)],
                    [c(1, 0, 0), c(1, 1, 0), c(1, 1, 1), c(1, 0, 1)],
                ];
                let mut cf = Vec::with_capacity(6);
                for lp in loops {
                    let mut key = lp.to_vec();
                    key.sort_unstable();
                    let id = *face_map.entry(key).or_insert_with(|| {
                        face_loops.push(lp.to_vec());
                        face_loops.len() - 1
                    });
                    cf.push(id);
                }
                cell_faces.push(cf);
            }
        }
    }
    PolyMesh3::from_raw(vertices, face_loops, cell_faces)
}

fn parse_err(line: usize, msg: impl Into<String>) -> VemError {
    VemError::Parse { line, msg: msg.into() }
}

/// Reads the sectioned text format; validates closure and orientation.
pub fn import_mesh<R: BufRead>(reader: R) -> Result<PolyMesh3> {
    #[derive(PartialEq)]
    enum Sec {
        None,
        Vertices,
        Faces,
        Cells,
        Tags,
    }
    let mut sec = Sec::None;
    let mut expected = 0usize;
    let mut vertices: Vec<Point> = Vec::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut tags: Vec<(usize, usize, BoundaryTag)> = Vec::new();
    let mut counts = [None::<usize>; 3];
    for (ln, line) in reader.lines().enumerate() {
        let ln = ln + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut it = t.split_whitespace();
        let head = it.next().unwrap_or_default();
        let count = |it: &mut std::str::SplitWhitespace| -> Result<usize> {
            it.next()
                .ok_or_else(|| parse_err(ln, format!("{head} needs a count")))?
                .parse::<usize>()
                .map_err(|e| parse_err(ln, format!("bad count: {e}")))
        };
        match head {
            "VERTICES" => {
                sec = Sec::Vertices;
                expected = count(&mut it)?;
                counts[0] = Some(expected);
                continue;
            }
            "FACES" => {
                sec = Sec::Faces;
                expected = count(&mut it)?;
                counts[1] = Some(expected);
                continue;
            }
            "CELLS" => {
                sec = Sec::Cells;
                expected = count(&mut it)?;
                counts[2] = Some(expected);
                continue;
            }
            "TAGS" => {
                sec = Sec::Tags;
                continue;
            }
            _ => {}
        }
        let ints = |t: &str| -> Result<Vec<usize>> {
            t.split_whitespace()
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|e| parse_err(ln, format!("bad index '{s}': {e}")))
                })
                .collect()
        };
        match sec {
            Sec::None => return Err(parse_err(ln, "data before any section header")),
            Sec::Vertices => {
                let v: Vec<f64> = t
                    .split_whitespace()
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|e| parse_err(ln, format!("bad coordinate '{s}': {e}")))
                    })
                    .collect::<Result<_>>()?;
                if v.len() != 3 {
                    return Err(parse_err(ln, format!("expected 3 coordinates, got {}", v.len())));
                }
                if vertices.len() == expected {
                    return Err(parse_err(ln, "more vertices than declared"));
                }
                vertices.push([v[0], v[1], v[2]]);
            }
            Sec::Faces => {
                if faces.len() == expected {
                    return Err(parse_err(ln, "more faces than declared"));
                }
                faces.push(ints(t)?);
            }
            Sec::Cells => {
                if cells.len() == expected {
                    return Err(parse_err(ln, "more cells than declared"));
                }
                cells.push(ints(t)?);
            }
            Sec::Tags => {
                let parts: Vec<&str> = t.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(parse_err(ln, "expected '<face> <tag>'"));
                }
                let f = parts[0]
                    .parse::<usize>()
                    .map_err(|e| parse_err(ln, format!("bad face index: {e}")))?;
                let tag = BoundaryTag::from_name(parts[1])
                    .ok_or_else(|| parse_err(ln, format!("unknown tag '{}'", parts[1])))?;
                tags.push((ln, f, tag));
            }
        }
    }
    let names = ["VERTICES", "FACES", "CELLS"];
    let got = [vertices.len(), faces.len(), cells.len()];
    for i in 0..3 {
        match counts[i] {
            None => return Err(parse_err(0, format!("missing {} section", names[i]))),
            Some(c) if c != got[i] => {
                return Err(parse_err(
                    0,
                    format!("{} declares {c} entries, found {}", names[i], got[i]),
                ))
            }
            _ => {}
        }
    }
    let mut mesh = PolyMesh3::from_raw(vertices, faces, cells)?;
    for (ln, f, tag) in tags {
        if f >= mesh.faces.len() {
            return Err(parse_err(ln, format!("tag for missing face {f}")));
        }
        if mesh.is_boundary_face(f) == (tag == BoundaryTag::Interior) {
            return Err(parse_err(ln, format!("tag {} inconsistent with face {f}", tag.name())));
        }
        mesh.tags[f] = tag;
    }
    Ok(mesh)
}

type Predicate = Box<dyn Fn(&Point) -> bool + Send + Sync>;

/// Set of region predicates evaluated at boundary-face barycenters.
pub struct TagRule {
    predicates: Vec<(BoundaryTag, Predicate)>,
}

impl TagRule {
    pub fn new() -> Self {
        Self { predicates: Vec::new() }
    }

    pub fn with(mut self, tag: BoundaryTag, p: impl Fn(&Point) -> bool + Send + Sync + 'static) -> Self {
        self.predicates.push((tag, Box::new(p)));
        self
    }

    /// Clamped part `x3 <= 1/2`, interface `x3 = 1`, traction elsewhere.
    pub fn example1() -> Self {
        const TOL: f64 = 1e-12;
        Self::new()
            .with(BoundaryTag::GammaU, |x| x[2] <= 0.5 + TOL)
            .with(BoundaryTag::Sigma, |x| (x[2] - 1.0).abs() <= TOL)
            .with(BoundaryTag::GammaSigma, |x| {
                x[2] > 0.5 + TOL && (x[2] - 1.0).abs() > TOL
            })
    }

    pub fn all(tag: BoundaryTag) -> Self {
        Self::new().with(tag, |_| true)
    }
}

impl Default for TagRule {
    fn default() -> Self {
        Self::new()
    }
}

/// Tags each boundary face with the unique predicate holding at its barycenter.
pub fn tag_boundaries(mut mesh: PolyMesh3, rule: &TagRule) -> Result<PolyMesh3> {
    let mut untagged = Vec::new();
    let mut doubled = Vec::new();
    for f in 0..mesh.faces.len() {
        if !mesh.is_boundary_face(f) {
            mesh.tags[f] = BoundaryTag::Interior;
            continue;
        }
        let x = mesh.faces[f].centroid;
        let hits: Vec<BoundaryTag> = rule.predicates.iter().filter(|(_, p)| p(&x)).map(|(t, _)| *t).collect();
        match hits.len() {
            0 => untagged.push(f),
            1 => mesh.tags[f] = hits[0],
            _ => doubled.push(f),
        }
    }
    if !untagged.is_empty() || !doubled.is_empty() {
        return Err(VemError::Config(format!(
            "boundary tagging: untagged faces {untagged:?}, multiply tagged faces {doubled:?}"
        )));
    }
    Ok(mesh)
}

/// Orthonormal frame of the interface plane.
#[derive(Debug, Clone, Copy)]
pub struct PlaneFrame {
    pub origin: Point,
    pub e1: Point,
    pub e2: Point,
    pub normal: Point,
}

impl PlaneFrame {
    pub fn to_plane(&self, p: &Point) -> [f64; 2] {
        let d = geom::sub(p, &self.origin);
        [geom::dot(&d, &self.e1), geom::dot(&d, &self.e2)]
    }

    pub fn to_space(&self, q: &[f64; 2]) -> Point {
        geom::axpy(&geom::axpy(&self.origin, q[0], &self.e1), q[1], &self.e2)
    }
}

#[derive(Debug, Clone)]
pub struct SurfaceMesh2 {
    pub frame: PlaneFrame,
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex loops.
    pub polygons: Vec<Vec<usize>>,
    /// `polygon_edges[p][i]` joins vertices `i` and `i + 1` of polygon `p`.
    pub polygon_edges: Vec<Vec<usize>>,
    pub edges: Vec<[usize; 2]>,
    pub boundary_edge: Vec<bool>,
    pub boundary_vertex: Vec<bool>,
}

impl SurfaceMesh2 {
    /// Polygon vertices lifted to `[x, y, 0]`.
    pub fn polygon_points(&self, p: usize) -> Vec<Point> {
        self.polygons[p]
            .iter()
            .map(|&v| [self.vertices[v][0], self.vertices[v][1], 0.0])
            .collect()
    }

    /// Largest polygon diameter.
    pub fn h(&self) -> f64 {
        (0..self.polygons.len())
            .map(|p| geom::diameter(&self.polygon_points(p)))
            .fold(0.0, f64::max)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }

    pub fn n_boundary_edges(&self) -> usize {
        self.boundary_edge.iter().filter(|b| **b).count()
    }
}

#[derive(Debug, Clone)]
pub struct BulkSurfaceConnector {
    /// Bulk face of each surface polygon.
    pub polygon_to_face: Vec<usize>,
    pub face_to_polygon: HashMap<usize, usize>,
    /// Bulk vertex of each surface vertex.
    pub surface_vertex_to_bulk: Vec<usize>,
    pub vertex_to_vertex: HashMap<usize, usize>,
    pub surface_edge_to_bulk: Vec<usize>,
    pub edge_to_edge: HashMap<usize, usize>,
}

/// Builds the interface polygon mesh from the Sigma-tagged faces.
pub fn extract_surface(mesh: &PolyMesh3) -> Result<(SurfaceMesh2, BulkSurfaceConnector)> {
    let sigma = mesh.faces_with_tag(BoundaryTag::Sigma);
    if sigma.is_empty() {
        return Err(VemError::Geometry("no Sigma faces to extract".into()));
    }
    let f0 = &mesh.faces[sigma[0]];
    let normal = f0.normal;
    let offset = geom::dot(&normal, &f0.centroid);
    let mut max_dev: f64 = 0.0;
    let mut tol: f64 = f64::INFINITY;
    for &f in &sigma {
        let face = &mesh.faces[f];
        tol = tol.min(1e-10 * face.diameter);
        for &v in &face.vertices {
            max_dev = max_dev.max((geom::dot(&normal, &mesh.vertices[v]) - offset).abs());
        }
        if geom::dot(&face.normal, &normal) < 1.0 - 1e-10 {
            max_dev = max_dev.max(geom::norm(&geom::sub(&face.normal, &normal)));
        }
    }
    if max_dev > tol {
        return Err(VemError::Geometry(format!(
            "Sigma faces are not coplanar (max deviation {max_dev:.3e})"
        )));
    }
    let (e1, e2) = geom::tangent_frame(&normal, &[1.0, 0.0, 0.0]);
    let frame = PlaneFrame {
        origin: geom::scale(&normal, offset),
        e1,
        e2,
        normal,
    };
    let mut vertex_to_vertex = HashMap::new();
    let mut surface_vertex_to_bulk = Vec::new();
    let mut vertices = Vec::new();
    let mut polygons = Vec::with_capacity(sigma.len());
    let mut polygon_edges = Vec::with_capacity(sigma.len());
    let mut edge_to_edge = HashMap::new();
    let mut surface_edge_to_bulk = Vec::new();
    let mut edge_count: Vec<usize> = Vec::new();
    let mut face_to_polygon = HashMap::new();
    for (pi, &f) in sigma.iter().enumerate() {
        face_to_polygon.insert(f, pi);
        let face = &mesh.faces[f];
        let lp: Vec<usize> = face
            .vertices
            .iter()
            .map(|&v| {
                *vertex_to_vertex.entry(v).or_insert_with(|| {
                    surface_vertex_to_bulk.push(v);
                    vertices.push(frame.to_plane(&mesh.vertices[v]));
                    vertices.len() - 1
                })
            })
            .collect();
        let pe: Vec<usize> = face
            .edges
            .iter()
            .map(|&e| {
                let id = *edge_to_edge.entry(e).or_insert_with(|| {
                    surface_edge_to_bulk.push(e);
                    edge_count.push(0);
                    surface_edge_to_bulk.len() - 1
                });
                edge_count[id] += 1;
                id
            })
            .collect();
        polygons.push(lp);
        polygon_edges.push(pe);
    }
    let edges: Vec<[usize; 2]> = surface_edge_to_bulk
        .iter()
        .map(|&e| {
            let [a, b] = mesh.edges[e];
            let (a, b) = (vertex_to_vertex[&a], vertex_to_vertex[&b]);
            [a.min(b), a.max(b)]
        })
        .collect();
    let boundary_edge: Vec<bool> = edge_count.iter().map(|&c| c == 1).collect();
    let mut boundary_vertex = vec![false; vertices.len()];
    for (e, &b) in boundary_edge.iter().enumerate() {
        if b {
            boundary_vertex[edges[e][0]] = true;
            boundary_vertex[edges[e][1]] = true;
        }
    }
    // distinct bulk vertices must not collapse onto one plate point
    let mut seen: HashMap<(i64, i64), usize> = HashMap::new();
    let scale = 1.0 / (1e-12 * mesh.h().max(1.0));
    for (i, q) in vertices.iter().enumerate() {
        let key = ((q[0] * scale).round() as i64, (q[1] * scale).round() as i64);
        if let Some(j) = seen.insert(key, i) {
            return Err(VemError::Geometry(format!(
                "surface vertices {j} and {i} coincide in the plane"
            )));
        }
    }
    let surface = SurfaceMesh2 {
        frame,
        vertices,
        polygons,
        polygon_edges,
        edges,
        boundary_edge,
        boundary_vertex,
    };
    let connector = BulkSurfaceConnector {
        polygon_to_face: sigma,
        face_to_polygon,
        surface_vertex_to_bulk,
        vertex_to_vertex,
        surface_edge_to_bulk,
        edge_to_edge,
    };
    Ok((surface, connector))
}

#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// Per-cell ratio of the inscribed-ball radius about the centroid to `h_K`.
    pub cell_star_radius: Vec<f64>,
    pub min_face_star_radius: f64,
    pub min_edge_ratio: f64,
    pub rho: f64,
}

fn point_line_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let d = geom::sub(b, a);
    geom::norm(&geom::cross(&geom::sub(p, a), &d)) / geom::norm(&d)
}

/// Estimates the shape-regularity constants; warns but never fails.
pub fn check_regularity(mesh: &PolyMesh3) -> RegularityReport {
    let mut cell_star_radius = Vec::with_capacity(mesh.cells.len());
    let mut min_face: f64 = 1.0;
    let mut min_edge: f64 = 1.0;
    for cell in &mesh.cells {
        let hk = cell.diameter;
        let mut r = f64::INFINITY;
        for &f in &cell.faces {
            let face = &mesh.faces[f];
            r = r.min(geom::dot(&geom::sub(&face.centroid, &cell.centroid), &face.normal).abs());
            let m = face.vertices.len();
            for i in 0..m {
                let a = mesh.vertices[face.vertices[i]];
                let b = mesh.vertices[face.vertices[(i + 1) % m]];
                min_face = min_face.min(point_line_distance(&face.centroid, &a, &b) / hk);
            }
        }
        cell_star_radius.push((r / hk).min(1.0));
        for &e in &cell.edges {
            min_edge = min_edge.min(mesh.edge_length(e) / hk);
        }
    }
    let min_cell = cell_star_radius.iter().copied().fold(1.0, f64::min);
    let rho = min_cell.min(min_face).min(min_edge);
    if rho < 0.05 {
        warn!("mesh regularity constant rho = {rho:.3e} is small");
    }
    RegularityReport {
        cell_star_radius,
        min_face_star_radius: min_face,
        min_edge_ratio: min_edge,
        rho,
    }
}
