//! Admissible triangular meshes and their precomputed geometry.
//!
//! A mesh is built once from vertex coordinates and vertex-index triples and
//! is immutable afterwards. Every triangle is stored counterclockwise; its
//! local edge `i` is the edge opposite local vertex `i`. Each edge stores a
//! unit normal pointing out of its first triangle `K_σ` (towards `L_σ` for
//! interior edges, out of the domain for boundary edges), the circumcenter
//! distance `d_σ` and the transmissibility `τ_σ = |σ| / d_σ`.

use std::collections::{HashMap, HashSet};
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    /// Vertex ids, counterclockwise.
    pub vertices: [usize; 3],
    /// Edge ids; `edges[i]` is opposite `vertices[i]`.
    pub edges: [usize; 3],
    pub area: f64,
    pub circumcenter: Point,
    pub circumradius: f64,
    pub centroid: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints in the counterclockwise order of `k`.
    pub vertices: [usize; 2],
    pub midpoint: Point,
    pub length: f64,
    /// First adjacent triangle (`K_σ`).
    pub k: usize,
    /// Second adjacent triangle (`L_σ`); `None` on the boundary.
    pub l: Option<usize>,
    /// Unit normal, outward from `k`.
    pub normal: Point,
    pub d: f64,
    pub tau: f64,
}

impl Edge {
    pub fn kind(&self) -> EdgeKind {
        if self.l.is_some() {
            EdgeKind::Interior
        } else {
            EdgeKind::Boundary
        }
    }

    pub fn is_boundary(&self) -> bool {
        self.l.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    h: f64,
    area: f64,
    hash: String,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn circumcenter(a: Point, b: Point, c: Point) -> Point {
    let b = sub(b, a);
    let c = sub(c, a);
    let d = 2.0 * cross(b, c);
    let bb = b[0] * b[0] + b[1] * b[1];
    let cc = c[0] * c[0] + c[1] * c[1];
    [
        a[0] + (c[1] * bb - b[1] * cc) / d,
        a[1] + (b[0] * cc - c[0] * bb) / d,
    ]
}

impl Mesh {
    /// Builds a mesh and all derived geometry. Triangle orientation is
    /// normalized to counterclockwise.
    pub fn build(vertices: Vec<Point>, triangles: &[[usize; 3]]) -> Result<Mesh> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::InvalidInput("mesh needs at least one triangle".into()));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::InvalidInput(format!("vertex {i} is not finite")));
            }
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::InvalidInput(format!(
                    "triangle {t} references vertex {bad}, but only {} vertices exist",
                    vertices.len()
                )));
            }
        }

        let mut max_len2: f64 = 0.0;
        for tri in triangles {
            for i in 0..3 {
                let e = sub(vertices[tri[(i + 1) % 3]], vertices[tri[i]]);
                max_len2 = max_len2.max(e[0] * e[0] + e[1] * e[1]);
            }
        }

        let mut tris: Vec<Triangle> = Vec::with_capacity(triangles.len());
        for (t, &tri) in triangles.iter().enumerate() {
            let mut v = tri;
            let [a, b, c] = v.map(|i| vertices[i]);
            let signed = 0.5 * cross(sub(b, a), sub(c, a));
            if signed.abs() <= 1e-14 * max_len2 || v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
                return Err(Error::DegenerateTriangle {
                    triangle: t,
                    area: signed.abs(),
                });
            }
            if signed < 0.0 {
                v.swap(1, 2);
            }
            let [a, b, c] = v.map(|i| vertices[i]);
            let cc = circumcenter(a, b, c);
            tris.push(Triangle {
                vertices: v,
                edges: [usize::MAX; 3],
                area: signed.abs(),
                circumcenter: cc,
                circumradius: dist(cc, a),
                centroid: [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0],
            });
        }

        let mut edges: Vec<Edge> = Vec::new();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        for t in 0..tris.len() {
            for i in 0..3 {
                let va = tris[t].vertices[(i + 1) % 3];
                let vb = tris[t].vertices[(i + 2) % 3];
                let key = (va.min(vb), va.max(vb));
                match lookup.get(&key) {
                    None => {
                        let (pa, pb) = (vertices[va], vertices[vb]);
                        let e = sub(pb, pa);
                        let length = norm(e);
                        lookup.insert(key, edges.len());
                        tris[t].edges[i] = edges.len();
                        edges.push(Edge {
                            vertices: [va, vb],
                            midpoint: [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])],
                            length,
                            k: t,
                            l: None,
                            normal: [e[1] / length, -e[0] / length],
                            d: 0.0,
                            tau: 0.0,
                        });
                    }
                    Some(&id) => {
                        let edge = &mut edges[id];
                        if edge.l.is_some() {
                            return Err(Error::NonConforming(format!(
                                "edge ({}, {}) is shared by more than two triangles",
                                key.0, key.1
                            )));
                        }
                        // The opposite vertices must lie on opposite sides.
                        let k = &tris[edge.k];
                        let opp_k = k.vertices[k.edges.iter().position(|&x| x == id).unwrap()];
                        let opp_l = tris[t].vertices[i];
                        let side = |p: Point| (p[0] - edge.midpoint[0]) * edge.normal[0] + (p[1] - edge.midpoint[1]) * edge.normal[1];
                        if side(vertices[opp_k]) * side(vertices[opp_l]) >= 0.0 {
                            return Err(Error::NonConforming(format!(
                                "triangles {} and {t} overlap across edge ({}, {})",
                                edge.k, key.0, key.1
                            )));
                        }
                        edge.l = Some(t);
                        tris[t].edges[i] = id;
                    }
                }
            }
        }

        check_hanging_nodes(&vertices, &edges)?;

        for edge in &mut edges {
            let xk = tris[edge.k].circumcenter;
            edge.d = match edge.l {
                Some(l) => dist(xk, tris[l].circumcenter),
                None => dist(edge.midpoint, xk),
            };
            edge.tau = edge.length / edge.d;
        }

        let h = tris.iter().map(|t| t.circumradius).fold(0.0, f64::max);
        let area = tris.iter().map(|t| t.area).sum();
        let hash = hash_mesh(&vertices, &tris);
        Ok(Mesh {
            vertices,
            triangles: tris,
            edges,
            h,
            area,
            hash,
        })
    }

    /// Parses the node/element text format and builds the mesh.
    pub fn load(text: &str) -> Result<Mesh> {
        let (vertices, triangles) = parse_mesh_text(text)?;
        Mesh::build(vertices, &triangles)
    }

    /// Serializes to the node/element text format. Coordinates use the
    /// shortest representation that round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# mesh {}", self.hash);
        let _ = writeln!(out, "{} {}", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{:?} {:?}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t.vertices[0], t.vertices[1], t.vertices[2]);
        }
        out
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_cells(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Maximum circumradius.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Short content hash of the coordinates and connectivity.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(|(_, e)| !e.is_boundary())
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_boundary())
    }

    /// +1 if `cell` is the edge's `K_σ`, −1 otherwise.
    #[inline]
    pub fn edge_sign(&self, cell: usize, edge: usize) -> f64 {
        if self.edges[edge].k == cell {
            1.0
        } else {
            -1.0
        }
    }

    /// Unit normal of `edge` pointing out of `cell`.
    #[inline]
    pub fn outward_normal(&self, cell: usize, edge: usize) -> Point {
        let s = self.edge_sign(cell, edge);
        let n = self.edges[edge].normal;
        [s * n[0], s * n[1]]
    }

    /// The triangle across `edge` from `cell`, if any.
    #[inline]
    pub fn neighbor(&self, cell: usize, edge: usize) -> Option<usize> {
        let e = &self.edges[edge];
        if e.k == cell {
            e.l
        } else {
            Some(e.k)
        }
    }

    pub fn triangle_points(&self, cell: usize) -> [Point; 3] {
        self.triangles[cell].vertices.map(|v| self.vertices[v])
    }

    pub fn edge_points(&self, edge: usize) -> [Point; 2] {
        self.edges[edge].vertices.map(|v| self.vertices[v])
    }

    /// Interior angles of a triangle, in radians.
    pub fn angles(&self, cell: usize) -> [f64; 3] {
        let p = self.triangle_points(cell);
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            let a = sub(p[(i + 1) % 3], p[i]);
            let b = sub(p[(i + 2) % 3], p[i]);
            *o = cross(a, b).abs().atan2(a[0] * b[0] + a[1] * b[1]);
        }
        out
    }

    /// Signed distance from the circumcenter of `cell` to the line of
    /// `edge`; positive when the circumcenter is on the inner side.
    pub fn circumcenter_edge_distance(&self, cell: usize, edge: usize) -> f64 {
        let n = self.outward_normal(cell, edge);
        let r = sub(self.edges[edge].midpoint, self.triangles[cell].circumcenter);
        r[0] * n[0] + r[1] * n[1]
    }

    /// Checks the per-triangle admissibility conditions and collects the
    /// measured mesh-quality constants.
    pub fn validate(&self, angle_margin: f64) -> ValidationReport {
        let h = self.h;
        let max_angles: Vec<f64> = (0..self.n_cells())
            .map(|t| self.angles(t).into_iter().fold(0.0, f64::max))
            .collect();
        let max_angle = max_angles.iter().copied().fold(0.0, f64::max);
        let edge_ratios: Vec<f64> = self.edges.iter().map(|e| e.d / e.length).collect();

        let mut min_circumcenter_margin = f64::INFINITY;
        let mut min_center_edge_ratio = f64::INFINITY;
        let mut area_inequality_holds = true;
        for (t, tri) in self.triangles.iter().enumerate() {
            for &e in &tri.edges {
                let edge = &self.edges[e];
                let signed = self.circumcenter_edge_distance(t, e);
                min_circumcenter_margin = min_circumcenter_margin.min(signed);
                min_center_edge_ratio = min_center_edge_ratio.min(signed / edge.length);
                let bound = 0.5 * edge.length * dist(tri.circumcenter, edge.midpoint);
                if tri.area < bound * (1.0 - 1e-12) {
                    area_inequality_holds = false;
                }
            }
        }

        let min_d = self.edges.iter().map(|e| e.d).fold(f64::INFINITY, f64::min);
        let min_tau = self.edges.iter().map(|e| e.tau).fold(f64::INFINITY, f64::min);
        let max_tau = self.edges.iter().map(|e| e.tau).fold(0.0, f64::max);
        let min_edge_over_h = self.edges.iter().map(|e| e.length / h).fold(f64::INFINITY, f64::min);
        let circumcenters_inside = min_circumcenter_margin >= -1e-12 * h;

        let mut reasons = Vec::new();
        let angle_limit = FRAC_PI_2 - angle_margin;
        if max_angle > angle_limit + 1e-12 {
            reasons.push(format!(
                "max angle {:.6} rad exceeds pi/2 - {angle_margin} = {angle_limit:.6}",
                max_angle
            ));
        }
        if !(min_d >= 1e-10 * h) {
            reasons.push(format!("min d_sigma = {min_d:e} is below 1e-10 h"));
        }
        ValidationReport {
            angle_margin,
            max_angles,
            max_angle,
            edge_ratios,
            min_d,
            min_tau,
            max_tau,
            circumcenters_inside,
            min_circumcenter_margin,
            min_center_edge_ratio,
            min_edge_over_h,
            area_inequality_holds,
            h,
            admissible: reasons.is_empty(),
            reasons,
        }
    }

    /// Offset-lattice triangulation of a rectangle.
    ///
    /// Columns have width `W / nx`. The row count is the even integer nearest
    /// to `5 ny / 4`, so a square domain with `nx = ny` gets rows of height
    /// 4/5 of the column width and doubling both counts nests exactly.
    /// Even rows carry boundary vertices on the left and right sides with
    /// interior vertices at half-integer columns (`1.5, 2.5, ..., nx − 1.5`);
    /// odd rows carry the integer columns `1..nx−1` and no side vertices,
    /// which keeps every triangle touching the sides acute.
    pub fn generate_structured(nx: usize, ny: usize, domain: Rect) -> Result<Mesh> {
        if nx < 2 || ny < 2 {
            return Err(Error::GenerationFailed(format!(
                "need nx, ny >= 2 (got {nx} x {ny})"
            )));
        }
        if !(domain.width() > 0.0 && domain.height() > 0.0) {
            return Err(Error::GenerationFailed("empty domain".into()));
        }
        let rows = 2 * ((5 * ny + 4) / 8).max(1);
        let dx = domain.width() / nx as f64;
        let dy = domain.height() / rows as f64;

        let mut vertices = Vec::new();
        let mut row_ids: Vec<Vec<usize>> = Vec::with_capacity(rows + 1);
        for j in 0..=rows {
            let cols: Vec<f64> = if j % 2 == 0 {
                let mut c = vec![0.0];
                c.extend((1..nx.saturating_sub(1)).map(|i| i as f64 + 0.5));
                c.push(nx as f64);
                c
            } else {
                (1..nx).map(|i| i as f64).collect()
            };
            let y = if j == rows { domain.y1 } else { domain.y0 + j as f64 * dy };
            let ids = cols
                .iter()
                .map(|&c| {
                    let x = if c == nx as f64 { domain.x1 } else { domain.x0 + c * dx };
                    vertices.push([x, y]);
                    vertices.len() - 1
                })
                .collect();
            row_ids.push(ids);
        }

        let mut triangles = Vec::new();
        for j in 0..rows {
            let (even, odd) = if j % 2 == 0 {
                (&row_ids[j], &row_ids[j + 1])
            } else {
                (&row_ids[j + 1], &row_ids[j])
            };
            zipper(even, odd, &vertices, &mut triangles);
            if j % 2 == 0 {
                let above = &row_ids[j + 2];
                triangles.push([even[0], odd[0], above[0]]);
                triangles.push([*even.last().unwrap(), *above.last().unwrap(), *odd.last().unwrap()]);
            }
        }

        let mesh = Mesh::build(vertices, &triangles)?;
        let report = mesh.validate(0.05);
        if !report.admissible {
            return Err(Error::GenerationFailed(format!(
                "{nx}x{ny} lattice on {}x{} is inadmissible ({}); change the nx:ny aspect",
                domain.width(),
                domain.height(),
                report.reasons.join("; ")
            )));
        }
        Ok(mesh)
    }
}

/// Triangulates the band between two rows, advancing along whichever row
/// has the nearer next vertex.
fn zipper(a: &[usize], b: &[usize], vertices: &[Point], out: &mut Vec<[usize; 3]>) {
    let (mut i, mut k) = (0, 0);
    while i + 1 < a.len() || k + 1 < b.len() {
        let advance_a = if i + 1 == a.len() {
            false
        } else if k + 1 == b.len() {
            true
        } else {
            vertices[a[i + 1]][0] <= vertices[b[k + 1]][0]
        };
        if advance_a {
            out.push([a[i], a[i + 1], b[k]]);
            i += 1;
        } else {
            out.push([a[i], b[k + 1], b[k]]);
            k += 1;
        }
    }
}

fn check_hanging_nodes(vertices: &[Point], edges: &[Edge]) -> Result<()> {
    let boundary: Vec<&Edge> = edges.iter().filter(|e| e.is_boundary()).collect();
    let boundary_vertices: HashSet<usize> = boundary.iter().flat_map(|e| e.vertices).collect();
    for e in &boundary {
        let [a, b] = e.vertices.map(|v| vertices[v]);
        let ab = sub(b, a);
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        for &v in &boundary_vertices {
            if e.vertices.contains(&v) {
                continue;
            }
            let ap = sub(vertices[v], a);
            let s = (ap[0] * ab[0] + ap[1] * ab[1]) / len2;
            if s > 1e-12 && s < 1.0 - 1e-12 && cross(ab, ap).abs() <= 1e-12 * len2 {
                return Err(Error::NonConforming(format!(
                    "vertex {v} lies inside edge ({}, {})",
                    e.vertices[0], e.vertices[1]
                )));
            }
        }
    }
    Ok(())
}

fn hash_mesh(vertices: &[Point], triangles: &[Triangle]) -> String {
    let mut hasher = Sha256::new();
    for v in vertices {
        hasher.update(v[0].to_le_bytes());
        hasher.update(v[1].to_le_bytes());
    }
    for t in triangles {
        for v in t.vertices {
            hasher.update((v as u64).to_le_bytes());
        }
    }
    hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        y0: 0.0,
        x1: 1.0,
        y1: 1.0,
    };

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub angle_margin: f64,
    /// Largest interior angle per triangle.
    pub max_angles: Vec<f64>,
    pub max_angle: f64,
    /// `d_σ / |σ|` per edge.
    pub edge_ratios: Vec<f64>,
    pub min_d: f64,
    pub min_tau: f64,
    pub max_tau: f64,
    /// Every circumcenter lies in its closed triangle.
    pub circumcenters_inside: bool,
    /// Smallest signed circumcenter-to-edge distance (negative: outside).
    pub min_circumcenter_margin: f64,
    /// Smallest `d(x_K, σ) / |σ|`.
    pub min_center_edge_ratio: f64,
    /// Smallest `|σ| / h`.
    pub min_edge_over_h: f64,
    /// `|K| ≥ ½ |σ| d(x_K, x_σ)` on every triangle-edge pair.
    pub area_inequality_holds: bool,
    pub h: f64,
    pub admissible: bool,
    pub reasons: Vec<String>,
}

impl ValidationReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "admissible: {}", if self.admissible { "yes" } else { "no" });
        for r in &self.reasons {
            let _ = writeln!(s, "  reason: {r}");
        }
        let _ = writeln!(s, "h (max circumradius): {:.6e}", self.h);
        let _ = writeln!(
            s,
            "max angle: {:.6} rad ({:.3} deg), margin {}",
            self.max_angle,
            self.max_angle.to_degrees(),
            self.angle_margin
        );
        let _ = writeln!(s, "min d_sigma: {:.6e}", self.min_d);
        let _ = writeln!(s, "tau_sigma range: [{:.6e}, {:.6e}]", self.min_tau, self.max_tau);
        let min_ratio = self.edge_ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let _ = writeln!(s, "min d_sigma/|sigma|: {min_ratio:.6e}");
        let _ = writeln!(s, "circumcenters inside: {}", self.circumcenters_inside);
        let _ = writeln!(s, "min circumcenter-to-edge distance: {:.6e}", self.min_circumcenter_margin);
        let _ = writeln!(s, "min d(x_K, sigma)/|sigma|: {:.6e}", self.min_center_edge_ratio);
        let _ = writeln!(s, "min |sigma|/h: {:.6e}", self.min_edge_over_h);
        let _ = writeln!(s, "area inequality |K| >= |sigma| d(x_K, x_sigma)/2: {}", self.area_inequality_holds);
        s
    }
}

/// Splits the node/element text format into raw arrays.
pub fn parse_mesh_text(text: &str) -> Result<(Vec<Point>, Vec<[usize; 3]>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, header) = lines.next().ok_or_else(|| Error::parse(1, "empty mesh file"))?;
    let counts: Vec<&str> = header.split_whitespace().collect();
    if counts.len() != 2 {
        return Err(Error::parse(line, "expected header \"V E\""));
    }
    let nv: usize = counts[0]
        .parse()
        .map_err(|_| Error::parse(line, format!("bad vertex count `{}`", counts[0])))?;
    let ne: usize = counts[1]
        .parse()
        .map_err(|_| Error::parse(line, format!("bad element count `{}`", counts[1])))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or_else(|| Error::parse(line, format!("expected {nv} vertex lines")))?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::parse(line, "expected \"x y\""));
        }
        let mut p = [0.0f64; 2];
        for (slot, s) in p.iter_mut().zip(&parts) {
            *slot = s
                .parse()
                .map_err(|_| Error::parse(line, format!("bad coordinate `{s}`")))?;
            if !slot.is_finite() {
                return Err(Error::parse(line, "coordinate is not finite"));
            }
        }
        vertices.push(p);
    }

    let mut triangles = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (line, l) = lines
            .next()
            .ok_or_else(|| Error::parse(line, format!("expected {ne} element lines")))?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::parse(line, "expected \"i j k\""));
        }
        let mut t = [0usize; 3];
        for (slot, s) in t.iter_mut().zip(&parts) {
            *slot = s
                .parse()
                .map_err(|_| Error::parse(line, format!("bad vertex index `{s}`")))?;
            if *slot >= nv {
                return Err(Error::parse(
                    line,
                    format!("vertex index {slot} out of range (only {nv} vertices)"),
                ));
            }
        }
        triangles.push(t);
    }
    if let Some((line, _)) = lines.next() {
        return Err(Error::parse(line, "unexpected trailing content"));
    }
    Ok((vertices, triangles))
}

/// Two triangles ABC and ADB with A(0,0), B(1,0), C(0.5,0.9), D(0.5,−0.9).
pub fn kite() -> Mesh {
    Mesh::build(
        vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.9], [0.5, -0.9]],
        &[[0, 1, 2], [0, 3, 1]],
    )
    .expect("kite mesh is valid")
}
