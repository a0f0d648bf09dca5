//! Tagged triangulated skeleton surfaces.
//!
//! A [`SurfaceMesh`] stores the skeleton `Σ = Γ₁ ∪ Γ₂` once. Every triangle carries the
//! set of subdomains whose boundary it belongs to and exactly one boundary part tag
//! (D, N, I or J). Interface (J) triangles are shared by both subdomain boundaries; their
//! winding defines `n_Σ := n₁`, so the second subdomain sees them with the opposite
//! orientation. All other triangles lie on `∂Ω` and are wound with the outward normal.

mod generate;
mod io;
mod validate;

pub use generate::{generate_builtin, BuiltinKind};
pub use io::{load_mesh, read_msh2, read_off, save_mesh, write_msh2, write_off, MeshFormat};
pub use validate::{validate_mesh, MeshReport, SubdomainCheck, QUALITY_FLOOR};

use crate::geometry::{self, Point};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("untagged element {0}")]
    UntaggedElement(usize),
    #[error("invalid tag on element {element}: {message}")]
    InvalidTag { element: usize, message: String },
    #[error("vertex index {index} out of range on triangle {triangle}")]
    BadIndex { triangle: usize, index: usize },
    #[error("subdomain {subdomain} boundary is not a closed oriented surface: {detail}")]
    NotWatertight { subdomain: u8, detail: String },
    #[error("invalid builtin geometry: {0}")]
    InvalidBuiltin(String),
    #[error("triangle {triangle} does not belong to Γ{subdomain}")]
    NotOnBoundary { triangle: usize, subdomain: u8 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Boundary-condition part of the skeleton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Part {
    Dirichlet,
    Neumann,
    Impedance,
    Jump,
}

impl Part {
    pub const ALL: [Part; 4] = [Part::Dirichlet, Part::Neumann, Part::Impedance, Part::Jump];

    pub fn letter(self) -> char {
        match self {
            Part::Dirichlet => 'D',
            Part::Neumann => 'N',
            Part::Impedance => 'I',
            Part::Jump => 'J',
        }
    }

    pub fn from_letter(c: &str) -> Option<Part> {
        match c {
            "D" | "d" => Some(Part::Dirichlet),
            "N" | "n" => Some(Part::Neumann),
            "I" | "i" => Some(Part::Impedance),
            "J" | "j" => Some(Part::Jump),
            _ => None,
        }
    }

    /// Offset used in Gmsh physical ids (`10·subdomain + offset`).
    pub fn gmsh_offset(self) -> u32 {
        match self {
            Part::Dirichlet => 0,
            Part::Neumann => 1,
            Part::Impedance => 2,
            Part::Jump => 3,
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// One of the two material subdomains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subdomain {
    One,
    Two,
}

impl Subdomain {
    pub fn index(self) -> usize {
        match self {
            Subdomain::One => 0,
            Subdomain::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Subdomain> {
        match n {
            1 => Some(Subdomain::One),
            2 => Some(Subdomain::Two),
            _ => None,
        }
    }
}

/// Which subdomain boundaries a triangle belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Membership {
    One,
    Two,
    Both,
}

impl Membership {
    pub fn contains(self, sub: Subdomain) -> bool {
        matches!(
            (self, sub),
            (Membership::Both, _) | (Membership::One, Subdomain::One) | (Membership::Two, Subdomain::Two)
        )
    }

    /// Tag as written in files: 1, 2 or 12.
    pub fn code(self) -> u32 {
        match self {
            Membership::One => 1,
            Membership::Two => 2,
            Membership::Both => 12,
        }
    }

    pub fn from_code(code: u32) -> Option<Membership> {
        match code {
            1 => Some(Membership::One),
            2 => Some(Membership::Two),
            12 => Some(Membership::Both),
            _ => None,
        }
    }
}

/// Analytic surface a builtin mesh approximates; used to project refined vertices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// No analytic description (loaded from file).
    Free,
    /// The unit sphere.
    UnitSphere,
    /// The unit sphere plus the equatorial disk `z = 0`.
    SplitBall,
}

#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    membership: Vec<Membership>,
    parts: Vec<Part>,
    shape: Shape,
}

impl SurfaceMesh {
    /// Builds a mesh and checks per-triangle tag consistency. Watertightness is checked by
    /// [`validate_mesh`].
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        membership: Vec<Membership>,
        parts: Vec<Part>,
    ) -> Result<Self, MeshError> {
        if membership.len() != triangles.len() || parts.len() != triangles.len() {
            return Err(MeshError::InvalidTag {
                element: triangles.len().min(membership.len()).min(parts.len()),
                message: "tag arrays do not match triangle count".into(),
            });
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(MeshError::BadIndex { triangle: t, index: v });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::InvalidTag {
                    element: t,
                    message: "repeated vertex in triangle".into(),
                });
            }
            let both = membership[t] == Membership::Both;
            let jump = parts[t] == Part::Jump;
            if both != jump {
                return Err(MeshError::InvalidTag {
                    element: t,
                    message: format!(
                        "part {} is inconsistent with subdomain tag {}",
                        parts[t],
                        membership[t].code()
                    ),
                });
            }
        }
        Ok(Self { vertices, triangles, membership, parts, shape: Shape::Free })
    }

    pub(crate) fn with_shape(mut self, shape: Shape) -> Self {
        self.shape = shape;
        self
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn membership(&self) -> &[Membership] {
        &self.membership
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Subdomains that own at least one triangle, in order.
    pub fn subdomains(&self) -> Vec<Subdomain> {
        [Subdomain::One, Subdomain::Two]
            .into_iter()
            .filter(|&s| self.membership.iter().any(|m| m.contains(s)))
            .collect()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let p = self.triangle_points(t);
        0.5 * geometry::norm(&geometry::cross(&geometry::sub(&p[1], &p[0]), &geometry::sub(&p[2], &p[0])))
    }

    /// Unit normal `n_Σ` induced by the stored winding.
    pub fn triangle_normal(&self, t: usize) -> Point {
        let p = self.triangle_points(t);
        geometry::normalize(&geometry::cross(&geometry::sub(&p[1], &p[0]), &geometry::sub(&p[2], &p[0])))
    }

    pub fn triangle_centroid(&self, t: usize) -> Point {
        geometry::barycentric(&self.triangle_points(t), [1.0 / 3.0; 3])
    }

    /// Total area of triangles carrying `part`.
    pub fn part_area(&self, part: Part) -> f64 {
        (0..self.num_triangles())
            .filter(|&t| self.parts[t] == part)
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Orientation function `𝔑_j = ⟨n_j, n_Σ⟩` on triangle `t` of `Γ_j`.
    pub fn orientation_sign(&self, sub: Subdomain, t: usize) -> Result<i8, MeshError> {
        if t >= self.triangles.len() || !self.membership[t].contains(sub) {
            return Err(MeshError::NotOnBoundary { triangle: t, subdomain: sub.number() });
        }
        Ok(match (self.parts[t], sub) {
            (Part::Jump, Subdomain::Two) => -1,
            _ => 1,
        })
    }

    /// For each vertex, the set of parts of its adjacent triangles.
    pub fn vertex_parts(&self) -> Vec<PartSet> {
        let mut sets = vec![PartSet::default(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                sets[v].insert(self.parts[t]);
            }
        }
        sets
    }

    /// The closed surface `Γ_j` with outward winding and compact local numbering.
    pub fn boundary(&self, sub: Subdomain) -> Boundary {
        let mut local_of = HashMap::new();
        let mut global_vertex = Vec::new();
        let mut triangles = Vec::new();
        let mut global_triangle = Vec::new();
        let mut orientation = Vec::new();
        let mut parts = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if !self.membership[t].contains(sub) {
                continue;
            }
            let sign = self.orientation_sign(sub, t).expect("membership checked");
            let ordered = if sign > 0 { *tri } else { [tri[0], tri[2], tri[1]] };
            let mut local = [0usize; 3];
            for (k, &g) in ordered.iter().enumerate() {
                local[k] = *local_of.entry(g).or_insert_with(|| {
                    global_vertex.push(g);
                    global_vertex.len() - 1
                });
            }
            triangles.push(local);
            global_triangle.push(t);
            orientation.push(sign);
            parts.push(self.parts[t]);
        }
        let vertices = global_vertex.iter().map(|&g| self.vertices[g]).collect();
        Boundary::new(sub, vertices, triangles, global_vertex, global_triangle, orientation, parts)
    }

    /// Quadrisects every triangle; tags are inherited and new vertices are projected onto
    /// the analytic surface of builtin shapes.
    pub fn refine(&self) -> SurfaceMesh {
        let mut vertices = self.vertices.clone();
        let mut edge_mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut membership = Vec::with_capacity(4 * self.triangles.len());
        let mut parts = Vec::with_capacity(4 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let mut mids = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mids[k] = *edge_mid.entry(key).or_insert_with(|| {
                    let mut m = geometry::midpoint(&vertices[a], &vertices[b]);
                    let project = match self.shape {
                        Shape::Free => false,
                        Shape::UnitSphere => true,
                        // Disk edges never join two rim vertices except along the rim itself.
                        Shape::SplitBall => on_unit_sphere(&vertices[a]) && on_unit_sphere(&vertices[b]),
                    };
                    if project {
                        m = geometry::normalize(&m);
                    }
                    vertices.push(m);
                    vertices.len() - 1
                });
            }
            let [a, b, c] = *tri;
            let [ab, bc, ca] = mids;
            for child in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                triangles.push(child);
                membership.push(self.membership[t]);
                parts.push(self.parts[t]);
            }
        }
        SurfaceMesh { vertices, triangles, membership, parts, shape: self.shape }
    }

    /// Summary statistics for reports.
    pub fn stats(&self) -> MeshStats {
        let mut counts = [0usize; 4];
        for p in &self.parts {
            counts[p.gmsh_offset() as usize] += 1;
        }
        let h = (0..self.num_triangles())
            .map(|t| {
                let p = self.triangle_points(t);
                geometry::dist(&p[0], &p[1]).max(geometry::dist(&p[1], &p[2])).max(geometry::dist(&p[2], &p[0]))
            })
            .fold(0.0, f64::max);
        MeshStats {
            vertices: self.num_vertices(),
            triangles: self.num_triangles(),
            dirichlet_triangles: counts[0],
            neumann_triangles: counts[1],
            impedance_triangles: counts[2],
            jump_triangles: counts[3],
            max_edge_length: h,
            total_area: self.total_area(),
        }
    }

    /// Bitwise equality of geometry, connectivity and tags.
    pub fn same_as(&self, other: &SurfaceMesh) -> bool {
        self.vertices.len() == other.vertices.len()
            && self
                .vertices
                .iter()
                .zip(&other.vertices)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()))
            && self.triangles == other.triangles
            && self.membership == other.membership
            && self.parts == other.parts
    }

    /// Removes every triangle for which `drop` returns true (vertices are kept).
    pub fn without_triangles(&self, drop: impl Fn(usize) -> bool) -> SurfaceMesh {
        let keep: Vec<usize> = (0..self.num_triangles()).filter(|&t| !drop(t)).collect();
        SurfaceMesh {
            vertices: self.vertices.clone(),
            triangles: keep.iter().map(|&t| self.triangles[t]).collect(),
            membership: keep.iter().map(|&t| self.membership[t]).collect(),
            parts: keep.iter().map(|&t| self.parts[t]).collect(),
            shape: self.shape,
        }
    }

    /// Returns a copy with the winding of triangle `t` reversed.
    pub fn with_flipped_triangle(&self, t: usize) -> SurfaceMesh {
        let mut m = self.clone();
        m.triangles[t].swap(1, 2);
        m
    }

    /// Returns a copy with all part tags replaced through `f`.
    pub fn retagged(&self, f: impl Fn(usize, Part) -> Part) -> Result<SurfaceMesh, MeshError> {
        let parts = self.parts.iter().enumerate().map(|(t, &p)| f(t, p)).collect();
        Ok(SurfaceMesh::new(self.vertices.clone(), self.triangles.clone(), self.membership.clone(), parts)?
            .with_shape(self.shape))
    }

    /// Drops the equatorial interface of a split ball and returns the enclosing sphere as a
    /// single-subdomain mesh (parts preserved, interface removed).
    pub fn outer_surface(&self) -> Result<SurfaceMesh, MeshError> {
        let keep: Vec<usize> = (0..self.num_triangles()).filter(|&t| self.parts[t] != Part::Jump).collect();
        let mut remap = vec![usize::MAX; self.num_vertices()];
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for &t in &keep {
            let mut local = [0usize; 3];
            for (k, &v) in self.triangles[t].iter().enumerate() {
                if remap[v] == usize::MAX {
                    remap[v] = vertices.len();
                    vertices.push(self.vertices[v]);
                }
                local[k] = remap[v];
            }
            triangles.push(local);
        }
        let membership = vec![Membership::One; keep.len()];
        let parts = keep.iter().map(|&t| self.parts[t]).collect();
        let shape = if self.shape == Shape::SplitBall { Shape::UnitSphere } else { self.shape };
        Ok(SurfaceMesh::new(vertices, triangles, membership, parts)?.with_shape(shape))
    }
}

fn on_unit_sphere(p: &Point) -> bool {
    (geometry::norm(p) - 1.0).abs() < 1e-9
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeshStats {
    pub vertices: usize,
    pub triangles: usize,
    pub dirichlet_triangles: usize,
    pub neumann_triangles: usize,
    pub impedance_triangles: usize,
    pub jump_triangles: usize,
    pub max_edge_length: f64,
    pub total_area: f64,
}

/// Small bitset of [`Part`]s.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PartSet(u8);

impl PartSet {
    pub fn insert(&mut self, p: Part) {
        self.0 |= 1 << p.gmsh_offset();
    }

    pub fn contains(self, p: Part) -> bool {
        self.0 & (1 << p.gmsh_offset()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// True if the set contains any of D, N, I.
    pub fn touches_outer(self) -> bool {
        self.contains(Part::Dirichlet) || self.contains(Part::Neumann) || self.contains(Part::Impedance)
    }
}

/// Precomputed flat-panel geometry.
#[derive(Clone, Debug)]
pub struct Panel {
    pub points: [Point; 3],
    pub normal: Point,
    pub area: f64,
    pub diameter: f64,
    pub centroid: Point,
    /// Largest centroid-to-vertex distance.
    pub radius: f64,
    /// Surface curls of the three hat functions (constant on the panel).
    pub curls: [Point; 3],
}

impl Panel {
    pub fn new(points: [Point; 3]) -> Self {
        let e1 = geometry::sub(&points[1], &points[0]);
        let e2 = geometry::sub(&points[2], &points[0]);
        let c = geometry::cross(&e1, &e2);
        let twice_area = geometry::norm(&c);
        let normal = geometry::scale(&c, 1.0 / twice_area);
        let diameter = geometry::dist(&points[0], &points[1])
            .max(geometry::dist(&points[1], &points[2]))
            .max(geometry::dist(&points[2], &points[0]));
        // curl_Γ λ_a = n × ∇_Γ λ_a = -(opposite edge)/(2|T|), edges oriented a+1 -> a+2.
        let mut curls = [[0.0; 3]; 3];
        for a in 0..3 {
            let e = geometry::sub(&points[(a + 2) % 3], &points[(a + 1) % 3]);
            curls[a] = geometry::scale(&e, -1.0 / twice_area);
        }
        let centroid = geometry::barycentric(&points, [1.0 / 3.0; 3]);
        let radius = points.iter().map(|p| geometry::dist(p, &centroid)).fold(0.0, f64::max);
        Self { points, normal, area: 0.5 * twice_area, diameter, centroid, radius, curls }
    }

    /// Point at barycentric coordinates `l`.
    #[inline]
    pub fn point(&self, l: [f64; 3]) -> Point {
        geometry::barycentric(&self.points, l)
    }
}

/// A closed subdomain boundary `Γ_j` with outward-wound triangles and local numbering.
#[derive(Clone, Debug)]
pub struct Boundary {
    pub subdomain: Subdomain,
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub global_vertex: Vec<usize>,
    pub global_triangle: Vec<usize>,
    pub orientation: Vec<i8>,
    pub parts: Vec<Part>,
    pub panels: Vec<Panel>,
}

impl Boundary {
    pub fn new(
        subdomain: Subdomain,
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        global_vertex: Vec<usize>,
        global_triangle: Vec<usize>,
        orientation: Vec<i8>,
        parts: Vec<Part>,
    ) -> Self {
        let panels = triangles
            .iter()
            .map(|t| Panel::new([vertices[t[0]], vertices[t[1]], vertices[t[2]]]))
            .collect();
        Self { subdomain, vertices, triangles, global_vertex, global_triangle, orientation, parts, panels }
    }

    /// A stand-alone closed surface (used for single-domain meshes and tests).
    pub fn from_mesh_single(mesh: &SurfaceMesh) -> Self {
        mesh.boundary(Subdomain::One)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self) -> f64 {
        self.panels.iter().map(|p| p.area).sum()
    }

    /// Largest panel diameter.
    pub fn mesh_size(&self) -> f64 {
        self.panels.iter().map(|p| p.diameter).fold(0.0, f64::max)
    }

    /// Winding-number test: true if `x` lies strictly inside the closed surface.
    pub fn contains(&self, x: &Point) -> bool {
        let omega: f64 = self.panels.iter().map(|p| geometry::solid_angle(x, &p.points)).sum();
        omega > 2.0 * std::f64::consts::PI
    }

    /// Distance from `x` to the surface.
    pub fn distance(&self, x: &Point) -> f64 {
        self.panels
            .iter()
            .map(|p| geometry::point_triangle_distance(x, &p.points))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_orientation_is_positive() {
        let m = generate_builtin(BuiltinKind::Icosphere { level: 1 }).unwrap();
        for t in 0..m.num_triangles() {
            assert_eq!(m.orientation_sign(Subdomain::One, t).unwrap(), 1);
        }
        assert!(m.orientation_sign(Subdomain::Two, 0).is_err());
    }

    #[test]
    fn split_ball_interface_orientation() {
        let m = generate_builtin(BuiltinKind::SplitBall { level: 1, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 })
            .unwrap();
        let mut seen = 0;
        for t in 0..m.num_triangles() {
            if m.parts()[t] == Part::Jump {
                assert_eq!(m.membership()[t], Membership::Both);
                let s1 = m.orientation_sign(Subdomain::One, t).unwrap();
                let s2 = m.orientation_sign(Subdomain::Two, t).unwrap();
                assert_eq!(s1, 1);
                assert_eq!(s2, -1);
                assert_eq!(s1 * s2, -1);
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn refine_counts_and_projection() {
        let m = generate_builtin(BuiltinKind::Icosphere { level: 0 }).unwrap();
        let r = m.refine();
        assert_eq!(r.num_triangles(), 80);
        // V' = V + E for a closed triangulation with E = 3F/2.
        assert_eq!(r.num_vertices(), m.num_vertices() + 3 * m.num_triangles() / 2);
        let rr = r.refine();
        for v in rr.vertices() {
            assert!((geometry::norm(v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn refine_preserves_tags_and_watertightness_on_split_ball() {
        let m = generate_builtin(BuiltinKind::SplitBall { level: 1, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 })
            .unwrap();
        let r = m.refine();
        for t in 0..m.num_triangles() {
            for c in 0..4 {
                assert_eq!(r.parts()[4 * t + c], m.parts()[t]);
                assert_eq!(r.membership()[4 * t + c], m.membership()[t]);
            }
        }
        let report = validate_mesh(&r);
        assert!(report.all_passed(), "{report:?}");
        // Disk stays planar, sphere vertices stay on the sphere.
        for (t, tri) in r.triangles().iter().enumerate() {
            for &v in tri {
                let p = r.vertices()[v];
                if r.parts()[t] == Part::Jump {
                    assert!(p[2].abs() < 1e-15);
                } else {
                    assert!((geometry::norm(&p) - 1.0).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn boundary_view_is_outward() {
        let m = generate_builtin(BuiltinKind::SplitBall { level: 3, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 })
            .unwrap();
        for sub in [Subdomain::One, Subdomain::Two] {
            let b = m.boundary(sub);
            // The divergence theorem with F = x gives volume = (1/3)∮ x·n; half ball: 2π/3.
            let vol: f64 = b.panels.iter().map(|p| geometry::dot(&p.centroid, &p.normal) * p.area).sum::<f64>() / 3.0;
            assert!(vol > 0.0 && (vol - 2.0 * PI / 3.0).abs() < 0.1, "volume {vol}");
            let inside = if sub == Subdomain::One { [0.0, 0.0, 0.5] } else { [0.0, 0.0, -0.5] };
            assert!(b.contains(&inside));
            assert!(!b.contains(&[0.0, 0.0, 2.0]));
        }
    }

    #[test]
    fn panel_curls_sum_to_zero() {
        let p = Panel::new([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 2.0, 0.0]]);
        let s = geometry::add(&geometry::add(&p.curls[0], &p.curls[1]), &p.curls[2]);
        assert!(geometry::norm(&s) < 1e-15);
        // curl λ = n × ∇λ; for λ_1 = x on this triangle ∇λ_1 = e_x, n = e_z, so curl = e_y.
        assert!((p.curls[1][1] - 1.0).abs() < 1e-15 && p.curls[1][0].abs() < 1e-15);
    }
}
