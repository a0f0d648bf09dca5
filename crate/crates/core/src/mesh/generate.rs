use super::{Membership, MeshError, Part, Shape, SurfaceMesh};
use crate::geometry::{self, Point};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BuiltinKind {
    /// Unit sphere, single subdomain, every triangle tagged D.
    Icosphere { level: u32 },
    /// Unit ball split by the equatorial disk into upper Ω₁ and lower Ω₂. Polar angle bands
    /// `[0, θ_D)`, `[θ_D, θ_N)`, `[θ_N, π]` carry D, I and N.
    SplitBall { level: u32, theta_d: f64, theta_n: f64 },
}

impl BuiltinKind {
    /// Parses `icosphere:L` or `split_ball:L[:θ_D:θ_N]` (angles in radians; default π/3, 2π/3).
    pub fn parse(spec: &str) -> Result<Self, MeshError> {
        let fields: Vec<&str> = spec.split(':').collect();
        let bad = || MeshError::InvalidBuiltin(format!("cannot parse builtin '{spec}'"));
        let level = fields.get(1).ok_or_else(bad)?.trim().parse::<u32>().map_err(|_| bad())?;
        match (fields[0].trim(), fields.len()) {
            ("icosphere", 2) => Ok(BuiltinKind::Icosphere { level }),
            ("split_ball", 2) => Ok(BuiltinKind::SplitBall { level, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 }),
            ("split_ball", 4) => {
                let theta_d = fields[2].trim().parse().map_err(|_| bad())?;
                let theta_n = fields[3].trim().parse().map_err(|_| bad())?;
                Ok(BuiltinKind::SplitBall { level, theta_d, theta_n })
            }
            _ => Err(bad()),
        }
    }
}

pub fn generate_builtin(kind: BuiltinKind) -> Result<SurfaceMesh, MeshError> {
    match kind {
        BuiltinKind::Icosphere { level } => Ok(icosphere(level)),
        BuiltinKind::SplitBall { level, theta_d, theta_n } => split_ball(level, theta_d, theta_n),
    }
}

fn icosahedron() -> (Vec<Point>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let vertices = raw.iter().map(geometry::normalize).collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (vertices, triangles)
}

fn icosphere(level: u32) -> SurfaceMesh {
    let (v, t) = icosahedron();
    let n = t.len();
    let mut mesh = SurfaceMesh::new(v, t, vec![Membership::One; n], vec![Part::Dirichlet; n])
        .expect("icosahedron is well formed")
        .with_shape(Shape::UnitSphere);
    for _ in 0..level {
        mesh = mesh.refine();
    }
    mesh
}

fn octahedron_sphere(level: u32) -> SurfaceMesh {
    let vertices = vec![
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let triangles = vec![
        [0, 1, 4],
        [1, 2, 4],
        [2, 3, 4],
        [3, 0, 4],
        [1, 0, 5],
        [2, 1, 5],
        [3, 2, 5],
        [0, 3, 5],
    ];
    let mut mesh = SurfaceMesh::new(vertices, triangles, vec![Membership::One; 8], vec![Part::Dirichlet; 8])
        .expect("octahedron is well formed")
        .with_shape(Shape::UnitSphere);
    for _ in 0..level {
        mesh = mesh.refine();
    }
    mesh
}

fn polar_part(theta: f64, theta_d: f64, theta_n: f64) -> Part {
    if theta < theta_d {
        Part::Dirichlet
    } else if theta < theta_n {
        Part::Impedance
    } else {
        Part::Neumann
    }
}

fn split_ball(level: u32, theta_d: f64, theta_n: f64) -> Result<SurfaceMesh, MeshError> {
    if !(theta_d.is_finite() && theta_n.is_finite() && 0.0 <= theta_d && theta_d <= theta_n && theta_n <= PI) {
        return Err(MeshError::InvalidBuiltin(format!(
            "band angles must satisfy 0 <= theta_d <= theta_n <= pi (got {theta_d}, {theta_n})"
        )));
    }
    let sphere = octahedron_sphere(level);
    let mut vertices = sphere.vertices().to_vec();
    let mut triangles = Vec::new();
    let mut membership = Vec::new();
    let mut parts = Vec::new();
    for t in 0..sphere.num_triangles() {
        let c = sphere.triangle_centroid(t);
        let theta = (c[2] / geometry::norm(&c)).clamp(-1.0, 1.0).acos();
        triangles.push(sphere.triangles()[t]);
        membership.push(if c[2] > 0.0 { Membership::One } else { Membership::Two });
        parts.push(polar_part(theta, theta_d, theta_n));
    }

    // Flatten the upper hemisphere onto the disk with the azimuthal equidistant map, which
    // fixes the equator so rim vertices are shared with the sphere.
    let mut disk_vertex: HashMap<usize, usize> = HashMap::new();
    for t in 0..sphere.num_triangles() {
        if sphere.triangle_centroid(t)[2] <= 0.0 {
            continue;
        }
        let tri = sphere.triangles()[t];
        let mut mapped = [0usize; 3];
        for (k, &v) in tri.iter().enumerate() {
            mapped[k] = *disk_vertex.entry(v).or_insert_with(|| {
                let p = sphere.vertices()[v];
                if p[2].abs() < 1e-14 {
                    return v;
                }
                let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
                let q = if rho < 1e-14 {
                    [0.0, 0.0, 0.0]
                } else {
                    let theta = p[2].clamp(-1.0, 1.0).acos();
                    let f = theta / FRAC_PI_2 / rho;
                    [p[0] * f, p[1] * f, 0.0]
                };
                vertices.push(q);
                vertices.len() - 1
            });
        }
        // Upper-hemisphere winding gives +z after flattening; n₁ on the disk is -z.
        triangles.push([mapped[0], mapped[2], mapped[1]]);
        membership.push(Membership::Both);
        parts.push(Part::Jump);
    }
    Ok(SurfaceMesh::new(vertices, triangles, membership, parts)?.with_shape(Shape::SplitBall))
}
