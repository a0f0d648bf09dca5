//! OFF and Gmsh MSH 2.2 ASCII readers and writers.
//!
//! OFF: standard header and body, followed by one `subdomain part` line per face
//! (`subdomain` ∈ {1, 2, 12}, `part` ∈ {D, N, I, J}). Tags may also be appended inline to a
//! face line (`3 a b c 12 J`).
//!
//! MSH 2.2: triangles (element type 2) carry the physical id `10·subdomain + offset` with
//! offsets D=0, N=1, I=2, J=3. Other element types are skipped.

use super::{validate_mesh, Membership, MeshError, Part, SurfaceMesh};
use crate::geometry::Point;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeshFormat {
    Off,
    Msh2,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "msh" => Some(MeshFormat::Msh2),
            _ => None,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn decode_tag(element: usize, sub: &str, part: &str) -> Result<(Membership, Part), MeshError> {
    let m = sub
        .parse::<u32>()
        .ok()
        .and_then(Membership::from_code)
        .ok_or_else(|| MeshError::InvalidTag { element, message: format!("bad subdomain '{sub}'") })?;
    let p = Part::from_letter(part)
        .ok_or_else(|| MeshError::InvalidTag { element, message: format!("bad part '{part}'") })?;
    Ok((m, p))
}

/// Reads a tagged OFF mesh and validates it.
pub fn read_off(text: &str) -> Result<SurfaceMesh, MeshError> {
    // Lines with their 1-based numbers, comments and blanks removed.
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (n0, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut header_tokens: Vec<&str> = header.split_whitespace().collect();
    if header_tokens.first() == Some(&"OFF") {
        header_tokens.remove(0);
    } else {
        return Err(parse_err(n0, "missing OFF header"));
    }
    let counts_tokens: Vec<String> = if header_tokens.is_empty() {
        let (_, l) = lines.next().ok_or_else(|| parse_err(n0, "missing counts line"))?;
        l.split_whitespace().map(str::to_owned).collect()
    } else {
        header_tokens.iter().map(|s| s.to_string()).collect()
    };
    if counts_tokens.len() < 2 {
        return Err(parse_err(n0, "counts line needs vertex and face counts"));
    }
    let nv: usize = counts_tokens[0].parse().map_err(|_| parse_err(n0, "bad vertex count"))?;
    let nf: usize = counts_tokens[1].parse().map_err(|_| parse_err(n0, "bad face count"))?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines.next().ok_or_else(|| parse_err(n0, "unexpected end of vertices"))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse::<f64>().map_err(|_| parse_err(n, format!("bad coordinate '{t}'"))))
            .collect::<Result<_, _>>()?;
        if c.len() != 3 {
            return Err(parse_err(n, "vertex needs three coordinates"));
        }
        vertices.push([c[0], c[1], c[2]]);
    }

    let mut triangles = Vec::with_capacity(nf);
    let mut inline_tags: Vec<Option<(Membership, Part)>> = Vec::with_capacity(nf);
    for f in 0..nf {
        let (n, l) = lines.next().ok_or_else(|| parse_err(n0, "unexpected end of faces"))?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.first() != Some(&"3") || tok.len() < 4 {
            return Err(parse_err(n, "only triangular faces are supported"));
        }
        let mut tri = [0usize; 3];
        for k in 0..3 {
            tri[k] = tok[k + 1].parse().map_err(|_| parse_err(n, format!("bad index '{}'", tok[k + 1])))?;
        }
        triangles.push(tri);
        inline_tags.push(if tok.len() >= 6 { Some(decode_tag(f, tok[4], tok[5])?) } else { None });
    }

    let mut membership = Vec::with_capacity(nf);
    let mut parts = Vec::with_capacity(nf);
    if inline_tags.iter().all(Option::is_some) && nf > 0 {
        for (m, p) in inline_tags.into_iter().flatten() {
            membership.push(m);
            parts.push(p);
        }
    } else {
        for f in 0..nf {
            let Some((n, l)) = lines.next() else {
                return Err(MeshError::UntaggedElement(f));
            };
            let tok: Vec<&str> = l.split_whitespace().collect();
            if tok.len() != 2 {
                return Err(parse_err(n, "tag line must be 'subdomain part'"));
            }
            let (m, p) = decode_tag(f, tok[0], tok[1])?;
            membership.push(m);
            parts.push(p);
        }
    }
    if let Some((n, _)) = lines.next() {
        return Err(parse_err(n, "trailing content after tag block"));
    }
    finish(vertices, triangles, membership, parts)
}

fn finish(
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    membership: Vec<Membership>,
    parts: Vec<Part>,
) -> Result<SurfaceMesh, MeshError> {
    let mesh = SurfaceMesh::new(vertices, triangles, membership, parts)?;
    let report = validate_mesh(&mesh);
    for s in &report.subdomains {
        if !(s.watertight && s.oriented) {
            return Err(MeshError::NotWatertight {
                subdomain: s.subdomain,
                detail: format!(
                    "{} open edges, {} orientation failures, volume {:.3e}",
                    s.open_edges, s.orientation_failures, s.enclosed_volume
                ),
            });
        }
    }
    Ok(mesh)
}

pub fn write_off(mesh: &SurfaceMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "OFF");
    let _ = writeln!(out, "{} {} 0", mesh.num_vertices(), mesh.num_triangles());
    for v in mesh.vertices() {
        // `{}` on f64 prints the shortest string that round-trips exactly.
        let _ = writeln!(out, "{} {} {}", v[0], v[1], v[2]);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    for (m, p) in mesh.membership().iter().zip(mesh.parts()) {
        let _ = writeln!(out, "{} {}", m.code(), p);
    }
    out
}

/// Reads the triangle subset of a Gmsh MSH 2.2 ASCII file and validates it.
pub fn read_msh2(text: &str) -> Result<SurfaceMesh, MeshError> {
    let lines: Vec<&str> = text.lines().map(str::trim).collect();
    let find = |name: &str| lines.iter().position(|l| *l == name);

    let fmt = find("$MeshFormat").ok_or_else(|| parse_err(1, "missing $MeshFormat"))?;
    let version = lines.get(fmt + 1).and_then(|l| l.split_whitespace().next()).unwrap_or("");
    if !version.starts_with('2') {
        return Err(parse_err(fmt + 2, format!("unsupported MSH version '{version}'")));
    }
    if lines.get(fmt + 1).and_then(|l| l.split_whitespace().nth(1)) != Some("0") {
        return Err(parse_err(fmt + 2, "only ASCII MSH files are supported"));
    }

    let nodes_at = find("$Nodes").ok_or_else(|| parse_err(1, "missing $Nodes"))?;
    let nn: usize = lines
        .get(nodes_at + 1)
        .and_then(|l| l.parse().ok())
        .ok_or_else(|| parse_err(nodes_at + 2, "bad node count"))?;
    let mut vertices = Vec::with_capacity(nn);
    let mut node_index = HashMap::with_capacity(nn);
    for k in 0..nn {
        let ln = nodes_at + 2 + k;
        let l = lines.get(ln).ok_or_else(|| parse_err(ln + 1, "unexpected end of nodes"))?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() != 4 {
            return Err(parse_err(ln + 1, "node line must be 'id x y z'"));
        }
        let id: u64 = tok[0].parse().map_err(|_| parse_err(ln + 1, "bad node id"))?;
        let mut p = [0.0; 3];
        for d in 0..3 {
            p[d] = tok[d + 1].parse().map_err(|_| parse_err(ln + 1, format!("bad coordinate '{}'", tok[d + 1])))?;
        }
        node_index.insert(id, vertices.len());
        vertices.push(p);
    }

    let el_at = find("$Elements").ok_or_else(|| parse_err(1, "missing $Elements"))?;
    let ne: usize = lines
        .get(el_at + 1)
        .and_then(|l| l.parse().ok())
        .ok_or_else(|| parse_err(el_at + 2, "bad element count"))?;
    let mut triangles = Vec::new();
    let mut membership = Vec::new();
    let mut parts = Vec::new();
    for k in 0..ne {
        let ln = el_at + 2 + k;
        let l = lines.get(ln).ok_or_else(|| parse_err(ln + 1, "unexpected end of elements"))?;
        let tok: Vec<u64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(ln + 1, format!("bad integer '{t}'"))))
            .collect::<Result<_, _>>()?;
        if tok.len() < 3 {
            return Err(parse_err(ln + 1, "element line too short"));
        }
        let (etype, ntags) = (tok[1], tok[2] as usize);
        if etype != 2 {
            continue;
        }
        if tok.len() != 3 + ntags + 3 {
            return Err(parse_err(ln + 1, "triangle needs its tags and three nodes"));
        }
        let element = triangles.len();
        if ntags == 0 {
            return Err(MeshError::UntaggedElement(element));
        }
        let phys = tok[3] as u32;
        let m = Membership::from_code(phys / 10)
            .ok_or_else(|| MeshError::InvalidTag { element, message: format!("bad physical id {phys}") })?;
        let p = match phys % 10 {
            0 => Part::Dirichlet,
            1 => Part::Neumann,
            2 => Part::Impedance,
            3 => Part::Jump,
            _ => return Err(MeshError::InvalidTag { element, message: format!("bad physical id {phys}") }),
        };
        let mut tri = [0usize; 3];
        for d in 0..3 {
            let id = tok[3 + ntags + d];
            tri[d] = *node_index
                .get(&id)
                .ok_or_else(|| parse_err(ln + 1, format!("unknown node {id}")))?;
        }
        triangles.push(tri);
        membership.push(m);
        parts.push(p);
    }
    finish(vertices, triangles, membership, parts)
}

pub fn write_msh2(mesh: &SurfaceMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "$MeshFormat\n2.2 0 8\n$EndMeshFormat");
    let mut groups: Vec<(u32, String)> = mesh
        .membership()
        .iter()
        .zip(mesh.parts())
        .map(|(m, p)| (10 * m.code() + p.gmsh_offset(), format!("Gamma{}_{}", m.code(), p)))
        .collect();
    groups.sort();
    groups.dedup();
    let _ = writeln!(out, "$PhysicalNames\n{}", groups.len());
    for (id, name) in &groups {
        let _ = writeln!(out, "2 {id} \"{name}\"");
    }
    let _ = writeln!(out, "$EndPhysicalNames");
    let _ = writeln!(out, "$Nodes\n{}", mesh.num_vertices());
    for (i, v) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(out, "{} {} {} {}", i + 1, v[0], v[1], v[2]);
    }
    let _ = writeln!(out, "$EndNodes\n$Elements\n{}", mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let phys = 10 * mesh.membership()[t].code() + mesh.parts()[t].gmsh_offset();
        let _ = writeln!(out, "{} 2 2 {phys} {phys} {} {} {}", t + 1, tri[0] + 1, tri[1] + 1, tri[2] + 1);
    }
    let _ = writeln!(out, "$EndElements");
    out
}

pub fn load_mesh(path: &Path, format: Option<MeshFormat>) -> Result<SurfaceMesh, MeshError> {
    let format = format.or_else(|| MeshFormat::from_path(path)).ok_or_else(|| {
        MeshError::Parse { line: 0, message: format!("cannot infer mesh format of {}", path.display()) }
    })?;
    let text = std::fs::read_to_string(path)?;
    match format {
        MeshFormat::Off => read_off(&text),
        MeshFormat::Msh2 => read_msh2(&text),
    }
}

pub fn save_mesh(mesh: &SurfaceMesh, path: &Path, format: MeshFormat) -> Result<(), MeshError> {
    let text = match format {
        MeshFormat::Off => write_off(mesh),
        MeshFormat::Msh2 => write_msh2(mesh),
    };
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_builtin, BuiltinKind};
    use std::f64::consts::PI;

    #[test]
    fn off_icosahedron_all_dirichlet() {
        let m = generate_builtin(BuiltinKind::Icosphere { level: 0 }).unwrap();
        let back = read_off(&write_off(&m)).unwrap();
        assert_eq!(back.num_vertices(), 12);
        assert_eq!(back.num_triangles(), 20);
        assert!(back.parts().iter().all(|&p| p == Part::Dirichlet));
    }

    #[test]
    fn off_inline_tags() {
        let text = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1 1 D\n3 0 1 3 1 D\n3 1 2 3 1 N\n3 0 3 2 1 I\n";
        let m = read_off(text).unwrap();
        assert_eq!(m.parts()[2], Part::Neumann);
    }

    #[test]
    fn off_missing_tags_is_untagged() {
        let text = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 1 2 3\n3 0 3 2\n1 D\n1 D\n";
        assert!(matches!(read_off(text), Err(MeshError::UntaggedElement(2))));
    }

    #[test]
    fn split_ball_round_trips_bitwise() {
        let m = generate_builtin(BuiltinKind::SplitBall { level: 2, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 })
            .unwrap();
        assert!(read_off(&write_off(&m)).unwrap().same_as(&m));
        assert!(read_msh2(&write_msh2(&m)).unwrap().same_as(&m));
    }

    #[test]
    fn msh_untagged_triangle_is_rejected() {
        let m = generate_builtin(BuiltinKind::Icosphere { level: 0 }).unwrap();
        let text = write_msh2(&m).replacen("\n1 2 2 10 10 ", "\n1 2 0 ", 1);
        assert!(matches!(read_msh2(&text), Err(MeshError::UntaggedElement(0))));
    }

    #[test]
    fn msh_skips_other_element_types_and_physical_ids() {
        let m = generate_builtin(BuiltinKind::Icosphere { level: 0 }).unwrap();
        let text = write_msh2(&m);
        assert!(text.contains("2 10 \"Gamma1_D\""));
        let with_point = text.replace("$Elements\n20\n", "$Elements\n21\n100 15 2 0 0 1\n");
        assert!(read_msh2(&with_point).unwrap().same_as(&m));
    }

    #[test]
    fn open_surface_is_rejected_on_load() {
        let m = generate_builtin(BuiltinKind::Icosphere { level: 1 }).unwrap();
        let cut = m.without_triangles(|t| t == 0);
        assert!(matches!(read_off(&write_off(&cut)), Err(MeshError::NotWatertight { subdomain: 1, .. })));
    }
}
