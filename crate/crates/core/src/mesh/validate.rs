use super::{Part, Subdomain, SurfaceMesh};
use crate::geometry;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Normalized quality `2 r_in / R` below which a warning is emitted.
pub const QUALITY_FLOOR: f64 = 0.2;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SubdomainCheck {
    pub subdomain: u8,
    pub triangles: usize,
    /// Edges used by a number of triangles other than two.
    pub open_edges: usize,
    /// Edges whose two triangles traverse them in the same direction.
    pub orientation_failures: usize,
    /// `(1/3)∮ x·n`; positive for outward winding.
    pub enclosed_volume: f64,
    pub watertight: bool,
    pub oriented: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeshReport {
    pub subdomains: Vec<SubdomainCheck>,
    /// Every triangle carries exactly one part and `J` iff it carries both subdomains.
    pub tags_consistent: bool,
    /// `|Σ part areas − total area| / total area`.
    pub area_partition_error: f64,
    pub min_quality: f64,
    pub low_quality_triangles: usize,
    pub warnings: Vec<String>,
}

impl MeshReport {
    pub fn all_passed(&self) -> bool {
        !self.subdomains.is_empty()
            && self.subdomains.iter().all(|s| s.watertight && s.oriented)
            && self.tags_consistent
            && self.area_partition_error <= 1e-12
    }

    /// Human-readable summary lines.
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.subdomains {
            out.push(format!(
                "Γ{}: {} triangles, open edges {}, orientation failures {}, volume {:.6} [{}]",
                s.subdomain,
                s.triangles,
                s.open_edges,
                s.orientation_failures,
                s.enclosed_volume,
                if s.watertight && s.oriented { "ok" } else { "FAIL" }
            ));
        }
        out.push(format!("tags consistent: {}", self.tags_consistent));
        out.push(format!("area partition error: {:.3e}", self.area_partition_error));
        out.push(format!(
            "min quality: {:.4} ({} below {QUALITY_FLOOR})",
            self.min_quality, self.low_quality_triangles
        ));
        out.extend(self.warnings.iter().map(|w| format!("warning: {w}")));
        out
    }
}

fn quality(p: &[geometry::Point; 3]) -> f64 {
    let a = geometry::dist(&p[1], &p[2]);
    let b = geometry::dist(&p[2], &p[0]);
    let c = geometry::dist(&p[0], &p[1]);
    let area = 0.5 * geometry::norm(&geometry::cross(&geometry::sub(&p[1], &p[0]), &geometry::sub(&p[2], &p[0])));
    if area == 0.0 {
        return 0.0;
    }
    let r_in = 2.0 * area / (a + b + c);
    let r_out = a * b * c / (4.0 * area);
    2.0 * r_in / r_out
}

pub fn validate_mesh(mesh: &SurfaceMesh) -> MeshReport {
    let mut subdomains = Vec::new();
    for sub in [Subdomain::One, Subdomain::Two] {
        if !mesh.membership().iter().any(|m| m.contains(sub)) {
            continue;
        }
        let boundary = mesh.boundary(sub);
        // Directed edge counts keyed by the undirected edge.
        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for tri in &boundary.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = edges.entry((a.min(b), a.max(b))).or_insert((0, 0));
                if a < b {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let open_edges = edges.values().filter(|(f, r)| f + r != 2).count();
        let orientation_failures = edges.values().filter(|(f, r)| f + r == 2 && (*f == 2 || *r == 2)).count();
        let enclosed_volume = boundary
            .panels
            .iter()
            .map(|p| geometry::dot(&p.centroid, &p.normal) * p.area)
            .sum::<f64>()
            / 3.0;
        subdomains.push(SubdomainCheck {
            subdomain: sub.number(),
            triangles: boundary.num_triangles(),
            open_edges,
            orientation_failures,
            enclosed_volume,
            watertight: open_edges == 0 && boundary.num_triangles() > 0,
            oriented: orientation_failures == 0 && enclosed_volume > 0.0,
        });
    }

    let tags_consistent = mesh
        .membership()
        .iter()
        .zip(mesh.parts())
        .all(|(m, p)| (*m == super::Membership::Both) == (*p == Part::Jump));
    let total = mesh.total_area();
    let by_part: f64 = Part::ALL.iter().map(|&p| mesh.part_area(p)).sum();
    let area_partition_error = if total > 0.0 { (by_part - total).abs() / total } else { 0.0 };

    let qualities: Vec<f64> = (0..mesh.num_triangles()).map(|t| quality(&mesh.triangle_points(t))).collect();
    let min_quality = qualities.iter().copied().fold(f64::INFINITY, f64::min);
    let low_quality_triangles = qualities.iter().filter(|&&q| q < QUALITY_FLOOR).count();
    let mut warnings = Vec::new();
    if low_quality_triangles > 0 {
        warnings.push(format!("{low_quality_triangles} triangles have quality below {QUALITY_FLOOR}"));
    }
    MeshReport {
        subdomains,
        tags_consistent,
        area_partition_error,
        min_quality,
        low_quality_triangles,
        warnings,
    }
}
