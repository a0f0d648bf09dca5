//! Single and double layer potentials evaluated off the surface.
//!
//! `S φ(x) = ∫ k̂(s, x − y) φ(y)` with P0 density, `D ψ(x) = ∫ a² ∂_{n_y} k̂(s, x − y) ψ(y)`
//! with P1 density. Panels close to the evaluation point are subdivided geometrically until
//! every leaf is at least two of its diameters away.

use crate::geometry::{self, Point};
use crate::mesh::Boundary;
use crate::quadrature::{triangle_rule, Medium};
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialKind {
    Single,
    Double,
}

#[derive(Debug, Error, PartialEq)]
pub enum PotentialError {
    #[error("evaluation point {index} lies on the surface (distance {distance:.3e}); use traces instead")]
    OnSurface { index: usize, distance: f64 },
    #[error("density has {got} entries, expected {expected}")]
    DensityLength { expected: usize, got: usize },
}

/// Relative distance below which a point counts as lying on the surface.
const ON_SURFACE: f64 = 1e-10;
/// Relative distance below which a warning is emitted.
const NEAR_SURFACE: f64 = 0.05;
const MAX_DEPTH: u32 = 16;

struct Accum {
    value: C64,
    grad: [C64; 3],
}

#[allow(clippy::too_many_arguments)]
fn integrate_panel(
    kind: PotentialKind,
    kappa: C64,
    x: &Point,
    corners: &[Point; 3],
    normal: &Point,
    density: &dyn Fn(&[f64; 3]) -> C64,
    sub: [[f64; 3]; 3],
    depth: u32,
    acc: &mut Accum,
) {
    let pts = sub.map(|l| geometry::barycentric(corners, l));
    let h = geometry::dist(&pts[0], &pts[1]).max(geometry::dist(&pts[1], &pts[2])).max(geometry::dist(&pts[2], &pts[0]));
    let d = geometry::point_triangle_distance(x, &pts);
    if d < 2.0 * h && depth < MAX_DEPTH {
        let mid = |a: usize, b: usize| {
            let (p, q) = (sub[a], sub[b]);
            [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]), 0.5 * (p[2] + q[2])]
        };
        let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
        for child in [[sub[0], m01, m20], [m01, sub[1], m12], [m20, m12, sub[2]], [m01, m12, m20]] {
            integrate_panel(kind, kappa, x, corners, normal, density, child, depth + 1, acc);
        }
        return;
    }
    let rule = triangle_rule(if d > 4.0 * h { 3 } else { 5 });
    let area = 0.5 * geometry::norm(&geometry::cross(&geometry::sub(&pts[1], &pts[0]), &geometry::sub(&pts[2], &pts[0])));
    for (lq, wq) in rule.bary.iter().zip(&rule.weights) {
        // Barycentric coordinates of the quadrature point relative to the whole panel.
        let mut l = [0.0; 3];
        for k in 0..3 {
            for c in 0..3 {
                l[c] += lq[k] * sub[k][c];
            }
        }
        let y = geometry::barycentric(corners, l);
        let dv = geometry::sub(x, &y);
        let r = geometry::norm(&dv);
        let e = (-kappa * r).exp() / (4.0 * PI);
        let w = density(&l) * (2.0 * area * wq);
        // g = G'(r)/r, g1 = g'(r).
        let g = -e * (1.0 + kappa * r) / (r * r * r);
        match kind {
            PotentialKind::Single => {
                acc.value += w * e / r;
                for k in 0..3 {
                    acc.grad[k] += w * g * dv[k];
                }
            }
            PotentialKind::Double => {
                let dn = geometry::dot(&dv, normal);
                let g1 = e * (kappa * kappa * r * r + 3.0 * kappa * r + 3.0) / (r * r * r * r);
                acc.value -= w * g * dn;
                for k in 0..3 {
                    acc.grad[k] -= w * (g1 / r * dn * dv[k] + g * normal[k]);
                }
            }
        }
    }
}

fn evaluate(
    kind: PotentialKind,
    s: C64,
    b: &Boundary,
    medium: &Medium,
    density: &[C64],
    points: &[Point],
) -> Result<Vec<(C64, [C64; 3])>, PotentialError> {
    let expected = match kind {
        PotentialKind::Single => b.num_triangles(),
        PotentialKind::Double => b.num_vertices(),
    };
    if density.len() != expected {
        return Err(PotentialError::DensityLength { expected, got: density.len() });
    }
    let h = b.mesh_size();
    for (index, x) in points.iter().enumerate() {
        let distance = b.distance(x);
        if distance < ON_SURFACE * h {
            return Err(PotentialError::OnSurface { index, distance });
        }
        if distance < NEAR_SURFACE * h {
            log::warn!("potential point {index} is {distance:.2e} from the surface (< 0.05 h)");
        }
    }
    let kappa = medium.kappa(s);
    let a2 = medium.a * medium.a;
    let unit = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    Ok(points
        .par_iter()
        .map(|x| {
            let mut acc = Accum { value: C64::default(), grad: [C64::default(); 3] };
            for (t, panel) in b.panels.iter().enumerate() {
                let tri = b.triangles[t];
                match kind {
                    PotentialKind::Single => {
                        let phi = density[t];
                        if phi == C64::default() {
                            continue;
                        }
                        integrate_panel(kind, kappa, x, &panel.points, &panel.normal, &|_| phi, unit, 0, &mut acc);
                    }
                    PotentialKind::Double => {
                        let psi = [density[tri[0]], density[tri[1]], density[tri[2]]];
                        if psi.iter().all(|v| *v == C64::default()) {
                            continue;
                        }
                        let f = |l: &[f64; 3]| psi[0] * l[0] + psi[1] * l[1] + psi[2] * l[2];
                        integrate_panel(kind, kappa, x, &panel.points, &panel.normal, &f, unit, 0, &mut acc);
                    }
                }
            }
            if kind == PotentialKind::Single {
                acc.value /= a2;
                for g in &mut acc.grad {
                    *g /= a2;
                }
            }
            (acc.value, acc.grad)
        })
        .collect())
}

/// Values of `Ŝ(s)φ` (P0 density) or `D̂(s)ψ` (P1 density) at `points`.
pub fn eval_potential(
    kind: PotentialKind,
    s: C64,
    b: &Boundary,
    medium: &Medium,
    density: &[C64],
    points: &[Point],
) -> Result<Vec<C64>, PotentialError> {
    Ok(evaluate(kind, s, b, medium, density, points)?.into_iter().map(|(v, _)| v).collect())
}

/// Values and spatial gradients of the potential at `points`.
pub fn eval_potential_gradient(
    kind: PotentialKind,
    s: C64,
    b: &Boundary,
    medium: &Medium,
    density: &[C64],
    points: &[Point],
) -> Result<Vec<(C64, [C64; 3])>, PotentialError> {
    evaluate(kind, s, b, medium, density, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_builtin, BuiltinKind, Subdomain};

    fn sphere(level: u32) -> Boundary {
        generate_builtin(BuiltinKind::Icosphere { level }).unwrap().boundary(Subdomain::One)
    }

    #[test]
    fn newtonian_shell_and_gauss_identity() {
        let b = sphere(3);
        let s = C64::new(1e-9, 0.0);
        let m = Medium::default();
        let ones_t = vec![C64::new(1.0, 0.0); b.num_triangles()];
        let ones_v = vec![C64::new(1.0, 0.0); b.num_vertices()];
        let single = eval_potential(PotentialKind::Single, s, &b, &m, &ones_t, &[[0.0; 3], [0.0, 0.0, 2.0]]).unwrap();
        // Inside: |Γ|/(4π) ≈ 1. Outside at distance 2: |Γ|/(8π).
        assert!((single[0].re - 1.0).abs() < 0.01);
        assert!((single[1].re - 0.5).abs() < 0.01);
        let double = eval_potential(PotentialKind::Double, s, &b, &m, &ones_v, &[[0.1, 0.2, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        assert!((double[0].re + 1.0).abs() < 1e-6);
        assert!(double[1].re.abs() < 1e-6);
    }

    #[test]
    fn linearity_and_zero_density() {
        let b = sphere(1);
        let s = C64::new(1.0, 2.0);
        let m = Medium::default();
        let phi: Vec<C64> = (0..b.num_triangles()).map(|t| C64::new((t as f64).sin(), 0.3)).collect();
        let two: Vec<C64> = phi.iter().map(|v| v * 2.0).collect();
        let pts = [[0.2, 0.1, 0.0], [1.5, 0.0, 0.3]];
        let a = eval_potential(PotentialKind::Single, s, &b, &m, &phi, &pts).unwrap();
        let c = eval_potential(PotentialKind::Single, s, &b, &m, &two, &pts).unwrap();
        for k in 0..2 {
            assert!((c[k] - a[k] * 2.0).norm() < 1e-15 * a[k].norm());
        }
        let z = eval_potential(PotentialKind::Double, s, &b, &m, &vec![C64::default(); b.num_vertices()], &pts).unwrap();
        assert!(z.iter().all(|v| *v == C64::default()));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let b = sphere(1);
        let s = C64::new(1.0, 1.0);
        let m = Medium::new(1.2, 0.9).unwrap();
        let psi: Vec<C64> = (0..b.num_vertices()).map(|v| C64::new(1.0 + (v as f64).cos(), 0.0)).collect();
        let phi: Vec<C64> = (0..b.num_triangles()).map(|t| C64::new((t as f64).sin(), 0.0)).collect();
        let x = [0.2, -0.1, 0.3];
        let h = 1e-5;
        for (kind, dens) in [(PotentialKind::Single, &phi), (PotentialKind::Double, &psi)] {
            let (_, grad) = eval_potential_gradient(kind, s, &b, &m, dens, &[x]).unwrap()[0];
            for k in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let v = eval_potential(kind, s, &b, &m, dens, &[xp, xm]).unwrap();
                let fd = (v[0] - v[1]) / (2.0 * h);
                assert!((fd - grad[k]).norm() < 1e-6 * (1.0 + grad[k].norm()), "{kind:?} {k}: {fd} vs {}", grad[k]);
            }
        }
    }

    #[test]
    fn on_surface_point_is_rejected() {
        let b = sphere(1);
        let v = b.vertices[0];
        let r = eval_potential(PotentialKind::Single, C64::new(1.0, 0.0), &b, &Medium::default(), &vec![C64::new(1.0, 0.0); b.num_triangles()], &[v]);
        assert!(matches!(r, Err(PotentialError::OnSurface { index: 0, .. })));
        let r = eval_potential(PotentialKind::Single, C64::new(1.0, 0.0), &b, &Medium::default(), &[C64::default()], &[[0.0; 3]]);
        assert!(matches!(r, Err(PotentialError::DensityLength { .. })));
    }
}
