//! Galerkin integrals over one pair of flat panels.

use super::kernels::{green, Medium};
use super::{classify_pair, default_singular_rule, singular_rule, triangle_rule, PairClass, PairKind, SingularRule};
use crate::geometry::{self, Point};
use crate::mesh::Panel;
use crate::C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    V,
    K,
    KPrime,
    W,
}

impl OperatorKind {
    pub fn tag(self) -> u32 {
        match self {
            OperatorKind::V => 1,
            OperatorKind::K => 2,
            OperatorKind::KPrime => 3,
            OperatorKind::W => 4,
        }
    }
}

/// Quadrature orders per pair tier. Regular orders are collapsed Gauss orders per panel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOrders {
    /// Gauss points per dimension in the Sauter–Schwab rules.
    pub singular: usize,
    /// Disjoint pairs closer than one panel diameter.
    pub near: usize,
    pub regular: usize,
    /// Pairs farther apart than `far_ratio` panel diameters.
    pub far: usize,
    pub far_ratio: f64,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        Self { singular: 4, near: 5, regular: 3, far: 2, far_ratio: 4.0 }
    }
}

impl QuadratureOrders {
    /// Order for a disjoint pair, from a lower bound on the panel distance.
    pub fn regular_order(&self, px: &Panel, py: &Panel) -> usize {
        let gap = geometry::dist(&px.centroid, &py.centroid) - px.radius - py.radius;
        let h = px.diameter.max(py.diameter);
        if gap < h {
            self.near
        } else if gap > self.far_ratio * h {
            self.far
        } else {
            self.regular
        }
    }
}

/// Quadrature points of one panel; weights include the factor `2|τ|`.
#[derive(Clone, Debug)]
pub struct PanelQuad {
    pub points: Vec<Point>,
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl PanelQuad {
    pub fn new(panel: &Panel, order: usize) -> Self {
        let rule = triangle_rule(order);
        let points = rule.bary.iter().map(|l| panel.point(*l)).collect();
        let weights = rule.weights.iter().map(|w| w * 2.0 * panel.area).collect();
        Self { points, bary: rule.bary.clone(), weights }
    }
}

/// Kernel moments of one panel pair with `G = e^{−κr}/(4πr)`:
/// `g = ∫∫G`, `g_ll[a][b] = ∫∫G λ_a(x) λ_b(y)`,
/// `dg_y[b] = ∫∫ ∂_{n_y}G λ_b(y)` and `dg_x[a] = ∫∫ ∂_{n_x}G λ_a(x)` (roles swapped).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairIntegrals {
    pub g: C64,
    pub g_ll: [[C64; 3]; 3],
    pub dg_y: [C64; 3],
    pub dg_x: [C64; 3],
}

impl PairIntegrals {
    /// Moments with the roles of the two panels exchanged.
    pub fn swapped(&self) -> Self {
        let mut g_ll = [[C64::default(); 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                g_ll[a][b] = self.g_ll[b][a];
            }
        }
        Self { g: self.g, g_ll, dg_y: self.dg_x, dg_x: self.dg_y }
    }
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn accumulate(
    acc: &mut PairIntegrals,
    kappa: C64,
    x: &Point,
    lx: &[f64; 3],
    nx: &Point,
    y: &Point,
    ly: &[f64; 3],
    ny: &Point,
    w: f64,
) {
    let d = geometry::sub(x, y);
    let r = geometry::norm(&d);
    let g = green(kappa, r) * w;
    acc.g += g;
    for a in 0..3 {
        let ga = g * lx[a];
        for b in 0..3 {
            acc.g_ll[a][b] += ga * ly[b];
        }
    }
    let f = g * (1.0 + kappa * r) / (r * r);
    let fy = f * geometry::dot(&d, ny);
    let fx = f * (-geometry::dot(&d, nx));
    for k in 0..3 {
        acc.dg_y[k] += fy * ly[k];
        acc.dg_x[k] += fx * lx[k];
    }
}

pub(crate) fn integrate_regular(kappa: C64, px: &Panel, qx: &PanelQuad, py: &Panel, qy: &PanelQuad) -> PairIntegrals {
    let mut acc = PairIntegrals::default();
    for i in 0..qx.weights.len() {
        for j in 0..qy.weights.len() {
            accumulate(
                &mut acc,
                kappa,
                &qx.points[i],
                &qx.bary[i],
                &px.normal,
                &qy.points[j],
                &qy.bary[j],
                &py.normal,
                qx.weights[i] * qy.weights[j],
            );
        }
    }
    acc
}

pub(crate) fn integrate_singular(
    kappa: C64,
    px: &Panel,
    py: &Panel,
    class: &PairClass,
    rule: &SingularRule,
) -> PairIntegrals {
    let scale = 4.0 * px.area * py.area;
    let xs = [px.points[class.perm_x[0]], px.points[class.perm_x[1]], px.points[class.perm_x[2]]];
    let ys = [py.points[class.perm_y[0]], py.points[class.perm_y[1]], py.points[class.perm_y[2]]];
    let mut acc = PairIntegrals::default();
    for i in 0..rule.len() {
        let (lpx, lpy) = (&rule.x[i], &rule.y[i]);
        let x = geometry::barycentric(&xs, *lpx);
        let y = geometry::barycentric(&ys, *lpy);
        let mut lx = [0.0; 3];
        let mut ly = [0.0; 3];
        for k in 0..3 {
            lx[class.perm_x[k]] = lpx[k];
            ly[class.perm_y[k]] = lpy[k];
        }
        accumulate(&mut acc, kappa, &x, &lx, &px.normal, &y, &ly, &py.normal, scale * rule.weights[i]);
    }
    if class.kind == PairKind::Identical {
        // ⟨x − y, n⟩ vanishes on a flat panel.
        acc.dg_x = [C64::default(); 3];
        acc.dg_y = [C64::default(); 3];
    }
    acc
}

/// Per-panel quadrature points for the three regular tiers.
pub(crate) struct PanelQuadCache {
    orders: [usize; 3],
    quads: Vec<[PanelQuad; 3]>,
}

impl PanelQuadCache {
    pub(crate) fn new(panels: &[Panel], orders: &QuadratureOrders) -> Self {
        let tiers = [orders.far, orders.regular, orders.near];
        let quads = panels.iter().map(|p| tiers.map(|o| PanelQuad::new(p, o))).collect();
        Self { orders: tiers, quads }
    }

    fn get(&self, t: usize, order: usize) -> &PanelQuad {
        let k = self.orders.iter().position(|&o| o == order).expect("order is one of the tiers");
        &self.quads[t][k]
    }
}

/// Moments for panels `(i, j)` of `panels`, choosing the rule by pair kind and distance.
pub(crate) fn pair_moments(
    kappa: C64,
    panels: &[Panel],
    cache: &PanelQuadCache,
    i: usize,
    j: usize,
    class: &PairClass,
    orders: &QuadratureOrders,
) -> PairIntegrals {
    let (px, py) = (&panels[i], &panels[j]);
    if class.kind == PairKind::Disjoint {
        let order = orders.regular_order(px, py);
        integrate_regular(kappa, px, cache.get(i, order), py, cache.get(j, order))
    } else if orders.singular == 4 {
        integrate_singular(kappa, px, py, class, default_singular_rule(class.kind))
    } else {
        integrate_singular(kappa, px, py, class, &singular_rule(class.kind, orders.singular))
    }
}

/// True if the pair `(x, y)` is already in the canonical evaluation order.
pub(crate) fn canonical_order(vx: &[usize; 3], vy: &[usize; 3]) -> bool {
    let mut a = *vx;
    let mut b = *vy;
    a.sort_unstable();
    b.sort_unstable();
    a <= b
}

/// Converts pair moments into the local Galerkin matrix (`n_test × n_trial`, row-major) of
/// the operator with test functions on `px` and trial functions on `py`.
pub(crate) fn local_matrix(kind: OperatorKind, m: &PairIntegrals, kappa: C64, medium: &Medium, px: &Panel, py: &Panel) -> Vec<Vec<C64>> {
    let a2 = medium.a * medium.a;
    match kind {
        OperatorKind::V => vec![vec![m.g / a2]],
        OperatorKind::K => vec![m.dg_y.to_vec()],
        OperatorKind::KPrime => m.dg_x.iter().map(|v| vec![*v]).collect(),
        OperatorKind::W => (0..3)
            .map(|i| (0..3).map(|j| local_matrix_w_entry(m, kappa, a2, px, py, i, j)).collect())
            .collect(),
    }
}

/// `W` entry for test hat `i` on `px` and trial hat `j` on `py` (Maue identity).
#[inline]
pub(crate) fn local_matrix_w_entry(m: &PairIntegrals, kappa: C64, a2: f64, px: &Panel, py: &Panel, i: usize, j: usize) -> C64 {
    let nn = geometry::dot(&px.normal, &py.normal);
    (m.g * geometry::dot(&px.curls[i], &py.curls[j]) + kappa * kappa * nn * m.g_ll[i][j]) * a2
}

/// Local Galerkin matrix of `kind` for test panel `px` and trial panel `py`.
///
/// `vertices_x`/`vertices_y` are the global vertex indices used to classify the pair; `order`
/// is the Gauss order per dimension for singular pairs and the collapsed order per panel for
/// disjoint pairs.
pub fn panel_pair_integral(
    kind: OperatorKind,
    s: C64,
    medium: &Medium,
    px: &Panel,
    vertices_x: &[usize; 3],
    py: &Panel,
    vertices_y: &[usize; 3],
    order: usize,
) -> Vec<Vec<C64>> {
    let kappa = medium.kappa(s);
    let moments = |px: &Panel, vx: &[usize; 3], py: &Panel, vy: &[usize; 3]| {
        let class = classify_pair(vx, vy);
        if class.kind == PairKind::Disjoint {
            integrate_regular(kappa, px, &PanelQuad::new(px, order), py, &PanelQuad::new(py, order))
        } else {
            integrate_singular(kappa, px, py, &class, &singular_rule(class.kind, order))
        }
    };
    // Evaluate in a canonical panel order so that swapping the panels transposes exactly.
    let m = if canonical_order(vertices_x, vertices_y) {
        moments(px, vertices_x, py, vertices_y)
    } else {
        moments(py, vertices_y, px, vertices_x).swapped()
    };
    local_matrix(kind, &m, kappa, medium, px, py)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn panel(p: [[f64; 3]; 3]) -> Panel {
        Panel::new(p)
    }

    /// Brute-force V integral by uniform subdivision of both panels.
    fn brute_force_v(kappa: C64, px: &Panel, py: &Panel, depth: u32, order: usize) -> C64 {
        fn split(p: &[[f64; 3]; 3], depth: u32) -> Vec<[[f64; 3]; 3]> {
            if depth == 0 {
                return vec![*p];
            }
            let m01 = geometry::midpoint(&p[0], &p[1]);
            let m12 = geometry::midpoint(&p[1], &p[2]);
            let m20 = geometry::midpoint(&p[2], &p[0]);
            [[p[0], m01, m20], [m01, p[1], m12], [m20, m12, p[2]], [m01, m12, m20]]
                .iter()
                .flat_map(|c| split(c, depth - 1))
                .collect()
        }
        let qs = |p: &Panel| -> Vec<(Point, f64)> {
            split(&p.points, depth)
                .into_iter()
                .flat_map(|c| {
                    let sub = Panel::new(c);
                    let q = PanelQuad::new(&sub, order);
                    q.points.into_iter().zip(q.weights).collect::<Vec<_>>()
                })
                .collect()
        };
        let (a, b) = (qs(px), qs(py));
        let mut sum = C64::default();
        for (x, wx) in &a {
            for (y, wy) in &b {
                sum += green(kappa, geometry::dist(x, y)) * (wx * wy);
            }
        }
        sum
    }

    #[test]
    fn disjoint_v_matches_brute_force() {
        let px = panel([[0.0, 0.0, 0.0], [0.4, 0.0, 0.0], [0.0, 0.3, 0.05]]);
        let py = panel([[0.9, 0.1, 0.2], [1.2, 0.5, 0.1], [0.8, 0.4, 0.5]]);
        let m = Medium::default();
        let s = C64::new(1e-9, 0.0);
        let v = panel_pair_integral(OperatorKind::V, s, &m, &px, &[0, 1, 2], &py, &[3, 4, 5], 8)[0][0];
        let reference = brute_force_v(m.kappa(s), &px, &py, 2, 6);
        assert!((v - reference).norm() < 1e-8 * reference.norm(), "{v} vs {reference}");
    }

    #[test]
    fn disjoint_order_convergence() {
        let px = panel([[0.0, 0.0, 0.0], [0.4, 0.0, 0.0], [0.0, 0.3, 0.05]]);
        let py = panel([[0.7, 0.1, 0.2], [1.0, 0.5, 0.1], [0.6, 0.4, 0.5]]);
        let m = Medium::default();
        let s = C64::new(1.0, 2.0);
        let val = |n| panel_pair_integral(OperatorKind::V, s, &m, &px, &[0, 1, 2], &py, &[3, 4, 5], n)[0][0];
        let exact = val(12);
        let errs: Vec<f64> = (1..5).map(|n| (val(n) - exact).norm()).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] / 4.0, "{errs:?}");
        }
    }

    /// `∫_T∫_T e^{−κr}/(4πr)` for real κ: around each outer point the inner integral is
    /// reduced to `Σ_edges ∫ (1 − e^{−κρ})/(4πκ) dφ`, where `ρ(φ)` is the distance to the edge
    /// along direction `φ`. With `ρ = h cosh u` the angular integrand is smooth.
    fn identical_oracle(p: &Panel, kappa: f64) -> f64 {
        let (t, w) = super::super::gauss_legendre(40);
        let inner = |x: &Point| -> f64 {
            let mut total = 0.0;
            for e in 0..3 {
                let a = p.points[e];
                let b = p.points[(e + 1) % 3];
                let len = geometry::dist(&a, &b);
                let dir = geometry::scale(&geometry::sub(&b, &a), 1.0 / len);
                let sa = -geometry::dot(&geometry::sub(x, &a), &dir);
                let sb = sa + len;
                let h = geometry::norm(&geometry::sub(&geometry::sub(x, &a), &geometry::scale(&dir, -sa)));
                let (ua, ub) = ((sa / h).asinh(), (sb / h).asinh());
                for k in 0..t.len() {
                    let u = ua + (ub - ua) * t[k];
                    let rho = h * u.cosh();
                    total += w[k] * (ub - ua) * (1.0 - (-kappa * rho).exp()) / (kappa * u.cosh());
                }
            }
            total / (4.0 * PI)
        };
        // Outer integral on a graded split around the centroid; the inner function has
        // derivative singularities on the panel edges.
        let mut sum = 0.0;
        let mut subs: Vec<[Point; 3]> = (0..3).map(|e| [p.centroid, p.points[e], p.points[(e + 1) % 3]]).collect();
        for _ in 0..2 {
            subs = subs
                .iter()
                .flat_map(|t| {
                    let (m01, m12, m20) =
                        (geometry::midpoint(&t[0], &t[1]), geometry::midpoint(&t[1], &t[2]), geometry::midpoint(&t[2], &t[0]));
                    [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]]
                })
                .collect();
        }
        let subs: Vec<Panel> = subs.into_iter().map(Panel::new).collect();
        for sub in &subs {
            let q = PanelQuad::new(sub, 12);
            for (x, wx) in q.points.iter().zip(&q.weights) {
                sum += wx * inner(x);
            }
        }
        sum
    }

    #[test]
    fn identical_v_matches_radial_oracle() {
        let p = panel([[0.0, 0.0, 0.0], [0.3, 0.05, 0.0], [0.1, 0.25, 0.1]]);
        let m = Medium::default();
        for kappa in [0.5, 2.0] {
            let oracle = identical_oracle(&p, kappa);
            let v = panel_pair_integral(OperatorKind::V, C64::new(kappa, 0.0), &m, &p, &[0, 1, 2], &p, &[0, 1, 2], 4)[0][0];
            assert!(v.re > 0.0 && v.im.abs() < 1e-16);
            assert!((v.re - oracle).abs() < 5e-5 * oracle, "{} vs {oracle}", v.re);
            let v8 = panel_pair_integral(OperatorKind::V, C64::new(kappa, 0.0), &m, &p, &[0, 1, 2], &p, &[0, 1, 2], 8)[0][0];
            assert!((v8.re - oracle).abs() < 1e-6 * oracle, "{} vs {oracle}", v8.re);
        }
    }

    #[test]
    fn swapping_panels_transposes() {
        let px = panel([[0.0, 0.0, 0.0], [0.4, 0.0, 0.0], [0.0, 0.3, 0.05]]);
        let py = panel([[0.4, 0.0, 0.0], [0.0, 0.3, 0.05], [0.5, 0.4, 0.3]]);
        let m = Medium::new(1.3, 0.8).unwrap();
        let s = C64::new(1.0, 2.0);
        let (vx, vy) = ([0, 1, 2], [1, 2, 3]);
        let v_xy = panel_pair_integral(OperatorKind::V, s, &m, &px, &vx, &py, &vy, 4)[0][0];
        let v_yx = panel_pair_integral(OperatorKind::V, s, &m, &py, &vy, &px, &vx, 4)[0][0];
        assert!((v_xy - v_yx).norm() < 1e-14 * v_xy.norm());
        let w_xy = panel_pair_integral(OperatorKind::W, s, &m, &px, &vx, &py, &vy, 4);
        let w_yx = panel_pair_integral(OperatorKind::W, s, &m, &py, &vy, &px, &vx, 4);
        let k_xy = panel_pair_integral(OperatorKind::K, s, &m, &px, &vx, &py, &vy, 4);
        let kp_yx = panel_pair_integral(OperatorKind::KPrime, s, &m, &py, &vy, &px, &vx, 4);
        for i in 0..3 {
            assert!((k_xy[0][i] - kp_yx[i][0]).norm() < 1e-14);
            for j in 0..3 {
                assert!((w_xy[i][j] - w_yx[j][i]).norm() < 1e-13 * w_xy[i][j].norm().max(1e-3));
            }
        }
    }

    #[test]
    fn singular_rule_agrees_with_near_rule_on_close_panels() {
        // Vertex-type transform applied to a pair separated by a small gap.
        let px = panel([[0.0, 0.0, 0.0], [0.4, 0.0, 0.0], [0.0, 0.3, 0.0]]);
        let gap = 0.05;
        let py = panel([[-gap, 0.0, 0.0], [-0.4, 0.1, 0.0], [-0.2, -0.3, 0.1]]);
        let m = Medium::default();
        let kappa = m.kappa(C64::new(1.0, 1.0));
        let class = PairClass { kind: PairKind::SharedVertex, perm_x: [0, 1, 2], perm_y: [0, 1, 2] };
        let ss = integrate_singular(kappa, &px, &py, &class, &singular_rule(PairKind::SharedVertex, 4));
        let near = integrate_regular(kappa, &px, &PanelQuad::new(&px, 5), &py, &PanelQuad::new(&py, 5));
        assert!((ss.g - near.g).norm() < 0.01 * near.g.norm());
    }

    #[test]
    fn tiers_by_distance() {
        let o = QuadratureOrders::default();
        let px = panel([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.0, 0.1, 0.0]]);
        let near = panel([[0.15, 0.0, 0.0], [0.25, 0.0, 0.0], [0.15, 0.1, 0.0]]);
        let far = panel([[2.0, 0.0, 0.0], [2.1, 0.0, 0.0], [2.0, 0.1, 0.0]]);
        assert_eq!(o.regular_order(&px, &near), o.near);
        assert_eq!(o.regular_order(&px, &far), o.far);
    }
}
