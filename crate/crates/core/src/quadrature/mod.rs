//! Gauss rules on the reference triangle and Sauter–Schwab rules for panel pairs.
//!
//! All rules are expressed in barycentric coordinates of the panel. Single-triangle weights
//! sum to 1/2 (area of the reference triangle), pair weights to 1/4; the physical integral
//! multiplies by `2|τ|` per panel.

pub mod kernels;
pub(crate) mod pair;

pub use kernels::{kernel_conormal, kernel_eval, KernelError, MaterialParams, Medium};
pub use pair::{panel_pair_integral, OperatorKind, PairIntegrals, PanelQuad, QuadratureOrders};

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub order: usize,
    pub bary: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed (Duffy) tensor Gauss rule with `order²` points; exact for total degree
    /// `2·order − 2`.
    pub fn collapsed(order: usize) -> Self {
        let (t, w) = gauss_legendre(order);
        let mut bary = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for i in 0..order {
            for j in 0..order {
                let u = t[i];
                let v = t[j] * (1.0 - u);
                bary.push([1.0 - u - v, u, v]);
                weights.push(w[i] * w[j] * (1.0 - u));
            }
        }
        Self { order, bary, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Cached collapsed rule of the given order.
pub fn triangle_rule(order: usize) -> &'static TriangleRule {
    static RULES: OnceLock<Vec<TriangleRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=12).map(|n| TriangleRule::collapsed(n.max(1))).collect());
    &rules[order.clamp(1, 12)]
}

/// Relative position of two panels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairKind {
    Identical,
    SharedEdge,
    SharedVertex,
    Disjoint,
}

/// Pair classification with vertex permutations that move shared vertices to the front in
/// matching order: `perm_x[k]` is the local vertex of the first panel placed at position `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairClass {
    pub kind: PairKind,
    pub perm_x: [usize; 3],
    pub perm_y: [usize; 3],
}

pub fn classify_pair(tx: &[usize; 3], ty: &[usize; 3]) -> PairClass {
    let mut shared = Vec::with_capacity(3);
    for i in 0..3 {
        for j in 0..3 {
            if tx[i] == ty[j] {
                shared.push((i, j));
            }
        }
    }
    let rest = |used: &[usize]| -> Vec<usize> { (0..3).filter(|k| !used.contains(k)).collect() };
    match shared.len() {
        3 => {
            let mut perm_y = [0; 3];
            for &(i, j) in &shared {
                perm_y[i] = j;
            }
            PairClass { kind: PairKind::Identical, perm_x: [0, 1, 2], perm_y }
        }
        2 => {
            let (i0, j0) = shared[0];
            let (i1, j1) = shared[1];
            let ox = rest(&[i0, i1])[0];
            let oy = rest(&[j0, j1])[0];
            PairClass { kind: PairKind::SharedEdge, perm_x: [i0, i1, ox], perm_y: [j0, j1, oy] }
        }
        1 => {
            let (i, j) = shared[0];
            let rx = rest(&[i]);
            let ry = rest(&[j]);
            PairClass { kind: PairKind::SharedVertex, perm_x: [i, rx[0], rx[1]], perm_y: [j, ry[0], ry[1]] }
        }
        _ => PairClass { kind: PairKind::Disjoint, perm_x: [0, 1, 2], perm_y: [0, 1, 2] },
    }
}

/// Tensor rule on `T̂ × T̂` in barycentric coordinates of both panels (weights sum to 1/4).
#[derive(Clone, Debug)]
pub struct SingularRule {
    pub x: Vec<[f64; 3]>,
    pub y: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SingularRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

type SsMap = fn(f64, f64, f64, f64) -> ([f64; 2], [f64; 2], f64);

// Reference triangle T̂ = {0 ≤ x2 ≤ x1 ≤ 1}, with λ = (1 − x1, x1 − x2, x2).
const IDENTICAL: [SsMap; 6] = [
    |k, a, b, c| ([k, k * (1.0 - a + a * b)], [k * (1.0 - a * b * c), k * (1.0 - a)], k.powi(3) * a * a * b),
    |k, a, b, c| ([k * (1.0 - a * b * c), k * (1.0 - a)], [k, k * (1.0 - a + a * b)], k.powi(3) * a * a * b),
    |k, a, b, c| ([k, k * a * (1.0 - b + b * c)], [k * (1.0 - a * b), k * a * (1.0 - b)], k.powi(3) * a * a * b),
    |k, a, b, c| ([k * (1.0 - a * b), k * a * (1.0 - b)], [k, k * a * (1.0 - b + b * c)], k.powi(3) * a * a * b),
    |k, a, b, c| ([k * (1.0 - a * b * c), k * a * (1.0 - b * c)], [k, k * a * (1.0 - b)], k.powi(3) * a * a * b),
    |k, a, b, c| ([k, k * a * (1.0 - b)], [k * (1.0 - a * b * c), k * a * (1.0 - b * c)], k.powi(3) * a * a * b),
];

const EDGE: [SsMap; 5] = [
    |k, a, b, c| ([k, k * a * c], [k * (1.0 - a * b), k * a * (1.0 - b)], k.powi(3) * a * a),
    |k, a, b, c| ([k, k * a], [k * (1.0 - a * b * c), k * a * b * (1.0 - c)], k.powi(3) * a * a * b),
    |k, a, b, c| ([k * (1.0 - a * b), k * a * (1.0 - b)], [k, k * a * b * c], k.powi(3) * a * a * b),
    |k, a, b, c| ([k * (1.0 - a * b * c), k * a * b * (1.0 - c)], [k, k * a], k.powi(3) * a * a * b),
    |k, a, b, c| ([k * (1.0 - a * b * c), k * a * (1.0 - b * c)], [k, k * a * b], k.powi(3) * a * a * b),
];

const VERTEX: [SsMap; 2] = [
    |k, a, b, c| ([k, k * a], [k * b, k * b * c], k.powi(3) * b),
    |k, a, b, c| ([k * b, k * b * c], [k, k * a], k.powi(3) * b),
];

fn build_singular(maps: &[SsMap], n: usize) -> SingularRule {
    let (t, w) = gauss_legendre(n);
    let bary = |p: [f64; 2]| [1.0 - p[0], p[0] - p[1], p[1]];
    let mut rule = SingularRule { x: Vec::new(), y: Vec::new(), weights: Vec::new() };
    for map in maps {
        for i0 in 0..n {
            for i1 in 0..n {
                for i2 in 0..n {
                    for i3 in 0..n {
                        let (px, py, jac) = map(t[i0], t[i1], t[i2], t[i3]);
                        rule.x.push(bary(px));
                        rule.y.push(bary(py));
                        rule.weights.push(jac * w[i0] * w[i1] * w[i2] * w[i3]);
                    }
                }
            }
        }
    }
    rule
}

/// Sauter–Schwab rule for a singular pair with `n` Gauss points per dimension. The panels
/// must be ordered so that shared vertices come first and in the same order.
pub fn singular_rule(kind: PairKind, n: usize) -> SingularRule {
    match kind {
        PairKind::Identical => build_singular(&IDENTICAL, n),
        PairKind::SharedEdge => build_singular(&EDGE, n),
        PairKind::SharedVertex => build_singular(&VERTEX, n),
        PairKind::Disjoint => {
            let r = triangle_rule(n);
            let mut rule = SingularRule { x: Vec::new(), y: Vec::new(), weights: Vec::new() };
            for (lx, wx) in r.bary.iter().zip(&r.weights) {
                for (ly, wy) in r.bary.iter().zip(&r.weights) {
                    rule.x.push(*lx);
                    rule.y.push(*ly);
                    rule.weights.push(wx * wy);
                }
            }
            rule
        }
    }
}

/// Cached Sauter–Schwab rules for `n = 4`.
pub fn default_singular_rule(kind: PairKind) -> &'static SingularRule {
    static RULES: OnceLock<[SingularRule; 3]> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        [
            singular_rule(PairKind::Identical, 4),
            singular_rule(PairKind::SharedEdge, 4),
            singular_rule(PairKind::SharedVertex, 4),
        ]
    });
    match kind {
        PairKind::Identical => &rules[0],
        PairKind::SharedEdge => &rules[1],
        PairKind::SharedVertex => &rules[2],
        PairKind::Disjoint => panic!("no singular rule for disjoint pairs"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..10 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n} deg={deg}");
            }
            assert!(w.iter().all(|&w| w > 0.0));
        }
    }

    fn monomial_exact(p: i32, q: i32) -> f64 {
        // ∫ u^p v^q over the unit triangle = p! q! / (p + q + 2)!
        let f = |n: i32| (1..=n).map(f64::from).product::<f64>();
        f(p) * f(q) / f(p + q + 2)
    }

    #[test]
    fn collapsed_rule_exactness() {
        for order in 1..8 {
            let r = TriangleRule::collapsed(order);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            let max_deg = 2 * order as i32 - 2;
            for p in 0..=max_deg {
                for q in 0..=(max_deg - p) {
                    let val: f64 = r.bary.iter().zip(&r.weights).map(|(l, w)| w * l[1].powi(p) * l[2].powi(q)).sum();
                    assert!((val - monomial_exact(p, q)).abs() < 1e-14, "order {order} u^{p} v^{q}");
                }
            }
        }
    }

    #[test]
    fn singular_rules_have_unit_measure_and_valid_points() {
        for kind in [PairKind::Identical, PairKind::SharedEdge, PairKind::SharedVertex, PairKind::Disjoint] {
            let r = singular_rule(kind, 4);
            let total: f64 = r.weights.iter().sum();
            assert!((total - 0.25).abs() < 1e-14, "{kind:?}: {total}");
            for l in r.x.iter().chain(&r.y) {
                assert!(l.iter().all(|&c| (-1e-15..=1.0 + 1e-15).contains(&c)));
            }
        }
    }

    #[test]
    fn singular_rules_integrate_smooth_functions() {
        // A smooth pair integrand is reproduced by all transforms.
        let f = |x: &[f64; 3], y: &[f64; 3]| (x[1] + 2.0 * y[2]).exp() * (1.0 + x[2] * y[1]);
        let reference = singular_rule(PairKind::Disjoint, 10);
        let exact: f64 = (0..reference.len()).map(|i| reference.weights[i] * f(&reference.x[i], &reference.y[i])).sum();
        for kind in [PairKind::Identical, PairKind::SharedEdge, PairKind::SharedVertex] {
            let r = singular_rule(kind, 6);
            let val: f64 = (0..r.len()).map(|i| r.weights[i] * f(&r.x[i], &r.y[i])).sum();
            assert!((val - exact).abs() < 1e-9 * exact.abs(), "{kind:?}: {val} vs {exact}");
        }
    }

    #[test]
    fn classification_is_symmetric() {
        let cases = [
            ([0, 1, 2], [0, 1, 2], PairKind::Identical),
            ([0, 1, 2], [2, 1, 0], PairKind::Identical),
            ([0, 1, 2], [1, 0, 3], PairKind::SharedEdge),
            ([0, 1, 2], [4, 2, 3], PairKind::SharedVertex),
            ([0, 1, 2], [3, 4, 5], PairKind::Disjoint),
        ];
        for (a, b, kind) in cases {
            let ab = classify_pair(&a, &b);
            let ba = classify_pair(&b, &a);
            assert_eq!(ab.kind, kind);
            assert_eq!(ba.kind, kind);
            let shared = match kind {
                PairKind::Identical => 3,
                PairKind::SharedEdge => 2,
                PairKind::SharedVertex => 1,
                PairKind::Disjoint => 0,
            };
            for k in 0..shared {
                assert_eq!(a[ab.perm_x[k]], b[ab.perm_y[k]]);
            }
        }
    }
}
