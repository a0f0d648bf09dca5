//! Analytic boundary-data families with closed-form Laplace transforms.
//!
//! Every family is evaluated either at a Laplace frequency `s` or at a time `t`; time
//! values are real and returned with zero imaginary part.

use crate::geometry::{self, Point};
use crate::quadrature::Medium;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Where a data function is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eval {
    Laplace(C64),
    Time(f64),
}

/// Boundary data `g_D`, `d_N`, `d_I`. Normals are outward from the subdomain carrying the
/// triangle and `medium` is that subdomain's material.
pub trait BoundaryData: Send + Sync {
    fn dirichlet(&self, at: Eval, x: &Point, medium: &Medium) -> C64;
    /// Conormal derivative `a² ∂_n u`.
    fn neumann(&self, at: Eval, x: &Point, n: &Point, medium: &Medium) -> C64;
    /// `a² ∂_n u + a p ∂_t u` (default impedance closure).
    fn impedance(&self, at: Eval, x: &Point, n: &Point, medium: &Medium) -> C64;
    fn name(&self) -> String;
}

/// Causal window `P(t) = (1 − cos(2π (t − t₀)/τ))² / 4` on `[t₀, t₀ + τ]`, zero elsewhere.
/// Its value, first and second derivative vanish at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub width: f64,
    pub onset: f64,
}

impl Pulse {
    pub fn value(&self, t: f64) -> f64 {
        let x = t - self.onset;
        if x <= 0.0 || x >= self.width {
            return 0.0;
        }
        let c = 1.0 - (2.0 * PI * x / self.width).cos();
        0.25 * c * c
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let x = t - self.onset;
        if x <= 0.0 || x >= self.width {
            return 0.0;
        }
        let w = 2.0 * PI / self.width;
        0.5 * (1.0 - (w * x).cos()) * w * (w * x).sin()
    }

    /// `∫₀^∞ e^{−st} P(t) dt`.
    pub fn laplace(&self, s: C64) -> C64 {
        let w = 2.0 * PI / self.width;
        let s2 = s * s;
        let bracket = 1.5 / s - 2.0 * s / (s2 + w * w) + 0.5 * s / (s2 + 4.0 * w * w);
        0.25 * (-s * self.onset).exp() * (1.0 - (-s * self.width).exp()) * bracket
    }
}

/// `u = P(t − p r/a) / (4π a² r)` with `r = |x − y₀|`, or `k̂(s, x − y₀)·P̂(s)` in Laplace
/// domain (`P̂ = 1` without a pulse). Solves the homogeneous equation away from `y₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSource {
    pub source: Point,
    pub amplitude: f64,
    pub pulse: Option<Pulse>,
}

impl PointSource {
    pub fn new(source: Point) -> Self {
        Self { source, amplitude: 1.0, pulse: None }
    }

    pub fn with_pulse(mut self, pulse: Pulse) -> Self {
        self.pulse = Some(pulse);
        self
    }

    /// Value, conormal derivative along `n`, and time derivative.
    fn evaluate(&self, at: Eval, x: &Point, n: &Point, m: &Medium) -> (C64, C64, C64) {
        let d = geometry::sub(x, &self.source);
        let r = geometry::norm(&d);
        let dn = geometry::dot(&d, n) / r;
        let a2 = m.a * m.a;
        match at {
            Eval::Laplace(s) => {
                let kappa = m.kappa(s);
                let shape = self.pulse.map_or(C64::new(1.0, 0.0), |p| p.laplace(s)) * self.amplitude;
                let g = (-kappa * r).exp() / (4.0 * PI * r);
                let u = g / a2 * shape;
                let un = -g * (kappa + 1.0 / r) * dn * shape;
                (u, un, u * s)
            }
            Eval::Time(t) => {
                let p = self.pulse.expect("time-domain point source needs a pulse");
                let tau = t - m.p * r / m.a;
                let (v, dv) = (p.value(tau) * self.amplitude, p.derivative(tau) * self.amplitude);
                let u = v / (4.0 * PI * a2 * r);
                let un = -(dv * m.p * r / m.a + v) / (4.0 * PI * r * r) * dn;
                let ut = dv / (4.0 * PI * a2 * r);
                (C64::new(u, 0.0), C64::new(un, 0.0), C64::new(ut, 0.0))
            }
        }
    }
}

impl BoundaryData for PointSource {
    fn dirichlet(&self, at: Eval, x: &Point, medium: &Medium) -> C64 {
        self.evaluate(at, x, &[0.0, 0.0, 1.0], medium).0
    }

    fn neumann(&self, at: Eval, x: &Point, n: &Point, medium: &Medium) -> C64 {
        self.evaluate(at, x, n, medium).1
    }

    fn impedance(&self, at: Eval, x: &Point, n: &Point, medium: &Medium) -> C64 {
        let (_, un, ut) = self.evaluate(at, x, n, medium);
        un + ut * (medium.a * medium.p)
    }

    fn name(&self) -> String {
        "point-source".into()
    }
}

/// Dirichlet bump `cos²(π θ / (2 θ_c))` on the polar cap `θ < θ_c` around `+z`, times a
/// pulse. Neumann and impedance data vanish.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapBump {
    pub theta_cap: f64,
    pub amplitude: f64,
    pub pulse: Pulse,
}

impl CapBump {
    fn profile(&self, x: &Point) -> f64 {
        let theta = (x[2] / geometry::norm(x)).clamp(-1.0, 1.0).acos();
        if theta >= self.theta_cap {
            0.0
        } else {
            (PI * theta / (2.0 * self.theta_cap)).cos().powi(2) * self.amplitude
        }
    }
}

impl BoundaryData for CapBump {
    fn dirichlet(&self, at: Eval, x: &Point, _: &Medium) -> C64 {
        let b = self.profile(x);
        match at {
            Eval::Laplace(s) => self.pulse.laplace(s) * b,
            Eval::Time(t) => C64::new(self.pulse.value(t) * b, 0.0),
        }
    }

    fn neumann(&self, _: Eval, _: &Point, _: &Point, _: &Medium) -> C64 {
        C64::default()
    }

    fn impedance(&self, _: Eval, _: &Point, _: &Point, _: &Medium) -> C64 {
        C64::default()
    }

    fn name(&self) -> String {
        "cap-bump".into()
    }
}

/// All data identically zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroData;

impl BoundaryData for ZeroData {
    fn dirichlet(&self, _: Eval, _: &Point, _: &Medium) -> C64 {
        C64::default()
    }

    fn neumann(&self, _: Eval, _: &Point, _: &Point, _: &Medium) -> C64 {
        C64::default()
    }

    fn impedance(&self, _: Eval, _: &Point, _: &Point, _: &Medium) -> C64 {
        C64::default()
    }

    fn name(&self) -> String {
        "zero".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{gauss_legendre, kernel_eval};

    #[test]
    fn pulse_transform_matches_quadrature() {
        let p = Pulse { width: 1.5, onset: 0.4 };
        let (x, w) = gauss_legendre(40);
        for s in [C64::new(1.0, 0.0), C64::new(0.5, 3.0), C64::new(4.0, -2.0)] {
            let num: C64 = x.iter().zip(&w).map(|(xi, wi)| {
                let t = p.onset + p.width * xi;
                (-s * t).exp() * p.value(t) * (wi * p.width)
            }).sum();
            assert!((num - p.laplace(s)).norm() < 1e-12, "{s}");
        }
        assert_eq!(p.value(0.3), 0.0);
        assert!((p.value(0.4 + 0.75) - 1.0).abs() < 1e-15);
        let h = 1e-6;
        let t = 0.9;
        assert!(((p.value(t + h) - p.value(t - h)) / (2.0 * h) - p.derivative(t)).abs() < 1e-8);
    }

    #[test]
    fn point_source_matches_kernel_and_derivatives() {
        let m = Medium::new(1.3, 0.8).unwrap();
        let src = PointSource::new([0.0, 0.0, 2.0]);
        let x = [0.3, 0.2, 0.5];
        let s = C64::new(1.0, 2.0);
        let u = src.dirichlet(Eval::Laplace(s), &x, &m);
        assert!((u - kernel_eval(s, &geometry::sub(&x, &src.source), &m).unwrap()).norm() < 1e-16);
        let n = geometry::normalize(&[0.1, -0.4, 0.9]);
        let h = 1e-6;
        let fd = (src.dirichlet(Eval::Laplace(s), &geometry::add(&x, &geometry::scale(&n, h)), &m)
            - src.dirichlet(Eval::Laplace(s), &geometry::sub(&x, &geometry::scale(&n, h)), &m))
            / (2.0 * h)
            * (m.a * m.a);
        assert!((fd - src.neumann(Eval::Laplace(s), &x, &n, &m)).norm() < 1e-8);
        let timed = src.with_pulse(Pulse { width: 1.0, onset: 0.0 });
        let t = 2.0;
        let fd = (timed.dirichlet(Eval::Time(t), &geometry::add(&x, &geometry::scale(&n, h)), &m)
            - timed.dirichlet(Eval::Time(t), &geometry::sub(&x, &geometry::scale(&n, h)), &m))
            / (2.0 * h)
            * (m.a * m.a);
        assert!((fd - timed.neumann(Eval::Time(t), &x, &n, &m)).norm() < 1e-7);
    }
}
