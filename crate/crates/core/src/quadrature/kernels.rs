//! Laplace-domain fundamental solution `k̂(s, z) = exp(−s p |z| / a) / (4π a² |z|)`.

use crate::geometry::{self, Point};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("kernel evaluated at coincident points")]
    Singular,
    #[error("material coefficients must be positive and finite (a = {a}, p = {p})")]
    InvalidMaterial { a: f64, p: f64 },
}

/// Coefficients `(a, p)` of one subdomain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    pub a: f64,
    pub p: f64,
}

impl Medium {
    pub fn new(a: f64, p: f64) -> Result<Self, KernelError> {
        if a > 0.0 && p > 0.0 && a.is_finite() && p.is_finite() {
            Ok(Self { a, p })
        } else {
            Err(KernelError::InvalidMaterial { a, p })
        }
    }

    /// Decay rate `κ = s p / a`.
    #[inline]
    pub fn kappa(&self, s: C64) -> C64 {
        s * (self.p / self.a)
    }
}

impl Default for Medium {
    fn default() -> Self {
        Self { a: 1.0, p: 1.0 }
    }
}

/// Coefficients of both subdomains.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub a1: f64,
    pub p1: f64,
    pub a2: f64,
    pub p2: f64,
}

impl MaterialParams {
    pub fn new(a1: f64, p1: f64, a2: f64, p2: f64) -> Result<Self, KernelError> {
        Medium::new(a1, p1)?;
        Medium::new(a2, p2)?;
        Ok(Self { a1, p1, a2, p2 })
    }

    pub fn uniform(medium: Medium) -> Self {
        Self { a1: medium.a, p1: medium.p, a2: medium.a, p2: medium.p }
    }

    pub fn medium(&self, sub: crate::mesh::Subdomain) -> Medium {
        match sub {
            crate::mesh::Subdomain::One => Medium { a: self.a1, p: self.p1 },
            crate::mesh::Subdomain::Two => Medium { a: self.a2, p: self.p2 },
        }
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::uniform(Medium::default())
    }
}

/// `e^{−κr} / (4π r)`, the kernel without the `1/a²` prefactor.
#[inline]
pub(crate) fn green(kappa: C64, r: f64) -> C64 {
    (-kappa * r).exp() / (4.0 * PI * r)
}

pub fn kernel_eval(s: C64, z: &Point, medium: &Medium) -> Result<C64, KernelError> {
    let r = geometry::norm(z);
    if r == 0.0 {
        return Err(KernelError::Singular);
    }
    Ok(green(medium.kappa(s), r) / (medium.a * medium.a))
}

/// `a² ∂/∂n_y k̂(s, x − y)`.
pub fn kernel_conormal(s: C64, x: &Point, y: &Point, n_y: &Point, medium: &Medium) -> Result<C64, KernelError> {
    let d = geometry::sub(x, y);
    let r = geometry::norm(&d);
    if r == 0.0 {
        return Err(KernelError::Singular);
    }
    let kappa = medium.kappa(s);
    Ok(green(kappa, r) * (1.0 + kappa * r) * (geometry::dot(&d, n_y) / (r * r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn kernel_values() {
        let m = Medium::default();
        let k = kernel_eval(c(1.0, 0.0), &[1.0, 0.0, 0.0], &m).unwrap();
        assert_relative_eq!(k.re, (-1f64).exp() / (4.0 * PI), max_relative = 1e-15);
        assert_relative_eq!(k.re, 0.029_276_4, max_relative = 1e-4);
        let k2 = kernel_eval(c(1.0, 0.0), &[0.0, 1.0, 0.0], &Medium::new(2.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(k2.re, (-0.5f64).exp() / (16.0 * PI), max_relative = 1e-15);
        assert_relative_eq!(k2.re, 0.012_067_1, max_relative = 1e-4);
        let k0 = kernel_eval(c(1e-12, 0.0), &[0.0, 0.0, 2.0], &m).unwrap();
        assert_relative_eq!(k0.re, 1.0 / (8.0 * PI), max_relative = 1e-11);
        assert_eq!(kernel_eval(c(1.0, 0.0), &[0.0; 3], &m), Err(KernelError::Singular));
    }

    #[test]
    fn conormal_values() {
        let m = Medium::default();
        let s = c(1.0, 2.0);
        let tangential = kernel_conormal(s, &[1.0, 0.0, 0.0], &[0.0; 3], &[0.0, 0.0, 1.0], &m).unwrap();
        assert_eq!(tangential, C64::new(0.0, 0.0));
        let newton = kernel_conormal(c(1e-14, 0.0), &[0.0, 0.0, 1.0], &[0.0; 3], &[0.0, 0.0, 1.0], &m).unwrap();
        assert_relative_eq!(newton.re, 1.0 / (4.0 * PI), max_relative = 1e-12);
        assert!(kernel_conormal(s, &[0.0; 3], &[0.0; 3], &[0.0, 0.0, 1.0], &m).is_err());
    }

    #[test]
    fn conormal_matches_finite_difference() {
        let m = Medium::new(1.5, 0.7).unwrap();
        let s = c(0.8, 1.3);
        let (x, y, n) = ([0.3, -0.2, 0.9], [0.1, 0.2, -0.1], geometry::normalize(&[0.2, 0.5, 1.0]));
        let h = 1e-6;
        let yp = geometry::add(&y, &geometry::scale(&n, h));
        let ym = geometry::sub(&y, &geometry::scale(&n, h));
        let fd = (kernel_eval(s, &geometry::sub(&x, &yp), &m).unwrap() - kernel_eval(s, &geometry::sub(&x, &ym), &m).unwrap())
            / (2.0 * h)
            * (m.a * m.a);
        let exact = kernel_conormal(s, &x, &y, &n, &m).unwrap();
        assert!((fd - exact).norm() < 1e-8 * exact.norm());
    }

    #[test]
    fn conormal_depends_on_a_only_through_decay() {
        let s = c(1.0, 0.5);
        let (x, y, n) = ([0.0, 0.0, 1.0], [0.0; 3], [0.0, 0.0, 1.0]);
        let k1 = kernel_conormal(s, &x, &y, &n, &Medium::new(1.0, 1.0).unwrap()).unwrap();
        let k2 = kernel_conormal(s * 2.0, &x, &y, &n, &Medium::new(2.0, 1.0).unwrap()).unwrap();
        assert!((k1 - k2).norm() < 1e-15);
    }

    #[test]
    fn conjugation_symmetry() {
        let m = Medium::new(1.3, 0.9).unwrap();
        let s = c(1.0, 3.0);
        let z = [0.4, -0.3, 0.2];
        let a = kernel_eval(s, &z, &m).unwrap();
        let b = kernel_eval(s.conj(), &z, &m).unwrap();
        assert!((a.conj() - b).norm() < 1e-16);
        let n = [0.0, 0.6, 0.8];
        let a = kernel_conormal(s, &z, &[0.0; 3], &n, &m).unwrap();
        let b = kernel_conormal(s.conj(), &z, &[0.0; 3], &n, &m).unwrap();
        assert!((a.conj() - b).norm() < 1e-16);
    }

    #[test]
    fn modulus_bound() {
        let m = Medium::new(0.8, 1.2).unwrap();
        let sigma0 = 1.0;
        for im in [-5.0, 0.0, 2.0, 7.0] {
            for r in [0.1, 1.0, 3.0] {
                let k = kernel_eval(c(sigma0, im), &[r, 0.0, 0.0], &m).unwrap();
                let bound = (-sigma0 * m.p * r / m.a).exp() / (4.0 * PI * m.a * m.a * r);
                assert!(k.norm() <= bound * (1.0 + 1e-14));
            }
        }
    }
}
