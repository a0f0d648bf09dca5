//! Frozen reference values computed independently (30-digit quadrature and series
//! expansion) and compared with the library.

use wavebem::mesh::{generate_builtin, BuiltinKind, Subdomain};
use wavebem::operators::{assemble_operators, Wanted};
use wavebem::quadrature::{Medium, QuadratureOrders};
use wavebem::signals::Pulse;
use wavebem::solver::{cq_weights, CqScheme};
use wavebem::C64;

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1e-300)
}

#[test]
fn pulse_transform_matches_quadrature() {
    let p = Pulse { width: 2.0, onset: 0.5 };
    let got = p.laplace(C64::new(1.0, 2.0));
    let want = C64::new(-0.14171762896557104, -0.04447897225026029);
    assert!(close(got, want, 1e-12), "{got} vs {want}");
}

/// `⟨V(s)1, 1⟩ = 4π (1 − e^{−2s}) / (2s)` on the unit sphere.
#[test]
fn sphere_single_layer_of_constant() {
    let s = C64::new(1.0, 2.0);
    let want = C64::new(1.1103857251129652, -2.864308358768794);
    let b = generate_builtin(BuiltinKind::Icosphere { level: 3 }).unwrap().boundary(Subdomain::One);
    let v = assemble_operators(s, &b, &Medium::default(), Wanted { v: true, k: false, w: false }, &QuadratureOrders::default())
        .unwrap()
        .v
        .unwrap();
    let mut total = C64::new(0.0, 0.0);
    for i in 0..v.nrows() {
        for j in 0..v.ncols() {
            total += v[(i, j)];
        }
    }
    assert!(close(total, want, 0.02), "{total} vs {want}");
}

#[test]
fn bdf2_integration_weights() {
    let want = [0.066666666666666667, 0.088888888888888889, 0.096296296296296296, 0.098765432098765432, 0.099588477366255144, 0.099862825788751715, 0.099954275262917238];
    let w = cq_weights(CqScheme::Bdf2, &|s| 1.0 / s, 0.1, 32, 1e-15f64.powf(1.0 / 66.0)).unwrap();
    for (k, &x) in want.iter().enumerate() {
        assert!((w[k].re - x).abs() < 1e-7 && w[k].im.abs() < 1e-7, "w[{k}] = {}", w[k]);
    }
}

#[test]
fn half_derivative_weights() {
    let want = [3.1622776601683793, -1.5811388300841897, -0.39528470752104742, -0.19764235376052371, -0.12352647110032732, -0.086468529770229122, -0.064851397327671842];
    let w = cq_weights(CqScheme::Bdf1, &|s| s.sqrt(), 0.1, 64, 0.7).unwrap();
    for (k, &x) in want.iter().enumerate() {
        assert!((w[k].re - x).abs() < 1e-8, "w[{k}] = {}", w[k]);
    }
}

#[test]
fn bdf2_half_integration_weights() {
    let want = [0.25819888974716113, 0.17213259316477408, 0.12909944487358056, 0.10519214026736194, 0.090449302426860456, 0.080487925507602697, 0.073249324946275391];
    let w = cq_weights(CqScheme::Bdf2, &|s| 1.0 / s.sqrt(), 0.1, 64, 0.7).unwrap();
    for (k, &x) in want.iter().enumerate() {
        assert!((w[k].re - x).abs() < 1e-8, "w[{k}] = {}", w[k]);
    }
}
