//! Boundary element solver for the acoustic wave transmission problem on two subdomains
//! with Dirichlet, Neumann, impedance and interface conditions.

pub mod geometry;
pub mod mesh;
pub mod quadrature;

pub type C64 = num_complex::Complex64;
pub mod operators;
pub mod calderon;
pub mod linalg;
pub mod traces;
pub mod signals;
pub mod solver;
pub mod probes;
pub mod config;
pub mod app;
