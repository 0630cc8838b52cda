//! Bessel functions, their zeros, real spherical harmonics and quadrature rules.

pub mod bessel;
pub mod harmonics;
pub mod quadrature;
pub mod zeros;

pub use bessel::{bessel_j, bessel_j_prime, spherical_bessel_j, spherical_bessel_j_prime, MAX_ORDER};
pub use harmonics::{normalized_legendre_table, real_spherical_harmonic};
pub use quadrature::{gauss_legendre, periodic_trapezoid, quadrature_rule, QuadratureRule, RuleKind};
pub use zeros::{bessel_j_zero, spherical_bessel_zero};
