//! Scalar numerical building blocks: Bessel functions, Gauss–Legendre rules,
//! bracketing root-finding and one-dimensional maximization.

mod bessel;
mod legendre;
mod optimize;
mod roots;

pub use bessel::{bessel_i0, bessel_i0_scaled, bessel_i1, bessel_i1_scaled};
pub use legendre::GaussLegendre;
pub use optimize::{golden_section_maximize, grid_then_golden, Maximum};
pub use roots::brent_root;
