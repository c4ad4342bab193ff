//! Independent numerical oracles: quadrature, differentiation and root finding.

mod diff;
mod quadrature;
mod roots;

pub use diff::{default_step, differentiate_n};
pub use quadrature::{integrate, Quadrature, QuadratureResult};
pub use roots::find_root;
