//! Numerical building blocks shared by the physics modules.

pub mod dd;
pub mod quad;
pub mod special;

pub use dd::{DoubleDouble, NeumaierSum};
pub use quad::{Integral, QuadFailure, Quadrature};
