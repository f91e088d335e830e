//! Modular symbols for the congruence subgroups Gamma_0(N) and the
//! machinery for checking that they grow logarithmically in the matrix norm.

pub mod arith;
pub mod cli;
pub mod cusps;
pub mod error;
pub mod growth;
pub mod hyperbolic;
pub mod reduction;
pub mod series;
pub mod symbols;
pub mod words;

pub use arith::{GroupElement, TraceClass};
pub use error::{ModsymError, Result};
pub use hyperbolic::{ExactPoint, PointH};
