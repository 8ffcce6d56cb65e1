//! Explicit dilations of row-contractive tuples satisfying twisted
//! commutation relations, built in finite truncations of a twisted Fock
//! space, together with a numerical verifier.

pub mod builder;
pub mod fock;
pub mod io;
pub mod linalg;
pub mod random;
pub mod tuple;
pub mod verifier;

pub use builder::{dilate, BuildError, BuildOptions, DilationModel};
pub use tuple::{AlgebraStructure, ClassReport, TupleSpec};
pub use verifier::{verify_all, VerificationReport, VerifyOptions};
