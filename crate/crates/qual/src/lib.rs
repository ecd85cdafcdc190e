//! Quantitative forward and backward under-approximate reasoning about
//! resource usage for a small imperative language.

pub mod assert;
pub mod gen;
pub mod kernel;
pub mod lang;
pub mod semantics;
pub mod smt;
pub mod transform;
pub mod verify;
