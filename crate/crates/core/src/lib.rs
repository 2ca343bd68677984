//! Certification of lattices whose layers are spherical 2-designs, and
//! numerical analysis of the height of the associated flat tori.

pub mod catalog;
pub mod design;
pub mod enumerate;
pub mod error;
pub mod exec;
pub mod gram;
pub mod height;
pub mod lll;
pub mod manifold;
pub mod modular;
pub mod rational;
pub mod report;
pub mod special;
pub mod theta;

pub use error::{Error, Result};
pub use exec::Exec;
pub use gram::{GramMatrix, LatticeDescriptor};
