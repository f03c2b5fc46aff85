//! Structure posets of finite two-dimensional poset fragments.
//!
//! A fragment has a minimum, a tier of height-one elements ("curves") and a
//! tier of height-two elements ("points"). On top of it this crate builds
//! the structure poset of pairs `(A|B)`, checks the P and J conditions in
//! finite-witness form, computes fiber statistics, and reconstructs a
//! fragment isomorphism from an isomorphism of structure posets.

pub mod bits;
pub mod conditions;
pub mod error;
pub mod exec;
pub mod io;
pub mod models;
pub mod poly;
pub mod poset;
pub mod reconstruction;
pub mod small_poset;
pub mod structure;

pub use bits::IdxSet;
pub use error::{Error, Result};
pub use exec::Exec;
pub use poset::{relabel, relabel_with, ElementId, IsoMap, Limits, PosetFragment, Tier};
pub use structure::StrNode;
