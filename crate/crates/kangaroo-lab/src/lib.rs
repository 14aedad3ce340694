//! Exact-arithmetic laboratory for studying the increase of the residual
//! order under permissible blowups in positive characteristic.
//!
//! The crate computes coefficient ideals, hypersurfaces of weak maximal
//! contact, residual orders and blowup transforms over finite fields, and
//! certifies detected residual-order increases ("kangaroos") against nine
//! executable necessary conditions.

pub mod analysis;
pub mod blowup;
pub mod contact;
pub mod error;
pub mod field;
pub mod ideal;
pub mod poly;
pub mod report;
pub mod scenario;
pub mod search;

pub use error::{Error, Result};
