//! Oracles that recompute expected values by routes independent of
//! `boole-core`'s algorithms. Only the plain data types are shared.

pub mod glue;
pub mod hull;
pub mod random;
