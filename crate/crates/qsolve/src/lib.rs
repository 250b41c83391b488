//! Branch-and-prune decision and paving procedures for quantified
//! inequality constraints over the reals, built on outward-rounded interval
//! arithmetic.

pub mod bench;
pub mod boxes;
pub mod branch;
pub mod constraint;
pub mod emit;
pub mod interval;
pub mod narrow;
pub mod oracle;
pub mod parse;
pub mod prune;
pub mod random;
pub mod solver;
pub mod svg;
pub mod term;
