//! Channel-capacity analysis for a small guarded-command language.
//!
//! The pipeline: [`gcl`] parses and unrolls programs, [`formula`] turns them
//! into bit-vector formulas, [`sat`] decides those formulas incrementally,
//! [`allsmt`] enumerates projected models, and [`qif`], [`selfcomp`] and
//! [`bmc`] build the analyses on top.

pub mod eval;
pub mod allsmt;
pub mod bmc;
pub mod formula;
pub mod gcl;
pub mod qif;
pub mod sat;
pub mod script;
pub mod selfcomp;
pub mod simplify;
pub mod smtlib;
pub mod symexec;
pub mod term;

pub use eval::{Env, Value};
pub use term::{Op, Sort, Term};
