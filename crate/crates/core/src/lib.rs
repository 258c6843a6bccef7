#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod grid;
pub mod io;
pub mod kernel;
pub mod operators;
pub mod quadrature;
pub mod random;
pub mod solver;
pub mod spectral;
pub mod varexp;
