//! Numerical laboratory for non-local functionals of the BBM,
//! Bourgain–Nguyen and BSVY families: test fields with known seminorms,
//! deterministic and Monte Carlo evaluators, closed-form step oracles,
//! parameter sweeps with limit extrapolation and a command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constants;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod field;
pub mod functional;
pub mod geometry;
pub mod oracle;
pub mod quadrature;
