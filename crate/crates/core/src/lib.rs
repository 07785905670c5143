//! Frame averaging: exact symmetrization of arbitrary models by averaging
//! over small, input-dependent subsets of a symmetry group.

#![allow(clippy::needless_range_loop)]

pub mod backbone;
pub mod cli;
pub mod fa;
pub mod frame;
pub mod graphio;
pub mod group;
pub mod numeric;
