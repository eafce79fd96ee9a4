//! Nash–Kuiper convex integration with a codimension-one corrugation, for
//! constructing one-sided isometric C¹ extensions of boundary immersions.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod convexint;
pub mod corrugation;
pub mod decomposition;
pub mod evaluation;
pub mod geomcore;
pub mod interp;
pub mod models;
pub mod ode;
pub mod quadrature;
