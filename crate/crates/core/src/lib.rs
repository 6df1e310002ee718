//! Exact and certified computations on modular curves: Mobius and Hecke
//! arithmetic over `GL_2(Q)^+`, CM points as unique fixed points, congruence
//! subgroups and their finite images, modular polynomials, the `j`-function,
//! axiom-scheme checks, mod-`p` Galois image certificates and type counting.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod analytic;
pub mod arith;
pub mod axiom;
pub mod congruence;
pub mod exec;
pub mod galois;
pub mod hecke;
pub mod linear;
pub mod numeric;
pub mod qseries;
pub mod roots;
pub mod types;

pub use linear::{CMPoint, ElementClass, LinearError, RatMatrix};
pub use numeric::{Cx, NumericPoint, Real};
