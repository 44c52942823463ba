//! Continued fractions, Diophantine sums and quantitative rigidity for Anzai
//! skew products `T(x, y) = (x + α, y + φ(x))` on the 2-torus.

pub mod contfrac;
pub mod counterexample;
pub mod diophantine;
pub mod dynamics;
pub mod error;
pub mod flows;
pub mod mobius;
pub mod numeric;
pub mod verify;

pub use error::{Error, Result};
