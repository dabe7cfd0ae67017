//! Joint measurability of unsharp two-outcome observables, and the Bell-CHSH
//! bounds it implies.
//!
//! Smearing a sharp observable with parameter `lambda` mixes its outcomes;
//! below `lambda = 1/sqrt(2)` every pair of smeared observables has a joint
//! observable, which caps the smeared CHSH value at 2.

pub mod acceptance;
pub mod bell;
pub mod decompose;
pub mod error;
pub mod io;
pub mod joint;
pub mod operators;
pub mod sampling;
pub mod unsharp;

pub use error::{Error, Result};
