//! Mean-diameter calculus for ℤ^d actions on compact metric spaces.
//!
//! The crate estimates Følner averages, mean diameters, Weyl pseudometrics
//! and Banach densities at finite scale, and uses them to test regularity of
//! factor maps and diam-mean equicontinuity of systems.

pub mod averaging;
pub mod catalog;
pub mod equicontinuity;
pub mod error;
pub mod experiment;
pub mod factors;
pub mod group;
pub mod systems;
pub mod verdict;

pub use error::{Error, Result};
