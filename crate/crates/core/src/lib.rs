//! Radiative equilibrium of a stratified atmosphere with a slowly varying
//! refractive index, solved by iterating on the source term.
//!
//! Quantities are scaled: altitudes lie in `[0, 1]`, temperatures are in
//! units of 4798 K and the frequency `nu` corresponds to the wavelength
//! `3 / nu` micrometres. Radiative fields carry the `1/n^2` factor
//! internally (`I~ = I / n^2`).

pub mod error;
pub mod fields;
pub mod io;
pub mod kernels;
pub mod optics;
pub mod par;
pub mod physics;
pub mod solver;

pub use error::{Error, Result};
pub use par::Execution;
