//! Attenuation along characteristics and the generalized exponential
//! integrals `E_k(kappa; z, z')`, directly or from a precomputed table.

pub mod expint;
mod path;
mod quadrature;
mod table;

pub use expint::{c1, expint, MAX_ORDER};
pub use path::{
    ek_approx, ek_general, order_index, phi, phi_bound_check, AltitudeShape, OpticalPath, DEFAULT_DZ_INNER, ORDERS,
};
pub use quadrature::{MuNode, QuadratureSpec};
pub use table::{table_gate, trapezoid_weights, KernelGeometry, KernelOperator, KernelTable, TableGate};
