//! The fixed-point engine: sources, moment updates, the temperature closure
//! and the two monotone branches.

mod contraction;
mod iterate;
mod newton;
mod scenario;
mod sources;
mod state;
mod transport;

pub use contraction::{contraction_ratio, ContractionDiagnostic};
pub use iterate::{
    default_hot_start, iterate, solve, solve_with, IterationRecord, IterationReport, Solution, SolveOptions, Timings,
    MONOTONE_SLACK,
};
pub use newton::{closure_residual, newton_point, newton_temperature};
pub use scenario::{
    from_celsius, to_celsius, AlbedoModel, AtmosphereScenario, Boundary, KappaModel, C_EARTH, C_SUN, TEMPERATURE_SCALE,
    T_EARTH, T_SUN,
};
pub use sources::{assemble_sources, assemble_sources_linear, ComponentSources, Sources};
pub use state::{Branch, Medium, RadiationState};
pub use transport::{compute_hk, update_moments, KernelMode, KernelSettings, Moments, SourceForm, Transport};
