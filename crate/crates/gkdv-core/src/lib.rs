//! Pseudospectral simulation and verification laboratory for the generalized
//! KdV equation with fractional-power nonlinearity `|u|^alpha du/dx`,
//! `alpha` in (0, 1).
//!
//! The crate provides:
//! - [`spectral`]: periodic grid, Fourier differentiation, the exact Airy
//!   group, dealiasing, and Japanese-bracket weights;
//! - [`dynamics`]: the nonlinear right-hand side with ETDRK4 and Strang
//!   integrators;
//! - [`picard`]: the Duhamel map, the composite X_T norm, and the
//!   fixed-point iteration with contraction reporting;
//! - [`diagnostics`]: conserved quantities, weighted norms, admissibility,
//!   lower-bound persistence, Kato smoothing, and the linear-group operator
//!   identity;
//! - [`regularity`]: cutoff families, moving-window energies, and the
//!   propagation-of-regularity experiment;
//! - [`reference`]: traveling waves and admissible lower-bounded data.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod picard;
pub mod reference;
pub mod regularity;
pub mod spectral;

pub use diagnostics::{
    admissibility_check, diagnostic_series, invariants, kato_smoothing_norm,
    operator_identity_residual, persistence_monitor, weighted_report, AdmissibilityVerdict,
    DiagnosticRow, InvariantTriple, PersistenceReport, WeightedReport,
};
pub use dynamics::{
    nonlinear_rhs, simulate, step_etdrk4, step_strang, Etdrk4Plan, ModelParams, Scheme, Sign,
    Trajectory, TrajectoryMeta,
};
pub use error::{Error, Result};
pub use picard::{
    contraction_time_search, duhamel_apply, free_evolution, picard_iterate, picard_solve,
    xt_distance, xt_norm, ContractionReport, XtNormReport,
};
pub use reference::{
    cazenave_naumkin_data, m_of_alpha, traveling_wave, tw_residual, ConstantMode,
    TravelingWaveSpec,
};
pub use regularity::{
    kink_profile, local_smoothing_integral, make_cutoff, one_sided_data, regularity_experiment,
    windowed_energy, CutoffFamily, FrontParams, RegularityReport,
};
pub use spectral::{Field, SpectralGrid};
