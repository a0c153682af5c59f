//! Independent reference computations: a dense spectral propagator and exact
//! verifiers for the integration-by-parts identities and the inequalities the
//! analysis relies on.

pub mod green;
pub mod lemmas;
pub mod series;
pub mod spectral;
pub mod suite;

pub use green::{green_battery, green_residual, GreenCase, GreenReport};
pub use series::{Piecewise, Series};
pub use spectral::{dense_decompose, exact_propagator, SpectralDecomposition};
pub use lemmas::{
    best_linear_fit, hardy_bound, norm_equivalence_report, pointwise_sqrt_bound, EquivalenceReport,
    HardyPieces, LinearFit, PointwiseReport,
};
pub use suite::{verify, Check, Suite, VerificationReport};
