//! Generalized Bell inequalities for `N` parties with `k` settings and `d`
//! outcomes each.
//!
//! Functionals are built from a complex weight on correlation moments; their
//! local-realistic bounds come from exhaustive enumeration of deterministic
//! strategies, and their quantum values from explicit Fourier-type
//! measurements on maximally entangled states. CHSH, CGLMP, Mermin,
//! Żukowski–Brukner and Epping-type functionals are available as presets.

pub mod correlation;
pub mod ekb;
pub mod error;
pub mod format;
pub mod functional;
pub mod lhv;
pub mod probability;
pub mod quantum;
pub mod report;
pub mod scenario;

pub use correlation::{
    correlations_from_probabilities, probabilities_from_correlations, CorrelationTensor,
};
pub use ekb::{ekb_quantum_max, BetaMatrix};
pub use error::{Error, Result};
pub use functional::{
    coefficients_from_weight, preset_cglmp, preset_chsh, preset_ekb, preset_mermin, preset_zb,
    BellFunctional, CoefficientTensor, Preset, WeightFunction,
};
pub use lhv::{
    ekb_closed_form_bound, exact_lhv_bound, fixed_alpha_bound, zb_combined_bound_check,
    BoundMethod, BoundResult,
};
pub use num_complex::Complex64;
pub use probability::{
    random_table, table_from_mixture, table_from_strategy, DeterministicStrategy, LhvMixture,
    ProbabilityTable,
};
pub use quantum::{
    maximally_entangled_state, maximally_entangled_state_for_sign, me_quantum_max, quantum_value,
    violation_report, StateVector, ViolationReport,
};
pub use scenario::{RootOfUnity, Scenario, SignVector};
