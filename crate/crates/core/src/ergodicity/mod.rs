//! Measurement tools for the long-time behaviour of coupled solutions:
//! weighted-L¹ contraction curves, decay-rate fits, the comparison ODE,
//! scalar Wasserstein distances and invariant-measure sampling.

mod curve;
mod fit;
mod invariant;
mod ode;
mod wasserstein;

pub use curve::{
    contraction_curve, contraction_curve_from_pairs, estimate_super_constant, ContractionCurve,
    PathSummary,
};
pub use fit::{
    default_window, fit_exponential, fit_polynomial, DecayFit, DecayModel, MIN_FIT_POINTS,
};
pub use invariant::{
    invariant_sampler, observables, sample_path, ObservableRecord, ObservableSamples, Observables,
};
pub use ode::{
    bounded_by_comparison, comparison_ode, comparison_ode_rk4, first_crossing, COMPARISON_TOLERANCE,
};
pub use wasserstein::w1_scalar;
