//! Gaussian smoothing in `A_r^l` and its layered version over an exhaustion.

pub mod cutoff;
pub mod kernel;
pub mod layered;
pub mod schedule;

pub use cutoff::{smooth_cutoff, CutoffProduct, CutoffSpec};
pub use kernel::{
    choose_kappa, mollify, mollify_derivatives, mollify_partial, normalization_t, phi_mass, phi_tail,
    DerivativeSource, MollifierParams, PartialMode, KAPPA_FLOOR,
};
pub use layered::{
    layered_approximate, Exhaustion, ExhaustionSpec, KappaSchedule, LayeredConfig, LayeredFunction, OrderBudget,
    StageDiagnostics, ValidationPolicy,
};
pub use schedule::{modulus_schedule, Modulus, ModulusInputs, ModulusStage};
