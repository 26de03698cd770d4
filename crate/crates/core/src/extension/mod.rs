//! Whitney-type extension on dyadic cubes.

pub mod analytic;
pub mod bump;
pub mod correction;
pub mod cubes;
pub mod staged;
pub mod whitney;

pub use analytic::{extend_analytic, AnalyticConfig, Extension, ExtensionDiagnostics, ExtensionResult, RingSpec};
pub use correction::{correct_at_point, Corrected, PointCorrection};
pub use staged::{staged_extend, StagedConfig, StagedReport};
pub use whitney::{whitney_extend, Branch, WhitneyExtension};
