//! Boundary layers of multistep finite difference schemes for outgoing
//! transport: scheme descriptions, symbol analysis, discrete boundary-layer
//! profiles and an IBVP driver that measures them.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary_layer;
pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod poly;
pub mod quadrature;
pub mod scheme;
pub mod simulator;
pub mod symbol;

pub use boundary_layer::{build_corrector, build_profile, profile_for, BoundaryLayerProfile, Layer};
pub use error::{Error, Result};
pub use scheme::{builtin_scheme, check_consistency, flux_coefficients, BuiltinScheme, SchemeSpec};
pub use simulator::{convergence_study, run, simulate, Grid, GridSolution, StoppingRule};
pub use symbol::{analyze, AnalysisOptions, SymbolAnalysis};
