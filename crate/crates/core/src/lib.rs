//! Whitening-preprocessed sparse NMF for identifying buried-object radar
//! signatures against a labeled dictionary.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the command-line tool uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
mod error;
pub mod identify;
pub mod model_file;
mod scalar;
pub mod signals;
pub mod snmf;
pub mod stats;
pub mod whitening;

pub use eigen::{sym_eig, EigenPair};
pub use error::{Error, Result};
pub use identify::{
    build_model, evaluate, identify, rectify, transductive_whiten, Evaluation, IdentificationModel,
    IdentificationResult, INDETERMINATE,
};
pub use model_file::{load_model, save_model, ModelFile};
pub use scalar::Scalar;
pub use signals::{
    load_ensemble, ricker_wavelet, save_ensemble, save_matrix, synth_trace, time_gate, Benchmark,
    BenchmarkSpec, Ensemble, Signal,
};
pub use snmf::{
    beta_divergence, fit_nmf, objective, solve_activations, update_activations, update_dictionary,
    Activations, Dictionary, Init, NonNegMatrix, SolverConfig,
};
pub use whitening::{
    cross_correlation, diagonality, estimate_moments, whiten, whitening_matrix, Moments,
    WhiteningMethod, WhiteningModel, DEFAULT_EIG_FLOOR,
};

pub type Signal64 = Signal<f64>;
pub type Ensemble64 = Ensemble<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type Dictionary64 = Dictionary<f64>;
pub type WhiteningModel64 = WhiteningModel<f64>;
pub type IdentificationModel64 = IdentificationModel<f64>;
pub type IdentificationResult64 = IdentificationResult<f64>;

pub type Signal32 = Signal<f32>;
pub type Ensemble32 = Ensemble<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type IdentificationModel32 = IdentificationModel<f32>;
