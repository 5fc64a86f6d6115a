//! Data-oblivious random sketches and the random-matrix machinery used to
//! predict how well they work.
//!
//! The crate covers four sketch families (Gaussian, subsampled randomized
//! Hadamard, Clarkson-Woodruff and uniform row sampling), a Tracy-Widom F1
//! evaluator, closed-form approximations to the subspace-embedding and
//! preconditioned-solver convergence probabilities, the Monte-Carlo oracles
//! that check those approximations, and a small experiment harness that
//! writes JSON/CSV result files.

pub mod embedding;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod rmt;
pub mod rng;
pub mod sketch;
pub mod solver;
pub mod stats;
pub mod tracy_widom;

pub use embedding::{
    bootstrap_rows, distortion, distortion_from_gram, empirical_embedding_cdf, leverage_summary,
    simulate_wishart_extremes, simulate_wishart_trials, sketch_embedding_trials, thin_svd_factor,
    EmbeddingTrialSet, LeverageSummary, OrthonormalFactor, TrialSource,
};
pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use rmt::{
    constants_max, constants_min, convergence_prob_approx, eigenvalue_limits,
    embedding_prob_approx, uniform_embedding_lower_bound, AsymptoticRegime, TwApproxConstants,
    UniformBound,
};
pub use sketch::{apply_sketch, build_sketch, fwht_inplace, SketchKind, SketchOperator, SketchSpec};
pub use solver::{
    convergence_experiment, exact_solve, sketched_solve, LeastSquaresProblem, RateRow,
    SolveOptions, SolveReport,
};
pub use tracy_widom::{tw_cdf, tw_quantile, TwTable};

/// Version string embedded in every result record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
