//! Per-family scaling laws for multilingual pretraining mixtures.
//!
//! Each language family's test loss follows
//! `L(n, d, p) = (E + A * n^-alpha + B * d^-beta) * p^-gamma`, where `n` is the
//! model size in millions of non-embedding parameters, `d` the token budget in
//! billions and `p` the family's sampling ratio. The crate predicts losses,
//! fits the coefficients from run records, solves for loss-minimizing
//! mixtures, checks the cross-family independence assumption and expands
//! family mixtures into per-language schedules.

pub mod corpus;
pub mod diagnostics;
mod error;
pub mod fitting;
pub mod law;
pub mod mixture;
pub mod optimizer;
pub mod records;
pub mod reference;

pub use corpus::{
    effective_family_tokens, expand_schedule, load_manifest, within_family_ratios, CorpusManifest,
    LanguageSchedule,
};
pub use diagnostics::{
    independence_points, independence_report, transfer_slope, IndependenceReport, TransferSlope,
    Verdict,
};
pub use error::{Error, ErrorKind, Result};
pub use fitting::{fit_joint, fit_power_law, holdout_validate, FitConfig, FitReport, Residual};
pub use law::{
    mono_family_loss, normalized_family_loss, power_law_loss, predict_family_loss,
    predict_total_loss, FamilyParams, ParamsFile, PowerLawParams,
};
pub use mixture::{MixtureVector, PreferenceVector};
pub use optimizer::{
    baseline_by_tokens, baseline_smoothed, baseline_uniform, compare_strategies, solve,
    solve_exact, solve_first_order, solve_zero_order, Method, OptimizationProblem, SolveReport,
    StrategyTable,
};
pub use records::{read_records_jsonl, write_records_jsonl, RunRecord};
