//! Causal-DAG-guided model selection.
//!
//! Given a population of trained predictive models, a dataset, and a causal
//! DAG over the dataset's variables, this crate scores each model by how well
//! its predictions respect the causal structure and combines that score with
//! an ordinary statistical metric (validation MSE or AUROC). Selecting by the
//! combined score tends to pick models that hold up better under distribution
//! shift than selecting by the statistical metric alone.
//!
//! The pieces:
//!
//! * [`graph`] — DAG representation, validation, pruning, imposter mutations,
//!   Markov equivalence class size.
//! * [`data`] — typed tables, CSV ingestion, splits, scaling, prediction
//!   substitution, OOD holdouts.
//! * [`scoring`] — entropy-based log-likelihood and BIC of a dataset under a
//!   DAG, plus the graph-fitness term used for selection.
//! * [`cam`] — the combined selection score and the selection loop itself.
//! * [`synth`] — synthetic structural causal models and benchmark datasets.
//! * [`mlp`] — a small deterministic MLP regressor/classifier population.
//! * [`eval`] — MSE, AUROC, top-fraction means, inversion counts, report
//!   assembly.
//! * [`experiments`] — end-to-end experiment presets with reproducible run
//!   directories.
//!
//! Everything is deterministic given explicit seeds: repeated runs with the
//! same inputs produce byte-identical artifacts.

pub mod cam;
pub mod data;
pub mod eval;
pub mod experiments;
pub mod graph;
pub mod mlp;
pub mod scoring;
pub mod seeding;
pub mod synth;
