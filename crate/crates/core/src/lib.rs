#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Scale approximation from F0 traces.
//!
//! Pipeline per track: confidence filter, Hz to cents relative to the tonic,
//! 10-cent histogram, Gaussian mixtures fitted by EM for a range of sizes,
//! BIC selection, merging of close components, equal-temperament deviation
//! and scale-degree labels. [`corpus`] aggregates songs into retrieval
//! tables, deviation distributions and track comparisons; [`report`] writes
//! them to disk.

pub mod cli;
pub mod corpus;
pub mod ingest;
pub mod mixture;
pub mod report;
pub mod scale;
pub mod synth;
