//! Evaluation toolkit for social robot navigation.
//!
//! * [`model`] and [`geometry`]: the episode data model.
//! * [`ingest`]: the JSON episode format and trajectory-table import.
//! * [`metrics`]: the hand-crafted metric suite with taxonomy codes.
//! * [`scenarios`]: scenario cards and trajectory classifiers.
//! * [`sim`]: a deterministic social-force pedestrian simulator.
//! * [`report`]: corpus summaries and policy comparison tables.
//! * [`cli`]: the `socnav` command-line front end.

// `!(a >= b)` rejects NaN along with the failing case
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod geometry;
pub mod ingest;
pub mod json;
pub mod metrics;
pub mod model;
pub mod report;
pub mod scenarios;
pub mod sim;
