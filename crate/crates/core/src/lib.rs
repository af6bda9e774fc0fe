//! Co-authorship network analysis of bibliographic records: corpus parsing,
//! address normalization, whole and fractional counting, network metrics,
//! community detection, comparison statistics, information-theoretic
//! predictor tests, and Pajek/SVG output.

pub mod address;
pub mod community;
pub mod corpus;
pub mod counting;
pub mod divergence;
pub mod error;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
