//! Extraction, filtering, labeling and clone detection of security-related
//! code snippets from forum dumps.

pub mod classifier;
pub mod clone;
pub mod ingest;
pub mod ir;
pub mod lexer;
pub mod pipeline;
pub mod resolver;
pub mod rules;
pub mod scan;
pub mod synth;
