//! Core engine for experiment-extraction benchmarks: canonical vocabularies,
//! quantities, compositions, the experiment data model with its process DSL,
//! validation rules, the JSON interchange format, and scoring.

pub mod assignment;
pub mod composition;
pub mod datamodel;
pub mod elements;
pub mod interchange;
pub mod ontology;
pub mod path;
pub mod quantities;
pub mod resolve;
pub mod scoring;
#[cfg(feature = "testgen")]
pub mod testgen;
pub mod validation;
