//! Cross-language test generation, sandboxed evaluation and translation
//! pipelines for benchmarking code translation models.

pub mod codegen;
pub mod executor;
pub mod model;
pub mod mutation;
pub mod problem;
pub mod prompting;
pub mod pseudo;
pub mod report;
pub mod samples;
pub mod selftrain;
pub mod translate;

pub use report::Scalar;

pub type CaMatrix = report::CaMatrix<f64>;
pub type ScoreTable = report::ScoreTable<f64>;
pub type DeltaReport = report::DeltaReport<f64>;
pub type DeltaRow = report::DeltaRow<f64>;
