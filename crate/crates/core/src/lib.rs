//! Text representations, classifiers and evaluation tooling for hate speech
//! detection experiments, built around character n-gram graphs.

pub mod classifiers;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ngg;
pub mod preprocess;
pub mod representations;
pub mod runner;
pub mod significance;
pub mod synthetic;

pub use error::{Error, Result};
