//! Pessimistic cardinality bounds for join/pattern queries from degree
//! statistics, via an entropic linear program over bivariate moments of the
//! input relations.

pub mod cache;
pub mod catalog;
pub mod error;
pub mod experiment;
pub mod homcount;
pub mod lp;
pub mod moments;
pub mod relation;
pub mod venn;

pub use error::{Error, Result};
pub use relation::{ParseOptions, Relation};
