//! Numerical diagnostics for the moment problem.
//!
//! Given a density or an integer pmf, the library evaluates integral, series
//! and ratio-monotonicity conditions on its tail, runs the maximizer
//! construction behind the Carleman route, and combines the evidence into a
//! determinacy verdict that records which rule fired and why.

pub mod conditions;
pub mod config;
pub mod distmodel;
pub mod error;
pub mod maximizer;
pub mod moments;
pub mod pipeline;
pub mod quadrature;
pub mod report;
pub mod tailfit;
pub mod verdict;

pub use config::Config;
pub use distmodel::{
    catalog, catalog_entry, family, CatalogEntry, DensitySpec, Distribution, MomentCase, PmfSpec,
    SpecRecipe, SupportKind, TransformStep,
};
pub use error::{Error, Result};
pub use pipeline::{analyze, Analysis};
pub use verdict::{Conclusion, DeterminacyVerdict, RuleId};
