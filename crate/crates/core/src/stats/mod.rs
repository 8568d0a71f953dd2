//! Categorical statistics over settings and results.

mod chi2;
mod gtest;
mod table;
mod tvd;

pub use chi2::{chi2_sf, gamma_q, ln_gamma};
pub use gtest::{g2_test, CiTestResult, SPARSE_STRATA_FRACTION};
pub use table::{CountTable, VariableKind, VariableSpec};
pub use tvd::{edge_tvd, TvdArgmax, TvdSummary};
