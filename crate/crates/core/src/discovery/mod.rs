//! Constraint-based discovery of the dependence skeleton between settings
//! and results, and its presentation as a crosstalk graph.

mod graph;
mod pc;

pub use graph::{
    analyze, build_crosstalk_graph, render_dot, AnalysisConfig, AnalysisMeta, CrosstalkGraph,
    EdgeClass, GraphEdge,
};
pub use pc::{
    bonferroni_alpha, design_priors, pc_skeleton, PcOptions, Priors, SkeletonGraph, TestRecord,
};
