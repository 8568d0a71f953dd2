//! Crosstalk graph: the skeleton with edges classified and weighted, plus
//! DOT and JSON exports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::pc::{
    bonferroni_alpha, design_priors, ordered_names, pc_skeleton, PcOptions, Priors, SkeletonGraph,
};
use crate::stats::{edge_tvd, CountTable, TvdSummary, VariableKind};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeClass {
    /// Both endpoints in one region.
    Expected,
    /// Endpoints in different regions.
    Crosstalk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: String,
    pub b: String,
    pub class: EdgeClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tvd: Option<TvdSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub alpha: f64,
    /// Divide alpha by the number of initially tested edges.
    pub bonferroni: bool,
    /// Remove setting-setting edges before testing.
    pub use_priors: bool,
    pub max_cond: Option<usize>,
    /// Also weight intra-region edges.
    pub tvd_for_expected: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alpha: 0.01,
            bonferroni: false,
            use_priors: true,
            max_cond: None,
            tvd_for_expected: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisMeta {
    pub alpha: f64,
    pub mode: String,
    pub alpha_per_test: f64,
    pub initial_edges: usize,
    pub n_records: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset_digest: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrosstalkGraph {
    pub skeleton: SkeletonGraph,
    pub edges: Vec<GraphEdge>,
    pub meta: AnalysisMeta,
}

/// Pick the source, target and stratification variable for weighting edge (u, v).
fn tvd_orientation(table: &CountTable, u: usize, v: usize) -> (usize, usize, Option<usize>) {
    let specs = table.specs();
    let (su, sv) = (&specs[u], &specs[v]);
    match (su.kind, sv.kind) {
        (VariableKind::Result, VariableKind::Setting) => tvd_orientation(table, v, u),
        (VariableKind::Setting, VariableKind::Result) if su.region != sv.region => {
            (u, v, table.index_of(&format!("S{}", sv.region)))
        }
        (VariableKind::Result, VariableKind::Result) if su.region > sv.region => (v, u, None),
        _ => (u, v, None),
    }
}

/// Classify the skeleton's edges and weight crosstalk edges (and, on
/// request, expected edges) by TVD.
pub fn build_crosstalk_graph(
    skeleton: SkeletonGraph,
    table: &CountTable,
    tvd_for_expected: bool,
    meta: AnalysisMeta,
) -> Result<CrosstalkGraph> {
    if skeleton.nodes != table.specs() {
        return Err(Error::Dimension(
            "skeleton was not built from this table".into(),
        ));
    }
    let mut edges = Vec::with_capacity(skeleton.edges.len());
    for &(u, v) in &skeleton.edges {
        let (nu, nv) = (&skeleton.nodes[u], &skeleton.nodes[v]);
        let class = if nu.region == nv.region {
            EdgeClass::Expected
        } else {
            EdgeClass::Crosstalk
        };
        let tvd = if class == EdgeClass::Crosstalk || tvd_for_expected {
            let (x, y, s) = tvd_orientation(table, u, v);
            let summary = edge_tvd(table, x, y, s)?;
            if !summary.computable {
                log::warn!(
                    "no common stratum for edge {} -- {}; TVD not computable",
                    nu.id,
                    nv.id
                );
            }
            Some(summary)
        } else {
            None
        };
        let (a, b) = ordered_names(nu, nv);
        edges.push(GraphEdge { a, b, class, tvd });
    }
    edges.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    Ok(CrosstalkGraph {
        skeleton,
        edges,
        meta,
    })
}

/// Skeleton search plus graph assembly.
pub fn analyze(
    table: &CountTable,
    config: &AnalysisConfig,
    digest: Option<String>,
) -> Result<CrosstalkGraph> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::param(format!(
            "alpha must lie in (0, 1), got {}",
            config.alpha
        )));
    }
    let n = table.n_vars();
    let priors = if config.use_priors {
        design_priors(table.specs())
    } else {
        Priors::default()
    };
    let initial_edges = n * (n.saturating_sub(1)) / 2 - priors.removed.len();
    let alpha_per_test = if config.bonferroni {
        bonferroni_alpha(config.alpha, initial_edges)?
    } else {
        config.alpha
    };
    let skeleton = pc_skeleton(
        table,
        alpha_per_test,
        &PcOptions {
            priors,
            max_cond: config.max_cond,
        },
    )?;
    let meta = AnalysisMeta {
        alpha: config.alpha,
        mode: if config.bonferroni {
            "bonferroni"
        } else {
            "per-test"
        }
        .to_string(),
        alpha_per_test,
        initial_edges,
        n_records: table.total(),
        dataset_digest: digest,
    };
    build_crosstalk_graph(skeleton, table, config.tvd_for_expected, meta)
}

fn format_weight(tvd: &Option<TvdSummary>) -> Option<String> {
    tvd.as_ref().map(|t| match (t.max, t.median) {
        (Some(max), Some(median)) => format!("{max:.3} ({median:.3})"),
        _ => "n/a".to_string(),
    })
}

/// Undirected DOT graph; expected edges blue, crosstalk edges red, weights
/// labelled `max (median)`.
pub fn render_dot<'a>(nodes: impl IntoIterator<Item = &'a str>, edges: &[GraphEdge]) -> String {
    let mut out = String::from("graph crosstalk {\n  node [shape=circle];\n");
    for node in nodes {
        let _ = writeln!(out, "  \"{node}\";");
    }
    for e in edges {
        let (color, class) = match e.class {
            EdgeClass::Expected => ("blue", "expected"),
            EdgeClass::Crosstalk => ("red", "crosstalk"),
        };
        let _ = write!(
            out,
            "  \"{}\" -- \"{}\" [class=\"{class}\", color={color}",
            e.a, e.b
        );
        if let Some(label) = format_weight(&e.tvd) {
            let _ = write!(out, ", label=\"{label}\"");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}

impl CrosstalkGraph {
    pub fn crosstalk_edges(&self) -> impl Iterator<Item = &GraphEdge> {
        self.edges
            .iter()
            .filter(|e| e.class == EdgeClass::Crosstalk)
    }

    pub fn has_crosstalk(&self) -> bool {
        self.crosstalk_edges().next().is_some()
    }

    pub fn edge(&self, a: &str, b: &str) -> Option<&GraphEdge> {
        self.edges
            .iter()
            .find(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    pub fn to_dot(&self) -> String {
        render_dot(
            self.skeleton.nodes.iter().map(|n| n.id.as_str()),
            &self.edges,
        )
    }

    /// Full report: metadata, nodes, classified edges, separating sets and
    /// every test performed.
    pub fn report(&self) -> serde_json::Value {
        let s = &self.skeleton;
        let name = |k: usize| s.nodes[k].id.clone();
        let sepsets: Vec<serde_json::Value> = s
            .sepsets
            .iter()
            .map(|(&(a, b), set)| {
                let (x, y) = ordered_names(&s.nodes[a], &s.nodes[b]);
                json!({"a": x, "b": y, "sepset": set.iter().map(|&k| name(k)).collect::<Vec<_>>(), "prior": false})
            })
            .chain(s.prior_removed.iter().map(|&(a, b)| {
                let (x, y) = ordered_names(&s.nodes[a], &s.nodes[b]);
                json!({"a": x, "b": y, "sepset": [], "prior": true})
            }))
            .collect();
        json!({
            "analysis": self.meta,
            "crosstalk_detected": self.has_crosstalk(),
            "nodes": s.nodes,
            "edges": self.edges,
            "sepsets": sepsets,
            "degenerate": s.degenerate.iter().map(|&k| name(k)).collect::<Vec<_>>(),
            "max_level": s.max_level,
            "cap_hit": s.cap_hit,
            "warnings": s.warnings,
            "tests": s.tests,
        })
    }
}
