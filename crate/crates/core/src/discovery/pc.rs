//! Order-independent PC skeleton search.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::stats::{g2_test, CountTable, VariableKind, VariableSpec};
use crate::{Error, Result};

/// Edges removed before any test.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Priors {
    pub removed: BTreeSet<(usize, usize)>,
}

/// Settings are randomized independently by the design, so no
/// setting-setting edge can exist.
pub fn design_priors(specs: &[VariableSpec]) -> Priors {
    let settings: Vec<usize> = (0..specs.len())
        .filter(|&k| specs[k].kind == VariableKind::Setting)
        .collect();
    let removed = settings
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| settings[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    Priors { removed }
}

/// Per-test level `alpha / k` for `k` initial edges.
pub fn bonferroni_alpha(alpha: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::param(
            "Bonferroni correction needs at least one edge",
        ));
    }
    Ok(alpha / k as f64)
}

#[derive(Clone, Debug, Default)]
pub struct PcOptions {
    pub priors: Priors,
    /// Largest conditioning set; defaults to `n_vars - 2`.
    pub max_cond: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub x: String,
    pub y: String,
    pub cond: Vec<String>,
    pub level: usize,
    pub g2: f64,
    pub df: u64,
    pub p_value: f64,
    pub sparse_strata: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonGraph {
    pub nodes: Vec<VariableSpec>,
    /// Surviving edges as `(a, b)` with `a < b`.
    pub edges: BTreeSet<(usize, usize)>,
    /// Conditioning set that separated each tested-and-removed pair.
    pub sepsets: BTreeMap<(usize, usize), Vec<usize>>,
    pub prior_removed: BTreeSet<(usize, usize)>,
    /// Single-level variables, never tested.
    pub degenerate: Vec<usize>,
    pub alpha: f64,
    pub tests: Vec<TestRecord>,
    /// Highest conditioning-set size tested.
    pub max_level: usize,
    /// The size cap stopped the search early.
    pub cap_hit: bool,
    pub warnings: Vec<String>,
}

impl SkeletonGraph {
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Edges as id pairs, each pair ordered settings first, then by region.
    pub fn edge_names(&self) -> BTreeSet<(String, String)> {
        self.edges
            .iter()
            .map(|&(a, b)| ordered_names(&self.nodes[a], &self.nodes[b]))
            .collect()
    }
}

pub(crate) fn ordered_names(a: &VariableSpec, b: &VariableSpec) -> (String, String) {
    let key = |s: &VariableSpec| (s.kind == VariableKind::Result, s.region);
    if key(a) <= key(b) {
        (a.id.clone(), b.id.clone())
    } else {
        (b.id.clone(), a.id.clone())
    }
}

/// Lexicographic k-subsets of `items`.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > items.len() {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let Some(pos) = (0..k).rev().find(|&p| idx[p] != p + items.len() - k) else {
            return out;
        };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

struct EdgeOutcome {
    edge: (usize, usize),
    sepset: Option<Vec<usize>>,
    tests: Vec<TestRecord>,
}

/// PC skeleton with per-level frozen adjacency.
///
/// Starting from the complete graph minus prior removals, level n tests every
/// adjacent pair against each size-n subset of either endpoint's neighbours
/// as they stood when the level began. A pair is removed on the first subset
/// with `p > alpha`; removals take effect at the end of the level, so the
/// result does not depend on variable or pair order.
pub fn pc_skeleton(table: &CountTable, alpha: f64, options: &PcOptions) -> Result<SkeletonGraph> {
    let n = table.n_vars();
    if n < 2 {
        return Err(Error::param("at least two variables are required"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let specs = table.specs();
    let max_cond = options.max_cond.unwrap_or(n - 2);
    let mut warnings = Vec::new();

    let mut edges: BTreeSet<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    let mut prior_removed = BTreeSet::new();
    for &(a, b) in &options.priors.removed {
        let e = (a.min(b), a.max(b));
        if edges.remove(&e) {
            prior_removed.insert(e);
        }
    }
    let degenerate: Vec<usize> = (0..n).filter(|&k| specs[k].cardinality <= 1).collect();
    for &d in &degenerate {
        let msg = format!(
            "variable {} takes a single value and is excluded from testing",
            specs[d].id
        );
        log::warn!("{msg}");
        warnings.push(msg);
        edges.retain(|&(a, b)| a != d && b != d);
    }

    let mut sepsets = BTreeMap::new();
    let mut tests = Vec::new();
    let mut max_level = 0;
    let mut cap_hit = false;
    let mut level = 0;
    loop {
        let adjacency: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                (0..n)
                    .filter(|&u| edges.contains(&(v.min(u), v.max(u))) && u != v)
                    .collect()
            })
            .collect();
        let eligible: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|&(a, b)| adjacency[a].len() > level || adjacency[b].len() > level)
            .collect();
        if eligible.is_empty() {
            break;
        }
        if level > max_cond {
            cap_hit = true;
            let msg = format!(
                "conditioning-set cap {max_cond} reached with {} pairs still testable",
                eligible.len()
            );
            log::warn!("{msg}");
            warnings.push(msg);
            break;
        }
        max_level = level;
        let outcomes: Vec<EdgeOutcome> = eligible
            .par_iter()
            .map(|&(a, b)| test_edge(table, &adjacency, a, b, level, alpha))
            .collect::<Result<_>>()?;
        for outcome in outcomes {
            tests.extend(outcome.tests);
            if let Some(sep) = outcome.sepset {
                edges.remove(&outcome.edge);
                sepsets.insert(outcome.edge, sep);
            }
        }
        level += 1;
    }

    Ok(SkeletonGraph {
        nodes: specs.to_vec(),
        edges,
        sepsets,
        prior_removed,
        degenerate,
        alpha,
        tests,
        max_level,
        cap_hit,
        warnings,
    })
}

fn test_edge(
    table: &CountTable,
    adjacency: &[Vec<usize>],
    a: usize,
    b: usize,
    level: usize,
    alpha: f64,
) -> Result<EdgeOutcome> {
    let specs = table.specs();
    let mut tried: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut tests = Vec::new();
    for (x, y) in [(a, b), (b, a)] {
        let others: Vec<usize> = adjacency[x].iter().copied().filter(|&u| u != y).collect();
        for subset in combinations(&others, level) {
            let mut key = subset.clone();
            key.sort_unstable();
            if !tried.insert(key) {
                continue;
            }
            let r = g2_test(table, a, b, &subset)?;
            tests.push(TestRecord {
                x: specs[a].id.clone(),
                y: specs[b].id.clone(),
                cond: subset.iter().map(|&k| specs[k].id.clone()).collect(),
                level,
                g2: r.g2,
                df: r.df,
                p_value: r.p_value,
                sparse_strata: r.sparse_strata,
            });
            if r.p_value > alpha {
                return Ok(EdgeOutcome {
                    edge: (a, b),
                    sepset: Some(subset),
                    tests,
                });
            }
        }
    }
    Ok(EdgeOutcome {
        edge: (a, b),
        sepset: None,
        tests,
    })
}
