//! Edge weights: distances between conditional result distributions.

use serde::{Deserialize, Serialize};

use super::table::CountTable;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvdArgmax {
    pub x_a: String,
    pub x_b: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratum: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvdSummary {
    pub computable: bool,
    pub max: Option<f64>,
    pub median: Option<f64>,
    pub argmax: Option<TvdArgmax>,
    /// Number of (value pair, stratum) distances computed.
    pub pairs: usize,
}

impl TvdSummary {
    fn not_computable() -> Self {
        TvdSummary {
            computable: false,
            max: None,
            median: None,
            argmax: None,
            pairs: 0,
        }
    }
}

/// For every pair of observed values (a, b) of `x`, the distance
/// `d_ab = sum_z |P(y = z | x = a) - P(y = z | x = b)|` (range [0, 2]).
///
/// With `stratum = Some(s)`, distributions are compared only within rows that
/// share the same value of variable `s`, and every stratum contributes its
/// pairs. Returns the maximum, its argument and the median over all pairs.
pub fn edge_tvd(
    table: &CountTable,
    x: usize,
    y: usize,
    stratum: Option<usize>,
) -> Result<TvdSummary> {
    let n = table.n_vars();
    if x >= n || y >= n || stratum.is_some_and(|s| s >= n) {
        return Err(Error::param("variable index out of range"));
    }
    if x == y || stratum == Some(x) || stratum == Some(y) {
        return Err(Error::param(
            "x, y and the stratum variable must be distinct",
        ));
    }
    let specs = table.specs();
    let (cx, cy) = (specs[x].cardinality, specs[y].cardinality);
    let cs = stratum.map_or(1, |s| specs[s].cardinality);
    let mut counts = vec![0.0f64; cs * cx * cy];
    for r in 0..table.n_rows() {
        let row = table.row(r);
        let s = stratum.map_or(0, |s| row[s] as usize);
        counts[(s * cx + row[x] as usize) * cy + row[y] as usize] += table.weight(r) as f64;
    }

    let mut values = Vec::new();
    let mut best: Option<(f64, TvdArgmax)> = None;
    for s in 0..cs {
        let block = &counts[s * cx * cy..(s + 1) * cx * cy];
        let totals: Vec<f64> = block.chunks_exact(cy).map(|r| r.iter().sum()).collect();
        for a in 0..cx {
            if totals[a] == 0.0 {
                continue;
            }
            for b in a + 1..cx {
                if totals[b] == 0.0 {
                    continue;
                }
                let d: f64 = (0..cy)
                    .map(|z| (block[a * cy + z] / totals[a] - block[b * cy + z] / totals[b]).abs())
                    .sum();
                values.push(d);
                if best.as_ref().is_none_or(|(m, _)| d > *m) {
                    best = Some((
                        d,
                        TvdArgmax {
                            x_a: specs[x].levels[a].clone(),
                            x_b: specs[x].levels[b].clone(),
                            stratum: stratum
                                .map(|sv| format!("{}={}", specs[sv].id, specs[sv].levels[s])),
                        },
                    ));
                }
            }
        }
    }
    let Some((max, argmax)) = best else {
        return Ok(TvdSummary::not_computable());
    };
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    let median = if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    };
    Ok(TvdSummary {
        computable: true,
        max: Some(max),
        median: Some(median),
        argmax: Some(argmax),
        pairs: values.len(),
    })
}
