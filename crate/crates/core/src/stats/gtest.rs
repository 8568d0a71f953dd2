//! G² (log-likelihood ratio) test of conditional independence.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::chi2::chi2_sf;
use super::table::CountTable;
use crate::{Error, Result};

/// Fraction of empty strata above which a test is flagged as sparse.
pub const SPARSE_STRATA_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiTestResult {
    pub g2: f64,
    pub df: u64,
    pub p_value: f64,
    /// One of the tested variables has a single level.
    pub degenerate: bool,
    /// More than 20% of the conditioning strata are empty.
    pub sparse_strata: bool,
}

/// Test `X_i _||_ X_j | X_cond`.
///
/// `G2 = 2 sum n_ijA ln(n_ijA n_A / (n_iA n_jA))`, zero cells contributing
/// nothing, with `df = (|X_i|-1)(|X_j|-1) prod |X_a|`.
pub fn g2_test(table: &CountTable, i: usize, j: usize, cond: &[usize]) -> Result<CiTestResult> {
    let n_vars = table.n_vars();
    if i >= n_vars || j >= n_vars || cond.iter().any(|&a| a >= n_vars) {
        return Err(Error::param("variable index out of range"));
    }
    if i == j || cond.contains(&i) || cond.contains(&j) {
        return Err(Error::param(
            "tested variables must be distinct and not conditioned on",
        ));
    }
    if cond.iter().enumerate().any(|(k, a)| cond[..k].contains(a)) {
        return Err(Error::param("conditioning set has repeated variables"));
    }
    if table.total() == 0 {
        return Err(Error::EmptyDataset);
    }
    let specs = table.specs();
    let (ci, cj) = (specs[i].cardinality, specs[j].cardinality);
    let strata_possible: f64 = cond.iter().map(|&a| specs[a].cardinality as f64).product();
    if ci <= 1 || cj <= 1 {
        return Ok(CiTestResult {
            g2: 0.0,
            df: 0,
            p_value: 1.0,
            degenerate: true,
            sparse_strata: false,
        });
    }

    let cell = ci * cj;
    let mut strata: HashMap<u128, usize> = HashMap::new();
    let mut counts: Vec<f64> = Vec::new();
    for r in 0..table.n_rows() {
        let row = table.row(r);
        let key = cond.iter().fold(0u128, |acc, &a| {
            acc * specs[a].cardinality as u128 + row[a] as u128
        });
        let next = strata.len();
        let s = *strata.entry(key).or_insert(next);
        if s == next {
            counts.resize(counts.len() + cell, 0.0);
        }
        counts[s * cell + row[i] as usize * cj + row[j] as usize] += table.weight(r) as f64;
    }

    let mut g2 = 0.0;
    let mut ni = vec![0.0; ci];
    let mut nj = vec![0.0; cj];
    for block in counts.chunks_exact(cell) {
        ni.iter_mut().for_each(|x| *x = 0.0);
        nj.iter_mut().for_each(|x| *x = 0.0);
        for a in 0..ci {
            for b in 0..cj {
                let n = block[a * cj + b];
                ni[a] += n;
                nj[b] += n;
            }
        }
        let na: f64 = ni.iter().sum();
        for a in 0..ci {
            for b in 0..cj {
                let n = block[a * cj + b];
                if n > 0.0 {
                    g2 += n * (n * na / (ni[a] * nj[b])).ln();
                }
            }
        }
    }
    let g2 = (2.0 * g2).max(0.0);

    let df = cond.iter().fold(((ci - 1) * (cj - 1)) as u64, |acc, &a| {
        acc.saturating_mul(specs[a].cardinality as u64)
    });
    let empty = 1.0 - strata.len() as f64 / strata_possible;
    Ok(CiTestResult {
        g2,
        df,
        p_value: chi2_sf(g2, df as f64),
        degenerate: false,
        sparse_strata: empty > SPARSE_STRATA_FRACTION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{VariableKind, VariableSpec};

    fn two_by_two(counts: [[u64; 2]; 2]) -> CountTable {
        let specs = vec![
            VariableSpec::with_cardinality(VariableKind::Setting, 0, 2),
            VariableSpec::with_cardinality(VariableKind::Result, 0, 2),
        ];
        let mut rows = Vec::new();
        let mut w = Vec::new();
        for (a, row) in counts.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                rows.push(vec![a as u16, b as u16]);
                w.push(c);
            }
        }
        CountTable::new(specs, rows, w).unwrap()
    }

    #[test]
    fn product_counts_give_zero() {
        let r = g2_test(&two_by_two([[9, 3], [3, 1]]), 0, 1, &[]).unwrap();
        assert!(r.g2.abs() < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.df, 1);
    }

    #[test]
    fn direct_summation() {
        let r = g2_test(&two_by_two([[30, 10], [10, 30]]), 0, 1, &[]).unwrap();
        // every cell: n ln(n N / (40 * 40)) with N = 80
        let expect = 2.0
            * (2.0 * 30.0 * (30.0f64 * 80.0 / 1600.0).ln()
                + 2.0 * 10.0 * (10.0f64 * 80.0 / 1600.0).ln());
        assert!((r.g2 - expect).abs() < 1e-9 * expect);
        let sym = g2_test(&two_by_two([[30, 10], [10, 30]]), 1, 0, &[]).unwrap();
        assert!((sym.g2 - r.g2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_variable() {
        let specs = vec![
            VariableSpec::with_cardinality(VariableKind::Setting, 0, 1),
            VariableSpec::with_cardinality(VariableKind::Result, 0, 2),
        ];
        let t = CountTable::new(specs, vec![vec![0, 0], vec![0, 1]], vec![4, 6]).unwrap();
        let r = g2_test(&t, 0, 1, &[]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn argument_errors() {
        let t = two_by_two([[1, 1], [1, 1]]);
        assert!(g2_test(&t, 0, 0, &[]).is_err());
        assert!(g2_test(&t, 0, 1, &[1]).is_err());
        assert!(g2_test(&t, 0, 2, &[]).is_err());
    }
}
