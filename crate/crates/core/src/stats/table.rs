//! Weighted categorical data over setting and result variables.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Setting,
    Result,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    /// `S{region}` or `R{region}`.
    pub id: String,
    pub kind: VariableKind,
    pub region: usize,
    /// Number of levels.
    pub cardinality: usize,
    /// Label of each level, in code order.
    pub levels: Vec<String>,
}

impl VariableSpec {
    pub fn new(kind: VariableKind, region: usize, levels: Vec<String>) -> Self {
        let prefix = match kind {
            VariableKind::Setting => 'S',
            VariableKind::Result => 'R',
        };
        VariableSpec {
            id: format!("{prefix}{region}"),
            kind,
            region,
            cardinality: levels.len(),
            levels,
        }
    }

    /// Variable with levels labelled `0..cardinality`.
    pub fn with_cardinality(kind: VariableKind, region: usize, cardinality: usize) -> Self {
        VariableSpec::new(
            kind,
            region,
            (0..cardinality).map(|v| v.to_string()).collect(),
        )
    }
}

/// Unique rows of level codes with their multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct CountTable {
    specs: Vec<VariableSpec>,
    /// Row-major codes, `specs.len()` per row.
    codes: Vec<u16>,
    weights: Vec<u64>,
}

impl CountTable {
    /// Validates codes against cardinalities and merges identical rows.
    pub fn new(specs: Vec<VariableSpec>, rows: Vec<Vec<u16>>, weights: Vec<u64>) -> Result<Self> {
        if rows.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} rows, {} weights",
                rows.len(),
                weights.len()
            )));
        }
        for (k, s) in specs.iter().enumerate() {
            if s.cardinality == 0 || s.levels.len() != s.cardinality {
                return Err(Error::param(format!(
                    "variable {} has inconsistent levels",
                    s.id
                )));
            }
            if specs[..k].iter().any(|o| o.id == s.id) {
                return Err(Error::param(format!("duplicate variable id {}", s.id)));
            }
        }
        for row in &rows {
            if row.len() != specs.len() {
                return Err(Error::Dimension(format!(
                    "row of length {} for {} variables",
                    row.len(),
                    specs.len()
                )));
            }
            if let Some((k, _)) = row
                .iter()
                .enumerate()
                .find(|(k, &v)| v as usize >= specs[*k].cardinality)
            {
                return Err(Error::param(format!(
                    "code out of range for variable {}",
                    specs[k].id
                )));
            }
        }
        let mut merged: HashMap<Vec<u16>, u64> = HashMap::with_capacity(rows.len());
        for (row, w) in rows.into_iter().zip(weights) {
            if w > 0 {
                *merged.entry(row).or_default() += w;
            }
        }
        let mut entries: Vec<(Vec<u16>, u64)> = merged.into_iter().collect();
        entries.sort_unstable();
        let mut codes = Vec::with_capacity(entries.len() * specs.len());
        let mut weights = Vec::with_capacity(entries.len());
        for (row, w) in entries {
            codes.extend(row);
            weights.push(w);
        }
        Ok(CountTable {
            specs,
            codes,
            weights,
        })
    }

    /// Variables `S0..S{M-1}, R0..R{M-1}` with observed levels only.
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let m = data.n_regions();
        // raw rows: settings then region result fields
        let mut raw: HashMap<Vec<u32>, u64> = HashMap::new();
        for circuit in &data.circuits {
            let mut counts: HashMap<u16, u64> = HashMap::new();
            for &packed in &circuit.results {
                *counts.entry(packed).or_default() += 1;
            }
            for (packed, n) in counts {
                let mut row = circuit.settings.clone();
                row.extend((0..m).map(|r| data.region_value(packed, r) as u32));
                *raw.entry(row).or_default() += n;
            }
        }
        // Reps missing from an explicit schedule are not records. Recount when
        // the schedule does not cover every stored rep exactly once.
        let stored: usize = data.circuits.iter().map(|c| c.results.len()).sum();
        if stored != data.n_records() {
            raw.clear();
            for (c, r) in data.schedule.iter(data.circuits.len()) {
                let circuit = &data.circuits[c as usize];
                let packed = circuit.results[r as usize];
                let mut row = circuit.settings.clone();
                row.extend((0..m).map(|k| data.region_value(packed, k) as u32));
                *raw.entry(row).or_default() += 1;
            }
        }

        let mut specs = Vec::with_capacity(2 * m);
        let mut maps: Vec<HashMap<u32, u16>> = Vec::with_capacity(2 * m);
        for k in 0..2 * m {
            let values: BTreeSet<u32> = raw.keys().map(|row| row[k]).collect();
            if values.len() > u16::MAX as usize {
                return Err(Error::param("too many levels for one variable"));
            }
            let (kind, region) = if k < m {
                (VariableKind::Setting, k)
            } else {
                (VariableKind::Result, k - m)
            };
            let levels = values
                .iter()
                .map(|&v| match kind {
                    VariableKind::Setting => v.to_string(),
                    VariableKind::Result => {
                        Dataset::bitstring(v as u16, data.region_widths[region])
                    }
                })
                .collect();
            specs.push(VariableSpec::new(kind, region, levels));
            maps.push(
                values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| (v, i as u16))
                    .collect(),
            );
        }
        let (rows, weights): (Vec<Vec<u16>>, Vec<u64>) = raw
            .into_iter()
            .map(|(row, w)| (row.iter().enumerate().map(|(k, v)| maps[k][v]).collect(), w))
            .unzip();
        CountTable::new(specs, rows, weights)
    }

    pub fn specs(&self) -> &[VariableSpec] {
        &self.specs
    }

    pub fn n_vars(&self) -> usize {
        self.specs.len()
    }

    pub fn n_rows(&self) -> usize {
        self.weights.len()
    }

    pub fn row(&self, k: usize) -> &[u16] {
        let n = self.specs.len();
        &self.codes[k * n..(k + 1) * n]
    }

    pub fn weight(&self, k: usize) -> u64 {
        self.weights[k]
    }

    pub fn total(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.id == id)
    }

    /// Table over the variables `order` (a permutation or subset), in that order.
    pub fn select(&self, order: &[usize]) -> Result<Self> {
        if let Some(&k) = order.iter().find(|&&k| k >= self.specs.len()) {
            return Err(Error::param(format!("variable index {k} out of range")));
        }
        let specs = order.iter().map(|&k| self.specs[k].clone()).collect();
        let rows = (0..self.n_rows())
            .map(|r| order.iter().map(|&k| self.row(r)[k]).collect())
            .collect();
        CountTable::new(specs, rows, self.weights.clone())
    }
}
