//! Settings/results datasets and their line-delimited JSON form.
//!
//! Each line is one trial:
//! `{"circuit": 3, "rep": 0, "settings": [4, 10], "results": ["1", "0"]}`.
//! A region's bit string lists its qubits lowest first. An optional first line
//! `{"header": {...}}` carries metadata; it is never required.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::design::Schedule;
use crate::{Error, Result};

/// Largest total number of result bits per trial.
pub const MAX_RESULT_BITS: usize = 16;

/// One observed trial, as serialized.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub circuit: u64,
    pub rep: u32,
    pub settings: Vec<u32>,
    pub results: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    /// Qubits of each region, in region order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<Vec<Vec<usize>>>,
    /// Setting index reserved for the idle subcircuit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idle_setting: Option<u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub seeds: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: DatasetHeader,
}

/// All trials of one circuit. `results[rep]` packs the region bit strings:
/// region r occupies `width_r` bits starting at the sum of earlier widths, and
/// bit i of its field is character i of its bit string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitData {
    pub id: u64,
    pub settings: Vec<u32>,
    pub results: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub region_widths: Vec<usize>,
    pub circuits: Vec<CircuitData>,
    /// Order of (circuit position, rep) pairs.
    pub schedule: Schedule,
    pub header: Option<DatasetHeader>,
}

impl Dataset {
    pub fn n_regions(&self) -> usize {
        self.region_widths.len()
    }

    pub fn n_records(&self) -> usize {
        self.schedule.len(self.circuits.len())
    }

    pub fn is_empty(&self) -> bool {
        self.n_records() == 0
    }

    fn offsets(&self) -> Vec<usize> {
        self.region_widths
            .iter()
            .scan(0, |acc, &w| {
                let o = *acc;
                *acc += w;
                Some(o)
            })
            .collect()
    }

    /// Field of region `r` in a packed result.
    pub fn region_value(&self, packed: u16, r: usize) -> u16 {
        let offset: usize = self.region_widths[..r].iter().sum();
        (packed >> offset) & ((1 << self.region_widths[r]) - 1)
    }

    /// Bit string for a region field.
    pub fn bitstring(value: u16, width: usize) -> String {
        (0..width)
            .map(|i| if value >> i & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// Trials in schedule order.
    pub fn records(&self) -> impl Iterator<Item = TrialRecord> + '_ {
        let offsets = self.offsets();
        self.schedule.iter(self.circuits.len()).map(move |(c, r)| {
            let circuit = &self.circuits[c as usize];
            let packed = circuit.results[r as usize];
            TrialRecord {
                circuit: circuit.id,
                rep: r,
                settings: circuit.settings.clone(),
                results: self
                    .region_widths
                    .iter()
                    .zip(&offsets)
                    .map(|(&w, &o)| Dataset::bitstring((packed >> o) & ((1 << w) - 1), w))
                    .collect(),
            }
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        if let Some(h) = &self.header {
            serde_json::to_writer(&mut out, &HeaderLine { header: h.clone() })?;
            out.write_all(b"\n")?;
        }
        self.write_records(&mut out)?;
        out.flush()?;
        Ok(())
    }

    fn write_records<W: Write>(&self, out: &mut W) -> Result<()> {
        let offsets = self.offsets();
        let mut line = String::with_capacity(128);
        // settings are per circuit; preformat them once
        let settings: Vec<String> = self
            .circuits
            .iter()
            .map(|c| {
                c.settings
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        for (c, r) in self.schedule.iter(self.circuits.len()) {
            let circuit = &self.circuits[c as usize];
            let packed = circuit.results[r as usize];
            line.clear();
            use std::fmt::Write as _;
            let _ = write!(
                line,
                "{{\"circuit\":{},\"rep\":{},\"settings\":[{}],\"results\":[",
                circuit.id, r, settings[c as usize]
            );
            for (k, (&w, &o)) in self.region_widths.iter().zip(&offsets).enumerate() {
                if k > 0 {
                    line.push(',');
                }
                line.push('"');
                line.push_str(&Dataset::bitstring((packed >> o) & ((1 << w) - 1), w));
                line.push('"');
            }
            line.push_str("]}\n");
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// SHA-256 of the record lines (header excluded), hex encoded.
    pub fn digest(&self) -> String {
        struct Hasher(Sha256);
        impl Write for Hasher {
            fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
                self.0.update(buf);
                Ok(buf.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let mut h = Hasher(Sha256::new());
        self.write_records(&mut h).expect("hashing cannot fail");
        hex::encode(h.0.finalize())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self> {
        let mut reader = Reader::default();
        for (k, line) in input.lines().enumerate() {
            let line = line?;
            reader.line(k + 1, &line);
        }
        reader.finish()
    }
}

/// Incremental parser state for `read_jsonl`.
#[derive(Default)]
struct Reader {
    header: Option<DatasetHeader>,
    widths: Option<Vec<usize>>,
    index: HashMap<u64, usize>,
    circuits: Vec<CircuitData>,
    /// Per circuit, which reps have been seen.
    seen: Vec<Vec<bool>>,
    first_line: Vec<usize>,
    /// `Some(C)` once rasterized order has wrapped to rep 1 with C circuits.
    raster_circuits: Option<usize>,
    raster_pos: usize,
    explicit: Option<Vec<(u32, u32)>>,
    n_records: usize,
    errors: Vec<(usize, String)>,
}

impl Reader {
    fn line(&mut self, no: usize, line: &str) {
        if line.trim().is_empty() {
            return;
        }
        if self.n_records == 0
            && self.header.is_none()
            && line.trim_start().starts_with("{\"header\"")
        {
            match serde_json::from_str::<HeaderLine>(line) {
                Ok(h) => self.header = Some(h.header),
                Err(e) => self.errors.push((no, format!("bad header: {e}"))),
            }
            return;
        }
        match serde_json::from_str::<TrialRecord>(line) {
            Ok(rec) => {
                if let Err(msg) = self.record(no, rec) {
                    self.errors.push((no, msg));
                }
            }
            Err(e) => self.errors.push((no, e.to_string())),
        }
    }

    fn record(&mut self, no: usize, rec: TrialRecord) -> std::result::Result<(), String> {
        if rec.settings.len() != rec.results.len() {
            return Err(format!(
                "{} settings but {} results",
                rec.settings.len(),
                rec.results.len()
            ));
        }
        let widths: Vec<usize> = rec.results.iter().map(String::len).collect();
        match &self.widths {
            None => {
                if widths.contains(&0) {
                    return Err("empty result bit string".into());
                }
                if widths.iter().sum::<usize>() > MAX_RESULT_BITS {
                    return Err(format!("more than {MAX_RESULT_BITS} result bits per trial"));
                }
                self.widths = Some(widths.clone());
            }
            Some(w) if *w != widths => {
                return Err(format!("result widths {widths:?} differ from {w:?}"));
            }
            Some(_) => {}
        }
        let mut packed: u16 = 0;
        let mut offset = 0;
        for s in &rec.results {
            for (i, ch) in s.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => packed |= 1 << (offset + i),
                    _ => return Err(format!("result '{s}' is not a bit string")),
                }
            }
            offset += s.len();
        }
        let c = match self.index.get(&rec.circuit) {
            Some(&c) => {
                if self.circuits[c].settings != rec.settings {
                    return Err(format!(
                        "circuit {} has settings {:?}, earlier line {} had {:?}",
                        rec.circuit, rec.settings, self.first_line[c], self.circuits[c].settings
                    ));
                }
                c
            }
            None => {
                let c = self.circuits.len();
                self.index.insert(rec.circuit, c);
                self.circuits.push(CircuitData {
                    id: rec.circuit,
                    settings: rec.settings,
                    results: Vec::new(),
                });
                self.seen.push(Vec::new());
                self.first_line.push(no);
                c
            }
        };
        let r = rec.rep as usize;
        let seen = &mut self.seen[c];
        if seen.len() <= r {
            seen.resize(r + 1, false);
            self.circuits[c].results.resize(r + 1, 0);
        }
        if std::mem::replace(&mut seen[r], true) {
            return Err(format!("circuit {} rep {} appears twice", rec.circuit, r));
        }
        self.circuits[c].results[r] = packed;
        self.track_order(c as u32, rec.rep);
        self.n_records += 1;
        Ok(())
    }

    fn track_order(&mut self, c: u32, r: u32) {
        if let Some(order) = &mut self.explicit {
            order.push((c, r));
            return;
        }
        let pos = self.raster_pos;
        let expected = match self.raster_circuits {
            None if r == 0 && c as usize == pos => Some(()),
            None if r == 1 && c == 0 && pos > 0 => {
                self.raster_circuits = Some(pos);
                Some(())
            }
            Some(n) if (c as usize, r as usize) == (pos % n, pos / n) => Some(()),
            _ => None,
        };
        if expected.is_some() {
            self.raster_pos += 1;
        } else {
            // materialize the rasterized prefix, then record explicitly
            let n = self.raster_circuits.unwrap_or(usize::MAX);
            let mut order: Vec<(u32, u32)> = (0..pos)
                .map(|k| {
                    if n == usize::MAX {
                        (k as u32, 0)
                    } else {
                        ((k % n) as u32, (k / n) as u32)
                    }
                })
                .collect();
            order.push((c, r));
            self.explicit = Some(order);
        }
    }

    fn finish(mut self) -> Result<Dataset> {
        for (c, seen) in self.seen.iter().enumerate() {
            if let Some(missing) = seen.iter().position(|s| !s) {
                self.errors.push((
                    self.first_line[c],
                    format!("circuit {} is missing rep {missing}", self.circuits[c].id),
                ));
            }
        }
        if !self.errors.is_empty() {
            self.errors.sort();
            return Err(Error::MalformedRecords(self.errors));
        }
        if self.n_records == 0 {
            return Err(Error::EmptyDataset);
        }
        let schedule = match self.explicit {
            Some(order) => {
                // store circuits by id so the layout does not depend on trial order
                let mut by_id: Vec<usize> = (0..self.circuits.len()).collect();
                by_id.sort_by_key(|&c| self.circuits[c].id);
                let mut position = vec![0u32; by_id.len()];
                for (new, &old) in by_id.iter().enumerate() {
                    position[old] = new as u32;
                }
                let mut slots: Vec<Option<CircuitData>> =
                    self.circuits.into_iter().map(Some).collect();
                self.circuits = by_id
                    .iter()
                    .map(|&old| slots[old].take().unwrap())
                    .collect();
                Schedule::Explicit {
                    order: order
                        .into_iter()
                        .map(|(c, r)| (position[c as usize], r))
                        .collect(),
                }
            }
            None => {
                let n = self.raster_circuits.unwrap_or(self.circuits.len());
                if self.raster_pos.is_multiple_of(n) && n == self.circuits.len() {
                    Schedule::Rasterized {
                        n_rep: self.raster_pos / n,
                    }
                } else {
                    let order = (0..self.raster_pos)
                        .map(|k| ((k % n) as u32, (k / n) as u32))
                        .collect();
                    Schedule::Explicit { order }
                }
            }
        };
        Ok(Dataset {
            region_widths: self.widths.unwrap_or_default(),
            circuits: self.circuits,
            schedule,
            header: self.header,
        })
    }
}
