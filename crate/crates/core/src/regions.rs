//! Qubit layouts, regions and partitions.
//!
//! A partition splits the device into disjoint 1- and 2-qubit regions. The
//! unique 1-partition detects crosstalk from single-qubit operations; random
//! (or brute-force) 2-partitions make sure every pair of disjoint allowed
//! 2-regions shares at least one tested partition.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{rng_from_seed, Rng};
use crate::{Error, Result};

/// Qubit count and the pairs on which 2-qubit gates are available.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutDocument", into = "LayoutDocument")]
pub struct DeviceLayout {
    n_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct LayoutDocument {
    n_qubits: usize,
    #[serde(default)]
    edges: Vec<[usize; 2]>,
}

impl TryFrom<LayoutDocument> for DeviceLayout {
    type Error = Error;

    fn try_from(doc: LayoutDocument) -> Result<Self> {
        DeviceLayout::new(doc.n_qubits, doc.edges.into_iter().map(|[a, b]| (a, b)))
    }
}

impl From<DeviceLayout> for LayoutDocument {
    fn from(layout: DeviceLayout) -> Self {
        LayoutDocument {
            n_qubits: layout.n_qubits,
            edges: layout.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl DeviceLayout {
    pub fn new(n_qubits: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Layout("n_qubits must be positive".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= n_qubits || b >= n_qubits {
                return Err(Error::Layout(format!(
                    "edge ({a}, {b}) references a qubit outside [0, {n_qubits})"
                )));
            }
            if a == b {
                return Err(Error::Layout(format!("self-loop on qubit {a}")));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::Layout(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(DeviceLayout {
            n_qubits,
            edges: set,
        })
    }

    pub fn fully_connected(n_qubits: usize) -> Self {
        let edges = (0..n_qubits).flat_map(|a| (a + 1..n_qubits).map(move |b| (a, b)));
        DeviceLayout::new(n_qubits.max(1), edges).expect("complete graph is a valid layout")
    }

    pub fn line(n_qubits: usize) -> Self {
        let edges = (1..n_qubits).map(|b| (b - 1, b));
        DeviceLayout::new(n_qubits.max(1), edges).expect("line is a valid layout")
    }

    /// The 2x3 ladder: top row 0-1-2, bottom row 3-4-5, rungs 0-3, 1-4, 2-5.
    pub fn ladder6() -> Self {
        DeviceLayout::new(6, [(0, 1), (1, 2), (3, 4), (4, 5), (0, 3), (1, 4), (2, 5)])
            .expect("ladder is a valid layout")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn is_fully_connected(&self) -> bool {
        self.edges.len() == self.n_qubits * (self.n_qubits - 1) / 2
    }
}

/// A set of 1 or 2 qubits treated as one unit by the protocol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Region {
    qubits: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Region {
    type Error = Error;

    fn try_from(mut qubits: Vec<usize>) -> Result<Self> {
        qubits.sort_unstable();
        match qubits.as_slice() {
            [_] => Ok(Region { qubits }),
            [a, b] if a != b => Ok(Region { qubits }),
            _ => Err(Error::Partition(format!(
                "region {qubits:?} must hold 1 or 2 distinct qubits"
            ))),
        }
    }
}

impl From<Region> for Vec<usize> {
    fn from(region: Region) -> Self {
        region.qubits
    }
}

impl Region {
    pub fn single(q: usize) -> Self {
        Region { qubits: vec![q] }
    }

    /// A 2-region; the pair must be a coupling edge of `layout`.
    pub fn pair(layout: &DeviceLayout, a: usize, b: usize) -> Result<Self> {
        if !layout.has_edge(a, b) {
            return Err(Error::Partition(format!(
                "2-region {{{a}, {b}}} is not an allowed coupling"
            )));
        }
        Ok(Region {
            qubits: vec![a.min(b), a.max(b)],
        })
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn size(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.qubits.iter().all(|q| !other.qubits.contains(q))
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Disjoint regions covering every qubit exactly once. Regions are kept sorted
/// by their lowest qubit so equal partitions compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "Vec<Region>")]
pub struct Partition {
    n_qubits: usize,
    regions: Vec<Region>,
}

impl From<Partition> for Vec<Region> {
    fn from(p: Partition) -> Self {
        p.regions
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let regions = Vec::<Region>::deserialize(d)?;
        let n = regions.iter().map(Region::size).sum();
        Partition::new(n, regions).map_err(serde::de::Error::custom)
    }
}

impl Partition {
    pub fn new(n_qubits: usize, mut regions: Vec<Region>) -> Result<Self> {
        let mut seen = vec![false; n_qubits];
        for r in &regions {
            for &q in r.qubits() {
                if q >= n_qubits {
                    return Err(Error::Partition(format!(
                        "qubit {q} outside [0, {n_qubits})"
                    )));
                }
                if std::mem::replace(&mut seen[q], true) {
                    return Err(Error::Partition(format!(
                        "qubit {q} appears in two regions"
                    )));
                }
            }
        }
        if let Some(q) = seen.iter().position(|s| !s) {
            return Err(Error::Partition(format!("qubit {q} is not covered")));
        }
        regions.sort();
        Ok(Partition { n_qubits, regions })
    }

    /// Like [`Partition::new`], additionally requiring every 2-region to be allowed.
    pub fn for_layout(layout: &DeviceLayout, regions: Vec<Region>) -> Result<Self> {
        let p = Partition::new(layout.n_qubits(), regions)?;
        p.check_allowed(layout)?;
        Ok(p)
    }

    pub fn check_allowed(&self, layout: &DeviceLayout) -> Result<()> {
        if layout.n_qubits() != self.n_qubits {
            return Err(Error::Partition(format!(
                "partition covers {} qubits, layout has {}",
                self.n_qubits,
                layout.n_qubits()
            )));
        }
        for r in &self.regions {
            if let [a, b] = r.qubits() {
                if !layout.has_edge(*a, *b) {
                    return Err(Error::Partition(format!(
                        "2-region {r} is not an allowed coupling"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// Number of regions, M.
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn contains(&self, region: &Region) -> bool {
        self.regions.binary_search(region).is_ok()
    }

    /// Index of the region holding qubit `q`.
    pub fn region_of(&self, q: usize) -> Option<usize> {
        self.regions.iter().position(|r| r.qubits().contains(&q))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.regions.iter().map(Region::to_string).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// Serialized as `{"n": int, "partitions": [[[q, ...], ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSet {
    pub n: usize,
    pub partitions: Vec<Partition>,
}

impl PartitionSet {
    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let set: PartitionSet = serde_json::from_str(s)?;
        if let Some(p) = set.partitions.iter().find(|p| p.n_qubits() != set.n) {
            return Err(Error::Partition(format!(
                "partition {p} does not cover n = {}",
                set.n
            )));
        }
        Ok(set)
    }
}

/// The unique partition into singleton regions.
pub fn one_partition(layout: &DeviceLayout) -> Partition {
    let regions = (0..layout.n_qubits()).map(Region::single).collect();
    Partition::new(layout.n_qubits(), regions).expect("singletons cover every qubit")
}

/// Every allowed 2-region (one per coupling edge).
pub fn enumerate_two_regions(layout: &DeviceLayout) -> Vec<Region> {
    layout
        .edges()
        .map(|(a, b)| Region { qubits: vec![a, b] })
        .collect()
}

/// Above this many maximal matchings, exact enumeration is refused.
const MAX_ENUMERATED_MATCHINGS: usize = 2_000_000;

/// Uniform sampler over random 2-partitions of a layout.
///
/// Fully connected layouts are sampled by shuffling the qubits and pairing
/// neighbours, which is uniform over perfect matchings (near-perfect with one
/// singleton for odd n). Constrained layouts enumerate their maximal matchings
/// once and draw uniformly from that list; unmatched qubits become 1-regions.
#[derive(Clone, Debug)]
pub struct TwoPartitionSampler {
    n_qubits: usize,
    strategy: Strategy,
}

#[derive(Clone, Debug)]
enum Strategy {
    Shuffle,
    Enumerated(Vec<Partition>),
}

impl TwoPartitionSampler {
    pub fn new(layout: &DeviceLayout) -> Result<Self> {
        let strategy = if layout.is_fully_connected() {
            Strategy::Shuffle
        } else {
            let matchings = maximal_matchings(layout)?;
            let partitions = matchings
                .into_iter()
                .map(|m| matching_partition(layout.n_qubits(), &m))
                .collect();
            Strategy::Enumerated(partitions)
        };
        Ok(TwoPartitionSampler {
            n_qubits: layout.n_qubits(),
            strategy,
        })
    }

    /// Number of distinct partitions in the support, when enumerated.
    pub fn support_size(&self) -> Option<usize> {
        match &self.strategy {
            Strategy::Shuffle => None,
            Strategy::Enumerated(list) => Some(list.len()),
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Partition {
        match &self.strategy {
            Strategy::Shuffle => {
                let mut qubits: Vec<usize> = (0..self.n_qubits).collect();
                qubits.shuffle(rng);
                let regions = qubits
                    .chunks(2)
                    .map(|c| match c {
                        [a, b] => Region {
                            qubits: vec![(*a).min(*b), (*a).max(*b)],
                        },
                        [a] => Region::single(*a),
                        _ => unreachable!(),
                    })
                    .collect();
                Partition::new(self.n_qubits, regions).expect("pairing covers every qubit")
            }
            Strategy::Enumerated(list) => list[rng.gen_range(0..list.len())].clone(),
        }
    }
}

fn matching_partition(n: usize, matching: &[(usize, usize)]) -> Partition {
    let mut matched = vec![false; n];
    let mut regions = Vec::with_capacity(n);
    for &(a, b) in matching {
        matched[a] = true;
        matched[b] = true;
        regions.push(Region { qubits: vec![a, b] });
    }
    regions.extend((0..n).filter(|&q| !matched[q]).map(Region::single));
    Partition::new(n, regions).expect("matching yields a partition")
}

/// All maximal matchings of the coupling graph.
fn maximal_matchings(layout: &DeviceLayout) -> Result<Vec<Vec<(usize, usize)>>> {
    let n = layout.n_qubits();
    let mut adjacency = vec![Vec::new(); n];
    for (a, b) in layout.edges() {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut out = Vec::new();
    let mut matched = vec![false; n];
    let mut current = Vec::new();
    // Vertex `v` is decided in order: matched to a higher free neighbour, or
    // left free. Maximality is checked when a vertex is left free and all its
    // neighbours have been decided.
    fn recurse(
        v: usize,
        adjacency: &[Vec<usize>],
        matched: &mut [bool],
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) -> Result<()> {
        let n = adjacency.len();
        if v == n {
            // maximal iff no edge has both endpoints free
            let maximal = (0..n).all(|a| matched[a] || adjacency[a].iter().all(|&b| matched[b]));
            if maximal {
                if out.len() >= MAX_ENUMERATED_MATCHINGS {
                    return Err(Error::Layout(format!(
                        "more than {MAX_ENUMERATED_MATCHINGS} maximal matchings; layout too large for exact sampling"
                    )));
                }
                out.push(current.clone());
            }
            return Ok(());
        }
        if matched[v] {
            return recurse(v + 1, adjacency, matched, current, out);
        }
        for &u in &adjacency[v] {
            if u > v && !matched[u] {
                matched[v] = true;
                matched[u] = true;
                current.push((v, u));
                recurse(v + 1, adjacency, matched, current, out)?;
                current.pop();
                matched[v] = false;
                matched[u] = false;
            }
        }
        // leave v free: prune if an already-decided neighbour is also free
        if adjacency[v].iter().any(|&u| u < v && !matched[u]) {
            return Ok(());
        }
        recurse(v + 1, adjacency, matched, current, out)
    }
    recurse(0, &adjacency, &mut matched, &mut current, &mut out)?;
    Ok(out)
}

/// One uniformly random 2-partition of `layout`.
pub fn random_two_partition(layout: &DeviceLayout, seed: u64) -> Result<Partition> {
    let sampler = TwoPartitionSampler::new(layout)?;
    Ok(sampler.sample(&mut rng_from_seed(seed)))
}

/// Number of random 2-partitions needed so that, with probability at least
/// `1 - epsilon`, every pair of disjoint 2-regions shares a partition:
/// `ceil(n^2 (2 ln R - ln epsilon))` with R the number of allowed 2-regions.
pub fn cover_size(n_qubits: usize, n_two_regions: usize, epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if n_two_regions == 0 {
        return Ok(1);
    }
    let n = n_qubits as f64;
    let size = n * n * (2.0 * (n_two_regions as f64).ln() - epsilon.ln());
    Ok(size.ceil().max(1.0) as usize)
}

/// Probability that a fixed pair of disjoint 2-regions lies in one uniformly
/// random perfect matching of the complete graph on `n` (even) qubits.
pub fn pair_inclusion_probability(n_qubits: usize) -> f64 {
    let n = n_qubits as f64;
    1.0 / ((n - 1.0) * (n - 3.0))
}

/// Randomized cover: [`cover_size`] independent uniform 2-partitions.
pub fn partition_cover(layout: &DeviceLayout, epsilon: f64, seed: u64) -> Result<PartitionSet> {
    let n = layout.n_qubits();
    let size = cover_size(n, layout.n_edges(), epsilon)?;
    if n < 4 {
        log::warn!("cover bound is not meaningful for n = {n} < 4");
    }
    if !layout.is_fully_connected() || n % 2 == 1 {
        log::warn!(
            "cover bound assumes even n and full connectivity; it is heuristic for this layout"
        );
    }
    let sampler = TwoPartitionSampler::new(layout)?;
    let mut rng = rng_from_seed(seed);
    let partitions = (0..size).map(|_| sampler.sample(&mut rng)).collect();
    Ok(PartitionSet { n, partitions })
}

/// Deterministic cover: for every pair of disjoint allowed 2-regions, one
/// partition starting from those two regions, the remaining qubits matched
/// greedily in index order. Duplicate partitions are emitted once.
pub fn brute_force_cover(layout: &DeviceLayout) -> PartitionSet {
    let n = layout.n_qubits();
    let regions = enumerate_two_regions(layout);
    let mut seen = BTreeSet::new();
    let mut partitions = Vec::new();
    for (i, a) in regions.iter().enumerate() {
        for b in &regions[i + 1..] {
            if !a.is_disjoint(b) {
                continue;
            }
            let mut used = vec![false; n];
            let mut chosen = vec![a.clone(), b.clone()];
            for r in &chosen {
                for &q in r.qubits() {
                    used[q] = true;
                }
            }
            for (x, y) in layout.edges() {
                if !used[x] && !used[y] {
                    used[x] = true;
                    used[y] = true;
                    chosen.push(Region { qubits: vec![x, y] });
                }
            }
            chosen.extend((0..n).filter(|&q| !used[q]).map(Region::single));
            let p = Partition::new(n, chosen).expect("greedy completion covers every qubit");
            if seen.insert(p.to_string()) {
                partitions.push(p);
            }
        }
    }
    if partitions.is_empty() {
        partitions.push(match random_two_partition(layout, 0) {
            Ok(p) => p,
            Err(_) => one_partition(layout),
        });
    }
    PartitionSet { n, partitions }
}

/// Pairs of disjoint allowed 2-regions that no partition of `set` contains.
pub fn uncovered_pairs(layout: &DeviceLayout, set: &PartitionSet) -> Vec<(Region, Region)> {
    let regions = enumerate_two_regions(layout);
    let mut missing = Vec::new();
    for (i, a) in regions.iter().enumerate() {
        for b in &regions[i + 1..] {
            if a.is_disjoint(b)
                && !set
                    .partitions
                    .iter()
                    .any(|p| p.contains(a) && p.contains(b))
            {
                missing.push((a.clone(), b.clone()));
            }
        }
    }
    missing
}
