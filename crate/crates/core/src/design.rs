//! Experiment design: per-region bags of random subcircuits, randomized
//! contexts with idle boosting, and the repetition schedule.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::regions::{Partition, Region};
use crate::rng::{rng_from_seed, sub_rng, Rng};
use crate::{Error, Result};

/// Elementary single-qubit gates. `Xhalf` and `Yhalf` are pi/2 rotations,
/// `I` is an idle of the same duration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    I,
    Xhalf,
    Yhalf,
}

impl Gate {
    pub const ALL: [Gate; 3] = [Gate::I, Gate::Xhalf, Gate::Yhalf];

    pub fn name(self) -> &'static str {
        match self {
            Gate::I => "I",
            Gate::Xhalf => "Xhalf",
            Gate::Yhalf => "Yhalf",
        }
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" => Ok(Gate::I),
            "Xhalf" => Ok(Gate::Xhalf),
            "Yhalf" => Ok(Gate::Yhalf),
            _ => Err(Error::Configuration(format!("unknown gate '{s}'"))),
        }
    }
}

/// One layer of a subcircuit on one region.
///
/// On a 2-region, `Pair(a, b)` runs `a` on the lower qubit and `b` on the
/// higher one in parallel; `Cz` is the entangling gate. Names are `I`,
/// `Xhalf:Yhalf`, `CZ`, and so on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GateLabel {
    Single(Gate),
    Pair(Gate, Gate),
    Cz,
}

impl GateLabel {
    /// Number of qubits the label acts on.
    pub fn size(self) -> usize {
        match self {
            GateLabel::Single(_) => 1,
            GateLabel::Pair(..) | GateLabel::Cz => 2,
        }
    }

    pub fn is_idle(self) -> bool {
        matches!(
            self,
            GateLabel::Single(Gate::I) | GateLabel::Pair(Gate::I, Gate::I)
        )
    }
}

impl fmt::Display for GateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateLabel::Single(g) => f.write_str(g.name()),
            GateLabel::Pair(a, b) => write!(f, "{}:{}", a.name(), b.name()),
            GateLabel::Cz => f.write_str("CZ"),
        }
    }
}

impl FromStr for GateLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "CZ" {
            return Ok(GateLabel::Cz);
        }
        match s.split_once(':') {
            Some((a, b)) => Ok(GateLabel::Pair(a.parse()?, b.parse()?)),
            None => Ok(GateLabel::Single(s.parse()?)),
        }
    }
}

impl TryFrom<String> for GateLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GateLabel> for String {
    fn from(g: GateLabel) -> Self {
        g.to_string()
    }
}

/// Gates available to 1-regions and 2-regions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateRegistry {
    single: Vec<GateLabel>,
    pair: Vec<GateLabel>,
}

impl Default for GateRegistry {
    /// `{I, Xhalf, Yhalf}` on 1-regions; on 2-regions every parallel pair of
    /// those plus `CZ`.
    fn default() -> Self {
        let single = Gate::ALL.iter().map(|&g| GateLabel::Single(g)).collect();
        let mut pair: Vec<GateLabel> = Gate::ALL
            .iter()
            .flat_map(|&a| Gate::ALL.iter().map(move |&b| GateLabel::Pair(a, b)))
            .collect();
        pair.push(GateLabel::Cz);
        GateRegistry { single, pair }
    }
}

impl GateRegistry {
    pub fn with_gates(single: Vec<GateLabel>, pair: Vec<GateLabel>) -> Result<Self> {
        if let Some(g) = single.iter().find(|g| g.size() != 1) {
            return Err(Error::Configuration(format!(
                "gate {g} does not act on one qubit"
            )));
        }
        if let Some(g) = pair.iter().find(|g| g.size() != 2) {
            return Err(Error::Configuration(format!(
                "gate {g} does not act on two qubits"
            )));
        }
        Ok(GateRegistry { single, pair })
    }

    pub fn gates(&self, region_size: usize) -> &[GateLabel] {
        match region_size {
            1 => &self.single,
            2 => &self.pair,
            _ => &[],
        }
    }

    /// Idle layer for a region of the given size.
    pub fn idle(region_size: usize) -> GateLabel {
        if region_size == 1 {
            GateLabel::Single(Gate::I)
        } else {
            GateLabel::Pair(Gate::I, Gate::I)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subcircuit {
    pub region: Region,
    pub layers: Vec<GateLabel>,
}

impl Subcircuit {
    pub fn idle(region: &Region, depth: usize) -> Self {
        Subcircuit {
            region: region.clone(),
            layers: vec![GateRegistry::idle(region.size()); depth],
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

const MAX_BAG_REDRAWS: usize = 10_000;

/// Draw `n_circ` depth-`depth` subcircuits with layers uniform over the
/// registry. The whole bag is redrawn until every registry gate appears.
pub fn sample_bag(
    region: &Region,
    registry: &GateRegistry,
    depth: usize,
    n_circ: usize,
    seed: u64,
) -> Result<Vec<Subcircuit>> {
    if depth == 0 || n_circ == 0 {
        return Err(Error::param("depth and N_circ must be at least 1"));
    }
    let gates = registry.gates(region.size());
    if gates.is_empty() {
        return Err(Error::Configuration(format!(
            "no gates registered for {}-qubit regions",
            region.size()
        )));
    }
    if depth * n_circ < gates.len() {
        return Err(Error::Configuration(format!(
            "bag of {n_circ} x {depth} layers cannot contain all {} registry gates",
            gates.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    for _ in 0..MAX_BAG_REDRAWS {
        let bag: Vec<Subcircuit> = (0..n_circ)
            .map(|_| Subcircuit {
                region: region.clone(),
                layers: (0..depth)
                    .map(|_| *gates.choose(&mut rng).unwrap())
                    .collect(),
            })
            .collect();
        let present: HashSet<GateLabel> =
            bag.iter().flat_map(|s| s.layers.iter().copied()).collect();
        if gates.iter().all(|g| present.contains(g)) {
            return Ok(bag);
        }
    }
    Err(Error::Configuration(format!(
        "no bag containing every registry gate after {MAX_BAG_REDRAWS} draws; increase depth or N_circ"
    )))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    #[default]
    Rasterized,
    Shuffled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignParams {
    /// Subcircuit depth L.
    pub depth: usize,
    pub n_circ: usize,
    pub n_con: usize,
    pub p_idle_sample: f64,
    pub n_rep: usize,
    #[serde(default)]
    pub schedule: ScheduleKind,
}

impl DesignParams {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::param("depth L must be at least 1"));
        }
        if self.n_circ == 0 || self.n_con == 0 || self.n_rep == 0 {
            return Err(Error::param("N_circ, N_con and N_rep must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.p_idle_sample) {
            return Err(Error::param(format!(
                "p_idle_sample must lie in [0, 1], got {}",
                self.p_idle_sample
            )));
        }
        if self.n_circ >= u16::MAX as usize {
            return Err(Error::param("N_circ too large"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalRegime {
    /// Crosstalk comparable to local error.
    Low,
    /// Crosstalk dominates local error.
    High,
}

/// Defaults for an `m`-region partition: N_circ = 20, N_con = N_circ/2 (low
/// signal) or N_circ/4 (high), p_idle_sample = 1/M, N_rep = 1000, L = 20.
pub fn default_params(m: usize, regime: SignalRegime) -> DesignParams {
    if m <= 1 {
        log::warn!("a single region has no contexts to vary; the plan cannot reveal crosstalk");
    }
    let n_circ = 20;
    DesignParams {
        depth: 20,
        n_circ,
        n_con: match regime {
            SignalRegime::Low => n_circ / 2,
            SignalRegime::High => n_circ / 4,
        },
        p_idle_sample: 1.0 / m.max(1) as f64,
        n_rep: 1000,
        schedule: ScheduleKind::Rasterized,
    }
}

/// Order in which (circuit, repetition) pairs are executed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Schedule {
    /// Repetition r of every circuit, in circuit order, before repetition r+1.
    Rasterized { n_rep: usize },
    /// Arbitrary explicit order.
    Explicit { order: Vec<(u32, u32)> },
}

impl Schedule {
    pub fn len(&self, n_circuits: usize) -> usize {
        match self {
            Schedule::Rasterized { n_rep } => n_rep * n_circuits,
            Schedule::Explicit { order } => order.len(),
        }
    }

    pub fn is_empty(&self, n_circuits: usize) -> bool {
        self.len(n_circuits) == 0
    }

    pub fn iter(&self, n_circuits: usize) -> Box<dyn Iterator<Item = (u32, u32)> + '_> {
        match self {
            Schedule::Rasterized { n_rep } => Box::new(
                (0..*n_rep as u32).flat_map(move |r| (0..n_circuits as u32).map(move |c| (c, r))),
            ),
            Schedule::Explicit { order } => Box::new(order.iter().copied()),
        }
    }

    fn shuffled(n_circuits: usize, n_rep: usize, rng: &mut Rng) -> Self {
        let mut order: Vec<(u32, u32)> = (0..n_rep as u32)
            .flat_map(|r| (0..n_circuits as u32).map(move |c| (c, r)))
            .collect();
        order.shuffle(rng);
        Schedule::Explicit { order }
    }
}

/// The full experiment: bags, deduplicated circuits and schedule.
///
/// A circuit is a list of per-region setting indices. Index `k < N_circ`
/// runs subcircuit `k` of that region's bag; index `N_circ` runs the idle
/// subcircuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanDocument", into = "PlanDocument")]
pub struct ExperimentPlan {
    pub n_qubits: usize,
    pub seed: u64,
    pub params: DesignParams,
    pub partition: Partition,
    pub bags: Vec<Vec<Subcircuit>>,
    pub circuits: Vec<Vec<u32>>,
    pub schedule: Schedule,
}

#[derive(Serialize, Deserialize)]
struct PlanDocument {
    n_qubits: usize,
    seed: u64,
    params: DesignParams,
    partition: Partition,
    bags: Vec<Vec<Vec<GateLabel>>>,
    circuits: Vec<Vec<u32>>,
    schedule: Schedule,
}

impl From<ExperimentPlan> for PlanDocument {
    fn from(p: ExperimentPlan) -> Self {
        PlanDocument {
            n_qubits: p.n_qubits,
            seed: p.seed,
            params: p.params,
            partition: p.partition,
            bags: p
                .bags
                .into_iter()
                .map(|bag| bag.into_iter().map(|s| s.layers).collect())
                .collect(),
            circuits: p.circuits,
            schedule: p.schedule,
        }
    }
}

impl TryFrom<PlanDocument> for ExperimentPlan {
    type Error = Error;

    fn try_from(d: PlanDocument) -> Result<Self> {
        if d.bags.len() != d.partition.len() {
            return Err(Error::Configuration(format!(
                "plan has {} bags for {} regions",
                d.bags.len(),
                d.partition.len()
            )));
        }
        let bags = d
            .bags
            .into_iter()
            .zip(d.partition.regions())
            .map(|(bag, region)| {
                bag.into_iter()
                    .map(|layers| Subcircuit {
                        region: region.clone(),
                        layers,
                    })
                    .collect()
            })
            .collect();
        let plan = ExperimentPlan {
            n_qubits: d.n_qubits,
            seed: d.seed,
            params: d.params,
            partition: d.partition,
            bags,
            circuits: d.circuits,
            schedule: d.schedule,
        };
        plan.validate()?;
        Ok(plan)
    }
}

impl ExperimentPlan {
    /// Number of regions M.
    pub fn n_regions(&self) -> usize {
        self.partition.len()
    }

    pub fn idle_index(&self) -> u32 {
        self.params.n_circ as u32
    }

    /// Layers run on `region` for setting index `setting`.
    pub fn layers(&self, region: usize, setting: u32) -> Vec<GateLabel> {
        if setting == self.idle_index() {
            vec![GateRegistry::idle(self.partition.regions()[region].size()); self.params.depth]
        } else {
            self.bags[region][setting as usize].layers.clone()
        }
    }

    pub fn n_records(&self) -> usize {
        self.schedule.len(self.circuits.len())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let m = self.partition.len();
        if self.partition.n_qubits() != self.n_qubits {
            return Err(Error::Configuration(
                "partition does not cover n_qubits".into(),
            ));
        }
        for (bag, region) in self.bags.iter().zip(self.partition.regions()) {
            if bag.len() != self.params.n_circ {
                return Err(Error::Configuration(format!(
                    "bag for region {region} has {} subcircuits",
                    bag.len()
                )));
            }
            for s in bag {
                if s.depth() != self.params.depth {
                    return Err(Error::Configuration(format!(
                        "subcircuit on {region} has depth {}",
                        s.depth()
                    )));
                }
                if let Some(g) = s.layers.iter().find(|g| g.size() != region.size()) {
                    return Err(Error::Configuration(format!(
                        "gate {g} does not fit region {region}"
                    )));
                }
            }
        }
        let mut seen = HashSet::new();
        for c in &self.circuits {
            if c.len() != m {
                return Err(Error::Configuration(format!(
                    "circuit assigns {} of {m} regions",
                    c.len()
                )));
            }
            if c.iter().any(|&s| s > self.idle_index()) {
                return Err(Error::Configuration(format!(
                    "circuit {c:?} references a missing bag entry"
                )));
            }
            if !seen.insert(c) {
                return Err(Error::Configuration(format!("duplicate circuit {c:?}")));
            }
        }
        if let Schedule::Explicit { order } = &self.schedule {
            if order
                .iter()
                .any(|&(c, _)| c as usize >= self.circuits.len())
            {
                return Err(Error::Configuration(
                    "schedule references a missing circuit".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Pre-deduplication circuit list: for each region m and each bag index k,
/// `n_con` circuits that run k on m and a random context elsewhere.
pub fn generate_candidates(
    m_regions: usize,
    params: &DesignParams,
    rng: &mut Rng,
) -> Vec<Vec<u32>> {
    let idle = params.n_circ as u32;
    let mut out = Vec::with_capacity(m_regions * params.n_circ * params.n_con);
    for m in 0..m_regions {
        for nu in 0..params.n_circ as u32 {
            for _ in 0..params.n_con {
                let circuit = (0..m_regions)
                    .map(|k| {
                        if k == m {
                            nu
                        } else if rng.gen::<f64>() < params.p_idle_sample {
                            idle
                        } else {
                            rng.gen_range(0..params.n_circ as u32)
                        }
                    })
                    .collect();
                out.push(circuit);
            }
        }
    }
    out
}

pub fn build_plan(
    partition: &Partition,
    params: &DesignParams,
    seed: u64,
) -> Result<ExperimentPlan> {
    build_plan_with_registry(partition, params, &GateRegistry::default(), seed)
}

pub fn build_plan_with_registry(
    partition: &Partition,
    params: &DesignParams,
    registry: &GateRegistry,
    seed: u64,
) -> Result<ExperimentPlan> {
    params.validate()?;
    if partition.is_empty() {
        return Err(Error::param("partition has no regions"));
    }
    if partition.len() == 1 {
        log::warn!("a single region has no contexts to vary; the plan cannot reveal crosstalk");
    }
    let bags = partition
        .regions()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            sample_bag(
                r,
                registry,
                params.depth,
                params.n_circ,
                crate::rng::sub_seed(seed, "bag", i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let candidates =
        generate_candidates(partition.len(), params, &mut sub_rng(seed, "contexts", 0));
    let mut seen = HashSet::with_capacity(candidates.len());
    let circuits: Vec<Vec<u32>> = candidates
        .into_iter()
        .filter(|c| seen.insert(c.clone()))
        .collect();

    let schedule = match params.schedule {
        ScheduleKind::Rasterized => Schedule::Rasterized {
            n_rep: params.n_rep,
        },
        ScheduleKind::Shuffled => Schedule::shuffled(
            circuits.len(),
            params.n_rep,
            &mut sub_rng(seed, "schedule", 0),
        ),
    };
    let plan = ExperimentPlan {
        n_qubits: partition.n_qubits(),
        seed,
        params: params.clone(),
        partition: partition.clone(),
        bags,
        circuits,
        schedule,
    };
    debug_assert!(plan.validate().is_ok());
    Ok(plan)
}
