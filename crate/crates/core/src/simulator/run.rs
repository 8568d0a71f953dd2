//! Running an experiment plan under an error model.

use rand::Rng as _;
use rayon::prelude::*;

use super::model::{ErrorModel, OutcomeDistribution, QubitAction};
use crate::dataset::{CircuitData, Dataset, DatasetHeader};
use crate::design::{ExperimentPlan, GateLabel, Schedule};
use crate::rng::sub_rng;
use crate::{Error, Result};

/// Per-layer qubit actions of circuit `c`.
pub fn circuit_actions(plan: &ExperimentPlan, c: usize) -> Vec<Vec<QubitAction>> {
    let mut layers =
        vec![vec![QubitAction::Gate(crate::design::Gate::I); plan.n_qubits]; plan.params.depth];
    for (r, region) in plan.partition.regions().iter().enumerate() {
        let q = region.qubits();
        for (layer, label) in layers.iter_mut().zip(plan.layers(r, plan.circuits[c][r])) {
            match label {
                GateLabel::Single(g) => layer[q[0]] = QubitAction::Gate(g),
                GateLabel::Pair(a, b) => {
                    layer[q[0]] = QubitAction::Gate(a);
                    layer[q[1]] = QubitAction::Gate(b);
                }
                GateLabel::Cz => {
                    layer[q[0]] = QubitAction::Cz { partner: q[1] };
                    layer[q[1]] = QubitAction::Cz { partner: q[0] };
                }
            }
        }
    }
    layers
}

pub fn circuit_distribution(
    model: &ErrorModel,
    plan: &ExperimentPlan,
    c: usize,
) -> Result<OutcomeDistribution> {
    let layers = circuit_actions(plan, c);
    model.circuit_distribution(layers.iter().map(Vec::as_slice))
}

/// Packed region results for every basis outcome (bit q of the outcome is qubit q).
pub fn outcome_packing(plan: &ExperimentPlan) -> Vec<u16> {
    let regions = plan.partition.regions();
    (0..1usize << plan.n_qubits)
        .map(|s| {
            let mut packed = 0u16;
            let mut offset = 0;
            for r in regions {
                for (i, &q) in r.qubits().iter().enumerate() {
                    packed |= ((s >> q & 1) as u16) << (offset + i);
                }
                offset += r.size();
            }
            packed
        })
        .collect()
}

/// Simulate every circuit once exactly, then draw its repetitions.
/// Circuit `c` samples from its own stream, so the result does not depend
/// on thread scheduling.
pub fn run_plan(model: &ErrorModel, plan: &ExperimentPlan, seed: u64) -> Result<Dataset> {
    if model.n_qubits() != plan.n_qubits {
        return Err(Error::Dimension(format!(
            "model has {} qubits, plan has {}",
            model.n_qubits(),
            plan.n_qubits
        )));
    }
    plan.validate()?;
    let n_rep = plan.params.n_rep;
    if let Schedule::Explicit { order } = &plan.schedule {
        if order.iter().any(|&(_, r)| r as usize >= n_rep) {
            return Err(Error::Configuration(
                "schedule references a rep beyond N_rep".into(),
            ));
        }
    }
    let packing = outcome_packing(plan);
    let circuits = (0..plan.circuits.len())
        .into_par_iter()
        .map(|c| {
            let dist = circuit_distribution(model, plan, c)?;
            let mut cumulative: Vec<f64> = dist
                .probs()
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect();
            *cumulative.last_mut().unwrap() = f64::INFINITY;
            let mut rng = sub_rng(seed, "circuit", c as u64);
            let results = (0..n_rep)
                .map(|_| {
                    let u: f64 = rng.gen();
                    packing[cumulative.partition_point(|&x| x <= u)]
                })
                .collect();
            Ok(CircuitData {
                id: c as u64,
                settings: plan.circuits[c].clone(),
                results,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        region_widths: plan.partition.regions().iter().map(|r| r.size()).collect(),
        circuits,
        schedule: plan.schedule.clone(),
        header: Some(DatasetHeader {
            n_qubits: Some(plan.n_qubits),
            regions: Some(
                plan.partition
                    .regions()
                    .iter()
                    .map(|r| r.qubits().to_vec())
                    .collect(),
            ),
            idle_setting: Some(plan.idle_index()),
            seeds: [
                ("simulate".to_string(), seed),
                ("design".to_string(), plan.seed),
            ]
            .into_iter()
            .collect(),
            model: None,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_plan, DesignParams, ScheduleKind};
    use crate::regions::{one_partition, random_two_partition, DeviceLayout};
    use crate::simulator::crosstalk_free_model;

    fn params(n_rep: usize) -> DesignParams {
        DesignParams {
            depth: 8,
            n_circ: 4,
            n_con: 2,
            p_idle_sample: 0.25,
            n_rep,
            schedule: ScheduleKind::Rasterized,
        }
    }

    #[test]
    fn one_record_per_circuit_with_single_rep() {
        let plan = build_plan(
            &one_partition(&DeviceLayout::fully_connected(2)),
            &params(1),
            3,
        )
        .unwrap();
        let model = crosstalk_free_model(2, 0.01).unwrap();
        let data = run_plan(&model, &plan, 9).unwrap();
        assert_eq!(data.n_records(), plan.circuits.len());
    }

    #[test]
    fn deterministic_per_seed() {
        let plan = build_plan(
            &one_partition(&DeviceLayout::fully_connected(3)),
            &params(50),
            3,
        )
        .unwrap();
        let model = crosstalk_free_model(3, 0.02).unwrap();
        let a = run_plan(&model, &plan, 1).unwrap();
        assert_eq!(a, run_plan(&model, &plan, 1).unwrap());
        assert_ne!(a, run_plan(&model, &plan, 2).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let plan = build_plan(
            &one_partition(&DeviceLayout::fully_connected(2)),
            &params(1),
            3,
        )
        .unwrap();
        let model = crosstalk_free_model(3, 0.0).unwrap();
        assert!(matches!(
            run_plan(&model, &plan, 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn packing_follows_region_order() {
        let part = random_two_partition(&DeviceLayout::fully_connected(4), 8).unwrap();
        let plan = build_plan(&part, &params(1), 3).unwrap();
        let packing = outcome_packing(&plan);
        let r0 = part.regions()[0].qubits();
        // setting only the lower qubit of region 0 sets packed bit 0
        assert_eq!(packing[1 << r0[0]], 1);
        assert_eq!(packing[1 << r0[1]], 2);
    }
}
