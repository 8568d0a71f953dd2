//! Simulated end-to-end scenarios shared by the integration suites.
#![allow(dead_code)]

use xtalk::design::{build_plan, DesignParams, ExperimentPlan, ScheduleKind};
use xtalk::discovery::{analyze, AnalysisConfig, CrosstalkGraph};
use xtalk::regions::{one_partition, DeviceLayout};
use xtalk::rng::sub_seed;
use xtalk::simulator::{run_plan, ErrorModel, ModelSpec};
use xtalk::stats::CountTable;

#[derive(Clone, Debug)]
pub struct Scenario {
    pub layout: DeviceLayout,
    pub params: DesignParams,
    pub model: ModelSpec,
    pub analysis: AnalysisConfig,
}

pub fn params(
    depth: usize,
    n_circ: usize,
    n_con: usize,
    p_idle: f64,
    n_rep: usize,
) -> DesignParams {
    DesignParams {
        depth,
        n_circ,
        n_con,
        p_idle_sample: p_idle,
        n_rep,
        schedule: ScheduleKind::Rasterized,
    }
}

fn per_test(alpha: f64) -> AnalysisConfig {
    AnalysisConfig {
        alpha,
        ..AnalysisConfig::default()
    }
}

/// Xhalf on qubit 0 depolarizes qubit 1.
pub fn operation_depolarizing() -> Scenario {
    Scenario {
        layout: DeviceLayout::fully_connected(2),
        params: params(30, 10, 5, 0.1, 10_000),
        model: ModelSpec::OperationDepolarizing {
            n_qubits: 2,
            source: 0,
            target: 1,
            p: 1e-2,
            p_local: 1e-2,
        },
        analysis: per_test(0.01),
    }
}

/// Xhalf on qubit 0 carries a weak ZZ coupling to qubit 1.
pub fn operation_coherent(epsilon: f64) -> Scenario {
    Scenario {
        layout: DeviceLayout::fully_connected(2),
        params: params(30, 10, 5, 0.0, 100_000),
        model: ModelSpec::OperationCoherent {
            n_qubits: 2,
            source: 0,
            target: 1,
            epsilon,
            p_local: 1e-2,
        },
        analysis: per_test(0.01),
    }
}

/// Qubit 1's readout flips when qubit 0 reads 1.
pub fn detection() -> Scenario {
    Scenario {
        layout: DeviceLayout::fully_connected(2),
        params: params(10, 20, 10, 0.0, 100_000),
        model: ModelSpec::Detection {
            p_m: 1e-2,
            p_local: 1e-2,
        },
        analysis: per_test(0.01),
    }
}

/// Bottom-row gates of the 2x3 ladder depolarize the qubit above.
pub fn ladder() -> Scenario {
    Scenario {
        layout: DeviceLayout::ladder6(),
        params: params(20, 10, 5, 0.1, 10_000),
        model: ModelSpec::Ladder {
            p: 1e-2,
            p_local: 1e-2,
            p_idle_err: 5e-3,
        },
        analysis: per_test(0.01),
    }
}

/// Crosstalk-free two-qubit device at the operation-crosstalk scale,
/// analysed with Bonferroni control at 0.05.
pub fn null_two_qubit() -> Scenario {
    Scenario {
        layout: DeviceLayout::fully_connected(2),
        params: params(30, 10, 5, 0.1, 10_000),
        model: ModelSpec::CrosstalkFree {
            n_qubits: 2,
            p_local: 1e-2,
        },
        analysis: AnalysisConfig {
            alpha: 0.05,
            bonferroni: true,
            ..AnalysisConfig::default()
        },
    }
}

pub fn plan(s: &Scenario, seed: u64) -> ExperimentPlan {
    build_plan(
        &one_partition(&s.layout),
        &s.params,
        sub_seed(seed, "design", 0),
    )
    .expect("plan")
}

pub fn model(s: &Scenario) -> ErrorModel {
    s.model.build().expect("model")
}

pub fn table(s: &Scenario, seed: u64) -> CountTable {
    let plan = plan(s, seed);
    let data = run_plan(&model(s), &plan, sub_seed(seed, "simulate", 0)).expect("simulation");
    CountTable::from_dataset(&data).expect("table")
}

pub fn run(s: &Scenario, seed: u64) -> CrosstalkGraph {
    analyze(&table(s, seed), &s.analysis, None).expect("analysis")
}

/// Crosstalk edges as "A--B" strings, settings first.
pub fn crosstalk_names(g: &CrosstalkGraph) -> Vec<String> {
    g.crosstalk_edges()
        .map(|e| format!("{}--{}", e.a, e.b))
        .collect()
}

pub fn edge_names(g: &CrosstalkGraph) -> Vec<String> {
    g.edges
        .iter()
        .map(|e| format!("{}--{}", e.a, e.b))
        .collect()
}
