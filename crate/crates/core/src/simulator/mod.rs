//! Exact simulation of experiment plans under Markovian error models.

mod model;
pub mod pauli;
mod run;

pub use model::{
    coupled_unitary, crosstalk_free_model, cz_unitary, detection_crosstalk, expm_hermitian,
    gate_unitary, ladder_crosstalk_model, operation_crosstalk_coherent,
    operation_crosstalk_depolarizing, CrosstalkRule, ErrorModel, LayerOp, LocalNoise, ModelSpec,
    OutcomeDistribution, QubitAction, Trigger, MAX_QUBITS,
};
pub use pauli::Superoperator;
pub use run::{circuit_actions, circuit_distribution, outcome_packing, run_plan};
