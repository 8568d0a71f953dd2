//! Markovian error models: local depolarization, crosstalk rules and a
//! computational-basis readout.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pauli::{self, apply_1q, apply_2q, to_array16, to_array256, CMatrix, Superoperator};
use crate::design::Gate;
use crate::regions::DeviceLayout;
use crate::{Error, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 8;

/// What one qubit does during one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QubitAction {
    Gate(Gate),
    Cz { partner: usize },
}

/// Depolarization after every gate (`p_gate`) and after every idle (`p_idle`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalNoise {
    pub p_gate: f64,
    pub p_idle: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// Source runs Xhalf.
    Xhalf,
    /// Source runs any non-idle single-qubit gate.
    AnySingleQubitGate,
}

impl Trigger {
    fn fires(self, action: QubitAction) -> bool {
        match (self, action) {
            (Trigger::Xhalf, QubitAction::Gate(Gate::Xhalf)) => true,
            (Trigger::AnySingleQubitGate, QubitAction::Gate(g)) => g != Gate::I,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CrosstalkRule {
    None,
    /// When `trigger` fires on a source, the target is depolarized at rate p.
    Depolarizing {
        pairs: Vec<(usize, usize)>,
        p: f64,
        trigger: Trigger,
    },
    /// When the source runs Xhalf, a Z(x)Z term of strength epsilon is added
    /// to the generator of the (source, target) layer unitary.
    CoherentZz {
        source: usize,
        target: usize,
        epsilon: f64,
    },
}

/// Serializable model description, as used in configuration files and
/// dataset headers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    CrosstalkFree {
        n_qubits: usize,
        p_local: f64,
    },
    OperationDepolarizing {
        n_qubits: usize,
        source: usize,
        target: usize,
        p: f64,
        p_local: f64,
    },
    OperationCoherent {
        n_qubits: usize,
        source: usize,
        target: usize,
        epsilon: f64,
        p_local: f64,
    },
    Detection {
        p_m: f64,
        p_local: f64,
    },
    Ladder {
        p: f64,
        p_local: f64,
        p_idle_err: f64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<ErrorModel> {
        match *self {
            ModelSpec::CrosstalkFree { n_qubits, p_local } => {
                crosstalk_free_model(n_qubits, p_local)
            }
            ModelSpec::OperationDepolarizing {
                n_qubits,
                source,
                target,
                p,
                p_local,
            } => operation_crosstalk_depolarizing(n_qubits, source, target, p, p_local),
            ModelSpec::OperationCoherent {
                n_qubits,
                source,
                target,
                epsilon,
                p_local,
            } => operation_crosstalk_coherent(n_qubits, source, target, epsilon, p_local),
            ModelSpec::Detection { p_m, p_local } => detection_crosstalk(p_m, p_local),
            ModelSpec::Ladder {
                p,
                p_local,
                p_idle_err,
            } => ladder_crosstalk_model(&DeviceLayout::ladder6(), p, p_local, p_idle_err),
        }
    }
}

/// One kernel call on the state vector.
#[derive(Clone, Debug)]
pub enum LayerOp {
    One {
        q: usize,
        ptm: [f64; 16],
    },
    Two {
        q0: usize,
        q1: usize,
        ptm: Box<[f64; 256]>,
    },
}

impl LayerOp {
    pub fn apply(&self, state: &mut [f64]) {
        match self {
            LayerOp::One { q, ptm } => apply_1q(state, *q, ptm),
            LayerOp::Two { q0, q1, ptm } => apply_2q(state, *q0, *q1, ptm),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ErrorModel {
    n_qubits: usize,
    noise: LocalNoise,
    rule: CrosstalkRule,
    /// `readout[(b, s)]`: probability of reporting outcome b from basis state s.
    readout: Option<DMatrix<f64>>,
    prep: Vec<[f64; 3]>,
    gates: [[f64; 16]; 3],
    cz: Box<[f64; 256]>,
    /// Coupled (source, target) unitaries indexed by the target's gate.
    coupled: Option<[Box<[f64; 256]>; 3]>,
}

fn check_rate(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(format!("{name} = {p} outside [0, 1]")))
    }
}

/// Unitary of a single-qubit gate.
pub fn gate_unitary(g: Gate) -> CMatrix {
    match g {
        Gate::I => CMatrix::identity(2, 2),
        Gate::Xhalf => expm_hermitian(&(pauli::pauli(1) * Complex64::new(FRAC_PI_2, 0.0)), -0.5),
        Gate::Yhalf => expm_hermitian(&(pauli::pauli(2) * Complex64::new(FRAC_PI_2, 0.0)), -0.5),
    }
}

pub fn cz_unitary() -> CMatrix {
    let mut u = CMatrix::identity(4, 4);
    u[(3, 3)] = Complex64::new(-1.0, 0.0);
    u
}

/// `exp(i t H)` for Hermitian H, by eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, t * l));
    &eig.eigenvectors * CMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// Generator of a single-qubit gate: `U = exp(-i/2 G)`.
fn gate_generator(g: Gate) -> CMatrix {
    match g {
        Gate::I => CMatrix::zeros(2, 2),
        Gate::Xhalf => pauli::pauli(1) * Complex64::new(FRAC_PI_2, 0.0),
        Gate::Yhalf => pauli::pauli(2) * Complex64::new(FRAC_PI_2, 0.0),
    }
}

/// `exp(-i/2 [G_s + G_t + (eps/2) Z_s Z_t])` with local qubit 0 = source.
pub fn coupled_unitary(source_gate: Gate, target_gate: Gate, epsilon: f64) -> CMatrix {
    let id = CMatrix::identity(2, 2);
    let zz = pauli::pauli_string(2, 3 + 4 * 3);
    let h = id.kronecker(&gate_generator(source_gate))
        + gate_generator(target_gate).kronecker(&id)
        + zz * Complex64::new(epsilon / 2.0, 0.0);
    expm_hermitian(&h, -0.5)
}

fn ptm16(u: &CMatrix) -> [f64; 16] {
    to_array16(&Superoperator::from_unitary(u).expect("unitary").ptm)
}

fn ptm256(u: &CMatrix) -> Box<[f64; 256]> {
    to_array256(&Superoperator::from_unitary(u).expect("unitary").ptm)
}

impl ErrorModel {
    pub fn new(n_qubits: usize, noise: LocalNoise, rule: CrosstalkRule) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Dimension(format!(
                "simulator supports 1..={MAX_QUBITS} qubits, got {n_qubits}"
            )));
        }
        check_rate("p_gate", noise.p_gate)?;
        check_rate("p_idle", noise.p_idle)?;
        let coupled = match &rule {
            CrosstalkRule::None => None,
            CrosstalkRule::Depolarizing { pairs, p, .. } => {
                check_rate("p", *p)?;
                for &(s, t) in pairs {
                    check_pair(n_qubits, s, t)?;
                }
                None
            }
            CrosstalkRule::CoherentZz {
                source,
                target,
                epsilon,
            } => {
                check_pair(n_qubits, *source, *target)?;
                if !epsilon.is_finite() {
                    return Err(Error::param("epsilon must be finite"));
                }
                Some(Gate::ALL.map(|g| ptm256(&coupled_unitary(Gate::Xhalf, g, *epsilon))))
            }
        };
        Ok(ErrorModel {
            n_qubits,
            noise,
            rule,
            readout: None,
            prep: vec![[0.0, 0.0, 1.0]; n_qubits],
            gates: Gate::ALL.map(|g| ptm16(&gate_unitary(g))),
            cz: ptm256(&cz_unitary()),
            coupled,
        })
    }

    /// Replace the ideal readout by per-outcome diagonal weights.
    pub fn with_readout(mut self, weights: DMatrix<f64>) -> Result<Self> {
        let dim = 1usize << self.n_qubits;
        if weights.nrows() != dim || weights.ncols() != dim {
            return Err(Error::Dimension(format!("readout must be {dim}x{dim}")));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::param("readout weights must be nonnegative"));
        }
        for s in 0..dim {
            let total: f64 = weights.column(s).sum();
            if (total - 1.0).abs() > 1e-10 {
                return Err(Error::param(format!(
                    "POVM effects do not sum to identity at basis state {s}"
                )));
            }
        }
        self.readout = Some(weights);
        Ok(self)
    }

    /// Replace the |0...0> preparation by a product of Bloch vectors.
    pub fn with_prep(mut self, bloch: Vec<[f64; 3]>) -> Result<Self> {
        if bloch.len() != self.n_qubits {
            return Err(Error::Dimension(
                "one Bloch vector per qubit required".into(),
            ));
        }
        if bloch
            .iter()
            .any(|r| r.iter().map(|x| x * x).sum::<f64>() > 1.0 + 1e-12)
        {
            return Err(Error::param("Bloch vector outside the unit ball"));
        }
        self.prep = bloch;
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn rule(&self) -> &CrosstalkRule {
        &self.rule
    }

    pub fn initial_state(&self) -> Vec<f64> {
        pauli::product_state(&self.prep)
    }

    /// Diagonal of effect `E_b` in the computational basis.
    pub fn povm_effect(&self, b: usize) -> Vec<f64> {
        let dim = 1usize << self.n_qubits;
        match &self.readout {
            Some(w) => w.row(b).iter().copied().collect(),
            None => (0..dim).map(|s| if s == b { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Kernel calls implementing one layer: ideal gates (with any coherent
    /// coupling), then depolarization folded into the per-qubit maps.
    pub fn layer_ops(&self, actions: &[QubitAction]) -> Vec<LayerOp> {
        let n = self.n_qubits;
        assert_eq!(actions.len(), n, "one action per qubit");
        let mut shrink: Vec<f64> = actions
            .iter()
            .map(|a| {
                1.0 - if *a == QubitAction::Gate(Gate::I) {
                    self.noise.p_idle
                } else {
                    self.noise.p_gate
                }
            })
            .collect();
        if let CrosstalkRule::Depolarizing { pairs, p, trigger } = &self.rule {
            for &(s, t) in pairs {
                if trigger.fires(actions[s]) {
                    shrink[t] *= 1.0 - p;
                }
            }
        }

        let mut ops = Vec::with_capacity(n + 2);
        let mut done = vec![false; n];
        if let (CrosstalkRule::CoherentZz { source, target, .. }, Some(coupled)) =
            (&self.rule, &self.coupled)
        {
            let (s, t) = (*source, *target);
            if actions[s] == QubitAction::Gate(Gate::Xhalf) {
                match actions[t] {
                    QubitAction::Gate(g) => {
                        ops.push(LayerOp::Two {
                            q0: s,
                            q1: t,
                            ptm: coupled[g as usize].clone(),
                        });
                    }
                    QubitAction::Cz { partner } => {
                        ops.push(LayerOp::Two {
                            q0: t.min(partner),
                            q1: t.max(partner),
                            ptm: self.cz.clone(),
                        });
                        ops.push(LayerOp::Two {
                            q0: s,
                            q1: t,
                            ptm: coupled[Gate::I as usize].clone(),
                        });
                        done[partner] = true;
                    }
                }
                done[s] = true;
                done[t] = true;
            }
        }
        for q in 0..n {
            if done[q] {
                continue;
            }
            match actions[q] {
                QubitAction::Gate(g) => {
                    let mut m = self.gates[g as usize];
                    m[4..].iter_mut().for_each(|x| *x *= shrink[q]);
                    ops.push(LayerOp::One { q, ptm: m });
                    done[q] = true;
                }
                QubitAction::Cz { partner } => {
                    debug_assert_eq!(actions[partner], QubitAction::Cz { partner: q });
                    ops.push(LayerOp::Two {
                        q0: q,
                        q1: partner,
                        ptm: self.cz.clone(),
                    });
                    done[partner] = true;
                }
            }
        }
        // depolarization for qubits not already folded into a 1-qubit gate map
        let folded: Vec<usize> = ops
            .iter()
            .filter_map(|op| match op {
                LayerOp::One { q, .. } => Some(*q),
                LayerOp::Two { .. } => None,
            })
            .collect();
        for (q, &f) in shrink.iter().enumerate() {
            if f != 1.0 && !folded.contains(&q) {
                ops.push(LayerOp::One {
                    q,
                    ptm: depolarizing_array(f),
                });
            }
        }
        ops
    }

    /// Dense n-qubit superoperator of one layer.
    pub fn layer_superoperator(&self, actions: &[QubitAction]) -> Superoperator {
        let d = 4usize.pow(self.n_qubits as u32);
        let ops = self.layer_ops(actions);
        let mut ptm = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut col = vec![0.0; d];
            col[j] = 1.0;
            for op in &ops {
                op.apply(&mut col);
            }
            ptm.set_column(j, &nalgebra::DVector::from_vec(col));
        }
        Superoperator {
            n_qubits: self.n_qubits,
            ptm,
        }
    }

    /// Exact outcome distribution of a circuit given as per-layer actions.
    pub fn circuit_distribution<'a>(
        &self,
        layers: impl IntoIterator<Item = &'a [QubitAction]>,
    ) -> Result<OutcomeDistribution> {
        let mut state = self.initial_state();
        for actions in layers {
            for op in self.layer_ops(actions) {
                op.apply(&mut state);
            }
        }
        self.measure(&state)
    }

    /// Outcome probabilities of a state.
    pub fn measure(&self, state: &[f64]) -> Result<OutcomeDistribution> {
        let diag = pauli::z_diagonal(state, self.n_qubits);
        let probs = match &self.readout {
            None => diag,
            Some(w) => (w * nalgebra::DVector::from_vec(diag)).as_slice().to_vec(),
        };
        OutcomeDistribution::new(probs)
    }
}

fn depolarizing_array(f: f64) -> [f64; 16] {
    let mut m = [0.0; 16];
    m[0] = 1.0;
    m[5] = f;
    m[10] = f;
    m[15] = f;
    m
}

fn check_pair(n: usize, s: usize, t: usize) -> Result<()> {
    if s >= n || t >= n {
        return Err(Error::param(format!(
            "qubit pair ({s}, {t}) outside [0, {n})"
        )));
    }
    if s == t {
        return Err(Error::param(format!("source and target coincide ({s})")));
    }
    Ok(())
}

/// Probabilities over 2^n outcomes; outcome index bit q is qubit q.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if let Some(p) = probs.iter().find(|&&p| p < -1e-10 || p.is_nan()) {
            return Err(Error::Normalization(format!("negative probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::Normalization(format!(
                "probabilities sum to {total}"
            )));
        }
        probs.iter_mut().for_each(|p| *p = p.max(0.0));
        Ok(OutcomeDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal over the listed qubits; bit i of the result index is `qubits[i]`.
    pub fn marginal(&self, qubits: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << qubits.len()];
        for (s, p) in self.probs.iter().enumerate() {
            let k = qubits
                .iter()
                .enumerate()
                .map(|(i, &q)| (s >> q & 1) << i)
                .sum::<usize>();
            out[k] += p;
        }
        out
    }
}

pub fn crosstalk_free_model(n: usize, p_local: f64) -> Result<ErrorModel> {
    ErrorModel::new(
        n,
        LocalNoise {
            p_gate: p_local,
            p_idle: p_local,
        },
        CrosstalkRule::None,
    )
}

/// Xhalf on `source` depolarizes `target` at rate p.
pub fn operation_crosstalk_depolarizing(
    n: usize,
    source: usize,
    target: usize,
    p: f64,
    p_local: f64,
) -> Result<ErrorModel> {
    ErrorModel::new(
        n,
        LocalNoise {
            p_gate: p_local,
            p_idle: p_local,
        },
        CrosstalkRule::Depolarizing {
            pairs: vec![(source, target)],
            p,
            trigger: Trigger::Xhalf,
        },
    )
}

/// Xhalf on `source` carries a Z(x)Z coupling of strength epsilon to `target`.
pub fn operation_crosstalk_coherent(
    n: usize,
    source: usize,
    target: usize,
    epsilon: f64,
    p_local: f64,
) -> Result<ErrorModel> {
    ErrorModel::new(
        n,
        LocalNoise {
            p_gate: p_local,
            p_idle: p_local,
        },
        CrosstalkRule::CoherentZz {
            source,
            target,
            epsilon,
        },
    )
}

/// Two qubits; when qubit 0 reads 1, qubit 1's reported value flips with
/// probability p_m.
pub fn detection_crosstalk(p_m: f64, p_local: f64) -> Result<ErrorModel> {
    check_rate("p_m", p_m)?;
    let mut w = DMatrix::zeros(4, 4);
    // outcome index = bit0 + 2 bit1
    w[(0, 0)] = 1.0;
    w[(2, 2)] = 1.0;
    w[(1, 1)] = 1.0 - p_m;
    w[(1, 3)] = p_m;
    w[(3, 3)] = 1.0 - p_m;
    w[(3, 1)] = p_m;
    crosstalk_free_model(2, p_local)?.with_readout(w)
}

/// 2x3 ladder; single-qubit gates on the bottom row (3, 4, 5) depolarize the
/// qubit above (0, 1, 2).
pub fn ladder_crosstalk_model(
    layout: &DeviceLayout,
    p: f64,
    p_local: f64,
    p_idle_err: f64,
) -> Result<ErrorModel> {
    if *layout != DeviceLayout::ladder6() {
        return Err(Error::Layout(
            "ladder model requires the 6-qubit ladder layout".into(),
        ));
    }
    ErrorModel::new(
        6,
        LocalNoise {
            p_gate: p_local,
            p_idle: p_idle_err,
        },
        CrosstalkRule::Depolarizing {
            pairs: vec![(3, 0), (4, 1), (5, 2)],
            p,
            trigger: Trigger::AnySingleQubitGate,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn random_layer(n: usize, rng: &mut crate::rng::Rng) -> Vec<QubitAction> {
        (0..n)
            .map(|_| QubitAction::Gate(Gate::ALL[rng.gen_range(0..3)]))
            .collect()
    }

    fn idle(n: usize) -> Vec<QubitAction> {
        vec![QubitAction::Gate(Gate::I); n]
    }

    #[test]
    fn noiseless_idle_circuit_returns_zero() {
        let m = crosstalk_free_model(3, 0.0).unwrap();
        let layers = vec![idle(3); 7];
        let d = m
            .circuit_distribution(layers.iter().map(|l| l.as_slice()))
            .unwrap();
        assert!((d.probs()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn xhalf_gives_even_odds() {
        let m = crosstalk_free_model(1, 0.0).unwrap();
        let layer = [QubitAction::Gate(Gate::Xhalf)];
        let d = m.circuit_distribution([&layer[..]]).unwrap();
        assert!((d.probs()[0] - 0.5).abs() < 1e-14 && (d.probs()[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn crosstalk_free_factorizes() {
        let mut rng = crate::rng::rng_from_seed(4);
        let joint = crosstalk_free_model(2, 0.01).unwrap();
        let single = crosstalk_free_model(1, 0.01).unwrap();
        let layers: Vec<Vec<QubitAction>> = (0..25).map(|_| random_layer(2, &mut rng)).collect();
        let d = joint
            .circuit_distribution(layers.iter().map(|l| l.as_slice()))
            .unwrap();
        let q0: Vec<[QubitAction; 1]> = layers.iter().map(|l| [l[0]]).collect();
        let q1: Vec<[QubitAction; 1]> = layers.iter().map(|l| [l[1]]).collect();
        let d0 = single
            .circuit_distribution(q0.iter().map(|l| &l[..]))
            .unwrap();
        let d1 = single
            .circuit_distribution(q1.iter().map(|l| &l[..]))
            .unwrap();
        for s in 0..4 {
            let expect = d0.probs()[s & 1] * d1.probs()[s >> 1];
            assert!((d.probs()[s] - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_crosstalk_reduces_to_baseline() {
        let mut rng = crate::rng::rng_from_seed(5);
        let base = crosstalk_free_model(2, 0.01).unwrap();
        let dep = operation_crosstalk_depolarizing(2, 0, 1, 0.0, 0.01).unwrap();
        let coh = operation_crosstalk_coherent(2, 0, 1, 0.0, 0.01).unwrap();
        for _ in 0..20 {
            let layer = random_layer(2, &mut rng);
            let b = base.layer_superoperator(&layer);
            assert!(b.distance(&dep.layer_superoperator(&layer)) < 1e-12);
            assert!(b.distance(&coh.layer_superoperator(&layer)) < 1e-10);
        }
    }

    #[test]
    fn full_depolarization_on_target() {
        let m = operation_crosstalk_depolarizing(2, 0, 1, 1.0, 0.0).unwrap();
        let layer = [QubitAction::Gate(Gate::Xhalf), QubitAction::Gate(Gate::I)];
        let d = m.circuit_distribution([&layer[..]]).unwrap();
        let q1 = d.marginal(&[1]);
        assert!((q1[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn coherent_unitary_at_zero_epsilon_is_product() {
        let u = coupled_unitary(Gate::Xhalf, Gate::I, 0.0);
        let expect = CMatrix::identity(2, 2).kronecker(&gate_unitary(Gate::Xhalf));
        assert!((u - expect).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn detection_povm_effects() {
        let m = detection_crosstalk(0.25, 0.0).unwrap();
        // |10>: qubit 0 in 1, qubit 1 in 0 -> basis index 1
        let m = m
            .with_prep(vec![[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]])
            .unwrap();
        let d = m.measure(&m.initial_state()).unwrap();
        assert!((d.probs()[1] - 0.75).abs() < 1e-14);
        assert!((d.probs()[3] - 0.25).abs() < 1e-14);
        let ideal = detection_crosstalk(0.0, 0.0).unwrap();
        for b in 0..4 {
            let e = ideal.povm_effect(b);
            assert!(e
                .iter()
                .enumerate()
                .all(|(s, &w)| w == if s == b { 1.0 } else { 0.0 }));
        }
        let total: Vec<f64> = (0..4)
            .map(|s| (0..4).map(|b| m.povm_effect(b)[s]).sum())
            .collect();
        assert!(total.iter().all(|t| (t - 1.0).abs() < 1e-12));
    }

    #[test]
    fn ladder_rule_only_from_bottom_row() {
        let m = ladder_crosstalk_model(&DeviceLayout::ladder6(), 0.5, 0.0, 0.0).unwrap();
        let mut top = idle(6);
        top[1] = QubitAction::Gate(Gate::Xhalf);
        let ops = m.layer_ops(&top);
        for op in &ops {
            if let LayerOp::One { q, ptm } = op {
                if *q != 1 {
                    assert_eq!(ptm[5], 1.0);
                }
            }
        }
        let mut bottom = idle(6);
        bottom[4] = QubitAction::Gate(Gate::Yhalf);
        let ops = m.layer_ops(&bottom);
        let on1 = ops.iter().find_map(|op| match op {
            LayerOp::One { q: 1, ptm } => Some(ptm[5]),
            _ => None,
        });
        assert_eq!(on1, Some(0.5));
        assert!(ladder_crosstalk_model(&DeviceLayout::line(6), 0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn layers_are_cptp() {
        let mut rng = crate::rng::rng_from_seed(6);
        let models = [
            crosstalk_free_model(2, 0.01).unwrap(),
            operation_crosstalk_depolarizing(2, 0, 1, 0.2, 0.01).unwrap(),
            operation_crosstalk_coherent(2, 0, 1, 0.3, 0.01).unwrap(),
        ];
        for m in &models {
            for _ in 0..10 {
                let s = m.layer_superoperator(&random_layer(2, &mut rng));
                assert!(s.tp_residual() < 1e-10);
                assert!(s.min_choi_eigenvalue() > -1e-10);
            }
            let cz = [
                QubitAction::Cz { partner: 1 },
                QubitAction::Cz { partner: 0 },
            ];
            let s = m.layer_superoperator(&cz);
            assert!(s.tp_residual() < 1e-10 && s.min_choi_eigenvalue() > -1e-10);
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(crosstalk_free_model(2, 1.5).is_err());
        assert!(operation_crosstalk_depolarizing(2, 1, 1, 0.1, 0.0).is_err());
        assert!(operation_crosstalk_coherent(2, 0, 2, 0.1, 0.0).is_err());
        assert!(detection_crosstalk(-0.1, 0.0).is_err());
        assert!(crosstalk_free_model(9, 0.0).is_err());
    }
}
