//! The PTM simulator against a direct density-matrix calculation.

mod common;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use xtalk::design::{build_plan, Gate};
use xtalk::regions::{one_partition, DeviceLayout, Partition, Region};
use xtalk::rng::rng_from_seed;
use xtalk::simulator::{
    circuit_actions, circuit_distribution, crosstalk_free_model, operation_crosstalk_coherent,
    operation_crosstalk_depolarizing, run_plan, ErrorModel, QubitAction,
};

type M = DMatrix<C>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn paulis() -> [M; 4] {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        M::identity(2, 2),
        M::from_row_slice(2, 2, &[o, l, l, o]),
        M::from_row_slice(2, 2, &[o, -i, i, o]),
        M::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

/// Operator `op` on qubit `q` of `n`; qubit 0 is the least significant index bit.
fn embed(op: &M, q: usize, n: usize) -> M {
    let mut out = M::identity(1, 1);
    for k in (0..n).rev() {
        let f = if k == q {
            op.clone()
        } else {
            M::identity(2, 2)
        };
        out = out.kronecker(&f);
    }
    out
}

/// exp(-i A) by scaled Taylor series.
fn expm_i(a: &M) -> M {
    let scale = 8;
    let b = a.map(|z| z * c(0.0, -1.0) / f64::from(1 << scale));
    let mut term = M::identity(a.nrows(), a.ncols());
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &b / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..scale {
        sum = &sum * &sum;
    }
    sum
}

fn generator(g: Gate) -> M {
    let p = paulis();
    let half_pi = std::f64::consts::FRAC_PI_2;
    match g {
        Gate::I => M::zeros(2, 2),
        Gate::Xhalf => &p[1] * c(half_pi / 2.0, 0.0),
        Gate::Yhalf => &p[2] * c(half_pi / 2.0, 0.0),
    }
}

fn depolarize(rho: &M, q: usize, n: usize, p: f64) -> M {
    let ps = paulis();
    let mut out = rho * c(1.0 - 0.75 * p, 0.0);
    for s in &ps[1..] {
        let e = embed(s, q, n);
        out += &e * rho * &e * c(p / 4.0, 0.0);
    }
    out
}

#[derive(Clone, Copy)]
enum Oracle {
    Free { p_local: f64 },
    Depolarizing { p: f64, p_local: f64 },
    Coherent { epsilon: f64, p_local: f64 },
}

fn oracle_distribution(oracle: Oracle, n: usize, layers: &[Vec<QubitAction>]) -> Vec<f64> {
    let d = 1 << n;
    let mut rho = M::zeros(d, d);
    rho[(0, 0)] = c(1.0, 0.0);
    let z = &paulis()[3];
    for layer in layers {
        let mut h = M::zeros(d, d);
        for (q, a) in layer.iter().enumerate() {
            if let QubitAction::Gate(g) = a {
                h += embed(&generator(*g), q, n);
            }
        }
        if let Oracle::Coherent { epsilon, .. } = oracle {
            if layer[0] == QubitAction::Gate(Gate::Xhalf) {
                h += embed(z, 0, n) * embed(z, 1, n) * c(epsilon / 4.0, 0.0);
            }
        }
        let u = expm_i(&h);
        rho = &u * &rho * u.adjoint();
        let p_local = match oracle {
            Oracle::Free { p_local }
            | Oracle::Depolarizing { p_local, .. }
            | Oracle::Coherent { p_local, .. } => p_local,
        };
        for q in 0..n {
            rho = depolarize(&rho, q, n, p_local);
        }
        if let Oracle::Depolarizing { p, .. } = oracle {
            if layer[0] == QubitAction::Gate(Gate::Xhalf) {
                rho = depolarize(&rho, 1, n, p);
            }
        }
    }
    (0..d).map(|b| rho[(b, b)].re).collect()
}

fn compare(model: &ErrorModel, oracle: Oracle, layout: &DeviceLayout, seed: u64) -> f64 {
    let params = common::params(12, 6, 3, 0.2, 1);
    let plan = build_plan(&one_partition(layout), &params, seed).unwrap();
    let n = layout.n_qubits();
    let mut worst = 0.0f64;
    for c in 0..plan.circuits.len() {
        let got = circuit_distribution(model, &plan, c).unwrap();
        let want = oracle_distribution(oracle, n, &circuit_actions(&plan, c));
        for (a, b) in got.probs().iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

#[test]
fn crosstalk_free_matches_density_matrix() {
    let layout = DeviceLayout::fully_connected(3);
    let model = crosstalk_free_model(3, 0.03).unwrap();
    assert!(compare(&model, Oracle::Free { p_local: 0.03 }, &layout, 1) < 1e-10);
}

#[test]
fn depolarizing_crosstalk_matches_density_matrix() {
    let layout = DeviceLayout::fully_connected(2);
    let model = operation_crosstalk_depolarizing(2, 0, 1, 0.2, 0.01).unwrap();
    assert!(
        compare(
            &model,
            Oracle::Depolarizing {
                p: 0.2,
                p_local: 0.01
            },
            &layout,
            2
        ) < 1e-10
    );
}

#[test]
fn coherent_crosstalk_matches_density_matrix() {
    let layout = DeviceLayout::fully_connected(2);
    for eps in [0.0, 0.02, 0.3] {
        let model = operation_crosstalk_coherent(2, 0, 1, eps, 0.01).unwrap();
        let worst = compare(
            &model,
            Oracle::Coherent {
                epsilon: eps,
                p_local: 0.01,
            },
            &layout,
            3,
        );
        assert!(worst < 1e-10, "eps {eps}: {worst}");
    }
}

/// Mean total variation between coupled and uncoupled outcome distributions.
fn coherent_deviation(eps: f64, circuits: &[Vec<Vec<QubitAction>>]) -> f64 {
    let coupled = operation_crosstalk_coherent(2, 0, 1, eps, 0.0).unwrap();
    let bare = operation_crosstalk_coherent(2, 0, 1, 0.0, 0.0).unwrap();
    let total: f64 = circuits
        .iter()
        .map(|layers| {
            let a = coupled
                .circuit_distribution(layers.iter().map(Vec::as_slice))
                .unwrap();
            let b = bare
                .circuit_distribution(layers.iter().map(Vec::as_slice))
                .unwrap();
            a.probs()
                .iter()
                .zip(b.probs())
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
                / 2.0
        })
        .sum();
    total / circuits.len() as f64
}

fn scaling_exponent(circuits: &[Vec<Vec<QubitAction>>]) -> f64 {
    let eps = [0.02f64, 0.04, 0.08];
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = eps
        .iter()
        .map(|&e| coherent_deviation(e, circuits).ln())
        .collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    xs.iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

#[test]
fn coherent_deviation_is_second_order_when_output_is_a_z_eigenstate() {
    // Xhalf/idle sequences on the source with the target idle: the coupling
    // only tilts the rotation axis, so outcome probabilities move at eps^2.
    let x = QubitAction::Gate(Gate::Xhalf);
    let i = QubitAction::Gate(Gate::I);
    let circuits: Vec<Vec<Vec<QubitAction>>> = (1..=30)
        .map(|k| {
            (0..k)
                .map(|l| vec![if l % 3 == 2 { i } else { x }, i])
                .collect()
        })
        .collect();
    let slope = scaling_exponent(&circuits);
    assert!((slope - 2.0).abs() <= 0.5, "fitted exponent {slope}");
}

#[test]
fn coherent_deviation_is_first_order_on_random_circuits() {
    // Mixing Xhalf and Yhalf lets the tilted axes interfere, so random
    // depth-30 plan circuits show a linear response.
    let params = common::params(30, 10, 5, 0.0, 1);
    let plan = build_plan(
        &one_partition(&DeviceLayout::fully_connected(2)),
        &params,
        17,
    )
    .unwrap();
    let circuits: Vec<_> = (0..plan.circuits.len())
        .map(|c| circuit_actions(&plan, c))
        .collect();
    let slope = scaling_exponent(&circuits);
    assert!((slope - 1.0).abs() <= 0.5, "fitted exponent {slope}");
}

/// Per-region oracle for a crosstalk-free model: each region simulated alone.
fn product_of_regions(plan: &xtalk::design::ExperimentPlan, c: usize, p_local: f64) -> Vec<f64> {
    let actions = circuit_actions(plan, c);
    let n = plan.n_qubits;
    let marginals: Vec<(Vec<usize>, Vec<f64>)> = plan
        .partition
        .regions()
        .iter()
        .map(|r| {
            let local: Vec<Vec<QubitAction>> = actions
                .iter()
                .map(|layer| r.qubits().iter().map(|&q| layer[q]).collect())
                .collect();
            (
                r.qubits().to_vec(),
                oracle_distribution(Oracle::Free { p_local }, r.size(), &local),
            )
        })
        .collect();
    (0..1usize << n)
        .map(|b| {
            marginals
                .iter()
                .map(|(qs, dist)| {
                    let local = qs
                        .iter()
                        .enumerate()
                        .fold(0, |acc, (i, &q)| acc | ((b >> q & 1) << i));
                    dist[local]
                })
                .product()
        })
        .collect()
}

#[test]
fn crosstalk_free_sampling_converges_to_region_product() {
    let partition = Partition::new(
        3,
        vec![Region::single(0), Region::single(1), Region::single(2)],
    )
    .unwrap();
    let params = common::params(10, 4, 2, 0.3, 20_000);
    let plan = build_plan(&partition, &params, 5).unwrap();
    let model = crosstalk_free_model(3, 0.02).unwrap();
    let data = run_plan(&model, &plan, 6).unwrap();
    for (c, circuit) in data.circuits.iter().enumerate() {
        let want = product_of_regions(&plan, c, 0.02);
        let exact = circuit_distribution(&model, &plan, c).unwrap();
        for (a, b) in exact.probs().iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
        let mut counts = [0usize; 8];
        for &r in &circuit.results {
            counts[r as usize] += 1;
        }
        let n = circuit.results.len() as f64;
        for (k, &p) in want.iter().enumerate() {
            let sigma = (p * (1.0 - p) / n).sqrt().max(1e-9);
            assert!(
                (counts[k] as f64 / n - p).abs() <= 4.0 * sigma + 1e-12,
                "circuit {c} outcome {k}"
            );
        }
    }
}

#[test]
fn layer_maps_are_cptp_under_every_model() {
    let mut rng = rng_from_seed(9);
    use rand::Rng as _;
    let models = [
        crosstalk_free_model(2, 0.05).unwrap(),
        operation_crosstalk_depolarizing(2, 0, 1, 0.3, 0.05).unwrap(),
        operation_crosstalk_coherent(2, 0, 1, 0.2, 0.05).unwrap(),
    ];
    for model in &models {
        for _ in 0..20 {
            let layer: Vec<QubitAction> = (0..2)
                .map(|_| QubitAction::Gate(Gate::ALL[rng.gen_range(0..3)]))
                .collect();
            let s = model.layer_superoperator(&layer);
            assert!(s.tp_residual() < 1e-10);
            assert!(s.min_choi_eigenvalue() > -1e-10);
        }
    }
}
