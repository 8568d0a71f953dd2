mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Cursor;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use xtalk::dataset::Dataset;
use xtalk::design::{build_plan, ExperimentPlan, GateRegistry, Schedule, ScheduleKind};
use xtalk::regions::{
    brute_force_cover, cover_size, enumerate_two_regions, one_partition, uncovered_pairs,
    DeviceLayout, Partition, PartitionSet, Region, TwoPartitionSampler,
};
use xtalk::rng::rng_from_seed;
use xtalk::simulator::{crosstalk_free_model, run_plan};

#[test]
fn constrained_matchings_are_uniform() {
    let layout = DeviceLayout::ladder6();
    let sampler = TwoPartitionSampler::new(&layout).unwrap();
    let support = sampler
        .support_size()
        .expect("ladder support is enumerated");
    let mut rng = rng_from_seed(21);
    let draws = 60_000;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for _ in 0..draws {
        *counts
            .entry(sampler.sample(&mut rng).to_string())
            .or_default() += 1;
    }
    assert_eq!(counts.len(), support);
    let expected = draws as f64 / support as f64;
    let chi2: f64 = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p = 1.0 - ChiSquared::new((support - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 1e-3, "chi2 {chi2} over {support} matchings, p = {p}");
}

#[test]
fn sampled_partitions_respect_the_layout() {
    let layout = DeviceLayout::line(7);
    let sampler = TwoPartitionSampler::new(&layout).unwrap();
    let mut rng = rng_from_seed(4);
    for _ in 0..500 {
        let p = sampler.sample(&mut rng);
        p.check_allowed(&layout).unwrap();
        let covered: usize = p.regions().iter().map(Region::size).sum();
        assert_eq!(covered, 7);
    }
}

#[test]
fn brute_force_cover_is_complete() {
    for layout in [
        DeviceLayout::fully_connected(8),
        DeviceLayout::ladder6(),
        DeviceLayout::line(6),
    ] {
        let set = brute_force_cover(&layout);
        assert!(uncovered_pairs(&layout, &set).is_empty());
        let round = PartitionSet::from_json(&set.to_json().unwrap()).unwrap();
        assert_eq!(round.partitions, set.partitions);
    }
}

#[test]
fn cover_size_formula() {
    // ceil(n^2 (2 ln R - ln eps)) evaluated directly
    let direct = |n: f64, r: f64, eps: f64| (n * n * (2.0 * r.ln() - eps.ln())).ceil() as usize;
    let k6 = DeviceLayout::fully_connected(6);
    let r = enumerate_two_regions(&k6).len();
    assert_eq!(r, 15);
    assert_eq!(cover_size(6, r, 0.05).unwrap(), 303);
    for (n, eps) in [(4usize, 0.2), (6, 0.1), (8, 0.01)] {
        let r = n * (n - 1) / 2;
        assert_eq!(
            cover_size(n, r, eps).unwrap(),
            direct(n as f64, r as f64, eps)
        );
    }
}

fn plan_for(layout: &DeviceLayout, p_idle: f64, seed: u64) -> ExperimentPlan {
    build_plan(
        &one_partition(layout),
        &common::params(8, 6, 3, p_idle, 2),
        seed,
    )
    .unwrap()
}

#[test]
fn plans_satisfy_design_invariants() {
    let registry = GateRegistry::default();
    for (layout, seed) in [
        (DeviceLayout::fully_connected(2), 1),
        (DeviceLayout::ladder6(), 2),
        (DeviceLayout::line(3), 3),
    ] {
        let plan = plan_for(&layout, 0.25, seed);
        let m = plan.n_regions();
        let n_circ = plan.params.n_circ;
        assert!(plan.circuits.len() <= m * n_circ * plan.params.n_con);
        let unique: HashSet<&Vec<u32>> = plan.circuits.iter().collect();
        assert_eq!(unique.len(), plan.circuits.len(), "duplicate circuits");
        for circuit in &plan.circuits {
            assert_eq!(circuit.len(), m);
            assert!(circuit.iter().all(|&s| s <= plan.idle_index()));
        }
        for (r, bag) in plan.bags.iter().enumerate() {
            assert_eq!(bag.len(), n_circ);
            let present: HashSet<_> = bag.iter().flat_map(|s| s.layers.iter().copied()).collect();
            for g in registry.gates(plan.partition.regions()[r].size()) {
                assert!(present.contains(g), "bag {r} lacks {g:?}");
            }
            // every bag entry runs in at least one circuit
            for nu in 0..n_circ as u32 {
                assert!(plan.circuits.iter().any(|c| c[r] == nu));
            }
        }
        let round = ExperimentPlan::from_json(&plan.to_json().unwrap()).unwrap();
        assert_eq!(round, plan);
    }
}

#[test]
fn certain_idle_contexts_isolate_the_target() {
    let plan = plan_for(&DeviceLayout::fully_connected(2), 1.0, 8);
    let idle = plan.idle_index();
    for circuit in &plan.circuits {
        assert_eq!(
            circuit.iter().filter(|&&s| s != idle).count(),
            1,
            "{circuit:?}"
        );
    }
    assert_eq!(plan.circuits.len(), 2 * plan.params.n_circ);
}

#[test]
fn ladder_plan_fits_the_stated_budget() {
    let s = common::ladder();
    for seed in 0..5 {
        let plan = common::plan(&s, seed);
        assert!(plan.circuits.len() <= 300);
        assert_eq!(plan.n_regions(), 6);
    }
}

#[test]
fn plans_are_deterministic_in_the_seed() {
    let layout = DeviceLayout::ladder6();
    assert_eq!(plan_for(&layout, 0.2, 5), plan_for(&layout, 0.2, 5));
    assert_ne!(
        plan_for(&layout, 0.2, 5).circuits,
        plan_for(&layout, 0.2, 6).circuits
    );
}

#[test]
fn shuffled_schedule_is_a_permutation() {
    let mut params = common::params(6, 4, 2, 0.3, 5);
    params.schedule = ScheduleKind::Shuffled;
    let plan = build_plan(
        &one_partition(&DeviceLayout::fully_connected(3)),
        &params,
        9,
    )
    .unwrap();
    let Schedule::Explicit { order } = &plan.schedule else {
        panic!("expected an explicit order")
    };
    let set: BTreeSet<(u32, u32)> = order.iter().copied().collect();
    assert_eq!(set.len(), order.len());
    assert_eq!(order.len(), plan.circuits.len() * 5);
    assert!(set
        .iter()
        .all(|&(c, r)| (c as usize) < plan.circuits.len() && r < 5));
}

fn simulated(kind: ScheduleKind, partition: Partition) -> Dataset {
    let mut params = common::params(6, 4, 2, 0.3, 7);
    params.schedule = kind;
    let plan = build_plan(&partition, &params, 10).unwrap();
    run_plan(
        &crosstalk_free_model(partition.n_qubits(), 0.05).unwrap(),
        &plan,
        11,
    )
    .unwrap()
}

#[test]
fn datasets_round_trip() {
    let layout = DeviceLayout::fully_connected(3);
    let mixed = Partition::for_layout(
        &layout,
        vec![Region::pair(&layout, 0, 2).unwrap(), Region::single(1)],
    )
    .unwrap();
    for kind in [ScheduleKind::Rasterized, ScheduleKind::Shuffled] {
        for partition in [one_partition(&layout), mixed.clone()] {
            let data = simulated(kind, partition);
            let mut buf = Vec::new();
            data.write_jsonl(&mut buf).unwrap();
            let back = Dataset::read_jsonl(Cursor::new(&buf)).unwrap();
            assert_eq!(back, data);
            assert_eq!(back.digest(), data.digest());
            let a: Vec<_> = data.records().collect();
            let b: Vec<_> = back.records().collect();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn digest_ignores_the_header() {
    let mut data = simulated(
        ScheduleKind::Rasterized,
        one_partition(&DeviceLayout::fully_connected(2)),
    );
    let with = data.digest();
    data.header = None;
    assert_eq!(data.digest(), with);
    let mut buf = Vec::new();
    data.write_jsonl(&mut buf).unwrap();
    assert!(!String::from_utf8(buf).unwrap().contains("header"));
}

#[test]
fn records_follow_the_schedule() {
    let data = simulated(
        ScheduleKind::Rasterized,
        one_partition(&DeviceLayout::fully_connected(2)),
    );
    let reps: Vec<u32> = data.records().map(|r| r.rep).collect();
    assert!(
        reps.windows(2).all(|w| w[0] <= w[1]),
        "rasterized order: rep r before rep r + 1"
    );
    assert_eq!(reps.len(), data.circuits.len() * 7);
}
