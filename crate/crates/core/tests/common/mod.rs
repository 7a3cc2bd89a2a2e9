//! Fixtures, strategies and checks shared by the integration test targets.
#![allow(dead_code)]

pub mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

use gridshort::network::busbar_id;
use gridshort::zoning::partition;
use gridshort::{
    breaker_arrangements, build_test_case, faulted_state, loss_of_infeed, minimax_worst, protection_zones, realize,
    run_pipeline, solve_flow, BreakerArrangement, Configuration, EdgeId, EdgeKind, Evaluator, FaultCase,
    FilterStep, HubElements, MetricKind, NetworkSpec, NodeId, PipelineOptions, Power, PowerFlowScenario, TestCase,
    ZonePartition,
};
use proptest::prelude::*;
use proptest::sample::Index;
use proptest::test_runner::{Config, TestRunner};

pub struct Case {
    pub spec: NetworkSpec,
    pub scenarios: Vec<PowerFlowScenario>,
    pub ev: Evaluator,
    pub elements: HubElements,
}

pub fn case(which: TestCase) -> &'static Case {
    static CASES: OnceLock<Vec<Case>> = OnceLock::new();
    let all = CASES.get_or_init(|| {
        TestCase::ALL
            .iter()
            .map(|&c| {
                let (spec, scenarios) = build_test_case(c);
                let ev = Evaluator::new(&spec, &scenarios).unwrap();
                let elements = HubElements::from_spec(&spec);
                Case {
                    spec,
                    scenarios,
                    ev,
                    elements,
                }
            })
            .collect()
    });
    &all[TestCase::ALL.iter().position(|&c| c == which).unwrap()]
}

fn arrangements(n_cb: usize) -> &'static [Arc<BreakerArrangement>] {
    static ARR: OnceLock<Vec<Vec<Arc<BreakerArrangement>>>> = OnceLock::new();
    &ARR.get_or_init(|| {
        (0..=4)
            .map(|n| breaker_arrangements(n).unwrap().into_iter().map(Arc::new).collect())
            .collect()
    })[n_cb]
}

pub fn arb_case() -> impl Strategy<Value = TestCase> {
    prop_oneof![Just(TestCase::Small), Just(TestCase::Medium), Just(TestCase::Large)]
}

pub fn arb_config(which: TestCase) -> impl Strategy<Value = Configuration> {
    let n_elements = case(which).elements.len();
    (0usize..=4, any::<Index>(), prop::collection::vec(any::<u8>(), n_elements)).prop_map(|(n, pick, raw)| {
        let arrangement = pick.get(arrangements(n)).clone();
        let busbars = arrangement.busbar_count();
        let assignment = raw.iter().map(|&r| (r as usize % busbars) as u8).collect();
        Configuration::new(arrangement, assignment).unwrap()
    })
}

pub fn arb_case_config() -> impl Strategy<Value = (TestCase, Configuration)> {
    arb_case().prop_flat_map(|c| (Just(c), arb_config(c)))
}

pub fn arb_step_order() -> impl Strategy<Value = (usize, Vec<usize>)> {
    (0usize..=3, Just((0..12).collect::<Vec<usize>>()).prop_shuffle())
}

fn refines(fine: &ZonePartition, coarse: &ZonePartition) -> bool {
    fine.zones.iter().all(|z| {
        let targets: BTreeSet<usize> = z.nodes.iter().map(|n| coarse.zone_of_node(n).unwrap()).collect();
        targets.len() == 1
    })
}

pub fn zone_partition_laws(which: TestCase, config: &Configuration) -> Result<(), TestCaseError> {
    let c = case(which);
    let zones = protection_zones(&c.spec, config).unwrap();
    let state = realize(&c.spec, config).unwrap();
    // Every internal DC node lies in exactly one zone.
    let mut seen = BTreeSet::new();
    for z in &zones.zones {
        for n in &z.nodes {
            prop_assert!(seen.insert(n.clone()));
        }
    }
    let internal: BTreeSet<_> = state.nodes.iter().filter(|n| n.is_internal_dc()).map(|n| n.id.clone()).collect();
    prop_assert_eq!(&seen, &internal);
    // Each busbar is its own zone and holds exactly its elements.
    prop_assert_eq!(zones.len(), config.busbar_count());
    prop_assert!(zones.len() <= config.breaker_count() + 1);
    for (i, id) in c.elements.ids.iter().enumerate() {
        for (j, other) in c.elements.ids.iter().enumerate() {
            let same = config.assignment[i] == config.assignment[j];
            prop_assert_eq!(zones.same_zone(id, other), same);
        }
    }
    for z in &zones.zones {
        for b in &z.breakers {
            let e = state.edge(b).unwrap();
            prop_assert_eq!(e.kind, EdgeKind::Breaker);
            prop_assert!(z.nodes.contains(&e.endpoints.0) || z.nodes.contains(&e.endpoints.1));
        }
    }
    Ok(())
}

pub fn breakers_refine_zones(which: TestCase, config: &Configuration, pick: Index) -> Result<(), TestCaseError> {
    if config.breaker_count() == 0 {
        return Ok(());
    }
    let c = case(which);
    let state = realize(&c.spec, config).unwrap();
    let fine = partition(&state, None);
    let k = pick.index(config.breaker_count());
    let breaker = EdgeId::new(format!("CB{}", k + 1));
    let coarse = partition(&state, Some(&breaker));
    prop_assert!(refines(&fine, &coarse));
    prop_assert_eq!(coarse.len() + 1, fine.len());
    // With every breaker conducting, the hub is one zone.
    let mut merged = state.clone();
    for e in &mut merged.edges {
        if e.kind == EdgeKind::Breaker {
            e.fault_blocking = false;
        }
    }
    let one = partition(&merged, None);
    prop_assert_eq!(one.len(), 1);
    prop_assert!(refines(&coarse, &one));
    Ok(())
}

pub fn backup_dominates_primary(which: TestCase, config: &Configuration, s: Index, b: Index) -> Result<(), TestCaseError> {
    let c = case(which);
    let scenario = s.get(&c.scenarios);
    let pre = solve_flow(&realize(&c.spec, config).unwrap(), scenario).unwrap();
    let busbar = b.index(config.busbar_count());
    let primary_case = FaultCase::busbar(&busbar_id(busbar));
    let primary_state = faulted_state(&c.spec, config, &primary_case).unwrap();
    let primary = loss_of_infeed(&pre, &solve_flow(&primary_state, scenario).unwrap());
    for (k, &(x, y)) in config.arrangement.breakers().iter().enumerate() {
        if x as usize != busbar && y as usize != busbar {
            continue;
        }
        let backup_case = primary_case.clone().with_failed_breaker(&format!("CB{}", k + 1));
        let state = faulted_state(&c.spec, config, &backup_case).unwrap();
        let backup = loss_of_infeed(&pre, &solve_flow(&state, scenario).unwrap());
        prop_assert!(backup.total >= primary.total, "{} < {}", backup.total, primary.total);
    }
    Ok(())
}

pub fn fast_path_matches_network_path(which: TestCase, config: &Configuration) -> Result<(), TestCaseError> {
    let c = case(which);
    let report = c.ev.report(config).unwrap();
    let realized = realize(&c.spec, config).unwrap();
    let cables: BTreeSet<u8> = c.elements.cables().map(|i| config.assignment[i]).collect();
    for (s, scenario) in c.scenarios.iter().enumerate() {
        let pre = solve_flow(&realized, scenario).unwrap();
        let mut worst = Power::ZERO;
        let mut per_zone: BTreeMap<String, Power> = BTreeMap::new();
        for &b in &cables {
            let state = faulted_state(&c.spec, config, &FaultCase::busbar(&busbar_id(b as usize))).unwrap();
            let loi = loss_of_infeed(&pre, &solve_flow(&state, scenario).unwrap());
            worst = worst.max(loi.total);
            for (z, v) in loi.per_zone {
                let e = per_zone.entry(z).or_insert(Power::ZERO);
                *e = (*e).max(v);
            }
        }
        prop_assert_eq!(report.per_scenario[s].worst_total, worst);
        prop_assert_eq!(&report.per_scenario[s].worst_per_zone, &per_zone);
    }
    Ok(())
}

pub fn flow_conservation(which: TestCase, config: &Configuration, s: Index, mask: u8) -> Result<(), TestCaseError> {
    let c = case(which);
    let scenario = s.get(&c.scenarios);
    let mut state = realize(&c.spec, config).unwrap();
    let removed: Vec<String> = (0..config.busbar_count()).filter(|b| mask >> b & 1 == 1).map(busbar_id).collect();
    let gone = |id: &NodeId| removed.iter().any(|r| id.as_str() == r);
    state.nodes.retain(|n| !gone(&n.id));
    state.edges.retain(|e| !gone(&e.endpoints.0) && !gone(&e.endpoints.1));
    let flow = solve_flow(&state, scenario).unwrap();

    for e in &state.edges {
        let load = flow.edge_loading[&e.id];
        prop_assert!(!load.is_negative());
        if let Some(cap) = e.capacity {
            prop_assert!(load <= cap, "{} carries {} over {}", e.id.as_str(), load, cap);
        }
    }
    // AC nodes are terminals: incident loading equals their net exchange.
    let incident = |node: &str| -> Power {
        state
            .edges
            .iter()
            .filter(|e| e.endpoints.0.as_str() == node || e.endpoints.1.as_str() == node)
            .map(|e| flow.edge_loading[&e.id])
            .sum()
    };
    let mut hub_supply = Power::ZERO;
    for (zone, &net) in &flow.delivered {
        let inj = scenario.injections.get(&NodeId::new(zone.as_str())).copied().unwrap_or(Power::ZERO);
        prop_assert_eq!(incident(zone), net.abs());
        prop_assert_eq!(net.abs() + flow.unserved[zone], inj.abs());
        if inj.is_zero() {
            prop_assert!(net.is_zero());
        } else if !net.is_zero() {
            prop_assert_eq!(net.is_positive(), inj.is_negative());
        }
        hub_supply += net;
    }
    prop_assert_eq!(incident("HubAC"), hub_supply);
    let rated = scenario.injections[&NodeId::new("HubAC")];
    prop_assert!(!hub_supply.is_negative() && hub_supply <= rated);
    // Series nodes pass their flow straight through.
    for n in state.nodes.iter().filter(|n| n.id.as_str().starts_with('T')) {
        let loads: Vec<Power> = state.edges.iter().filter(|e| e.touches(&n.id)).map(|e| flow.edge_loading[&e.id]).collect();
        if loads.len() == 2 {
            prop_assert_eq!(loads[0], loads[1]);
        }
    }
    Ok(())
}

fn class_permutation(elements: &HubElements, seeds: &[Index]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..elements.len()).collect();
    let mut k = 0;
    for class in &elements.classes {
        let mut members = class.clone();
        for i in (1..members.len()).rev() {
            let j = seeds[k % seeds.len()].index(i + 1);
            k += 1;
            members.swap(i, j);
        }
        for (from, to) in class.iter().zip(&members) {
            perm[*from] = *to;
        }
    }
    perm
}

pub fn symmetry_invariance(which: TestCase, config: &Configuration, aut: Index, seeds: &[Index]) -> Result<(), TestCaseError> {
    let c = case(which);
    let automorphism = aut.get(config.arrangement.automorphisms());
    let perm = class_permutation(&c.elements, seeds);
    let image = config.transformed(automorphism, &perm);
    let a = c.ev.report(config).unwrap();
    let b = c.ev.report(&image).unwrap();
    for (x, y) in a.per_scenario.iter().zip(&b.per_scenario) {
        prop_assert_eq!(x.worst_total, y.worst_total);
        prop_assert_eq!(&x.worst_per_zone, &y.worst_per_zone);
        prop_assert_eq!(x.avg_weighted, y.avg_weighted);
        prop_assert_eq!(x.backup_avg, y.backup_avg);
    }
    Ok(())
}

pub fn step_counts_monotone(n_cb: usize, order: &[usize]) -> Result<(), TestCaseError> {
    let c = case(TestCase::Small);
    let mut steps = Vec::new();
    for s in &c.scenarios {
        steps.push(FilterStep::new(MetricKind::WorstTotal, &s.name));
        for z in c.ev.zones() {
            steps.push(FilterStep::new(MetricKind::WorstPerZone { zone: z.clone() }, &s.name));
        }
    }
    let steps: Vec<FilterStep> = order.iter().map(|&i| steps[i].clone()).collect();
    let options = PipelineOptions {
        basic: Some(steps),
        ..PipelineOptions::default()
    };
    let r = run_pipeline(&c.ev, n_cb, &options).unwrap();
    for stage in std::iter::once(&r.basic).chain(&r.branches) {
        prop_assert!(stage.step_counts.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(!stage.survivors.is_empty());
        prop_assert_eq!(*stage.step_counts.last().unwrap(), stage.survivors.len() as u64);
    }
    prop_assert!(r.basic.step_counts[0] <= r.enumerated);
    prop_assert_eq!(r.branches[0].step_counts[0] as usize, r.final_shortlist().survivors.len());
    // Every survivor attains the recorded step values.
    for s in &r.basic.survivors {
        let report = c.ev.report(&s.config).unwrap();
        for (step, value) in r.basic.steps.iter().zip(&r.basic.values) {
            let si = c.ev.scenario_index(&step.scenario).unwrap();
            let got = match &step.kind {
                MetricKind::WorstTotal => report.per_scenario[si].worst_total,
                MetricKind::WorstPerZone { zone } => report.per_scenario[si].worst_per_zone[zone],
                _ => unreachable!(),
            };
            prop_assert_eq!(got, *value);
        }
    }
    Ok(())
}

pub fn identical_across_workers() -> Result<(), String> {
    for (which, n_cb) in [(TestCase::Small, 3), (TestCase::Medium, 3)] {
        let c = case(which);
        let runs: Vec<_> = [1, 4, 8]
            .iter()
            .map(|&workers| {
                let options = PipelineOptions {
                    workers,
                    ..PipelineOptions::default()
                };
                (
                    run_pipeline(&c.ev, n_cb, &options).unwrap(),
                    minimax_worst(&c.ev, n_cb, &options).unwrap(),
                )
            })
            .collect();
        if !runs.windows(2).all(|w| w[0] == w[1]) {
            return Err(format!("{which} with {n_cb} breakers differs across worker counts"));
        }
    }
    Ok(())
}

/// Runs every law with a fixed seed; the error names the first law broken.
pub fn run_all_laws() -> Result<Vec<(&'static str, u32)>, String> {
    fn run<S: Strategy>(
        name: &'static str,
        cases: u32,
        strategy: S,
        law: impl Fn(S::Value) -> Result<(), TestCaseError>,
        done: &mut Vec<(&'static str, u32)>,
    ) -> Result<(), String> {
        let mut runner = TestRunner::new_with_rng(
            Config {
                cases,
                failure_persistence: None,
                ..Config::default()
            },
            proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
        );
        runner.run(&strategy, law).map_err(|e| format!("{name}: {e}"))?;
        done.push((name, cases));
        Ok(())
    }
    let mut done = Vec::new();
    run("zone partition", 256, arb_case_config(), |(w, c)| zone_partition_laws(w, &c), &mut done)?;
    run(
        "refinement",
        256,
        (arb_case_config(), any::<Index>()),
        |((w, c), i)| breakers_refine_zones(w, &c, i),
        &mut done,
    )?;
    run(
        "flow conservation",
        1000,
        (arb_case_config(), any::<Index>(), any::<u8>()),
        |((w, c), s, m)| flow_conservation(w, &c, s, m),
        &mut done,
    )?;
    run(
        "backup >= primary",
        256,
        (arb_case_config(), any::<Index>(), any::<Index>()),
        |((w, c), s, b)| backup_dominates_primary(w, &c, s, b),
        &mut done,
    )?;
    run("step monotonicity", 24, arb_step_order(), |(n, o)| step_counts_monotone(n, &o), &mut done)?;
    run(
        "symmetry invariance",
        200,
        (arb_case_config(), any::<Index>(), prop::collection::vec(any::<Index>(), 16)),
        |((w, c), a, s)| symmetry_invariance(w, &c, a, &s),
        &mut done,
    )?;
    identical_across_workers()?;
    done.push(("worker determinism", 3));
    Ok(done)
}
