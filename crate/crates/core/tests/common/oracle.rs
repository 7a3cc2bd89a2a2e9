//! Brute-force cross-check of the four fault-impact metrics.
//!
//! Routing is exhaustive: every hub element carries 0 or 1 unit in the
//! direction its AC end dictates, busbars joined by live breakers must
//! balance, and the best assignment maximises total delivery and then the
//! served amounts zone by zone. Faults are enumerated busbar by busbar.

use std::collections::BTreeMap;

use gridshort::{
    enumerate_configurations, Configuration, EdgeKind, Evaluator, FaultScope, NetworkSpec, Power, PowerFlowScenario,
    PruneRules,
};
use num_rational::Ratio;

pub type Q = Ratio<i64>;

#[derive(Clone, Debug)]
pub struct Element {
    pub id: String,
    /// AC node at the far end: the hub AC node or an onshore zone.
    pub ac: String,
    pub cable: bool,
    pub length: i64,
}

pub struct Hub {
    pub elements: Vec<Element>,
    pub zones: Vec<String>,
}

pub fn hub_of(spec: &NetworkSpec) -> Hub {
    let by_id: BTreeMap<&str, _> = spec.edges.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut elements = Vec::new();
    for e in &spec.edges {
        let (a, b) = (&e.endpoints.0, &e.endpoints.1);
        let on_hub = a.as_str() == "HubDC" || b.as_str() == "HubDC";
        if !on_hub {
            continue;
        }
        let far = if a.as_str() == "HubDC" { b } else { a };
        let element = match e.kind {
            EdgeKind::Converter => Element {
                id: e.id.as_str().to_string(),
                ac: far.as_str().to_string(),
                cable: false,
                length: 0,
            },
            EdgeKind::Cable => {
                // The terminal's onshore converter names the zone.
                let onshore = by_id
                    .values()
                    .find(|o| o.kind == EdgeKind::Converter && (o.endpoints.0 == *far || o.endpoints.1 == *far))
                    .expect("terminal has an onshore converter");
                let zone = if onshore.endpoints.0 == *far { &onshore.endpoints.1 } else { &onshore.endpoints.0 };
                let len = e.length.expect("cable length");
                assert_eq!(len.denom(), 1);
                Element {
                    id: e.id.as_str().to_string(),
                    ac: zone.as_str().to_string(),
                    cable: true,
                    length: len.numer(),
                }
            }
            _ => panic!("unexpected hub edge {:?}", e.kind),
        };
        elements.push(element);
    }
    let mut zones: Vec<String> = spec
        .nodes
        .iter()
        .filter_map(|n| n.ac_zone.clone())
        .collect();
    zones.sort();
    zones.dedup();
    Hub { elements, zones }
}

fn injections(s: &PowerFlowScenario) -> BTreeMap<String, i64> {
    s.injections
        .iter()
        .map(|(k, v)| {
            assert_eq!(v.denom(), 1);
            (k.as_str().to_string(), v.numer())
        })
        .collect()
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    r
}

/// Net import per zone with the busbars in `removed` de-energised.
fn route(hub: &Hub, busbar_of: &[usize], breakers: &[(usize, usize)], busbars: usize, removed: &[bool], inj: &BTreeMap<String, i64>) -> BTreeMap<String, i64> {
    let mut parent: Vec<usize> = (0..busbars).collect();
    for &(a, b) in breakers {
        if !removed[a] && !removed[b] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    // Direction into the hub: +1 from a supplier, -1 towards a consumer.
    let live: Vec<(usize, i64)> = hub
        .elements
        .iter()
        .enumerate()
        .filter(|(i, _)| !removed[busbar_of[*i]])
        .filter_map(|(i, e)| {
            let v = inj.get(&e.ac).copied().unwrap_or(0);
            (v != 0).then_some((i, v.signum()))
        })
        .collect();
    let demand_nodes: Vec<&String> = inj.iter().filter(|(_, &v)| v < 0).map(|(k, _)| k).collect();

    let mut best: Option<(i64, Vec<i64>, BTreeMap<String, i64>)> = None;
    for bits in 0u32..(1 << live.len()) {
        let mut balance = vec![0i64; busbars];
        let mut through: BTreeMap<&str, i64> = BTreeMap::new();
        for (k, &(i, dir)) in live.iter().enumerate() {
            if bits >> k & 1 == 1 {
                balance[find(&mut parent, busbar_of[i])] += dir;
                *through.entry(hub.elements[i].ac.as_str()).or_default() += 1;
            }
        }
        if balance.iter().any(|&b| b != 0) {
            continue;
        }
        if through.iter().any(|(n, &f)| f > inj[*n].abs()) {
            continue;
        }
        let served: Vec<i64> = demand_nodes.iter().map(|n| through.get(n.as_str()).copied().unwrap_or(0)).collect();
        let total: i64 = served.iter().sum();
        let better = match &best {
            None => true,
            Some((t, s, _)) => (total, &served) > (*t, s),
        };
        if better {
            let imports = hub
                .zones
                .iter()
                .map(|z| {
                    let f = through.get(z.as_str()).copied().unwrap_or(0);
                    let v = inj.get(z).copied().unwrap_or(0);
                    (z.clone(), if v < 0 { f } else { -f })
                })
                .collect();
            best = Some((total, served, imports));
        }
    }
    best.expect("zero flow is always feasible").2
}

pub struct Metrics {
    pub worst_total: Q,
    pub worst_per_zone: BTreeMap<String, Q>,
    pub worst_all_zones: Q,
    pub avg_weighted: Q,
    pub backup_avg: Q,
}

pub fn oracle(hub: &Hub, config: &Configuration, scenario: &PowerFlowScenario) -> Metrics {
    let busbars = config.busbar_count();
    let busbar_of: Vec<usize> = config.assignment.iter().map(|&b| b as usize).collect();
    let breakers: Vec<(usize, usize)> = config.arrangement.breakers().iter().map(|&(a, b)| (a as usize, b as usize)).collect();
    let inj = injections(scenario);

    let none = vec![false; busbars];
    let pre = route(hub, &busbar_of, &breakers, busbars, &none, &inj);
    // Every supplier is fully used before the fault, so a lower export can
    // never be outweighed by a higher one and supplier choice is immaterial.
    let hub_supply: i64 = inj.values().filter(|&&v| v > 0).sum();
    let drawn: i64 = pre.values().filter(|&&v| v > 0).sum();
    assert_eq!(drawn, hub_supply, "pre-fault flow is complete");

    let loss = |removed: &[bool]| -> BTreeMap<String, i64> {
        let during = route(hub, &busbar_of, &breakers, busbars, removed, &inj);
        hub.zones.iter().map(|z| (z.clone(), (pre[z] - during[z]).max(0))).collect()
    };
    let single = |b: usize| {
        let mut r = vec![false; busbars];
        r[b] = true;
        r
    };
    let has_cable: Vec<bool> = (0..busbars)
        .map(|b| hub.elements.iter().enumerate().any(|(i, e)| e.cable && busbar_of[i] == b))
        .collect();

    let per_busbar: Vec<BTreeMap<String, i64>> = (0..busbars).map(|b| loss(&single(b))).collect();
    let totals: Vec<i64> = per_busbar.iter().map(|l| l.values().sum()).collect();
    let worst_total = (0..busbars).filter(|&b| has_cable[b]).map(|b| totals[b]).max().unwrap_or(0);
    let worst_all_zones = totals.iter().copied().max().unwrap_or(0);
    let worst_per_zone = hub
        .zones
        .iter()
        .map(|z| {
            let w = (0..busbars).filter(|&b| has_cable[b]).map(|b| per_busbar[b][z]).max().unwrap_or(0);
            (z.clone(), Q::from_integer(w))
        })
        .collect();

    let mut weighted = 0;
    let mut length = 0;
    for (i, e) in hub.elements.iter().enumerate() {
        if e.cable {
            weighted += e.length * totals[busbar_of[i]];
            length += e.length;
        }
    }
    let avg_weighted = Q::new(weighted, length);

    let backup_avg = if breakers.is_empty() {
        Q::from_integer(loss(&[true]).values().sum())
    } else {
        let sum: i64 = breakers
            .iter()
            .map(|&(a, b)| {
                if !has_cable[a] && !has_cable[b] {
                    return 0;
                }
                let mut r = vec![false; busbars];
                r[a] = true;
                r[b] = true;
                loss(&r).values().sum()
            })
            .sum();
        Q::new(sum, breakers.len() as i64)
    };

    Metrics {
        worst_total: Q::from_integer(worst_total),
        worst_per_zone,
        worst_all_zones: Q::from_integer(worst_all_zones),
        avg_weighted,
        backup_avg,
    }
}

pub fn q(p: Power) -> Q {
    Q::new(p.numer(), p.denom())
}

/// Compares every metric of `config` against the oracle, scenario by scenario.
pub fn compare(
    ev: &Evaluator,
    all_zones: &Evaluator,
    hub: &Hub,
    config: &Configuration,
    scenarios: &[PowerFlowScenario],
) -> Result<(), String> {
    let report = ev.report(config).map_err(|e| e.to_string())?;
    let wide = all_zones.report(config).map_err(|e| e.to_string())?;
    for (s, scenario) in scenarios.iter().enumerate() {
        let want = oracle(hub, config, scenario);
        let got = &report.per_scenario[s];
        let ctx = format!("{} {}", report.config, scenario.name);
        let check = |what: &str, a: Q, b: Q| {
            if a == b {
                Ok(())
            } else {
                Err(format!("{what} {ctx}: {a} != {b}"))
            }
        };
        check("worst_total", q(got.worst_total), want.worst_total)?;
        for (z, w) in &want.worst_per_zone {
            check(&format!("worst_per_zone {z}"), q(got.worst_per_zone[z]), *w)?;
        }
        check("avg_weighted", q(got.avg_weighted), want.avg_weighted)?;
        check("backup_avg", q(got.backup_avg), want.backup_avg)?;
        check("all zones", q(wide.per_scenario[s].worst_total), want.worst_all_zones)?;
    }
    Ok(())
}

/// Every unpruned configuration with up to `max_cb` breakers; returns the
/// number of (configuration, scenario) pairs checked.
pub fn sweep(spec: &NetworkSpec, scenarios: &[PowerFlowScenario], max_cb: usize) -> Result<usize, String> {
    let hub = hub_of(spec);
    let ev = Evaluator::new(spec, scenarios).map_err(|e| e.to_string())?;
    let all_zones = Evaluator::new(spec, scenarios).map_err(|e| e.to_string())?.with_scope(FaultScope::AllZones);
    let elements = ev.model().elements();
    for (i, e) in hub.elements.iter().enumerate() {
        if elements.ids[i].as_str() != e.id {
            return Err(format!("element order differs at {i}"));
        }
    }
    let mut checked = 0;
    for n_cb in 0..=max_cb {
        let configs = enumerate_configurations(spec, n_cb, PruneRules::NONE).map_err(|e| e.to_string())?;
        for config in configs {
            compare(&ev, &all_zones, &hub, &config, scenarios)?;
            checked += scenarios.len();
        }
    }
    Ok(checked)
}
