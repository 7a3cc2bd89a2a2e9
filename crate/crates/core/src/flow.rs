//! Capacity-aware matching of infeed to demand.
//!
//! Power is routed by successive shortest augmenting paths over the residual
//! network, so the total delivered is the maximum the remaining capacity
//! allows. Among maximum deliveries the solver serves demand nodes in order
//! of their id (lexicographically maximal served vector), then prefers fewer
//! hops, then infeed nodes in id order. AC nodes are terminals only: power
//! never transits an AC node.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{EdgeId, NetworkSpec, NodeId, NodeKind, PowerFlowScenario};
use crate::power::{common_scale, Power};

pub(crate) const INFINITE: i64 = i64::MAX / 4;

#[derive(Clone, Copy, Debug)]
struct Arc {
    to: u32,
    cap: i64,
    base: i64,
    cost: i128,
}

/// Residual network with paired arcs (`i` and `i ^ 1`).
#[derive(Clone, Debug, Default)]
pub(crate) struct FlowNetwork {
    adj: Vec<Vec<u32>>,
    arcs: Vec<Arc>,
    dist: Vec<i128>,
    prev: Vec<u32>,
    queued: Vec<bool>,
    queue: VecDeque<u32>,
}

impl FlowNetwork {
    pub(crate) fn reset(&mut self, nodes: usize) {
        self.adj.iter_mut().for_each(Vec::clear);
        self.adj.resize_with(nodes, Vec::new);
        self.adj.truncate(nodes);
        self.arcs.clear();
    }

    pub(crate) fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Adds `u -> v` and its residual twin; returns the forward arc index.
    pub(crate) fn add_arc(&mut self, u: usize, v: usize, cap: i64, cost: i128) -> usize {
        let i = self.arcs.len();
        self.arcs.push(Arc {
            to: v as u32,
            cap,
            base: cap,
            cost,
        });
        self.arcs.push(Arc {
            to: u as u32,
            cap: 0,
            base: 0,
            cost: -cost,
        });
        self.adj[u].push(i as u32);
        self.adj[v].push(i as u32 + 1);
        i
    }

    pub(crate) fn flow(&self, arc: usize) -> i64 {
        self.arcs[arc].base - self.arcs[arc].cap
    }

    fn tail(&self, arc: usize) -> usize {
        self.arcs[arc ^ 1].to as usize
    }

    /// Successive shortest paths (Bellman-Ford queue). Returns the flow value.
    pub(crate) fn max_flow_min_cost(&mut self, s: usize, t: usize) -> i64 {
        let n = self.adj.len();
        let mut total = 0i64;
        loop {
            self.dist.clear();
            self.dist.resize(n, i128::MAX);
            self.prev.clear();
            self.prev.resize(n, u32::MAX);
            self.queued.clear();
            self.queued.resize(n, false);
            self.dist[s] = 0;
            self.queue.push_back(s as u32);
            self.queued[s] = true;
            while let Some(u) = self.queue.pop_front() {
                let u = u as usize;
                self.queued[u] = false;
                let du = self.dist[u];
                for &a in &self.adj[u] {
                    let arc = self.arcs[a as usize];
                    if arc.cap > 0 && du + arc.cost < self.dist[arc.to as usize] {
                        let v = arc.to as usize;
                        self.dist[v] = du + arc.cost;
                        self.prev[v] = a;
                        if !self.queued[v] {
                            self.queued[v] = true;
                            self.queue.push_back(v as u32);
                        }
                    }
                }
            }
            if self.dist[t] == i128::MAX {
                return total;
            }
            let mut push = INFINITE;
            let mut v = t;
            while v != s {
                let a = self.prev[v] as usize;
                push = push.min(self.arcs[a].cap);
                v = self.tail(a);
            }
            let mut v = t;
            while v != s {
                let a = self.prev[v] as usize;
                self.arcs[a].cap -= push;
                self.arcs[a ^ 1].cap += push;
                v = self.tail(a);
            }
            total += push;
        }
    }

    /// Minimum `s`-`t` cut by exhaustive search over node subsets, on the
    /// original capacities. `None` above `max_nodes` free nodes.
    pub(crate) fn brute_force_min_cut(&self, s: usize, t: usize, max_nodes: usize) -> Option<i64> {
        let free: Vec<usize> = (0..self.adj.len()).filter(|&v| v != s && v != t).collect();
        if free.len() > max_nodes {
            return None;
        }
        let mut side = vec![false; self.adj.len()];
        let mut best = i64::MAX;
        for mask in 0u64..(1u64 << free.len()) {
            side[s] = true;
            for (bit, &v) in free.iter().enumerate() {
                side[v] = mask >> bit & 1 == 1;
            }
            let mut cut = 0i64;
            for (i, arc) in self.arcs.iter().enumerate().step_by(2) {
                if side[self.tail(i)] && !side[arc.to as usize] {
                    cut = cut.saturating_add(arc.base);
                }
            }
            best = best.min(cut);
        }
        Some(best)
    }
}

/// Per-node terminal data for one scenario on one node indexing.
#[derive(Clone, Debug)]
pub(crate) struct Terminals {
    /// Injection in scaled units, zero for non-terminals.
    pub injection: Vec<i64>,
    pub is_ac: Vec<bool>,
    pub source_cost: Vec<i128>,
    pub sink_cost: Vec<i128>,
    pub hop: i128,
}

impl Terminals {
    /// `hop_bound` must be at least the node count of any network built on
    /// this indexing.
    pub(crate) fn new(ids: &[&NodeId], is_ac: Vec<bool>, injection: Vec<i64>, hop_bound: usize) -> Result<Self> {
        let overflow = || Error::Overflow("flow priority weights".into());
        let mut infeeds: Vec<usize> = (0..ids.len()).filter(|&v| injection[v] > 0).collect();
        let mut demands: Vec<usize> = (0..ids.len()).filter(|&v| injection[v] < 0).collect();
        infeeds.sort_by_key(|&v| ids[v]);
        demands.sort_by_key(|&v| ids[v]);

        let units: i128 = injection.iter().filter(|&&x| x > 0).map(|&x| x as i128).sum::<i128>() + 1;
        let hop = infeeds.len().max(1) as i128;
        let per_unit = hop * (hop_bound as i128 + 2) + hop;
        let margin = units.checked_mul(per_unit).and_then(|x| x.checked_mul(2)).ok_or_else(overflow)? + 1;

        let mut source_cost = vec![0i128; ids.len()];
        for (rank, &v) in infeeds.iter().enumerate() {
            source_cost[v] = rank as i128;
        }
        let mut sink_cost = vec![0i128; ids.len()];
        let mut weight = margin;
        for &v in demands.iter().rev() {
            sink_cost[v] = -weight;
            weight = weight.checked_mul(units + 1).ok_or_else(overflow)?;
        }
        Ok(Terminals {
            injection,
            is_ac,
            source_cost,
            sink_cost,
            hop,
        })
    }

    /// Adds source and sink arcs; returns the terminal arc of each node.
    pub(crate) fn attach(&self, net: &mut FlowNetwork, s: usize, t: usize) -> Vec<Option<usize>> {
        (0..self.injection.len())
            .map(|v| match self.injection[v] {
                x if x > 0 => Some(net.add_arc(s, v, x, self.source_cost[v])),
                x if x < 0 => Some(net.add_arc(v, t, -x, self.sink_cost[v])),
                _ => None,
            })
            .collect()
    }

    /// Adds the arcs of an undirected edge `a - b`, honouring the
    /// terminal-only rule at AC endpoints. Returns `(a->b, b->a)` arcs.
    pub(crate) fn add_edge(&self, net: &mut FlowNetwork, a: usize, b: usize, cap: i64) -> (Option<usize>, Option<usize>) {
        let ac = |v: usize| v < self.is_ac.len() && self.is_ac[v];
        let inj = |v: usize| if v < self.injection.len() { self.injection[v] } else { 0 };
        let forward = match (ac(a), ac(b)) {
            (false, false) => true,
            (true, false) => inj(a) > 0,
            (false, true) => inj(b) < 0,
            (true, true) => false,
        };
        let backward = match (ac(a), ac(b)) {
            (false, false) => true,
            (true, false) => inj(a) < 0,
            (false, true) => inj(b) > 0,
            (true, true) => false,
        };
        let f = forward.then(|| net.add_arc(a, b, cap, self.hop));
        let r = backward.then(|| net.add_arc(b, a, cap, self.hop));
        (f, r)
    }
}

/// Outcome of matching one scenario on one network state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlowResult {
    /// Net import per AC zone (export negative).
    pub delivered: BTreeMap<String, Power>,
    /// Scheduled injection magnitude that could not be matched, per AC zone.
    pub unserved: BTreeMap<String, Power>,
    /// Absolute loading of every edge present in the state.
    pub edge_loading: BTreeMap<EdgeId, Power>,
}

impl FlowResult {
    pub fn total_import(&self) -> Power {
        self.delivered.values().filter(|p| p.is_positive()).copied().sum()
    }
}

/// Matches `scenario` on `state`. The scenario must be balanced; injections
/// at nodes absent from `state` are rejected.
pub fn solve_flow(state: &NetworkSpec, scenario: &PowerFlowScenario) -> Result<FlowResult> {
    let sum = scenario.total();
    if !sum.is_zero() {
        return Err(Error::Unbalanced {
            scenario: scenario.name.clone(),
            sum,
        });
    }
    let index: BTreeMap<&NodeId, usize> = state.nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect();
    for node in scenario.injections.keys() {
        let ok = index.get(node).is_some_and(|&i| state.nodes[i].kind == NodeKind::Ac);
        if !ok {
            return Err(Error::BadInjection {
                scenario: scenario.name.clone(),
                node: node.to_string(),
            });
        }
    }
    let edges: Vec<(usize, usize, &crate::model::Edge)> = state
        .edges
        .iter()
        .filter_map(|e| Some((*index.get(&e.endpoints.0)?, *index.get(&e.endpoints.1)?, e)))
        .collect();
    let scale = common_scale(
        edges
            .iter()
            .filter_map(|(_, _, e)| e.capacity.as_ref())
            .chain(scenario.injections.values()),
    )
    .ok_or_else(|| Error::Overflow("common denominator of capacities".into()))?;
    let units = |p: &Power| p.to_scaled(scale).ok_or_else(|| Error::Overflow(format!("power {p} at scale {scale}")));

    let n = state.nodes.len();
    let mut injection = vec![0i64; n];
    for (node, p) in &scenario.injections {
        injection[index[node]] = units(p)?;
    }
    let ids: Vec<&NodeId> = state.nodes.iter().map(|n| &n.id).collect();
    let is_ac = state.nodes.iter().map(|n| n.kind == NodeKind::Ac).collect();
    let terminals = Terminals::new(&ids, is_ac, injection, n + 2)?;

    let mut net = FlowNetwork::default();
    net.reset(n + 2);
    let (s, t) = (n, n + 1);
    let terminal_arcs = terminals.attach(&mut net, s, t);
    let mut edge_arcs = Vec::with_capacity(edges.len());
    for &(a, b, e) in &edges {
        let cap = match &e.capacity {
            Some(p) => units(p)?,
            None => INFINITE,
        };
        edge_arcs.push(terminals.add_edge(&mut net, a, b, cap));
    }
    net.max_flow_min_cost(s, t);

    let to_power = |u: i64| Power::from_scaled(u, scale);
    let mut delivered: BTreeMap<String, Power> = BTreeMap::new();
    let mut unserved: BTreeMap<String, Power> = BTreeMap::new();
    for zone in state.ac_zones() {
        delivered.insert(zone.clone(), Power::ZERO);
        unserved.insert(zone, Power::ZERO);
    }
    for (v, node) in state.nodes.iter().enumerate() {
        let (Some(zone), Some(arc)) = (&node.ac_zone, terminal_arcs[v]) else {
            continue;
        };
        let matched = net.flow(arc);
        let scheduled = terminals.injection[v];
        let signed = if scheduled < 0 { matched } else { -matched };
        *delivered.get_mut(zone).expect("zone listed") += to_power(signed);
        *unserved.get_mut(zone).expect("zone listed") += to_power(scheduled.abs() - matched);
    }
    let edge_loading = edges
        .iter()
        .zip(&edge_arcs)
        .map(|((_, _, e), &(f, r))| {
            let net_flow = f.map_or(0, |a| net.flow(a)) - r.map_or(0, |a| net.flow(a));
            (e.id.clone(), to_power(net_flow.abs()))
        })
        .collect();
    Ok(FlowResult {
        delivered,
        unserved,
        edge_loading,
    })
}

/// How a change in a zone's net import counts as lost infeed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossConvention {
    /// `max(0, import_before - import_during)`: only lost import counts.
    #[default]
    NetImport,
    /// `|import_before - import_during|`: lost export counts as well.
    Absolute,
}

impl LossConvention {
    pub(crate) fn apply(self, before: Power, during: Power) -> Power {
        match self {
            LossConvention::NetImport => (before - during).max(Power::ZERO),
            LossConvention::Absolute => (before - during).abs(),
        }
    }

    pub(crate) fn apply_units(self, before: i64, during: i64) -> i64 {
        match self {
            LossConvention::NetImport => (before - during).max(0),
            LossConvention::Absolute => (before - during).abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LossOfInfeed {
    pub per_zone: BTreeMap<String, Power>,
    pub total: Power,
}

pub fn loss_of_infeed(pre: &FlowResult, during: &FlowResult) -> LossOfInfeed {
    loss_of_infeed_with(pre, during, LossConvention::NetImport)
}

pub fn loss_of_infeed_with(pre: &FlowResult, during: &FlowResult, convention: LossConvention) -> LossOfInfeed {
    let per_zone: BTreeMap<String, Power> = pre
        .delivered
        .iter()
        .map(|(zone, &before)| {
            let after = during.delivered.get(zone).copied().unwrap_or(Power::ZERO);
            (zone.clone(), convention.apply(before, after))
        })
        .collect();
    let total = per_zone.values().sum();
    LossOfInfeed { per_zone, total }
}
