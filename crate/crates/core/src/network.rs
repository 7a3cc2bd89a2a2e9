//! Index-based view of a hub network, for fast evaluation of many
//! configurations, and realisation of a configuration as a concrete network.

use std::collections::BTreeMap;

use crate::enumerate::{Configuration, HubElements};
use crate::error::{Error, Result};
use crate::flow::{FlowNetwork, Terminals, INFINITE};
use crate::model::{Edge, EdgeKind, Locality, NetworkSpec, Node, NodeId, NodeKind, PowerFlowScenario};
use crate::power::{common_scale, Power};

/// Upper bound on busbars used to size flow priority weights.
const BUSBAR_BOUND: usize = 16;

pub fn busbar_id(index: usize) -> String {
    format!("B{index}")
}

pub fn breaker_id(index: usize) -> String {
    format!("CB{}", index + 1)
}

/// The network with the hub's DC side replaced by `config`: busbars `B0..`,
/// breakers `CB1..` in arrangement order, each element moved to its busbar.
pub fn realize(spec: &NetworkSpec, config: &Configuration) -> Result<NetworkSpec> {
    let elements = HubElements::from_spec(spec);
    check_assignment(&elements, config)?;
    let busbars: Vec<Node> = (0..config.busbar_count())
        .map(|i| Node::new(busbar_id(i), NodeKind::Dc, Locality::Internal))
        .collect();
    if let Some(clash) = spec
        .nodes
        .iter()
        .find(|n| !n.is_internal_dc() && busbars.iter().any(|b| b.id == n.id))
    {
        return Err(Error::ConfigMismatch(format!("node {} clashes with a busbar name", clash.id)));
    }

    let internal: Vec<&NodeId> = spec.nodes.iter().filter(|n| n.is_internal_dc()).map(|n| &n.id).collect();
    let mut nodes: Vec<Node> = spec.nodes.iter().filter(|n| !n.is_internal_dc()).cloned().collect();
    nodes.extend(busbars);

    let mut edges = Vec::with_capacity(spec.edges.len());
    for e in &spec.edges {
        if let Some(i) = elements.index_of(e.id.as_str()) {
            let hub = spec.hub_endpoint(e).expect("assignable element");
            let mut moved = e.clone();
            let bus = NodeId::new(busbar_id(config.assignment[i] as usize));
            if &moved.endpoints.0 == hub {
                moved.endpoints.0 = bus;
            } else {
                moved.endpoints.1 = bus;
            }
            edges.push(moved);
        } else if !internal.iter().any(|n| e.touches(n)) {
            edges.push(e.clone());
        }
    }
    for (k, &(a, b)) in config.arrangement.breakers().iter().enumerate() {
        edges.push(Edge::new(
            breaker_id(k),
            EdgeKind::Breaker,
            &busbar_id(a as usize),
            &busbar_id(b as usize),
        ));
    }
    Ok(NetworkSpec {
        name: spec.name.clone(),
        nodes,
        edges,
    })
}

pub(crate) fn check_assignment(elements: &HubElements, config: &Configuration) -> Result<()> {
    if config.assignment.len() != elements.len() {
        return Err(Error::ConfigMismatch(format!(
            "configuration assigns {} elements, the network has {}",
            config.assignment.len(),
            elements.len()
        )));
    }
    Ok(())
}

/// Scenario injections compiled onto a [`HubModel`] indexing.
#[derive(Clone, Debug)]
pub(crate) struct ScenarioModel {
    pub name: String,
    pub terminals: Terminals,
}

/// Compiled hub network. Node indices: fixed (non-hub) nodes first, then
/// the busbars of the configuration being evaluated.
#[derive(Clone, Debug)]
pub struct HubModel {
    pub(crate) elements: HubElements,
    pub(crate) zones: Vec<String>,
    pub(crate) scale: i64,
    fixed: usize,
    node_zone: Vec<Option<usize>>,
    fixed_edges: Vec<(usize, usize, i64)>,
    element_far: Vec<usize>,
    element_cap: Vec<i64>,
    pub(crate) scenarios: Vec<ScenarioModel>,
}

impl HubModel {
    pub fn new(spec: &NetworkSpec, scenarios: &[PowerFlowScenario]) -> Result<Self> {
        let elements = HubElements::from_spec(spec);
        let fixed_nodes: Vec<&Node> = spec.nodes.iter().filter(|n| !n.is_internal_dc()).collect();
        let index: BTreeMap<&NodeId, usize> = fixed_nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect();
        let zones = spec.ac_zones();
        let node_zone = fixed_nodes
            .iter()
            .map(|n| n.ac_zone.as_ref().and_then(|z| zones.iter().position(|x| x == z)))
            .collect();

        let scale = common_scale(
            spec.edges
                .iter()
                .filter_map(|e| e.capacity.as_ref())
                .chain(scenarios.iter().flat_map(|s| s.injections.values())),
        )
        .ok_or_else(|| Error::Overflow("common denominator of capacities".into()))?;
        let units = |p: Option<&Power>| match p {
            Some(p) => p.to_scaled(scale).ok_or_else(|| Error::Overflow(format!("power {p}"))),
            None => Ok(INFINITE),
        };

        let mut fixed_edges = Vec::new();
        for e in &spec.edges {
            if let (Some(&a), Some(&b)) = (index.get(&e.endpoints.0), index.get(&e.endpoints.1)) {
                fixed_edges.push((a, b, units(e.capacity.as_ref())?));
            }
        }
        let mut element_far = Vec::new();
        let mut element_cap = Vec::new();
        for id in &elements.ids {
            let e = spec.edge(id).expect("element exists");
            let hub = spec.hub_endpoint(e).expect("assignable element");
            let far = index
                .get(e.other(hub))
                .copied()
                .ok_or_else(|| Error::DanglingElement(id.to_string()))?;
            element_far.push(far);
            element_cap.push(units(e.capacity.as_ref())?);
        }

        let mut model = HubModel {
            elements,
            zones,
            scale,
            fixed: fixed_nodes.len(),
            node_zone,
            fixed_edges,
            element_far,
            element_cap,
            scenarios: Vec::new(),
        };
        let ids: Vec<&NodeId> = fixed_nodes.iter().map(|n| &n.id).collect();
        let is_ac: Vec<bool> = fixed_nodes.iter().map(|n| n.kind == NodeKind::Ac).collect();
        for s in scenarios {
            let mut injection = vec![0i64; fixed_nodes.len()];
            for (node, p) in &s.injections {
                let v = index.get(node).copied().filter(|&v| is_ac[v]).ok_or_else(|| Error::BadInjection {
                    scenario: s.name.clone(),
                    node: node.to_string(),
                })?;
                injection[v] = units(Some(p))?;
            }
            let terminals = Terminals::new(&ids, is_ac.clone(), injection, fixed_nodes.len() + BUSBAR_BOUND + 2)?;
            model.scenarios.push(ScenarioModel {
                name: s.name.clone(),
                terminals,
            });
        }
        Ok(model)
    }

    pub fn elements(&self) -> &HubElements {
        &self.elements
    }

    pub fn zones(&self) -> &[String] {
        &self.zones
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    pub fn scenario_names(&self) -> impl Iterator<Item = &str> {
        self.scenarios.iter().map(|s| s.name.as_str())
    }

    pub(crate) fn to_power(&self, units: i64) -> Power {
        Power::from_scaled(units, self.scale)
    }

    /// Builds the flow network of `config` with the busbars in
    /// `removed_busbars` (bit mask) and element `removed_element` taken out.
    /// Returns the terminal arc of every fixed node.
    pub(crate) fn build(
        &self,
        net: &mut FlowNetwork,
        config: &Configuration,
        scenario: usize,
        removed_busbars: u32,
        removed_element: Option<usize>,
    ) -> (Vec<Option<usize>>, usize, usize) {
        let terminals = &self.scenarios[scenario].terminals;
        let nb = config.busbar_count();
        let (s, t) = (self.fixed + nb, self.fixed + nb + 1);
        net.reset(self.fixed + nb + 2);
        let arcs = terminals.attach(net, s, t);
        for &(a, b, cap) in &self.fixed_edges {
            terminals.add_edge(net, a, b, cap);
        }
        let live = |b: u8| removed_busbars >> b & 1 == 0;
        for (e, &bus) in config.assignment.iter().enumerate() {
            if live(bus) && removed_element != Some(e) {
                terminals.add_edge(net, self.element_far[e], self.fixed + bus as usize, self.element_cap[e]);
            }
        }
        for &(a, b) in config.arrangement.breakers() {
            if live(a) && live(b) {
                terminals.add_edge(net, self.fixed + a as usize, self.fixed + b as usize, INFINITE);
            }
        }
        (arcs, s, t)
    }

    /// Net import per AC zone, in scaled units, for one network state.
    pub(crate) fn zone_imports(
        &self,
        net: &mut FlowNetwork,
        config: &Configuration,
        scenario: usize,
        removed_busbars: u32,
        removed_element: Option<usize>,
        out: &mut Vec<i64>,
    ) {
        let (arcs, s, t) = self.build(net, config, scenario, removed_busbars, removed_element);
        net.max_flow_min_cost(s, t);
        let injection = &self.scenarios[scenario].terminals.injection;
        out.clear();
        out.resize(self.zones.len(), 0);
        for (v, arc) in arcs.iter().enumerate() {
            if let (Some(arc), Some(z)) = (arc, self.node_zone[v]) {
                let f = net.flow(*arc);
                out[z] += if injection[v] < 0 { f } else { -f };
            }
        }
    }

    /// Compares the flow value of one state against an exhaustive minimum
    /// cut. `Ok(None)` when the state is too large to cut exhaustively.
    pub(crate) fn cross_check(
        &self,
        net: &mut FlowNetwork,
        config: &Configuration,
        scenario: usize,
        removed_busbars: u32,
    ) -> Result<Option<i64>> {
        let (_, s, t) = self.build(net, config, scenario, removed_busbars, None);
        let Some(cut) = net.brute_force_min_cut(s, t, 20) else {
            return Ok(None);
        };
        let flow = net.max_flow_min_cost(s, t);
        if flow != cut {
            return Err(Error::OracleMismatch(format!(
                "scenario {}, configuration {:?}, removed busbars {removed_busbars:#b}: flow {} but minimum cut {}",
                self.scenarios[scenario].name,
                config,
                self.to_power(flow),
                self.to_power(cut)
            )));
        }
        debug_assert!(net.node_count() >= 2);
        Ok(Some(flow))
    }
}
