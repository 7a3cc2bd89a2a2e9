//! Typed graph model of an energy hub and its external AC/DC neighbourhood.
//!
//! Nodes are AC or DC and either internal (on the hub) or external. Cables,
//! converters and breakers are edges. Breakers and converters are
//! fault-blocking: they bound protection zones. Every quantity is an exact
//! [`Power`] in units of the per-pole rating `P` (lengths are exact
//! kilometres).

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::Power;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl EdgeId {
    pub fn new(id: impl Into<String>) -> Self {
        EdgeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    #[serde(rename = "AC")]
    Ac,
    #[serde(rename = "DC")]
    Dc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Locality {
    Internal,
    External,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub locality: Locality,
    /// Synchronous-zone label; required for external AC nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ac_zone: Option<String>,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind, locality: Locality) -> Self {
        Node {
            id: NodeId::new(id),
            kind,
            locality,
            ac_zone: None,
        }
    }

    pub fn with_zone(mut self, zone: impl Into<String>) -> Self {
        self.ac_zone = Some(zone.into());
        self
    }

    pub fn is_internal_dc(&self) -> bool {
        self.kind == NodeKind::Dc && self.locality == Locality::Internal
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Cable,
    Converter,
    Breaker,
}

impl EdgeKind {
    pub fn is_fault_blocking(self) -> bool {
        matches!(self, EdgeKind::Breaker | EdgeKind::Converter)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub kind: EdgeKind,
    pub endpoints: (NodeId, NodeId),
    /// Rating in `P`. Breakers may leave it unset, meaning unconstrained.
    #[serde(rename = "capacity_P", default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<Power>,
    #[serde(rename = "length_km", default, skip_serializing_if = "Option::is_none")]
    pub length: Option<Power>,
    pub fault_blocking: bool,
}

impl Edge {
    pub fn new(id: impl Into<String>, kind: EdgeKind, a: &str, b: &str) -> Self {
        Edge {
            id: EdgeId::new(id),
            kind,
            endpoints: (NodeId::new(a), NodeId::new(b)),
            capacity: None,
            length: None,
            fault_blocking: kind.is_fault_blocking(),
        }
    }

    pub fn with_capacity(mut self, capacity: Power) -> Self {
        self.capacity = Some(capacity);
        self
    }

    pub fn with_length(mut self, km: Power) -> Self {
        self.length = Some(km);
        self
    }

    pub fn touches(&self, node: &NodeId) -> bool {
        &self.endpoints.0 == node || &self.endpoints.1 == node
    }

    pub fn other(&self, node: &NodeId) -> &NodeId {
        if &self.endpoints.0 == node {
            &self.endpoints.1
        } else {
            &self.endpoints.0
        }
    }
}

/// Immutable network description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

/// A balanced set of AC injections (infeed positive, demand negative).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerFlowScenario {
    pub name: String,
    pub injections: BTreeMap<NodeId, Power>,
}

impl PowerFlowScenario {
    pub fn new(name: impl Into<String>) -> Self {
        PowerFlowScenario {
            name: name.into(),
            injections: BTreeMap::new(),
        }
    }

    pub fn inject(mut self, node: &str, power: Power) -> Self {
        self.injections.insert(NodeId::new(node), power);
        self
    }

    pub fn total(&self) -> Power {
        self.injections.values().sum()
    }
}

impl NetworkSpec {
    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn edge(&self, id: &EdgeId) -> Option<&Edge> {
        self.edges.iter().find(|e| &e.id == id)
    }

    fn node_map(&self) -> HashMap<&NodeId, &Node> {
        self.nodes.iter().map(|n| (&n.id, n)).collect()
    }

    /// AC zone labels in order of first declaration.
    pub fn ac_zones(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.nodes
            .iter()
            .filter_map(|n| n.ac_zone.clone())
            .filter(|z| seen.insert(z.clone()))
            .collect()
    }

    /// The hub-side internal DC endpoint of an edge, when exactly one
    /// endpoint is an internal DC node.
    pub fn hub_endpoint<'a>(&self, edge: &'a Edge) -> Option<&'a NodeId> {
        let nodes = self.node_map();
        let a = nodes.get(&edge.endpoints.0).is_some_and(|n| n.is_internal_dc());
        let b = nodes.get(&edge.endpoints.1).is_some_and(|n| n.is_internal_dc());
        match (a, b) {
            (true, false) => Some(&edge.endpoints.0),
            (false, true) => Some(&edge.endpoints.1),
            _ => None,
        }
    }

    /// Cables and converters attached to the hub's DC side: the elements a
    /// configuration assigns to busbars. Order follows `edges`.
    pub fn assignable_elements(&self) -> Vec<&Edge> {
        self.edges
            .iter()
            .filter(|e| matches!(e.kind, EdgeKind::Cable | EdgeKind::Converter))
            .filter(|e| self.hub_endpoint(e).is_some())
            .collect()
    }

    /// The AC zone an assignable element leads to: for a converter, the zone
    /// of its AC terminal; for a cable, the zone reached from its remote end
    /// through external equipment. `None` for hub-internal AC nodes.
    pub fn element_zone(&self, edge: &Edge) -> Option<String> {
        let nodes = self.node_map();
        let hub = self.hub_endpoint(edge)?;
        let far = edge.other(hub);
        let mut seen = BTreeSet::from([far.clone()]);
        let mut queue = VecDeque::from([far.clone()]);
        while let Some(id) = queue.pop_front() {
            let node = nodes.get(&id)?;
            if node.kind == NodeKind::Ac {
                return node.ac_zone.clone();
            }
            if node.locality == Locality::Internal {
                continue;
            }
            for e in self.edges.iter().filter(|e| e.touches(&id) && e.id != edge.id) {
                let next = e.other(&id);
                if seen.insert(next.clone()) {
                    queue.push_back(next.clone());
                }
            }
        }
        None
    }

    pub fn from_json_str(text: &str) -> Result<(NetworkSpec, Vec<PowerFlowScenario>)> {
        let file: NetworkFile = serde_json::from_str(text)?;
        Ok(file.into_parts())
    }

    pub fn load(path: &Path) -> Result<(NetworkSpec, Vec<PowerFlowScenario>)> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self, scenarios: &[PowerFlowScenario]) -> Result<String> {
        let file = NetworkFile {
            name: self.name.clone(),
            nodes: self.nodes.clone(),
            edges: self.edges.iter().map(EdgeRecord::from).collect(),
            scenarios: scenarios.to_vec(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

/// On-disk layout of a network specification file.
#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    #[serde(default)]
    name: String,
    nodes: Vec<Node>,
    edges: Vec<EdgeRecord>,
    #[serde(default)]
    scenarios: Vec<PowerFlowScenario>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRecord {
    id: EdgeId,
    kind: EdgeKind,
    endpoints: (NodeId, NodeId),
    #[serde(rename = "capacity_P", default, skip_serializing_if = "Option::is_none")]
    capacity: Option<Power>,
    #[serde(rename = "length_km", default, skip_serializing_if = "Option::is_none")]
    length: Option<Power>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fault_blocking: Option<bool>,
}

impl From<&Edge> for EdgeRecord {
    fn from(e: &Edge) -> Self {
        EdgeRecord {
            id: e.id.clone(),
            kind: e.kind,
            endpoints: e.endpoints.clone(),
            capacity: e.capacity,
            length: e.length,
            fault_blocking: (e.fault_blocking != e.kind.is_fault_blocking()).then_some(e.fault_blocking),
        }
    }
}

impl NetworkFile {
    fn into_parts(self) -> (NetworkSpec, Vec<PowerFlowScenario>) {
        let edges = self
            .edges
            .into_iter()
            .map(|r| Edge {
                fault_blocking: r.fault_blocking.unwrap_or(r.kind.is_fault_blocking()),
                id: r.id,
                kind: r.kind,
                endpoints: r.endpoints,
                capacity: r.capacity,
                length: r.length,
            })
            .collect();
        (
            NetworkSpec {
                name: self.name,
                nodes: self.nodes,
                edges,
            },
            self.scenarios,
        )
    }
}

/// A broken invariant, naming the offending node, edge or scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub subject: String,
    pub rule: Rule,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    DuplicateId,
    MissingZoneLabel,
    UnknownEndpoint(String),
    SelfLoop,
    CableEndpointNotDc,
    ConverterEndpoints,
    BreakerEndpointNotInternalDc,
    MissingCapacity,
    NonPositiveCapacity,
    NegativeCapacity,
    NegativeLength,
    LengthOnNonCable,
    FaultBlockingMismatch,
    ParallelBreaker(String),
    Disconnected,
    InjectionAtNonAc,
    UnknownInjectionNode,
    Unbalanced(Power),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::DuplicateId => f.write_str("identifier is used more than once"),
            Rule::MissingZoneLabel => f.write_str("external AC node has no ac_zone label"),
            Rule::UnknownEndpoint(n) => write!(f, "endpoint {n:?} does not exist"),
            Rule::SelfLoop => f.write_str("both endpoints are the same node"),
            Rule::CableEndpointNotDc => f.write_str("cable endpoints must both be DC"),
            Rule::ConverterEndpoints => f.write_str("converter must join one AC and one DC node"),
            Rule::BreakerEndpointNotInternalDc => {
                f.write_str("breaker endpoints must both be internal DC nodes")
            }
            Rule::MissingCapacity => f.write_str("cables and converters need a capacity"),
            Rule::NonPositiveCapacity => f.write_str("capacity must be positive"),
            Rule::NegativeCapacity => f.write_str("capacity must not be negative"),
            Rule::NegativeLength => f.write_str("length must not be negative"),
            Rule::LengthOnNonCable => f.write_str("only cables carry a length"),
            Rule::FaultBlockingMismatch => {
                f.write_str("fault_blocking must be set exactly for breakers and converters")
            }
            Rule::ParallelBreaker(other) => write!(f, "parallel to breaker {other:?}"),
            Rule::Disconnected => f.write_str("network is not connected"),
            Rule::InjectionAtNonAc => f.write_str("injection at a node that is not AC"),
            Rule::UnknownInjectionNode => f.write_str("injection at an unknown node"),
            Rule::Unbalanced(sum) => write!(f, "injections sum to {sum}, not 0"),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.rule)
    }
}

fn violation(subject: impl fmt::Display, rule: Rule) -> Violation {
    Violation {
        subject: subject.to_string(),
        rule,
    }
}

/// Checks every structural invariant of `spec`. An empty list means valid.
pub fn validate(spec: &NetworkSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for node in &spec.nodes {
        if !ids.insert(node.id.0.as_str()) {
            out.push(violation(&node.id, Rule::DuplicateId));
        }
        if node.kind == NodeKind::Ac && node.locality == Locality::External && node.ac_zone.is_none() {
            out.push(violation(&node.id, Rule::MissingZoneLabel));
        }
    }
    let mut edge_ids = BTreeSet::new();
    for edge in &spec.edges {
        if !edge_ids.insert(edge.id.0.as_str()) {
            out.push(violation(&edge.id, Rule::DuplicateId));
        }
    }

    let nodes = spec.node_map();
    let mut breaker_pairs: BTreeMap<(&NodeId, &NodeId), &EdgeId> = BTreeMap::new();
    for edge in &spec.edges {
        let (a, b) = (&edge.endpoints.0, &edge.endpoints.1);
        let mut endpoints_known = true;
        for end in [a, b] {
            if !nodes.contains_key(end) {
                out.push(violation(&edge.id, Rule::UnknownEndpoint(end.0.clone())));
                endpoints_known = false;
            }
        }
        if a == b {
            out.push(violation(&edge.id, Rule::SelfLoop));
        }
        if edge.fault_blocking != edge.kind.is_fault_blocking() {
            out.push(violation(&edge.id, Rule::FaultBlockingMismatch));
        }
        match (edge.kind, edge.capacity) {
            (EdgeKind::Breaker, Some(c)) if c.is_negative() => {
                out.push(violation(&edge.id, Rule::NegativeCapacity))
            }
            (EdgeKind::Breaker, _) => {}
            (_, None) => out.push(violation(&edge.id, Rule::MissingCapacity)),
            (_, Some(c)) if !c.is_positive() => out.push(violation(&edge.id, Rule::NonPositiveCapacity)),
            _ => {}
        }
        if let Some(len) = edge.length {
            if edge.kind != EdgeKind::Cable {
                out.push(violation(&edge.id, Rule::LengthOnNonCable));
            } else if len.is_negative() {
                out.push(violation(&edge.id, Rule::NegativeLength));
            }
        }
        if !endpoints_known {
            continue;
        }
        let (na, nb) = (nodes[a], nodes[b]);
        match edge.kind {
            EdgeKind::Cable => {
                if na.kind != NodeKind::Dc || nb.kind != NodeKind::Dc {
                    out.push(violation(&edge.id, Rule::CableEndpointNotDc));
                }
            }
            EdgeKind::Converter => {
                if na.kind == nb.kind {
                    out.push(violation(&edge.id, Rule::ConverterEndpoints));
                }
            }
            EdgeKind::Breaker => {
                if !na.is_internal_dc() || !nb.is_internal_dc() {
                    out.push(violation(&edge.id, Rule::BreakerEndpointNotInternalDc));
                }
                let key = if a <= b { (a, b) } else { (b, a) };
                if a != b {
                    if let Some(first) = breaker_pairs.get(&key) {
                        out.push(violation(&edge.id, Rule::ParallelBreaker(first.0.clone())));
                    } else {
                        breaker_pairs.insert(key, &edge.id);
                    }
                }
            }
        }
    }

    if !spec.nodes.is_empty() && !is_connected(spec) {
        out.push(violation(&spec.name, Rule::Disconnected));
    }
    out
}

fn is_connected(spec: &NetworkSpec) -> bool {
    let index: HashMap<&NodeId, usize> = spec.nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect();
    let mut adjacency = vec![Vec::new(); spec.nodes.len()];
    for e in &spec.edges {
        if let (Some(&a), Some(&b)) = (index.get(&e.endpoints.0), index.get(&e.endpoints.1)) {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    let mut seen = vec![false; spec.nodes.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Checks that a scenario injects only at AC nodes of `spec` and is balanced.
pub fn validate_scenario(spec: &NetworkSpec, scenario: &PowerFlowScenario) -> Vec<Violation> {
    let mut out = Vec::new();
    for node in scenario.injections.keys() {
        match spec.node(node) {
            None => out.push(violation(format!("{}/{}", scenario.name, node), Rule::UnknownInjectionNode)),
            Some(n) if n.kind != NodeKind::Ac => {
                out.push(violation(format!("{}/{}", scenario.name, node), Rule::InjectionAtNonAc))
            }
            _ => {}
        }
    }
    let sum = scenario.total();
    if !sum.is_zero() {
        out.push(violation(&scenario.name, Rule::Unbalanced(sum)));
    }
    out
}

/// Fails with [`Error::Invalid`] unless the spec and all scenarios are valid.
pub fn ensure_valid(spec: &NetworkSpec, scenarios: &[PowerFlowScenario]) -> Result<()> {
    let mut violations = validate(spec);
    for s in scenarios {
        violations.extend(validate_scenario(spec, s));
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Invalid(violations))
    }
}
