//! Protection zones and the network states a fault leaves behind.
//!
//! A zone is a connected group of internal DC nodes once every fault-blocking
//! edge (breakers, converters) is cut. Cables and converters belong to the
//! zone of their hub-side node. A fault de-energises its whole zone until the
//! bordering breakers open (faulted state); afterwards only the faulted
//! element stays out (post-fault state).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::enumerate::Configuration;
use crate::error::{Error, Result};
use crate::model::{EdgeId, EdgeKind, NetworkSpec, NodeId};
use crate::network::realize;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Zone {
    pub nodes: Vec<NodeId>,
    pub elements: Vec<EdgeId>,
    /// Breakers with exactly one endpoint in the zone.
    pub breakers: Vec<EdgeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ZonePartition {
    pub zones: Vec<Zone>,
    zone_of_node: BTreeMap<NodeId, usize>,
    zone_of_element: BTreeMap<EdgeId, usize>,
}

impl ZonePartition {
    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zone_of_node(&self, node: &NodeId) -> Option<usize> {
        self.zone_of_node.get(node).copied()
    }

    pub fn zone_of_element(&self, element: &EdgeId) -> Option<usize> {
        self.zone_of_element.get(element).copied()
    }

    pub fn same_zone(&self, a: &EdgeId, b: &EdgeId) -> bool {
        matches!((self.zone_of_element(a), self.zone_of_element(b)), (Some(x), Some(y)) if x == y)
    }
}

/// Zones of a concrete network, optionally with one breaker treated as
/// failed closed. Zones are numbered by their first internal DC node.
pub fn partition(state: &NetworkSpec, failed_breaker: Option<&EdgeId>) -> ZonePartition {
    let internal: Vec<&NodeId> = state.nodes.iter().filter(|n| n.is_internal_dc()).map(|n| &n.id).collect();
    let index: BTreeMap<&NodeId, usize> = internal.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut parent: Vec<usize> = (0..internal.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in &state.edges {
        let conducting = !e.fault_blocking || Some(&e.id) == failed_breaker;
        if let (true, Some(&a), Some(&b)) = (conducting, index.get(&e.endpoints.0), index.get(&e.endpoints.1)) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra.max(rb)] = ra.min(rb);
        }
    }

    let mut out = ZonePartition::default();
    let mut zone_of_root = BTreeMap::new();
    for (i, &node) in internal.iter().enumerate() {
        let root = find(&mut parent, i);
        let z = *zone_of_root.entry(root).or_insert_with(|| {
            out.zones.push(Zone::default());
            out.zones.len() - 1
        });
        out.zones[z].nodes.push(node.clone());
        out.zone_of_node.insert(node.clone(), z);
    }
    for e in &state.edges {
        let a = out.zone_of_node.get(&e.endpoints.0).copied();
        let b = out.zone_of_node.get(&e.endpoints.1).copied();
        match e.kind {
            EdgeKind::Breaker => {
                for z in [a, b].into_iter().flatten() {
                    if a != b {
                        out.zones[z].breakers.push(e.id.clone());
                    }
                }
            }
            _ => {
                if let Some(z) = a.or(b) {
                    out.zones[z].elements.push(e.id.clone());
                    out.zone_of_element.insert(e.id.clone(), z);
                }
            }
        }
    }
    out
}

pub fn protection_zones(spec: &NetworkSpec, config: &Configuration) -> Result<ZonePartition> {
    Ok(partition(&realize(spec, config)?, None))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultSite {
    /// A hub cable or converter.
    Element(EdgeId),
    /// A busbar (internal DC node) of the realised configuration.
    Busbar(NodeId),
    /// A protection zone by index.
    Zone(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FaultCase {
    pub site: FaultSite,
    /// Breaker that fails to open; its neighbour zone is lost as well.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_breaker: Option<EdgeId>,
}

impl FaultCase {
    pub fn element(id: &str) -> Self {
        FaultCase {
            site: FaultSite::Element(EdgeId::new(id)),
            failed_breaker: None,
        }
    }

    pub fn busbar(id: &str) -> Self {
        FaultCase {
            site: FaultSite::Busbar(NodeId::new(id)),
            failed_breaker: None,
        }
    }

    pub fn zone(index: usize) -> Self {
        FaultCase {
            site: FaultSite::Zone(index),
            failed_breaker: None,
        }
    }

    pub fn with_failed_breaker(mut self, breaker: &str) -> Self {
        self.failed_breaker = Some(EdgeId::new(breaker));
        self
    }
}

impl fmt::Display for FaultCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.site {
            FaultSite::Element(e) => write!(f, "element {e}")?,
            FaultSite::Busbar(n) => write!(f, "busbar {n}")?,
            FaultSite::Zone(z) => write!(f, "zone {z}")?,
        }
        if let Some(b) = &self.failed_breaker {
            write!(f, " with {b} failed")?;
        }
        Ok(())
    }
}

fn zone_of_site(zones: &ZonePartition, site: &FaultSite) -> Result<usize> {
    match site {
        FaultSite::Element(e) => zones
            .zone_of_element(e)
            .ok_or_else(|| Error::UnknownFaultSite(format!("element {e}"))),
        FaultSite::Busbar(n) => zones
            .zone_of_node(n)
            .ok_or_else(|| Error::UnknownFaultSite(format!("busbar {n}"))),
        FaultSite::Zone(z) if *z < zones.len() => Ok(*z),
        FaultSite::Zone(z) => Err(Error::UnknownFaultSite(format!("zone {z}"))),
    }
}

fn without_nodes(state: &NetworkSpec, removed: &BTreeSet<&NodeId>) -> NetworkSpec {
    NetworkSpec {
        name: state.name.clone(),
        nodes: state.nodes.iter().filter(|n| !removed.contains(&n.id)).cloned().collect(),
        edges: state
            .edges
            .iter()
            .filter(|e| !removed.contains(&e.endpoints.0) && !removed.contains(&e.endpoints.1))
            .cloned()
            .collect(),
    }
}

/// The network while the fault is being cleared: the faulted zone (or, when
/// a breaker fails, the zone merged across it) is removed with everything
/// attached to it.
pub fn faulted_state(spec: &NetworkSpec, config: &Configuration, fault: &FaultCase) -> Result<NetworkSpec> {
    let state = realize(spec, config)?;
    faulted_state_of(&state, fault)
}

/// [`faulted_state`] on an already realised network.
pub fn faulted_state_of(state: &NetworkSpec, fault: &FaultCase) -> Result<NetworkSpec> {
    let zones = partition(state, None);
    let mut z = zone_of_site(&zones, &fault.site)?;
    let mut cleared = zones;
    if let Some(breaker) = &fault.failed_breaker {
        if !cleared.zones[z].breakers.contains(breaker) {
            return Err(Error::BreakerNotAdjacent {
                breaker: breaker.to_string(),
            });
        }
        let anchor = cleared.zones[z].nodes[0].clone();
        cleared = partition(state, Some(breaker));
        z = cleared.zone_of_node(&anchor).expect("node survives repartition");
    }
    let removed: BTreeSet<&NodeId> = cleared.zones[z].nodes.iter().collect();
    Ok(without_nodes(state, &removed))
}

/// The network after clearing and reconnection: only the faulted element,
/// or a faulted busbar with its attached elements, stays out.
pub fn post_fault_state(spec: &NetworkSpec, config: &Configuration, fault: &FaultCase) -> Result<NetworkSpec> {
    let state = realize(spec, config)?;
    let zones = partition(&state, None);
    zone_of_site(&zones, &fault.site)?;
    match &fault.site {
        FaultSite::Element(e) => {
            let mut out = state.clone();
            out.edges.retain(|x| &x.id != e);
            Ok(out)
        }
        FaultSite::Busbar(n) => Ok(without_nodes(&state, &BTreeSet::from([n]))),
        FaultSite::Zone(z) => Err(Error::ZoneHasNoPostFault(*z)),
    }
}
