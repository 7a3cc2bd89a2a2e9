//! Built-in small, medium and large energy-hub test cases.
//!
//! Each case has a hub AC node feeding `n` hub converters onto a single
//! unconfigured hub busbar `HubDC`, and per-pole cables to three onshore
//! zones. Every cable ends at its own onshore converter.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::model::{Edge, EdgeKind, Locality, NetworkSpec, Node, NodeKind, PowerFlowScenario};
use crate::power::Power;

pub const HUB_AC: &str = "HubAC";
pub const HUB_DC: &str = "HubDC";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TestCase {
    Small,
    Medium,
    Large,
}

impl TestCase {
    pub const ALL: [TestCase; 3] = [TestCase::Small, TestCase::Medium, TestCase::Large];

    /// Hub converter count and cable count per onshore zone.
    pub fn parameters(self) -> (usize, [usize; 3]) {
        match self {
            TestCase::Small => (2, [2, 1, 1]),
            TestCase::Medium => (3, [2, 2, 2]),
            TestCase::Large => (6, [2, 2, 2]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestCase::Small => "small",
            TestCase::Medium => "medium",
            TestCase::Large => "large",
        }
    }
}

impl fmt::Display for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "small" => Ok(TestCase::Small),
            "medium" => Ok(TestCase::Medium),
            "large" => Ok(TestCase::Large),
            _ => Err(Error::UnknownCase(s.to_string())),
        }
    }
}

/// Cable lengths to Zones 1, 2 and 3 in km.
pub const CABLE_LENGTHS_KM: [i64; 3] = [100, 700, 250];

pub fn build_test_case(which: TestCase) -> (NetworkSpec, Vec<PowerFlowScenario>) {
    let (converters, cables_per_zone) = which.parameters();
    let unit = Power::ONE;

    let mut nodes = vec![
        Node::new(HUB_AC, NodeKind::Ac, Locality::Internal),
        Node::new(HUB_DC, NodeKind::Dc, Locality::Internal),
    ];
    for z in 1..=3 {
        nodes.push(Node::new(format!("Zone{z}"), NodeKind::Ac, Locality::External).with_zone(format!("Zone{z}")));
    }

    let mut edges: Vec<Edge> = (1..=converters)
        .map(|i| Edge::new(format!("C{i}"), EdgeKind::Converter, HUB_AC, HUB_DC).with_capacity(unit))
        .collect();
    let mut onshore = Vec::new();
    let mut cable = 0;
    for (z, &count) in cables_per_zone.iter().enumerate() {
        for _ in 0..count {
            cable += 1;
            let terminal = format!("T{cable}");
            nodes.push(Node::new(&terminal, NodeKind::Dc, Locality::External));
            edges.push(
                Edge::new(format!("L{cable}"), EdgeKind::Cable, HUB_DC, &terminal)
                    .with_capacity(unit)
                    .with_length(Power::from_int(CABLE_LENGTHS_KM[z])),
            );
            onshore.push(
                Edge::new(format!("OC{cable}"), EdgeKind::Converter, &format!("Zone{}", z + 1), &terminal)
                    .with_capacity(unit),
            );
        }
    }
    edges.extend(onshore);

    let spec = NetworkSpec {
        name: which.name().to_string(),
        nodes,
        edges,
    };
    (spec, scenarios(converters, cables_per_zone))
}

/// Maximally loaded scenarios: hub converters inject at full rating and every
/// importing zone draws its full cable capacity. When the hub alone cannot
/// load the importers, one zone exports the balance; rotating that role over
/// Zones 2, 3 and 1 gives PF1 to PF3. If the hub alone loads every cable, a
/// single all-import scenario results.
fn scenarios(converters: usize, cables_per_zone: [usize; 3]) -> Vec<PowerFlowScenario> {
    let hub = converters as i64;
    let capacity: Vec<i64> = cables_per_zone.iter().map(|&c| c as i64).collect();
    let total: i64 = capacity.iter().sum();

    if hub >= total {
        let mut s = PowerFlowScenario::new("PF1").inject(HUB_AC, Power::from_int(hub));
        for z in 0..3 {
            s = s.inject(&format!("Zone{}", z + 1), Power::from_int(-capacity[z]));
        }
        return vec![s];
    }

    [1usize, 2, 0]
        .iter()
        .enumerate()
        .map(|(k, &exporter)| {
            let import: i64 = (0..3).filter(|&z| z != exporter).map(|z| capacity[z]).sum();
            let export = (import - hub).clamp(0, capacity[exporter]);
            let mut s = PowerFlowScenario::new(format!("PF{}", k + 1)).inject(HUB_AC, Power::from_int(hub));
            for z in 0..3 {
                let value = if z == exporter { export } else { -capacity[z] };
                s = s.inject(&format!("Zone{}", z + 1), Power::from_int(value));
            }
            s
        })
        .collect()
}
