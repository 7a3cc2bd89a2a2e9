//! Fault-impact metrics of one configuration.
//!
//! * worst case: the largest total loss of infeed over cable faults (or,
//!   with [`FaultScope::AllZones`], faults in every protection zone), plus
//!   the largest loss per AC zone;
//! * length-weighted expected loss over cable faults;
//! * backup failure: for every breaker, the worst cable fault it should have
//!   cleared with that breaker stuck closed, averaged over breakers.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::enumerate::Configuration;
use crate::error::{Error, Result};
use crate::flow::{FlowNetwork, LossConvention};
use crate::model::{ensure_valid, EdgeKind, NetworkSpec, PowerFlowScenario};
use crate::network::{busbar_id, check_assignment, HubModel};
use crate::power::Power;
use crate::zoning::FaultCase;

/// Reusable buffers for evaluation on one thread.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    net: FlowNetwork,
    imports: Vec<i64>,
}

/// Which faults the worst-case metric ranges over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultScope {
    /// Faults on hub cables, i.e. every zone holding a cable.
    #[default]
    Cables,
    /// Faults anywhere, including zones holding only converters or nothing.
    AllZones,
}

/// Per-busbar fault losses of one configuration under one scenario, in
/// scaled units. In a configured hub every busbar is its own zone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultTable {
    /// Busbars whose fault is in scope. Rows of other busbars are zero.
    pub site: Vec<bool>,
    /// `loss[b][z]`: loss in AC zone `z` when busbar `b` is faulted.
    pub loss: Vec<Vec<i64>>,
    pub total: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WorstCase {
    pub total: Power,
    /// Indexed like [`Evaluator::zones`].
    pub per_zone: Vec<Power>,
    /// Zone whose fault gives `total` (lowest index on ties).
    pub fault: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioImpact {
    pub scenario: String,
    pub worst_total: Power,
    pub worst_per_zone: BTreeMap<String, Power>,
    pub avg_weighted: Power,
    pub backup_avg: Power,
    pub worst_fault: FaultCase,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImpactReport {
    pub config: String,
    pub breakers: usize,
    pub per_scenario: Vec<ScenarioImpact>,
}

#[derive(Clone, Debug)]
pub struct Evaluator {
    spec: NetworkSpec,
    model: HubModel,
    lengths: Vec<Option<Power>>,
    cables: Vec<usize>,
    convention: LossConvention,
    scope: FaultScope,
}

impl Evaluator {
    /// Validates the network and scenarios and compiles them.
    pub fn new(spec: &NetworkSpec, scenarios: &[PowerFlowScenario]) -> Result<Self> {
        ensure_valid(spec, scenarios)?;
        let model = HubModel::new(spec, scenarios)?;
        let el = model.elements();
        let cables = el.cables().collect();
        let lengths = el.lengths.clone();
        Ok(Evaluator {
            spec: spec.clone(),
            model,
            lengths,
            cables,
            convention: LossConvention::NetImport,
            scope: FaultScope::Cables,
        })
    }

    pub fn with_convention(mut self, convention: LossConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_scope(mut self, scope: FaultScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn scope(&self) -> FaultScope {
        self.scope
    }

    pub fn convention(&self) -> LossConvention {
        self.convention
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn model(&self) -> &HubModel {
        &self.model
    }

    pub fn zones(&self) -> &[String] {
        self.model.zones()
    }

    pub fn scenario_count(&self) -> usize {
        self.model.scenarios.len()
    }

    pub fn scenario_name(&self, s: usize) -> &str {
        &self.model.scenarios[s].name
    }

    pub fn scenario_index(&self, name: &str) -> Result<usize> {
        self.model
            .scenarios
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownScenario(name.to_string()))
    }

    pub fn check(&self, config: &Configuration) -> Result<()> {
        check_assignment(self.model.elements(), config)
    }

    fn loss(&self, ws: &mut Workspace, config: &Configuration, s: usize, pre: &[i64], removed: u32) -> Vec<i64> {
        self.model.zone_imports(&mut ws.net, config, s, removed, None, &mut ws.imports);
        pre.iter()
            .zip(&ws.imports)
            .map(|(&before, &during)| self.convention.apply_units(before, during))
            .collect()
    }

    fn pre_fault(&self, ws: &mut Workspace, config: &Configuration, s: usize) -> Vec<i64> {
        self.model.zone_imports(&mut ws.net, config, s, 0, None, &mut ws.imports);
        ws.imports.clone()
    }

    fn cable_busbars(&self, config: &Configuration) -> Vec<bool> {
        let mut has_cable = vec![false; config.busbar_count()];
        for &c in &self.cables {
            has_cable[config.assignment[c] as usize] = true;
        }
        has_cable
    }

    /// Losses for a fault on every busbar in scope.
    pub fn fault_table(&self, ws: &mut Workspace, config: &Configuration, s: usize) -> FaultTable {
        let pre = self.pre_fault(ws, config, s);
        let site = match self.scope {
            FaultScope::Cables => self.cable_busbars(config),
            FaultScope::AllZones => vec![true; config.busbar_count()],
        };
        let loss: Vec<Vec<i64>> = (0..config.busbar_count())
            .map(|b| {
                if site[b] {
                    self.loss(ws, config, s, &pre, 1 << b)
                } else {
                    vec![0; pre.len()]
                }
            })
            .collect();
        let total = loss.iter().map(|l| l.iter().sum()).collect();
        FaultTable { site, loss, total }
    }

    pub fn worst_of(&self, table: &FaultTable) -> WorstCase {
        let mut fault = table.site.iter().position(|&x| x).unwrap_or(0);
        for (b, &t) in table.total.iter().enumerate() {
            if table.site[b] && t > table.total[fault] {
                fault = b;
            }
        }
        let per_zone = (0..self.zones().len())
            .map(|z| self.model.to_power(table.loss.iter().map(|l| l[z]).max().unwrap_or(0)))
            .collect();
        WorstCase {
            total: self.model.to_power(table.total[fault]),
            per_zone,
            fault,
        }
    }

    pub fn worst_case(&self, ws: &mut Workspace, config: &Configuration, s: usize) -> WorstCase {
        self.worst_of(&self.fault_table(ws, config, s))
    }

    pub fn avg_weighted_of(&self, table: &FaultTable, config: &Configuration) -> Result<Power> {
        let mut total_length = Power::ZERO;
        let mut weighted = Power::ZERO;
        for &c in &self.cables {
            let length = self.lengths[c].ok_or_else(|| Error::MissingLength(self.model.elements().ids[c].to_string()))?;
            total_length += length;
            weighted += length * self.model.to_power(table.total[config.assignment[c] as usize]);
        }
        Ok(if total_length.is_zero() {
            Power::ZERO
        } else {
            weighted / total_length
        })
    }

    pub fn avg_weighted(&self, ws: &mut Workspace, config: &Configuration, s: usize) -> Result<Power> {
        self.avg_weighted_of(&self.fault_table(ws, config, s), config)
    }

    /// Mean over breakers of the worst cable fault the breaker borders,
    /// cleared with that breaker failed. Without breakers: the loss when the
    /// single zone is cleared.
    pub fn backup_avg(&self, ws: &mut Workspace, config: &Configuration, s: usize) -> Power {
        let pre = self.pre_fault(ws, config, s);
        let breakers = config.arrangement.breakers();
        if breakers.is_empty() {
            let lost: i64 = self.loss(ws, config, s, &pre, u32::MAX).iter().sum();
            return self.model.to_power(lost);
        }
        let has_cable = self.cable_busbars(config);
        let sum: i64 = breakers
            .iter()
            .map(|&(a, b)| {
                if has_cable[a as usize] || has_cable[b as usize] {
                    self.loss(ws, config, s, &pre, 1 << a | 1 << b).iter().sum()
                } else {
                    0
                }
            })
            .sum();
        self.model.to_power(sum) / Power::from_int(breakers.len() as i64)
    }

    /// Worst-case fault as a [`FaultCase`] on the realised configuration.
    pub fn fault_case(&self, zone: usize) -> FaultCase {
        FaultCase::busbar(&busbar_id(zone))
    }

    pub fn scenario_impact(&self, ws: &mut Workspace, config: &Configuration, s: usize) -> Result<ScenarioImpact> {
        let table = self.fault_table(ws, config, s);
        let worst = self.worst_of(&table);
        Ok(ScenarioImpact {
            scenario: self.scenario_name(s).to_string(),
            worst_total: worst.total,
            worst_per_zone: self.zones().iter().cloned().zip(worst.per_zone.iter().copied()).collect(),
            avg_weighted: self.avg_weighted_of(&table, config)?,
            backup_avg: self.backup_avg(ws, config, s),
            worst_fault: self.fault_case(worst.fault),
        })
    }

    pub fn report(&self, config: &Configuration) -> Result<ImpactReport> {
        self.check(config)?;
        let mut ws = Workspace::default();
        let per_scenario = (0..self.scenario_count())
            .map(|s| self.scenario_impact(&mut ws, config, s))
            .collect::<Result<_>>()?;
        Ok(ImpactReport {
            config: config.canonical_string(self.model.elements()),
            breakers: config.breaker_count(),
            per_scenario,
        })
    }

    /// Checks every faulted-state flow of `config` against an exhaustive
    /// minimum cut. Returns the number of states checked.
    pub fn cross_check(&self, config: &Configuration) -> Result<usize> {
        self.check(config)?;
        let mut net = FlowNetwork::default();
        let mut masks: Vec<u32> = vec![0];
        masks.extend((0..config.busbar_count()).map(|b| 1u32 << b));
        masks.extend(config.arrangement.breakers().iter().map(|&(a, b)| 1u32 << a | 1 << b));
        let mut checked = 0;
        for s in 0..self.scenario_count() {
            for &mask in &masks {
                if self.model.cross_check(&mut net, config, s, mask)?.is_some() {
                    checked += 1;
                }
            }
        }
        Ok(checked)
    }
}

fn single(spec: &NetworkSpec, config: &Configuration, scenario: &PowerFlowScenario) -> Result<Evaluator> {
    let ev = Evaluator::new(spec, std::slice::from_ref(scenario))?;
    ev.check(config)?;
    Ok(ev)
}

/// Worst total loss, worst loss per AC zone and the fault causing the total.
pub fn worst_case_loi(
    spec: &NetworkSpec,
    config: &Configuration,
    scenario: &PowerFlowScenario,
) -> Result<(Power, BTreeMap<String, Power>, FaultCase)> {
    let ev = single(spec, config, scenario)?;
    let w = ev.worst_case(&mut Workspace::default(), config, 0);
    let per_zone = ev.zones().iter().cloned().zip(w.per_zone).collect();
    Ok((w.total, per_zone, ev.fault_case(w.fault)))
}

pub fn length_weighted_expected_loi(
    spec: &NetworkSpec,
    config: &Configuration,
    scenario: &PowerFlowScenario,
) -> Result<Power> {
    let ev = single(spec, config, scenario)?;
    ev.avg_weighted(&mut Workspace::default(), config, 0)
}

pub fn backup_failure_loi(spec: &NetworkSpec, config: &Configuration, scenario: &PowerFlowScenario) -> Result<Power> {
    let ev = single(spec, config, scenario)?;
    Ok(ev.backup_avg(&mut Workspace::default(), config, 0))
}

/// Cables of the hub, for callers building fault lists.
pub fn hub_cables(spec: &NetworkSpec) -> Vec<String> {
    spec.assignable_elements()
        .iter()
        .filter(|e| e.kind == EdgeKind::Cable)
        .map(|e| e.id.to_string())
        .collect()
}
