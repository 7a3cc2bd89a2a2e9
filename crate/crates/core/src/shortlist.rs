//! The filtering pipeline: successive argmin filters over the enumerated
//! configurations, branch filters on the survivors, and summaries of the
//! shortlist (co-zone heat maps, design-principle rates, baseline).
//!
//! Keeping the argmin set of each step in turn is the same as keeping the
//! lexicographic minima of the step-value vectors, so the stream is reduced
//! in one pass and later step values are only computed for configurations
//! still tied with the best prefix.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::enumerate::{enumerate_with_limits, Configuration, EnumerationLimits, HubElements, PruneRules};
use crate::error::{Error, Result};
use crate::metrics::{Evaluator, FaultTable, ImpactReport, Workspace};
use crate::model::{EdgeKind, NetworkSpec};
use crate::power::Power;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum MetricKind {
    WorstTotal,
    WorstPerZone { zone: String },
    AvgWeighted,
    BackupAvg,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FilterStep {
    #[serde(flatten)]
    pub kind: MetricKind,
    pub scenario: String,
}

impl FilterStep {
    pub fn new(kind: MetricKind, scenario: &str) -> Self {
        FilterStep {
            kind,
            scenario: scenario.to_string(),
        }
    }
}

impl fmt::Display for FilterStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MetricKind::WorstTotal => write!(f, "{} worst_total", self.scenario),
            MetricKind::WorstPerZone { zone } => write!(f, "{} worst_per_zone[{zone}]", self.scenario),
            MetricKind::AvgWeighted => write!(f, "{} avg_weighted", self.scenario),
            MetricKind::BackupAvg => write!(f, "{} backup_avg", self.scenario),
        }
    }
}

/// Scenario-major basic steps: worst total, then each AC zone in order.
pub fn basic_steps(ev: &Evaluator) -> Vec<FilterStep> {
    let mut steps = Vec::new();
    for s in 0..ev.scenario_count() {
        let name = ev.scenario_name(s);
        steps.push(FilterStep::new(MetricKind::WorstTotal, name));
        for zone in ev.zones() {
            steps.push(FilterStep::new(MetricKind::WorstPerZone { zone: zone.clone() }, name));
        }
    }
    steps
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Basic,
    Avg,
    Backup,
    AvgThenBackup,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Basic => "basic",
            Branch::Avg => "basic+avg",
            Branch::Backup => "basic+backup",
            Branch::AvgThenBackup => "basic+avg+backup",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchMode {
    /// Each additional metric filters the basic survivors on its own.
    #[default]
    Parallel,
    /// Average, then backup, as one chain.
    Sequential,
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    /// Basic steps; `None` for [`basic_steps`].
    pub basic: Option<Vec<FilterStep>>,
    /// Scenario of the additional metrics; `None` for the first scenario.
    pub branch_scenario: Option<String>,
    pub avg: bool,
    pub backup: bool,
    pub mode: BranchMode,
    pub prune: PruneRules,
    pub limits: EnumerationLimits,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            basic: None,
            branch_scenario: None,
            avg: true,
            backup: true,
            mode: BranchMode::Parallel,
            prune: PruneRules::ALL,
            limits: EnumerationLimits::default(),
            workers: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Survivor {
    pub config: Configuration,
    pub canonical: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShortlistResult {
    pub branch: Branch,
    pub steps: Vec<FilterStep>,
    /// Survivors after each step.
    pub step_counts: Vec<u64>,
    /// Step values shared by every survivor.
    pub values: Vec<Power>,
    pub survivors: Vec<Survivor>,
}

impl ShortlistResult {
    pub fn configurations(&self) -> Vec<Configuration> {
        self.survivors.iter().map(|s| s.config.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PipelineResult {
    pub breakers: usize,
    pub enumerated: u64,
    pub basic: ShortlistResult,
    pub branches: Vec<ShortlistResult>,
}

impl PipelineResult {
    /// The most filtered shortlist: the average branch when present, else
    /// the first branch, else the basic survivors.
    pub fn final_shortlist(&self) -> &ShortlistResult {
        self.branch(Branch::Avg)
            .or_else(|| self.branch(Branch::AvgThenBackup))
            .or_else(|| self.branches.first())
            .unwrap_or(&self.basic)
    }

    pub fn branch(&self, branch: Branch) -> Option<&ShortlistResult> {
        self.branches.iter().find(|b| b.branch == branch)
    }
}

#[derive(Clone, Copy, Debug)]
enum Metric {
    WorstTotal,
    WorstZone(usize),
    Avg,
    Backup,
}

#[derive(Clone, Copy, Debug)]
struct Compiled {
    metric: Metric,
    scenario: usize,
}

fn compile(ev: &Evaluator, steps: &[FilterStep]) -> Result<Vec<Compiled>> {
    steps
        .iter()
        .map(|step| {
            let scenario = ev.scenario_index(&step.scenario)?;
            let metric = match &step.kind {
                MetricKind::WorstTotal => Metric::WorstTotal,
                MetricKind::WorstPerZone { zone } => Metric::WorstZone(
                    ev.zones()
                        .iter()
                        .position(|z| z == zone)
                        .ok_or_else(|| Error::UnknownZone(zone.clone()))?,
                ),
                MetricKind::AvgWeighted => Metric::Avg,
                MetricKind::BackupAvg => Metric::Backup,
            };
            Ok(Compiled { metric, scenario })
        })
        .collect()
}

/// Step values of one configuration, computed on demand.
struct Lazy<'a> {
    ev: &'a Evaluator,
    config: &'a Configuration,
    tables: Vec<Option<FaultTable>>,
}

impl Lazy<'_> {
    fn value(&mut self, ws: &mut Workspace, step: Compiled) -> Result<Power> {
        let (ev, config) = (self.ev, self.config);
        if let Metric::Backup = step.metric {
            return Ok(ev.backup_avg(ws, config, step.scenario));
        }
        let table = self.tables[step.scenario].get_or_insert_with(|| ev.fault_table(ws, config, step.scenario));
        let model = ev.model();
        Ok(match step.metric {
            Metric::WorstTotal => model.to_power(table.total.iter().copied().max().unwrap_or(0)),
            Metric::WorstZone(z) => model.to_power(table.loss.iter().map(|l| l[z]).max().unwrap_or(0)),
            Metric::Avg => ev.avg_weighted_of(table, config)?,
            Metric::Backup => unreachable!(),
        })
    }
}

/// Lexicographic-minimum accumulator. `counts[k]` is the number of inputs
/// whose first `k + 1` step values equal the best vector's.
#[derive(Clone, Debug, Default)]
struct Accumulator {
    best: Vec<Power>,
    counts: Vec<u64>,
    seen: u64,
    survivors: Vec<Configuration>,
}

impl Accumulator {
    fn push(&mut self, ev: &Evaluator, ws: &mut Workspace, steps: &[Compiled], config: Configuration) -> Result<()> {
        self.seen += 1;
        let mut lazy = Lazy {
            ev,
            config: &config,
            tables: vec![None; ev.scenario_count()],
        };
        if self.seen == 1 {
            self.best = steps.iter().map(|&s| lazy.value(ws, s)).collect::<Result<_>>()?;
            self.counts = vec![1; steps.len()];
            self.survivors = vec![config];
            return Ok(());
        }
        for (k, &step) in steps.iter().enumerate() {
            let v = lazy.value(ws, step)?;
            match v.cmp(&self.best[k]) {
                std::cmp::Ordering::Equal => self.counts[k] += 1,
                std::cmp::Ordering::Greater => return Ok(()),
                std::cmp::Ordering::Less => {
                    self.best[k] = v;
                    for j in k + 1..steps.len() {
                        self.best[j] = lazy.value(ws, steps[j])?;
                    }
                    self.counts[k..].iter_mut().for_each(|c| *c = 1);
                    self.survivors = vec![config];
                    return Ok(());
                }
            }
        }
        self.survivors.push(config);
        Ok(())
    }

    /// Combines the results of two consecutive stretches of the stream.
    fn merge(mut self, other: Accumulator) -> Accumulator {
        if other.seen == 0 {
            return self;
        }
        if self.seen == 0 {
            return other;
        }
        let seen = self.seen + other.seen;
        let d = (0..self.best.len())
            .find(|&k| self.best[k] != other.best[k])
            .unwrap_or(self.best.len());
        let mut out = if d < self.best.len() && other.best[d] < self.best[d] {
            let mut o = other;
            for k in 0..d {
                o.counts[k] += self.counts[k];
            }
            o
        } else {
            for k in 0..d {
                self.counts[k] += other.counts[k];
            }
            if d == self.best.len() {
                self.survivors.extend(other.survivors);
            }
            self
        };
        out.seen = seen;
        out
    }
}

const CHUNK: usize = 512;
const BATCH: usize = 64;

fn reduce(
    ev: &Evaluator,
    steps: &[Compiled],
    mut configs: impl Iterator<Item = Configuration>,
) -> Result<Accumulator> {
    let mut acc = Accumulator::default();
    loop {
        let mut batch: Vec<Vec<Configuration>> = Vec::with_capacity(BATCH);
        for _ in 0..BATCH {
            let chunk: Vec<Configuration> = configs.by_ref().take(CHUNK).collect();
            if chunk.is_empty() {
                break;
            }
            batch.push(chunk);
        }
        if batch.is_empty() {
            return Ok(acc);
        }
        let parts: Vec<Result<Accumulator>> = batch
            .into_par_iter()
            .map(|chunk| {
                let mut ws = Workspace::default();
                let mut part = Accumulator::default();
                for config in chunk {
                    part.push(ev, &mut ws, steps, config)?;
                }
                Ok(part)
            })
            .collect();
        for part in parts {
            acc = acc.merge(part?);
        }
    }
}

fn filter(
    ev: &Evaluator,
    branch: Branch,
    steps: Vec<FilterStep>,
    configs: impl Iterator<Item = Configuration>,
) -> Result<(u64, ShortlistResult)> {
    let compiled = compile(ev, &steps)?;
    let acc = reduce(ev, &compiled, configs)?;
    if acc.seen == 0 {
        return Err(Error::EmptyEnumeration);
    }
    let elements = ev.model().elements();
    let survivors = acc
        .survivors
        .into_iter()
        .map(|config| Survivor {
            canonical: config.canonical_string(elements),
            config,
        })
        .collect();
    Ok((
        acc.seen,
        ShortlistResult {
            branch,
            steps,
            step_counts: acc.counts,
            values: acc.best,
            survivors,
        },
    ))
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Overflow(format!("worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Runs the basic steps over every pruned configuration with `n_cb`
/// breakers, then the additional-metric branches over the survivors.
pub fn run_pipeline(ev: &Evaluator, n_cb: usize, options: &PipelineOptions) -> Result<PipelineResult> {
    with_pool(options.workers, || run_pipeline_inner(ev, n_cb, options))?
}

fn run_pipeline_inner(ev: &Evaluator, n_cb: usize, options: &PipelineOptions) -> Result<PipelineResult> {
    let basic_steps = options.basic.clone().unwrap_or_else(|| basic_steps(ev));
    let stream = enumerate_with_limits(ev.spec(), n_cb, options.prune, options.limits)?;
    let (enumerated, basic) = filter(ev, Branch::Basic, basic_steps, stream)?;

    let scenario = match &options.branch_scenario {
        Some(name) => {
            ev.scenario_index(name)?;
            name.clone()
        }
        None => ev.scenario_name(0).to_string(),
    };
    let avg = FilterStep::new(MetricKind::AvgWeighted, &scenario);
    let backup = FilterStep::new(MetricKind::BackupAvg, &scenario);
    let mut plans = Vec::new();
    match options.mode {
        BranchMode::Parallel => {
            if options.avg {
                plans.push((Branch::Avg, vec![avg]));
            }
            if options.backup {
                plans.push((Branch::Backup, vec![backup]));
            }
        }
        BranchMode::Sequential => match (options.avg, options.backup) {
            (true, true) => plans.push((Branch::AvgThenBackup, vec![avg, backup])),
            (true, false) => plans.push((Branch::Avg, vec![avg])),
            (false, true) => plans.push((Branch::Backup, vec![backup])),
            (false, false) => {}
        },
    }
    let branches = plans
        .into_iter()
        .map(|(branch, steps)| Ok(filter(ev, branch, steps, basic.configurations().into_iter())?.1))
        .collect::<Result<_>>()?;
    Ok(PipelineResult {
        breakers: n_cb,
        enumerated,
        basic,
        branches,
    })
}

/// Smallest worst-case total loss achievable in every scenario at once: the
/// minimum over configurations of the maximum over scenarios.
pub fn minimax_worst(ev: &Evaluator, n_cb: usize, options: &PipelineOptions) -> Result<Power> {
    with_pool(options.workers, || minimax_inner(ev, n_cb, options))?
}

fn minimax_inner(ev: &Evaluator, n_cb: usize, options: &PipelineOptions) -> Result<Power> {
    let mut stream = enumerate_with_limits(ev.spec(), n_cb, options.prune, options.limits)?;
    let mut best: Option<i64> = None;
    loop {
        let batch: Vec<Vec<Configuration>> = (0..BATCH)
            .map(|_| stream.by_ref().take(CHUNK).collect::<Vec<_>>())
            .take_while(|c| !c.is_empty())
            .collect();
        if batch.is_empty() {
            break;
        }
        let bound = best;
        let part = batch
            .into_par_iter()
            .map(|chunk| {
                let mut ws = Workspace::default();
                let mut local = bound;
                for config in &chunk {
                    let mut worst = 0;
                    for s in 0..ev.scenario_count() {
                        let table = ev.fault_table(&mut ws, config, s);
                        worst = worst.max(table.total.iter().copied().max().unwrap_or(0));
                        if local.is_some_and(|b| worst >= b) {
                            break;
                        }
                    }
                    if local.map_or(true, |b| worst < b) {
                        local = Some(worst);
                    }
                }
                local
            })
            .reduce(|| None, |a, b| a.into_iter().chain(b).min());
        best = best.into_iter().chain(part).min();
    }
    best.map(|b| ev.model().to_power(b)).ok_or(Error::EmptyEnumeration)
}

/// Element-by-element count of survivors placing both elements in the same
/// protection zone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeatMap {
    pub elements: Vec<String>,
    pub co_zone_counts: Vec<Vec<u64>>,
    pub total_configs: u64,
}

impl HeatMap {
    pub fn entry(&self, a: &str, b: &str) -> Option<u64> {
        let i = self.elements.iter().position(|e| e == a)?;
        let j = self.elements.iter().position(|e| e == b)?;
        Some(self.co_zone_counts[i][j])
    }
}

pub fn heat_map(spec: &NetworkSpec, survivors: &[Configuration]) -> HeatMap {
    let elements = HubElements::from_spec(spec);
    let n = elements.len();
    let mut counts = vec![vec![0u64; n]; n];
    for config in survivors {
        for i in 0..n {
            for j in 0..n {
                if config.assignment[i] == config.assignment[j] {
                    counts[i][j] += 1;
                }
            }
        }
    }
    HeatMap {
        elements: elements.ids.iter().map(|e| e.to_string()).collect(),
        co_zone_counts: counts,
        total_configs: survivors.len() as u64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Principle {
    /// Cables to the same AC zone sit in different protection zones.
    SameZoneCablesSeparated,
    /// All hub converters sit in different protection zones.
    ConvertersSeparated,
    /// Every cable to the first AC zone shares a zone with a hub converter.
    FirstZoneWithConverter,
    /// Cables to the first AC zone share no zone with other cables.
    FirstZoneIsolated,
}

impl Principle {
    pub const ALL: [Principle; 4] = [
        Principle::SameZoneCablesSeparated,
        Principle::ConvertersSeparated,
        Principle::FirstZoneWithConverter,
        Principle::FirstZoneIsolated,
    ];

    pub fn number(self) -> usize {
        Principle::ALL.iter().position(|&p| p == self).expect("listed") + 1
    }

    pub fn holds(self, elements: &HubElements, first_zone: Option<&str>, config: &Configuration) -> bool {
        let bus = |e: usize| config.assignment[e];
        let cables: Vec<usize> = elements.cables().collect();
        let converters: Vec<usize> = elements.converters().collect();
        let to_first = |e: usize| first_zone.is_some() && elements.zones[e].as_deref() == first_zone;
        let pairs = |set: &[usize], pred: &dyn Fn(usize, usize) -> bool| {
            set.iter()
                .enumerate()
                .all(|(k, &a)| set[k + 1..].iter().all(|&b| pred(a, b)))
        };
        match self {
            Principle::SameZoneCablesSeparated => pairs(&cables, &|a, b| {
                elements.zones[a] != elements.zones[b] || bus(a) != bus(b)
            }),
            Principle::ConvertersSeparated => pairs(&converters, &|a, b| bus(a) != bus(b)),
            Principle::FirstZoneWithConverter => cables
                .iter()
                .filter(|&&c| to_first(c))
                .all(|&c| converters.iter().any(|&v| bus(v) == bus(c))),
            Principle::FirstZoneIsolated => cables
                .iter()
                .filter(|&&c| to_first(c))
                .all(|&c| cables.iter().all(|&o| to_first(o) || bus(o) != bus(c))),
        }
    }
}

impl fmt::Display for Principle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Principle::SameZoneCablesSeparated => "cables to the same AC zone in separate protection zones",
            Principle::ConvertersSeparated => "hub converters in separate protection zones",
            Principle::FirstZoneWithConverter => "first-zone cables share a zone with a hub converter",
            Principle::FirstZoneIsolated => "first-zone cables separated from all other cables",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PrincipleRates {
    pub configs: u64,
    pub satisfied: BTreeMap<Principle, u64>,
}

impl PrincipleRates {
    pub fn rate(&self, p: Principle) -> Power {
        if self.configs == 0 {
            return Power::ZERO;
        }
        Power::new(self.satisfied.get(&p).copied().unwrap_or(0) as i64, self.configs as i64)
    }

    pub fn add(&mut self, other: &PrincipleRates) {
        self.configs += other.configs;
        for (&p, &n) in &other.satisfied {
            *self.satisfied.entry(p).or_default() += n;
        }
    }
}

pub fn design_principle_rates(spec: &NetworkSpec, survivors: &[Configuration]) -> PrincipleRates {
    let elements = HubElements::from_spec(spec);
    let zones = spec.ac_zones();
    let first = zones.first().map(String::as_str);
    let mut rates = PrincipleRates {
        configs: survivors.len() as u64,
        satisfied: Principle::ALL.iter().map(|&p| (p, 0)).collect(),
    };
    for config in survivors {
        for p in Principle::ALL {
            if p.holds(&elements, first, config) {
                *rates.satisfied.get_mut(&p).expect("initialised") += 1;
            }
        }
    }
    rates
}

/// Equal weight per breaker count: the mean of the per-count rates.
pub fn mean_rate(per_count: &[PrincipleRates], p: Principle) -> Power {
    let used: Vec<&PrincipleRates> = per_count.iter().filter(|r| r.configs > 0).collect();
    if used.is_empty() {
        return Power::ZERO;
    }
    used.iter().map(|r| r.rate(p)).sum::<Power>() / Power::from_int(used.len() as i64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Baseline {
    pub breakers: usize,
    pub report: ImpactReport,
}

/// One breaker per hub cable, converters sharing the central busbar.
pub fn fully_selective_baseline(ev: &Evaluator) -> Result<Baseline> {
    let config = Configuration::fully_selective(ev.model().elements());
    Ok(Baseline {
        breakers: config.breaker_count(),
        report: ev.report(&config)?,
    })
}

/// Number of hub cables, the breaker count of the fully selective layout.
pub fn cable_count(spec: &NetworkSpec) -> usize {
    spec.assignable_elements().iter().filter(|e| e.kind == EdgeKind::Cable).count()
}
