use std::path::Path;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use gridshort::{
    build_test_case, count_closed_form, design_principle_rates, enumerate_with_limits, fully_selective_baseline,
    heat_map, run_pipeline, BranchMode, EnumerationLimits, Error, Evaluator, FaultScope, LossConvention,
    NetworkSpec, PipelineOptions, PipelineResult, PowerFlowScenario, PruneRules, TestCase,
};

use crate::args::{Branches, Convention, Mode, RunConfig, Scope};
use crate::report::{self, CountRow, Settings, ShortlistReport};

fn load_network(case: &str) -> Result<(String, NetworkSpec, Vec<PowerFlowScenario>)> {
    if let Ok(which) = TestCase::from_str(case) {
        let (spec, scenarios) = build_test_case(which);
        return Ok((which.name().to_string(), spec, scenarios));
    }
    let path = Path::new(case);
    if !path.exists() {
        return Err(Error::UnknownCase(case.to_string()).into());
    }
    let (spec, scenarios) = NetworkSpec::load(path).with_context(|| format!("loading {}", path.display()))?;
    Ok((case.to_string(), spec, scenarios))
}

struct Session {
    case: String,
    spec: NetworkSpec,
    ev: Evaluator,
    limits: EnumerationLimits,
    options: PipelineOptions,
}

impl Session {
    fn open(run: &RunConfig) -> Result<Session> {
        let (case, spec, mut scenarios) = load_network(&run.case)?;
        if !run.scenarios.is_empty() {
            for name in &run.scenarios {
                if !scenarios.iter().any(|s| &s.name == name) {
                    return Err(Error::UnknownScenario(name.clone()).into());
                }
            }
            scenarios.retain(|s| run.scenarios.contains(&s.name));
        }
        let limits = EnumerationLimits::from_env();
        if run.max_breakers > limits.max_breakers {
            return Err(Error::BreakerLimit {
                requested: run.max_breakers,
                limit: limits.max_breakers,
            }
            .into());
        }
        let convention = match run.loss_convention {
            Convention::NetImport => LossConvention::NetImport,
            Convention::Absolute => LossConvention::Absolute,
        };
        let scope = match run.fault_scope {
            Scope::Cables => FaultScope::Cables,
            Scope::AllZones => FaultScope::AllZones,
        };
        let ev = Evaluator::new(&spec, &scenarios)?
            .with_convention(convention)
            .with_scope(scope);
        let options = PipelineOptions {
            basic: None,
            branch_scenario: run.branch_scenario.clone(),
            avg: run.branches != Branches::Backup,
            backup: run.branches != Branches::Avg,
            mode: match run.branch_mode {
                Mode::Parallel => BranchMode::Parallel,
                Mode::Sequential => BranchMode::Sequential,
            },
            prune: if run.pruning.on() { PruneRules::ALL } else { PruneRules::NONE },
            limits,
            workers: run.workers.unwrap_or(0) as usize,
        };
        Ok(Session {
            case,
            spec,
            ev,
            limits,
            options,
        })
    }

    fn settings(&self, run: &RunConfig) -> Settings {
        Settings {
            case: self.case.clone(),
            scenarios: (0..self.ev.scenario_count()).map(|s| self.ev.scenario_name(s).to_string()).collect(),
            zones: self.ev.zones().to_vec(),
            max_breakers: run.max_breakers,
            pruning: run.pruning.on(),
            branches: format!("{:?}", run.branches).to_lowercase(),
            branch_mode: format!("{:?}", run.branch_mode).to_lowercase(),
            loss_convention: self.ev.convention(),
            fault_scope: self.ev.scope(),
        }
    }

    fn pipeline(&self, n_cb: usize, oracle: bool) -> Result<PipelineResult> {
        let result = run_pipeline(&self.ev, n_cb, &self.options)?;
        if oracle {
            let checked = if result.branches.is_empty() { std::slice::from_ref(&result.basic) } else { &result.branches[..] };
            for branch in checked {
                for s in &branch.survivors {
                    self.ev.cross_check(&s.config)?;
                }
            }
        }
        Ok(result)
    }
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn finish(run: &RunConfig, command: &str, started: u64) -> Result<()> {
    if let Some(dir) = &run.output_dir {
        report::write_metadata(dir, command, started, now_unix())?;
    }
    Ok(())
}

pub fn enumerate(run: &RunConfig) -> Result<u8> {
    let started = now_unix();
    let session = Session::open(run)?;
    let mut rows = Vec::new();
    let mut refused = false;
    for n in 0..=run.max_breakers {
        let closed_form = count_closed_form(&session.spec, n)?;
        let enumerated = match enumerate_with_limits(&session.spec, n, session.options.prune, session.limits) {
            Ok(stream) => Some(stream.count() as u64),
            Err(Error::RawCountCeiling { count, ceiling }) => {
                eprintln!(
                    "warning: {n} breakers: {count} raw configurations exceed the ceiling of {ceiling}; \
                     enable pruning or raise GRIDSHORT_MAX_RAW"
                );
                refused = true;
                None
            }
            Err(e) => return Err(e.into()),
        };
        rows.push(CountRow {
            breakers: n,
            closed_form,
            enumerated,
            pruned: run.pruning.on(),
        });
    }
    report::print_counts(&rows, run.format)?;
    if let Some(dir) = &run.output_dir {
        report::write_counts(dir, &rows)?;
    }
    finish(run, "enumerate", started)?;
    Ok(if refused { 2 } else { 0 })
}

pub fn shortlist(run: &RunConfig) -> Result<u8> {
    let started = now_unix();
    let session = Session::open(run)?;
    let oracle = run.oracle_check.on();
    let results = (0..=run.max_breakers)
        .map(|n| session.pipeline(n, oracle))
        .collect::<Result<Vec<_>>>()?;
    let per_count: Vec<_> = results
        .iter()
        .filter(|r| r.breakers > 0)
        .map(|r| (r.breakers, design_principle_rates(&session.spec, &r.final_shortlist().configurations())))
        .collect();
    let baseline = fully_selective_baseline(&session.ev)?;
    if oracle {
        session
            .ev
            .cross_check(&gridshort::Configuration::fully_selective(session.ev.model().elements()))?;
    }
    let shortlist = ShortlistReport::build(&session.ev, session.settings(run), &results)?;
    report::print_shortlist_summary(&results, run.format)?;
    let dir = run.output_dir.as_deref().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    report::write_json(&dir.join("shortlist.json"), &shortlist)?;
    report::write_steps(&dir.join("steps.csv"), &results)?;
    let maps: Vec<_> = results
        .iter()
        .map(|r| (r.breakers, heat_map(&session.spec, &r.final_shortlist().configurations())))
        .collect();
    report::write_heatmaps(&dir.join("heatmap.csv"), &maps)?;
    report::write_principles(&dir.join("principles.csv"), &per_count)?;
    report::write_json(&dir.join("baseline.json"), &baseline)?;
    report::write_metadata(dir, "shortlist", started, now_unix())?;
    Ok(0)
}

pub fn baseline(run: &RunConfig) -> Result<u8> {
    let started = now_unix();
    let session = Session::open(run)?;
    let baseline = fully_selective_baseline(&session.ev)?;
    if run.oracle_check.on() {
        session
            .ev
            .cross_check(&gridshort::Configuration::fully_selective(session.ev.model().elements()))?;
    }
    report::print_baseline(&baseline, run.format)?;
    if let Some(dir) = &run.output_dir {
        std::fs::create_dir_all(dir)?;
        report::write_json(&dir.join("baseline.json"), &baseline)?;
    }
    finish(run, "baseline", started)?;
    Ok(0)
}

pub fn heatmap(run: &RunConfig) -> Result<u8> {
    let started = now_unix();
    let session = Session::open(run)?;
    let result = session.pipeline(run.max_breakers, run.oracle_check.on())?;
    let map = heat_map(&session.spec, &result.final_shortlist().configurations());
    report::print_heatmap(&map, run.format)?;
    if let Some(dir) = &run.output_dir {
        std::fs::create_dir_all(dir)?;
        report::write_heatmaps(&dir.join("heatmap.csv"), &[(run.max_breakers, map)])?;
    }
    finish(run, "heatmap", started)?;
    Ok(0)
}
