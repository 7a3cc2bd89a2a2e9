//! Report files and stdout summaries. Everything here is a pure function of
//! the results; wall-clock data only goes to `metadata.json`.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use gridshort::{
    mean_rate, Baseline, Evaluator, FaultScope, HeatMap, ImpactReport, LossConvention, PipelineResult, Power,
    Principle, PrincipleRates, ShortlistResult,
};
use serde::Serialize;

use crate::args::Format;

#[derive(Debug, Serialize)]
pub struct Settings {
    pub case: String,
    pub scenarios: Vec<String>,
    pub zones: Vec<String>,
    pub max_breakers: usize,
    pub pruning: bool,
    pub branches: String,
    pub branch_mode: String,
    pub loss_convention: LossConvention,
    pub fault_scope: FaultScope,
}

#[derive(Debug, Serialize)]
pub struct CountRow {
    pub breakers: usize,
    pub closed_form: u128,
    pub enumerated: Option<u64>,
    pub pruned: bool,
}

#[derive(Debug, Serialize)]
struct StageReport {
    branch: String,
    steps: Vec<String>,
    step_counts: Vec<u64>,
    values: Vec<Power>,
    survivors: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    metrics: Vec<ImpactReport>,
}

impl StageReport {
    fn new(ev: &Evaluator, result: &ShortlistResult, with_metrics: bool) -> Result<Self> {
        let metrics = if with_metrics {
            result.survivors.iter().map(|s| ev.report(&s.config)).collect::<gridshort::Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(StageReport {
            branch: result.branch.to_string(),
            steps: result.steps.iter().map(ToString::to_string).collect(),
            step_counts: result.step_counts.clone(),
            values: result.values.clone(),
            survivors: result.survivors.iter().map(|s| s.canonical.clone()).collect(),
            metrics,
        })
    }
}

#[derive(Debug, Serialize)]
struct CountReport {
    breakers: usize,
    enumerated: u64,
    basic: StageReport,
    branches: Vec<StageReport>,
}

#[derive(Debug, Serialize)]
pub struct ShortlistReport {
    settings: Settings,
    counts: Vec<CountReport>,
}

impl ShortlistReport {
    pub fn build(ev: &Evaluator, settings: Settings, results: &[PipelineResult]) -> Result<Self> {
        let counts = results
            .iter()
            .map(|r| {
                Ok(CountReport {
                    breakers: r.breakers,
                    enumerated: r.enumerated,
                    basic: StageReport::new(ev, &r.basic, r.branches.is_empty())?,
                    branches: r.branches.iter().map(|b| StageReport::new(ev, b, true)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(ShortlistReport { settings, counts })
    }
}

fn emit_json(text: String) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn csv_file(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

fn decimal(p: Power) -> String {
    format!("{:.4}", p.to_f64())
}

pub fn write_counts(dir: &Path, rows: &[CountRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv_file(&dir.join("counts.csv"))?;
    write_count_rows(&mut w, rows)?;
    w.flush()?;
    Ok(())
}

fn write_count_rows<W: Write>(w: &mut csv::Writer<W>, rows: &[CountRow]) -> Result<()> {
    w.write_record(["breakers", "closed_form", "enumerated", "pruning"])?;
    for r in rows {
        w.write_record([
            r.breakers.to_string(),
            r.closed_form.to_string(),
            r.enumerated.map(|n| n.to_string()).unwrap_or_default(),
            if r.pruned { "on" } else { "off" }.to_string(),
        ])?;
    }
    Ok(())
}

pub fn print_counts(rows: &[CountRow], format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            write_count_rows(&mut w, rows)?;
            w.flush()?;
        }
        Format::Json => emit_json(serde_json::to_string_pretty(rows)?)?,
    }
    Ok(())
}

pub fn write_steps(path: &Path, results: &[PipelineResult]) -> Result<()> {
    let mut w = csv_file(path)?;
    w.write_record(["breakers", "branch", "index", "step", "count", "value"])?;
    for r in results {
        for stage in std::iter::once(&r.basic).chain(&r.branches) {
            for (i, step) in stage.steps.iter().enumerate() {
                w.write_record([
                    r.breakers.to_string(),
                    stage.branch.to_string(),
                    (i + 1).to_string(),
                    step.to_string(),
                    stage.step_counts[i].to_string(),
                    stage.values[i].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_heatmap_rows<W: Write>(w: &mut csv::Writer<W>, maps: &[(usize, HeatMap)]) -> Result<()> {
    let Some((_, first)) = maps.first() else {
        return Ok(());
    };
    let mut header = vec!["breakers".to_string(), "configs".to_string(), "element".to_string()];
    header.extend(first.elements.iter().cloned());
    w.write_record(&header)?;
    for (n, map) in maps {
        for (i, row) in map.co_zone_counts.iter().enumerate() {
            let mut record = vec![n.to_string(), map.total_configs.to_string(), map.elements[i].clone()];
            record.extend(row.iter().map(ToString::to_string));
            w.write_record(&record)?;
        }
    }
    Ok(())
}

pub fn write_heatmaps(path: &Path, maps: &[(usize, HeatMap)]) -> Result<()> {
    let mut w = csv_file(path)?;
    write_heatmap_rows(&mut w, maps)?;
    w.flush()?;
    Ok(())
}

pub fn print_heatmap(map: &HeatMap, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            let mut header = vec!["element".to_string()];
            header.extend(map.elements.iter().cloned());
            w.write_record(&header)?;
            for (i, row) in map.co_zone_counts.iter().enumerate() {
                let mut record = vec![map.elements[i].clone()];
                record.extend(row.iter().map(ToString::to_string));
                w.write_record(&record)?;
            }
            w.flush()?;
        }
        Format::Json => emit_json(serde_json::to_string_pretty(map)?)?,
    }
    Ok(())
}

/// One row per breaker count and principle, then the pooled rate (every
/// survivor weighted equally) and the mean over breaker counts.
pub fn write_principles(path: &Path, per_count: &[(usize, PrincipleRates)]) -> Result<()> {
    let mut w = csv_file(path)?;
    w.write_record(["scope", "configs", "principle", "satisfied", "rate", "rate_decimal"])?;
    let mut pooled = PrincipleRates::default();
    for (n, rates) in per_count {
        pooled.add(rates);
        for p in Principle::ALL {
            let rate = rates.rate(p);
            w.write_record([
                n.to_string(),
                rates.configs.to_string(),
                p.number().to_string(),
                rates.satisfied.get(&p).copied().unwrap_or(0).to_string(),
                rate.to_string(),
                decimal(rate),
            ])?;
        }
    }
    let all: Vec<PrincipleRates> = per_count.iter().map(|(_, r)| r.clone()).collect();
    for p in Principle::ALL {
        let rate = pooled.rate(p);
        w.write_record([
            "pooled".to_string(),
            pooled.configs.to_string(),
            p.number().to_string(),
            pooled.satisfied.get(&p).copied().unwrap_or(0).to_string(),
            rate.to_string(),
            decimal(rate),
        ])?;
    }
    for p in Principle::ALL {
        let rate = mean_rate(&all, p);
        w.write_record([
            "mean".to_string(),
            String::new(),
            p.number().to_string(),
            String::new(),
            rate.to_string(),
            decimal(rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn print_shortlist_summary(results: &[PipelineResult], format: Format) -> Result<()> {
    #[derive(Serialize)]
    struct Line {
        breakers: usize,
        enumerated: u64,
        basic_survivors: usize,
        final_branch: String,
        final_survivors: usize,
        worst_total: Power,
        branch_values: Vec<Power>,
    }
    let lines: Vec<Line> = results
        .iter()
        .map(|r| {
            let fin = r.final_shortlist();
            Line {
                breakers: r.breakers,
                enumerated: r.enumerated,
                basic_survivors: r.basic.survivors.len(),
                final_branch: fin.branch.to_string(),
                final_survivors: fin.survivors.len(),
                worst_total: r.basic.values[0],
                branch_values: r.branches.iter().flat_map(|b| b.values.iter().copied()).collect(),
            }
        })
        .collect();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record([
                "breakers",
                "enumerated",
                "basic_survivors",
                "final_branch",
                "final_survivors",
                "worst_total",
                "branch_values",
            ])?;
            for l in &lines {
                w.write_record([
                    l.breakers.to_string(),
                    l.enumerated.to_string(),
                    l.basic_survivors.to_string(),
                    l.final_branch.clone(),
                    l.final_survivors.to_string(),
                    l.worst_total.to_string(),
                    l.branch_values.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => emit_json(serde_json::to_string_pretty(&lines)?)?,
    }
    Ok(())
}

pub fn print_baseline(baseline: &Baseline, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["breakers", "scenario", "worst_total", "avg_weighted", "backup_avg", "worst_fault"])?;
            for s in &baseline.report.per_scenario {
                w.write_record([
                    baseline.breakers.to_string(),
                    s.scenario.clone(),
                    s.worst_total.to_string(),
                    s.avg_weighted.to_string(),
                    s.backup_avg.to_string(),
                    s.worst_fault.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => emit_json(serde_json::to_string_pretty(baseline)?)?,
    }
    Ok(())
}

pub fn write_metadata(dir: &Path, command: &str, started: u64, finished: u64) -> Result<()> {
    #[derive(Serialize)]
    struct Metadata<'a> {
        tool: &'a str,
        version: &'a str,
        command: &'a str,
        args: Vec<String>,
        started_unix: u64,
        finished_unix: u64,
    }
    std::fs::create_dir_all(dir)?;
    write_json(
        &dir.join("metadata.json"),
        &Metadata {
            tool: "gridshort",
            version: env!("CARGO_PKG_VERSION"),
            command,
            args: std::env::args().skip(1).collect(),
            started_unix: started,
            finished_unix: finished,
        },
    )
}
