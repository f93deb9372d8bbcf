//! Aggregation of run results into summary tables, box-plot statistics,
//! heatmaps and raw exports.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::AgentId;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::risk::RiskEvent;
use crate::sim::RunResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub stdev: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::EmptyInput("summarize needs at least one value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    // whiskers reach the most extreme observation within 1.5 IQR of the box
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let lower_whisker = sorted
        .iter()
        .copied()
        .find(|&v| v >= lo_fence)
        .unwrap_or(q1)
        .min(q1);
    let upper_whisker = sorted
        .iter()
        .rev()
        .copied()
        .find(|&v| v <= hi_fence)
        .unwrap_or(q3)
        .max(q3);
    Ok(SummaryStats {
        count: sorted.len(),
        mean,
        stdev: var.sqrt(),
        median,
        q1,
        q3,
        lower_whisker,
        upper_whisker,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    pub event_count: usize,
    pub mean_rf: f64,
    pub max_rf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapGrid {
    pub origin: Vec2,
    pub cell_size: f64,
    pub cells: BTreeMap<(i64, i64), HeatCell>,
}

impl HeatmapGrid {
    pub fn cell_of(&self, p: Vec2) -> (i64, i64) {
        (
            ((p.x - self.origin.x) / self.cell_size).floor() as i64,
            ((p.y - self.origin.y) / self.cell_size).floor() as i64,
        )
    }

    /// Lower-left and upper-right corners of a cell.
    pub fn cell_bounds(&self, (i, j): (i64, i64)) -> (Vec2, Vec2) {
        let lo = self.origin + Vec2::new(i as f64, j as f64) * self.cell_size;
        (lo, lo + Vec2::new(self.cell_size, self.cell_size))
    }

    pub fn total_events(&self) -> usize {
        self.cells.values().map(|c| c.event_count).sum()
    }
}

/// Bins events by ego position on a grid anchored at the world origin.
pub fn build_heatmap(events: &[RiskEvent], cell_size: f64) -> Result<HeatmapGrid> {
    if !(cell_size > 0.0) {
        return Err(Error::Config(format!(
            "heatmap cell size {cell_size} must be positive"
        )));
    }
    let mut grid = HeatmapGrid {
        origin: Vec2::ZERO,
        cell_size,
        cells: BTreeMap::new(),
    };
    let mut sums: BTreeMap<(i64, i64), (usize, f64, f64)> = BTreeMap::new();
    for e in events {
        let s = sums
            .entry(grid.cell_of(e.ego_position))
            .or_insert((0, 0.0, f64::NEG_INFINITY));
        s.0 += 1;
        s.1 += e.risk_factor;
        s.2 = s.2.max(e.risk_factor);
    }
    grid.cells = sums
        .into_iter()
        .map(|(k, (n, sum, max))| {
            (
                k,
                HeatCell {
                    event_count: n,
                    mean_rf: sum / n as f64,
                    max_rf: max,
                },
            )
        })
        .collect();
    Ok(grid)
}

/// One row of the per-location table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationSummary {
    pub location_id: u32,
    pub rate: f64,
    pub seed: u64,
    pub recordings: usize,
    pub duration_s: f64,
    pub vehicle_count: usize,
    pub vru_count: usize,
    pub incidences: usize,
    pub mean_rf: Option<f64>,
    pub stdev_rf: Option<f64>,
}

/// Table rows per (location, rate, seed), in that order.
pub fn location_summaries(results: &[RunResult]) -> Vec<LocationSummary> {
    let mut groups: BTreeMap<(u32, u64, u64), Vec<&RunResult>> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.meta.location_id, r.meta.rate.to_bits(), r.meta.seed))
            .or_default()
            .push(r);
    }
    let mut rows: Vec<LocationSummary> = groups
        .into_values()
        .map(|runs| {
            let m = &runs[0].meta;
            let rfs: Vec<f64> = runs
                .iter()
                .flat_map(|r| r.events.iter().map(|e| e.risk_factor))
                .collect();
            let stats = summarize(&rfs).ok();
            LocationSummary {
                location_id: m.location_id,
                rate: m.rate,
                seed: m.seed,
                recordings: runs.len(),
                duration_s: runs.iter().map(|r| r.meta.duration_s).sum(),
                vehicle_count: runs.iter().map(|r| r.meta.vehicle_count).sum(),
                vru_count: runs.iter().map(|r| r.meta.vru_count).sum(),
                incidences: rfs.len(),
                mean_rf: stats.map(|s| s.mean),
                stdev_rf: stats.map(|s| s.stdev),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.location_id, a.rate, a.seed)
            .partial_cmp(&(b.location_id, b.rate, b.seed))
            .expect("finite rates")
    });
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedStats {
    pub seed: u64,
    pub rf: Option<SummaryStats>,
    pub ear: Option<SummaryStats>,
}

/// Box-plot data for one penetration rate: pooled over every recording and
/// seed, and per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStats {
    pub rate: f64,
    pub rf: Option<SummaryStats>,
    pub ear: Option<SummaryStats>,
    pub per_seed: Vec<SeedStats>,
}

pub fn rate_stats(results: &[RunResult]) -> Vec<RateStats> {
    let mut by_rate: BTreeMap<u64, BTreeMap<u64, Vec<&RunResult>>> = BTreeMap::new();
    for r in results {
        by_rate
            .entry(r.meta.rate.to_bits())
            .or_default()
            .entry(r.meta.seed)
            .or_default()
            .push(r);
    }
    let rf = |runs: &[&RunResult]| {
        let v: Vec<f64> = runs
            .iter()
            .flat_map(|r| r.events.iter().map(|e| e.risk_factor))
            .collect();
        summarize(&v).ok()
    };
    let ear = |runs: &[&RunResult]| {
        let v: Vec<f64> = runs
            .iter()
            .flat_map(|r| r.ear_samples.iter().map(|s| s.value))
            .collect();
        summarize(&v).ok()
    };
    let mut out: Vec<RateStats> = by_rate
        .into_iter()
        .map(|(bits, seeds)| {
            let all: Vec<&RunResult> = seeds.values().flatten().copied().collect();
            RateStats {
                rate: f64::from_bits(bits),
                rf: rf(&all),
                ear: ear(&all),
                per_seed: seeds
                    .iter()
                    .map(|(&seed, runs)| SeedStats {
                        seed,
                        rf: rf(runs),
                        ear: ear(runs),
                    })
                    .collect(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.rate.total_cmp(&b.rate));
    out
}

/// Format of the raw event and EAR exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::Config(format!(
                "unknown format {other:?} (csv|json)"
            ))),
        }
    }
}

pub const EVENTS_CSV: &str = "events.csv";
pub const EAR_CSV: &str = "ear.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const HEATMAP_CSV: &str = "heatmap.csv";
pub const BOXPLOT_JSON: &str = "boxplot.json";
pub const RUNS_DIR: &str = "runs";

const EVENT_HEADER: [&str; 13] = [
    "recording_id",
    "location_id",
    "rate",
    "seed",
    "frame",
    "ego_id",
    "vru_id",
    "ego_x",
    "ego_y",
    "vru_x",
    "vru_y",
    "risk_time",
    "risk_factor",
];

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn opt6(v: Option<f64>) -> String {
    v.map(f6).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_events_csv(path: &Path, events: &[RiskEvent]) -> Result<()> {
    write_rows(
        path,
        &EVENT_HEADER,
        events.iter().map(|e| {
            vec![
                e.recording_id.to_string(),
                e.location_id.to_string(),
                f6(e.penetration_rate),
                e.seed.to_string(),
                e.frame.to_string(),
                e.ego_id.to_string(),
                e.vru_id.to_string(),
                f6(e.ego_position.x),
                f6(e.ego_position.y),
                f6(e.vru_position.x),
                f6(e.vru_position.y),
                f6(e.risk_time),
                f6(e.risk_factor),
            ]
        }),
    )
}

pub fn read_events_csv(path: &Path) -> Result<Vec<RiskEvent>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().ne(EVENT_HEADER.iter().copied()) {
        return Err(Error::schema(path, "unexpected events header"));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = |col: usize| {
            Error::schema(
                path,
                format!("row {}: cannot parse {}", line + 2, EVENT_HEADER[col]),
            )
        };
        let num = |col: usize| rec[col].parse::<f64>().map_err(|_| bad(col));
        let int = |col: usize| rec[col].parse::<u64>().map_err(|_| bad(col));
        out.push(RiskEvent {
            recording_id: int(0)? as u32,
            location_id: int(1)? as u32,
            penetration_rate: num(2)?,
            seed: int(3)?,
            frame: int(4)? as u32,
            ego_id: AgentId(int(5)? as u32),
            vru_id: AgentId(int(6)? as u32),
            ego_position: Vec2::new(num(7)?, num(8)?),
            vru_position: Vec2::new(num(9)?, num(10)?),
            risk_time: num(11)?,
            risk_factor: num(12)?,
        });
    }
    Ok(out)
}

fn write_ear_csv(path: &Path, results: &[RunResult]) -> Result<()> {
    write_rows(
        path,
        &[
            "recording_id",
            "location_id",
            "rate",
            "seed",
            "frame",
            "ego_id",
            "ear",
        ],
        results.iter().flat_map(|r| {
            r.ear_samples.iter().map(move |s| {
                vec![
                    r.meta.recording_id.to_string(),
                    r.meta.location_id.to_string(),
                    f6(r.meta.rate),
                    r.meta.seed.to_string(),
                    s.frame.to_string(),
                    s.ego_id.to_string(),
                    f6(s.value),
                ]
            })
        }),
    )
}

fn write_heatmap_csv(path: &Path, results: &[RunResult], cell_size: f64) -> Result<()> {
    let mut groups: BTreeMap<(u32, u64), Vec<RiskEvent>> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.meta.location_id, r.meta.rate.to_bits()))
            .or_default()
            .extend(r.events.iter().cloned());
    }
    let mut rows = Vec::new();
    for ((location, rate_bits), events) in groups {
        let grid = build_heatmap(&events, cell_size)?;
        for (&(i, j), c) in &grid.cells {
            let (lo, hi) = grid.cell_bounds((i, j));
            rows.push(vec![
                location.to_string(),
                f6(f64::from_bits(rate_bits)),
                i.to_string(),
                j.to_string(),
                f6(lo.x),
                f6(lo.y),
                f6(hi.x),
                f6(hi.y),
                c.event_count.to_string(),
                f6(c.mean_rf),
                f6(c.max_rf),
            ]);
        }
    }
    write_rows(
        path,
        &[
            "location_id",
            "rate",
            "i",
            "j",
            "x_min",
            "y_min",
            "x_max",
            "y_max",
            "event_count",
            "mean_rf",
            "max_rf",
        ],
        rows,
    )
}

fn write_summary(dir: &Path, results: &[RunResult]) -> Result<()> {
    let rows = location_summaries(results);
    write_rows(
        &dir.join(SUMMARY_CSV),
        &[
            "location_id",
            "rate",
            "seed",
            "recordings",
            "duration_s",
            "vehicle_count",
            "vru_count",
            "incidences",
            "mean_rf",
            "stdev_rf",
        ],
        rows.iter().map(|s| {
            vec![
                s.location_id.to_string(),
                f6(s.rate),
                s.seed.to_string(),
                s.recordings.to_string(),
                f6(s.duration_s),
                s.vehicle_count.to_string(),
                s.vru_count.to_string(),
                s.incidences.to_string(),
                opt6(s.mean_rf),
                opt6(s.stdev_rf),
            ]
        }),
    )?;
    write_json(&dir.join(SUMMARY_JSON), &rows)
}

/// Events of all runs, ordered by run then frame.
pub fn all_events(results: &[RunResult]) -> Vec<RiskEvent> {
    results
        .iter()
        .flat_map(|r| r.events.iter().cloned())
        .collect()
}

/// Writes every aggregate and raw export into `dir`; returns the paths.
pub fn export(
    results: &[RunResult],
    dir: &Path,
    format: ExportFormat,
    cell_size: f64,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let events = all_events(results);
    let mut written = Vec::new();
    match format {
        ExportFormat::Csv => {
            let p = dir.join(EVENTS_CSV);
            write_events_csv(&p, &events)?;
            written.push(p);
            let p = dir.join(EAR_CSV);
            write_ear_csv(&p, results)?;
            written.push(p);
        }
        ExportFormat::Json => {
            let p = dir.join("events.json");
            write_json(&p, &events)?;
            written.push(p);
            let samples: Vec<_> = results
                .iter()
                .flat_map(|r| {
                    r.ear_samples.iter().map(move |s| {
                        serde_json::json!({
                            "recording_id": r.meta.recording_id,
                            "location_id": r.meta.location_id,
                            "rate": r.meta.rate,
                            "seed": r.meta.seed,
                            "frame": s.frame,
                            "ego_id": s.ego_id,
                            "ear": s.value,
                        })
                    })
                })
                .collect();
            let p = dir.join("ear.json");
            write_json(&p, &samples)?;
            written.push(p);
        }
    }
    write_summary(dir, results)?;
    written.push(dir.join(SUMMARY_CSV));
    written.push(dir.join(SUMMARY_JSON));
    let p = dir.join(HEATMAP_CSV);
    write_heatmap_csv(&p, results, cell_size)?;
    written.push(p);
    let p = dir.join(BOXPLOT_JSON);
    write_json(&p, &rate_stats(results))?;
    written.push(p);
    Ok(written)
}

fn run_file_name(r: &RunResult) -> String {
    format!(
        "rec{:02}_rate{:03}_seed{}.json",
        r.meta.recording_id,
        (r.meta.rate * 100.0).round() as u32,
        r.meta.seed
    )
}

/// Saves each run under `dir/runs/` at full precision.
pub fn save_runs(results: &[RunResult], dir: &Path) -> Result<Vec<PathBuf>> {
    let runs = dir.join(RUNS_DIR);
    fs::create_dir_all(&runs).map_err(|e| Error::io(&runs, e))?;
    results
        .iter()
        .map(|r| {
            let p = runs.join(run_file_name(r));
            write_json(&p, r)?;
            Ok(p)
        })
        .collect()
}

/// Loads runs saved by `save_runs`, from `dir/runs/` or `dir` itself.
pub fn load_runs(dir: &Path) -> Result<Vec<RunResult>> {
    let runs = dir.join(RUNS_DIR);
    let src = if runs.is_dir() {
        runs
    } else {
        dir.to_path_buf()
    };
    let entries = fs::read_dir(&src).map_err(|e| Error::io(&src, e))?;
    let mut paths = BTreeSet::new();
    for entry in entries {
        let p = entry.map_err(|e| Error::io(&src, e))?.path();
        if p.extension().is_some_and(|x| x == "json")
            && p.file_name()
                .is_some_and(|n| n.to_string_lossy().starts_with("rec"))
        {
            paths.insert(p);
        }
    }
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::schema(&p, format!("not a run result: {e}")))
        })
        .collect()
}
