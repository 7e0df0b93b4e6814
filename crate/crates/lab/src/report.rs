//! Long-format result tables and per-report summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use featlab_core::stats::linear_fit;
use featlab_core::{bootstrap_ci, Error, Result, Rng};
use featlab_repsim::{summarize, GroupSummary, SimilarityScore};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::record::{conditions, Condition, RunRecord};
use crate::runner::jobs;

pub const REPORTS: [&str; 7] = ["tradeoff", "nonlinear", "dynamics", "similarity", "enhancement", "redundant", "correlated"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub condition: String,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
    pub record: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub block: String,
    pub condition: String,
    pub x: Option<f64>,
    pub metric: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// Least-squares line through every `(x, value)` point of a metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub block: String,
    pub metric: String,
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub condition: String,
    pub epoch: usize,
    pub metric: String,
    pub mean: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub row: String,
    pub col: String,
    pub summary: GroupSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub report: String,
    pub experiment: String,
    pub kind: ExperimentKind,
    pub config_hash: String,
    /// Ids of the contributing records.
    pub records: Vec<String>,
    pub rows: Vec<ResultRow>,
    pub summaries: Vec<SummaryRow>,
    pub fits: Vec<FitRow>,
    pub series: Vec<SeriesRow>,
    pub matrix: Vec<MatrixCell>,
}

impl ResultsTable {
    pub fn summary(&self, block: &str, condition: &str, metric: &str) -> Option<&SummaryRow> {
        self.summaries
            .iter()
            .find(|s| s.block == block && s.condition == condition && s.metric == metric)
    }

    pub fn blocks(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for s in &self.summaries {
            if !seen.contains(&s.block) {
                seen.push(s.block.clone());
            }
        }
        seen
    }

    pub fn cell(&self, row: &str, col: &str) -> Option<&GroupSummary> {
        self.matrix
            .iter()
            .find(|c| (c.row == row && c.col == col) || (c.row == col && c.col == row))
            .map(|c| &c.summary)
    }
}

type Block = (&'static str, fn(&str) -> bool);

fn blocks_for(report: &str) -> Result<Vec<Block>> {
    Ok(match report {
        "tradeoff" => vec![
            ("reliance", |m: &str| m.starts_with("reliance/")),
            ("decodability", |m: &str| m == "decode/easy" || m == "decode/hard"),
            ("units", |m: &str| m.starts_with("decode/unit")),
        ],
        "nonlinear" => vec![("nonlinear", |m: &str| m.starts_with("nonlinear/") || m.starts_with("large-linear/"))],
        "dynamics" => vec![("final", |m: &str| m.starts_with("reliance/") || m.starts_with("decode/"))],
        "similarity" => vec![("training", |m: &str| m == "train_accuracy" || m == "val_accuracy")],
        "enhancement" | "redundant" | "correlated" => vec![
            ("decodability", |m: &str| m.starts_with("decode/")),
            ("enhancement", |m: &str| m.starts_with("enhancement/")),
        ],
        other => {
            return Err(Error::config(format!(
                "unknown report `{other}`; expected one of {}",
                REPORTS.join(", ")
            )))
        }
    })
}

/// Runs of `cfg` that have no record, as `condition__sSEED` ids.
pub fn gaps(cfg: &ExperimentConfig, records: &[RunRecord]) -> Result<Vec<String>> {
    let have: BTreeSet<String> = records.iter().map(RunRecord::id).collect();
    Ok(jobs(cfg, None)?.iter().map(|j| j.id()).filter(|id| !have.contains(id)).collect())
}

pub fn build_report(cfg: &ExperimentConfig, records: &[RunRecord], report: &str) -> Result<ResultsTable> {
    let blocks = blocks_for(report)?;
    let missing = gaps(cfg, records)?;
    if !missing.is_empty() {
        return Err(Error::config(format!("records missing for: {}", missing.join(", "))));
    }
    let hash = cfg.content_hash();
    let order = conditions(cfg)?;
    let wanted: BTreeSet<String> = crate::runner::jobs(cfg, None)?.iter().map(|j| j.id()).collect();
    let records: Vec<&RunRecord> = records
        .iter()
        .filter(|r| r.config_hash == hash && wanted.contains(&r.id()))
        .collect();

    let mut rows = Vec::new();
    for r in &records {
        for (metric, &value) in &r.metrics {
            rows.push(ResultRow {
                experiment: r.experiment.clone(),
                condition: r.condition.label(),
                seed: r.seed,
                metric: metric.clone(),
                value,
                record: r.id(),
            });
        }
    }

    let root = Rng::seed_from(cfg.report.seed);
    let mut summaries = Vec::new();
    let mut fits = Vec::new();
    for (block, pick) in &blocks {
        let metrics: BTreeSet<&str> = rows.iter().map(|r| r.metric.as_str()).filter(|m| pick(m)).collect();
        for metric in &metrics {
            let mut points = Vec::new();
            for c in &order {
                let label = c.label();
                let values: Vec<f64> = records
                    .iter()
                    .filter(|r| r.condition == *c)
                    .filter_map(|r| r.metric(metric))
                    .collect();
                if values.is_empty() {
                    continue;
                }
                let mut rng = root.child_named(&format!("{label}/{metric}"));
                let s = bootstrap_ci(&values, cfg.report.resamples, &mut rng, cfg.report.level)?;
                if let Some(x) = c.x() {
                    points.extend(values.iter().map(|&v| (x, v)));
                }
                summaries.push(SummaryRow {
                    block: block.to_string(),
                    condition: label,
                    x: c.x(),
                    metric: metric.to_string(),
                    mean: s.mean,
                    ci_low: s.ci_low,
                    ci_high: s.ci_high,
                    n: s.n,
                });
            }
            let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
            if xs.iter().collect::<Vec<_>>().windows(2).any(|w| w[0] != w[1]) {
                let (slope, intercept) = linear_fit(&xs, &ys)?;
                fits.push(FitRow {
                    block: block.to_string(),
                    metric: metric.to_string(),
                    slope,
                    intercept,
                    points: xs.len(),
                });
            }
        }
    }

    let series = if report == "dynamics" { series_rows(&order, &records) } else { Vec::new() };
    let matrix = if report == "similarity" {
        similarity_matrix(cfg, &order, &records)?
    } else {
        Vec::new()
    };

    Ok(ResultsTable {
        report: report.to_string(),
        experiment: cfg.name.clone(),
        kind: cfg.kind,
        config_hash: hash,
        records: records.iter().map(|r| r.id()).collect(),
        rows,
        summaries,
        fits,
        series,
        matrix,
    })
}

fn series_rows(order: &[Condition], records: &[&RunRecord]) -> Vec<SeriesRow> {
    let mut out = Vec::new();
    for c in order {
        let mut acc: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
        for r in records.iter().filter(|r| r.condition == *c) {
            for p in &r.series {
                for (m, &v) in &p.metrics {
                    acc.entry((p.epoch, m.clone())).or_default().push(v);
                }
            }
        }
        for ((epoch, metric), v) in acc {
            out.push(SeriesRow {
                condition: c.label(),
                epoch,
                metric,
                mean: v.iter().sum::<f64>() / v.len() as f64,
                n: v.len(),
            });
        }
    }
    out
}

/// Mean similarity for every pair of conditions, diagonal included
/// (distinct seeds only).
fn similarity_matrix(cfg: &ExperimentConfig, order: &[Condition], records: &[&RunRecord]) -> Result<Vec<MatrixCell>> {
    let settings = match cfg.kind {
        ExperimentKind::BinaryRsa => &cfg.binary()?.similarity,
        ExperimentKind::VisionRsa => &cfg.vision()?.similarity,
        k => return Err(Error::config(format!("{} has no similarity scores", k.name()))),
    };
    let label_of: BTreeMap<String, String> = records.iter().map(|r| (r.id(), r.condition.label())).collect();
    let mut unique: BTreeMap<(String, String), SimilarityScore> = BTreeMap::new();
    for r in records {
        for s in &r.similarity {
            unique.entry((s.a.clone(), s.b.clone())).or_insert_with(|| s.clone());
        }
    }
    let root = Rng::seed_from(settings.bootstrap_seed);
    let mut cells = Vec::new();
    for (i, a) in order.iter().enumerate() {
        for b in &order[i..] {
            let (la, lb) = (a.label(), b.label());
            let group: Vec<SimilarityScore> = unique
                .values()
                .filter(|s| {
                    let (ca, cb) = (label_of.get(&s.a), label_of.get(&s.b));
                    (ca == Some(&la) && cb == Some(&lb)) || (ca == Some(&lb) && cb == Some(&la))
                })
                .cloned()
                .collect();
            if group.is_empty() {
                continue;
            }
            let name = format!("{la}|{lb}");
            let mut rng = root.child_named(&name);
            cells.push(MatrixCell {
                row: la,
                col: lb,
                summary: summarize(&name, &group, settings.resamples, settings.level, &mut rng)?,
            });
        }
    }
    Ok(cells)
}

fn csv_err(e: csv::Error) -> Error {
    Error::config(format!("csv: {e}"))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<report>.json` plus CSV blocks; returns every path written.
pub fn write_report(dir: &Path, table: &ResultsTable) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let name = &table.report;
    let mut written = Vec::new();
    let json = dir.join(format!("{name}.json"));
    std::fs::write(&json, serde_json::to_string_pretty(table)?)?;
    written.push(json);
    let rows = dir.join(format!("{name}-rows.csv"));
    write_csv(&rows, &table.rows)?;
    written.push(rows);
    for block in table.blocks() {
        let path = dir.join(format!("{name}-{block}.csv"));
        let part: Vec<&SummaryRow> = table.summaries.iter().filter(|s| s.block == block).collect();
        write_csv(&path, &part)?;
        written.push(path);
    }
    if !table.fits.is_empty() {
        let path = dir.join(format!("{name}-fits.csv"));
        write_csv(&path, &table.fits)?;
        written.push(path);
    }
    if !table.series.is_empty() {
        let path = dir.join(format!("{name}-series.csv"));
        write_csv(&path, &table.series)?;
        written.push(path);
    }
    if !table.matrix.is_empty() {
        let groups: Vec<&GroupSummary> = table.matrix.iter().map(|c| &c.summary).collect();
        let path = dir.join(format!("{name}-groups.csv"));
        write_csv(&path, &groups)?;
        written.push(path);
        let mut labels: Vec<String> = Vec::new();
        for c in &table.matrix {
            for l in [&c.row, &c.col] {
                if !labels.contains(l) {
                    labels.push(l.clone());
                }
            }
        }
        let path = dir.join(format!("{name}-matrix.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(std::iter::once("condition").chain(labels.iter().map(String::as_str)))
            .map_err(csv_err)?;
        for a in &labels {
            let mut line = vec![a.clone()];
            for b in &labels {
                line.push(table.cell(a, b).map_or(String::new(), |g| g.mean.to_string()));
            }
            w.write_record(&line).map_err(csv_err)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
