//! Line-delimited metric streams and the convergence summary.
//!
//! Each run appends one JSON record per checkpoint to
//! `<output_dir>/<run_id>.jsonl`; the file stays parseable after abnormal
//! termination because every line is flushed as it is written. The summary
//! reports, per run, the first checkpoint at which the test objective falls
//! within 1% of the sweep-minimum final objective, and speed-ups relative
//! to the r = 1 baseline.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use somf_core::Checkpoint;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricRecord {
    pub run: String,
    pub algorithm: String,
    pub r: f64,
    pub variant: String,
    pub iter: u64,
    pub epoch: u64,
    pub wall_seconds: f64,
    pub flops: u64,
    pub test_objective: Option<f64>,
}

impl MetricRecord {
    pub fn from_checkpoint(
        run: &str,
        algorithm: &str,
        r: f64,
        variant: &str,
        c: &Checkpoint,
    ) -> Self {
        MetricRecord {
            run: run.to_string(),
            algorithm: algorithm.to_string(),
            r,
            variant: variant.to_string(),
            iter: c.iter,
            epoch: c.epoch,
            wall_seconds: c.wall_seconds,
            flops: c.flops,
            test_objective: c.test_objective,
        }
    }
}

/// Append-only JSONL writer, one flush per record.
pub struct MetricWriter {
    out: BufWriter<File>,
}

impl MetricWriter {
    pub fn create(path: &Path) -> std::io::Result<Self> {
        Ok(MetricWriter { out: BufWriter::new(File::create(path)?) })
    }

    pub fn append(&mut self, record: &MetricRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        self.out.flush()
    }
}

pub fn read_metrics_file(path: &Path) -> std::io::Result<Vec<MetricRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MetricRecord = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        records.push(rec);
    }
    Ok(records)
}

/// All `*.jsonl` traces in a directory, grouped by run id.
pub fn read_metrics_dir(dir: &Path) -> std::io::Result<Vec<(String, Vec<MetricRecord>)>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    files.sort();
    let mut runs = Vec::new();
    for path in files {
        let records = read_metrics_file(&path)?;
        if let Some(first) = records.first() {
            runs.push((first.run.clone(), records));
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: String,
    pub algorithm: String,
    pub r: f64,
    pub variant: String,
    pub final_objective: Option<f64>,
    /// First checkpoint at or below the threshold, if any.
    pub threshold_seconds: Option<f64>,
    pub threshold_flops: Option<u64>,
    /// FLOP speed-up vs the r = 1 baseline; 1.0 exactly for that baseline.
    pub speedup: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    /// Objective threshold: 1.01 × the best final objective in the sweep.
    pub threshold: Option<f64>,
    pub rows: Vec<SummaryRow>,
}

/// Build the convergence summary from per-run traces.
pub fn summarize(runs: &[(String, Vec<MetricRecord>)]) -> Summary {
    let finals: Vec<Option<f64>> = runs
        .iter()
        .map(|(_, recs)| recs.last().and_then(|r| r.test_objective))
        .collect();
    let best_final = finals
        .iter()
        .flatten()
        .fold(None::<f64>, |acc, &v| Some(acc.map_or(v, |a| a.min(v))));
    let threshold = best_final.map(|b| 1.01 * b);

    let mut rows = Vec::new();
    for ((run, recs), final_objective) in runs.iter().zip(&finals) {
        let first = recs.first();
        let hit = threshold.and_then(|th| {
            recs.iter()
                .find(|r| r.test_objective.is_some_and(|o| o <= th))
        });
        rows.push(SummaryRow {
            run: run.clone(),
            algorithm: first.map(|r| r.algorithm.clone()).unwrap_or_default(),
            r: first.map(|r| r.r).unwrap_or(f64::NAN),
            variant: first.map(|r| r.variant.clone()).unwrap_or_default(),
            final_objective: *final_objective,
            threshold_seconds: hit.map(|r| r.wall_seconds),
            threshold_flops: hit.map(|r| r.flops),
            speedup: None,
        });
    }

    // Speed-ups in FLOPs-to-threshold, against the r = 1 run. The baseline
    // is 1.0 by construction, stated exactly rather than recomputed.
    let baseline = rows
        .iter()
        .find(|row| row.r == 1.0)
        .and_then(|row| row.threshold_flops);
    for row in &mut rows {
        row.speedup = if row.r == 1.0 && row.threshold_flops.is_some() {
            Some(1.0)
        } else {
            match (baseline, row.threshold_flops) {
                (Some(base), Some(own)) if own > 0 => Some(base as f64 / own as f64),
                _ => None,
            }
        };
    }
    Summary { threshold, rows }
}

/// Plain-text rendering of the summary table.
pub fn render_summary(summary: &Summary) -> String {
    let mut out = String::new();
    match summary.threshold {
        Some(t) => out.push_str(&format!("threshold (1.01 x best final objective): {t:.6e}\n")),
        None => out.push_str("threshold: undefined (no test objectives recorded)\n"),
    }
    out.push_str(&format!(
        "{:<32} {:>6} {:>12} {:>14} {:>14} {:>10}\n",
        "run", "r", "variant", "time-to-1% (s)", "flops-to-1%", "speed-up"
    ));
    for row in &summary.rows {
        let label = if row.r == 1.0 {
            format!("{} (OMF-equivalent)", row.run)
        } else {
            row.run.clone()
        };
        let time = row
            .threshold_seconds
            .map_or("not reached".to_string(), |s| format!("{s:.3}"));
        let flops = row
            .threshold_flops
            .map_or("not reached".to_string(), |f| f.to_string());
        let speedup = row.speedup.map_or("-".to_string(), |s| format!("{s:.2}x"));
        out.push_str(&format!(
            "{:<32} {:>6} {:>12} {:>14} {:>14} {:>10}\n",
            label, row.r, row.variant, time, flops, speedup
        ));
    }
    out
}
