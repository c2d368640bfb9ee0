//! Result tables: long-form CSV, aggregates, and plot data.
//!
//! The CSV schema is stable and long-form: one line per
//! `(trial, algorithm, F, snr, η)` with columns
//!
//! ```text
//! trial,algorithm,F,snr,eta,unfiltered_rel_error,filtered_rel_error,
//! relative_residual,bottleneck_ell,hausdorff_ell,runtime_ms,flags
//! ```
//!
//! When the experiment ran without filter widths (`eta_list` empty) the
//! `eta` and `filtered_rel_error` columns are omitted and each cell is one
//! line. Floats are serialized with 17 significant digits, which
//! round-trips `f64` exactly; undefined values (e.g. bottleneck distance on
//! mismatched supports) are empty fields. Rows that failed carry the error
//! text in `flags` as `error: …` with empty metric fields.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::harness::{ExperimentConfig, HarnessError};
use crate::metrics::EvaluationRecord;
use crate::solvers::{Algorithm, SolverFlag};

/// Everything an experiment produced, in canonical row order.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub f_list: Vec<usize>,
    pub snr_list: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub eta_list: Vec<f64>,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone)]
pub struct ResultRow {
    pub trial: usize,
    pub algorithm: Algorithm,
    pub f: usize,
    pub snr: f64,
    pub outcome: RowOutcome,
}

#[derive(Debug, Clone)]
pub enum RowOutcome {
    Evaluated { record: EvaluationRecord, flags: Vec<SolverFlag> },
    Failed { error: String },
}

/// Median/mean/IQR of one error series within a `(algorithm, F, snr)` cell;
/// `eta = None` aggregates the unfiltered error.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub f: usize,
    pub snr: f64,
    pub eta: Option<f64>,
    pub count: usize,
    pub median: f64,
    pub mean: f64,
    pub q25: f64,
    pub q75: f64,
}

/// `f64` with 17 significant digits — exact round-trip, `inf` spelled out.
pub(crate) fn fmt_float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Linear-interpolation quantile (the common "type 7" rule) of an ascending
/// slice.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl ResultTable {
    /// Serialize the long-form CSV into a writer. Output bytes depend only
    /// on the table contents (LF newlines, fixed float formatting).
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let with_eta = !self.eta_list.is_empty();
        if with_eta {
            writeln!(
                w,
                "trial,algorithm,F,snr,eta,unfiltered_rel_error,filtered_rel_error,\
                 relative_residual,bottleneck_ell,hausdorff_ell,runtime_ms,flags"
            )?;
        } else {
            writeln!(
                w,
                "trial,algorithm,F,snr,unfiltered_rel_error,relative_residual,\
                 bottleneck_ell,hausdorff_ell,runtime_ms,flags"
            )?;
        }
        for row in &self.rows {
            let head = format!(
                "{},{},{},{}",
                row.trial,
                row.algorithm,
                row.f,
                fmt_float(row.snr)
            );
            match &row.outcome {
                RowOutcome::Evaluated { record, flags } => {
                    let flag_text = flags
                        .iter()
                        .map(|f| f.as_str())
                        .collect::<Vec<_>>()
                        .join(";");
                    let tail = format!(
                        "{},{},{},{},{}",
                        fmt_float(record.relative_residual),
                        fmt_opt(record.bottleneck_ell),
                        fmt_opt(record.hausdorff_ell),
                        fmt_float(record.runtime.as_secs_f64() * 1e3),
                        flag_text
                    );
                    if with_eta {
                        for &(eta, ferr) in &record.filtered_rel_errors {
                            writeln!(
                                w,
                                "{head},{},{},{},{tail}",
                                fmt_float(eta),
                                fmt_float(record.unfiltered_rel_error),
                                fmt_float(ferr)
                            )?;
                        }
                    } else {
                        writeln!(
                            w,
                            "{head},{},{tail}",
                            fmt_float(record.unfiltered_rel_error)
                        )?;
                    }
                }
                RowOutcome::Failed { error } => {
                    let note = format!("error: {}", error.replace([',', '\n'], ";"));
                    if with_eta {
                        // One line per η keeps the row count uniform.
                        for &eta in &self.eta_list {
                            writeln!(w, "{head},{},,,,,,,{note}", fmt_float(eta))?;
                        }
                    } else {
                        writeln!(w, "{head},,,,,,{note}")?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    /// Errors of evaluated rows in one `(algorithm, f, snr)` cell, in trial
    /// order. `eta = None` selects the unfiltered error.
    fn cell_errors(&self, algorithm: Algorithm, f: usize, snr: f64, eta: Option<f64>) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.algorithm == algorithm && r.f == f && r.snr == snr)
            .filter_map(|r| match &r.outcome {
                RowOutcome::Evaluated { record, .. } => match eta {
                    None => Some(record.unfiltered_rel_error),
                    Some(eta) => record
                        .filtered_rel_errors
                        .iter()
                        .find(|(e, _)| *e == eta)
                        .map(|&(_, v)| v),
                },
                RowOutcome::Failed { .. } => None,
            })
            .collect()
    }

    /// Median/mean/IQR per cell and error series, in canonical order
    /// (F, snr, algorithm from the config lists; unfiltered first, then each
    /// η). Cells whose rows all failed are skipped.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut out = Vec::new();
        for &f in &self.f_list {
            for &snr in &self.snr_list {
                for &algorithm in &self.algorithms {
                    let mut etas: Vec<Option<f64>> = vec![None];
                    etas.extend(self.eta_list.iter().map(|&e| Some(e)));
                    for eta in etas {
                        let mut values = self.cell_errors(algorithm, f, snr, eta);
                        if values.is_empty() {
                            continue;
                        }
                        let mean = values.iter().sum::<f64>() / values.len() as f64;
                        values.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
                        out.push(AggregateRow {
                            algorithm,
                            f,
                            snr,
                            eta,
                            count: values.len(),
                            median: quantile(&values, 0.5),
                            mean,
                            q25: quantile(&values, 0.25),
                            q75: quantile(&values, 0.75),
                        });
                    }
                }
            }
        }
        out
    }

    /// Plot-data series for one `(snr, eta)` pair: per `(F, algorithm)`, the
    /// median and quartiles of the filtered error at that η.
    pub fn plot_series(&self, snr: f64, eta: f64) -> Vec<(usize, Algorithm, f64, f64, f64)> {
        let mut out = Vec::new();
        for &f in &self.f_list {
            for &algorithm in &self.algorithms {
                let mut values = self.cell_errors(algorithm, f, snr, Some(eta));
                if values.is_empty() {
                    continue;
                }
                values.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
                out.push((
                    f,
                    algorithm,
                    quantile(&values, 0.5),
                    quantile(&values, 0.25),
                    quantile(&values, 0.75),
                ));
            }
        }
        out
    }
}

/// A parsed results-CSV line (schema-flexible: `eta` and
/// `filtered_rel_error` may be absent).
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub trial: usize,
    pub algorithm: String,
    pub f: usize,
    pub snr: f64,
    pub eta: Option<f64>,
    pub unfiltered_rel_error: Option<f64>,
    pub filtered_rel_error: Option<f64>,
    pub relative_residual: Option<f64>,
    pub bottleneck_ell: Option<f64>,
    pub hausdorff_ell: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub flags: String,
}

fn parse_float(field: &str, line_no: usize) -> Result<Option<f64>, HarnessError> {
    if field.is_empty() {
        return Ok(None);
    }
    let v = match field {
        "inf" => f64::INFINITY,
        "-inf" => f64::NEG_INFINITY,
        other => other.parse::<f64>().map_err(|e| {
            HarnessError::Table(format!("line {line_no}: bad float `{other}`: {e}"))
        })?,
    };
    Ok(Some(v))
}

/// Parse a results CSV produced by [`ResultTable::write_csv`].
pub fn parse_results_csv(text: &str) -> Result<Vec<CsvRow>, HarnessError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(HarnessError::Table("empty CSV".into()));
    };
    let with_eta = match header {
        h if h.starts_with("trial,algorithm,F,snr,eta,") => true,
        h if h.starts_with("trial,algorithm,F,snr,unfiltered") => false,
        other => return Err(HarnessError::Table(format!("unrecognized header `{other}`"))),
    };
    let expected = if with_eta { 12 } else { 10 };
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(HarnessError::Table(format!(
                "line {no}: {} fields, expected {expected}",
                fields.len()
            )));
        }
        let mut it = fields.into_iter();
        let trial = it
            .next()
            .unwrap()
            .parse::<usize>()
            .map_err(|e| HarnessError::Table(format!("line {no}: bad trial: {e}")))?;
        let algorithm = it.next().unwrap().to_string();
        let f = it
            .next()
            .unwrap()
            .parse::<usize>()
            .map_err(|e| HarnessError::Table(format!("line {no}: bad F: {e}")))?;
        let snr = parse_float(it.next().unwrap(), no)?
            .ok_or_else(|| HarnessError::Table(format!("line {no}: missing snr")))?;
        let (eta, unfiltered, filtered) = if with_eta {
            (
                parse_float(it.next().unwrap(), no)?,
                parse_float(it.next().unwrap(), no)?,
                parse_float(it.next().unwrap(), no)?,
            )
        } else {
            (None, parse_float(it.next().unwrap(), no)?, None)
        };
        rows.push(CsvRow {
            trial,
            algorithm,
            f,
            snr,
            eta,
            unfiltered_rel_error: unfiltered,
            filtered_rel_error: filtered,
            relative_residual: parse_float(it.next().unwrap(), no)?,
            bottleneck_ell: parse_float(it.next().unwrap(), no)?,
            hausdorff_ell: parse_float(it.next().unwrap(), no)?,
            runtime_ms: parse_float(it.next().unwrap(), no)?,
            flags: it.next().unwrap().to_string(),
        });
    }
    Ok(rows)
}

/// Recompute per-cell error aggregates from parsed CSV rows — an
/// independent pass used to cross-check [`ResultTable::aggregate`].
pub fn aggregate_from_csv(rows: &[CsvRow]) -> Vec<AggregateRow> {
    // Group in first-appearance order of (f, snr, algorithm, eta-slot).
    let mut order: Vec<(usize, f64, String, Option<u64>)> = Vec::new();
    let mut buckets: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut slot = |key: (usize, f64, String, Option<u64>)| -> usize {
        match order.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                order.push(key);
                order.len() - 1
            }
        }
    };
    for row in rows {
        // Unfiltered series: only once per cell line group (η rows repeat
        // the unfiltered value, so take it from the first η of the list).
        let first_eta = row.eta.is_none()
            || rows
                .iter()
                .find(|r| {
                    r.trial == row.trial
                        && r.algorithm == row.algorithm
                        && r.f == row.f
                        && r.snr == row.snr
                })
                .map(|r| r.eta == row.eta)
                .unwrap_or(false);
        if first_eta {
            if let Some(v) = row.unfiltered_rel_error {
                let idx = slot((row.f, row.snr, row.algorithm.clone(), None));
                buckets.entry(idx).or_default().push(v);
            }
        }
        if let (Some(eta), Some(v)) = (row.eta, row.filtered_rel_error) {
            let idx = slot((row.f, row.snr, row.algorithm.clone(), Some(eta.to_bits())));
            buckets.entry(idx).or_default().push(v);
        }
    }
    order
        .iter()
        .enumerate()
        .filter_map(|(idx, (f, snr, algorithm, eta_bits))| {
            let mut values = buckets.get(&idx)?.clone();
            let algorithm = algorithm.parse::<Algorithm>().ok()?;
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            values.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
            Some(AggregateRow {
                algorithm,
                f: *f,
                snr: *snr,
                eta: eta_bits.map(f64::from_bits),
                count: values.len(),
                median: quantile(&values, 0.5),
                mean,
                q25: quantile(&values, 0.25),
                q75: quantile(&values, 0.75),
            })
        })
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, bytes)
        .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })
}

/// Write `results.csv`, one plot-data CSV per `(snr, η)` pair, and a
/// metadata JSON describing the run. Returns the paths written.
pub fn emit_results(
    table: &ResultTable,
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    if table.rows.is_empty() {
        return Err(HarnessError::Table("refusing to emit an empty table".into()));
    }
    std::fs::create_dir_all(out_dir)
        .map_err(|source| HarnessError::Io { path: out_dir.display().to_string(), source })?;
    let mut written = Vec::new();

    let results = out_dir.join("results.csv");
    write_file(&results, table.to_csv_string().as_bytes())?;
    written.push(results);

    for &snr in &table.snr_list {
        for &eta in &table.eta_list {
            let name = format!("plot_snr{snr}_eta{eta}.csv");
            let mut text = String::from("F,algorithm,median_error,q25,q75\n");
            for (f, algorithm, median, q25, q75) in table.plot_series(snr, eta) {
                text.push_str(&format!(
                    "{f},{algorithm},{},{},{}\n",
                    fmt_float(median),
                    fmt_float(q25),
                    fmt_float(q75)
                ));
            }
            let path = out_dir.join(name);
            write_file(&path, text.as_bytes())?;
            written.push(path);
        }
    }

    let metadata = serde_json::json!({
        "config": cfg,
        "kernel": "tent",
        "filtered_error_denominator": "l2 norm of the filtered true signal",
        "rows": table.rows.len(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    let meta_path = out_dir.join("run_metadata.json");
    let mut meta_text =
        serde_json::to_string_pretty(&metadata).expect("config serializes to JSON");
    meta_text.push('\n');
    write_file(&meta_path, meta_text.as_bytes())?;
    written.push(meta_path);
    Ok(written)
}
