//! Report serialisation (JSON lines) and the human-readable tables.

use crate::pipeline::{DatasetReport, PipelineReport};
use citysize::gof::Verdict;
use citysize::select::SelectionTally;
use citysize::Family;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("report has no header record")]
    MissingHeader,
    #[error("unsupported schema version {0}")]
    Schema(u32),
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    families: Vec<Family>,
    seed: u64,
    replicates: usize,
    refit: bool,
    significance_level: f64,
    datasets: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header(Header),
    Dataset(DatasetReport),
}

/// One header line, then one line per dataset.
pub fn to_jsonl(report: &PipelineReport) -> String {
    let header = Record::Header(Header {
        schema_version: SCHEMA_VERSION,
        families: report.families.clone(),
        seed: report.seed,
        replicates: report.replicates,
        refit: report.refit,
        significance_level: report.significance_level,
        datasets: report.datasets.len(),
    });
    let mut out = serde_json::to_string(&header).expect("header serialises");
    out.push('\n');
    for d in &report.datasets {
        out.push_str(&serde_json::to_string(&Record::Dataset(d.clone())).expect("dataset serialises"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<PipelineReport, ReportError> {
    let mut header = None;
    let mut datasets = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let record: Record = serde_json::from_str(line).map_err(|source| ReportError::Json { line: i + 1, source })?;
        match record {
            Record::Header(h) => {
                if h.schema_version != SCHEMA_VERSION {
                    return Err(ReportError::Schema(h.schema_version));
                }
                header = Some(h);
            }
            Record::Dataset(d) => datasets.push(d),
        }
    }
    let h = header.ok_or(ReportError::MissingHeader)?;
    Ok(PipelineReport {
        families: h.families,
        seed: h.seed,
        replicates: h.replicates,
        refit: h.refit,
        significance_level: h.significance_level,
        datasets,
    })
}

fn dataset_label(d: &DatasetReport) -> (String, String) {
    (d.name.clone(), d.year.map(|y| y.to_string()).unwrap_or_default())
}

fn name_width(report: &PipelineReport) -> usize {
    report.datasets.iter().map(|d| d.name.len()).max().unwrap_or(0).max(7)
}

/// Grid of verdicts, one row per dataset; blank where a family could not be fitted or tested.
pub fn table_verdicts(report: &PipelineReport) -> String {
    let w = name_width(report);
    let mut out = String::new();
    let _ = write!(out, "{:<w$}  {:>4}  {:>9}", "COUNTRY", "YEAR", "OBS");
    for f in &report.families {
        let _ = write!(out, "  {:<10}", f.label());
    }
    out.push('\n');
    for d in &report.datasets {
        let (name, year) = dataset_label(d);
        let _ = write!(out, "{name:<w$}  {year:>4}  {:>9}", d.n);
        for f in &report.families {
            let v = d.cell(*f).and_then(|c| c.verdict()).map(Verdict::label).unwrap_or("");
            let _ = write!(out, "  {v:<10}");
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }
    out
}

/// Share of all datasets in which each family is rejected by all three tests.
pub fn rejection_rates(report: &PipelineReport) -> Vec<(Family, usize, f64)> {
    let total = report.datasets.len();
    report
        .families
        .iter()
        .map(|&f| {
            let rejected = report
                .datasets
                .iter()
                .filter(|d| d.cell(f).and_then(|c| c.verdict()) == Some(Verdict::Reject))
                .count();
            (f, rejected, SelectionTally::percent(rejected, total))
        })
        .collect()
}

/// `LN (53.52% of rejections), LL (39.44%), ...`
pub fn rejection_line(report: &PipelineReport) -> String {
    rejection_rates(report)
        .iter()
        .enumerate()
        .map(|(i, (f, _, pct))| {
            if i == 0 {
                format!("{f} ({pct:.2}% of rejections)")
            } else {
                format!("{f} ({pct:.2}%)")
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Per-dataset AIC and BIC choices.
pub fn table_choices(report: &PipelineReport) -> String {
    let w = name_width(report);
    let mut out = String::new();
    let _ = writeln!(out, "{:<w$}  {:>4}  {:>9}  {:<5}  {:<5}", "COUNTRY", "YEAR", "OBS", "AIC", "BIC");
    for d in &report.datasets {
        let (name, year) = dataset_label(d);
        let (a, b) = d
            .comparison
            .as_ref()
            .map(|c| (c.best_aic.label(), c.best_bic.label()))
            .unwrap_or(("", ""));
        let line = format!("{name:<w$}  {year:>4}  {:>9}  {a:<5}  {b:<5}", d.n);
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}

pub fn selection_tally(report: &PipelineReport) -> SelectionTally {
    SelectionTally::from_comparisons(report.datasets.iter().filter_map(|d| d.comparison.as_ref()))
}

/// How often each family is chosen, with percentages of the ranked datasets.
pub fn table_tally(report: &PipelineReport) -> String {
    let t = selection_tally(report);
    let mut out = String::new();
    let _ = writeln!(out, "{:<6}  {:>14}  {:>14}", "MODEL", "AIC", "BIC");
    for f in &report.families {
        let cell = |c: usize| format!("{c} ({:.2}%)", SelectionTally::percent(c, t.datasets));
        let _ = writeln!(out, "{:<6}  {:>14}  {:>14}", f.label(), cell(t.aic[f.ordinal()]), cell(t.bic[f.ordinal()]));
    }
    let _ = writeln!(out, "{:<6}  {:>14}  {:>14}", "TOTAL", t.datasets, t.datasets);
    out
}

pub fn summary(report: &PipelineReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Goodness of fit ({} replicates, level {}):", report.replicates, report.significance_level);
    out.push_str(&table_verdicts(report));
    let _ = writeln!(out, "\nRejections over {} datasets: {}", report.datasets.len(), rejection_line(report));
    out.push_str("\nSelected distributions:\n");
    out.push_str(&table_choices(report));
    out.push_str("\nChoice frequencies:\n");
    out.push_str(&table_tally(report));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Dataset;
    use crate::pipeline::{run_pipeline, PipelineConfig};
    use citysize::gof::GofConfig;
    use citysize::DistributionSpec;

    fn report() -> PipelineReport {
        static REPORT: std::sync::OnceLock<PipelineReport> = std::sync::OnceLock::new();
        REPORT.get_or_init(build).clone()
    }

    fn build() -> PipelineReport {
        let datasets: Vec<Dataset> = (0..3)
            .map(|i| {
                let spec = DistributionSpec::dpln(2.0, 1.5, 4.0 + i as f64, 0.7).unwrap();
                Dataset::new(format!("c{i}"), Some(2000 + i), spec.sample(120 + 50 * i as usize, i as u64).unwrap())
            })
            .collect();
        let cfg = PipelineConfig {
            families: vec![Family::Ln, Family::Ll, Family::Dpln, Family::Ln2],
            gof: GofConfig { replicates: 24, seed: 9, ..Default::default() },
            ..Default::default()
        };
        run_pipeline(&datasets, &cfg).unwrap()
    }

    #[test]
    fn jsonl_round_trip() {
        let r = report();
        let text = to_jsonl(&r);
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("{\"record\":\"header\",\"schema_version\":1"));
        let back = from_jsonl(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_jsonl(&back), text);
    }

    #[test]
    fn jsonl_errors() {
        assert!(matches!(from_jsonl(""), Err(ReportError::MissingHeader)));
        assert!(matches!(from_jsonl("{nope"), Err(ReportError::Json { line: 1, .. })));
        let h = to_jsonl(&report()).replace("\"schema_version\":1", "\"schema_version\":7");
        assert!(matches!(from_jsonl(&h), Err(ReportError::Schema(7))));
    }

    #[test]
    fn tables_have_one_row_per_dataset() {
        let r = report();
        for table in [table_verdicts(&r), table_choices(&r)] {
            assert_eq!(table.lines().count(), 1 + r.datasets.len());
        }
        let allowed = ["non-reject", "mixed", "reject"];
        for line in table_verdicts(&r).lines().skip(1) {
            for word in line.split_whitespace().skip(3) {
                assert!(allowed.contains(&word), "{word}");
            }
        }
        let s = summary(&r);
        assert!(s.contains("of rejections)"));
    }

    #[test]
    fn tally_percentages_sum_to_hundred() {
        let r = report();
        let t = selection_tally(&r);
        let aic: f64 = t.aic.iter().map(|&c| SelectionTally::percent(c, t.datasets)).sum();
        let bic: f64 = t.bic.iter().map(|&c| SelectionTally::percent(c, t.datasets)).sum();
        assert!((aic - 100.0).abs() < 1e-9 && (bic - 100.0).abs() < 1e-9);
    }

    #[test]
    fn rejection_line_format() {
        let r = report();
        let line = rejection_line(&r);
        let first = line.split(", ").next().unwrap();
        assert!(first.starts_with("LN (") && first.ends_with("% of rejections)"), "{line}");
        assert_eq!(line.split(", ").count(), r.families.len());
        for (f, count, pct) in rejection_rates(&r) {
            assert_eq!(pct, SelectionTally::percent(count, r.datasets.len()), "{f}");
        }
    }
}
