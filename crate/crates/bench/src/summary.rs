//! Grouped means and Monte Carlo standard errors of replication records.

use std::fmt::Write as _;
use std::path::Path;

use gbcal_core::lrate::Method;
use gbcal_core::uq::ReplicationRecord;

use crate::runner::HEADER;
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    fn of(values: &[f64]) -> Self {
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let se = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt()
        } else {
            0.0
        };
        Self { mean, se }
    }

    fn proportion(hits: usize, total: usize) -> Self {
        let p = hits as f64 / total as f64;
        Self {
            mean: p,
            se: (p * (1.0 - p) / total as f64).sqrt(),
        }
    }
}

/// One (experiment, degree, n, method) group. Statistics cover the
/// non-degenerate rows and are `None` when every row was excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: String,
    pub degree: f64,
    pub n: usize,
    pub method: Method,
    pub runs: usize,
    pub excluded: usize,
    pub eta_hat: Option<Stat>,
    pub coverage: Option<Stat>,
    pub mse: Option<Stat>,
    pub variance: Option<Stat>,
    pub length: Option<Stat>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

/// Groups in order of first appearance.
pub fn summarize_records(records: &[ReplicationRecord]) -> SummaryTable {
    let mut groups: Vec<(String, f64, usize, Method, Vec<&ReplicationRecord>)> = Vec::new();
    for r in records {
        match groups
            .iter_mut()
            .find(|g| g.0 == r.experiment && g.1 == r.degree && g.2 == r.n && g.3 == r.method)
        {
            Some(g) => g.4.push(r),
            None => groups.push((r.experiment.clone(), r.degree, r.n, r.method, vec![r])),
        }
    }
    let rows = groups
        .into_iter()
        .map(|(experiment, degree, n, method, rs)| {
            let ok: Vec<&ReplicationRecord> =
                rs.iter().copied().filter(|r| !r.degenerate).collect();
            let stat = |f: &dyn Fn(&ReplicationRecord) -> f64| {
                (!ok.is_empty()).then(|| Stat::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>()))
            };
            let lengths: Vec<f64> = ok.iter().filter_map(|r| r.interval_length).collect();
            SummaryRow {
                experiment,
                degree,
                n,
                method,
                runs: rs.len(),
                excluded: rs.len() - ok.len(),
                eta_hat: stat(&|r| r.eta_hat),
                coverage: (!ok.is_empty())
                    .then(|| Stat::proportion(ok.iter().filter(|r| r.covered).count(), ok.len())),
                mse: stat(&|r| r.mse),
                variance: stat(&|r| r.avg_marginal_var),
                length: (!lengths.is_empty() && lengths.len() == ok.len())
                    .then(|| Stat::of(&lengths)),
            }
        })
        .collect();
    SummaryTable { rows }
}

/// Parses a records CSV, reporting the first malformed line.
pub fn read_records(path: &Path) -> Result<Vec<ReplicationRecord>, BenchError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| BenchError::Io(std::io::Error::other(e.to_string())))?;
    let header = reader.headers().map_err(|e| BenchError::Schema {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(BenchError::Schema {
            line: 1,
            message: format!(
                "expected header {}, found {}",
                HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    reader
        .deserialize()
        .map(|row| {
            row.map_err(|e| BenchError::Schema {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}

fn cell(s: Option<Stat>) -> String {
    s.map_or_else(
        || "–".to_string(),
        |s| format!("{:.3} ({:.3})", s.mean, s.se),
    )
}

fn num(s: Option<Stat>, f: fn(Stat) -> f64) -> String {
    s.map_or_else(String::new, |s| format!("{}", f(s)))
}

impl SummaryTable {
    pub fn find(&self, degree: f64, n: usize, method: Method) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.degree == degree && r.n == n && r.method == method)
    }

    /// Markdown with standard errors in parentheses.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| Experiment | Degree | n | Method | η̂ | Coverage | MSE | Variance | Length | Runs | Excluded |\n\
             |---|---|---|---|---|---|---|---|---|---|---|\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                r.experiment,
                r.degree,
                r.n,
                r.method,
                cell(r.eta_hat),
                cell(r.coverage),
                cell(r.mse),
                cell(r.variance),
                if r.length.is_some() {
                    cell(r.length)
                } else {
                    String::new()
                },
                r.runs,
                r.excluded
            );
        }
        out
    }

    /// Tidy CSV, one row per group.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "experiment,degree,n,method,runs,excluded,eta_hat,eta_hat_se,coverage,coverage_se,mse,mse_se,variance,variance_se,length,length_se\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.experiment,
                r.degree,
                r.n,
                r.method,
                r.runs,
                r.excluded,
                num(r.eta_hat, |s| s.mean),
                num(r.eta_hat, |s| s.se),
                num(r.coverage, |s| s.mean),
                num(r.coverage, |s| s.se),
                num(r.mse, |s| s.mean),
                num(r.mse, |s| s.se),
                num(r.variance, |s| s.mean),
                num(r.variance, |s| s.se),
                num(r.length, |s| s.mean),
                num(r.length, |s| s.se),
            );
        }
        out
    }
}
