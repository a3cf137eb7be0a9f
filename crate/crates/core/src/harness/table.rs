use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::HarnessError;

pub const CSV_HEADER: &str = "run_id,n,estimator,error,wall_seconds";
pub const SUMMARY_HEADER: &str = "estimator,n,mean,median,q10,q90,failures";
/// Fewest checkpoints a rate fit accepts.
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub run_id: usize,
    pub n: usize,
    pub estimator: String,
    /// Family-norm error; NaN marks a failed estimator call.
    pub error: f64,
    /// Euclidean error, when known.
    pub l2_error: Option<f64>,
    pub wall_seconds: f64,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.error.is_nan()
    }
}

/// Table-level audit counters.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Audits {
    pub dominance_checks: usize,
    pub dominance_violations: usize,
    /// Largest DP error minus SO error seen (−∞ when nothing was checked).
    pub dominance_max_gap: f64,
    pub feasibility_checks: usize,
    pub feasibility_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
    /// `(key, value)` pairs written as `# key: value` lines.
    pub metadata: Vec<(String, String)>,
    pub audits: Audits,
    /// Failure diagnostics, one per NaN row, in row order.
    pub failures: Vec<String>,
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

impl ResultTable {
    /// Estimator names in order of first appearance.
    pub fn estimators(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.estimator) {
                out.push(r.estimator.clone());
            }
        }
        out
    }

    pub fn failure_count(&self) -> usize {
        self.rows.iter().filter(|r| r.failed()).count()
    }

    fn write_with<W: Write>(&self, mut out: W, value: impl Fn(&ResultRow) -> f64) -> std::io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.run_id,
                r.n,
                r.estimator,
                fmt_f64(value(r)),
                fmt_f64(r.wall_seconds)
            )?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        self.write_with(out, |r| r.error)
    }

    /// Same layout with the Euclidean error in the `error` column.
    pub fn write_l2_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        self.write_with(out, |r| r.l2_error.unwrap_or(f64::NAN))
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, HarnessError> {
        let mut table = ResultTable::default();
        let mut seen_header = false;
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| HarnessError::Table(e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.split_once(':') {
                    table.metadata.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if !seen_header {
                if line != CSV_HEADER {
                    return Err(HarnessError::Table(format!(
                        "line {}: expected header {CSV_HEADER:?}",
                        i + 1
                    )));
                }
                seen_header = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            let bad = |what: &str| HarnessError::Table(format!("line {}: {what}", i + 1));
            if f.len() != 5 {
                return Err(bad(&format!("expected 5 fields, found {}", f.len())));
            }
            let error: f64 = f[3].parse().map_err(|_| bad("bad error value"))?;
            if error < 0.0 {
                return Err(bad("negative error"));
            }
            table.rows.push(ResultRow {
                run_id: f[0].parse().map_err(|_| bad("bad run_id"))?,
                n: f[1].parse().map_err(|_| bad("bad n"))?,
                estimator: f[2].to_string(),
                error,
                l2_error: None,
                wall_seconds: f[4].parse().map_err(|_| bad("bad wall_seconds"))?,
            });
        }
        if !seen_header {
            return Err(HarnessError::Table("missing header line".into()));
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    /// Rows excluded because the estimator failed.
    pub failures: usize,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-(estimator, n) statistics over runs, excluding NaN rows.
pub fn aggregate(table: &ResultTable) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for est in table.estimators() {
        let mut by_n: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
        for r in table.rows.iter().filter(|r| r.estimator == est) {
            let e = by_n.entry(r.n).or_default();
            if r.failed() {
                e.1 += 1;
            } else {
                e.0.push(r.error);
            }
        }
        for (n, (mut vals, failures)) in by_n {
            vals.sort_by(f64::total_cmp);
            let mean = if vals.is_empty() {
                f64::NAN
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            out.push(SummaryRow {
                estimator: est.clone(),
                n,
                mean,
                median: quantile(&vals, 0.5),
                q10: quantile(&vals, 0.1),
                q90: quantile(&vals, 0.9),
                failures,
            });
        }
    }
    out
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.estimator,
            r.n,
            fmt_f64(r.mean),
            fmt_f64(r.median),
            fmt_f64(r.q10),
            fmt_f64(r.q90),
            r.failures
        )?;
    }
    Ok(())
}

/// Least-squares slope of log(mean error) against log(n) over the largest
/// `ceil(tail_fraction · K)` of the `K` checkpoints with a positive mean error.
pub fn fit_rate(table: &ResultTable, estimator: &str, tail_fraction: f64) -> Result<f64, HarnessError> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(HarnessError::Config(format!(
            "tail fraction must be in (0, 1], got {tail_fraction}"
        )));
    }
    if !table.rows.iter().any(|r| r.estimator == estimator) {
        return Err(HarnessError::UnknownEstimator(estimator.to_string()));
    }
    let points: Vec<(f64, f64)> = aggregate(table)
        .into_iter()
        .filter(|s| s.estimator == estimator && s.mean > 0.0 && s.mean.is_finite())
        .map(|s| ((s.n as f64).ln(), s.mean.ln()))
        .collect();
    let k = points.len();
    let m = (tail_fraction * k as f64).ceil() as usize;
    if m < MIN_FIT_POINTS {
        return Err(HarnessError::InsufficientData {
            needed: MIN_FIT_POINTS,
            found: m,
        });
    }
    let tail = &points[k - m..];
    let mf = m as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / mf;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / mf;
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(f: impl Fn(usize, usize) -> f64, ns: &[usize], runs: usize) -> ResultTable {
        let mut t = ResultTable::default();
        for run in 0..runs {
            for &n in ns {
                t.rows.push(ResultRow {
                    run_id: run,
                    n,
                    estimator: "x".into(),
                    error: f(run, n),
                    l2_error: None,
                    wall_seconds: 0.0,
                });
            }
        }
        t
    }

    const NS: [usize; 8] = [10, 20, 50, 100, 200, 500, 1000, 2000];

    #[test]
    fn exact_power_laws() {
        let t = table(|_, n| 3.0 / n as f64, &NS, 2);
        assert!((fit_rate(&t, "x", 0.5).unwrap() + 1.0).abs() < 1e-9);
        let t = table(|r, n| (1.0 + r as f64) / (n as f64).sqrt(), &NS, 3);
        assert!((fit_rate(&t, "x", 1.0).unwrap() + 0.5).abs() < 1e-9);
        assert!(matches!(fit_rate(&t, "y", 0.5), Err(HarnessError::UnknownEstimator(_))));
        assert!(matches!(
            fit_rate(&t, "x", 0.25),
            Err(HarnessError::InsufficientData { needed: 4, found: 2 })
        ));
    }

    #[test]
    fn aggregate_examples() {
        let t = table(|_, _| 0.7, &[10], 1);
        let s = &aggregate(&t)[0];
        assert_eq!((s.mean, s.median, s.q10, s.q90), (0.7, 0.7, 0.7, 0.7));
        let t = table(|r, _| [1.0, 2.0, 3.0, f64::NAN][r], &[10], 4);
        let s = &aggregate(&t)[0];
        assert_eq!((s.mean, s.median, s.failures), (2.0, 2.0, 1));
        assert!(s.q10 <= s.median && s.median <= s.q90);
        assert!((s.q10 - 1.2).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let mut t = table(|r, n| (r + 1) as f64 / n as f64, &NS[..3], 2);
        t.rows[1].error = f64::NAN;
        t.metadata.push(("library".into(), "x 1".into()));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = ResultTable::read_csv(&buf[..]).unwrap();
        assert_eq!(back.metadata, t.metadata);
        assert_eq!(back.rows.len(), t.rows.len());
        for (a, b) in back.rows.iter().zip(&t.rows) {
            assert!(a.error == b.error || a.failed() && b.failed());
        }
        assert!(ResultTable::read_csv(&b"run_id,n\n1,2"[..]).is_err());
        assert!(ResultTable::read_csv(&format!("{CSV_HEADER}\n0,10,x,abc,0\n").as_bytes()[..]).is_err());
    }
}
