//! Result and aggregate CSV tables.

use std::io::{Read, Write};

use super::ResultRow;
use crate::error::{Error, Result};
use crate::mechanism::PrivacyBudget;

pub const CSV_HEADER: [&str; 12] = [
    "regime",
    "n",
    "epsilon",
    "replication",
    "seed",
    "L",
    "L_tilde",
    "runtime_ms",
    "condition_value",
    "l_bound",
    "l_tilde_bound",
    "condition_met",
];

const AGGREGATE_HEADER: [&str; 11] = [
    "regime",
    "n",
    "epsilon",
    "count",
    "mean_L",
    "sd_L",
    "mean_L_tilde",
    "sd_L_tilde",
    "mean_accuracy",
    "log10_n",
    "log10_mean_L",
];

/// Marker for missing or undefined values.
const MISSING: &str = "NA";

/// Ten significant digits, trailing zeros trimmed; NaN prints as `NA`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return MISSING.to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("csv", io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn io_error(e: std::io::Error) -> Error {
    Error::io("csv output", e)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.regime.clone(),
            r.n.to_string(),
            r.epsilon.to_string(),
            r.replication.to_string(),
            r.seed.to_string(),
            format_float(r.l),
            format_float(r.l_tilde),
            r.runtime_ms.map_or(MISSING.to_string(), format_float),
            format_float(r.condition_value),
            format_float(r.l_bound),
            format_float(r.l_tilde_bound),
            r.condition_met.map_or(MISSING.to_string(), |m| m.to_string()),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(io_error)
}

fn field<'a>(record: &'a csv::StringRecord, i: usize, line: usize) -> Result<&'a str> {
    record.get(i).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column {}", CSV_HEADER[i]),
    })
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    match s {
        MISSING => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid number {s:?}"),
        }),
    }
}

fn parse_int<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid integer {s:?}"),
    })
}

/// Reads a result CSV written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let f = |i| field(&record, i, line);
        let epsilon: PrivacyBudget = f(2)?.parse().map_err(|e| Error::Parse {
            line,
            message: format!("{e}"),
        })?;
        let runtime = parse_float(f(7)?, line)?;
        let met = match f(11)? {
            "true" => Some(true),
            "false" => Some(false),
            MISSING => None,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("invalid condition_met {other:?}"),
                })
            }
        };
        rows.push(ResultRow {
            regime: f(0)?.to_string(),
            n: parse_int(f(1)?, line)?,
            epsilon,
            replication: parse_int(f(3)?, line)?,
            seed: parse_int(f(4)?, line)?,
            l: parse_float(f(5)?, line)?,
            l_tilde: parse_float(f(6)?, line)?,
            runtime_ms: (!runtime.is_nan()).then_some(runtime),
            condition_value: parse_float(f(8)?, line)?,
            l_bound: parse_float(f(9)?, line)?,
            l_tilde_bound: parse_float(f(10)?, line)?,
            condition_met: met,
            error: None,
        });
    }
    Ok(rows)
}

/// Summary of one `(regime, n, epsilon)` cell over its non-error rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub regime: String,
    pub n: usize,
    pub epsilon: PrivacyBudget,
    pub count: usize,
    pub mean_l: f64,
    /// Sample standard deviation; 0 for a single row.
    pub sd_l: f64,
    pub mean_l_tilde: f64,
    pub sd_l_tilde: f64,
}

impl AggregateRow {
    pub fn mean_accuracy(&self) -> f64 {
        1.0 - self.mean_l
    }

    /// `log10(mean L)`, `None` when the mean is 0.
    pub fn log10_mean_l(&self) -> Option<f64> {
        (self.mean_l > 0.0).then(|| self.mean_l.log10())
    }

    /// Mean `L` floored at half a misclassified node over the cell,
    /// `1 / (2 n count)`, so a log-scale fit stays defined.
    pub fn floored_mean_l(&self) -> f64 {
        self.mean_l.max(1.0 / (2.0 * self.n as f64 * self.count.max(1) as f64))
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows into cells in order of first appearance. Error rows are
/// skipped; a cell with only error rows has `count = 0` and NaN statistics.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, usize, PrivacyBudget)> = Vec::new();
    let mut values: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for r in rows {
        let idx = match keys
            .iter()
            .position(|(g, n, e)| *g == r.regime && *n == r.n && e.key() == r.epsilon.key())
        {
            Some(i) => i,
            None => {
                keys.push((r.regime.clone(), r.n, r.epsilon));
                values.push((Vec::new(), Vec::new()));
                keys.len() - 1
            }
        };
        if !r.is_error() {
            values[idx].0.push(r.l);
            values[idx].1.push(r.l_tilde);
        }
    }
    keys.into_iter()
        .zip(values)
        .map(|((regime, n, epsilon), (l, lt))| {
            let (mean_l, sd_l) = mean_sd(&l);
            let (mean_l_tilde, sd_l_tilde) = mean_sd(&lt);
            AggregateRow {
                regime,
                n,
                epsilon,
                count: l.len(),
                mean_l,
                sd_l,
                mean_l_tilde,
                sd_l_tilde,
            }
        })
        .collect()
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.regime.clone(),
            r.n.to_string(),
            r.epsilon.to_string(),
            r.count.to_string(),
            format_float(r.mean_l),
            format_float(r.sd_l),
            format_float(r.mean_l_tilde),
            format_float(r.sd_l_tilde),
            format_float(r.mean_accuracy()),
            format_float((r.n as f64).log10()),
            r.log10_mean_l().map_or(MISSING.to_string(), format_float),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(io_error)
}

/// Least-squares slope of `log10 y` against `log10 x`; `None` with fewer
/// than two points or any non-positive coordinate.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, eps: PrivacyBudget, rep: usize, l: f64) -> ResultRow {
        ResultRow {
            regime: "dense_ssbm".into(),
            n,
            epsilon: eps,
            replication: rep,
            seed: 12345678901234567890,
            l,
            l_tilde: l * 1.5,
            runtime_ms: None,
            condition_value: 0.123456789012345,
            l_bound: 1e-12,
            l_tilde_bound: 12345678901.5,
            condition_met: Some(rep % 2 == 0),
            error: None,
        }
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(0.25), "0.25");
        assert_eq!(format_float(1.0 / 3.0), "0.3333333333");
        assert_eq!(format_float(2.0 / 3.0 * 100.0), "66.66666667");
        assert_eq!(format_float(1e-12), "1e-12");
        assert_eq!(format_float(12345678901.5), "1.23456789e10");
        assert_eq!(format_float(9.99999999999), "10");
        assert_eq!(format_float(f64::NAN), "NA");
        assert_eq!(format_float(-0.5), "-0.5");
    }

    #[test]
    fn header_and_round_trip() {
        let rows = vec![
            row(120, PrivacyBudget::finite(0.5).unwrap(), 0, 0.25),
            row(120, PrivacyBudget::INFINITE, 1, 0.0),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "regime,n,epsilon,replication,seed,L,L_tilde,runtime_ms,condition_value,l_bound,l_tilde_bound,condition_met"
        );
        assert_eq!(
            lines.next().unwrap(),
            "dense_ssbm,120,0.5,0,12345678901234567890,0.25,0.375,NA,0.123456789,1e-12,1.23456789e10,true"
        );
        assert!(lines.next().unwrap().starts_with("dense_ssbm,120,inf,1,"));
        let back = read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].l, 0.25);
        assert!(back[1].epsilon.is_infinite());
        assert_eq!(back[1].condition_met, Some(false));
    }

    #[test]
    fn malformed_csv_rejected() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let bad = format!("{}\ndense_ssbm,x,1,0,0,0,0,NA,0,0,0,true\n", CSV_HEADER.join(","));
        assert!(matches!(read_csv(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn aggregation() {
        let e = PrivacyBudget::finite(1.0).unwrap();
        let mut rows = vec![row(100, e, 0, 0.2), row(100, e, 1, 0.4), row(200, e, 0, 0.0)];
        let mut failed = row(200, e, 1, f64::NAN);
        failed.error = Some("boom".into());
        rows.push(failed);
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].count, 2);
        assert!((agg[0].mean_l - 0.3).abs() < 1e-15);
        assert!((agg[0].sd_l - 0.02f64.sqrt()).abs() < 1e-15);
        assert_eq!(agg[1].count, 1);
        assert_eq!(agg[1].sd_l, 0.0);
        assert_eq!(agg[1].log10_mean_l(), None);
        assert_eq!(agg[1].floored_mean_l(), 1.0 / 400.0);

        let mut buf = Vec::new();
        write_aggregate_csv(&agg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let last = text.lines().last().unwrap();
        assert_eq!(last, "dense_ssbm,200,1,1,0,0,0,0,1,2.301029996,NA");
    }

    #[test]
    fn slopes() {
        let pts = [(10.0, 1.0), (100.0, 0.1), (1000.0, 0.01)];
        assert!((loglog_slope(&pts).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&[(10.0, 0.0), (100.0, 1.0)]), None);
        assert_eq!(loglog_slope(&[(10.0, 1.0)]), None);
    }
}
