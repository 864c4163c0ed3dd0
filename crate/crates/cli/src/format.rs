//! CSV layouts.
//!
//! * trajectory: `iter,t,method,lower,upper,width,covered,rejects_zero,h,pi1,k`
//! * aggregate: `method,t,cum_miscoverage,cum_power,mean_width`
//! * stream: `t,x0,..,x{d-1},a,y,pi1,k`
//!
//! Derived quantities are written with 12 significant digits; stream values
//! use the shortest representation that parses back to the same `f64`.

use std::io::{Read, Write};

use seqate_core::confseq::Method;
use seqate_core::sim::{AggregateResult, StepRecord, StreamRow};
use seqate_core::types::Arm;

use crate::error::{CliError, CliResult};

pub const TRAJECTORY_HEADER: [&str; 11] =
    ["iter", "t", "method", "lower", "upper", "width", "covered", "rejects_zero", "h", "pi1", "k"];
pub const AGGREGATE_HEADER: [&str; 5] = ["method", "t", "cum_miscoverage", "cum_power", "mean_width"];

const SIG_DIGITS: i32 = 12;

/// `v` rounded to 12 significant digits, without trailing zeros.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{:.*e}", (SIG_DIGITS - 1) as usize, v);
    }
    let decimals = (SIG_DIGITS - 1 - exp).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn stream_header(dim: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..dim).map(|i| format!("x{i}")));
    h.extend(["a", "y", "pi1", "k"].map(String::from));
    h
}

pub fn write_trajectory_header<W: Write>(w: &mut csv::Writer<W>) -> CliResult<()> {
    w.write_record(TRAJECTORY_HEADER)?;
    Ok(())
}

/// Writes every interval of one step. `theta0` is the true effect, when
/// known; otherwise the `covered` column is left empty.
pub fn write_trajectory_step<W: Write>(
    w: &mut csv::Writer<W>,
    iter: u64,
    step: &StepRecord,
    theta0: Option<f64>,
) -> CliResult<()> {
    let t = step.row.t.to_string();
    let iter = iter.to_string();
    let h = fmt_sig(step.score.h);
    let pi1 = fmt_sig(step.row.pi1);
    let k = fmt_sig(step.row.k);
    for (m, iv) in &step.intervals {
        let covered = theta0.map_or("", |th| flag(iv.contains(th)));
        w.write_record([
            iter.as_str(),
            t.as_str(),
            m.name(),
            &fmt_sig(iv.lower),
            &fmt_sig(iv.upper),
            &fmt_sig(iv.width()),
            covered,
            flag(!iv.contains(0.0)),
            &h,
            &pi1,
            &k,
        ])?;
    }
    Ok(())
}

pub fn write_stream_row<W: Write>(w: &mut csv::Writer<W>, row: &StreamRow) -> CliResult<()> {
    let mut rec = Vec::with_capacity(row.x.len() + 5);
    rec.push(row.t.to_string());
    rec.extend(row.x.iter().map(|v| v.to_string()));
    rec.push(row.arm.index().to_string());
    rec.push(row.y.to_string());
    rec.push(row.pi1.to_string());
    rec.push(row.k.to_string());
    w.write_record(&rec)?;
    Ok(())
}

pub fn write_aggregate<W: Write>(w: W, agg: &AggregateResult) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(AGGREGATE_HEADER)?;
    for (m, points) in &agg.curves {
        for p in points {
            w.write_record([
                m.name(),
                &p.t.to_string(),
                &fmt_sig(p.cum_miscoverage),
                &fmt_sig(p.cum_power),
                &fmt_sig(p.mean_width),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn data_err(line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("line {line}: {msg}"))
}

fn field<'a>(rec: &'a csv::StringRecord, i: usize, line: u64, name: &str) -> CliResult<&'a str> {
    rec.get(i).map(str::trim).ok_or_else(|| data_err(line, format!("missing column {name}")))
}

fn parse_f64(s: &str, line: u64, name: &str) -> CliResult<f64> {
    s.parse().map_err(|_| data_err(line, format!("column {name}: cannot parse '{s}' as a number")))
}

/// Lazily parsed experiment stream.
pub struct StreamReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    dim: usize,
}

impl<R: Read> StreamReader<R> {
    pub fn new(input: R) -> CliResult<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| CliError::Data(format!("stream header: {e}")))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        let dim = header.len().saturating_sub(5);
        if header.len() < 5 || header != stream_header(dim) {
            return Err(CliError::Data(format!("stream header must be t,x0,..,a,y,pi1,k; got {}", header.join(","))));
        }
        Ok(Self { records: rdr.into_records(), dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl<R: Read> Iterator for StreamReader<R> {
    type Item = CliResult<StreamRow>;

    fn next(&mut self) -> Option<Self::Item> {
        let rec = match self.records.next()? {
            Ok(r) => r,
            Err(e) => return Some(Err(CliError::Data(format!("stream: {e}")))),
        };
        Some(parse_stream_record(&rec, self.dim))
    }
}

fn parse_stream_record(rec: &csv::StringRecord, dim: usize) -> CliResult<StreamRow> {
    let line = rec.position().map_or(0, |p| p.line());
    if rec.len() != dim + 5 {
        return Err(data_err(line, format!("expected {} columns, got {}", dim + 5, rec.len())));
    }
    let t_s = field(rec, 0, line, "t")?;
    let t: usize = t_s.parse().map_err(|_| data_err(line, format!("column t: '{t_s}' is not a positive integer")))?;
    let x = (0..dim)
        .map(|i| parse_f64(field(rec, 1 + i, line, "x")?, line, &format!("x{i}")))
        .collect::<CliResult<Vec<f64>>>()?;
    let a_s = field(rec, dim + 1, line, "a")?;
    let arm = match a_s {
        "0" => Arm::Control,
        "1" => Arm::Treatment,
        _ => return Err(data_err(line, format!("column a: '{a_s}' must be 0 or 1"))),
    };
    let y = parse_f64(field(rec, dim + 2, line, "y")?, line, "y")?;
    let pi1 = parse_f64(field(rec, dim + 3, line, "pi1")?, line, "pi1")?;
    let k = parse_f64(field(rec, dim + 4, line, "k")?, line, "k")?;
    Ok(StreamRow { t, x, arm, y, pi1, k })
}

/// One row of a trajectory file, as needed for aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub iter: u64,
    pub t: usize,
    pub method: Method,
    pub width: f64,
    pub covered: Option<bool>,
    pub rejects_zero: bool,
}

fn parse_flag(s: &str, line: u64, name: &str) -> CliResult<bool> {
    match s {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => Err(data_err(line, format!("column {name}: '{s}' must be 0 or 1"))),
    }
}

pub fn read_trajectory<R: Read>(input: R, source: &str) -> CliResult<Vec<TrajectoryRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{source}: {e}")))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header != TRAJECTORY_HEADER {
        return Err(CliError::Data(format!("{source}: not a trajectory file (header {})", header.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(format!("{source}: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let ctx = |e: CliError| match e {
            CliError::Data(m) => CliError::Data(format!("{source}: {m}")),
            other => other,
        };
        let row = (|| {
            let iter_s = field(&rec, 0, line, "iter")?;
            let iter = iter_s.parse().map_err(|_| data_err(line, format!("column iter: '{iter_s}'")))?;
            let t_s = field(&rec, 1, line, "t")?;
            let t = t_s.parse().map_err(|_| data_err(line, format!("column t: '{t_s}'")))?;
            let m_s = field(&rec, 2, line, "method")?;
            let method = Method::parse(m_s).ok_or_else(|| data_err(line, format!("unknown method '{m_s}'")))?;
            let width = parse_f64(field(&rec, 5, line, "width")?, line, "width")?;
            let c = field(&rec, 6, line, "covered")?;
            let covered = if c.is_empty() { None } else { Some(parse_flag(c, line, "covered")?) };
            let rejects_zero = parse_flag(field(&rec, 7, line, "rejects_zero")?, line, "rejects_zero")?;
            Ok(TrajectoryRow { iter, t, method, width, covered, rejects_zero })
        })()
        .map_err(ctx)?;
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.1), "0.1");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(fmt_sig(123.456), "123.456");
        assert_eq!(fmt_sig(2.0), "2");
        assert_eq!(fmt_sig(0.0012345678901234), "0.00123456789012");
        assert_eq!(fmt_sig(-1e-12), "-1.00000000000e-12");
        assert_eq!(fmt_sig(-1e-20 * 0.0), "0");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
    }

    #[test]
    fn stream_round_trip() {
        let row = StreamRow { t: 1, x: vec![0.1, -1.0 / 3.0], arm: Arm::Treatment, y: 0.7, pi1: 0.4, k: 2.0 };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(stream_header(2)).unwrap();
        write_stream_row(&mut w, &row).unwrap();
        let bytes = w.into_inner().unwrap();
        let mut r = StreamReader::new(bytes.as_slice()).unwrap();
        assert_eq!(r.dim(), 2);
        assert_eq!(r.next().unwrap().unwrap(), row);
        assert!(r.next().is_none());
    }

    #[test]
    fn malformed_streams_are_data_errors() {
        assert!(matches!(StreamReader::new("t,a,y\n".as_bytes()), Err(CliError::Data(_))));
        let mut r = StreamReader::new("t,x0,a,y,pi1,k\n1,0.5,2,0.1,0.5,2\n".as_bytes()).unwrap();
        let err = r.next().unwrap().unwrap_err();
        assert!(matches!(&err, CliError::Data(m) if m.contains("line 2")), "{err}");
    }
}
