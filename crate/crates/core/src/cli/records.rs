//! Stream record formats: JSON lines and CSV.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::dirichlet::ProbabilityVector;

/// Allowed deviation of an ingested probability vector's sum from one.
pub const INGEST_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

/// One classifier output in a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamRecord {
    pub t: f64,
    pub source: String,
    pub probs: Vec<f64>,
}

/// One smoothed output; `class` is one-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub t: f64,
    pub source: String,
    pub probs: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub class: usize,
    pub converged: bool,
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn fmt_num(x: f64) -> String {
    round12(x).to_string()
}

/// Guesses the format from the first non-blank character.
pub fn sniff(text: &str) -> Format {
    match text.trim_start().chars().next() {
        Some('{') => Format::Jsonl,
        _ => Format::Csv,
    }
}

/// A parsed record or the reason a line was rejected.
pub type Parsed<T> = (usize, Result<T, String>);

/// Parses a stream file. Each entry carries its one-based line number so
/// the caller can decide whether to skip or abort on a bad line.
pub fn parse_stream(text: &str, format: Format) -> Result<Vec<Parsed<StreamRecord>>, CliError> {
    match format {
        Format::Jsonl => Ok(text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, serde_json::from_str::<StreamRecord>(l).map_err(|e| e.to_string())))
            .collect()),
        Format::Csv => parse_stream_csv(text),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn parse_stream_csv(text: &str) -> Result<Vec<Parsed<StreamRecord>>, CliError> {
    let mut rdr = csv_reader(text);
    let header = rdr.headers().map_err(|e| CliError::Data(format!("bad CSV header: {e}")))?.clone();
    let k = header.len().saturating_sub(2);
    let expected: Vec<String> =
        ["t".to_string(), "source".to_string()].into_iter().chain((1..=k).map(|i| format!("p{i}"))).collect();
    if k < 2 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(CliError::Data(format!(
            "CSV header must be `t,source,p1..pK`, got `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let (line, rec) = match row {
            Ok(r) => (r.position().map_or(0, |p| p.line() as usize), Ok(r)),
            Err(e) => (e.position().map_or(0, |p| p.line() as usize), Err(e.to_string())),
        };
        let parsed = rec.and_then(|r| {
            if r.len() != k + 2 {
                return Err(format!("expected {} fields, got {}", k + 2, r.len()));
            }
            let t = r[0].parse::<f64>().map_err(|e| format!("bad time `{}`: {e}", &r[0]))?;
            let probs = r
                .iter()
                .skip(2)
                .map(|f| f.parse::<f64>().map_err(|e| format!("bad probability `{f}`: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(StreamRecord { t, source: r[1].to_string(), probs })
        });
        out.push((line, parsed));
    }
    Ok(out)
}

/// Validates a record's probabilities: at least two finite non-negative
/// entries summing to one within [`INGEST_SUM_TOL`], or any positive sum
/// when `renormalize` is set.
pub fn checked_probs(rec: &StreamRecord, renormalize: bool) -> Result<ProbabilityVector, String> {
    if !rec.t.is_finite() {
        return Err(format!("time {} is not finite", rec.t));
    }
    if rec.probs.len() < 2 {
        return Err(format!("need at least 2 probabilities, got {}", rec.probs.len()));
    }
    if let Some(p) = rec.probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(format!("probability {p} is not a finite non-negative number"));
    }
    let sum: f64 = rec.probs.iter().sum();
    if !renormalize && (sum - 1.0).abs() > INGEST_SUM_TOL {
        return Err(format!("probabilities sum to {sum}, expected 1"));
    }
    ProbabilityVector::normalized(rec.probs.clone()).map_err(|e| e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("write failed: {e}"))
}

pub fn write_stream<W: Write>(out: &mut W, records: &[StreamRecord], format: Format) -> Result<(), CliError> {
    match format {
        Format::Jsonl => {
            for r in records {
                let r = StreamRecord { t: r.t, source: r.source.clone(), probs: r.probs.iter().map(|&x| round12(x)).collect() };
                writeln!(out, "{}", serde_json::to_string(&r).map_err(io_err)?).map_err(io_err)?;
            }
        }
        Format::Csv => {
            let k = records.first().map_or(0, |r| r.probs.len());
            let mut w = csv::Writer::from_writer(out);
            let header: Vec<String> =
                ["t".to_string(), "source".to_string()].into_iter().chain((1..=k).map(|i| format!("p{i}"))).collect();
            w.write_record(&header).map_err(io_err)?;
            for r in records {
                let row: Vec<String> =
                    [fmt_num(r.t), r.source.clone()].into_iter().chain(r.probs.iter().map(|&x| fmt_num(x))).collect();
                w.write_record(&row).map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
    }
    Ok(())
}

/// Incremental writer for filter output.
pub struct OutputWriter<W: Write> {
    out: W,
    format: Format,
    header_done: bool,
}

impl<W: Write> OutputWriter<W> {
    pub fn new(out: W, format: Format) -> Self {
        Self { out, format, header_done: false }
    }

    pub fn write(&mut self, r: &OutputRecord) -> Result<(), CliError> {
        match self.format {
            Format::Jsonl => {
                let r = OutputRecord {
                    t: r.t,
                    source: r.source.clone(),
                    probs: r.probs.iter().map(|&x| round12(x)).collect(),
                    smoothed: r.smoothed.iter().map(|&x| round12(x)).collect(),
                    class: r.class,
                    converged: r.converged,
                };
                writeln!(self.out, "{}", serde_json::to_string(&r).map_err(io_err)?).map_err(io_err)
            }
            Format::Csv => {
                let k = r.probs.len();
                let mut fields: Vec<String> = Vec::with_capacity(2 * k + 4);
                if !self.header_done {
                    fields.extend(["t".to_string(), "source".to_string()]);
                    fields.extend((1..=k).map(|i| format!("p{i}")));
                    fields.extend((1..=k).map(|i| format!("smoothed{i}")));
                    fields.extend(["class".to_string(), "converged".to_string()]);
                    self.write_csv_row(&fields)?;
                    self.header_done = true;
                    fields.clear();
                }
                fields.extend([fmt_num(r.t), r.source.clone()]);
                fields.extend(r.probs.iter().map(|&x| fmt_num(x)));
                fields.extend(r.smoothed.iter().map(|&x| fmt_num(x)));
                fields.extend([r.class.to_string(), r.converged.to_string()]);
                self.write_csv_row(&fields)
            }
        }
    }

    fn write_csv_row(&mut self, fields: &[String]) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(fields).map_err(io_err)?;
        let bytes = w.into_inner().map_err(io_err)?;
        self.out.write_all(&bytes).map_err(io_err)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(io_err)
    }
}

/// Reads `(t, class)` pairs from filter output (either format) or from a
/// truth file. `column` names the CSV/JSON field holding the one-based label.
pub fn read_labels(text: &str, column: &str) -> Result<Vec<(f64, usize)>, CliError> {
    let mut out = Vec::new();
    match sniff(text) {
        Format::Jsonl => {
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let v: serde_json::Value = serde_json::from_str(line)
                    .map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
                let t = v.get("t").and_then(|x| x.as_f64());
                let c = v.get(column).and_then(|x| x.as_u64());
                match (t, c) {
                    (Some(t), Some(c)) => out.push((t, c as usize)),
                    _ => return Err(CliError::Data(format!("line {}: missing `t` or `{column}`", i + 1))),
                }
            }
        }
        Format::Csv => {
            let mut rdr = csv_reader(text);
            let header = rdr.headers().map_err(|e| CliError::Data(format!("bad CSV header: {e}")))?.clone();
            let find = |name: &str| {
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| CliError::Data(format!("CSV header has no `{name}` column")))
            };
            let (ti, ci) = (find("t")?, find(column)?);
            for row in rdr.records() {
                let r = row.map_err(|e| CliError::Data(e.to_string()))?;
                let line = r.position().map_or(0, |p| p.line());
                let get = |i: usize| r.get(i).ok_or_else(|| CliError::Data(format!("line {line}: missing field")));
                let t = get(ti)?.parse::<f64>().map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
                let c = get(ci)?.parse::<usize>().map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
                out.push((t, c));
            }
        }
    }
    Ok(out)
}

pub fn write_truth<W: Write>(out: W, truth: &[(f64, usize)]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "true_class"]).map_err(io_err)?;
    for &(t, c) in truth {
        w.write_record([fmt_num(t), (c + 1).to_string()]).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads the whole of `path`, or standard input for `-`.
pub fn read_input(path: Option<&std::path::Path>) -> Result<String, CliError> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", p.display()))),
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::Data(format!("cannot read standard input: {e}")))?;
            Ok(s)
        }
    }
}
