use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BoxLower,
    BoxUpper,
    Assouad,
    AssouadProjection,
    Delta,
    Frostman,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::BoxLower,
        Method::BoxUpper,
        Method::Assouad,
        Method::AssouadProjection,
        Method::Delta,
        Method::Frostman,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::BoxLower => "box_lower",
            Method::BoxUpper => "box_upper",
            Method::Assouad => "assouad",
            Method::AssouadProjection => "assouad_projection",
            Method::Delta => "delta",
            Method::Frostman => "frostman",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method '{s}'")))
    }
}

/// One `(n, log₂ count)` sample, tagged with the coarse level `k` it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub k: u32,
    pub n: u32,
    pub log2count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub method: Method,
    pub value: f64,
    /// Standard error of the fitted slope.
    pub stderr: f64,
    /// Coarse level of the reported fit.
    pub k: Option<u32>,
    /// Window depth (levels `k..=k+m`).
    pub m: Option<u32>,
    pub table: Vec<ScaleRow>,
    pub notes: Vec<String>,
}

impl DimensionEstimate {
    pub fn new(
        method: Method,
        value: f64,
        stderr: f64,
        k: Option<u32>,
        m: Option<u32>,
        table: Vec<ScaleRow>,
    ) -> Self {
        DimensionEstimate { method, value, stderr, k, m, table, notes: Vec::new() }
    }

    /// `(coarse, fine)` levels of the reported fit.
    pub fn scale_range(&self) -> Option<(u32, u32)> {
        Some((self.k?, self.k? + self.m?))
    }
}

const HEADER: [&str; 7] = ["method", "value", "stderr", "k", "m", "n", "log2count"];

#[derive(Serialize, Deserialize)]
struct CsvRow {
    method: String,
    value: f64,
    stderr: f64,
    k: Option<u32>,
    m: Option<u32>,
    n: Option<u32>,
    log2count: Option<f64>,
}

/// Long-format CSV: one row per table entry (or a single row with empty
/// `n, log2count` for an estimate without a table). The `k` column carries
/// the row's own coarse level when a table is present.
pub fn write_csv<W: Write>(estimates: &[DimensionEstimate], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(HEADER).map_err(csv_err)?;
    for e in estimates {
        let base = |k: Option<u32>, n, log2count| CsvRow {
            method: e.method.to_string(),
            value: e.value,
            stderr: e.stderr,
            k,
            m: e.m,
            n,
            log2count,
        };
        if e.table.is_empty() {
            w.serialize(base(e.k, None, None)).map_err(csv_err)?;
        }
        for r in &e.table {
            w.serialize(base(Some(r.k), Some(r.n), Some(r.log2count))).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(estimates: &[DimensionEstimate]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(estimates, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

/// Reads the format written by [`write_csv`]. Consecutive rows with the same
/// method, value and stderr form one estimate.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<DimensionEstimate>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_err)?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Parse(format!("unexpected CSV header {:?}", headers)));
    }
    let mut out: Vec<DimensionEstimate> = Vec::new();
    for rec in r.deserialize() {
        let row: CsvRow = rec.map_err(csv_err)?;
        let method: Method = row.method.parse()?;
        let same = out.last().is_some_and(|e| {
            e.method == method && e.value.to_bits() == row.value.to_bits() && e.stderr.to_bits() == row.stderr.to_bits()
        });
        if !same {
            out.push(DimensionEstimate::new(method, row.value, row.stderr, row.k, row.m, Vec::new()));
        }
        if let (Some(n), Some(log2count)) = (row.n, row.log2count) {
            let e = out.last_mut().expect("pushed above");
            e.table.push(ScaleRow { k: row.k.unwrap_or(0), n, log2count });
        }
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}
