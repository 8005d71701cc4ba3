use clap::ValueEnum;
use selfaffine_core::dimension::{to_csv_string, DimensionEstimate};
use selfaffine_core::{Error, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Collects the command's result and prints it once in the chosen format.
pub struct Output {
    format: Format,
    text: String,
}

impl Output {
    pub fn new(format: Format) -> Self {
        Output { format, text: String::new() }
    }

    pub fn flush(&self) {
        print!("{}", self.text);
    }

    pub fn estimates(&mut self, est: &[DimensionEstimate]) -> Result<()> {
        self.text = match self.format {
            Format::Csv => to_csv_string(est)?,
            Format::Json => serde_json::to_string_pretty(est)? + "\n",
        };
        Ok(())
    }

    pub fn pairs(&mut self, pairs: &[(&str, Value)]) {
        let obj: serde_json::Map<String, Value> = pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        self.object(Value::Object(obj));
    }

    /// JSON as is; CSV as `key,value` lines with nested values inlined as JSON.
    pub fn object(&mut self, v: Value) {
        self.text = match self.format {
            Format::Json => serde_json::to_string_pretty(&v).expect("values serialize") + "\n",
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["key", "value"]).expect("in-memory write");
                if let Value::Object(map) = v {
                    for (k, v) in map {
                        let cell = match v {
                            Value::String(s) => s,
                            other => other.to_string(),
                        };
                        w.write_record([k, cell]).expect("in-memory write");
                    }
                }
                String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv is utf-8")
            }
        };
    }

    pub fn rows<T: Serialize>(&mut self, rows: &[T]) -> Result<()> {
        self.text = match self.format {
            Format::Json => serde_json::to_string_pretty(rows)? + "\n",
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in rows {
                    w.serialize(r).map_err(|e| Error::Io(e.to_string()))?;
                }
                String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
                    .map_err(|e| Error::Io(e.to_string()))?
            }
        };
        Ok(())
    }
}
