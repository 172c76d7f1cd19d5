use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "T", serialize_with = "exact", deserialize_with = "parse_f64")]
    pub t: f64,
    #[serde(serialize_with = "exact", deserialize_with = "parse_f64")]
    pub value: f64,
    pub tag: String,
}

fn exact<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{x:.16e}"))
}

fn parse_f64<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    let s = String::deserialize(d)?;
    s.trim().parse().map_err(serde::de::Error::custom)
}

/// Tagged curves plus the metadata needed to reproduce them.
///
/// On disk: `# key: value` lines, then a `T,value,tag` CSV table. Numbers are
/// written with 17 significant digits so a read returns identical bits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn new() -> Self {
        let mut s = SweepResult::default();
        s.push_meta("code_version", env!("CARGO_PKG_VERSION"));
        s
    }

    pub fn push_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push_curve(&mut self, tag: &str, points: impl IntoIterator<Item = (f64, f64)>) {
        self.rows.extend(points.into_iter().map(|(t, value)| SweepRow { t, value, tag: tag.to_string() }));
    }

    /// Distinct tags in order of first appearance.
    pub fn tags(&self) -> Vec<&str> {
        let mut tags: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !tags.contains(&r.tag.as_str()) {
                tags.push(&r.tag);
            }
        }
        tags
    }

    pub fn curve(&self, tag: &str) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.tag == tag).map(|r| (r.t, r.value)).collect()
    }

    /// Checks that `T` increases strictly within each curve and that values
    /// are probabilities.
    pub fn validate(&self) -> Result<()> {
        for tag in self.tags() {
            let c = self.curve(tag);
            if let Some(w) = c.windows(2).find(|w| w[1].0 <= w[0].0) {
                return Err(Error::param("T", format!("curve `{tag}` is not strictly increasing at T = {}", w[1].0)));
            }
            if let Some((t, v)) = c.iter().find(|(_, v)| !(0.0..=1.0).contains(v)) {
                return Err(Error::param("value", format!("curve `{tag}` has {v} at T = {t}, outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            for line in v.lines() {
                writeln!(out, "# {k}: {line}")?;
            }
        }
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(["T", "value", "tag"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut table = String::new();
        for line in input.lines() {
            let line = line?;
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim_start();
                if let Some((k, v)) = rest.split_once(": ") {
                    metadata.push((k.to_string(), v.to_string()));
                } else if let Some(k) = rest.strip_suffix(':') {
                    metadata.push((k.to_string(), String::new()));
                }
            } else {
                table.push_str(&line);
                table.push('\n');
            }
        }
        let mut r = csv::Reader::from_reader(table.as_bytes());
        let rows = r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
        Ok(SweepResult { metadata, rows })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}
