use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use crate::args::Format;

pub const TOOL: &str = "tilepile";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub spec_hash: Option<String>,
    pub knobs: serde_json::Value,
    pub seed: Option<u64>,
}

impl Header {
    pub fn new(spec_hash: Option<String>, knobs: serde_json::Value, seed: Option<u64>) -> Self {
        Header { tool: TOOL.into(), version: env!("CARGO_PKG_VERSION").into(), spec_hash, knobs, seed }
    }
}

/// JSON output: the header fields plus `result`.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    header: &'a Header,
    result: &'a T,
}

pub struct Sink {
    path: Option<PathBuf>,
    format: Format,
}

impl Sink {
    pub fn new(path: Option<&Path>, format: Format) -> Self {
        Sink { path: path.map(Path::to_path_buf), format }
    }

    pub fn emit<T: Serialize>(&self, header: &Header, result: &T, cols: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut buf: Vec<u8> = Vec::new();
        match self.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut buf, &Envelope { header, result })?;
                buf.push(b'\n');
            }
            Format::Csv => {
                writeln!(buf, "# tool: {} {}", header.tool, header.version)?;
                if let Some(h) = &header.spec_hash {
                    writeln!(buf, "# spec_hash: {h}")?;
                }
                writeln!(buf, "# knobs: {}", serde_json::to_string(&header.knobs)?)?;
                if let Some(s) = header.seed {
                    writeln!(buf, "# seed: {s}")?;
                }
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(cols)?;
                for r in rows {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
        }
        match &self.path {
            Some(p) => std::fs::write(p, &buf)?,
            None => std::io::stdout().write_all(&buf)?,
        }
        Ok(())
    }
}
