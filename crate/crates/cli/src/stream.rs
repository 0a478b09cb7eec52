//! Line-delimited JSON formats.
//!
//! A stream file is one header line followed by one frame per line:
//!
//! ```text
//! {"format":"renn-stream","version":1,"dimension":2}
//! {"frame":1,"observations":[[0.1,0.2],[4.0,4.1]],"labels":["a","b"]}
//! {"frame":2,"observations":[[0.11,0.19]]}
//! ```
//!
//! Frame indices start at 1 and increase strictly; `labels`, when present,
//! must cover every observation. Report and precision/recall outputs use
//! the same shape with their own `format` names.

use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use renn_core::{Descriptor, Frame};

pub const STREAM_FORMAT: &str = "renn-stream";
pub const REPORT_FORMAT: &str = "renn-report";
pub const PR_FORMAT: &str = "renn-pr";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub dimension: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: u64,
    pub observations: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

pub fn header_line(format: &str, dimension: usize) -> String {
    serde_json::to_string(&Header {
        format: format.to_string(),
        version: FORMAT_VERSION,
        dimension,
    })
    .expect("header serializes")
}

pub fn frame_line(frame: &Frame) -> String {
    let record = FrameRecord {
        frame: frame.index,
        observations: frame
            .observations
            .iter()
            .map(|d| d.values().to_vec())
            .collect(),
        labels: frame.labels.clone(),
    };
    serde_json::to_string(&record).expect("frame serializes")
}

/// Lazy reader over a stream file; validates the header eagerly and each
/// frame line on demand, reporting 1-based line numbers in errors.
pub struct StreamReader {
    lines: Lines<BufReader<File>>,
    line_no: usize,
    pub dimension: usize,
}

impl StreamReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path)
            .with_context(|| format!("cannot open stream file {}", path.display()))?;
        let mut lines = BufReader::new(file).lines();
        let mut line_no = 0usize;
        let header_text = loop {
            line_no += 1;
            match lines.next() {
                Some(line) => {
                    let line = line.context("read error")?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => bail!("{}: empty file, expected a header line", path.display()),
            }
        };
        let header: Header = serde_json::from_str(&header_text)
            .map_err(|e| anyhow!("line {line_no}: bad header: {e}"))?;
        if header.format != STREAM_FORMAT {
            bail!(
                "line {line_no}: format {:?}, expected {STREAM_FORMAT:?}",
                header.format
            );
        }
        if header.version != FORMAT_VERSION {
            bail!(
                "line {line_no}: unsupported format version {}",
                header.version
            );
        }
        if header.dimension == 0 {
            bail!("line {line_no}: dimension must be >= 1");
        }
        Ok(StreamReader {
            lines,
            line_no,
            dimension: header.dimension,
        })
    }

    /// Next frame with its line number, or `None` at end of file.
    pub fn next_frame(&mut self) -> Result<Option<(usize, Frame)>> {
        loop {
            self.line_no += 1;
            let Some(line) = self.lines.next() else {
                return Ok(None);
            };
            let line = line.context("read error")?;
            if line.trim().is_empty() {
                continue;
            }
            let n = self.line_no;
            let record: FrameRecord =
                serde_json::from_str(&line).map_err(|e| anyhow!("line {n}: {e}"))?;
            return Ok(Some((n, self.to_frame(record, n)?)));
        }
    }

    fn to_frame(&self, record: FrameRecord, line_no: usize) -> Result<Frame> {
        let mut observations = Vec::with_capacity(record.observations.len());
        for values in record.observations {
            if values.len() != self.dimension {
                bail!(
                    "line {line_no}: observation dimension {} does not match the header's {}",
                    values.len(),
                    self.dimension
                );
            }
            observations.push(Descriptor::new(values).map_err(|e| anyhow!("line {line_no}: {e}"))?);
        }
        if let Some(labels) = &record.labels {
            if labels.len() != observations.len() {
                bail!(
                    "line {line_no}: {} labels for {} observations",
                    labels.len(),
                    observations.len()
                );
            }
        }
        Ok(Frame {
            index: record.frame,
            observations,
            labels: record.labels,
        })
    }
}

/// Read an entire labelled set eagerly (evaluation subsets are small).
pub fn read_frames(path: &Path) -> Result<(usize, Vec<(usize, Frame)>)> {
    let mut reader = StreamReader::open(path)?;
    let mut frames = Vec::new();
    while let Some(entry) = reader.next_frame()? {
        frames.push(entry);
    }
    Ok((reader.dimension, frames))
}
