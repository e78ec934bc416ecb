// SPDX-License-Identifier: MIT OR Apache-2.0

//! On-disk formats: the binary tree file, CSV tables and JSON documents.
//!
//! CSV files use `,` as separator, `.` as decimal mark, a header row and LF
//! line endings. Floats are written in shortest round-trip form, so equal
//! values always produce equal bytes.

use std::fmt::Display;
use std::io::{self, BufRead, BufWriter, Read, Write};

use pachange_core::estimator::EstimateReport;
use pachange_core::leaves::{LeafConvention, LeafTrajectory};
use pachange_core::{ChangePointSchedule, GrowingTree, Segment};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TREE_MAGIC: [u8; 4] = *b"PACT";
pub const TREE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a tree file (bad magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported tree file version {0}")]
    UnsupportedVersion(u32),
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] pachange_core::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

/// Writes `tree` as `PACT | version u32 | n u64 | n parents u64`, all little
/// endian. The root is stored with parent 0.
pub fn write_tree<W: Write>(tree: &GrowingTree, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(&TREE_MAGIC)?;
    out.write_all(&TREE_VERSION.to_le_bytes())?;
    out.write_all(&(tree.n() as u64).to_le_bytes())?;
    for &p in tree.parents() {
        out.write_all(&(p as u64).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_tree<R: Read>(input: R) -> Result<GrowingTree> {
    let mut input = io::BufReader::new(input);
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != TREE_MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != TREE_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    let n = u64::from_le_bytes(buf) as usize;
    let mut parents = Vec::with_capacity(n);
    for _ in 0..n {
        input.read_exact(&mut buf)?;
        parents.push(u64::from_le_bytes(buf) as usize);
    }
    Ok(GrowingTree::from_parents(&parents)?)
}

/// Minimal CSV writer: header first, then rows of displayable cells.
pub struct CsvWriter<W: Write> {
    out: BufWriter<W>,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(out: W, header: &[&str]) -> io::Result<Self> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, cells: &[&dyn Display]) -> io::Result<()> {
        debug_assert_eq!(cells.len(), self.columns);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.out.write_all(b",")?;
            }
            write!(self.out, "{c}")?;
        }
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// `child,parent` for every non-root vertex.
pub fn write_edges<W: Write>(tree: &GrowingTree, out: W) -> io::Result<()> {
    let mut csv = CsvWriter::new(out, &["child", "parent"])?;
    for v in 2..=tree.n() {
        csv.row(&[&v, &tree.parent(v)])?;
    }
    csv.finish()
}

/// `m,leaf_count` for `m = 1..=n`.
pub fn write_leaves<W: Write>(traj: &LeafTrajectory, out: W) -> io::Result<()> {
    let mut csv = CsvWriter::new(out, &["m", "leaf_count"])?;
    for (i, c) in traj.counts().iter().enumerate() {
        csv.row(&[&(i + 1), c])?;
    }
    csv.finish()
}

pub fn read_leaves<R: Read>(input: R, convention: LeafConvention) -> Result<LeafTrajectory> {
    let rows = read_rows(input, &["m", "leaf_count"])?;
    let mut counts = Vec::with_capacity(rows.len());
    for (i, (line, cells)) in rows.into_iter().enumerate() {
        let m: usize = parse_cell(&cells[0], line)?;
        if m != i + 1 {
            return Err(FormatError::Csv {
                line,
                msg: format!("expected m = {}, found {m}", i + 1),
            });
        }
        counts.push(parse_cell::<u64>(&cells[1], line)?);
    }
    Ok(LeafTrajectory::from_counts(&counts, convention)?)
}

/// `k,count` for every degree present.
pub fn write_degrees<W: Write>(counts: &[u64], out: W) -> io::Result<()> {
    let mut csv = CsvWriter::new(out, &["k", "count"])?;
    for (k, c) in counts.iter().enumerate().filter(|(_, &c)| c > 0) {
        csv.row(&[&k, c])?;
    }
    csv.finish()
}

/// `k,p` for `k = 1..values.len()-1` (index 0 is skipped).
pub fn write_k_p<W: Write>(values: &[f64], out: W) -> io::Result<()> {
    let mut csv = CsvWriter::new(out, &["k", "p"])?;
    for (k, p) in values.iter().enumerate().skip(1) {
        csv.row(&[&k, p])?;
    }
    csv.finish()
}

fn parse_cell<T: std::str::FromStr>(cell: &str, line: usize) -> Result<T> {
    cell.trim().parse().map_err(|_| FormatError::Csv {
        line,
        msg: format!("cannot parse {cell:?}"),
    })
}

/// Data rows of a CSV with the given header, tagged with 1-based line numbers.
pub fn read_rows<R: Read>(input: R, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut lines = io::BufReader::new(input).lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    let found: Vec<&str> = first.trim_end_matches('\r').split(',').collect();
    if found != header {
        return Err(FormatError::Csv {
            line: 1,
            msg: format!("expected header {:?}, found {first:?}", header.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split(',').map(str::to_owned).collect();
        if cells.len() != header.len() {
            return Err(FormatError::Csv {
                line: i + 2,
                msg: format!("expected {} fields, found {}", header.len(), cells.len()),
            });
        }
        rows.push((i + 2, cells));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentJson {
    pub gamma: f64,
    pub beta: f64,
}

/// `{"alpha": .., "segments": [{"gamma": .., "beta": ..}, ..]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleJson {
    pub alpha: f64,
    #[serde(default)]
    pub segments: Vec<SegmentJson>,
}

impl From<&ChangePointSchedule> for ScheduleJson {
    fn from(s: &ChangePointSchedule) -> Self {
        Self {
            alpha: s.alpha(),
            segments: s
                .segments()
                .iter()
                .map(|seg| SegmentJson {
                    gamma: seg.gamma,
                    beta: seg.beta,
                })
                .collect(),
        }
    }
}

impl ScheduleJson {
    /// Validated schedule. Zero offsets are accepted.
    pub fn to_schedule(&self) -> Result<ChangePointSchedule> {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                gamma: s.gamma,
                beta: s.beta,
            })
            .collect();
        Ok(ChangePointSchedule::with_zero_offsets(self.alpha, segments)?)
    }
}

pub fn read_schedule<R: Read>(input: R) -> Result<ChangePointSchedule> {
    let json: ScheduleJson = serde_json::from_reader(input)?;
    json.to_schedule()
}

/// `{"gamma_hat": number|null, "dn_star", "detected", "epsilon", "threshold"}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub gamma_hat: Option<f64>,
    pub dn_star: f64,
    pub detected: bool,
    pub epsilon: f64,
    pub threshold: f64,
}

impl From<&EstimateReport> for ReportJson {
    fn from(r: &EstimateReport) -> Self {
        Self {
            gamma_hat: r.gamma_hat,
            dn_star: r.dn_star,
            detected: r.detected,
            epsilon: r.epsilon,
            threshold: r.threshold,
        }
    }
}
