//! Depth referencing of extracted columns.
//!
//! A core box carries a measured-depth range (top, bottom). Columns are put in
//! drilling order according to the box layout, then the range is apportioned
//! either proportionally to each column's pixel length or in fixed lengths.

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::BoundingBox;

#[derive(Debug, Error, PartialEq)]
pub enum DepthError {
    #[error("no columns to reference")]
    EmptyInput,
    #[error("bottom depth {bottom} must exceed top depth {top}")]
    DegenerateSpec { top: f64, bottom: f64 },
    #[error("fixed column length must be positive, got {0}")]
    InvalidColumnLength(f64),
    #[error("columns have zero total length along the core axis")]
    ZeroLength,
    #[error("interval for column {column} would be [{from}, {to}]")]
    NonPositiveInterval { column: usize, from: f64, to: f64 },
    #[error("no interval for column {0}")]
    UnknownColumn(usize),
}

pub type Result<T, E = DepthError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrder {
    #[default]
    TopToBottom,
    BottomToTop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WithinRow {
    #[default]
    LeftToRight,
    RightToLeft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Layout {
    pub rows: RowOrder,
    pub within: WithinRow,
}

/// Direction in which the core runs inside each column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreAxis {
    #[default]
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DepthMode {
    #[default]
    Proportional,
    FixedLength { meters: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSpec {
    pub top: f64,
    pub bottom: f64,
    #[serde(default)]
    pub layout: Layout,
    #[serde(default)]
    pub mode: DepthMode,
    #[serde(default)]
    pub axis: CoreAxis,
}

impl DepthSpec {
    pub fn new(top: f64, bottom: f64) -> Self {
        Self { top, bottom, layout: Layout::default(), mode: DepthMode::Proportional, axis: CoreAxis::Horizontal }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bottom > self.top) || !self.top.is_finite() || !self.bottom.is_finite() {
            return Err(DepthError::DegenerateSpec { top: self.top, bottom: self.bottom });
        }
        if let DepthMode::FixedLength { meters } = self.mode {
            if !(meters > 0.0) || !meters.is_finite() {
                return Err(DepthError::InvalidColumnLength(meters));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthInterval {
    pub column: usize,
    pub from: f64,
    pub to: f64,
}

impl std::fmt::Display for DepthInterval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "column {}: {:.2}-{:.2} m", self.column, self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DepthAssignment {
    pub intervals: Vec<DepthInterval>,
    pub warnings: Vec<String>,
}

fn layout_permutation(boxes: &[BoundingBox], layout: Layout) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..boxes.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ba, bb) = (&boxes[a], &boxes[b]);
        let rows = match layout.rows {
            RowOrder::TopToBottom => ba.y.cmp(&bb.y),
            RowOrder::BottomToTop => bb.y.cmp(&ba.y),
        };
        let within = match layout.within {
            WithinRow::LeftToRight => ba.x.cmp(&bb.x),
            WithinRow::RightToLeft => bb.x.cmp(&ba.x),
        };
        rows.then(within).then(a.cmp(&b))
    });
    idx
}

/// Boxes in drilling order: rows by y per the layout, ties by x.
pub fn order_columns(boxes: &[BoundingBox], layout: Layout) -> Vec<BoundingBox> {
    layout_permutation(boxes, layout).into_iter().map(|i| boxes[i]).collect()
}

/// Intervals for already-ordered columns; `column` is the position in `ordered`.
pub fn assign_depths(ordered: &[BoundingBox], spec: &DepthSpec) -> Result<DepthAssignment> {
    spec.validate()?;
    if ordered.is_empty() {
        return Err(DepthError::EmptyInput);
    }
    let span = spec.bottom - spec.top;
    let mut out = DepthAssignment::default();
    match spec.mode {
        DepthMode::Proportional => {
            let lengths: Vec<f64> = ordered
                .iter()
                .map(|b| match spec.axis {
                    CoreAxis::Horizontal => b.w as f64,
                    CoreAxis::Vertical => b.h as f64,
                })
                .collect();
            let total: f64 = lengths.iter().sum();
            if total <= 0.0 {
                return Err(DepthError::ZeroLength);
            }
            let mut acc = 0.0;
            let mut from = spec.top;
            for (i, len) in lengths.iter().enumerate() {
                acc += len;
                let to = if i + 1 == lengths.len() { spec.bottom } else { spec.top + span * (acc / total) };
                out.intervals.push(DepthInterval { column: i, from, to });
                from = to;
            }
        }
        DepthMode::FixedLength { meters } => {
            for i in 0..ordered.len() {
                let from = spec.top + meters * i as f64;
                let mut to = from + meters;
                if from >= spec.bottom {
                    out.warnings.push(format!(
                        "column {i} starts at {from:.2} m, below the box bottom depth {:.2} m",
                        spec.bottom
                    ));
                } else if to > spec.bottom {
                    out.warnings.push(format!(
                        "column {i} truncated at the box bottom depth {:.2} m (fixed length would end at {to:.2} m)",
                        spec.bottom
                    ));
                    to = spec.bottom;
                }
                out.intervals.push(DepthInterval { column: i, from, to });
            }
        }
    }
    Ok(out)
}

/// Orders `kept` per the spec's layout and assigns depths; interval `column`
/// fields index into `kept` (i.e. crop indices) and intervals are listed in
/// depth order.
pub fn reference_columns(kept: &[BoundingBox], spec: &DepthSpec) -> Result<DepthAssignment> {
    let perm = layout_permutation(kept, spec.layout);
    let ordered: Vec<BoundingBox> = perm.iter().map(|&i| kept[i]).collect();
    let mut a = assign_depths(&ordered, spec)?;
    for iv in &mut a.intervals {
        iv.column = perm[iv.column];
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthEdit {
    pub column: usize,
    pub from: f64,
    pub to: f64,
}

/// Applies user edits verbatim and reports gaps/overlaps between
/// consecutive intervals as warnings.
pub fn adjust_depths(intervals: &[DepthInterval], edits: &[DepthEdit]) -> Result<DepthAssignment> {
    let mut out = intervals.to_vec();
    for e in edits {
        if !(e.to > e.from) || !e.from.is_finite() || !e.to.is_finite() {
            return Err(DepthError::NonPositiveInterval { column: e.column, from: e.from, to: e.to });
        }
        let slot = out.iter_mut().find(|iv| iv.column == e.column).ok_or(DepthError::UnknownColumn(e.column))?;
        slot.from = e.from;
        slot.to = e.to;
    }
    let warnings = contiguity_warnings(&out);
    Ok(DepthAssignment { intervals: out, warnings })
}

pub fn contiguity_warnings(intervals: &[DepthInterval]) -> Vec<String> {
    intervals
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            if a.to < b.from {
                Some(format!(
                    "gap between column {} (ends {:.3} m) and column {} (starts {:.3} m)",
                    a.column, a.to, b.column, b.from
                ))
            } else if a.to > b.from {
                Some(format!(
                    "overlap between column {} (ends {:.3} m) and column {} (starts {:.3} m)",
                    a.column, a.to, b.column, b.from
                ))
            } else {
                None
            }
        })
        .collect()
}

fn filename_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"_(\d+(?:\.\d+)?)-(\d+(?:\.\d+)?)m$").expect("valid regex"))
}

/// Parses `<name>_<top>-<bottom>m.<ext>` into (top, bottom) metres.
pub fn parse_depth_filename(path: impl AsRef<Path>) -> Option<(f64, f64)> {
    let stem = path.as_ref().file_stem()?.to_str()?;
    let caps = filename_pattern().captures(stem)?;
    let top: f64 = caps[1].parse().ok()?;
    let bottom: f64 = caps[2].parse().ok()?;
    (bottom > top).then_some((top, bottom))
}

/// Writes `index,x,y,w,h,depth_from_m,depth_to_m` rows in interval order.
/// Without intervals the depth fields are left empty and rows follow box order.
pub fn write_depth_csv<W: Write>(writer: W, boxes: &[BoundingBox], intervals: Option<&[DepthInterval]>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "x", "y", "w", "h", "depth_from_m", "depth_to_m"])?;
    let row = |i: usize, b: &BoundingBox, from: String, to: String| {
        vec![i.to_string(), b.x.to_string(), b.y.to_string(), b.w.to_string(), b.h.to_string(), from, to]
    };
    match intervals {
        Some(ivs) => {
            for iv in ivs {
                if let Some(b) = boxes.get(iv.column) {
                    w.write_record(row(iv.column, b, iv.from.to_string(), iv.to.to_string()))?;
                }
            }
        }
        None => {
            for (i, b) in boxes.iter().enumerate() {
                w.write_record(row(i, b, String::new(), String::new()))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn depth_csv_string(boxes: &[BoundingBox], intervals: Option<&[DepthInterval]>) -> String {
    let mut buf = Vec::new();
    write_depth_csv(&mut buf, boxes, intervals).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}
