//! Extraction deliverables: column crops, depth CSV, report and final mask,
//! either as files in a directory or as a single ZIP archive.
//!
//! Archives are byte-for-byte reproducible: fixed entry order, fixed
//! timestamps, images stored uncompressed (PNG is already compressed).

use std::fs;
use std::io::{Cursor, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipWriter};

use crate::depthref::{depth_csv_string, DepthInterval};
use crate::extraction::{ColumnCrop, ExtractionReport};
use crate::imagery::{self, GrayMask, ImageryError};

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Imagery(#[from] ImageryError),
    #[error(transparent)]
    Zip(#[from] zip::result::ZipError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn column_file_name(index: usize) -> String {
    format!("column_{index:03}.png")
}

/// Writes `column_NNN.png` and `report.json` into `out_dir`, plus
/// `depths.csv` when intervals are given, and returns the paths written.
pub fn write_extraction_outputs(
    out_dir: impl AsRef<Path>,
    report: &ExtractionReport,
    crops: &[ColumnCrop],
    intervals: Option<&[DepthInterval]>,
) -> Result<Vec<PathBuf>, ExportError> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(crops.len() + 2);
    for crop in crops {
        let path = out_dir.join(column_file_name(crop.index));
        fs::write(&path, imagery::encode_image_png(&crop.image)?)?;
        written.push(path);
    }
    let report_path = out_dir.join("report.json");
    fs::write(&report_path, serde_json::to_vec_pretty(report)?)?;
    written.push(report_path);
    if let Some(intervals) = intervals {
        let csv_path = out_dir.join("depths.csv");
        fs::write(&csv_path, depth_csv_string(&report.kept, Some(intervals)))?;
        written.push(csv_path);
    }
    Ok(written)
}

/// ZIP with `column_NNN.png…`, `depths.csv`, `report.json` and `mask.png`.
/// `depths.csv` is always present; its depth fields are empty without
/// intervals.
pub fn build_archive(
    report: &ExtractionReport,
    crops: &[ColumnCrop],
    intervals: Option<&[DepthInterval]>,
    mask: &GrayMask,
) -> Result<Vec<u8>, ExportError> {
    let stored = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Stored)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    let deflated = stored.compression_method(CompressionMethod::Deflated);

    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    for crop in crops {
        zip.start_file(column_file_name(crop.index), stored)?;
        zip.write_all(&imagery::encode_image_png(&crop.image)?)?;
    }
    zip.start_file("depths.csv", deflated)?;
    zip.write_all(depth_csv_string(&report.kept, intervals).as_bytes())?;
    zip.start_file("report.json", deflated)?;
    zip.write_all(&serde_json::to_vec_pretty(report)?)?;
    zip.start_file("mask.png", stored)?;
    zip.write_all(&imagery::encode_mask_png(mask)?)?;
    Ok(zip.finish()?.into_inner())
}
