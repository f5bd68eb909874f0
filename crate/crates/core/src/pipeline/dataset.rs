//! On-disk datasets: a manifest CSV plus one raster file per sample.
//!
//! Manifest columns: `sample_id,region_id,timestamp,subclass,label,partition,image_path`.
//! `image_path` is relative to the manifest's directory; `label` is 0 (NF) or
//! 1 (FL); `timestamp` is RFC 3339 UTC.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordinal::{BinaryLabel, FlareClass, ThresholdSpec};

use super::label::{assign_partitions, Partition, SplitAssignment};
use super::raster::Raster;
use super::sample::LabeledSample;

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const IMAGE_DIR: &str = "images";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub sample_id: u64,
    pub region_id: u64,
    pub timestamp: String,
    pub subclass: String,
    pub label: u8,
    pub partition: u8,
    pub image_path: String,
}

/// A sample paired with the partition it was assigned to.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSample {
    pub sample: LabeledSample,
    pub partition: Partition,
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("manifest: {other:?}")),
    }
}

/// Partitions samples by region (first observation month).
pub fn partition_samples(samples: &[LabeledSample]) -> Result<SplitAssignment> {
    let regions: Vec<(u64, DateTime<Utc>)> = samples
        .iter()
        .map(|s| (s.region_id(), s.timestamp()))
        .collect();
    assign_partitions(&regions)
}

/// Writes `manifest` into `dir` and each image to `dir/images/<sample_id>.raster`.
pub fn write_dataset(dir: &Path, manifest: &str, samples: &[StoredSample]) -> Result<()> {
    fs::create_dir_all(dir.join(IMAGE_DIR))?;
    let mut writer = csv::Writer::from_path(dir.join(manifest)).map_err(csv_err)?;
    if samples.is_empty() {
        writer
            .write_record([
                "sample_id",
                "region_id",
                "timestamp",
                "subclass",
                "label",
                "partition",
                "image_path",
            ])
            .map_err(csv_err)?;
    }
    for s in samples {
        let rel = format!("{IMAGE_DIR}/{}.raster", s.sample.sample_id());
        s.sample.image().write(&dir.join(&rel))?;
        writer
            .serialize(ManifestRow {
                sample_id: s.sample.sample_id(),
                region_id: s.sample.region_id(),
                timestamp: s
                    .sample
                    .timestamp()
                    .to_rfc3339_opts(SecondsFormat::Secs, true),
                subclass: s.sample.subclass().token().to_string(),
                label: s.sample.label().as_u8(),
                partition: s.partition.number(),
                image_path: rel,
            })
            .map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    reader.deserialize().map(|r| r.map_err(csv_err)).collect()
}

/// Reads a dataset, validating each row's label against `threshold`.
pub fn read_dataset(
    dir: &Path,
    manifest: &str,
    threshold: ThresholdSpec,
) -> Result<Vec<StoredSample>> {
    let rows = read_manifest(&dir.join(manifest))?;
    rows.into_iter()
        .map(|row| {
            let subclass: FlareClass = row.subclass.parse()?;
            let timestamp = DateTime::parse_from_rfc3339(&row.timestamp)
                .map_err(|e| Error::Parse(format!("timestamp {:?}: {e}", row.timestamp)))?
                .with_timezone(&Utc);
            let image = Raster::read(&resolve(dir, &row.image_path))?;
            let sample = LabeledSample::new(
                row.sample_id,
                row.region_id,
                timestamp,
                subclass,
                threshold,
                image,
            )?;
            let stored_label = BinaryLabel::from_u8(row.label)?;
            if stored_label != sample.label() {
                log::debug!(
                    "sample {}: stored label {stored_label} differs under {threshold}; relabeled",
                    row.sample_id
                );
            }
            Ok(StoredSample {
                sample,
                partition: Partition::new(row.partition)?,
            })
        })
        .collect()
}

fn resolve(dir: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}
