//! Shot CSV files and JSON documents.
//!
//! Shot CSV columns: `shot, tone, i, q, preselection, true_level`, one row per
//! shot and tone. `true_level` is the prepared state.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discriminate::fnn::INPUT_DIM;
use crate::discriminate::{Dataset, FnnModel};
use crate::error::{ReadoutError, Result};
use crate::levels::Level;
use crate::readout::{IQShot, PreselectFlag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRow {
    pub shot: u64,
    pub tone: usize,
    pub i: f64,
    pub q: f64,
    pub preselection: PreselectFlag,
    pub true_level: Level,
}

/// Flattens shots into CSV rows, numbering shots from zero.
pub fn shot_rows<'a>(shots: impl IntoIterator<Item = &'a IQShot>) -> Vec<ShotRow> {
    let mut rows = Vec::new();
    for (index, shot) in shots.into_iter().enumerate() {
        for (tone, v) in shot.voltages.iter().enumerate() {
            rows.push(ShotRow {
                shot: index as u64,
                tone,
                i: v.re,
                q: v.im,
                preselection: shot.preselection,
                true_level: shot.prepared,
            });
        }
    }
    rows
}

/// Writes any sequence of serializable records as CSV with a header row.
pub fn write_records<T: Serialize>(
    path: &Path,
    records: impl IntoIterator<Item = T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| ReadoutError::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush().map_err(|e| ReadoutError::io(path, e))?;
    Ok(())
}

pub fn write_shots_csv<'a>(path: &Path, shots: impl IntoIterator<Item = &'a IQShot>) -> Result<()> {
    write_records(path, shot_rows(shots))
}

/// Reads a shot CSV back. Rows may appear in any order; tones are ordered by
/// tone id. The readout level is not stored and comes back as `None`.
pub fn read_shots_csv(path: &Path) -> Result<Vec<IQShot>> {
    let file = File::open(path).map_err(|e| ReadoutError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut grouped: BTreeMap<u64, Vec<ShotRow>> = BTreeMap::new();
    for row in reader.deserialize() {
        let row: ShotRow = row?;
        grouped.entry(row.shot).or_default().push(row);
    }
    let mut shots = Vec::with_capacity(grouped.len());
    for (index, mut rows) in grouped {
        rows.sort_by_key(|r| r.tone);
        let consistent = rows.iter().enumerate().all(|(k, r)| {
            r.tone == k
                && r.true_level == rows[0].true_level
                && r.preselection == rows[0].preselection
        });
        if !consistent {
            return Err(ReadoutError::Config(format!(
                "{}: shot {index} has inconsistent or missing tone rows",
                path.display()
            )));
        }
        shots.push(IQShot {
            voltages: rows.iter().map(|r| Complex64::new(r.i, r.q)).collect(),
            preselection_record: None,
            preselection: rows[0].preselection,
            prepared: rows[0].true_level,
            readout_level: None,
        });
    }
    Ok(shots)
}

/// Two-tone features `{I1, Q1, I2, Q2}` of a shot.
pub fn two_tone_features(shot: &IQShot) -> Result<[f64; INPUT_DIM]> {
    match shot.voltages.as_slice() {
        [a, b] => Ok([a.re, a.im, b.re, b.im]),
        other => Err(ReadoutError::InvalidArgument(format!(
            "expected two tones per shot, found {}",
            other.len()
        ))),
    }
}

/// Labelled two-tone dataset; shots that failed preselection and prepared
/// states outside `|0>..|2>` are skipped.
pub fn shots_to_dataset<'a>(shots: impl IntoIterator<Item = &'a IQShot>) -> Result<Dataset> {
    let mut data = Dataset::default();
    for shot in shots {
        if shot.preselection == PreselectFlag::Failed || shot.prepared == Level::Three {
            continue;
        }
        data.push(two_tone_features(shot)?, shot.prepared.index());
    }
    Ok(data)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| ReadoutError::Serde(e.to_string()))?;
    let mut file = File::create(path).map_err(|e| ReadoutError::io(path, e))?;
    file.write_all(text.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .map_err(|e| ReadoutError::io(path, e))
}

pub fn write_model(path: &Path, model: &FnnModel) -> Result<()> {
    let text = model.to_json()?;
    std::fs::write(path, text).map_err(|e| ReadoutError::io(path, e))
}

pub fn read_model(path: &Path) -> Result<FnnModel> {
    let text = std::fs::read_to_string(path).map_err(|e| ReadoutError::io(path, e))?;
    FnnModel::from_json(&text)
}
