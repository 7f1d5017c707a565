//! Comma-separated camera, observation, reference and distance tables.
//!
//! A header row is required; columns are matched by name so extra columns
//! are ignored. Lines beginning with `#` are comments. Numbers use `.` as
//! the decimal point and nothing else.

use std::collections::HashSet;
use std::f64::consts::PI;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use super::IngestError;
use crate::model::{Camera, Observation, ReferenceSample, Source, DEFAULT_MAX_REFERENCE_M};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Cameras,
    Observations,
    References,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Cameras(Vec<Camera>),
    Observations(Vec<Observation>),
    References(Vec<ReferenceSample>),
}

pub fn parse_tables(csv_text: &str, kind: TableKind) -> Result<Table, IngestError> {
    Ok(match kind {
        TableKind::Cameras => Table::Cameras(parse_cameras(csv_text)?),
        TableKind::Observations => Table::Observations(parse_observations(csv_text)?),
        TableKind::References => {
            Table::References(parse_references(csv_text, DEFAULT_MAX_REFERENCE_M)?)
        }
    })
}

struct Columns {
    names: Vec<&'static str>,
    idx: Vec<Option<usize>>,
}

impl Columns {
    fn resolve(
        header: &StringRecord,
        required: &[&'static str],
        optional: &[&'static str],
    ) -> Result<Self, IngestError> {
        let find = |name: &str| header.iter().position(|h| h.trim() == name);
        let mut names = Vec::new();
        let mut idx = Vec::new();
        for &name in required {
            let i = find(name).ok_or_else(|| IngestError::MissingColumn(name.to_string()))?;
            names.push(name);
            idx.push(Some(i));
        }
        for &name in optional {
            names.push(name);
            idx.push(find(name));
        }
        Ok(Self { names, idx })
    }

    fn text<'r>(&self, rec: &'r StringRecord, name: &str) -> Option<&'r str> {
        let k = self.names.iter().position(|n| *n == name)?;
        self.idx[k].and_then(|i| rec.get(i)).map(str::trim)
    }

    fn required<'r>(&self, rec: &'r StringRecord, name: &'static str, row: usize) -> Result<&'r str, IngestError> {
        self.text(rec, name).ok_or(IngestError::BadNumeric {
            row,
            column: name.to_string(),
            value: String::new(),
        })
    }

    fn number(&self, rec: &StringRecord, name: &'static str, row: usize) -> Result<f64, IngestError> {
        let raw = self.required(rec, name, row)?;
        parse_number(raw).ok_or_else(|| IngestError::BadNumeric {
            row,
            column: name.to_string(),
            value: raw.to_string(),
        })
    }
}

/// Plain decimal literal: optional sign, digits, '.', exponent. Rejects
/// thousands separators, comma decimals, and textual `inf`/`nan`.
fn parse_number(raw: &str) -> Option<f64> {
    let ok = !raw.is_empty()
        && raw
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'));
    if !ok {
        return None;
    }
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn records(text: &str) -> Result<(StringRecord, Vec<StringRecord>), IngestError> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| IngestError::Parse(e.to_string()))?
        .clone();
    let rows = rdr
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| IngestError::Parse(e.to_string()))?;
    Ok((header, rows))
}

/// `camera_id,fov_deg,operation_time_days[,location]`; stored in radians and seconds.
pub fn parse_cameras(text: &str) -> Result<Vec<Camera>, IngestError> {
    let (header, rows) = records(text)?;
    let cols = Columns::resolve(
        &header,
        &["camera_id", "fov_deg", "operation_time_days"],
        &["location"],
    )?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(rows.len());
    for (i, rec) in rows.iter().enumerate() {
        let row = i + 1;
        let id = cols.required(rec, "camera_id", row)?.to_string();
        let fov_deg = cols.number(rec, "fov_deg", row)?;
        let days = cols.number(rec, "operation_time_days", row)?;
        if !seen.insert(id.clone()) {
            return Err(IngestError::DuplicateCamera(id));
        }
        let mut cam = Camera::new(id, fov_deg * PI / 180.0, days * SECONDS_PER_DAY)?;
        if let Some(loc) = cols.text(rec, "location").filter(|s| !s.is_empty()) {
            cam = cam.with_location(loc);
        }
        out.push(cam);
    }
    Ok(out)
}

fn parse_source(raw: &str, row: usize) -> Result<Source, IngestError> {
    match raw.to_ascii_lowercase().as_str() {
        "manual" => Ok(Source::Manual),
        "model" => Ok(Source::Model),
        _ => Err(IngestError::BadValue {
            row,
            column: "source".into(),
            value: raw.to_string(),
        }),
    }
}

/// `camera_id,timestamp_s,distance_m,source`.
pub fn parse_observations(text: &str) -> Result<Vec<Observation>, IngestError> {
    let (header, rows) = records(text)?;
    let cols = Columns::resolve(
        &header,
        &["camera_id", "timestamp_s", "distance_m", "source"],
        &[],
    )?;
    rows.iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let id = cols.required(rec, "camera_id", row)?;
            let ts = cols.number(rec, "timestamp_s", row)?;
            let d = cols.number(rec, "distance_m", row)?;
            let src = parse_source(cols.required(rec, "source", row)?, row)?;
            Ok(Observation::new(id, ts, d, src)?)
        })
        .collect()
}

/// `camera_id,known_distance_m,raw_depth`.
pub fn parse_references(text: &str, max_distance_m: f64) -> Result<Vec<ReferenceSample>, IngestError> {
    let (header, rows) = records(text)?;
    let cols = Columns::resolve(&header, &["camera_id", "known_distance_m", "raw_depth"], &[])?;
    rows.iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let id = cols.required(rec, "camera_id", row)?;
            let known = cols.number(rec, "known_distance_m", row)?;
            let raw = cols.number(rec, "raw_depth", row)?;
            Ok(ReferenceSample::with_max_distance(id, known, raw, max_distance_m)?)
        })
        .collect()
}

/// One row of a per-frame distance table, as needed for evaluation joins.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDistance {
    pub frame_id: String,
    pub camera_id: Option<String>,
    pub distance_m: f64,
}

/// Reads `frame_id,distance_m` (other columns optional). Used for both the
/// model distance table and manual annotation tables.
pub fn parse_frame_distances(text: &str) -> Result<Vec<FrameDistance>, IngestError> {
    let (header, rows) = records(text)?;
    let cols = Columns::resolve(&header, &["frame_id", "distance_m"], &["camera_id"])?;
    rows.iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let distance_m = cols.number(rec, "distance_m", row)?;
            if distance_m <= 0.0 {
                return Err(IngestError::BadValue {
                    row,
                    column: "distance_m".into(),
                    value: distance_m.to_string(),
                });
            }
            Ok(FrameDistance {
                frame_id: cols.required(rec, "frame_id", row)?.to_string(),
                camera_id: cols
                    .text(rec, "camera_id")
                    .filter(|s| !s.is_empty())
                    .map(str::to_string),
                distance_m,
            })
        })
        .collect()
}

/// Serializes a table from a header and rows of already formatted fields.
pub fn write_csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        let fields: Vec<String> = row.into_iter().collect();
        w.write_record(&fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Cameras in the same units `parse_cameras` reads.
pub fn write_cameras(cameras: &[Camera]) -> String {
    write_csv(
        &["camera_id", "fov_deg", "operation_time_days", "location"],
        cameras.iter().map(|c| {
            vec![
                c.camera_id.clone(),
                (c.fov_rad * 180.0 / PI).to_string(),
                (c.operation_time_s / SECONDS_PER_DAY).to_string(),
                c.location.clone().unwrap_or_default(),
            ]
        }),
    )
}

pub fn write_observations(observations: &[Observation]) -> String {
    write_csv(
        &["camera_id", "timestamp_s", "distance_m", "source"],
        observations.iter().map(|o| {
            vec![
                o.camera_id.clone(),
                o.timestamp_s.to_string(),
                o.distance_m.to_string(),
                o.source.to_string(),
            ]
        }),
    )
}
