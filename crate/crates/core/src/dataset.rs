//! Behavior-cloning samples and their CSV form.
//!
//! The CSV has a mandatory header `r0,r1,...,r1080,steering_norm,speed_norm`
//! and one row per sample: the 1081 preprocessed, normalized ranges followed
//! by the two normalized labels.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::scan::NUM_BEAMS;

const COLUMNS: usize = NUM_BEAMS + 2;

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Preprocessed scan, values in `[0, 1]`.
    pub scan: Vec<f32>,
    /// `[steering_norm, speed_norm]`.
    pub label: [f32; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub track: String,
    pub seed: u64,
    /// False when collection was aborted (e.g. the demonstrator crashed).
    pub complete: bool,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("header: {0}")]
    Header(String),
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("sample {index}: {msg}")]
    Sample { index: usize, msg: String },
}

impl Dataset {
    pub fn new(track: impl Into<String>, seed: u64) -> Self {
        Dataset {
            samples: Vec::new(),
            track: track.into(),
            seed,
            complete: true,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Checks scan length, value range and label range of every sample.
    pub fn validate(&self) -> Result<(), DatasetError> {
        for (index, s) in self.samples.iter().enumerate() {
            validate_sample(&s.scan, &s.label)
                .map_err(|msg| DatasetError::Sample { index, msg })?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..NUM_BEAMS).map(|i| format!("r{i}")).collect();
        header.push("steering_norm".into());
        header.push("speed_norm".into());
        wr.write_record(&header)?;
        let mut row: Vec<String> = Vec::with_capacity(COLUMNS);
        for s in &self.samples {
            row.clear();
            row.extend(s.scan.iter().map(|v| v.to_string()));
            row.extend(s.label.iter().map(|v| v.to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }

    pub fn read_csv<R: Read>(r: R, track: &str) -> Result<Dataset, DatasetError> {
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let header = rd.headers()?.clone();
        if header.len() != COLUMNS {
            return Err(DatasetError::Header(format!(
                "expected {COLUMNS} columns, found {}",
                header.len()
            )));
        }
        if &header[NUM_BEAMS] != "steering_norm" || &header[NUM_BEAMS + 1] != "speed_norm" {
            return Err(DatasetError::Header(
                "last two columns must be steering_norm,speed_norm".into(),
            ));
        }
        let mut data = Dataset::new(track, 0);
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let row = i + 2;
            if rec.len() != COLUMNS {
                return Err(DatasetError::Row {
                    row,
                    msg: format!("expected {COLUMNS} fields, found {}", rec.len()),
                });
            }
            let mut vals = Vec::with_capacity(COLUMNS);
            for (col, field) in rec.iter().enumerate() {
                let v: f32 = field.trim().parse().map_err(|_| DatasetError::Row {
                    row,
                    msg: format!("column {col}: not a number: {field:?}"),
                })?;
                vals.push(v);
            }
            let label = [vals[NUM_BEAMS], vals[NUM_BEAMS + 1]];
            vals.truncate(NUM_BEAMS);
            validate_sample(&vals, &label).map_err(|msg| DatasetError::Row { row, msg })?;
            data.samples.push(Sample { scan: vals, label });
        }
        Ok(data)
    }

    pub fn load(path: &Path) -> Result<Dataset, DatasetError> {
        let f = std::fs::File::open(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Dataset::read_csv(std::io::BufReader::new(f), &name)
    }
}

/// Parses dataset CSV bytes. Never panics on malformed input.
pub fn parse_dataset_csv(bytes: &[u8]) -> Result<Dataset, DatasetError> {
    Dataset::read_csv(bytes, "")
}

fn validate_sample(scan: &[f32], label: &[f32; 2]) -> Result<(), String> {
    if scan.len() != NUM_BEAMS {
        return Err(format!(
            "scan has {} values, expected {NUM_BEAMS}",
            scan.len()
        ));
    }
    if let Some((i, v)) = scan
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(format!("range {i} = {v} outside [0, 1]"));
    }
    if !(-1.0..=1.0).contains(&label[0]) {
        return Err(format!("steering_norm {} outside [-1, 1]", label[0]));
    }
    if !(0.0..=1.0).contains(&label[1]) {
        return Err(format!("speed_norm {} outside [0, 1]", label[1]));
    }
    Ok(())
}
