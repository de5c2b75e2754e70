//! Dataset CSV and instance JSON persistence.
//!
//! A dataset is a headerless CSV with one example per row: `d` decimal
//! columns, or a single `±1` column for sign tokens. An instance is a JSON
//! document naming its dataset file (resolved relative to the JSON file) and
//! carrying the loss description and declared constants.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DataPoint, Dataset, EmpiricalObjective, LossError, LossSpec, ObjectiveMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub loss: LossSpec,
    pub data: String,
    #[serde(default)]
    pub sign_tokens: bool,
    pub n: usize,
    pub d: usize,
    pub meta: ObjectiveMeta,
}

fn io_err(path: &Path, source: std::io::Error) -> LossError {
    LossError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, message: impl Into<String>) -> LossError {
    LossError::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<(), LossError> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    for p in data.points() {
        let row: Vec<String> = match p {
            DataPoint::Vector(v) => v.iter().map(|x| format!("{x:?}")).collect(),
            DataPoint::Sign(s) => vec![s.to_string()],
        };
        wtr.write_record(&row)
            .map_err(|e| parse_err(path, e.to_string()))?;
    }
    wtr.flush().map_err(|e| io_err(path, e))
}

pub fn read_dataset_csv(path: &Path, sign_tokens: bool) -> Result<Dataset, LossError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(path, io),
            other => parse_err(path, format!("{other:?}")),
        })?;
    let mut rows = Vec::new();
    let mut signs = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, format!("line {}: {e}", line + 1)))?;
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| parse_err(path, format!("line {}: {e}", line + 1)))?;
        if sign_tokens {
            match vals.as_slice() {
                [s] if *s == 1.0 || *s == -1.0 => signs.push(*s as i8),
                _ => {
                    return Err(parse_err(
                        path,
                        format!("line {}: expected a single ±1 token", line + 1),
                    ))
                }
            }
        } else {
            rows.push(vals);
        }
    }
    let data = if sign_tokens {
        Dataset::from_signs(signs)
    } else {
        Dataset::from_vectors(rows)
    };
    data.map_err(|e| parse_err(path, e.to_string()))
}

fn dataset_path(json_path: &Path, name: &str) -> PathBuf {
    json_path
        .parent()
        .map(|p| p.join(name))
        .unwrap_or_else(|| PathBuf::from(name))
}

/// Writes `<stem>.json` and its sibling dataset `<stem>.csv`.
pub fn save_instance(obj: &EmpiricalObjective, json_path: &Path) -> Result<(), LossError> {
    let stem = json_path
        .file_stem()
        .ok_or_else(|| parse_err(json_path, "instance path has no file name"))?;
    let csv_name = format!("{}.csv", stem.to_string_lossy());
    write_dataset_csv(&dataset_path(json_path, &csv_name), obj.dataset())?;
    let file = InstanceFile {
        loss: obj.loss().spec(),
        data: csv_name,
        sign_tokens: obj.dataset().is_signs(),
        n: obj.n(),
        d: obj.dim(),
        meta: obj.meta().clone(),
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| parse_err(json_path, e.to_string()))?;
    fs::write(json_path, json).map_err(|e| io_err(json_path, e))
}

pub fn load_instance(json_path: &Path) -> Result<EmpiricalObjective, LossError> {
    let text = fs::read_to_string(json_path).map_err(|e| io_err(json_path, e))?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|e| parse_err(json_path, e.to_string()))?;
    let data = read_dataset_csv(&dataset_path(json_path, &file.data), file.sign_tokens)?;
    if data.len() != file.n || data.dim() != file.d {
        return Err(parse_err(
            json_path,
            format!(
                "declared n = {}, d = {} but dataset has n = {}, d = {}",
                file.n,
                file.d,
                data.len(),
                data.dim()
            ),
        ));
    }
    let loss = file.loss.build()?;
    Ok(EmpiricalObjective::new(loss, data, file.meta))
}
