//! Ensemble CSV files: one signal per row.
//!
//! Header `id,label,dt,s0,s1,...`. The `dt` column is optional on read;
//! files without it get [`DEFAULT_DT`]. Values are written in scientific
//! notation with 17 significant digits, which round-trips `f64` exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{Ensemble, Signal, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Formats a value with 17 significant digits.
pub fn fmt_value<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

pub fn write_ensemble<T: Scalar, W: Write>(e: &Ensemble<T>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    let mut header = vec!["id".to_string(), "label".to_string(), "dt".to_string()];
    header.extend((0..e.n()).map(|i| format!("s{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for s in e.signals() {
        let mut rec = vec![s.id.clone(), s.label.clone(), fmt_value(s.dt())];
        rec.extend(s.samples().iter().map(|&v| fmt_value(v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_ensemble<T: Scalar>(e: &Ensemble<T>, path: impl AsRef<Path>) -> Result<()> {
    write_ensemble(e, File::create(path)?)
}

/// Headerless row-major matrix, same number format as ensembles.
pub fn write_matrix<T: Scalar, W: Write>(m: &Array2<T>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    for row in m.rows() {
        w.write_record(row.iter().map(|&v| fmt_value(v)))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_matrix<T: Scalar>(m: &Array2<T>, path: impl AsRef<Path>) -> Result<()> {
    write_matrix(m, File::create(path)?)
}

pub fn load_ensemble<T: Scalar>(path: impl AsRef<Path>) -> Result<Ensemble<T>> {
    read_ensemble(File::open(path)?)
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn parse_cell<T: Scalar>(cell: &str, line: u64, column: &str) -> Result<T> {
    let parsed = cell.trim().parse::<f64>().ok().filter(|v| v.is_finite());
    parsed.and_then(T::from_f64).ok_or_else(|| Error::Parse {
        line,
        message: format!("column {column}: '{cell}' is not a finite number"),
    })
}

pub fn read_ensemble<T: Scalar, R: Read>(input: R) -> Result<Ensemble<T>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let has_dt = header.get(2).map(str::trim) == Some("dt");
    if header.get(0).map(str::trim) != Some("id") || header.get(1).map(str::trim) != Some("label") {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with id,label".into(),
        });
    }
    let first_sample = if has_dt { 3 } else { 2 };
    let width = header.len();
    if width < first_sample + 2 {
        return Err(Error::Parse {
            line: 1,
            message: "header names fewer than 2 sample columns".into(),
        });
    }

    let mut signals = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("row has {} fields, header has {width}", rec.len()),
            });
        }
        let dt = if has_dt {
            parse_cell(&rec[2], line, "dt")?
        } else {
            T::c(DEFAULT_DT)
        };
        let samples = (first_sample..width)
            .map(|j| parse_cell(&rec[j], line, &header[j]))
            .collect::<Result<Vec<T>>>()?;
        let s = Signal::new(rec[0].to_string(), rec[1].to_string(), samples, dt).map_err(|e| {
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        signals.push(s);
    }
    if signals.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "file contains no signals".into(),
        });
    }
    Ensemble::new(signals).map_err(|e| Error::Parse {
        line: 0,
        message: e.to_string(),
    })
}
