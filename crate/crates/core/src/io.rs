// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV and JSON artifacts exchanged between pipeline stages.
//!
//! Every CSV has a header row and uses the time key of the source series as
//! its first column. Floats are written with [`fmt_f64`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::ballgen::{BallSet, FeatureMatrix};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, to_json};
use crate::matrix::Matrix;
use crate::timeseries::{read_csv, MultiSeries};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn finish(mut w: BufWriter<File>) -> Result<()> {
    w.flush()?;
    Ok(())
}

/// Write a series as `time,<dims...>`.
pub fn write_series<W: Write>(w: &mut W, s: &MultiSeries) -> Result<()> {
    write!(w, "time")?;
    for name in s.dim_names() {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for i in 0..s.len() {
        write!(w, "{}", s.time_label(i))?;
        for &v in s.values().row(i) {
            write!(w, ",{}", fmt_f64(v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_series(path: impl AsRef<Path>, s: &MultiSeries) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_series(&mut w, s)?;
    finish(w)
}

/// Write `time,label` rows.
pub fn write_labels<W: Write, T: AsRef<str>>(w: &mut W, times: &[T], labels: &[usize]) -> Result<()> {
    if times.len() != labels.len() {
        return Err(Error::size(format!(
            "{} time keys for {} labels",
            times.len(),
            labels.len()
        )));
    }
    writeln!(w, "time,label")?;
    for (t, l) in times.iter().zip(labels) {
        writeln!(w, "{},{l}", t.as_ref())?;
    }
    Ok(())
}

pub fn save_labels<T: AsRef<str>>(path: impl AsRef<Path>, times: &[T], labels: &[usize]) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_labels(&mut w, times, labels)?;
    finish(w)
}

/// Read a `time,label` file written by [`write_labels`].
pub fn read_labels<R: std::io::Read>(reader: R) -> Result<(Vec<String>, Vec<usize>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut times = Vec::new();
    let mut labels = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k as u64 + 2, |p| p.line()) as usize;
        if rec.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        let label = rec[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("cannot parse {:?} as a label", &rec[1]),
        })?;
        times.push(rec[0].to_owned());
        labels.push(label);
    }
    if labels.is_empty() {
        return Err(Error::size("label file has no rows"));
    }
    Ok((times, labels))
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<usize>)> {
    read_labels(File::open(path)?)
}

/// Write the feature matrix as `time,ball1,...,ballV`.
pub fn write_features<W: Write, T: AsRef<str>>(w: &mut W, times: &[T], p: &FeatureMatrix) -> Result<()> {
    if times.len() != p.n_rows() {
        return Err(Error::size(format!(
            "{} time keys for {} feature rows",
            times.len(),
            p.n_rows()
        )));
    }
    write!(w, "time")?;
    for j in 1..=p.n_features() {
        write!(w, ",ball{j}")?;
    }
    writeln!(w)?;
    for (i, t) in times.iter().enumerate() {
        write!(w, "{}", t.as_ref())?;
        for &v in p.values.row(i) {
            write!(w, ",{}", fmt_f64(v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_features<T: AsRef<str>>(path: impl AsRef<Path>, times: &[T], p: &FeatureMatrix) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_features(&mut w, times, p)?;
    finish(w)
}

/// Read a feature CSV. Returns the time keys and the matrix; every entry
/// must be a rate strictly inside (0, 1).
pub fn read_features<R: std::io::Read>(reader: R) -> Result<(Vec<String>, FeatureMatrix)> {
    let s = read_csv(reader, true)?;
    if let Some(pos) = s.values().as_slice().iter().position(|&v| !(v > 0.0 && v < 1.0)) {
        let p = s.dims();
        return Err(Error::validation(format!(
            "feature at row {}, column {} is not a rate in (0,1)",
            pos / p + 1,
            pos % p + 1
        )));
    }
    let times = (0..s.len()).map(|i| s.time_label(i)).collect();
    Ok((times, FeatureMatrix::new(s.values().clone())))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<(Vec<String>, FeatureMatrix)> {
    read_features(File::open(path)?)
}

/// Write `ball,weight` rows, balls numbered from 1.
pub fn write_weights<W: Write>(w: &mut W, weights: &[f64]) -> Result<()> {
    writeln!(w, "ball,weight")?;
    for (j, &v) in weights.iter().enumerate() {
        writeln!(w, "{},{}", j + 1, fmt_f64(v))?;
    }
    Ok(())
}

pub fn save_weights(path: impl AsRef<Path>, weights: &[f64]) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_weights(&mut w, weights)?;
    finish(w)
}

/// Write a two-column numeric CSV with the given header names.
pub fn write_pairs<W: Write>(w: &mut W, header: (&str, &str), rows: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "{},{}", header.0, header.1)?;
    for &(a, b) in rows {
        writeln!(w, "{},{}", fmt_f64(a), fmt_f64(b))?;
    }
    Ok(())
}

pub fn save_pairs(path: impl AsRef<Path>, header: (&str, &str), rows: &[(f64, f64)]) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_pairs(&mut w, header, rows)?;
    finish(w)
}

/// Write a table with a leading row-name column.
pub fn write_table<W: Write>(w: &mut W, corner: &str, columns: &[String], rows: &[(String, Vec<f64>)]) -> Result<()> {
    write!(w, "{corner}")?;
    for c in columns {
        write!(w, ",{c}")?;
    }
    writeln!(w)?;
    for (name, vals) in rows {
        if vals.len() != columns.len() {
            return Err(Error::size(format!("row {name} has {} values", vals.len())));
        }
        write!(w, "{name}")?;
        for &v in vals {
            write!(w, ",{}", fmt_f64(v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_table(path: impl AsRef<Path>, corner: &str, columns: &[String], rows: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = create(path.as_ref())?;
    write_table(&mut w, corner, columns, rows)?;
    finish(w)
}

pub fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Read a ball sidecar and check it against a feature matrix.
pub fn load_balls(path: impl AsRef<Path>, n_points: usize, n_features: usize) -> Result<BallSet> {
    let balls: BallSet = load_json(path)?;
    if balls.n_points != n_points {
        return Err(Error::size(format!(
            "balls were built on {} points, features have {n_points} rows",
            balls.n_points
        )));
    }
    if balls.len() != n_features {
        return Err(Error::size(format!(
            "{} balls for {n_features} feature columns",
            balls.len()
        )));
    }
    balls.validate()?;
    Ok(balls)
}

/// Matrix with time keys dropped; convenient for tests and bindings.
pub fn features_from_rows(rows: &[Vec<f64>]) -> Result<FeatureMatrix> {
    Ok(FeatureMatrix::new(Matrix::from_rows(rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        let mut buf = Vec::new();
        write_labels(&mut buf, &["1", "2", "3"], &[0, 1, 1]).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "time,label\n1,0\n2,1\n3,1\n");
        let (t, l) = read_labels(buf.as_slice()).unwrap();
        assert_eq!(t, ["1", "2", "3"]);
        assert_eq!(l, [0, 1, 1]);
    }

    #[test]
    fn bad_label_reports_line() {
        let err = read_labels("time,label\n1,0\n2,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn features_round_trip() {
        let p = features_from_rows(&[vec![0.1, 1.0 / 3.0], vec![0.2, 0.4]]).unwrap();
        let mut buf = Vec::new();
        write_features(&mut buf, &["a", "b"], &p).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "time,ball1,ball2\na,0.1,0.333333333333\nb,0.2,0.4\n");
        let (t, q) = read_features(buf.as_slice()).unwrap();
        assert_eq!(t, ["a", "b"]);
        assert_eq!(q.values.row(1), [0.2, 0.4]);
    }

    #[test]
    fn features_outside_unit_interval_rejected() {
        let text = "time,ball1\n1,0.5\n2,1.0\n";
        assert!(matches!(read_features(text.as_bytes()), Err(Error::Validation(_))));
    }

    #[test]
    fn weights_layout() {
        let mut buf = Vec::new();
        write_weights(&mut buf, &[0.25, 0.75]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "ball,weight\n1,0.25\n2,0.75\n");
    }

    #[test]
    fn balls_checked_against_features() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("balls.json");
        let b = BallSet {
            balls: vec![vec![0, 1], vec![2, 3]],
            centroids: vec![vec![0.0], vec![1.0]],
            ball_size: 2,
            n_points: 4,
        };
        save_json(&path, &b).unwrap();
        assert_eq!(load_balls(&path, 4, 2).unwrap(), b);
        assert!(load_balls(&path, 5, 2).is_err());
        assert!(load_balls(&path, 4, 3).is_err());
    }
}
