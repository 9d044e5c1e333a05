// SPDX-License-Identifier: MIT OR Apache-2.0

//! Multivariate series container plus the preprocessing steps that run
//! before encoding: CSV ingestion, column standardization, lag embedding and
//! windowed block permutation.

use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

/// An `N x p` block of observations indexed by a strictly increasing time key.
///
/// Rows are time points and columns are dimensions. When the source file
/// carried non-integer timestamps they are kept in `timestamps` and the
/// integer index is the 1-based position.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSeries {
    values: Matrix,
    time_index: Vec<i64>,
    timestamps: Option<Vec<String>>,
    dim_names: Vec<String>,
}

impl MultiSeries {
    pub fn new(values: Matrix, time_index: Vec<i64>, dim_names: Vec<String>) -> Result<Self> {
        let s = Self {
            values,
            time_index,
            timestamps: None,
            dim_names,
        };
        s.validate()?;
        Ok(s)
    }

    /// Build a series with positional time index `1..=N` and default column
    /// names `x1..xp`.
    pub fn from_matrix(values: Matrix) -> Result<Self> {
        let n = values.rows() as i64;
        let names = (1..=values.cols()).map(|j| format!("x{j}")).collect();
        Self::new(values, (1..=n).collect(), names)
    }

    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        Self::from_matrix(Matrix::from_columns(columns)?)
    }

    pub fn with_timestamps(mut self, timestamps: Vec<String>) -> Result<Self> {
        if timestamps.len() != self.len() {
            return Err(Error::size("timestamp count differs from row count"));
        }
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.values.rows();
        let p = self.values.cols();
        if n < 2 {
            return Err(Error::validation(format!("series needs at least 2 rows, got {n}")));
        }
        if p < 1 {
            return Err(Error::validation("series needs at least one value column"));
        }
        if self.time_index.len() != n {
            return Err(Error::size("time index length differs from row count"));
        }
        if self.dim_names.len() != p {
            return Err(Error::size("dimension name count differs from column count"));
        }
        if let Some(pos) = self.values.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite value at row {}, column {}",
                pos / p + 1,
                pos % p + 1
            )));
        }
        if let Some(w) = self.time_index.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::validation(format!(
                "time index not strictly increasing at row {}",
                w + 2
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    #[inline]
    pub fn dims(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn time_index(&self) -> &[i64] {
        &self.time_index
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j)
    }

    /// Time label for row `i` as written to CSV.
    pub fn time_label(&self, i: usize) -> String {
        match &self.timestamps {
            Some(ts) => ts[i].clone(),
            None => self.time_index[i].to_string(),
        }
    }
}

/// Load a series from CSV: column 1 is the time key, the rest are values.
///
/// The time key is read as integers when every row parses as one; otherwise
/// the raw strings are kept as timestamps and must sort strictly increasing.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<MultiSeries> {
    let file = File::open(path)?;
    read_csv(file, has_header)
}

pub fn read_csv<R: std::io::Read>(reader: R, has_header: bool) -> Result<MultiSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut names: Option<Vec<String>> = None;
    let mut keys: Vec<String> = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;

    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line()) as usize;
        if k == 0 && has_header {
            names = Some(rec.iter().skip(1).map(str::to_owned).collect());
            continue;
        }
        if rec.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "expected a time column and at least one value column".into(),
            });
        }
        let p = rec.len() - 1;
        match width {
            None => width = Some(p),
            Some(w) if w != p => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", w + 1, rec.len()),
                })
            }
            _ => {}
        }
        keys.push(rec[0].to_owned());
        for field in rec.iter().skip(1) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse {field:?} as a number"),
            })?;
            data.push(v);
        }
    }

    let p = width.unwrap_or(0);
    let n = keys.len();
    if n < 2 {
        return Err(Error::validation(format!("series needs at least 2 rows, got {n}")));
    }
    let names = match names {
        Some(h) if h.len() == p => h,
        Some(h) => {
            return Err(Error::Parse {
                line: 1,
                message: format!("header names {} value columns, rows have {p}", h.len()),
            })
        }
        None => (1..=p).map(|j| format!("x{j}")).collect(),
    };
    let values = Matrix::from_vec(n, p, data)?;

    let ints: Option<Vec<i64>> = keys.iter().map(|k| k.parse::<i64>().ok()).collect();
    match ints {
        Some(index) => MultiSeries::new(values, index, names),
        None => {
            if let Some(w) = keys.windows(2).position(|w| w[1] <= w[0]) {
                return Err(Error::validation(format!(
                    "timestamps not strictly increasing at data row {}",
                    w + 2
                )));
            }
            MultiSeries::new(values, (1..=n as i64).collect(), names)?.with_timestamps(keys)
        }
    }
}

/// Center every column to mean 0 and scale to sample standard deviation 1.
pub fn standardize(s: &MultiSeries) -> Result<MultiSeries> {
    let n = s.len();
    let p = s.dims();
    let mut out = s.values.clone();
    for j in 0..p {
        let col = s.values.column(j);
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
        let sd = var.sqrt();
        if !(sd > 0.0) || sd <= f64::EPSILON * mean.abs() {
            return Err(Error::Degenerate(format!(
                "column {:?} has zero variance",
                s.dim_names[j]
            )));
        }
        for (i, v) in col.iter().enumerate() {
            out.set(i, j, (v - mean) / sd);
        }
    }
    Ok(MultiSeries {
        values: out,
        time_index: s.time_index.clone(),
        timestamps: s.timestamps.clone(),
        dim_names: s.dim_names.clone(),
    })
}

/// Couple each point of a univariate series with its next `r` values:
/// row `t` becomes `(x_t, x_{t+1}, ..., x_{t+r})`.
pub fn embed_lags(s: &MultiSeries, r: usize) -> Result<MultiSeries> {
    if s.dims() != 1 {
        return Err(Error::parameter(format!(
            "lag embedding expects a univariate series, got {} columns",
            s.dims()
        )));
    }
    if r == 0 {
        return Err(Error::parameter("lag count must be at least 1"));
    }
    let n = s.len();
    if r >= n {
        return Err(Error::size(format!("lag count {r} must be below series length {n}")));
    }
    let x = s.column(0);
    let rows = n - r;
    let mut data = Vec::with_capacity(rows * (r + 1));
    for t in 0..rows {
        data.extend_from_slice(&x[t..=t + r]);
    }
    let base = &s.dim_names[0];
    let names = (0..=r).map(|k| format!("{base}_lead{k}")).collect();
    // Values come from a validated series; a single embedded row is allowed.
    Ok(MultiSeries {
        values: Matrix::from_vec(rows, r + 1, data)?,
        time_index: (1..=rows as i64).collect(),
        timestamps: None,
        dim_names: names,
    })
}

/// A within-window shuffle of row positions.
///
/// `mapping[i]` is the source row placed at output position `i`. Windows are
/// consecutive blocks of `window_length` rows; the last block may be shorter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    mapping: Vec<usize>,
    window_length: usize,
    source_index: Vec<i64>,
    source_timestamps: Option<Vec<String>>,
}

impl Permutation {
    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn window_length(&self) -> usize {
        self.window_length
    }

    pub fn inverse_mapping(&self) -> Vec<usize> {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &src) in self.mapping.iter().enumerate() {
            inv[src] = i;
        }
        inv
    }

    /// Undo the shuffle on a permuted series, restoring the original rows and
    /// time index.
    pub fn restore(&self, permuted: &MultiSeries) -> Result<MultiSeries> {
        if permuted.len() != self.mapping.len() {
            return Err(Error::size("series length differs from permutation length"));
        }
        let inv = self.inverse_mapping();
        Ok(MultiSeries {
            values: permuted.values.select_rows(&inv),
            time_index: self.source_index.clone(),
            timestamps: self.source_timestamps.clone(),
            dim_names: permuted.dim_names.clone(),
        })
    }

    /// Map per-row labels computed on the permuted series back to original
    /// row order.
    pub fn restore_labels<T: Copy>(&self, permuted: &[T]) -> Result<Vec<T>> {
        if permuted.len() != self.mapping.len() {
            return Err(Error::size("label length differs from permutation length"));
        }
        let inv = self.inverse_mapping();
        Ok(inv.iter().map(|&i| permuted[i]).collect())
    }
}

/// Shuffle rows uniformly at random within consecutive windows of length `l`.
pub fn block_permute(s: &MultiSeries, l: usize, seed: u64) -> Result<(MultiSeries, Permutation)> {
    let n = s.len();
    if l == 0 || l > n {
        return Err(Error::parameter(format!("window length must be in 1..={n}, got {l}")));
    }
    let mut rng = seed::rng(seed);
    let mut mapping: Vec<usize> = (0..n).collect();
    for window in mapping.chunks_mut(l) {
        window.shuffle(&mut rng);
    }
    let permuted = MultiSeries {
        values: s.values.select_rows(&mapping),
        time_index: (1..=n as i64).collect(),
        timestamps: None,
        dim_names: s.dim_names.clone(),
    };
    let perm = Permutation {
        mapping,
        window_length: l,
        source_index: s.time_index.clone(),
        source_timestamps: s.timestamps.clone(),
    };
    Ok((permuted, perm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn univariate(x: &[f64]) -> MultiSeries {
        MultiSeries::from_columns(&[x.to_vec()]).unwrap()
    }

    #[test]
    fn parses_small_csv() {
        let s = read_csv("t,x\n1,0.5\n2,-0.1\n3,0.2\n".as_bytes(), true).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.dims(), 1);
        assert_eq!(s.column(0), vec![0.5, -0.1, 0.2]);
        assert_eq!(s.dim_names(), ["x"]);
    }

    #[test]
    fn duplicated_timestamp_is_rejected() {
        let err = read_csv("t,x\n1,0.5\n1,0.1\n".as_bytes(), true).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        let err = read_csv("2006-01-03 10:00,1\n2006-01-03 10:00,2\n".as_bytes(), false).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = read_csv("t,x\n1,0.5\n2,abc\n".as_bytes(), true).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn single_row_is_rejected() {
        assert!(matches!(
            read_csv("1,0.5\n".as_bytes(), false),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn timestamp_keys_are_kept() {
        let s = read_csv(
            "2006-01-03T10:00,1.0,2.0\n2006-01-03T10:01,3.0,4.0\n".as_bytes(),
            false,
        )
        .unwrap();
        assert_eq!(s.time_index(), [1, 2]);
        assert_eq!(s.time_label(1), "2006-01-03T10:01");
    }

    #[test]
    fn standardize_unit_moments() {
        let s = standardize(&univariate(&[1.0, 2.0, 3.0])).unwrap();
        let c = s.column(0);
        let mean: f64 = c.iter().sum::<f64>() / 3.0;
        let var: f64 = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0;
        assert!(mean.abs() < 1e-10);
        assert!((var.sqrt() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn standardize_constant_column_names_it() {
        let s = MultiSeries::new(
            Matrix::from_columns(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]).unwrap(),
            vec![1, 2, 3],
            vec!["ret".into(), "flat".into()],
        )
        .unwrap();
        match standardize(&s) {
            Err(Error::Degenerate(msg)) => assert!(msg.contains("flat")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn embed_lags_examples() {
        let e = embed_lags(&univariate(&[1.0, 2.0, 3.0, 4.0, 5.0]), 1).unwrap();
        assert_eq!(e.len(), 4);
        let rows: Vec<Vec<f64>> = e.values().iter_rows().map(<[f64]>::to_vec).collect();
        assert_eq!(rows, vec![vec![1.0, 2.0], vec![2.0, 3.0], vec![3.0, 4.0], vec![4.0, 5.0]]);

        let e = embed_lags(&univariate(&[1.0, 2.0, 3.0]), 2).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.values().row(0), [1.0, 2.0, 3.0]);

        assert!(matches!(
            embed_lags(&univariate(&[1.0, 2.0, 3.0]), 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            embed_lags(&univariate(&[1.0, 2.0, 3.0]), 3),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn block_permute_unit_window_is_identity() {
        let s = univariate(&[3.0, 1.0, 4.0, 1.0, 5.0]);
        let (p, perm) = block_permute(&s, 1, 9).unwrap();
        assert_eq!(p, s);
        assert_eq!(perm.mapping(), [0, 1, 2, 3, 4]);
    }

    #[test]
    fn block_permute_respects_windows() {
        let x: Vec<f64> = (0..100).map(f64::from).collect();
        let s = univariate(&x);
        let (_, perm) = block_permute(&s, 30, 42).unwrap();
        for (i, &src) in perm.mapping().iter().enumerate() {
            assert_eq!(i / 30, src / 30, "row {src} left its window");
        }
        // Window sizes 30, 30, 30, 10: each window maps onto itself.
        for (w, size) in [(0, 30), (1, 30), (2, 30), (3, 10)] {
            let mut members: Vec<usize> =
                perm.mapping()[w * 30..w * 30 + size].to_vec();
            members.sort_unstable();
            assert_eq!(members, (w * 30..w * 30 + size).collect::<Vec<_>>());
        }
    }

    #[test]
    fn full_window_round_trip() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let s = MultiSeries::new(
            Matrix::from_columns(&[x]).unwrap(),
            (0..50).map(|i| 10 * i + 3).collect(),
            vec!["r".into()],
        )
        .unwrap();
        let (p, perm) = block_permute(&s, 50, 1).unwrap();
        assert_ne!(p.values(), s.values());
        assert_eq!(perm.restore(&p).unwrap(), s);
    }

    proptest! {
        #[test]
        fn permutation_round_trip(
            x in proptest::collection::vec(-1e6f64..1e6, 2..200),
            l in 1usize..60,
            seed in any::<u64>(),
        ) {
            let l = l.min(x.len());
            let s = univariate(&x);
            let (p, perm) = block_permute(&s, l, seed).unwrap();
            prop_assert_eq!(perm.restore(&p).unwrap(), s);
            let labels: Vec<usize> = (0..x.len()).collect();
            let permuted: Vec<usize> = perm.mapping().to_vec();
            prop_assert_eq!(perm.restore_labels(&permuted).unwrap(), labels);
        }

        #[test]
        fn standardize_is_idempotent(
            x in proptest::collection::vec(-1e3f64..1e3, 3..100),
        ) {
            let s = univariate(&x);
            if let Ok(a) = standardize(&s) {
                let b = standardize(&a).unwrap();
                for (u, v) in a.column(0).iter().zip(b.column(0)) {
                    prop_assert!((u - v).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn embed_rows_are_contiguous_windows(
            x in proptest::collection::vec(-10f64..10.0, 3..80),
            r in 1usize..5,
        ) {
            prop_assume!(r < x.len());
            let e = embed_lags(&univariate(&x), r).unwrap();
            prop_assert_eq!(e.len(), x.len() - r);
            for t in 0..e.len() {
                prop_assert_eq!(e.values().row(t), &x[t..=t + r]);
            }
        }
    }
}
