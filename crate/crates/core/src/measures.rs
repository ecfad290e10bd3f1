//! Uniform-weight empirical measures and their CSV representation.
//!
//! A measure with `n` supports in `R^d` is stored as a row-major `n × d`
//! buffer. Weights are implicitly `1/n`. The on-disk format is headerless
//! CSV with one point per row; floats are written in the shortest decimal
//! form that parses back to the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<f64>,
    n: usize,
    d: usize,
}

impl EmpiricalMeasure {
    /// Builds a measure from a row-major buffer of `n * dim` coordinates.
    pub fn new(points: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::argument("dimension must be at least 1"));
        }
        if points.is_empty() {
            return Err(Error::EmptyInput("measure has no support points".into()));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(Error::argument(format!(
                "buffer of length {} is not a multiple of dimension {dim}",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|x| !x.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite coordinate {} at point {}, column {}",
                points[pos],
                pos / dim,
                pos % dim
            )));
        }
        let n = points.len() / dim;
        Ok(Self { points, n, d: dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::EmptyInput("measure has no support points".into()))?;
        let dim = first.len();
        let mut points = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::argument(format!(
                    "row {i} has {} columns, expected {dim}",
                    row.len()
                )));
            }
            points.extend_from_slice(row);
        }
        Self::new(points, dim)
    }

    /// Number of support points.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.points.chunks_exact(self.d)
    }

    pub fn into_points(self) -> Vec<f64> {
        self.points
    }

    /// Copy of the measure with every support shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.d {
            return Err(Error::argument(format!(
                "offset has dimension {}, measure has {}",
                offset.len(),
                self.d
            )));
        }
        let points = self
            .rows()
            .flat_map(|row| row.iter().zip(offset).map(|(x, t)| x + t))
            .collect();
        Self::new(points, self.d)
    }

    /// Keeps the supports at `indices`, in that order (duplicates allowed).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            if i >= self.n {
                return Err(Error::argument(format!("index {i} out of range")));
            }
            points.extend_from_slice(self.point(i));
        }
        Self::new(points, self.d)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 20);
        for row in self.rows() {
            for (j, x) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                // `Display` for f64 is the shortest round-trip representation.
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }
}

/// Parses headerless CSV, one point per row. Blank lines are skipped.
pub fn parse_csv(text: &str) -> Result<EmpiricalMeasure> {
    let mut points = Vec::new();
    let mut dim: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = 0usize;
        for field in line.split(',') {
            let field = field.trim();
            let value: f64 = field
                .parse()
                .map_err(|_| Error::format(line_no, format!("cannot parse {field:?} as a number")))?;
            if !value.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite value {field:?} on line {line_no}"
                )));
            }
            points.push(value);
            cols += 1;
        }
        match dim {
            None => dim = Some(cols),
            Some(d) if d != cols => {
                return Err(Error::format(
                    line_no,
                    format!("ragged row: {cols} columns, expected {d}"),
                ));
            }
            Some(_) => {}
        }
    }
    match dim {
        None => Err(Error::EmptyInput("no data rows".into())),
        Some(d) => EmpiricalMeasure::new(points, d),
    }
}

pub fn load_measure(path: impl AsRef<Path>) -> Result<EmpiricalMeasure> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text)
}

pub fn save_measure(m: &EmpiricalMeasure, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, m.to_csv())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_two_points_in_the_plane() {
        let m = parse_csv("0,0\n1,0").unwrap();
        assert_eq!((m.len(), m.dim()), (2, 2));
        assert_eq!(m.point(1), &[1.0, 0.0]);
    }

    #[test]
    fn parses_one_dimensional_column() {
        let m = parse_csv("1\n2\n3").unwrap();
        assert_eq!((m.len(), m.dim()), (3, 1));
        assert_eq!(m.points(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn ragged_rows_are_a_format_error() {
        let err = parse_csv("1,2\n3").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_and_blank_files_are_rejected() {
        assert!(matches!(parse_csv(""), Err(Error::EmptyInput(_))));
        assert!(matches!(parse_csv("\n  \n"), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn non_finite_entries_fail_validation() {
        for text in ["1,NaN", "inf,0", "0\n-inf"] {
            assert!(matches!(parse_csv(text), Err(Error::Validation(_))), "{text}");
        }
        assert!(matches!(
            EmpiricalMeasure::new(vec![0.0, f64::NAN], 1),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn garbage_field_is_a_format_error() {
        assert!(matches!(parse_csv("1,x"), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn single_point_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        let m = EmpiricalMeasure::new(vec![5.0], 1).unwrap();
        save_measure(&m, &path).unwrap();
        assert_eq!(load_measure(&path).unwrap(), m);
    }

    #[test]
    fn three_by_two_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = EmpiricalMeasure::new(
            vec![0.1, -2.5e-300, 1.0 / 3.0, 7e22, f64::MIN_POSITIVE, -0.0],
            2,
        )
        .unwrap();
        save_measure(&m, &path).unwrap();
        let back = load_measure(&path).unwrap();
        let bits = |m: &EmpiricalMeasure| m.points().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let m = EmpiricalMeasure::new(vec![1.0], 1).unwrap();
        let err = save_measure(&m, "/nonexistent-dir/xyz/m.csv").unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    #[test]
    fn translation_shifts_every_point() {
        let m = parse_csv("0,0\n1,2").unwrap();
        let t = m.translated(&[1.0, -1.0]).unwrap();
        assert_eq!(t.points(), &[1.0, -1.0, 2.0, 1.0]);
        assert!(m.translated(&[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_identity(
            d in 1usize..5,
            raw in prop::collection::vec(-1e6f64..1e6, 1..40),
        ) {
            let n = raw.len() / d;
            prop_assume!(n >= 1);
            let m = EmpiricalMeasure::new(raw[..n * d].to_vec(), d).unwrap();
            let back = parse_csv(&m.to_csv()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
