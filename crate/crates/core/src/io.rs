// SPDX-License-Identifier: MIT OR Apache-2.0

//! Series CSV format.
//!
//! One row per observation `X_i`, one column per grid point. An optional first
//! row whose fields read `t=<point>` declares the grid points explicitly (with
//! trapezoid weights); without it the grid is uniform on [0,1] with as many
//! points as there are columns. Values are written in Rust's shortest
//! round-trip notation, so `read(write(series)) == series` bit for bit.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hilbert::{FunctionalSeries, Grid};
use crate::scalar::Scalar;

const POINT_PREFIX: &str = "t=";

pub fn read_series_csv<T: Scalar, R: Read>(reader: R) -> Result<FunctionalSeries<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut points: Option<Vec<T>> = None;
    let mut width: Option<usize> = None;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if idx == 0 && record.get(0).is_some_and(|f| f.starts_with(POINT_PREFIX)) {
            let pts = record
                .iter()
                .enumerate()
                .map(|(col, f)| {
                    let raw = f.strip_prefix(POINT_PREFIX).ok_or_else(|| Error::Parse {
                        line,
                        message: format!(
                            "column {}: grid header field {f:?} lacks the {POINT_PREFIX:?} prefix",
                            col + 1
                        ),
                    })?;
                    parse_value(raw, line, col)
                })
                .collect::<Result<Vec<T>>>()?;
            width = Some(pts.len());
            points = Some(pts);
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::Parse {
                line,
                message: format!("expected {expected} values, found {}", record.len()),
            });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, f)| parse_value(f, line, col))
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }

    let grid = match (points, width) {
        (Some(p), _) => {
            let uniform = Grid::uniform(p.len())?;
            if uniform.points() == p.as_slice() {
                uniform
            } else {
                Grid::from_points(p).map_err(|e| Error::Parse {
                    line: 1,
                    message: e.to_string(),
                })?
            }
        }
        (None, Some(w)) => Grid::uniform(w)?,
        (None, None) => {
            return Err(Error::Parse {
                line: 0,
                message: "input contains no observations".into(),
            })
        }
    };
    FunctionalSeries::from_rows(Arc::new(grid), rows)
}

fn parse_value<T: Scalar>(field: &str, line: u64, col: usize) -> Result<T> {
    match field.parse::<T>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::Parse {
            line,
            message: format!("column {}: non-finite value {field:?}", col + 1),
        }),
        Err(_) => Err(Error::Parse {
            line,
            message: format!("column {}: invalid number {field:?}", col + 1),
        }),
    }
}

/// Writes `series`; a grid header is emitted only for non-uniform grids.
///
/// Fails for grids whose weights are not the trapezoid weights of their points,
/// since the format cannot carry custom weights.
pub fn write_series_csv<T: Scalar, W: Write>(
    series: &FunctionalSeries<T>,
    mut out: W,
) -> Result<()> {
    let grid = series.grid();
    if !grid.is_default_uniform() {
        let trapezoid = Grid::from_points(grid.points().to_vec())?;
        if trapezoid != **grid {
            return Err(Error::InvalidGrid(
                "custom quadrature weights cannot be stored in the CSV format".into(),
            ));
        }
        let header: Vec<String> = grid
            .points()
            .iter()
            .map(|p| format!("{POINT_PREFIX}{p:?}"))
            .collect();
        writeln!(out, "{}", header.join(","))?;
    }
    let mut line = String::new();
    for curve in series.curves() {
        line.clear();
        for (i, v) in curve.values().iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:?}"));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read(text: &str) -> Result<FunctionalSeries<f64>> {
        read_series_csv(text.as_bytes())
    }

    #[test]
    fn single_column() {
        let s = read("0\n0\n0\n0\n2\n2\n2\n2\n").unwrap();
        assert_eq!(s.len(), 8);
        assert_eq!(s.grid().len(), 1);
        assert_eq!(s.curves()[4].values(), &[2.0]);
    }

    #[test]
    fn ragged_rows_rejected_with_line() {
        let err = read("1,2,3\n4,5,6\n7,8\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 3 values, found 2"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_numbers_rejected_with_line() {
        let err = read("1,2\n3,abc\n").unwrap_err();
        assert!(
            matches!(err, Error::Parse { line: 2, ref message } if message.contains("column 2"))
        );
        assert!(matches!(read("1,NaN\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn explicit_grid_header() {
        let s = read("t=0,t=0.25,t=1\n1,2,3\n4,5,6\n").unwrap();
        assert_eq!(s.grid().points(), &[0.0, 0.25, 1.0]);
        assert_eq!(s.grid().weights(), &[0.125, 0.5, 0.375]);
        let mut buf = Vec::new();
        write_series_csv(&s, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("t=0.0,t=0.25,t=1.0\n"));
        assert!(read("t=0,t=0.5\n1,2,3\n").is_err());
    }

    #[test]
    fn custom_weights_cannot_be_written() {
        let grid = Arc::new(Grid::with_weights(vec![0.2, 0.7], vec![0.5, 0.5]).unwrap());
        let s = FunctionalSeries::from_rows(grid, vec![vec![1.0, 2.0]]).unwrap();
        assert!(write_series_csv(&s, Vec::new()).is_err());
    }

    proptest! {
        #[test]
        fn write_then_read_is_identity(
            g in 1usize..6,
            rows in prop::collection::vec(prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 6), 1..12),
            explicit in any::<bool>(),
        ) {
            let grid = if explicit {
                let pts: Vec<f64> = (0..g).map(|i| (i as f64 + 0.3) / (g as f64 + 0.1)).collect();
                Arc::new(Grid::from_points(pts).unwrap())
            } else {
                Arc::new(Grid::uniform(g).unwrap())
            };
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r[..g].to_vec()).collect();
            let s = FunctionalSeries::from_rows(grid, rows).unwrap();
            let mut buf = Vec::new();
            write_series_csv(&s, &mut buf).unwrap();
            let back: FunctionalSeries<f64> = read_series_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.grid().weights(), s.grid().weights());
        }
    }
}
