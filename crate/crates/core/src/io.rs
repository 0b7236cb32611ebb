//! Plain-text file formats.
//!
//! A grid function is written as a header `# N m period` followed by `N`
//! rows of `m` values. A time series prefixes each row with its time and
//! stacks the `N` rows of every sample in time order. Numbers are written
//! with `{:.16e}` and separated by one space; every line ends in `\n`.
//! Dual densities use the same layout with density values.

use std::io::Write;

use crate::error::{Error, Result};
use crate::function_space::{GridVector, PeriodicGrid};
use crate::timegrid::{TimeGrid, TimeSeries};

fn grid_for(n: usize, m: usize) -> Result<PeriodicGrid> {
    if n == 1 {
        PeriodicGrid::point(m)
    } else {
        PeriodicGrid::new(n, m)
    }
}

fn header(grid: &PeriodicGrid) -> String {
    format!("# {} {} {:.16e}\n", grid.n(), grid.m(), 2.0 * std::f64::consts::PI)
}

fn push_row(out: &mut String, lead: Option<f64>, values: &[f64]) {
    use std::fmt::Write as _;
    let mut first = true;
    for v in lead.iter().chain(values) {
        if !first {
            out.push(' ');
        }
        first = false;
        write!(out, "{v:.16e}").expect("write to string");
    }
    out.push('\n');
}

/// Serializes a grid function or dual density.
pub fn format_vector<V: GridVector>(v: &V) -> String {
    let grid = v.grid();
    let mut out = header(grid);
    for row in v.as_slice().chunks(grid.m()) {
        push_row(&mut out, None, row);
    }
    out
}

/// Serializes a sampled curve with a leading time column.
pub fn format_series<V: GridVector>(series: &TimeSeries<V>) -> String {
    let grid = series.grid();
    let mut out = header(grid);
    for (t, s) in series.time().times().zip(series.samples()) {
        for row in s.as_slice().chunks(grid.m()) {
            push_row(&mut out, Some(t), row);
        }
    }
    out
}

struct Body<'a> {
    grid: PeriodicGrid,
    rows: Vec<(usize, &'a str)>,
}

fn parse_header(text: &str) -> Result<Body<'_>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines.next().ok_or(Error::Format {
        line: 1,
        detail: "empty input".into(),
    })?;
    let bad = |detail: String| Error::Format { line: 1, detail };
    let fields: Vec<&str> = first
        .strip_prefix('#')
        .ok_or_else(|| bad("header must start with '#'".into()))?
        .split_whitespace()
        .collect();
    if fields.len() != 3 {
        return Err(bad(format!("header needs `N m period`, got {} fields", fields.len())));
    }
    let n: usize = fields[0].parse().map_err(|_| bad(format!("N = {:?}", fields[0])))?;
    let m: usize = fields[1].parse().map_err(|_| bad(format!("m = {:?}", fields[1])))?;
    let period: f64 = fields[2]
        .parse()
        .map_err(|_| bad(format!("period = {:?}", fields[2])))?;
    if (period - 2.0 * std::f64::consts::PI).abs() > 1e-12 {
        return Err(bad(format!("period {period} is not 2π")));
    }
    let grid = grid_for(n, m).map_err(|e| bad(e.to_string()))?;
    let rows = lines.filter(|(_, l)| !l.trim().is_empty()).collect();
    Ok(Body { grid, rows })
}

fn parse_row(line: usize, text: &str, expect: usize) -> Result<Vec<f64>> {
    let values = text
        .split_whitespace()
        .map(|tok| match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Format {
                line,
                detail: format!("{tok:?} is not a finite number"),
            }),
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expect {
        return Err(Error::Format {
            line,
            detail: format!("expected {expect} values, found {}", values.len()),
        });
    }
    Ok(values)
}

/// Parses the output of [`format_vector`].
pub fn parse_vector<V: GridVector>(text: &str) -> Result<V> {
    let body = parse_header(text)?;
    let grid = body.grid;
    if body.rows.len() != grid.n() {
        return Err(Error::Format {
            line: body.rows.last().map_or(1, |r| r.0),
            detail: format!("expected {} rows, found {}", grid.n(), body.rows.len()),
        });
    }
    let mut values = Vec::with_capacity(grid.len());
    for (line, row) in &body.rows {
        values.extend(parse_row(*line, row, grid.m())?);
    }
    Ok(V::from_raw(grid, values))
}

/// Parses the output of [`format_series`]. Times must form a uniform grid.
pub fn parse_series<V: GridVector>(text: &str) -> Result<TimeSeries<V>> {
    let body = parse_header(text)?;
    let grid = body.grid;
    let n = grid.n();
    if body.rows.is_empty() || body.rows.len() % n != 0 {
        return Err(Error::Format {
            line: body.rows.last().map_or(1, |r| r.0),
            detail: format!("{} rows is not a multiple of N = {n}", body.rows.len()),
        });
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for block in body.rows.chunks(n) {
        let mut values = Vec::with_capacity(grid.len());
        let mut t0 = None;
        for (line, row) in block {
            let parsed = parse_row(*line, row, grid.m() + 1)?;
            match t0 {
                None => t0 = Some(parsed[0]),
                Some(t) if t != parsed[0] => {
                    return Err(Error::Format {
                        line: *line,
                        detail: format!("time {} inside the block of t = {t}", parsed[0]),
                    })
                }
                _ => {}
            }
            values.extend_from_slice(&parsed[1..]);
        }
        times.push((block[0].0, t0.expect("non-empty block")));
        samples.push(V::from_raw(grid, values));
    }
    if times.len() < 2 {
        return Err(Error::Format {
            line: times[0].0,
            detail: "a series needs at least two time samples".into(),
        });
    }
    let (a, b) = (times[0].1, times.last().expect("non-empty").1);
    let time = TimeGrid::new(a, b, times.len() - 1).map_err(|e| Error::Format {
        line: times[0].0,
        detail: e.to_string(),
    })?;
    for (j, (line, t)) in times.iter().enumerate() {
        if (t - time.t(j)).abs() > 1e-9 * time.length() {
            return Err(Error::Format {
                line: *line,
                detail: format!("time {t} breaks the uniform grid (expected {})", time.t(j)),
            });
        }
    }
    TimeSeries::new(time, samples)
}

/// Writes a comma-separated table with a header row.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.write_record(row).map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

/// Formats a number for tables, as in the text formats.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}
