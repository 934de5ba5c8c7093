//! Design CSV files: one point per row, D coordinate columns, an optional
//! header, and an optional `twin_group` column marking the two rows of a
//! twin pair (any non-empty value other than `0`).

use std::fs::File;
use std::io::Write;
use std::path::Path;

use imspe_core::Design;

use crate::error::{CliError, CliResult};

pub const TWIN_COLUMN: &str = "twin_group";

fn parse_error(path: &Path, line: u64, msg: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("{}:{line}: {msg}", path.display()))
}

/// Reads a design file. Twin rows may be flagged in the file or supplied
/// as an extra pair through `twin` (barycenter, offset), but not both.
pub fn read_design(path: &Path, twin: Option<(Vec<f64>, Vec<f64>)>) -> CliResult<Design> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_design(file, path, twin)
}

pub fn parse_design<R: std::io::Read>(
    reader: R,
    path: &Path,
    twin: Option<(Vec<f64>, Vec<f64>)>,
) -> CliResult<Design> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);

    let mut twin_col: Option<usize> = None;
    let mut width: Option<usize> = None;
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut twin_rows: Vec<usize> = Vec::new();
    let mut first = true;

    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(path, line, e)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if record.iter().any(|f| f.parse::<f64>().is_err()) {
                twin_col = record.iter().position(|f| f == TWIN_COLUMN);
                width = Some(record.len());
                continue;
            }
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_error(
                path,
                line,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        let mut point = Vec::with_capacity(expected);
        for (c, field) in record.iter().enumerate() {
            if Some(c) == twin_col {
                if !field.is_empty() && field != "0" {
                    twin_rows.push(points.len());
                }
                continue;
            }
            let x: f64 = field
                .parse()
                .map_err(|_| parse_error(path, line, format!("field {} is not a number: {field:?}", c + 1)))?;
            if !x.is_finite() || !(-1.0..=1.0).contains(&x) {
                return Err(parse_error(
                    path,
                    line,
                    format!("coordinate x[{},{}] = {field} lies outside [-1, 1]", points.len() + 1, c + 1),
                ));
            }
            point.push(x);
        }
        if point.is_empty() {
            return Err(parse_error(path, line, "row has no coordinates"));
        }
        points.push(point);
    }
    if points.is_empty() {
        return Err(parse_error(path, 1, "design file has no points"));
    }

    let design = match (twin_rows.len(), twin) {
        (0, None) => Design::new(points)?,
        (0, Some((xt, delta))) => {
            if xt.len() != points[0].len() || delta.len() != points[0].len() {
                return Err(CliError::Usage(format!(
                    "twin barycenter and offset need {} coordinates",
                    points[0].len()
                )));
            }
            Design::with_twin(points, xt, delta)?
        }
        (2, None) => Design::new(points)?.into_twin(twin_rows[0], twin_rows[1])?,
        (2, Some(_)) => {
            return Err(CliError::Usage(
                "twin rows are flagged in the file and also given on the command line".into(),
            ))
        }
        (k, _) => {
            return Err(parse_error(
                path,
                0,
                format!("{TWIN_COLUMN} must flag exactly two rows, found {k}"),
            ))
        }
    };
    Ok(design)
}

/// Writes a design with a header `x1,..,xD,twin_group`.
pub fn write_design(path: &Path, design: &Design) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=design.dim()).map(|k| format!("x{k}")).collect();
    header.push(TWIN_COLUMN.into());
    w.write_record(&header)?;
    let twin_rows = design.twin_rows();
    for (i, p) in design.points().iter().enumerate() {
        let mut row: Vec<String> = p.iter().map(|x| fmt_f64(*x)).collect();
        let is_twin = twin_rows.is_some_and(|(a, b)| i == a || i == b);
        row.push(if is_twin { "1".into() } else { String::new() });
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest text that reads back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())?;
    Ok(())
}
