use std::io::{Read, Write};
use std::path::Path;

use crate::error::CliError;
use crate::experiment::{OutputFormat, ResultRow};
use crate::plot::{emit_plot, Axes};

pub const CSV_HEADER: &str =
    "method,model,r,alpha,sigma,rho,L,pm,trials,p_succ,stderr,ci_low,ci_high,seed,runtime_s";

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>, CliError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(CliError::Input(format!(
            "unexpected CSV header {:?}; expected {CSV_HEADER:?}",
            header.join(",")
        )));
    }
    Ok(r.deserialize().collect::<Result<Vec<ResultRow>, _>>()?)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file)
}

pub fn json_string(rows: &[ResultRow]) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(rows)?;
    s.push('\n');
    Ok(s)
}

/// Writes `rows` to `path` in the format its extension names.
pub fn write_rows(path: &Path, rows: &[ResultRow], axes: &Axes) -> Result<(), CliError> {
    let body = match OutputFormat::of(path)? {
        OutputFormat::Csv => csv_string(rows)?,
        OutputFormat::Json => json_string(rows)?,
        OutputFormat::Svg => emit_plot(rows, axes)?,
    };
    std::fs::write(path, body).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
