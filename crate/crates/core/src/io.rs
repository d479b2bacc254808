//! Field dumps: a one-line JSON header followed by node values, either as
//! text (one value per line) or as raw little-endian `f64`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid};

pub const ORDERING: &str = "row-major, time-last";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FieldFormat {
    #[default]
    Csv,
    Bin,
}

impl FieldFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FieldFormat::Csv => "csv",
            FieldFormat::Bin => "bin",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub d: usize,
    pub n_x: usize,
    pub n_t: usize,
    pub ordering: String,
}

impl FieldHeader {
    pub fn for_grid(grid: &TorusGrid) -> Self {
        FieldHeader {
            d: grid.d(),
            n_x: grid.n_x(),
            n_t: grid.n_t(),
            ordering: ORDERING.to_string(),
        }
    }

    fn grid(&self) -> Result<TorusGrid> {
        if self.ordering != ORDERING {
            return Err(Error::Format(format!("unsupported ordering {:?}", self.ordering)));
        }
        TorusGrid::new(self.d, self.n_x, self.n_t)
    }
}

fn write_header<W: Write>(field: &ScalarField, out: &mut W) -> Result<()> {
    serde_json::to_writer(&mut *out, &FieldHeader::for_grid(field.grid()))?;
    out.write_all(b"\n")?;
    Ok(())
}

fn read_header<R: BufRead>(input: &mut R) -> Result<TorusGrid> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: FieldHeader = serde_json::from_str(line.trim_end())?;
    header.grid()
}

/// `Display` for `f64` prints the shortest string that parses back to the same
/// bits, so the text form round-trips exactly.
pub fn write_csv<W: Write>(field: &ScalarField, out: &mut W) -> Result<()> {
    write_header(field, out)?;
    for v in field.values() {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(mut input: R) -> Result<ScalarField> {
    let grid = read_header(&mut input)?;
    let mut values = Vec::with_capacity(grid.len());
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Format(format!("line {}: cannot parse {line:?}", lineno + 2)))?;
        values.push(v);
    }
    ScalarField::new(&grid, values)
}

pub fn write_binary<W: Write>(field: &ScalarField, out: &mut W) -> Result<()> {
    write_header(field, out)?;
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: BufRead>(mut input: R) -> Result<ScalarField> {
    let grid = read_header(&mut input)?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "expected {} bytes of payload, found {}",
            8 * grid.len(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ScalarField::new(&grid, values)
}

pub fn save_field(field: &ScalarField, path: &Path, format: FieldFormat) -> Result<()> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    match format {
        FieldFormat::Csv => write_csv(field, &mut out)?,
        FieldFormat::Bin => write_binary(field, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn load_field(path: &Path, format: FieldFormat) -> Result<ScalarField> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let input = BufReader::new(file);
    match format {
        FieldFormat::Csv => read_csv(input),
        FieldFormat::Bin => read_binary(input),
    }
}
