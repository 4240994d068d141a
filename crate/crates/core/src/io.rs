//! Matrix dump format shared by every tool: a text header `dim=D` followed by
//! D·D lines `row col re im` in row-major order, with ≥ 15 significant digits
//! so values round-trip exactly through the text form.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::{c64, CMat, Error, Result};

/// Scientific notation with 17 significant digits: enough for f64 round-trip.
pub fn format_float(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Write a square matrix in the shared dump format.
pub fn write_matrix<W: Write>(mut w: W, m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid(format!(
            "matrix dump requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let d = m.nrows();
    writeln!(w, "dim={}", d)?;
    for i in 0..d {
        for j in 0..d {
            let z = m[(i, j)];
            writeln!(w, "{} {} {} {}", i, j, format_float(z.re), format_float(z.im))?;
        }
    }
    Ok(())
}

pub fn write_matrix_file<P: AsRef<Path>>(path: P, m: &CMat) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(f);
    write_matrix(&mut buf, m)?;
    buf.flush()?;
    Ok(())
}

/// Read a matrix dump. Entries may appear in any order but every (row, col)
/// must appear exactly once.
pub fn read_matrix<R: Read>(r: R) -> Result<CMat> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix dump".into()))??;
    let dim: usize = header
        .trim()
        .strip_prefix("dim=")
        .ok_or_else(|| Error::Parse(format!("expected `dim=D` header, got `{header}`")))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad dimension in header `{header}`: {e}")))?;
    if dim == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    let mut m = CMat::zeros(dim, dim);
    let mut seen = vec![false; dim * dim];
    let mut count = 0usize;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut it = t.split_whitespace();
        let mut field = |name: &str| -> Result<&str> {
            it.next().ok_or_else(|| {
                Error::Parse(format!("line {}: missing {name}", lineno + 2))
            })
        };
        let row: usize = field("row")?.parse().map_err(|e| {
            Error::Parse(format!("line {}: bad row index: {e}", lineno + 2))
        })?;
        let col: usize = field("col")?.parse().map_err(|e| {
            Error::Parse(format!("line {}: bad col index: {e}", lineno + 2))
        })?;
        let re: f64 = field("re")?.parse().map_err(|e| {
            Error::Parse(format!("line {}: bad real part: {e}", lineno + 2))
        })?;
        let im: f64 = field("im")?.parse().map_err(|e| {
            Error::Parse(format!("line {}: bad imaginary part: {e}", lineno + 2))
        })?;
        if row >= dim || col >= dim {
            return Err(Error::Parse(format!(
                "line {}: index ({row},{col}) out of range for dim={dim}",
                lineno + 2
            )));
        }
        let flat = row * dim + col;
        if seen[flat] {
            return Err(Error::Parse(format!(
                "line {}: duplicate entry ({row},{col})",
                lineno + 2
            )));
        }
        seen[flat] = true;
        count += 1;
        m[(row, col)] = c64::new(re, im);
    }
    if count != dim * dim {
        return Err(Error::Parse(format!(
            "matrix dump has {count} entries, expected {}",
            dim * dim
        )));
    }
    Ok(m)
}

pub fn read_matrix_file<P: AsRef<Path>>(path: P) -> Result<CMat> {
    let f = std::fs::File::open(&path).map_err(|e| {
        Error::Parse(format!("cannot open {}: {e}", path.as_ref().display()))
    })?;
    read_matrix(f)
}
