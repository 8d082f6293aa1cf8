//! Matrix Market coordinate format (general, real) import and export.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::la::csr::CsrMatrix;

pub fn write_matrix_market<W: Write>(w: &mut W, a: &CsrMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for r in 0..a.n_rows() {
        for (c, v) in a.iter_row(r) {
            writeln!(w, "{} {} {:.17e}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}

pub fn save_matrix_market(path: &Path, a: &CsrMatrix) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    write_matrix_market(&mut w, a)
}

pub fn read_matrix_market<R: Read>(r: R) -> Result<CsrMatrix> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix market stream".into()))??;
    let tokens: Vec<String> = header.split_whitespace().map(|s| s.to_lowercase()).collect();
    if tokens.len() < 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
        || tokens[3] != "real"
        || tokens[4] != "general"
    {
        return Err(Error::Parse(format!(
            "unsupported matrix market header: {header}"
        )));
    }

    let mut size_line = None;
    for line in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some(trimmed.to_string());
        break;
    }
    let size_line = size_line.ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| Error::Parse(e.to_string())))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(Error::Parse(format!("bad size line: {size_line}")));
    }
    let (n_rows, n_cols, nnz) = (dims[0], dims[1], dims[2]);

    let mut triplets = Vec::with_capacity(nnz);
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let r: usize = it
            .next()
            .ok_or_else(|| Error::Parse("short entry line".into()))?
            .parse()
            .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?;
        let c: usize = it
            .next()
            .ok_or_else(|| Error::Parse("short entry line".into()))?
            .parse()
            .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?;
        let v: f64 = it
            .next()
            .ok_or_else(|| Error::Parse("short entry line".into()))?
            .parse()
            .map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
        if r == 0 || c == 0 {
            return Err(Error::Parse("matrix market indices are 1-based".into()));
        }
        triplets.push((r - 1, c - 1, v));
    }
    if triplets.len() != nnz {
        return Err(Error::Parse(format!(
            "expected {nnz} entries, found {}",
            triplets.len()
        )));
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &triplets)
}

pub fn load_matrix_market(path: &Path) -> Result<CsrMatrix> {
    read_matrix_market(std::fs::File::open(path)?)
}

/// Plain-text vector: first line holds the length, then one value per line.
pub fn write_vector_text<W: Write>(w: &mut W, x: &[f64]) -> Result<()> {
    writeln!(w, "{}", x.len())?;
    for v in x {
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

pub fn read_vector_text<R: Read>(r: R) -> Result<Vec<f64>> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let len: usize = lines
        .next()
        .ok_or_else(|| Error::Parse("empty vector stream".into()))??
        .trim()
        .parse()
        .map_err(|e: std::num::ParseIntError| Error::Parse(e.to_string()))?;
    let mut out = Vec::with_capacity(len);
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(
            t.parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))?,
        );
    }
    if out.len() != len {
        return Err(Error::Parse(format!(
            "vector header says {len}, found {}",
            out.len()
        )));
    }
    Ok(out)
}

/// Binary vector: little-endian u64 length header, then little-endian f64s.
pub fn write_vector_binary<W: Write>(w: &mut W, x: &[f64]) -> Result<()> {
    w.write_all(&(x.len() as u64).to_le_bytes())?;
    for v in x {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_vector_binary<R: Read>(mut r: R) -> Result<Vec<f64>> {
    let mut header = [0u8; 8];
    r.read_exact(&mut header)?;
    let len = u64::from_le_bytes(header) as usize;
    let mut out = Vec::with_capacity(len);
    let mut buf = [0u8; 8];
    for _ in 0..len {
        r.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}
