//! NFLD1 field files: one ASCII header line, then raw little-endian f64.
//!
//! Header: `NFLD1 n=<n> sizes=<s1,...,sn> comps=<c> dtype=f64le`
//! Data: row-major over grid points, components fastest-varying. Periods are
//! not part of the format; readers supply them (default 2*pi per axis).

use crate::error::{Error, Result};
use crate::field::{ScalarField, SymTensorField};
use crate::grid::Grid;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

pub const MAGIC: &str = "NFLD1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub sizes: Vec<usize>,
    pub comps: usize,
}

fn write_impl(path: &Path, sizes: &[usize], comps: usize, vals: &[f64]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let sizes_str: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
    writeln!(
        w,
        "{MAGIC} n={} sizes={} comps={} dtype=f64le",
        sizes.len(),
        sizes_str.join(","),
        comps
    )?;
    for &v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn parse_header(line: &str) -> Result<Header> {
    let mut parts = line.split_whitespace();
    let magic = parts.next().unwrap_or("");
    if magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, want {MAGIC}")));
    }
    let mut n: Option<usize> = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut comps: Option<usize> = None;
    let mut dtype_ok = false;
    for part in parts {
        let (key, val) = part
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("malformed header field {part:?}")))?;
        match key {
            "n" => {
                n = Some(val.parse().map_err(|_| {
                    Error::Format(format!("bad n value {val:?}"))
                })?)
            }
            "sizes" => {
                let parsed: std::result::Result<Vec<usize>, _> =
                    val.split(',').map(|s| s.parse()).collect();
                sizes = Some(parsed.map_err(|_| Error::Format(format!("bad sizes {val:?}")))?);
            }
            "comps" => {
                comps = Some(val.parse().map_err(|_| {
                    Error::Format(format!("bad comps value {val:?}"))
                })?)
            }
            "dtype" => {
                if val != "f64le" {
                    return Err(Error::Format(format!("unsupported dtype {val:?}")));
                }
                dtype_ok = true;
            }
            other => return Err(Error::Format(format!("unknown header key {other:?}"))),
        }
    }
    let (Some(n), Some(sizes), Some(comps)) = (n, sizes, comps) else {
        return Err(Error::Format("header missing n, sizes or comps".into()));
    };
    if !dtype_ok {
        return Err(Error::Format("header missing dtype".into()));
    }
    if sizes.len() != n {
        return Err(Error::Format(format!(
            "n={n} but sizes has {} entries",
            sizes.len()
        )));
    }
    Ok(Header { sizes, comps })
}

fn read_impl(path: &Path) -> Result<(Header, Vec<f64>)> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header = parse_header(line.trim_end())?;
    let npoints: usize = header.sizes.iter().product();
    let total = npoints * header.comps;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != total * 8 {
        return Err(Error::Format(format!(
            "payload {} bytes, header implies {}",
            bytes.len(),
            total * 8
        )));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, vals))
}

pub fn write_scalar(path: &Path, field: &ScalarField) -> Result<()> {
    write_impl(path, field.grid().sizes(), 1, field.values())
}

pub fn write_sym(path: &Path, field: &SymTensorField) -> Result<()> {
    write_impl(
        path,
        field.grid().sizes(),
        field.grid().sym_len(),
        field.values(),
    )
}

/// Read a one-component file onto a grid with the given periods
/// (defaults to 2*pi per axis when `periods` is None).
pub fn read_scalar(path: &Path, periods: Option<&[f64]>) -> Result<ScalarField> {
    let (header, vals) = read_impl(path)?;
    if header.comps != 1 {
        return Err(Error::Format(format!(
            "expected 1 component, file has {}",
            header.comps
        )));
    }
    let grid = make_grid(&header.sizes, periods)?;
    ScalarField::from_values(&grid, vals)
}

pub fn read_sym(path: &Path, periods: Option<&[f64]>) -> Result<SymTensorField> {
    let (header, vals) = read_impl(path)?;
    let grid = make_grid(&header.sizes, periods)?;
    if header.comps != grid.sym_len() {
        return Err(Error::Format(format!(
            "expected {} components for a symmetric tensor, file has {}",
            grid.sym_len(),
            header.comps
        )));
    }
    let mut field = SymTensorField::zeros(&grid);
    field.values_mut().copy_from_slice(&vals);
    Ok(field)
}

fn make_grid(sizes: &[usize], periods: Option<&[f64]>) -> Result<Arc<Grid>> {
    match periods {
        Some(p) => Grid::with_periods(sizes, p),
        None => Grid::new(sizes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    #[test]
    fn scalar_round_trip_is_bit_exact() {
        let g = Grid::new(&[8, 8, 8]).unwrap();
        let f = ScalarField::sample(&g, &Expr::sin_wave(1, 2, g.periods()[1]));
        let dir = std::env::temp_dir().join("confcurv-nfld-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("scalar.nfld");
        write_scalar(&path, &f).unwrap();
        let back = read_scalar(&path, None).unwrap();
        assert_eq!(back.grid().sizes(), g.sizes());
        assert!(f
            .values()
            .iter()
            .zip(back.values())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn sym_round_trip_preserves_components() {
        let g = Grid::new(&[8, 8, 8]).unwrap();
        let mut t = SymTensorField::zeros(&g);
        t.set(17, 0, 2, -0.25);
        t.set(17, 1, 1, 4.0);
        let dir = std::env::temp_dir().join("confcurv-nfld-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sym.nfld");
        write_sym(&path, &t).unwrap();
        let back = read_sym(&path, None).unwrap();
        assert_eq!(back.get(17, 2, 0), -0.25);
        assert_eq!(back.get(17, 1, 1), 4.0);
    }

    #[test]
    fn malformed_headers_are_rejected() {
        assert!(parse_header("NFLD2 n=3 sizes=8,8,8 comps=1 dtype=f64le").is_err());
        assert!(parse_header("NFLD1 n=3 sizes=8,8 comps=1 dtype=f64le").is_err());
        assert!(parse_header("NFLD1 n=3 sizes=8,8,8 comps=1 dtype=f32le").is_err());
        assert!(parse_header("NFLD1 n=3 sizes=8,8,8 comps=1").is_err());
        assert!(parse_header("NFLD1 n=3 sizes=8,8,8 comps=1 dtype=f64le junk").is_err());
        assert!(parse_header("NFLD1 n=3 sizes=8,8,8 comps=1 dtype=f64le").is_ok());
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let g = Grid::new(&[8, 8, 8]).unwrap();
        let f = ScalarField::zeros(&g);
        let dir = std::env::temp_dir().join("confcurv-nfld-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trunc.nfld");
        write_scalar(&path, &f).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(matches!(read_scalar(&path, None), Err(Error::Format(_))));
    }
}
