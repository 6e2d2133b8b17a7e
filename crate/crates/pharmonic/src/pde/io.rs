//! Plain-text grid dumps and CSV profile output.
//!
//! Dump layout: one header line `n k p tau nx H nz eps tol`, then one block
//! per level from the bottom row upward, each block a single line of
//! space-separated node values; blocks separated by blank lines.

use super::grid::{ScalarField, SlabGrid};
use crate::error::{Error, Result};
use crate::exponents::Geometry;
use std::io::{BufRead, Write};
use std::path::Path;

pub fn dump_field(field: &ScalarField, eps: f64, tol: f64, path: &Path) -> Result<()> {
    let g = &field.grid;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "{} {} {} {} {} {} {} {} {}",
        g.geometry.n, g.geometry.k, g.geometry.p, g.tau, g.nx, g.height, g.nz, eps, tol
    )?;
    for j in 0..=g.nz {
        let row = field.row(j);
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{}", line.join(" "))?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(ScalarField, f64, f64)> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Domain("empty dump file".into()))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 9 {
        return Err(Error::Domain(format!("malformed dump header: {header}")));
    }
    let n: u32 = parts[0].parse().map_err(|_| Error::Domain("bad n".into()))?;
    let k: u32 = parts[1].parse().map_err(|_| Error::Domain("bad k".into()))?;
    let p: f64 = parts[2].parse().map_err(|_| Error::Domain("bad p".into()))?;
    let tau: f64 = parts[3].parse().map_err(|_| Error::Domain("bad tau".into()))?;
    let nx: usize = parts[4].parse().map_err(|_| Error::Domain("bad nx".into()))?;
    let height: f64 = parts[5].parse().map_err(|_| Error::Domain("bad H".into()))?;
    let nz: usize = parts[6].parse().map_err(|_| Error::Domain("bad nz".into()))?;
    let eps: f64 = parts[7].parse().map_err(|_| Error::Domain("bad eps".into()))?;
    let tol: f64 = parts[8].parse().map_err(|_| Error::Domain("bad tol".into()))?;
    let grid = SlabGrid::new(Geometry::new(n, k, p)?, tau, nx, height)?;
    if grid.nz != nz {
        return Err(Error::Domain(format!("dump nz = {nz} inconsistent with grid {}", grid.nz)));
    }
    let mut field = ScalarField::zeros(grid);
    let mut row = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if row > nz {
            return Err(Error::Domain("too many value blocks in dump".into()));
        }
        for (i, tok) in line.split_whitespace().enumerate() {
            if i >= nx {
                return Err(Error::Domain(format!("row {row} has more than {nx} values")));
            }
            let idx = field.idx(i, row);
            field.values[idx] =
                tok.parse().map_err(|_| Error::Domain(format!("bad value {tok}")))?;
        }
        row += 1;
    }
    if row != nz + 1 {
        return Err(Error::Domain(format!("dump has {row} rows, expected {}", nz + 1)));
    }
    Ok((field, eps, tol))
}

/// CSV of per-height statistics: height, max, min, mean.
pub fn write_profile_csv(field: &ScalarField, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "height,max,min,mean")?;
    let g = &field.grid;
    for j in 0..=g.nz {
        writeln!(
            out,
            "{},{},{},{}",
            j as f64 * g.h(),
            field.row_max(j),
            field.row_min(j),
            field.row_mean(j)
        )?;
    }
    Ok(())
}
