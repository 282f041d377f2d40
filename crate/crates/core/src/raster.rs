//! Per-pixel rasters as CSV (`index,x_m,y_m,value`) and binary PGM.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::GridSpec;

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Writes one row per pixel. Values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_raster_csv(path: &Path, grid: &GridSpec, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["index", "x_m", "y_m", "value"])
        .map_err(|e| csv_error(path, e))?;
    for (u, v) in values.iter().enumerate() {
        let p = grid.position(u);
        w.write_record([u.to_string(), p.x.to_string(), p.y.to_string(), v.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads the `value` column back, checking that indices run 0, 1, 2, ...
pub fn read_raster_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = k + 2;
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            column: 0,
            message,
        };
        let index: usize = rec
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|e| bad(format!("index: {e}")))?;
        if index != k {
            return Err(bad(format!("expected pixel {k}, found {index}")));
        }
        let value: f64 = rec
            .get(3)
            .unwrap_or("")
            .parse()
            .map_err(|e| bad(format!("value: {e}")))?;
        out.push(value);
    }
    Ok(out)
}

/// 8-bit grayscale, linearly scaled from the finite min (black) to max
/// (white). North is up. Non-finite values are drawn black.
pub fn write_pgm(path: &Path, grid: &GridSpec, values: &[f64]) -> Result<()> {
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut bytes = Vec::with_capacity(nx * ny);
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let v = values[grid.index(ix, iy)];
            let level = if v.is_finite() {
                ((v - lo) / span * 255.0).round()
            } else {
                0.0
            };
            bytes.push(level.clamp(0.0, 255.0) as u8);
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write!(w, "P5\n{nx} {ny}\n255\n")
        .and_then(|_| w.write_all(&bytes))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
