//! ESRI ASCII grid reader/writer.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::DemGrid;

const DEFAULT_NODATA: f64 = -9999.0;

pub fn read_dem(path: impl AsRef<Path>) -> Result<DemGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dem(&text, path)
}

pub fn parse_dem(text: &str, path: &Path) -> Result<DemGrid> {
    let bad = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut tokens = text.split_whitespace().peekable();
    let (mut ncols, mut nrows, mut cell) = (None, None, None);
    let (mut x, mut y, mut centre) = (None, None, false);
    let mut nodata = DEFAULT_NODATA;
    while let Some(&key) = tokens.peek() {
        if key.parse::<f64>().is_ok() {
            break;
        }
        tokens.next();
        let value = tokens.next().ok_or_else(|| bad(format!("header `{key}` has no value")))?;
        let num: f64 = value.parse().map_err(|_| bad(format!("header `{key}`: bad number {value:?}")))?;
        match key.to_ascii_lowercase().as_str() {
            "ncols" => ncols = Some(num),
            "nrows" => nrows = Some(num),
            "xllcorner" => x = Some(num),
            "yllcorner" => y = Some(num),
            "xllcenter" => {
                x = Some(num);
                centre = true;
            }
            "yllcenter" => {
                y = Some(num);
                centre = true;
            }
            "cellsize" => cell = Some(num),
            "nodata_value" => nodata = num,
            _ => return Err(bad(format!("unknown header `{key}`"))),
        }
    }
    let count = |v: Option<f64>, name: &str| -> Result<usize> {
        match v {
            Some(n) if n >= 1.0 && n.fract() == 0.0 => Ok(n as usize),
            Some(n) => Err(bad(format!("{name} must be a positive integer, got {n}"))),
            None => Err(bad(format!("missing header `{name}`"))),
        }
    };
    let ncols = count(ncols, "ncols")?;
    let nrows = count(nrows, "nrows")?;
    let cell = cell.ok_or_else(|| bad("missing header `cellsize`".into()))?;
    let (mut x, mut y) = match (x, y) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(bad("missing lower-left corner".into())),
    };
    if centre {
        x -= cell / 2.0;
        y -= cell / 2.0;
    }
    let values = tokens
        .enumerate()
        .map(|(i, t)| t.parse::<f64>().map_err(|_| bad(format!("value {i}: bad number {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    DemGrid::new(ncols, nrows, x, y, cell, nodata, values).map_err(|e| bad(e.to_string()))
}

pub fn format_dem(dem: &DemGrid) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "ncols {}", dem.ncols);
    let _ = writeln!(s, "nrows {}", dem.nrows);
    let _ = writeln!(s, "xllcorner {}", dem.xll);
    let _ = writeln!(s, "yllcorner {}", dem.yll);
    let _ = writeln!(s, "cellsize {}", dem.cell_size);
    let _ = writeln!(s, "NODATA_value {}", dem.nodata);
    for row in dem.values.chunks(dem.ncols) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_dem(path: impl AsRef<Path>, dem: &DemGrid) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_dem(dem)).map_err(|e| Error::io(path, e))
}
