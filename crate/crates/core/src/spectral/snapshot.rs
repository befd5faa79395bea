//! Plain-text field snapshots: a header line `d n box_length`, then one
//! `re im` pair per node in row-major order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::{Error, Field, Grid, Result};

use super::GridSpec;

pub fn format_snapshot(u: &Field, grid: &Grid) -> String {
    let spec = grid.spec();
    let mut out = String::with_capacity(48 * u.len() + 32);
    let _ = writeln!(out, "{} {} {:.16e}", spec.d, spec.n, spec.box_length);
    for c in u.iter() {
        let _ = writeln!(out, "{:.16e} {:.16e}", c.re, c.im);
    }
    out
}

pub fn write_snapshot(path: impl AsRef<Path>, u: &Field, grid: &Grid) -> Result<()> {
    grid.check_field(u)?;
    fs::write(path, format_snapshot(u, grid))?;
    Ok(())
}

pub fn parse_snapshot(text: &str, origin: &Path) -> Result<(GridSpec, Field)> {
    let err = |message: String| Error::Parse {
        path: origin.to_path_buf(),
        message,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| err("empty snapshot".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(err(format!("bad header {header:?}")));
    }
    let spec = GridSpec {
        d: parts[0].parse().map_err(|e| err(format!("d: {e}")))?,
        n: parts[1].parse().map_err(|e| err(format!("n: {e}")))?,
        box_length: parts[2].parse().map_err(|e| err(format!("box_length: {e}")))?,
    };
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let mut it = line.split_whitespace();
        let mut next = |name: &str| -> Result<f64> {
            it.next()
                .ok_or_else(|| err(format!("node {lineno}: missing {name}")))?
                .parse::<f64>()
                .map_err(|e| err(format!("node {lineno}: {e}")))
        };
        let re = next("re")?;
        let im = next("im")?;
        values.push(Complex64::new(re, im));
    }
    let expected = spec.n.checked_pow(spec.d as u32).unwrap_or(usize::MAX);
    if values.len() != expected {
        return Err(err(format!("expected {expected} nodes, found {}", values.len())));
    }
    Ok((spec, Field::from_vec(values)))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(GridSpec, Field)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_snapshot(&text, path)
}
