//! Parameter checkpoints.
//!
//! Layout: a text manifest followed by raw data.
//!
//! ```text
//! SEMHARQ-CKPT-1
//! params <count>
//! <name> <d0>x<d1>x...
//! ...
//! data
//! <little-endian f32 values of every parameter, in manifest order>
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ParamSet, Tensor};
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "SEMHARQ-CKPT-1";

pub fn save_checkpoint(path: &Path, params: &ParamSet) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_checkpoint(&mut w, params)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ParamSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut BufReader::new(file), path)
}

pub(crate) fn write_checkpoint<W: Write>(w: &mut W, params: &ParamSet) -> std::io::Result<()> {
    writeln!(w, "{CHECKPOINT_HEADER}")?;
    writeln!(w, "params {}", params.len())?;
    for p in params.iter() {
        writeln!(w, "{} {}", p.name, shape_string(p.value.shape()))?;
    }
    writeln!(w, "data")?;
    for p in params.iter() {
        write_f32s(w, p.value.data())?;
    }
    Ok(())
}

pub(crate) fn read_checkpoint<R: BufRead>(r: &mut R, path: &Path) -> Result<ParamSet> {
    let bad = |reason: String| Error::format(path, reason);
    let header = read_line(r, path)?;
    if header != CHECKPOINT_HEADER {
        return Err(bad(format!("expected header {CHECKPOINT_HEADER}, found {header:?}")));
    }
    let count_line = read_line(r, path)?;
    let count: usize = count_line
        .strip_prefix("params ")
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| bad(format!("bad parameter count line {count_line:?}")))?;
    let mut manifest = Vec::with_capacity(count);
    for _ in 0..count {
        let line = read_line(r, path)?;
        let (name, shape) = line
            .rsplit_once(' ')
            .ok_or_else(|| bad(format!("bad manifest line {line:?}")))?;
        manifest.push((name.to_string(), parse_shape(shape).ok_or_else(|| bad(format!("bad shape {shape:?}")))?));
    }
    if read_line(r, path)? != "data" {
        return Err(bad("missing data marker".into()));
    }
    let mut params = ParamSet::new();
    for (name, shape) in manifest {
        let n: usize = shape.iter().product();
        let values = read_f32s(r, n).map_err(|e| bad(format!("truncated data for {name}: {e}")))?;
        params.add(name, Tensor::new(shape, values)?);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(|e| Error::io(path, e))?;
    if !rest.is_empty() {
        return Err(bad(format!("{} trailing bytes", rest.len())));
    }
    Ok(params)
}

pub(crate) fn shape_string(shape: &[usize]) -> String {
    shape.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

pub(crate) fn parse_shape(s: &str) -> Option<Vec<usize>> {
    let dims: Option<Vec<usize>> = s.split('x').map(|d| d.parse().ok()).collect();
    dims.filter(|d| !d.is_empty() && d.iter().all(|&v| v > 0))
}

pub(crate) fn read_line<R: BufRead>(r: &mut R, path: &Path) -> Result<String> {
    let mut line = String::new();
    let n = r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    if n == 0 {
        return Err(Error::format(path, "unexpected end of manifest"));
    }
    Ok(line.trim_end_matches(['\n', '\r']).to_string())
}

pub(crate) fn write_f32s<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_f32s<R: Read>(r: &mut R, n: usize) -> std::io::Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}
