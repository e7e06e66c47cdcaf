//! Flat binary arrays: a little-endian `u64` rank, `rank` little-endian `u64`
//! dimensions, then the entries as little-endian `f64` in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::frames::{CosparseSignal, TightFrame};
use crate::linops::DenseMatrix;

const MAX_RANK: u64 = 8;

pub fn write_array<W: Write>(mut w: W, dims: &[usize], data: &[f64]) -> Result<()> {
    let count: usize = dims.iter().product();
    if count != data.len() {
        return Err(Error::DimensionMismatch {
            context: "flat array payload",
            expected: count,
            actual: data.len(),
        });
    }
    w.write_all(&(dims.len() as u64).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Parse(format!("truncated header: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_array<R: Read>(mut r: R) -> Result<(Vec<usize>, Vec<f64>)> {
    let rank = read_u64(&mut r)?;
    if rank > MAX_RANK {
        return Err(Error::Parse(format!("rank {rank} exceeds {MAX_RANK}")));
    }
    let dims: Vec<usize> = (0..rank)
        .map(|_| read_u64(&mut r).map(|d| d as usize))
        .collect::<Result<_>>()?;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Parse("dimension product overflows".into()))?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(Error::Parse(format!(
            "payload has {} bytes, dims {:?} need {}",
            bytes.len(),
            dims,
            count * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((dims, data))
}

pub fn write_matrix<W: Write>(w: W, m: &DenseMatrix) -> Result<()> {
    write_array(w, &[m.rows(), m.cols()], m.data())
}

pub fn read_matrix<R: Read>(r: R) -> Result<DenseMatrix> {
    let (dims, data) = read_array(r)?;
    match dims[..] {
        [rows, cols] => DenseMatrix::new(rows, cols, data),
        _ => Err(Error::Parse(format!("expected a rank-2 array, got dims {dims:?}"))),
    }
}

pub fn write_vector<W: Write>(w: W, v: &[f64]) -> Result<()> {
    write_array(w, &[v.len()], v)
}

pub fn read_vector<R: Read>(r: R) -> Result<Vec<f64>> {
    let (dims, data) = read_array(r)?;
    if dims.len() != 1 {
        return Err(Error::Parse(format!("expected a rank-1 array, got dims {dims:?}")));
    }
    Ok(data)
}

/// Saves the dense analysis operator `D*` (p×n).
pub fn save_frame(path: &Path, frame: &TightFrame) -> Result<()> {
    write_matrix(BufWriter::new(File::create(path)?), &frame.dense_analysis())
}

pub fn load_frame(path: &Path) -> Result<TightFrame> {
    Ok(TightFrame::from_dense(read_matrix(BufReader::new(File::open(path)?))?))
}

/// Saves the signal only; the cosupport is recomputed on load from the
/// zero pattern of `D*x`.
pub fn save_signal(path: &Path, signal: &CosparseSignal) -> Result<()> {
    write_vector(BufWriter::new(File::create(path)?), &signal.x)
}

pub fn load_signal(path: &Path, frame: &TightFrame) -> Result<CosparseSignal> {
    let x = read_vector(BufReader::new(File::open(path)?))?;
    crate::error::check_dim("signal length vs frame", frame.n(), x.len())?;
    let dx = frame.analyze(&x);
    let scale = crate::vector::norm_inf(&dx);
    let cosupport = (0..dx.len()).filter(|&i| dx[i].abs() <= 1e-10 * scale).collect();
    Ok(CosparseSignal { x, cosupport })
}
