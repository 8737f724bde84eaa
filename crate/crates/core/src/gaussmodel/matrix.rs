//! Dense 0/1 matrices and latent-vector matrices, with their on-disk layouts.
//!
//! Binary layouts (all integers little-endian):
//!
//! * `BitMatrix`: `rows: u64`, `cols: u64`, then `ceil(rows * cols / 8)`
//!   payload bytes. Entry `(i, j)` has linear index `k = i * cols + j` and is
//!   stored in bit `k % 8` (least significant first) of byte `k / 8`. Unused
//!   bits of the final byte are zero.
//! * `LatentMatrix`: `rows: u64`, `dim: u64`, then `rows * dim` IEEE-754
//!   `f64` values in row-major order.
//!
//! Both types also read and write a plain CSV form (one matrix row per line,
//! no header) for debugging.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

/// An `n x m` matrix with entries in `{0, 1}`, stored row by row as packed
/// 64-bit words. Bits past `cols` in the last word of a row are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl std::fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: String = (0..self.cols)
                .map(|j| if self.get(i, j) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        write!(f, "]")
    }
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(WORD_BITS);
        Self {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| true)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    out.set(i, j, true);
                }
            }
        }
        out
    }

    /// Build from nested rows of 0/1 values.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut out = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::Format(format!(
                    "row {i} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => out.set(i, j, true),
                    other => {
                        return Err(Error::Format(format!(
                            "entry ({i}, {j}) is {other}, expected 0 or 1"
                        )))
                    }
                }
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        let w = self.data[i * self.words_per_row + j / WORD_BITS];
        (w >> (j % WORD_BITS)) & 1 == 1
    }

    /// Entry as `0.0` or `1.0`.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        if self.get(i, j) {
            1.0
        } else {
            0.0
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, bit: bool) {
        debug_assert!(i < self.rows && j < self.cols);
        let w = &mut self.data[i * self.words_per_row + j / WORD_BITS];
        let mask = 1u64 << (j % WORD_BITS);
        if bit {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    /// Packed words of row `i`.
    #[inline]
    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    #[inline]
    pub(crate) fn row_words_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn row_count_ones(&self, i: usize) -> usize {
        self.row_words(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn density(&self) -> f64 {
        let total = self.rows * self.cols;
        if total == 0 {
            0.0
        } else {
            self.count_ones() as f64 / total as f64
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn check_same_shape(&self, other: &BitMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }

    /// Permute rows and columns: output entry `(i, j)` is input entry
    /// `(row_perm[i], col_perm[j])`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(row_perm[i], col_perm[j]))
    }

    /// Row-major linear bit packing: bit `i * cols + j` of the result is
    /// entry `(i, j)`. Only for matrices with at most 64 entries.
    pub fn to_index(&self) -> u64 {
        assert!(self.rows * self.cols <= 64, "matrix too large to index");
        let mut idx = 0u64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    idx |= 1 << (i * self.cols + j);
                }
            }
        }
        idx
    }

    pub fn from_index(rows: usize, cols: usize, idx: u64) -> Self {
        Self::from_fn(rows, cols, |i, j| (idx >> (i * cols + j)) & 1 == 1)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let total = self.rows * self.cols;
        let mut out = Vec::with_capacity(16 + total.div_ceil(8));
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.cols as u64).to_le_bytes());
        let mut payload = vec![0u8; total.div_ceil(8)];
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    let k = i * self.cols + j;
                    payload[k / 8] |= 1 << (k % 8);
                }
            }
        }
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (rows, cols) = read_dims(bytes)?;
        let total = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Format("matrix dimensions overflow".into()))?;
        let payload = &bytes[16..];
        if payload.len() != total.div_ceil(8) {
            return Err(Error::Format(format!(
                "bit payload has {} bytes, expected {} for a {rows}x{cols} matrix",
                payload.len(),
                total.div_ceil(8)
            )));
        }
        if total % 8 != 0 {
            let last = payload[payload.len() - 1];
            if last >> (total % 8) != 0 {
                return Err(Error::Format("nonzero padding bits".into()));
            }
        }
        Ok(Self::from_fn(rows, cols, |i, j| {
            let k = i * cols + j;
            (payload[k / 8] >> (k % 8)) & 1 == 1
        }))
    }

    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::with_capacity(self.rows * (2 * self.cols + 1));
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    s.push(',');
                }
                s.push(if self.get(i, j) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let rows: Vec<Vec<u8>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                line.split(',')
                    .map(|t| match t.trim() {
                        "0" => Ok(0u8),
                        "1" => Ok(1u8),
                        other => Err(Error::Format(format!("bad bit `{other}`"))),
                    })
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }
}

/// `rows x dim` real matrix whose row `u` is the latent vector of vertex `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f64>,
}

impl LatentMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * dim {
            return Err(Error::Format(format!(
                "{} values cannot fill a {rows}x{dim} latent matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite latent value at {pos}")));
        }
        Ok(Self { rows, dim, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Format("ragged latent rows".into()));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub(crate) fn from_raw(rows: usize, dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * dim);
        Self { rows, dim, values }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[f64] {
        &self.values[u * self.dim..(u + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sub-matrix made of the listed rows, in order.
    pub fn select_rows(&self, idx: &[usize]) -> LatentMatrix {
        let mut values = Vec::with_capacity(idx.len() * self.dim);
        for &u in idx {
            values.extend_from_slice(self.row(u));
        }
        LatentMatrix::from_raw(idx.len(), self.dim, values)
    }

    /// Row-major `rows x rows` matrix of plain inner products.
    pub fn gram(&self) -> Vec<f64> {
        let k = self.rows;
        let mut g = vec![0.0; k * k];
        for u in 0..k {
            for v in u..k {
                let ip = dot(self.row(u), self.row(v));
                g[u * k + v] = ip;
                g[v * k + u] = ip;
            }
        }
        g
    }

    /// Apply `f` to every row vector, producing a matrix of the same shape.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> LatentMatrix {
        let mut values = Vec::with_capacity(self.values.len());
        for u in 0..self.rows {
            let r = f(self.row(u));
            assert_eq!(r.len(), self.dim);
            values.extend(r);
        }
        LatentMatrix::from_raw(self.rows, self.dim, values)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 8 * self.values.len());
        out.extend_from_slice(&(self.rows as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (rows, dim) = read_dims(bytes)?;
        let payload = &bytes[16..];
        let expected = rows
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::Format("latent dimensions overflow".into()))?;
        if payload.len() != expected {
            return Err(Error::Format(format!(
                "latent payload has {} bytes, expected {expected}",
                payload.len()
            )));
        }
        let values = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::new(rows, dim, values)
    }

    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for u in 0..self.rows {
            let line: Vec<String> = self.row(u).iter().map(|v| format!("{v:?}")).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                line.split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|e| Error::Format(format!("bad latent value `{t}`: {e}")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }
}

fn read_dims(bytes: &[u8]) -> Result<(usize, usize)> {
    if bytes.len() < 16 {
        return Err(Error::Format(format!(
            "header needs 16 bytes, file has {}",
            bytes.len()
        )));
    }
    let a = u64::from_le_bytes(bytes[0..8].try_into().expect("8 bytes"));
    let b = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let a = usize::try_from(a).map_err(|_| Error::Format("row count too large".into()))?;
    let b = usize::try_from(b).map_err(|_| Error::Format("column count too large".into()))?;
    Ok((a, b))
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four independent accumulators let the loop vectorise.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
