//! Data matrix storage and the batched products `A·X` and `Aᵀ·Y`.
//!
//! Dense storage is column-major. Sparse storage is compressed sparse column
//! (CSC) with strictly increasing row indices inside each column.
//!
//! Every product entry is accumulated in ascending index order, starting from
//! `0.0`, whatever the batch width and whatever the number of worker threads.
//! Work is only ever split across output entries, so a width-`r` product is
//! bitwise equal to `r` single-column products.

mod io;

pub use io::{load_matrix, read_csv, read_matrix_market, MatrixFormat};

use rayon::prelude::*;

use crate::error::{Result, SpcaError};

/// Below this many multiply-adds a product runs on the calling thread.
const PAR_THRESHOLD: usize = 1 << 16;
/// Output rows handled by one task in the dense `A·X` kernel.
const ROW_BLOCK: usize = 256;

/// Compressed sparse column storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CscStorage {
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscStorage {
    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[lo..hi], &self.values[lo..hi])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    /// Column-major, exactly `n·p` values.
    Dense(Vec<f64>),
    Sparse(CscStorage),
}

/// The `n × p` data matrix: `n` samples (rows) of `p` variables (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    storage: Storage,
    column_norms: Option<Vec<f64>>,
}

impl DataMatrix {
    /// Builds a dense matrix from column-major values.
    pub fn from_col_major(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        check_shape(n, p)?;
        if values.len() != n * p {
            return Err(SpcaError::DimensionMismatch {
                expected: n * p,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpcaError::InvalidParameter(format!(
                "non-finite value at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        Ok(DataMatrix {
            n,
            p,
            storage: Storage::Dense(values),
            column_norms: None,
        })
    }

    /// Builds a dense matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        check_shape(n, p)?;
        let mut values = vec![0.0; n * p];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != p {
                return Err(SpcaError::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                values[j * n + i] = v;
            }
        }
        Self::from_col_major(n, p, values)
    }

    /// Builds a sparse matrix from CSC arrays.
    pub fn from_csc(n: usize, p: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        check_shape(n, p)?;
        if col_ptr.len() != p + 1 {
            return Err(SpcaError::DimensionMismatch {
                expected: p + 1,
                found: col_ptr.len(),
            });
        }
        if row_idx.len() != values.len() {
            return Err(SpcaError::DimensionMismatch {
                expected: values.len(),
                found: row_idx.len(),
            });
        }
        if col_ptr[0] != 0 || col_ptr[p] != values.len() {
            return Err(SpcaError::InvalidParameter(
                "column pointers must start at 0 and end at nnz".into(),
            ));
        }
        for j in 0..p {
            let (lo, hi) = (col_ptr[j], col_ptr[j + 1]);
            if lo > hi {
                return Err(SpcaError::InvalidParameter(format!(
                    "column pointers decrease at column {j}"
                )));
            }
            let rows = &row_idx[lo..hi];
            if rows.iter().any(|&r| r >= n) {
                return Err(SpcaError::InvalidParameter(format!(
                    "row index out of range in column {j}"
                )));
            }
            if rows.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SpcaError::InvalidParameter(format!(
                    "row indices not strictly increasing in column {j}"
                )));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpcaError::InvalidParameter("non-finite stored value".into()));
        }
        Ok(DataMatrix {
            n,
            p,
            storage: Storage::Sparse(CscStorage {
                col_ptr,
                row_idx,
                values,
            }),
            column_norms: None,
        })
    }

    /// Builds a sparse matrix from 0-based `(row, col, value)` triplets.
    /// Duplicate coordinates are summed.
    pub fn from_triplets(n: usize, p: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        check_shape(n, p)?;
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        if let Some(&(i, j, _)) = sorted.iter().find(|&&(i, j, _)| i >= n || j >= p) {
            return Err(SpcaError::InvalidParameter(format!(
                "triplet ({i}, {j}) outside a {n}x{p} matrix"
            )));
        }
        sorted.sort_by_key(|&(i, j, _)| (j, i));
        let mut col_ptr = vec![0usize; p + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_idx.push(i);
            values.push(v);
            col_ptr[j + 1] += 1;
            last = Some((i, j));
        }
        for j in 0..p {
            col_ptr[j + 1] += col_ptr[j];
        }
        Self::from_csc(n, p, col_ptr, row_idx, values)
    }

    pub fn identity(p: usize) -> Self {
        let diag = vec![1.0; p];
        Self::diag(&diag)
    }

    /// Square dense diagonal matrix.
    pub fn diag(d: &[f64]) -> Self {
        let p = d.len();
        let mut values = vec![0.0; p * p];
        for (j, &v) in d.iter().enumerate() {
            values[j * p + j] = v;
        }
        Self::from_col_major(p, p, values).expect("diagonal matrix is well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Number of stored values (`n·p` for dense storage).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Sparse(csc) => csc.values.len(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n && j < self.p, "index ({i}, {j}) out of bounds");
        match &self.storage {
            Storage::Dense(v) => v[j * self.n + i],
            Storage::Sparse(csc) => {
                let (rows, vals) = csc.column(j);
                rows.binary_search(&i).map_or(0.0, |k| vals[k])
            }
        }
    }

    /// Column-major dense copy of the values.
    pub fn to_dense_values(&self) -> Vec<f64> {
        match &self.storage {
            Storage::Dense(v) => v.clone(),
            Storage::Sparse(csc) => {
                let mut out = vec![0.0; self.n * self.p];
                for j in 0..self.p {
                    let (rows, vals) = csc.column(j);
                    for (&i, &v) in rows.iter().zip(vals) {
                        out[j * self.n + i] = v;
                    }
                }
                out
            }
        }
    }

    pub fn to_dense(&self) -> DataMatrix {
        DataMatrix {
            n: self.n,
            p: self.p,
            storage: Storage::Dense(self.to_dense_values()),
            column_norms: self.column_norms.clone(),
        }
    }

    /// Dense submatrix made of the listed columns, in the given order.
    /// Panics if `cols` is empty or out of range.
    pub fn select_columns(&self, cols: &[usize]) -> DataMatrix {
        assert!(!cols.is_empty(), "cannot select zero columns");
        let mut values = Vec::with_capacity(self.n * cols.len());
        for &j in cols {
            values.extend((0..self.n).map(|i| self.get(i, j)));
        }
        DataMatrix::from_col_major(self.n, cols.len(), values).expect("columns of a valid matrix")
    }

    /// Euclidean norm of column `j`, always recomputed.
    pub fn column_norm(&self, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(v) => norm2(&v[j * self.n..(j + 1) * self.n]),
            Storage::Sparse(csc) => norm2(csc.column(j).1),
        }
    }

    /// Fills the column-norm cache.
    pub fn with_column_norms(mut self) -> Self {
        self.column_norms = Some((0..self.p).map(|j| self.column_norm(j)).collect());
        self
    }

    pub fn column_norms(&self) -> Option<&[f64]> {
        self.column_norms.as_deref()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        let vals: &[f64] = match &self.storage {
            Storage::Dense(v) => v,
            Storage::Sparse(csc) => &csc.values,
        };
        vals.iter().map(|v| v * v).sum()
    }

    /// Subtracts each column's mean. Sparse inputs come back dense.
    pub fn center_columns(&self) -> DataMatrix {
        if self.is_sparse() {
            log::warn!(
                "centering a sparse {}x{} matrix; the result is stored dense",
                self.n,
                self.p
            );
        }
        let n = self.n;
        let mut values = self.to_dense_values();
        for col in values.chunks_mut(n) {
            let mean = col.iter().sum::<f64>() / n as f64;
            for v in col.iter_mut() {
                *v -= mean;
            }
        }
        let out = DataMatrix {
            n,
            p: self.p,
            storage: Storage::Dense(values),
            column_norms: None,
        };
        if self.column_norms.is_some() {
            out.with_column_norms()
        } else {
            out
        }
    }

    /// `A·X` for a batch of `p`-vectors.
    pub fn mult(&self, x: &VectorBatch) -> Result<VectorBatch> {
        if x.dim != self.p {
            return Err(SpcaError::DimensionMismatch {
                expected: self.p,
                found: x.dim,
            });
        }
        let r = x.width;
        let values = match &self.storage {
            Storage::Dense(a) => dense_mult(a, self.n, self.p, x),
            Storage::Sparse(csc) => sparse_mult(csc, self.n, self.p, x),
        };
        Ok(VectorBatch {
            dim: self.n,
            width: r,
            values,
        })
    }

    /// `Aᵀ·Y` for a batch of `n`-vectors.
    pub fn mult_t(&self, y: &VectorBatch) -> Result<VectorBatch> {
        if y.dim != self.n {
            return Err(SpcaError::DimensionMismatch {
                expected: self.n,
                found: y.dim,
            });
        }
        let r = y.width;
        let values = match &self.storage {
            Storage::Dense(a) => dense_mult_t(a, self.n, self.p, y),
            Storage::Sparse(csc) => sparse_mult_t(csc, self.n, self.p, y),
        };
        Ok(VectorBatch {
            dim: self.p,
            width: r,
            values,
        })
    }

    /// `A·x` for a single vector. Same accumulation order as [`DataMatrix::mult`].
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mult(&VectorBatch::from_column(x.to_vec()))?.values)
    }

    /// `Aᵀ·y` for a single vector.
    pub fn matvec_t(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(self.mult_t(&VectorBatch::from_column(y.to_vec()))?.values)
    }
}

fn check_shape(n: usize, p: usize) -> Result<()> {
    if n == 0 || p == 0 {
        return Err(SpcaError::InvalidParameter(format!(
            "matrix must be at least 1x1, got {n}x{p}"
        )));
    }
    Ok(())
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A block of `width` column vectors of length `dim`, stored column-major.
/// Each column is the iterate of one independent run.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorBatch {
    dim: usize,
    width: usize,
    values: Vec<f64>,
}

impl VectorBatch {
    pub fn zeros(dim: usize, width: usize) -> Self {
        VectorBatch {
            dim,
            width,
            values: vec![0.0; dim * width],
        }
    }

    pub fn from_column(col: Vec<f64>) -> Self {
        VectorBatch {
            dim: col.len(),
            width: 1,
            values: col,
        }
    }

    /// Stacks equally long columns side by side.
    pub fn from_columns<C: AsRef<[f64]>>(cols: &[C]) -> Result<Self> {
        let width = cols.len();
        if width == 0 {
            return Err(SpcaError::InvalidParameter("empty batch".into()));
        }
        let dim = cols[0].as_ref().len();
        let mut values = Vec::with_capacity(dim * width);
        for c in cols {
            let c = c.as_ref();
            if c.len() != dim {
                return Err(SpcaError::DimensionMismatch {
                    expected: dim,
                    found: c.len(),
                });
            }
            values.extend_from_slice(c);
        }
        Ok(VectorBatch { dim, width, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim.max(1)).take(self.width)
    }

    pub fn into_columns(self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.dim.max(1))
            .take(self.width)
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Row-major copy (`dim × width`), the layout the dense kernels stream over.
    fn to_row_major(&self) -> Vec<f64> {
        let (d, r) = (self.dim, self.width);
        let mut out = vec![0.0; d * r];
        for j in 0..r {
            for (i, &v) in self.column(j).iter().enumerate() {
                out[i * r + j] = v;
            }
        }
        out
    }
}

fn row_major_to_col_major(rm: &[f64], dim: usize, width: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim * width];
    for i in 0..dim {
        for j in 0..width {
            out[j * dim + i] = rm[i * width + j];
        }
    }
    out
}

// Every output entry of the dense kernels is a single running sum that starts
// at 0.0 and adds the products in ascending index order. Tiling only changes
// which entries are in flight together, so any batch width gives the same
// bits as width 1. The AVX2 tile variants use separate multiplies and adds
// (no fused multiply-add), so they round exactly like the portable ones.

/// Rows per register tile in `A X`.
const TILE: usize = 4;
/// Columns of `A` visited per pass over a row block in `A X`.
const K_BLOCK: usize = 128;
/// Columns of `A` per task in `Aᵀ Y`.
const T_COLS: usize = 8;

// out[i, j] = sum_k a[i, k] * x[k, j], k ascending.
fn dense_mult(a: &[f64], n: usize, p: usize, x: &VectorBatch) -> Vec<f64> {
    let r = x.width;
    if r == 1 {
        let xv = &x.values;
        let mut out = vec![0.0; n];
        let run = |row0: usize, block: &mut [f64]| {
            let len = block.len();
            for (k, &xk) in xv.iter().enumerate() {
                let col = &a[k * n + row0..k * n + row0 + len];
                for (o, &aik) in block.iter_mut().zip(col) {
                    *o += aik * xk;
                }
            }
        };
        if n * p < PAR_THRESHOLD {
            run(0, &mut out);
        } else {
            out.par_chunks_mut(ROW_BLOCK)
                .enumerate()
                .for_each(|(b, block)| run(b * ROW_BLOCK, block));
        }
        return out;
    }

    let xr = x.to_row_major();
    let mut out_rm = vec![0.0; n * r];
    let run = |row0: usize, block: &mut [f64]| {
        let rows = block.len() / r;
        let tiles = rows.div_ceil(TILE);
        // Panel of A copied tile by tile, k-major inside a tile, zero-padded rows.
        let mut packed = vec![0.0; tiles * TILE * K_BLOCK];
        for k0 in (0..p).step_by(K_BLOCK) {
            let kc = K_BLOCK.min(p - k0);
            for t in 0..tiles {
                let mr = TILE.min(rows - t * TILE);
                let dst = &mut packed[t * TILE * K_BLOCK..][..TILE * kc];
                for kk in 0..kc {
                    let src = &a[(k0 + kk) * n + row0 + t * TILE..][..mr];
                    dst[kk * TILE..kk * TILE + mr].copy_from_slice(src);
                }
            }
            for t in 0..tiles {
                let mr = TILE.min(rows - t * TILE);
                let panel = &packed[t * TILE * K_BLOCK..][..TILE * kc];
                let mut j = 0;
                while j < r {
                    let nr = TILE.min(r - j);
                    let tile = MultTile {
                        panel,
                        xr: &xr[k0 * r..],
                        r,
                        kc,
                        rows: mr,
                        local: t * TILE,
                        col: j,
                    };
                    match nr {
                        4 => tile.run::<4>(block),
                        3 => tile.run::<3>(block),
                        2 => tile.run::<2>(block),
                        _ => tile.run::<1>(block),
                    }
                    j += nr;
                }
            }
        }
    };
    if n * p * r < PAR_THRESHOLD {
        run(0, &mut out_rm);
    } else {
        out_rm
            .par_chunks_mut(ROW_BLOCK * r)
            .enumerate()
            .for_each(|(b, block)| run(b * ROW_BLOCK, block));
    }
    row_major_to_col_major(&out_rm, n, r)
}

/// One tile of `A X`: `rows ≤ TILE` rows starting at `local` within the
/// block, batch columns `col..col+NR`, adding the products of `kc` packed
/// columns to the partial sums held in `block`.
struct MultTile<'a> {
    panel: &'a [f64],
    xr: &'a [f64],
    r: usize,
    kc: usize,
    rows: usize,
    local: usize,
    col: usize,
}

impl MultTile<'_> {
    fn run<const NR: usize>(&self, block: &mut [f64]) {
        #[cfg(target_arch = "x86_64")]
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: AVX2 support was just checked.
            unsafe { self.body_avx2::<NR>(block) };
            return;
        }
        self.body::<NR>(block)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    fn body_avx2<const NR: usize>(&self, block: &mut [f64]) {
        self.body::<NR>(block)
    }

    #[inline(always)]
    fn body<const NR: usize>(&self, block: &mut [f64]) {
        let r = self.r;
        let mut acc = [[0.0f64; NR]; TILE];
        for (ii, row) in acc.iter_mut().enumerate().take(self.rows) {
            row.copy_from_slice(&block[(self.local + ii) * r + self.col..][..NR]);
        }
        for (kk, ac) in self.panel.chunks_exact(TILE).enumerate().take(self.kc) {
            let xk: &[f64; NR] = self.xr[kk * r + self.col..][..NR].try_into().unwrap();
            for ii in 0..TILE {
                for jj in 0..NR {
                    acc[ii][jj] += ac[ii] * xk[jj];
                }
            }
        }
        for (ii, row) in acc.iter().enumerate().take(self.rows) {
            block[(self.local + ii) * r + self.col..][..NR].copy_from_slice(row);
        }
    }
}

// out[k, j] = sum_i a[i, k] * y[i, j], i ascending.
fn dense_mult_t(a: &[f64], n: usize, p: usize, y: &VectorBatch) -> Vec<f64> {
    let r = y.width;
    let yr = y.to_row_major();
    // out_rm is p x r row-major; each task owns T_COLS consecutive columns of A.
    let mut out_rm = vec![0.0; p * r];
    let run = |k: usize, acc_rows: &mut [f64]| {
        let kr = acc_rows.len() / r;
        let mut j = 0;
        while j < r {
            let nr = TILE.min(r - j);
            let t = MultTTile {
                a,
                n,
                yr: &yr,
                r,
                col: j,
            };
            match (kr, nr) {
                // Narrow batches keep more columns of A in flight.
                (T_COLS, 1) => t.run::<T_COLS, 1>(k, acc_rows),
                (T_COLS, 2) => t.run::<T_COLS, 2>(k, acc_rows),
                _ => {
                    let mut kk = 0;
                    while kk + 4 <= kr {
                        let out = &mut acc_rows[kk * r..];
                        match nr {
                            4 => t.run::<4, 4>(k + kk, out),
                            3 => t.run::<4, 3>(k + kk, out),
                            2 => t.run::<4, 2>(k + kk, out),
                            _ => t.run::<4, 1>(k + kk, out),
                        }
                        kk += 4;
                    }
                    for c in kk..kr {
                        let out = &mut acc_rows[c * r..];
                        match nr {
                            4 => t.run::<1, 4>(k + c, out),
                            3 => t.run::<1, 3>(k + c, out),
                            2 => t.run::<1, 2>(k + c, out),
                            _ => t.run::<1, 1>(k + c, out),
                        }
                    }
                }
            }
            j += nr;
        }
    };
    if n * p * r < PAR_THRESHOLD {
        for (t, rows) in out_rm.chunks_mut(T_COLS * r).enumerate() {
            run(t * T_COLS, rows);
        }
    } else {
        out_rm
            .par_chunks_mut(T_COLS * r)
            .enumerate()
            .for_each(|(t, rows)| run(t * T_COLS, rows));
    }
    row_major_to_col_major(&out_rm, p, r)
}

/// Tiles of `Aᵀ Y` for batch columns `col..col+NR`.
struct MultTTile<'a> {
    a: &'a [f64],
    n: usize,
    yr: &'a [f64],
    r: usize,
    col: usize,
}

impl MultTTile<'_> {
    /// Columns `k..k+KR` of `A`; row `kk` of the result goes to `out[kk * r + col..]`.
    fn run<const KR: usize, const NR: usize>(&self, k: usize, out: &mut [f64]) {
        #[cfg(target_arch = "x86_64")]
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: AVX2 support was just checked.
            unsafe { self.body_avx2::<KR, NR>(k, out) };
            return;
        }
        self.body::<KR, NR>(k, out)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    fn body_avx2<const KR: usize, const NR: usize>(&self, k: usize, out: &mut [f64]) {
        self.body::<KR, NR>(k, out)
    }

    #[inline(always)]
    fn body<const KR: usize, const NR: usize>(&self, k: usize, out: &mut [f64]) {
        let (n, r) = (self.n, self.r);
        let cols: [&[f64]; KR] = std::array::from_fn(|kk| &self.a[(k + kk) * n..][..n]);
        let mut acc = [[0.0f64; NR]; KR];
        for (i, yrow) in self.yr.chunks_exact(r).enumerate().take(n) {
            let yi: &[f64; NR] = yrow[self.col..][..NR].try_into().unwrap();
            for kk in 0..KR {
                let aik = cols[kk][i];
                for jj in 0..NR {
                    acc[kk][jj] += aik * yi[jj];
                }
            }
        }
        for (kk, row) in acc.iter().enumerate() {
            out[kk * r + self.col..][..NR].copy_from_slice(row);
        }
    }
}

fn sparse_mult(csc: &CscStorage, n: usize, p: usize, x: &VectorBatch) -> Vec<f64> {
    let r = x.width;
    let mut out = vec![0.0; n * r];
    let run = |j: usize, col_out: &mut [f64]| {
        let xj = x.column(j);
        for (k, &xk) in xj.iter().enumerate().take(p) {
            let (rows, vals) = csc.column(k);
            for (&i, &v) in rows.iter().zip(vals) {
                col_out[i] += v * xk;
            }
        }
    };
    if csc.values.len() * r < PAR_THRESHOLD || r == 1 {
        for (j, col_out) in out.chunks_mut(n).enumerate() {
            run(j, col_out);
        }
    } else {
        out.par_chunks_mut(n)
            .enumerate()
            .for_each(|(j, col_out)| run(j, col_out));
    }
    out
}

fn sparse_mult_t(csc: &CscStorage, n: usize, p: usize, y: &VectorBatch) -> Vec<f64> {
    let r = y.width;
    let entry = |idx: usize| -> f64 {
        let (j, k) = (idx / p, idx % p);
        let yj = &y.values[j * n..(j + 1) * n];
        let (rows, vals) = csc.column(k);
        let mut acc = 0.0;
        for (&i, &v) in rows.iter().zip(vals) {
            acc += v * yj[i];
        }
        acc
    };
    if csc.values.len() * r < PAR_THRESHOLD {
        (0..p * r).map(entry).collect()
    } else {
        (0..p * r).into_par_iter().map(entry).collect()
    }
}
