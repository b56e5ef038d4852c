//! Compressed sparse row matrices over `f64`.
//!
//! Canonical form everywhere: within each row the column indices are strictly
//! increasing and no explicit zeros are stored. Every constructor enforces
//! this, so equality comparisons and serialized bytes are deterministic.

use crate::dense::axpy;
use crate::error::Error;
use crate::par::chunked_mut;
use crate::Result;
use ndarray::Array2;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Matrix with no stored entries.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// n×n identity.
    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from (row, col, value) triplets: duplicates are summed, exact
    /// zeros dropped, rows sorted by column.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &entries {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Index(format!(
                    "triplet ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
                )));
            }
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut it = entries.into_iter().peekable();
        while let Some((r, c, mut v)) = it.next() {
            while let Some(&(r2, c2, v2)) = it.peek() {
                if r2 == r && c2 == c {
                    v += v2;
                    it.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                row_offsets[r + 1] += 1;
                col_indices.push(c);
                values.push(v);
            }
        }
        for r in 0..n_rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(SparseMatrix { n_rows, n_cols, row_offsets, col_indices, values })
    }

    /// Assembles from parts already in canonical form (internal fast path).
    pub(crate) fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_offsets.len(), n_rows + 1);
        debug_assert_eq!(*row_offsets.last().unwrap(), values.len());
        debug_assert_eq!(col_indices.len(), values.len());
        #[cfg(debug_assertions)]
        for r in 0..n_rows {
            let cols = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            debug_assert!(cols.windows(2).all(|w| w[0] < w[1]), "row {r} not sorted");
            debug_assert!(cols.iter().all(|&c| c < n_cols));
        }
        SparseMatrix { n_rows, n_cols, row_offsets, col_indices, values }
    }

    /// Assembles from CSR arrays of unknown provenance, verifying every
    /// canonical-form invariant instead of assuming it.
    pub fn from_csr_checked(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<SparseMatrix> {
        if row_offsets.len() != n_rows + 1 || row_offsets.first() != Some(&0) {
            return Err(Error::Format(format!(
                "offset array has {} entries for {n_rows} rows",
                row_offsets.len()
            )));
        }
        if col_indices.len() != values.len() || *row_offsets.last().unwrap() != values.len() {
            return Err(Error::Format(format!(
                "{} column indices, {} values, offsets end at {}",
                col_indices.len(),
                values.len(),
                row_offsets.last().unwrap()
            )));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("row offsets are not non-decreasing".into()));
        }
        for r in 0..n_rows {
            let cols = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Format(format!("row {r} columns not strictly sorted")));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::Format(format!("row {r} has a column beyond {n_cols}")));
            }
        }
        if values.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(Error::Format("stored values must be finite and nonzero".into()));
        }
        Ok(SparseMatrix { n_rows, n_cols, row_offsets, col_indices, values })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_offsets[r + 1] - self.row_offsets[r]
    }

    /// Stored value at (r, c), or 0.0.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(i) => vals[i],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Sparse-sparse product, Gustavson's algorithm with a per-row scatter
    /// accumulator; parallel over output rows.
    pub fn spgemm(&self, rhs: &SparseMatrix) -> Result<SparseMatrix> {
        if self.n_cols != rhs.n_rows {
            return Err(Error::Shape(format!(
                "spgemm: {}x{} * {}x{}",
                self.n_rows, self.n_cols, rhs.n_rows, rhs.n_cols
            )));
        }
        let mut rows: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
        rows.resize_with(self.n_rows, Default::default);
        chunked_mut(&mut rows, |start, chunk| {
            let mut acc = Scatter::new(rhs.n_cols);
            for (k, out) in chunk.iter_mut().enumerate() {
                let i = start + k;
                let (cols, vals) = self.row(i);
                for (&j, &a_ij) in cols.iter().zip(vals) {
                    let (rcols, rvals) = rhs.row(j);
                    for (&c, &b_jc) in rcols.iter().zip(rvals) {
                        acc.add(c, a_ij * b_jc);
                    }
                }
                *out = acc.drain_sorted();
            }
        });
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let nnz: usize = rows.iter().map(|(c, _)| c.len()).sum();
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for (cols, vals) in rows {
            col_indices.extend_from_slice(&cols);
            values.extend_from_slice(&vals);
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix::from_parts(self.n_rows, rhs.n_cols, row_offsets, col_indices, values))
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0f64; self.nnz()];
        for (r, c, v) in self.iter() {
            let slot = next[c];
            next[c] += 1;
            col_indices[slot] = r;
            values[slot] = v;
        }
        SparseMatrix::from_parts(self.n_cols, self.n_rows, counts, col_indices, values)
    }

    /// D̂^{-1/2} (A + I) D̂^{-1/2} where D̂ is the degree (row-sum) of A + I.
    pub fn sym_normalize(&self) -> Result<SparseMatrix> {
        if self.n_rows != self.n_cols {
            return Err(Error::Shape(format!(
                "sym_normalize requires a square matrix, got {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        let n = self.n_rows;
        let mut scale = vec![0.0f64; n];
        for i in 0..n {
            let (_, vals) = self.row(i);
            let deg: f64 = 1.0 + vals.iter().sum::<f64>();
            if deg <= 0.0 {
                return Err(Error::Numeric(format!(
                    "non-positive degree {deg} at node {i} during normalization"
                )));
            }
            scale[i] = deg.powf(-0.5);
        }
        // Same structure plus the diagonal, merged in sorted position.
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0usize);
        let mut col_indices = Vec::with_capacity(self.nnz() + n);
        let mut values = Vec::with_capacity(self.nnz() + n);
        for i in 0..n {
            let (cols, vals) = self.row(i);
            let mut wrote_diag = false;
            for (&c, &v) in cols.iter().zip(vals) {
                if !wrote_diag && c >= i {
                    let diag = if c == i { v + 1.0 } else { 1.0 };
                    col_indices.push(i);
                    values.push(diag * scale[i] * scale[i]);
                    wrote_diag = true;
                    if c == i {
                        continue;
                    }
                }
                col_indices.push(c);
                values.push(v * scale[i] * scale[c]);
            }
            if !wrote_diag {
                col_indices.push(i);
                values.push(scale[i] * scale[i]);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseMatrix::from_parts(n, n, row_offsets, col_indices, values))
    }

    /// Sparse · dense product; parallel over output rows.
    pub fn spmm_dense(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if self.n_cols != x.nrows() {
            return Err(Error::Shape(format!(
                "spmm_dense: {}x{} * {}x{}",
                self.n_rows,
                self.n_cols,
                x.nrows(),
                x.ncols()
            )));
        }
        let d = x.ncols();
        let xs = x.as_slice().expect("spmm_dense expects row-major input");
        let mut out = Array2::<f64>::zeros((self.n_rows, d));
        {
            let out_slice = out.as_slice_mut().expect("fresh array is row-major");
            let mut rows: Vec<&mut [f64]> = out_slice.chunks_mut(d.max(1)).collect();
            if d > 0 {
                chunked_mut(&mut rows, |start, chunk| {
                    for (k, out_row) in chunk.iter_mut().enumerate() {
                        let i = start + k;
                        let (cols, vals) = self.row(i);
                        for (&c, &v) in cols.iter().zip(vals) {
                            axpy(out_row, v, &xs[c * d..(c + 1) * d]);
                        }
                    }
                });
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::<f64>::zeros((self.n_rows, self.n_cols));
        for (r, c, v) in self.iter() {
            out[[r, c]] = v;
        }
        out
    }

    /// Same support, all stored values replaced by 1.0.
    /// Binary union with the own transpose: the undirected closure of a
    /// square adjacency, 1 wherever either direction is stored.
    pub fn symmetric_union(&self) -> Result<SparseMatrix> {
        if self.n_rows != self.n_cols {
            return Err(Error::Shape(format!(
                "symmetric union needs a square matrix, got {}x{}",
                self.n_rows, self.n_cols
            )));
        }
        let t = self.transpose();
        Ok(SparseMatrix::from_triplets(
            self.n_rows,
            self.n_cols,
            self.iter().chain(t.iter()).map(|(r, c, _)| (r, c, 1.0)),
        )?
        .binarize())
    }

    pub fn binarize(&self) -> SparseMatrix {
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
            values: vec![1.0; self.values.len()],
        }
    }

    /// Multiplies every stored value in row r by `factors[r]`.
    pub fn scale_rows(&self, factors: &[f64]) -> Result<SparseMatrix> {
        if factors.len() != self.n_rows {
            return Err(Error::Shape(format!(
                "scale_rows: {} factors for {} rows",
                factors.len(),
                self.n_rows
            )));
        }
        let mut out = self.clone();
        for r in 0..self.n_rows {
            let (lo, hi) = (out.row_offsets[r], out.row_offsets[r + 1]);
            for v in &mut out.values[lo..hi] {
                *v *= factors[r];
            }
        }
        Ok(out)
    }
}

/// Dense scatter accumulator with generation marks, reused across rows
/// without clearing.
struct Scatter {
    vals: Vec<f64>,
    mark: Vec<u32>,
    gen: u32,
    touched: Vec<usize>,
}

impl Scatter {
    fn new(width: usize) -> Self {
        Scatter { vals: vec![0.0; width], mark: vec![0; width], gen: 1, touched: Vec::new() }
    }

    #[inline]
    fn add(&mut self, col: usize, v: f64) {
        if self.mark[col] != self.gen {
            self.mark[col] = self.gen;
            self.vals[col] = v;
            self.touched.push(col);
        } else {
            self.vals[col] += v;
        }
    }

    fn drain_sorted(&mut self) -> (Vec<usize>, Vec<f64>) {
        self.touched.sort_unstable();
        let mut cols = Vec::with_capacity(self.touched.len());
        let mut vals = Vec::with_capacity(self.touched.len());
        for &c in &self.touched {
            let v = self.vals[c];
            if v != 0.0 {
                cols.push(c);
                vals.push(v);
            }
        }
        self.touched.clear();
        self.gen = self.gen.wrapping_add(1);
        if self.gen == 0 {
            // mark vector is stale after wrap; reset
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.gen = 1;
        }
        (cols, vals)
    }
}
