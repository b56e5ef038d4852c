//! Linear graph-convolution encoder: lift a bipartite user–item graph to a
//! single symmetric adjacency, normalize it with self-loops, and propagate an
//! embedding table a fixed number of layers.
//!
//! There are no trainable weights and no per-layer combination, so the whole
//! encoder is the fixed linear map E ↦ Nˡ·E with N symmetric — which makes
//! backpropagation through it the same map applied to the incoming gradient.

use crate::error::Error;
use crate::sparse::SparseMatrix;
use crate::Result;
use ndarray::Array2;

/// Lifts an m×n bipartite adjacency B into the symmetric block matrix
/// [[0, B], [Bᵀ, 0]] of size (m+n)², users first.
pub fn lift_bipartite(b: &SparseMatrix) -> SparseMatrix {
    let (m, n) = (b.n_rows(), b.n_cols());
    let bt = b.transpose();
    let mut row_offsets = Vec::with_capacity(m + n + 1);
    let mut col_indices = Vec::with_capacity(2 * b.nnz());
    let mut values = Vec::with_capacity(2 * b.nnz());
    row_offsets.push(0);
    for u in 0..m {
        let (cols, vals) = b.row(u);
        col_indices.extend(cols.iter().map(|&c| c + m));
        values.extend_from_slice(vals);
        row_offsets.push(col_indices.len());
    }
    for v in 0..n {
        let (cols, vals) = bt.row(v);
        col_indices.extend_from_slice(cols);
        values.extend_from_slice(vals);
        row_offsets.push(col_indices.len());
    }
    SparseMatrix::from_parts(m + n, m + n, row_offsets, col_indices, values)
}

/// Encoder variants behind the pluggable seam. With no per-layer weights the
/// light-convolution and plain GCN propagation rules coincide; both are the
/// normalized operator applied `layers` times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncoderKind {
    LightConv,
    PlainGcn,
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "light" => Ok(EncoderKind::LightConv),
            "gcn" => Ok(EncoderKind::PlainGcn),
            other => Err(Error::Config(format!("unknown encoder `{other}` (expected light|gcn)"))),
        }
    }
}

/// Precomputed propagation operator N = D̂^(-1/2)(A+I)D̂^(-1/2) for one
/// bipartite graph, applied `layers` times per propagation.
#[derive(Clone, Debug)]
pub struct Propagator {
    norm: SparseMatrix,
    layers: usize,
}

impl Propagator {
    pub fn new(bipartite: &SparseMatrix, layers: usize, _kind: EncoderKind) -> Result<Propagator> {
        if layers == 0 {
            return Err(Error::Config("encoder needs at least one layer".into()));
        }
        let norm = lift_bipartite(bipartite).sym_normalize()?;
        Ok(Propagator { norm, layers })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn n_nodes(&self) -> usize {
        self.norm.n_rows()
    }

    /// The normalized operator itself.
    pub fn operator(&self) -> &SparseMatrix {
        &self.norm
    }

    /// Z = Nˡ·E.
    pub fn propagate(&self, e: &Array2<f64>) -> Result<Array2<f64>> {
        let mut z = self.norm.spmm_dense(e)?;
        for _ in 1..self.layers {
            z = self.norm.spmm_dense(&z)?;
        }
        Ok(z)
    }

    /// Pulls a gradient with respect to the output back to the embedding
    /// table: N is symmetric, so the adjoint of Nˡ is Nˡ again.
    pub fn backprop(&self, d_z: &Array2<f64>) -> Result<Array2<f64>> {
        self.propagate(d_z)
    }
}

/// One-shot convenience: Nˡ·E over the given bipartite graph.
pub fn propagate(e: &Array2<f64>, bipartite: &SparseMatrix, layers: usize) -> Result<Array2<f64>> {
    Propagator::new(bipartite, layers, EncoderKind::LightConv)?.propagate(e)
}
