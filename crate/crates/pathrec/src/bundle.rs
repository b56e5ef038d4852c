//! Versioned binary artifacts: the dataset bundle written by ingestion and
//! the training checkpoint.
//!
//! Layout: 4-byte magic, little-endian u32 format version, u32 section
//! count, then length-prefixed sections in a fixed order. Integers are
//! little-endian u64, floats are f64 bit patterns, strings are
//! length-prefixed UTF-8. Every read is bounds-checked and every structural
//! invariant is re-validated, so a corrupt file fails loudly instead of
//! producing a mangled graph.

use crate::error::Error;
use crate::hetgraph::{HeteroGraph, InteractionSplit, NodeType, Relation};
use crate::sparse::SparseMatrix;
use crate::trainer::ModelParams;
use crate::Result;
use ndarray::{Array1, Array2};
use std::fs;
use std::path::Path;

const BUNDLE_MAGIC: &[u8; 4] = b"PRGB";
const CHECKPOINT_MAGIC: &[u8; 4] = b"PRCK";
const VERSION: u32 = 1;

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn usizes(&mut self, xs: &[usize]) {
        self.u64(xs.len() as u64);
        for &x in xs {
            self.u64(x as u64);
        }
    }

    fn f64s(&mut self, xs: &[f64]) {
        self.u64(xs.len() as u64);
        for &x in xs {
            self.f64(x);
        }
    }

    fn pairs(&mut self, ps: &[(usize, usize)]) {
        self.u64(ps.len() as u64);
        for &(a, b) in ps {
            self.u64(a as u64);
            self.u64(b as u64);
        }
    }

    fn csr(&mut self, m: &SparseMatrix) {
        self.u64(m.n_rows() as u64);
        self.u64(m.n_cols() as u64);
        self.usizes(m.row_offsets());
        self.usizes(m.col_indices());
        self.f64s(m.values());
    }

    fn section(&mut self, payload: Writer) {
        self.u64(payload.buf.len() as u64);
        self.buf.extend_from_slice(&payload.buf);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("sized")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("sized")))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("sized")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("sized")))
    }

    fn len(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::Format(format!("length {v} overflows usize")))
    }

    fn str(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Format("invalid UTF-8 string".into()))
    }

    fn usizes(&mut self) -> Result<Vec<usize>> {
        let n = self.len()?;
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| {
            Error::Format(format!("element count {n} too large"))
        })?)?;
        bytes
            .chunks_exact(8)
            .map(|c| {
                let v = u64::from_le_bytes(c.try_into().expect("sized"));
                usize::try_from(v)
                    .map_err(|_| Error::Format(format!("index {v} overflows usize")))
            })
            .collect()
    }

    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| {
            Error::Format(format!("element count {n} too large"))
        })?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("sized")))
            .collect())
    }

    fn pairs(&mut self) -> Result<Vec<(usize, usize)>> {
        let n = self.len()?;
        let mut out = Vec::with_capacity(n.min(self.buf.len() / 16));
        for _ in 0..n {
            let a = self.u64()?;
            let b = self.u64()?;
            out.push((
                usize::try_from(a).map_err(|_| Error::Format("pair overflows usize".into()))?,
                usize::try_from(b).map_err(|_| Error::Format("pair overflows usize".into()))?,
            ));
        }
        Ok(out)
    }

    fn csr(&mut self) -> Result<SparseMatrix> {
        let n_rows = self.len()?;
        let n_cols = self.len()?;
        let offsets = self.usizes()?;
        let cols = self.usizes()?;
        let values = self.f64s()?;
        SparseMatrix::from_csr_checked(n_rows, n_cols, offsets, cols, values)
    }

    fn section(&mut self) -> Result<Reader<'a>> {
        let n = self.len()?;
        Ok(Reader::new(self.take(n)?))
    }

    fn done(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} unexpected trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn write_container(path: &Path, magic: &[u8; 4], sections: Vec<Writer>) -> Result<()> {
    let mut w = Writer::default();
    w.buf.extend_from_slice(magic);
    w.u32(VERSION);
    w.u32(sections.len() as u32);
    for s in sections {
        w.section(s);
    }
    fs::write(path, &w.buf).map_err(|e| Error::io(path, e))
}

fn read_container<'a>(
    bytes: &'a [u8],
    magic: &[u8; 4],
    n_sections: u32,
) -> Result<Vec<Reader<'a>>> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != magic {
        return Err(Error::Format(format!(
            "bad magic; expected {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported format version {version}")));
    }
    let count = r.u32()?;
    if count != n_sections {
        return Err(Error::Format(format!("{count} sections, expected {n_sections}")));
    }
    let mut sections = Vec::with_capacity(count as usize);
    for _ in 0..count {
        sections.push(r.section()?);
    }
    r.done()?;
    Ok(sections)
}

/// Everything ingestion produces: the typed graph, the interaction split,
/// the schema text it was loaded with, and a provenance string recording how
/// it was made.
#[derive(Clone, Debug)]
pub struct DatasetBundle {
    pub graph: HeteroGraph,
    pub split: InteractionSplit,
    pub schema_text: String,
    pub provenance: String,
}

pub fn save_bundle(path: &Path, bundle: &DatasetBundle) -> Result<()> {
    let mut schema = Writer::default();
    schema.str(&bundle.schema_text);

    let mut types = Writer::default();
    types.u64(bundle.graph.node_types.len() as u64);
    for nt in &bundle.graph.node_types {
        types.str(&nt.name);
        types.str(&nt.code);
        types.u64(nt.original_ids.len() as u64);
        for &id in &nt.original_ids {
            types.i64(id);
        }
    }

    let mut relations = Writer::default();
    relations.u64(bundle.graph.relations.len() as u64);
    for rel in &bundle.graph.relations {
        relations.str(&rel.name);
        relations.u64(rel.src as u64);
        relations.u64(rel.dst as u64);
        relations.csr(&rel.matrix);
    }

    let mut meta = Writer::default();
    meta.u64(bundle.graph.user_type as u64);
    meta.u64(bundle.graph.item_type as u64);
    meta.u64(bundle.graph.user_item as u64);

    let mut split = Writer::default();
    split.csr(&bundle.split.train);
    split.pairs(&bundle.split.valid);
    split.pairs(&bundle.split.test);

    let mut provenance = Writer::default();
    provenance.str(&bundle.provenance);

    write_container(path, BUNDLE_MAGIC, vec![schema, types, relations, meta, split, provenance])
}

pub fn load_bundle(path: &Path) -> Result<DatasetBundle> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut sections = read_container(&bytes, BUNDLE_MAGIC, 6).map_err(|e| {
        Error::Format(format!("{}: {e}", path.display()))
    })?;
    let mut provenance_r = sections.pop().expect("six sections");
    let mut split_r = sections.pop().expect("six sections");
    let mut meta_r = sections.pop().expect("six sections");
    let mut relations_r = sections.pop().expect("six sections");
    let mut types_r = sections.pop().expect("six sections");
    let mut schema_r = sections.pop().expect("six sections");

    let schema_text = schema_r.str()?;
    schema_r.done()?;

    let n_types = types_r.len()?;
    let mut node_types = Vec::with_capacity(n_types.min(1024));
    for _ in 0..n_types {
        let name = types_r.str()?;
        let code = types_r.str()?;
        let n = types_r.len()?;
        let mut original_ids = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            original_ids.push(types_r.i64()?);
        }
        node_types.push(NodeType { name, code, original_ids });
    }
    types_r.done()?;

    let n_rel = relations_r.len()?;
    let mut relations = Vec::with_capacity(n_rel.min(1024));
    for _ in 0..n_rel {
        let name = relations_r.str()?;
        let src = relations_r.len()?;
        let dst = relations_r.len()?;
        let matrix = relations_r.csr()?;
        if src >= node_types.len() || dst >= node_types.len() {
            return Err(Error::Format(format!("relation '{name}' references unknown types")));
        }
        if matrix.n_rows() != node_types[src].count() || matrix.n_cols() != node_types[dst].count()
        {
            return Err(Error::Format(format!(
                "relation '{name}' is {}×{} but its types have {}/{} nodes",
                matrix.n_rows(),
                matrix.n_cols(),
                node_types[src].count(),
                node_types[dst].count()
            )));
        }
        relations.push(Relation { name, src, dst, matrix });
    }
    relations_r.done()?;

    let user_type = meta_r.len()?;
    let item_type = meta_r.len()?;
    let user_item = meta_r.len()?;
    meta_r.done()?;
    if user_type >= node_types.len() || item_type >= node_types.len() {
        return Err(Error::Format("user/item type out of range".into()));
    }
    if user_item >= relations.len()
        || relations[user_item].src != user_type
        || relations[user_item].dst != item_type
    {
        return Err(Error::Format("user–item relation does not connect user to item".into()));
    }

    let train = split_r.csr()?;
    let valid = split_r.pairs()?;
    let test = split_r.pairs()?;
    split_r.done()?;
    let graph = HeteroGraph { node_types, relations, user_type, item_type, user_item };
    let (m, n) = (graph.n_users(), graph.n_items());
    if train.n_rows() != m || train.n_cols() != n {
        return Err(Error::Format(format!(
            "train split is {}×{} but the graph has {m} users × {n} items",
            train.n_rows(),
            train.n_cols()
        )));
    }
    if valid.iter().chain(&test).any(|&(u, v)| u >= m || v >= n) {
        return Err(Error::Format("held-out pair out of range".into()));
    }

    let provenance = provenance_r.str()?;
    provenance_r.done()?;

    Ok(DatasetBundle {
        graph,
        split: InteractionSplit { train, valid, test },
        schema_text,
        provenance,
    })
}

/// A training checkpoint: the resolved configuration echo, progress
/// counters, and every parameter tensor.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    /// Flat key-value echo of the configuration the run used.
    pub config: Vec<(String, String)>,
    /// Epochs completed so far; a resumed run continues numbering here.
    pub epochs_done: u64,
    pub n_users: u64,
    pub n_items: u64,
    pub best_epoch: u64,
    pub best_recall: f64,
    pub params: ModelParams,
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut config = Writer::default();
    config.u64(ckpt.config.len() as u64);
    for (k, v) in &ckpt.config {
        config.str(k);
        config.str(v);
    }

    let mut state = Writer::default();
    state.u64(ckpt.epochs_done);
    state.u64(ckpt.n_users);
    state.u64(ckpt.n_items);
    state.u64(ckpt.best_epoch);
    state.f64(ckpt.best_recall);

    let p = &ckpt.params;
    let d = p.dim();
    let tensor_list: [(&str, usize, usize, Vec<f64>); 6] = [
        ("e_shared", p.e_shared.nrows(), d, p.e_shared.iter().copied().collect()),
        ("e_task", p.e_task.nrows(), d, p.e_task.iter().copied().collect()),
        ("w_rec", p.w_rec.nrows(), d, p.w_rec.iter().copied().collect()),
        ("w_pre", p.w_pre.nrows(), d, p.w_pre.iter().copied().collect()),
        ("h_rec", 1, d, p.h_rec.to_vec()),
        ("h_pre", 1, d, p.h_pre.to_vec()),
    ];
    let mut tensors = Writer::default();
    tensors.u64(tensor_list.len() as u64);
    for (name, rows, cols, data) in tensor_list {
        tensors.str(name);
        tensors.u64(rows as u64);
        tensors.u64(cols as u64);
        tensors.f64s(&data);
    }

    write_container(path, CHECKPOINT_MAGIC, vec![config, state, tensors])
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut sections = read_container(&bytes, CHECKPOINT_MAGIC, 3).map_err(|e| {
        Error::Format(format!("{}: {e}", path.display()))
    })?;
    let mut tensors_r = sections.pop().expect("three sections");
    let mut state_r = sections.pop().expect("three sections");
    let mut config_r = sections.pop().expect("three sections");

    let n_kv = config_r.len()?;
    let mut config = Vec::with_capacity(n_kv.min(1024));
    for _ in 0..n_kv {
        let k = config_r.str()?;
        let v = config_r.str()?;
        config.push((k, v));
    }
    config_r.done()?;

    let epochs_done = state_r.u64()?;
    let n_users = state_r.u64()?;
    let n_items = state_r.u64()?;
    let best_epoch = state_r.u64()?;
    let best_recall = state_r.f64()?;
    state_r.done()?;

    let n_tensors = tensors_r.len()?;
    let mut named: Vec<(String, Array2<f64>)> = Vec::with_capacity(n_tensors.min(16));
    for _ in 0..n_tensors {
        let name = tensors_r.str()?;
        let rows = tensors_r.len()?;
        let cols = tensors_r.len()?;
        let data = tensors_r.f64s()?;
        if data.len() != rows.checked_mul(cols).unwrap_or(usize::MAX) {
            return Err(Error::Format(format!(
                "tensor '{name}' declares {rows}×{cols} but holds {} values",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format(format!("tensor '{name}' holds non-finite values")));
        }
        named.push((
            name,
            Array2::from_shape_vec((rows, cols), data).expect("validated shape"),
        ));
    }
    tensors_r.done()?;

    let mut grab = |want: &str| -> Result<Array2<f64>> {
        let at = named
            .iter()
            .position(|(n, _)| n == want)
            .ok_or_else(|| Error::Format(format!("checkpoint is missing tensor '{want}'")))?;
        Ok(named.swap_remove(at).1)
    };
    let e_shared = grab("e_shared")?;
    let e_task = grab("e_task")?;
    let w_rec = grab("w_rec")?;
    let w_pre = grab("w_pre")?;
    let h_rec = grab("h_rec")?;
    let h_pre = grab("h_pre")?;
    if !named.is_empty() {
        return Err(Error::Format(format!("unexpected tensor '{}'", named[0].0)));
    }

    let nodes = (n_users + n_items) as usize;
    let d = e_shared.ncols();
    if e_shared.nrows() != nodes || e_task.dim() != (nodes, d) {
        return Err(Error::Format(format!(
            "embedding tables do not cover {nodes} nodes at width {d}"
        )));
    }
    if w_rec.ncols() != d || w_pre.ncols() != d || h_rec.dim() != (1, d) || h_pre.dim() != (1, d) {
        return Err(Error::Format("gate or head width disagrees with the embeddings".into()));
    }
    let to_vector = |a: Array2<f64>| Array1::from_iter(a.into_iter());

    Ok(Checkpoint {
        config,
        epochs_done,
        n_users,
        n_items,
        best_epoch,
        best_recall,
        params: ModelParams {
            e_shared,
            e_task,
            w_rec,
            w_pre,
            h_rec: to_vector(h_rec),
            h_pre: to_vector(h_pre),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::{load_relations, split_interactions, Schema};
    use crate::trainer::{init_params, TrainConfig};

    fn toy_bundle() -> DatasetBundle {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy");
        let schema_text = std::fs::read_to_string(dir.join("schema.txt")).unwrap();
        let schema = Schema::parse(&schema_text, "schema.txt").unwrap();
        let graph = load_relations(&dir, &schema).unwrap();
        let split = split_interactions(&graph, 42);
        DatasetBundle { graph, split, schema_text, provenance: "toy seed=42".into() }
    }

    #[test]
    fn bundle_roundtrip_preserves_everything() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("toy.bundle");
        let b = toy_bundle();
        save_bundle(&path, &b).unwrap();
        let l = load_bundle(&path).unwrap();
        assert_eq!(l.schema_text, b.schema_text);
        assert_eq!(l.provenance, b.provenance);
        assert_eq!(l.graph.node_types.len(), b.graph.node_types.len());
        for (a, c) in l.graph.node_types.iter().zip(&b.graph.node_types) {
            assert_eq!(a.name, c.name);
            assert_eq!(a.code, c.code);
            assert_eq!(a.original_ids, c.original_ids);
        }
        for (a, c) in l.graph.relations.iter().zip(&b.graph.relations) {
            assert_eq!(a.name, c.name);
            assert_eq!((a.src, a.dst), (c.src, c.dst));
            assert_eq!(a.matrix, c.matrix);
        }
        assert_eq!(l.graph.user_type, b.graph.user_type);
        assert_eq!(l.graph.item_type, b.graph.item_type);
        assert_eq!(l.split.train, b.split.train);
        assert_eq!(l.split.valid, b.split.valid);
        assert_eq!(l.split.test, b.split.test);
    }

    #[test]
    fn bundle_bytes_are_deterministic() {
        let tmp = tempfile::tempdir().unwrap();
        let (p1, p2) = (tmp.path().join("a.bundle"), tmp.path().join("b.bundle"));
        let b = toy_bundle();
        save_bundle(&p1, &b).unwrap();
        save_bundle(&p2, &b).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn bundle_rejects_corruption() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("toy.bundle");
        save_bundle(&path, &toy_bundle()).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let truncated = tmp.path().join("trunc.bundle");
        std::fs::write(&truncated, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_bundle(&truncated), Err(Error::Format(_))));

        let magic = tmp.path().join("magic.bundle");
        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&magic, &bad).unwrap();
        assert!(matches!(load_bundle(&magic), Err(Error::Format(_))));

        let version = tmp.path().join("version.bundle");
        let mut bad = bytes.clone();
        bad[4] = 0xFF;
        std::fs::write(&version, &bad).unwrap();
        assert!(matches!(load_bundle(&version), Err(Error::Format(_))));

        let trailing = tmp.path().join("trailing.bundle");
        let mut bad = bytes;
        bad.push(0);
        std::fs::write(&trailing, &bad).unwrap();
        assert!(matches!(load_bundle(&trailing), Err(Error::Format(_))));
    }

    #[test]
    fn bundle_missing_file_is_io_error() {
        assert!(matches!(
            load_bundle(Path::new("/nonexistent/x.bundle")),
            Err(Error::Io { .. })
        ));
    }

    fn small_checkpoint() -> Checkpoint {
        let cfg = TrainConfig { dim: 8, seed: 3, ..TrainConfig::default() };
        let params = init_params(&cfg, 10).unwrap();
        Checkpoint {
            config: vec![
                ("dim".into(), "8".into()),
                ("meta_path".into(), "U-U-M".into()),
            ],
            epochs_done: 17,
            n_users: 6,
            n_items: 4,
            best_epoch: 12,
            best_recall: 0.325,
            params,
        }
    }

    #[test]
    fn checkpoint_roundtrip_is_bitwise() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("model.ckpt");
        let c = small_checkpoint();
        save_checkpoint(&path, &c).unwrap();
        let l = load_checkpoint(&path).unwrap();
        assert_eq!(l.config, c.config);
        assert_eq!(l.epochs_done, 17);
        assert_eq!((l.n_users, l.n_items), (6, 4));
        assert_eq!(l.best_epoch, 12);
        assert_eq!(l.best_recall, 0.325);
        assert_eq!(l.params.e_shared, c.params.e_shared);
        assert_eq!(l.params.e_task, c.params.e_task);
        assert_eq!(l.params.w_rec, c.params.w_rec);
        assert_eq!(l.params.w_pre, c.params.w_pre);
        assert_eq!(l.params.h_rec, c.params.h_rec);
        assert_eq!(l.params.h_pre, c.params.h_pre);
    }

    #[test]
    fn checkpoint_rejects_node_count_mismatch() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("model.ckpt");
        let mut c = small_checkpoint();
        c.n_users = 99;
        save_checkpoint(&path, &c).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "got {err}");
    }

    #[test]
    fn checkpoint_rejects_wrong_magic_kind() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("cross.bin");
        save_bundle(&path, &toy_bundle()).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Format(_))));
    }
}
