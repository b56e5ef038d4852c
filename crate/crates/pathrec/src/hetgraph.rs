//! Typed heterogeneous graph: schema-driven relation loading, interaction
//! filtering, and train/valid/test splitting.
//!
//! A dataset directory holds one text file per relation (one edge per line,
//! two whitespace-separated integer ids, optional weight column that is
//! binarized) plus a schema file declaring node types, relations, and which
//! relation is the user–item interaction.

use crate::error::Error;
use crate::rng::{derive, Stream};
use crate::sparse::SparseMatrix;
use crate::Result;
use rand::seq::SliceRandom;
use std::collections::{BTreeSet, HashMap};
use std::path::Path;

/// Parsed schema file.
#[derive(Clone, Debug)]
pub struct Schema {
    pub node_types: Vec<NodeTypeDecl>,
    pub relations: Vec<RelationDecl>,
    /// Name of the relation holding user–item interactions.
    pub user_item: String,
}

#[derive(Clone, Debug)]
pub struct NodeTypeDecl {
    pub name: String,
    /// Short code used in meta-path strings, e.g. "U".
    pub code: String,
}

#[derive(Clone, Debug)]
pub struct RelationDecl {
    pub name: String,
    pub src: String,
    pub dst: String,
    pub file: String,
}

impl Schema {
    /// Parses the line-oriented schema format:
    ///
    /// ```text
    /// node user U
    /// node artist A
    /// relation user_artist user artist user_artist.dat
    /// user_item user_artist
    /// ```
    pub fn parse(text: &str, origin: &str) -> Result<Schema> {
        let mut node_types: Vec<NodeTypeDecl> = Vec::new();
        let mut relations: Vec<RelationDecl> = Vec::new();
        let mut user_item: Option<String> = None;
        let err = |line: usize, msg: String| Error::Parse {
            file: origin.to_string(),
            line,
            msg,
        };
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0] {
                "node" => {
                    if tokens.len() != 3 {
                        return Err(err(line_no, "expected: node <name> <code>".into()));
                    }
                    node_types.push(NodeTypeDecl {
                        name: tokens[1].to_string(),
                        code: tokens[2].to_string(),
                    });
                }
                "relation" => {
                    if tokens.len() != 5 {
                        return Err(err(
                            line_no,
                            "expected: relation <name> <src_type> <dst_type> <file>".into(),
                        ));
                    }
                    relations.push(RelationDecl {
                        name: tokens[1].to_string(),
                        src: tokens[2].to_string(),
                        dst: tokens[3].to_string(),
                        file: tokens[4].to_string(),
                    });
                }
                "user_item" => {
                    if tokens.len() != 2 {
                        return Err(err(line_no, "expected: user_item <relation_name>".into()));
                    }
                    user_item = Some(tokens[1].to_string());
                }
                other => {
                    return Err(err(line_no, format!("unknown directive `{other}`")));
                }
            }
        }
        let schema = Schema {
            node_types,
            relations,
            user_item: user_item.ok_or_else(|| Error::Schema(format!(
                "{origin}: missing user_item declaration"
            )))?,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Schema> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::parse(&text, &path.display().to_string())
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for nt in &self.node_types {
            if !seen.insert(nt.name.as_str()) {
                return Err(Error::Schema(format!("duplicate node type `{}`", nt.name)));
            }
        }
        let mut codes = BTreeSet::new();
        for nt in &self.node_types {
            if !codes.insert(nt.code.as_str()) {
                return Err(Error::Schema(format!("duplicate node code `{}`", nt.code)));
            }
        }
        let mut rel_names = BTreeSet::new();
        for r in &self.relations {
            if !rel_names.insert(r.name.as_str()) {
                return Err(Error::Schema(format!("duplicate relation `{}`", r.name)));
            }
            for t in [&r.src, &r.dst] {
                if !self.node_types.iter().any(|nt| &nt.name == t) {
                    return Err(Error::Schema(format!(
                        "relation `{}` references unknown node type `{t}`",
                        r.name
                    )));
                }
            }
        }
        let ui = self
            .relations
            .iter()
            .find(|r| r.name == self.user_item)
            .ok_or_else(|| {
                Error::Schema(format!("user_item names unknown relation `{}`", self.user_item))
            })?;
        if ui.src == ui.dst {
            return Err(Error::Schema(format!(
                "user_item relation `{}` must join two distinct node types",
                ui.name
            )));
        }
        // Def. 1 heterogeneity: node type count + relation type count > 2.
        if self.node_types.len() + self.relations.len() <= 2 {
            return Err(Error::Schema(
                "graph is not heterogeneous: need |node types| + |relation types| > 2".into(),
            ));
        }
        Ok(())
    }
}

/// One node type with its dense index space; `original_ids[i]` is the raw id
/// from the data files mapped to index `i`.
#[derive(Clone, Debug)]
pub struct NodeType {
    pub name: String,
    pub code: String,
    pub original_ids: Vec<i64>,
}

impl NodeType {
    pub fn count(&self) -> usize {
        self.original_ids.len()
    }
}

#[derive(Clone, Debug)]
pub struct Relation {
    pub name: String,
    /// Index into `HeteroGraph::node_types`.
    pub src: usize,
    pub dst: usize,
    pub matrix: SparseMatrix,
}

/// Heterogeneous graph: typed node sets plus one binary adjacency per relation.
#[derive(Clone, Debug)]
pub struct HeteroGraph {
    pub node_types: Vec<NodeType>,
    pub relations: Vec<Relation>,
    pub user_type: usize,
    pub item_type: usize,
    /// Index of the user–item relation in `relations`.
    pub user_item: usize,
}

impl HeteroGraph {
    pub fn n_users(&self) -> usize {
        self.node_types[self.user_type].count()
    }

    pub fn n_items(&self) -> usize {
        self.node_types[self.item_type].count()
    }

    /// The user–item interaction matrix (m×n).
    pub fn interactions(&self) -> &SparseMatrix {
        &self.relations[self.user_item].matrix
    }

    pub fn node_type_by_code(&self, code: &str) -> Option<usize> {
        self.node_types.iter().position(|nt| nt.code == code)
    }

    /// Clone with the user–item matrix replaced (e.g. by the train split, so
    /// meta-path legs over interactions never see held-out pairs).
    pub fn with_interactions(&self, m: SparseMatrix) -> Result<HeteroGraph> {
        let cur = self.interactions();
        if m.n_rows() != cur.n_rows() || m.n_cols() != cur.n_cols() {
            return Err(Error::Shape(format!(
                "replacement interactions are {}x{}, expected {}x{}",
                m.n_rows(),
                m.n_cols(),
                cur.n_rows(),
                cur.n_cols()
            )));
        }
        let mut g = self.clone();
        g.relations[self.user_item].matrix = m;
        Ok(g)
    }
}

fn parse_edge_file(path: &Path) -> Result<Vec<(i64, i64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let a = it.next();
        let b = it.next();
        let (a, b) = match (a, b) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Parse {
                    file,
                    line: i + 1,
                    msg: "expected at least two columns".into(),
                })
            }
        };
        let parse = |tok: &str| -> Result<i64> {
            tok.parse::<i64>().map_err(|_| Error::Parse {
                file: path.display().to_string(),
                line: i + 1,
                msg: format!("invalid id `{tok}`"),
            })
        };
        let (src, dst) = (parse(a)?, parse(b)?);
        // Optional weight column; value is binarized (presence only), but it
        // must at least be numeric.
        if let Some(w) = it.next() {
            if w.parse::<f64>().is_err() {
                return Err(Error::Parse {
                    file,
                    line: i + 1,
                    msg: format!("invalid weight `{w}`"),
                });
            }
        }
        pairs.push((src, dst));
    }
    Ok(pairs)
}

/// Loads every relation file named by the schema, re-indexing raw ids densely
/// per node type (union over all relations touching the type).
pub fn load_relations(dir: &Path, schema: &Schema) -> Result<HeteroGraph> {
    let type_index: HashMap<&str, usize> = schema
        .node_types
        .iter()
        .enumerate()
        .map(|(i, nt)| (nt.name.as_str(), i))
        .collect();

    let mut raw: Vec<(usize, usize, Vec<(i64, i64)>)> = Vec::new();
    let mut universes: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); schema.node_types.len()];
    for decl in &schema.relations {
        let src = type_index[decl.src.as_str()];
        let dst = type_index[decl.dst.as_str()];
        let pairs = parse_edge_file(&dir.join(&decl.file))?;
        for &(a, b) in &pairs {
            universes[src].insert(a);
            universes[dst].insert(b);
        }
        raw.push((src, dst, pairs));
    }

    let node_types: Vec<NodeType> = schema
        .node_types
        .iter()
        .zip(universes)
        .map(|(decl, ids)| NodeType {
            name: decl.name.clone(),
            code: decl.code.clone(),
            original_ids: ids.into_iter().collect(),
        })
        .collect();
    let id_maps: Vec<HashMap<i64, usize>> = node_types
        .iter()
        .map(|nt| nt.original_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect())
        .collect();

    let mut relations = Vec::new();
    for (decl, (src, dst, pairs)) in schema.relations.iter().zip(raw) {
        let mut edges: Vec<(usize, usize)> =
            pairs.into_iter().map(|(a, b)| (id_maps[src][&a], id_maps[dst][&b])).collect();
        edges.sort_unstable();
        edges.dedup();
        let matrix = SparseMatrix::from_triplets(
            node_types[src].count(),
            node_types[dst].count(),
            edges.into_iter().map(|(r, c)| (r, c, 1.0)),
        )?;
        relations.push(Relation { name: decl.name.clone(), src, dst, matrix });
    }

    let user_item = schema.relations.iter().position(|r| r.name == schema.user_item).unwrap();
    let (user_type, item_type) = (relations[user_item].src, relations[user_item].dst);
    Ok(HeteroGraph { node_types, relations, user_type, item_type, user_item })
}

/// Keeps users and items with at least `k` interactions. A single pass
/// computes degrees once and drops below-threshold nodes; with `iterate` the
/// pass repeats until a fixed point (a k-core of the bipartite graph), which
/// guarantees the degree bound on the surviving graph.
pub fn filter_min_interactions(g: &HeteroGraph, k: usize, iterate: bool) -> Result<HeteroGraph> {
    let ui = g.interactions();
    let (m, n) = (ui.n_rows(), ui.n_cols());
    let mut keep_u = vec![true; m];
    let mut keep_i = vec![true; n];
    loop {
        let mut deg_u = vec![0usize; m];
        let mut deg_i = vec![0usize; n];
        for (u, v, _) in ui.iter() {
            if keep_u[u] && keep_i[v] {
                deg_u[u] += 1;
                deg_i[v] += 1;
            }
        }
        let mut changed = false;
        for u in 0..m {
            if keep_u[u] && deg_u[u] < k {
                keep_u[u] = false;
                changed = true;
            }
        }
        for v in 0..n {
            if keep_i[v] && deg_i[v] < k {
                keep_i[v] = false;
                changed = true;
            }
        }
        if !iterate || !changed {
            break;
        }
    }
    if !keep_u.iter().any(|&b| b) || !keep_i.iter().any(|&b| b) {
        return Err(Error::Empty(format!(
            "filtering at k={k} removed every user or every item"
        )));
    }

    // Old→new index maps for the two filtered types; identity elsewhere.
    let remap = |keep: &[bool]| -> Vec<Option<usize>> {
        let mut next = 0usize;
        keep.iter()
            .map(|&b| {
                if b {
                    next += 1;
                    Some(next - 1)
                } else {
                    None
                }
            })
            .collect()
    };
    let map_u = remap(&keep_u);
    let map_i = remap(&keep_i);
    let map_for = |t: usize| -> Option<&Vec<Option<usize>>> {
        if t == g.user_type {
            Some(&map_u)
        } else if t == g.item_type {
            Some(&map_i)
        } else {
            None
        }
    };

    let mut node_types = g.node_types.clone();
    for (t, map) in [(g.user_type, &map_u), (g.item_type, &map_i)] {
        node_types[t].original_ids = g.node_types[t]
            .original_ids
            .iter()
            .zip(map.iter())
            .filter_map(|(&id, &kept)| kept.map(|_| id))
            .collect();
    }

    let mut relations = Vec::with_capacity(g.relations.len());
    for rel in &g.relations {
        let (src_map, dst_map) = (map_for(rel.src), map_for(rel.dst));
        let n_rows = node_types[rel.src].count();
        let n_cols = node_types[rel.dst].count();
        let mut triplets = Vec::new();
        for (r, c, v) in rel.matrix.iter() {
            let nr = match src_map {
                Some(map) => match map[r] {
                    Some(x) => x,
                    None => continue,
                },
                None => r,
            };
            let nc = match dst_map {
                Some(map) => match map[c] {
                    Some(x) => x,
                    None => continue,
                },
                None => c,
            };
            triplets.push((nr, nc, v));
        }
        relations.push(Relation {
            name: rel.name.clone(),
            src: rel.src,
            dst: rel.dst,
            matrix: SparseMatrix::from_triplets(n_rows, n_cols, triplets)?,
        });
    }

    Ok(HeteroGraph {
        node_types,
        relations,
        user_type: g.user_type,
        item_type: g.item_type,
        user_item: g.user_item,
    })
}

/// Train/valid/test partition of the interaction pairs.
#[derive(Clone, Debug)]
pub struct InteractionSplit {
    /// Binary m×n train matrix.
    pub train: SparseMatrix,
    /// Held-out pairs, sorted; disjoint from train and from each other.
    pub valid: Vec<(usize, usize)>,
    pub test: Vec<(usize, usize)>,
}

impl InteractionSplit {
    pub fn n_users(&self) -> usize {
        self.train.n_rows()
    }

    pub fn n_items(&self) -> usize {
        self.train.n_cols()
    }
}

/// Uniform 80/10/10 split over interaction pairs: |train| = floor(0.8N),
/// |valid| = floor(0.1N), test takes the remainder.
pub fn split_interactions(g: &HeteroGraph, seed: u64) -> InteractionSplit {
    let ui = g.interactions();
    let mut pairs: Vec<(usize, usize)> = ui.iter().map(|(r, c, _)| (r, c)).collect();
    let mut rng = derive(seed, Stream::Split);
    pairs.shuffle(&mut rng);
    let total = pairs.len();
    let n_train = total * 8 / 10;
    let n_valid = total / 10;
    let train = SparseMatrix::from_triplets(
        ui.n_rows(),
        ui.n_cols(),
        pairs[..n_train].iter().map(|&(r, c)| (r, c, 1.0)),
    )
    .expect("indices come from a matrix of the same shape");
    let mut valid: Vec<(usize, usize)> = pairs[n_train..n_train + n_valid].to_vec();
    let mut test: Vec<(usize, usize)> = pairs[n_train + n_valid..].to_vec();
    valid.sort_unstable();
    test.sort_unstable();
    InteractionSplit { train, valid, test }
}

/// The bipartite graph the interaction-channel encoder propagates over: the
/// binary train matrix.
pub fn build_ui_graph(split: &InteractionSplit) -> SparseMatrix {
    split.train.clone()
}

/// Keeps a uniform fraction of the interaction pairs (for reduced-scale runs);
/// every other relation and all node sets stay untouched.
pub fn subsample_interactions(g: &HeteroGraph, fraction: f64, seed: u64) -> Result<HeteroGraph> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("subsample fraction {fraction} outside (0, 1]")));
    }
    let ui = g.interactions();
    if fraction == 1.0 {
        return Ok(g.clone());
    }
    let mut pairs: Vec<(usize, usize)> = ui.iter().map(|(r, c, _)| (r, c)).collect();
    let mut rng = derive(seed, Stream::Subsample);
    pairs.shuffle(&mut rng);
    let keep = ((fraction * pairs.len() as f64).round() as usize).clamp(1, pairs.len());
    let matrix = SparseMatrix::from_triplets(
        ui.n_rows(),
        ui.n_cols(),
        pairs[..keep].iter().map(|&(r, c)| (r, c, 1.0)),
    )?;
    g.with_interactions(matrix)
}

/// Groups pairs by user into per-user sorted item lists.
pub fn group_by_user(pairs: &[(usize, usize)], n_users: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n_users];
    for &(u, v) in pairs {
        out[u].push(v);
    }
    for l in &mut out {
        l.sort_unstable();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_schema() -> Schema {
        Schema::parse(
            "node user U\nnode movie M\n\
             relation friendship user user user_user.dat\n\
             relation watch user movie user_movie.dat\n\
             user_item watch\n",
            "test",
        )
        .unwrap()
    }

    fn toy_graph() -> HeteroGraph {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy");
        load_relations(&dir, &toy_schema()).unwrap()
    }

    #[test]
    fn schema_rejects_unknown_type() {
        let err = Schema::parse(
            "node user U\nnode movie M\nrelation watch user film f.dat\nuser_item watch\n",
            "test",
        );
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn schema_requires_user_item() {
        let err = Schema::parse("node user U\nnode movie M\nrelation w user movie f.dat\n", "test");
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn schema_rejects_homogeneous() {
        // one node type + one relation = 2, not > 2
        let err = Schema::parse(
            "node user U\nrelation friend user user f.dat\nuser_item friend\n",
            "test",
        );
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn schema_rejects_same_endpoint_interaction() {
        let err = Schema::parse(
            "node user U\nnode movie M\nrelation friend user user f.dat\n\
             relation watch user movie w.dat\nuser_item friend\n",
            "test",
        );
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn loads_toy_dataset() {
        let g = toy_graph();
        assert_eq!(g.n_users(), 6);
        assert_eq!(g.n_items(), 3);
        assert_eq!(g.relations[0].matrix.nnz(), 14);
        assert_eq!(g.interactions().nnz(), 9);
        // friendship is stored symmetrically
        let f = &g.relations[0].matrix;
        for (r, c, _) in f.iter() {
            assert_eq!(f.get(c, r), 1.0);
        }
    }

    #[test]
    fn empty_relation_file_is_allowed() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("user_user.dat"), "").unwrap();
        std::fs::write(dir.path().join("user_movie.dat"), "1\t1\n2\t1\n").unwrap();
        let g = load_relations(dir.path(), &toy_schema()).unwrap();
        assert_eq!(g.relations[0].matrix.nnz(), 0);
        assert_eq!(g.interactions().nnz(), 2);
    }

    #[test]
    fn malformed_line_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("user_user.dat"), "1\t2\n").unwrap();
        std::fs::write(dir.path().join("user_movie.dat"), "1\t1\nbroken\n").unwrap();
        match load_relations(dir.path(), &toy_schema()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_edges_stay_binary() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("user_user.dat"), "").unwrap();
        std::fs::write(dir.path().join("user_movie.dat"), "1 1 3\n1 1 5\n2 1\n").unwrap();
        let g = load_relations(dir.path(), &toy_schema()).unwrap();
        assert_eq!(g.interactions().nnz(), 2);
        assert!(g.interactions().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn single_pass_filter_keeps_original_degree_rule() {
        let g = toy_graph();
        let f = filter_min_interactions(&g, 2, false).unwrap();
        // degrees on the original toy graph: u3,u4,u6 have >=2 watches and
        // every movie has >=2 watchers, so one pass keeps 3 users, 3 movies
        assert_eq!(f.n_users(), 3);
        assert_eq!(f.n_items(), 3);
        assert_eq!(f.interactions().nnz(), 6);
        assert_eq!(f.node_types[f.user_type].original_ids, vec![3, 4, 6]);
    }

    #[test]
    fn iterated_filter_reaches_core() {
        let g = toy_graph();
        let f = filter_min_interactions(&g, 2, true).unwrap();
        assert_eq!(f.n_users(), 2);
        assert_eq!(f.n_items(), 2);
        assert_eq!(f.interactions().nnz(), 4);
        assert_eq!(f.node_types[f.user_type].original_ids, vec![4, 6]);
        assert_eq!(f.node_types[f.item_type].original_ids, vec![2, 3]);
        // every surviving node meets the degree bound
        let ui = f.interactions();
        for u in 0..f.n_users() {
            assert!(ui.row_nnz(u) >= 2);
        }
        let t = ui.transpose();
        for v in 0..f.n_items() {
            assert!(t.row_nnz(v) >= 2);
        }
    }

    #[test]
    fn filter_restricts_other_relations() {
        let g = toy_graph();
        let f = filter_min_interactions(&g, 2, true).unwrap();
        // among kept users {4, 6} only the 4–6 friendship survives; edges
        // through the dropped u3 and u5 disappear
        let friends = &f.relations[0].matrix;
        assert_eq!(friends.n_rows(), 2);
        assert_eq!(friends.n_cols(), 2);
        assert_eq!(friends.nnz(), 2);
        assert_eq!(friends.get(0, 1), 1.0);
        assert_eq!(friends.get(1, 0), 1.0);
    }

    #[test]
    fn filter_k0_keeps_everything() {
        let g = toy_graph();
        let f = filter_min_interactions(&g, 0, true).unwrap();
        assert_eq!(f.n_users(), 6);
        assert_eq!(f.interactions().nnz(), 9);
    }

    #[test]
    fn filter_can_empty_the_dataset() {
        let g = toy_graph();
        assert!(matches!(filter_min_interactions(&g, 10, false), Err(Error::Empty(_))));
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let g = toy_graph();
        // 9 interactions → 7 train, 0 valid, 2 test
        let s = split_interactions(&g, 1);
        assert_eq!(s.train.nnz(), 7);
        assert_eq!(s.valid.len(), 0);
        assert_eq!(s.test.len(), 2);
    }

    #[test]
    fn split_is_deterministic_and_leakage_free() {
        let g = toy_graph();
        let a = split_interactions(&g, 7);
        let b = split_interactions(&g, 7);
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        for &(u, v) in a.test.iter().chain(&a.valid) {
            assert_eq!(a.train.get(u, v), 0.0);
        }
        // union restores the interaction set
        let mut all: Vec<(usize, usize)> = a.train.iter().map(|(r, c, _)| (r, c)).collect();
        all.extend(&a.valid);
        all.extend(&a.test);
        all.sort_unstable();
        let mut orig: Vec<(usize, usize)> = g.interactions().iter().map(|(r, c, _)| (r, c)).collect();
        orig.sort_unstable();
        assert_eq!(all, orig);
    }

    #[test]
    fn subsample_keeps_requested_fraction() {
        let g = toy_graph();
        let s = subsample_interactions(&g, 0.5, 3).unwrap();
        assert_eq!(s.interactions().nnz(), 5); // round(0.5 * 9) = 5 (ties up)
        assert_eq!(s.n_users(), 6);
        let full = subsample_interactions(&g, 1.0, 3).unwrap();
        assert_eq!(full.interactions().nnz(), 9);
    }

    #[test]
    fn group_by_user_sorts_items() {
        let grouped = group_by_user(&[(1, 2), (0, 1), (1, 0)], 3);
        assert_eq!(grouped, vec![vec![1], vec![0, 2], vec![]]);
    }
}
