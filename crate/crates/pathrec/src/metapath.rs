//! Meta-paths over the heterogeneous graph: resolve a typed path string into
//! relation legs, chain the legs into a commuting matrix whose (u,v) entry
//! counts path instances, row-max normalize into link scores, and report how
//! link scores correlate with observed interactions.

use crate::error::Error;
use crate::hetgraph::HeteroGraph;
use crate::sparse::SparseMatrix;
use crate::Result;

/// One leg of a realized meta-path: a stored relation, walked forward or
/// against its stored direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Leg {
    Forward(usize),
    Reverse(usize),
}

/// A meta-path resolved against a graph: the node-type sequence and the
/// relation legs joining consecutive types.
#[derive(Clone, Debug)]
pub struct MetaPath {
    /// The declaration as written, e.g. "U-U-A".
    pub label: String,
    /// Node type indices, head = user type, tail = item type.
    pub types: Vec<usize>,
    pub legs: Vec<Leg>,
}

impl MetaPath {
    /// Resolves a path declaration like `U-U-A` (or compact `UUA` when every
    /// type code is a single character). The head must be the user type and
    /// the tail the item type; each consecutive type pair must be joined by a
    /// stored relation, transposed automatically when it is stored the other
    /// way around.
    pub fn parse(g: &HeteroGraph, s: &str) -> Result<MetaPath> {
        let codes: Vec<String> = if s.contains('-') {
            s.split('-').map(|t| t.trim().to_string()).collect()
        } else {
            s.chars().map(|c| c.to_string()).collect()
        };
        if codes.len() < 2 {
            return Err(Error::Config(format!("meta-path `{s}` needs at least two node types")));
        }
        let mut types = Vec::with_capacity(codes.len());
        for code in &codes {
            let t = g.node_type_by_code(code).ok_or_else(|| {
                Error::Config(format!("meta-path `{s}`: unknown node type code `{code}`"))
            })?;
            types.push(t);
        }
        if types[0] != g.user_type {
            return Err(Error::Config(format!(
                "meta-path `{s}` must start at the user type `{}`",
                g.node_types[g.user_type].code
            )));
        }
        if *types.last().unwrap() != g.item_type {
            return Err(Error::Config(format!(
                "meta-path `{s}` must end at the item type `{}`",
                g.node_types[g.item_type].code
            )));
        }
        let mut legs = Vec::with_capacity(types.len() - 1);
        for w in types.windows(2) {
            let (a, b) = (w[0], w[1]);
            let forward = g.relations.iter().position(|r| r.src == a && r.dst == b);
            let leg = match forward {
                Some(i) => Leg::Forward(i),
                None => match g.relations.iter().position(|r| r.src == b && r.dst == a) {
                    Some(i) => Leg::Reverse(i),
                    None => {
                        return Err(Error::Config(format!(
                            "meta-path `{s}`: no relation joins `{}` and `{}`",
                            g.node_types[a].code, g.node_types[b].code
                        )))
                    }
                },
            };
            legs.push(leg);
        }
        Ok(MetaPath { label: s.to_string(), types, legs })
    }
}

/// Chains the legs of `p` into the commuting matrix: entry (u,v) counts the
/// path instances from user u to item v. A leg over a same-type relation
/// (friendship, artist similarity) is walked as an undirected edge — the
/// adjacency is closed with its transpose — since such files commonly store
/// each edge in just one direction.
pub fn commuting_matrix(g: &HeteroGraph, p: &MetaPath) -> Result<SparseMatrix> {
    let mut acc: Option<SparseMatrix> = None;
    for leg in &p.legs {
        let i = match *leg {
            Leg::Forward(i) | Leg::Reverse(i) => i,
        };
        let rel = &g.relations[i];
        let w = if rel.src == rel.dst {
            rel.matrix.symmetric_union()?
        } else if matches!(leg, Leg::Reverse(_)) {
            rel.matrix.transpose()
        } else {
            rel.matrix.clone()
        };
        acc = Some(match acc {
            None => w,
            Some(c) => c.spgemm(&w)?,
        });
    }
    Ok(acc.expect("meta-path has at least one leg"))
}

/// Link-score matrix M: the commuting matrix with every nonempty row divided
/// by its row maximum, so stored values lie in (0, 1] and each nonempty row
/// attains 1.
#[derive(Clone, Debug)]
pub struct LinkScoreMatrix {
    pub scores: SparseMatrix,
    /// Label of the meta-path the scores came from.
    pub source_path: String,
}

pub fn link_score(c: &SparseMatrix, source_path: &str) -> Result<LinkScoreMatrix> {
    let mut factors = vec![0.0f64; c.n_rows()];
    for r in 0..c.n_rows() {
        let (_, vals) = c.row(r);
        let mut max = 0.0f64;
        for &v in vals {
            if v < 0.0 {
                return Err(Error::Numeric(format!(
                    "negative path count {v} at row {r}; commuting matrices are non-negative"
                )));
            }
            max = max.max(v);
        }
        factors[r] = if max > 0.0 { 1.0 / max } else { 0.0 };
    }
    Ok(LinkScoreMatrix { scores: c.scale_rows(&factors)?, source_path: source_path.to_string() })
}

/// One row of the link-score / interaction correlation report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelationBin {
    pub lo: f64,
    pub hi: f64,
    /// Fraction of pairs in the bin that are observed interactions.
    pub probability: f64,
    /// Number of (user, item) pairs falling in the bin.
    pub support: usize,
}

/// Bins the stored link scores over (0,1] into `bins` equal-width bins and
/// reports, per bin, the fraction of pairs that appear in `interactions`.
/// The zero-score mass (all unstored pairs) is reported first as a separate
/// `lo == hi == 0` bin so the nonzero bins aren't drowned out by it.
pub fn correlation_report(
    m: &LinkScoreMatrix,
    interactions: &SparseMatrix,
    bins: usize,
) -> Result<Vec<CorrelationBin>> {
    let s = &m.scores;
    if s.n_rows() != interactions.n_rows() || s.n_cols() != interactions.n_cols() {
        return Err(Error::Shape(format!(
            "link scores are {}x{} but interactions are {}x{}",
            s.n_rows(),
            s.n_cols(),
            interactions.n_rows(),
            interactions.n_cols()
        )));
    }
    if bins < 2 {
        return Err(Error::Config(format!("need at least 2 bins, got {bins}")));
    }
    let mut support = vec![0usize; bins];
    let mut hits = vec![0usize; bins];
    let mut hits_nonzero_total = 0usize;
    for (u, v, score) in s.iter() {
        if !(score > 0.0 && score <= 1.0) {
            return Err(Error::Numeric(format!(
                "link score {score} at ({u}, {v}) outside (0, 1]"
            )));
        }
        let idx = ((score * bins as f64).ceil() as usize).saturating_sub(1).min(bins - 1);
        support[idx] += 1;
        if interactions.get(u, v) != 0.0 {
            hits[idx] += 1;
            hits_nonzero_total += 1;
        }
    }
    let total_pairs = s.n_rows() * s.n_cols();
    let zero_support = total_pairs - s.nnz();
    let zero_hits = interactions.nnz() - hits_nonzero_total;
    let ratio = |h: usize, n: usize| if n > 0 { h as f64 / n as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(bins + 1);
    out.push(CorrelationBin {
        lo: 0.0,
        hi: 0.0,
        probability: ratio(zero_hits, zero_support),
        support: zero_support,
    });
    for i in 0..bins {
        out.push(CorrelationBin {
            lo: i as f64 / bins as f64,
            hi: (i + 1) as f64 / bins as f64,
            probability: ratio(hits[i], support[i]),
            support: support[i],
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::{load_relations, Schema};

    fn toy_graph() -> HeteroGraph {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy");
        let schema = Schema::load(&dir.join("schema.txt")).unwrap();
        load_relations(&dir, &schema).unwrap()
    }

    #[test]
    fn parse_resolves_forward_legs() {
        let g = toy_graph();
        let p = MetaPath::parse(&g, "U-U-M").unwrap();
        assert_eq!(p.legs, vec![Leg::Forward(0), Leg::Forward(1)]);
        let compact = MetaPath::parse(&g, "UUM").unwrap();
        assert_eq!(compact.legs, p.legs);
    }

    #[test]
    fn parse_rejects_bad_endpoints() {
        let g = toy_graph();
        assert!(matches!(MetaPath::parse(&g, "M-U-M"), Err(Error::Config(_))));
        assert!(matches!(MetaPath::parse(&g, "U-M-U"), Err(Error::Config(_))));
        assert!(matches!(MetaPath::parse(&g, "U-X-M"), Err(Error::Config(_))));
        assert!(matches!(MetaPath::parse(&g, "U"), Err(Error::Config(_))));
    }

    #[test]
    fn parse_uses_transpose_when_stored_reversed() {
        // no movie→user relation is stored, so the M→U hop of U-M-U-M can
        // only resolve by transposing `watch`
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("um.dat"), "1 1\n2 1\n2 2\n").unwrap();
        std::fs::write(dir.path().join("mt.dat"), "1 1\n").unwrap();
        let schema = Schema::parse(
            "node user U\nnode movie M\nnode tag T\n\
             relation watch user movie um.dat\n\
             relation tagged movie tag mt.dat\n\
             user_item watch\n",
            "test",
        )
        .unwrap();
        let g = load_relations(dir.path(), &schema).unwrap();
        let p = MetaPath::parse(&g, "U-M-U-M").unwrap();
        assert_eq!(p.legs, vec![Leg::Forward(0), Leg::Reverse(0), Leg::Forward(0)]);
        // commuting matrix equals W · Wᵀ · W
        let w = &g.relations[0].matrix;
        let expect = w.spgemm(&w.transpose()).unwrap().spgemm(w).unwrap();
        assert_eq!(commuting_matrix(&g, &p).unwrap(), expect);
    }

    #[test]
    fn single_leg_path_is_the_relation() {
        let g = toy_graph();
        let p = MetaPath::parse(&g, "U-M").unwrap();
        let c = commuting_matrix(&g, &p).unwrap();
        assert_eq!(c, g.interactions().clone());
    }

    #[test]
    fn toy_commuting_row_counts_path_instances() {
        let g = toy_graph();
        let p = MetaPath::parse(&g, "U-U-M").unwrap();
        let c = commuting_matrix(&g, &p).unwrap();
        // user u2 (index 1): friends u1, u3; u1 watched m1, u3 watched m1+m2
        assert_eq!(c.get(1, 0), 2.0);
        assert_eq!(c.get(1, 1), 1.0);
        assert_eq!(c.get(1, 2), 0.0);
    }

    #[test]
    fn same_type_legs_walk_edges_both_ways() {
        // friendship stored one-directed: u1→u2, u3→u2; movie watched by u1
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("uu.dat"), "1 2\n3 2\n").unwrap();
        std::fs::write(dir.path().join("um.dat"), "1 1\n2 1\n3 1\n").unwrap();
        let schema = Schema::parse(
            "node user U\nnode movie M\n\
             relation friend user user uu.dat\n\
             relation watch user movie um.dat\n\
             user_item watch\n",
            "test",
        )
        .unwrap();
        let g = load_relations(dir.path(), &schema).unwrap();
        let p = MetaPath::parse(&g, "UUM").unwrap();
        let c = commuting_matrix(&g, &p).unwrap();
        // u2's friends are u1 and u3 despite both edges pointing at u2
        assert_eq!(c.get(1, 0), 2.0);
        // u1's only friend is u2
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(2, 0), 1.0);
    }

    #[test]
    fn toy_link_scores_match_worked_row() {
        let g = toy_graph();
        let p = MetaPath::parse(&g, "U-U-M").unwrap();
        let c = commuting_matrix(&g, &p).unwrap();
        let m = link_score(&c, &p.label).unwrap();
        assert_eq!(m.scores.get(1, 0), 1.0);
        assert_eq!(m.scores.get(1, 1), 0.5);
        assert_eq!(m.scores.get(1, 2), 0.0);
    }

    #[test]
    fn link_score_handles_zero_rows_and_rejects_negatives() {
        let c = SparseMatrix::from_triplets(3, 2, vec![(0, 0, 4.0), (0, 1, 2.0)]).unwrap();
        let m = link_score(&c, "p").unwrap();
        assert_eq!(m.scores.get(0, 0), 1.0);
        assert_eq!(m.scores.get(0, 1), 0.5);
        assert_eq!(m.scores.row_nnz(1), 0);
        assert_eq!(m.scores.row_nnz(2), 0);

        let neg = SparseMatrix::from_triplets(1, 1, vec![(0, 0, -1.0)]).unwrap();
        assert!(matches!(link_score(&neg, "p"), Err(Error::Numeric(_))));
    }

    #[test]
    fn link_score_is_idempotent_and_scale_invariant() {
        let c =
            SparseMatrix::from_triplets(2, 3, vec![(0, 0, 3.0), (0, 2, 1.0), (1, 1, 7.0)]).unwrap();
        let m = link_score(&c, "p").unwrap();
        let again = link_score(&m.scores, "p").unwrap();
        assert_eq!(m.scores, again.scores);
        let scaled = c.scale_rows(&[5.0, 0.25]).unwrap();
        let m2 = link_score(&scaled, "p").unwrap();
        assert_eq!(m.scores, m2.scores);
    }

    #[test]
    fn correlation_toy_bins_match_hand_computation() {
        let g = toy_graph();
        let p = MetaPath::parse(&g, "U-U-M").unwrap();
        let c = commuting_matrix(&g, &p).unwrap();
        let m = link_score(&c, &p.label).unwrap();
        let report = correlation_report(&m, g.interactions(), 10).unwrap();
        assert_eq!(report.len(), 11);
        // zero bin: 4 pairs with no friend-paths, none of them watched
        assert_eq!(report[0].support, 4);
        assert_eq!(report[0].probability, 0.0);
        // score-1.0 decile: six pairs, all watched
        let top = report[10];
        assert_eq!(top.support, 6);
        assert_eq!(top.probability, 1.0);
        // score-0.5 decile: (u2,m2), (u3,m1), (u3,m3), (u4,m3) → half watched
        let mid = report[5];
        assert!((mid.lo - 0.4).abs() < 1e-12 && (mid.hi - 0.5).abs() < 1e-12);
        assert_eq!(mid.support, 4);
        assert_eq!(mid.probability, 0.5);
    }

    #[test]
    fn correlation_rejects_shape_mismatch_and_tiny_bins() {
        let m = link_score(&SparseMatrix::identity(2), "p").unwrap();
        let r = SparseMatrix::zeros(3, 3);
        assert!(matches!(correlation_report(&m, &r, 10), Err(Error::Shape(_))));
        let r2 = SparseMatrix::zeros(2, 2);
        assert!(matches!(correlation_report(&m, &r2, 1), Err(Error::Config(_))));
    }

    #[test]
    fn correlation_disjoint_supports_give_zero_probability() {
        let m = link_score(
            &SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 1.0)]).unwrap(),
            "p",
        )
        .unwrap();
        let r = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let report = correlation_report(&m, &r, 2).unwrap();
        assert!(report[1..].iter().all(|b| b.probability == 0.0));
        // and the two interactions land in the zero bin
        assert_eq!(report[0].support, 2);
        assert_eq!(report[0].probability, 1.0);
    }
}
