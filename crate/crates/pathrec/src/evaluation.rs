//! Top-K ranking metrics — Recall@K and NDCG@K — over full-catalog ranking
//! with per-user candidate exclusion.
//!
//! Scoring walks the same per-pair kernel as [`crate::objectives::score_rec`]
//! (h ⊙ p once per user, then one fixed-order dot per item), so ranking
//! scores and per-pair scores agree bitwise.

use crate::dense::{dot, hadamard_into};
use crate::error::Error;
use crate::hetgraph::InteractionSplit;
use crate::par::chunked_mut;
use crate::Result;
use ndarray::Array2;

/// Ranked candidate lists plus the ground-truth positives they are judged
/// against.
#[derive(Clone, Debug)]
pub struct RankingResult {
    /// Per user: item ids sorted by score descending (ties by ascending id),
    /// exclusions removed, truncated to the requested depth.
    pub lists: Vec<Vec<usize>>,
    /// Per user: sorted ground-truth positive item ids.
    pub positives: Vec<Vec<usize>>,
    /// Depth the lists were ranked to.
    pub k: usize,
}

/// Rank every item for every user by R̂_uv = hᵀ(p_u ⊙ q_v), drop each user's
/// excluded items, and keep the top `k`.
pub fn rank_items(
    z_rec: &Array2<f64>,
    h_rec: &[f64],
    n_users: usize,
    exclusions: &[Vec<usize>],
    positives: &[Vec<usize>],
    k: usize,
) -> Result<RankingResult> {
    let (rows, d) = z_rec.dim();
    if n_users > rows {
        return Err(Error::Shape(format!("{n_users} users exceed {rows} rows")));
    }
    let n_items = rows - n_users;
    if h_rec.len() != d {
        return Err(Error::Shape(format!("head has {} entries for d={d}", h_rec.len())));
    }
    if k == 0 {
        return Err(Error::Config("ranking depth must be at least 1".into()));
    }
    if exclusions.len() != n_users || positives.len() != n_users {
        return Err(Error::Shape(format!(
            "{} exclusion / {} positive lists for {n_users} users",
            exclusions.len(),
            positives.len()
        )));
    }
    for lists in [exclusions, positives] {
        for l in lists {
            if l.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Index("per-user item lists must be sorted and unique".into()));
            }
            if let Some(&last) = l.last() {
                if last >= n_items {
                    return Err(Error::Index(format!("item {last} >= {n_items}")));
                }
            }
        }
    }

    let zs = z_rec.as_slice().expect("row-major");
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n_users];
    let mut failed = std::sync::atomic::AtomicBool::new(false);
    chunked_mut(&mut lists, |base, chunk| {
        let mut scratch = vec![0.0; d];
        let mut scores = vec![0.0; n_items];
        let mut candidates: Vec<usize> = Vec::with_capacity(n_items);
        for (off, slot) in chunk.iter_mut().enumerate() {
            let u = base + off;
            hadamard_into(&mut scratch, h_rec, &zs[u * d..(u + 1) * d]);
            let mut finite = true;
            for (v, score) in scores.iter_mut().enumerate() {
                let row = n_users + v;
                *score = dot(&scratch, &zs[row * d..(row + 1) * d]);
                finite &= score.is_finite();
            }
            if !finite {
                failed.store(true, std::sync::atomic::Ordering::Relaxed);
                return;
            }
            candidates.clear();
            let excl = &exclusions[u];
            candidates.extend((0..n_items).filter(|v| excl.binary_search(v).is_err()));
            let by_rank = |a: &usize, b: &usize| {
                scores[*b]
                    .partial_cmp(&scores[*a])
                    .expect("finite scores")
                    .then_with(|| a.cmp(b))
            };
            if candidates.len() > k {
                candidates.select_nth_unstable_by(k - 1, by_rank);
                candidates.truncate(k);
            }
            candidates.sort_unstable_by(by_rank);
            *slot = candidates.clone();
        }
    });
    if *failed.get_mut() {
        return Err(Error::Numeric("non-finite ranking score".into()));
    }
    Ok(RankingResult { lists, positives: positives.to_vec(), k })
}

fn check_depth(r: &RankingResult, k: usize) -> Result<()> {
    if k == 0 || k > r.k {
        return Err(Error::Config(format!("metric depth {k} outside 1..={}", r.k)));
    }
    Ok(())
}

fn judged(r: &RankingResult) -> Result<impl Iterator<Item = (&[usize], &[usize])>> {
    if r.positives.iter().all(|p| p.is_empty()) {
        return Err(Error::Empty("no user has ground-truth positives".into()));
    }
    Ok(r.lists
        .iter()
        .zip(&r.positives)
        .filter(|(_, pos)| !pos.is_empty())
        .map(|(l, p)| (l.as_slice(), p.as_slice())))
}

/// Mean over judged users of |top-K ∩ positives| / |positives|; users without
/// positives are dropped from the mean.
pub fn recall_at_k(r: &RankingResult, k: usize) -> Result<f64> {
    check_depth(r, k)?;
    let mut total = 0.0;
    let mut users = 0usize;
    for (list, pos) in judged(r)? {
        let hits = list.iter().take(k).filter(|v| pos.binary_search(v).is_ok()).count();
        total += hits as f64 / pos.len() as f64;
        users += 1;
    }
    Ok(total / users as f64)
}

/// Mean over judged users of DCG@K / IDCG@K with binary gains: a hit at
/// 1-based rank i contributes 1/log₂(i+1), and the ideal places
/// min(k, |positives|) hits at the top.
pub fn ndcg_at_k(r: &RankingResult, k: usize) -> Result<f64> {
    check_depth(r, k)?;
    let gain = |rank1: usize| 1.0 / ((rank1 + 1) as f64).log2();
    let mut total = 0.0;
    let mut users = 0usize;
    for (list, pos) in judged(r)? {
        let dcg: f64 = list
            .iter()
            .take(k)
            .enumerate()
            .filter(|(_, v)| pos.binary_search(v).is_ok())
            .map(|(i, _)| gain(i + 1))
            .sum();
        let ideal: f64 = (1..=k.min(pos.len())).map(gain).sum();
        total += dcg / ideal;
        users += 1;
    }
    Ok(total / users as f64)
}

/// Which held-out set to judge and what to exclude from the candidates:
/// validation excludes the train positives, test excludes train ∪ validation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalSplit {
    Validation,
    Test,
}

/// Per-user (exclusions, positives) item lists for one protocol stage.
pub fn eval_sets(split: &InteractionSplit, which: EvalSplit) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let n_users = split.train.n_rows();
    let mut exclusions: Vec<Vec<usize>> = (0..n_users)
        .map(|u| split.train.row(u).0.to_vec())
        .collect();
    let held = match which {
        EvalSplit::Validation => &split.valid,
        EvalSplit::Test => &split.test,
    };
    if which == EvalSplit::Test {
        for &(u, v) in &split.valid {
            let row = &mut exclusions[u];
            if let Err(at) = row.binary_search(&v) {
                row.insert(at, v);
            }
        }
    }
    let mut positives: Vec<Vec<usize>> = vec![Vec::new(); n_users];
    for &(u, v) in held {
        positives[u].push(v);
    }
    for p in &mut positives {
        p.sort_unstable();
        p.dedup();
    }
    (exclusions, positives)
}

/// Rank and judge one protocol stage in a single call.
pub fn rank_for_split(
    z_rec: &Array2<f64>,
    h_rec: &[f64],
    split: &InteractionSplit,
    which: EvalSplit,
    k: usize,
) -> Result<RankingResult> {
    let (exclusions, positives) = eval_sets(split, which);
    rank_items(z_rec, h_rec, split.train.n_rows(), &exclusions, &positives, k)
}
