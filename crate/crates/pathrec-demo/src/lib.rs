//! Browser playground for the meta-path recommender. Three entry points,
//! each taking plain values and returning JSON for the page to render:
//!
//! * [`path_lab`] — score an editable toy graph along a chosen meta-path and
//!   return both the raw path counts and the normalized link scores.
//! * [`signal`] — bin the link scores of a generated two-community world and
//!   report the interaction probability per bin.
//! * [`train_demo`] — train the full model on that world in-page and return
//!   the learning curve, held-out metrics and per-user recommendations.
//!
//! Everything is deterministic in the seed, so the page can be replayed.
//! The `*_impl` functions carry the logic with string errors; the exported
//! wrappers only translate errors for the JavaScript side.

use pathrec::evaluation::{ndcg_at_k, rank_for_split, recall_at_k, EvalSplit};
use pathrec::hetgraph::{split_interactions, HeteroGraph, NodeType, Relation};
use pathrec::metapath::{commuting_matrix, correlation_report, link_score, MetaPath};
use pathrec::sparse::SparseMatrix;
use pathrec::trainer::{fit, forward, init_params, TrainConfig, TrainContext, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::wasm_bindgen;
use wasm_bindgen::JsValue;

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Two node types (users `U`, items `I`), a user–user friendship relation and
/// the user–item interaction relation.
fn build_graph(
    n_users: usize,
    n_items: usize,
    friends: &[(usize, usize)],
    plays: &[(usize, usize)],
) -> pathrec::Result<HeteroGraph> {
    let friendship = SparseMatrix::from_triplets(
        n_users,
        n_users,
        friends.iter().map(|&(a, b)| (a, b, 1.0)),
    )?
    .binarize();
    let listens =
        SparseMatrix::from_triplets(n_users, n_items, plays.iter().map(|&(u, i)| (u, i, 1.0)))?
            .binarize();
    Ok(HeteroGraph {
        node_types: vec![
            NodeType {
                name: "user".into(),
                code: "U".into(),
                original_ids: (0..n_users as i64).collect(),
            },
            NodeType {
                name: "item".into(),
                code: "I".into(),
                original_ids: (0..n_items as i64).collect(),
            },
        ],
        relations: vec![
            Relation { name: "friendship".into(), src: 0, dst: 0, matrix: friendship },
            Relation { name: "listens".into(), src: 0, dst: 1, matrix: listens },
        ],
        user_type: 0,
        item_type: 1,
        user_item: 1,
    })
}

fn dense(m: &SparseMatrix) -> Vec<Vec<f64>> {
    (0..m.n_rows()).map(|r| (0..m.n_cols()).map(|c| m.get(r, c)).collect()).collect()
}

#[derive(Serialize)]
struct PathLabOut {
    label: String,
    counts: Vec<Vec<f64>>,
    scores: Vec<Vec<f64>>,
}

fn path_lab_impl(
    n_users: usize,
    n_items: usize,
    friends: &str,
    plays: &str,
    meta_path: &str,
) -> Result<String, String> {
    let friends: Vec<(usize, usize)> =
        serde_json::from_str(friends).map_err(|e| e.to_string())?;
    let plays: Vec<(usize, usize)> = serde_json::from_str(plays).map_err(|e| e.to_string())?;
    if let Some(&(a, b)) = friends.iter().find(|&&(a, b)| a >= n_users || b >= n_users) {
        return Err(format!("friend pair ({a}, {b}) is out of range"));
    }
    if let Some(&(u, i)) = plays.iter().find(|&&(u, i)| u >= n_users || i >= n_items) {
        return Err(format!("play pair ({u}, {i}) is out of range"));
    }
    let g = build_graph(n_users, n_items, &friends, &plays).map_err(|e| e.to_string())?;
    let path = MetaPath::parse(&g, meta_path).map_err(|e| e.to_string())?;
    let c = commuting_matrix(&g, &path).map_err(|e| e.to_string())?;
    let m = link_score(&c, &path.label).map_err(|e| e.to_string())?;
    to_json(&PathLabOut { label: path.label.clone(), counts: dense(&c), scores: dense(&m.scores) })
}

/// Path counts and link scores for a hand-edited graph. `friends` and
/// `plays` are JSON arrays of `[src, dst]` pairs over zero-based ids.
#[wasm_bindgen]
pub fn path_lab(
    n_users: usize,
    n_items: usize,
    friends: &str,
    plays: &str,
    meta_path: &str,
) -> Result<String, JsValue> {
    path_lab_impl(n_users, n_items, friends, plays, meta_path)
        .map_err(|e| JsValue::from_str(&e))
}

#[derive(Serialize, Deserialize)]
pub struct World {
    pub n_users: usize,
    pub n_items: usize,
    pub user_genre: Vec<usize>,
    pub item_genre: Vec<usize>,
    pub friends: Vec<(usize, usize)>,
    pub plays: Vec<(usize, usize)>,
}

/// A two-community listening world: users and items split into two genres,
/// with friendships and plays drawn mostly within a user's own genre.
/// Friendships are stored one-directed; path walking treats them as mutual.
pub fn make_world(seed: u32) -> World {
    const N_USERS: usize = 40;
    const N_ITEMS: usize = 24;
    const SAME_GENRE: f64 = 0.85;
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let user_genre: Vec<usize> = (0..N_USERS).map(|u| u * 2 / N_USERS).collect();
    let item_genre: Vec<usize> = (0..N_ITEMS).map(|i| i * 2 / N_ITEMS).collect();
    let item_pool: Vec<Vec<usize>> =
        (0..2).map(|g| (0..N_ITEMS).filter(|&i| item_genre[i] == g).collect()).collect();
    let user_pool: Vec<Vec<usize>> =
        (0..2).map(|g| (0..N_USERS).filter(|&u| user_genre[u] == g).collect()).collect();

    let mut plays = Vec::new();
    let mut friends = Vec::new();
    for u in 0..N_USERS {
        let mut listened = std::collections::BTreeSet::new();
        while listened.len() < 6 {
            let own = rng.random::<f64>() < SAME_GENRE;
            let pool = &item_pool[if own { user_genre[u] } else { 1 - user_genre[u] }];
            listened.insert(pool[rng.random_range(0..pool.len())]);
        }
        plays.extend(listened.into_iter().map(|i| (u, i)));

        let mut befriended = std::collections::BTreeSet::new();
        while befriended.len() < 3 {
            let own = rng.random::<f64>() < SAME_GENRE;
            let pool = &user_pool[if own { user_genre[u] } else { 1 - user_genre[u] }];
            let f = pool[rng.random_range(0..pool.len())];
            if f != u {
                befriended.insert(f);
            }
        }
        friends.extend(befriended.into_iter().map(|f| (u, f)));
    }
    World { n_users: N_USERS, n_items: N_ITEMS, user_genre, item_genre, friends, plays }
}

fn world_graph(w: &World) -> pathrec::Result<HeteroGraph> {
    build_graph(w.n_users, w.n_items, &w.friends, &w.plays)
}

/// The generated world itself, for the page to draw.
#[wasm_bindgen]
pub fn world(seed: u32) -> Result<String, JsValue> {
    to_json(&make_world(seed)).map_err(|e| JsValue::from_str(&e))
}

#[derive(Serialize)]
struct BinOut {
    lo: f64,
    hi: f64,
    probability: f64,
    support: usize,
}

fn signal_impl(seed: u32, meta_path: &str, bins: usize) -> Result<String, String> {
    let w = make_world(seed);
    let g = world_graph(&w).map_err(|e| e.to_string())?;
    let path = MetaPath::parse(&g, meta_path).map_err(|e| e.to_string())?;
    let c = commuting_matrix(&g, &path).map_err(|e| e.to_string())?;
    let m = link_score(&c, &path.label).map_err(|e| e.to_string())?;
    let report = correlation_report(&m, g.interactions(), bins).map_err(|e| e.to_string())?;
    let rows: Vec<BinOut> = report
        .iter()
        .map(|b| BinOut { lo: b.lo, hi: b.hi, probability: b.probability, support: b.support })
        .collect();
    to_json(&rows)
}

/// Interaction probability per link-score bin on the generated world.
/// The first returned row is the zero-score (no path) mass.
#[wasm_bindgen]
pub fn signal(seed: u32, meta_path: &str, bins: usize) -> Result<String, JsValue> {
    signal_impl(seed, meta_path, bins).map_err(|e| JsValue::from_str(&e))
}

#[derive(Serialize)]
struct EpochOut {
    epoch: usize,
    loss_rec: f64,
    loss_pre: f64,
    loss_con: f64,
    val_recall: f64,
    val_ndcg: f64,
}

#[derive(Serialize)]
struct RecItem {
    item: usize,
    hit: bool,
}

#[derive(Serialize)]
struct RecRow {
    user: usize,
    items: Vec<RecItem>,
    held_out: Vec<usize>,
}

#[derive(Serialize)]
struct TrainOut {
    history: Vec<EpochOut>,
    best_epoch: usize,
    test_recall: f64,
    test_ndcg: f64,
    recs: Vec<RecRow>,
}

fn train_demo_impl(
    seed: u32,
    meta_path: &str,
    variant: &str,
    epochs: usize,
    dim: usize,
    learning_rate: f64,
) -> Result<String, String> {
    let variant: Variant = variant.parse().map_err(|e: pathrec::Error| e.to_string())?;
    let w = make_world(seed);
    let g = world_graph(&w).map_err(|e| e.to_string())?;
    let split = split_interactions(&g, seed as u64);

    let mut cfg = TrainConfig {
        dim,
        learning_rate,
        dropout: 0.1,
        batch_size: 16,
        max_epochs: epochs,
        patience: epochs,
        n_neg: 8,
        eval_k: 5,
        seed: seed as u64,
        meta_path: meta_path.to_string(),
        ..TrainConfig::default()
    };
    cfg.weights = variant.apply(&cfg.weights);
    cfg.validate().map_err(|e| e.to_string())?;

    let ctx = TrainContext::new(&g, &split.train, meta_path, cfg.layers, cfg.encoder)
        .map_err(|e| e.to_string())?;
    let params = init_params(&cfg, ctx.n_nodes()).map_err(|e| e.to_string())?;
    let mut history = Vec::new();
    let result = fit(params, &ctx, &split, &cfg, 0, |r| {
        history.push(EpochOut {
            epoch: r.epoch,
            loss_rec: r.loss_rec,
            loss_pre: r.loss_pre,
            loss_con: r.loss_con,
            val_recall: r.val_recall,
            val_ndcg: r.val_ndcg,
        });
    })
    .map_err(|e| e.to_string())?;

    let fwd = forward(&result.params, &ctx, &cfg, None).map_err(|e| e.to_string())?;
    let h = result.params.h_rec.as_slice().expect("h_rec is contiguous");
    let ranking =
        rank_for_split(&fwd.z_rec, h, &split, EvalSplit::Test, 5).map_err(|e| e.to_string())?;
    let test_recall = recall_at_k(&ranking, 5).map_err(|e| e.to_string())?;
    let test_ndcg = ndcg_at_k(&ranking, 5).map_err(|e| e.to_string())?;

    let recs = ranking
        .lists
        .iter()
        .zip(&ranking.positives)
        .enumerate()
        .map(|(user, (list, pos))| RecRow {
            user,
            items: list
                .iter()
                .map(|&item| RecItem { item, hit: pos.binary_search(&item).is_ok() })
                .collect(),
            held_out: pos.clone(),
        })
        .collect();

    to_json(&TrainOut { history, best_epoch: result.best_epoch, test_recall, test_ndcg, recs })
}

/// Trains on the generated world and reports the learning curve, test
/// metrics at depth 5 and each user's top-5 recommendations (held-out test
/// items marked as hits). `variant` is one of `full`, `no-contrastive`,
/// `rec-only`.
#[wasm_bindgen]
pub fn train_demo(
    seed: u32,
    meta_path: &str,
    variant: &str,
    epochs: usize,
    dim: usize,
    learning_rate: f64,
) -> Result<String, JsValue> {
    train_demo_impl(seed, meta_path, variant, epochs, dim, learning_rate)
        .map_err(|e| JsValue::from_str(&e))
}
