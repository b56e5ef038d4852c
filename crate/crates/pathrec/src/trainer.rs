//! The training loop: four-expert propagation, gated fusion, dropout, the
//! joint objective with exact gradients, adaptive-moment updates, and early
//! stopping on validation Recall@K.

use crate::encoder::{EncoderKind, Propagator};
use crate::error::Error;
use crate::evaluation::{ndcg_at_k, rank_for_split, recall_at_k, EvalSplit};
use crate::fusion::{
    fuse, fuse_backward, gate_backward, gate_weights, select_experts, softmax_backward,
    ExpertOutputs, Task, N_EXPERTS,
};
use crate::hetgraph::{HeteroGraph, InteractionSplit};
use crate::metapath::{commuting_matrix, link_score, LinkScoreMatrix, MetaPath};
use crate::objectives::{
    build_pairs, loss_con, loss_pre, loss_rec, loss_total, ContrastivePairs, LossWeights,
};
use crate::rng::{derive_indexed, derive_seed, Stream};
use crate::sparse::SparseMatrix;
use crate::Result;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::str::FromStr;

/// Which embedding table feeds the gate networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateInput {
    Shared,
    Task,
}

impl FromStr for GateInput {
    type Err = Error;
    fn from_str(s: &str) -> Result<GateInput> {
        match s {
            "shared" => Ok(GateInput::Shared),
            "task" => Ok(GateInput::Task),
            other => Err(Error::Config(format!("unknown gate input '{other}'"))),
        }
    }
}

/// Where dropout is applied during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DropoutSite {
    /// On the fused task representations Z^rec and Z^pre.
    Fused,
    /// On the initial embedding tables before propagation.
    Initial,
}

impl FromStr for DropoutSite {
    type Err = Error;
    fn from_str(s: &str) -> Result<DropoutSite> {
        match s {
            "fused" => Ok(DropoutSite::Fused),
            "initial" => Ok(DropoutSite::Initial),
            other => Err(Error::Config(format!("unknown dropout site '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub dim: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub n_neg: usize,
    /// K of the validation Recall@K early-stopping metric.
    pub eval_k: usize,
    pub seed: u64,
    pub meta_path: String,
    pub encoder: EncoderKind,
    pub gate_input: GateInput,
    pub dropout_site: DropoutSite,
    pub weights: LossWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 256,
            layers: 2,
            learning_rate: 0.001,
            dropout: 0.3,
            batch_size: 512,
            max_epochs: 500,
            patience: 20,
            n_neg: 64,
            eval_k: 20,
            seed: 0,
            meta_path: String::new(),
            encoder: EncoderKind::LightConv,
            gate_input: GateInput::Shared,
            dropout_site: DropoutSite::Fused,
            weights: LossWeights::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.layers == 0 || self.batch_size == 0 {
            return Err(Error::Config("dim, layers and batch size must be positive".into()));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("bad learning rate {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.n_neg == 0 || self.eval_k == 0 {
            return Err(Error::Config("n_neg and eval_k must be positive".into()));
        }
        self.weights.validate()
    }
}

/// All trainable tensors.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub e_shared: Array2<f64>,
    pub e_task: Array2<f64>,
    pub w_rec: Array2<f64>,
    pub w_pre: Array2<f64>,
    pub h_rec: Array1<f64>,
    pub h_pre: Array1<f64>,
}

impl ModelParams {
    pub fn n_nodes(&self) -> usize {
        self.e_shared.nrows()
    }

    pub fn dim(&self) -> usize {
        self.e_shared.ncols()
    }

    pub fn assert_finite(&self) -> Result<()> {
        let all = self
            .e_shared
            .iter()
            .chain(self.e_task.iter())
            .chain(self.w_rec.iter())
            .chain(self.w_pre.iter())
            .chain(self.h_rec.iter())
            .chain(self.h_pre.iter());
        for &x in all {
            if !x.is_finite() {
                return Err(Error::Numeric("non-finite model parameter".into()));
            }
        }
        Ok(())
    }

    fn flat_lens(&self) -> Vec<usize> {
        vec![
            self.e_shared.len(),
            self.e_task.len(),
            self.w_rec.len(),
            self.w_pre.len(),
            self.h_rec.len(),
            self.h_pre.len(),
        ]
    }

    fn flat_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.e_shared.as_slice_mut().expect("row-major"),
            self.e_task.as_slice_mut().expect("row-major"),
            self.w_rec.as_slice_mut().expect("row-major"),
            self.w_pre.as_slice_mut().expect("row-major"),
            self.h_rec.as_slice_mut().expect("contiguous"),
            self.h_pre.as_slice_mut().expect("contiguous"),
        ]
    }
}

/// Draw all parameters i.i.d. from N(0, 1/d) — entries have scale 1/√d —
/// deterministically per seed, each tensor on its own stream.
pub fn init_params(cfg: &TrainConfig, n_nodes: usize) -> Result<ModelParams> {
    cfg.validate()?;
    if n_nodes == 0 {
        return Err(Error::Empty("cannot initialize a model over zero nodes".into()));
    }
    let d = cfg.dim;
    let dist = Normal::new(0.0, (1.0 / d as f64).sqrt())
        .map_err(|e| Error::Config(format!("bad init distribution: {e}")))?;
    let table = |rng: &mut ChaCha8Rng, rows: usize| {
        let data: Vec<f64> = (0..rows * d).map(|_| dist.sample(rng)).collect();
        Array2::from_shape_vec((rows, d), data).expect("sized to shape")
    };
    let vector = |rng: &mut ChaCha8Rng| {
        Array1::from_iter((0..d).map(|_| dist.sample(rng)))
    };
    Ok(ModelParams {
        e_shared: table(&mut derive_indexed(cfg.seed, Stream::InitShared, 0, 0), n_nodes),
        e_task: table(&mut derive_indexed(cfg.seed, Stream::InitTask, 0, 0), n_nodes),
        w_rec: table(&mut derive_indexed(cfg.seed, Stream::Gates, 0, 0), N_EXPERTS),
        w_pre: table(&mut derive_indexed(cfg.seed, Stream::Gates, 1, 0), N_EXPERTS),
        h_rec: vector(&mut derive_indexed(cfg.seed, Stream::Heads, 0, 0)),
        h_pre: vector(&mut derive_indexed(cfg.seed, Stream::Heads, 1, 0)),
    })
}

/// Gradients for every tensor in [`ModelParams`], same shapes.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub d_e_shared: Array2<f64>,
    pub d_e_task: Array2<f64>,
    pub d_w_rec: Array2<f64>,
    pub d_w_pre: Array2<f64>,
    pub d_h_rec: Array1<f64>,
    pub d_h_pre: Array1<f64>,
}

impl Gradients {
    fn flat(&self) -> [&[f64]; 6] {
        [
            self.d_e_shared.as_slice().expect("row-major"),
            self.d_e_task.as_slice().expect("row-major"),
            self.d_w_rec.as_slice().expect("row-major"),
            self.d_w_pre.as_slice().expect("row-major"),
            self.d_h_rec.as_slice().expect("contiguous"),
            self.d_h_pre.as_slice().expect("contiguous"),
        ]
    }
}

/// Adaptive-moment optimizer with bias-corrected first and second moments:
/// step = lr · m̂ / (√v̂ + ε), β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, lens: &[usize]) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: lens.iter().map(|&l| vec![0.0; l]).collect(),
            v: lens.iter().map(|&l| vec![0.0; l]).collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in
            params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(&mut self.v))
        {
            assert_eq!(p.len(), m.len());
            assert_eq!(g.len(), m.len());
            for i in 0..m.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Everything derived from the data that the epoch loop needs: the two
/// propagation operators, the link-score supervision and its transpose, and
/// the training interactions.
pub struct TrainContext {
    pub n_users: usize,
    pub n_items: usize,
    pub prop_ui: Propagator,
    pub prop_phi: Propagator,
    pub link: LinkScoreMatrix,
    pub link_t: SparseMatrix,
    pub train: SparseMatrix,
}

impl TrainContext {
    /// Resolve the meta-path against the graph with its interactions
    /// replaced by the training split, so held-out pairs never leak into
    /// the link-score supervision or either propagation graph.
    pub fn new(
        graph: &HeteroGraph,
        train: &SparseMatrix,
        meta_path: &str,
        layers: usize,
        encoder: EncoderKind,
    ) -> Result<TrainContext> {
        let g = graph.with_interactions(train.clone())?;
        let path = MetaPath::parse(&g, meta_path)?;
        let c = commuting_matrix(&g, &path)?;
        let link = link_score(&c, &path.label)?;
        TrainContext::from_parts(train.clone(), link, layers, encoder)
    }

    /// Assemble directly from a train matrix and a link-score matrix; the
    /// Φ-graph is the binary support of the link scores.
    pub fn from_parts(
        train: SparseMatrix,
        link: LinkScoreMatrix,
        layers: usize,
        encoder: EncoderKind,
    ) -> Result<TrainContext> {
        if link.scores.n_rows() != train.n_rows() || link.scores.n_cols() != train.n_cols() {
            return Err(Error::Shape(format!(
                "link scores are {}×{} but interactions are {}×{}",
                link.scores.n_rows(),
                link.scores.n_cols(),
                train.n_rows(),
                train.n_cols()
            )));
        }
        let g_phi = link.scores.binarize();
        Ok(TrainContext {
            n_users: train.n_rows(),
            n_items: train.n_cols(),
            prop_ui: Propagator::new(&train, layers, encoder)?,
            prop_phi: Propagator::new(&g_phi, layers, encoder)?,
            link_t: link.scores.transpose(),
            link,
            train,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_users + self.n_items
    }
}

fn sample_mask(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rho: f64) -> Array2<f64> {
    let scale = 1.0 / (1.0 - rho);
    let data: Vec<f64> =
        (0..rows * cols).map(|_| if rng.random::<f64>() < rho { 0.0 } else { scale }).collect();
    Array2::from_shape_vec((rows, cols), data).expect("sized to shape")
}

/// One full forward pass with every intermediate the backward pass needs.
pub struct Forward {
    pub experts: ExpertOutputs,
    pub alpha_rec: Array2<f64>,
    pub alpha_pre: Array2<f64>,
    pub z_rec: Array2<f64>,
    pub z_pre: Array2<f64>,
    x: Array2<f64>,
    mask_rec: Option<Array2<f64>>,
    mask_pre: Option<Array2<f64>>,
    mask_shared: Option<Array2<f64>>,
    mask_task: Option<Array2<f64>>,
}

/// Propagate both embedding tables over both graphs, gate and fuse per
/// task, and (in training) apply inverted-scaling dropout. Pass a generator
/// to enable dropout; evaluation passes `None` and is mask-free.
pub fn forward(
    params: &ModelParams,
    ctx: &TrainContext,
    cfg: &TrainConfig,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<Forward> {
    let (rows, d) = params.e_shared.dim();
    if rows != ctx.n_nodes() {
        return Err(Error::Shape(format!(
            "model has {rows} rows but the graph has {} nodes",
            ctx.n_nodes()
        )));
    }
    let masking = dropout_rng.and_then(|rng| (cfg.dropout > 0.0).then_some(rng));

    let mut mask_shared = None;
    let mut mask_task = None;
    let mut owned_tables = None;
    let mut mask_fused_rng = None;
    if let Some(rng) = masking {
        match cfg.dropout_site {
            DropoutSite::Initial => {
                let ms = sample_mask(rng, rows, d, cfg.dropout);
                let mt = sample_mask(rng, rows, d, cfg.dropout);
                owned_tables = Some((&params.e_shared * &ms, &params.e_task * &mt));
                mask_shared = Some(ms);
                mask_task = Some(mt);
            }
            DropoutSite::Fused => mask_fused_rng = Some(rng),
        }
    }
    let (e_shared, e_task) = match &owned_tables {
        Some((s, t)) => (s, t),
        None => (&params.e_shared, &params.e_task),
    };

    let experts = ExpertOutputs {
        s_ui: ctx.prop_ui.propagate(e_shared)?,
        s_path: ctx.prop_phi.propagate(e_shared)?,
        t_ui: ctx.prop_ui.propagate(e_task)?,
        t_path: ctx.prop_phi.propagate(e_task)?,
    };

    let x = match cfg.gate_input {
        GateInput::Shared => e_shared.clone(),
        GateInput::Task => e_task.clone(),
    };
    let alpha_rec = gate_weights(&params.w_rec, &x)?;
    let alpha_pre = gate_weights(&params.w_pre, &x)?;
    let mut z_rec = fuse(&select_experts(&experts, Task::Rec), &alpha_rec);
    let mut z_pre = fuse(&select_experts(&experts, Task::Pre), &alpha_pre);

    let mut mask_rec = None;
    let mut mask_pre = None;
    if let Some(rng) = mask_fused_rng {
        let mr = sample_mask(rng, rows, d, cfg.dropout);
        let mp = sample_mask(rng, rows, d, cfg.dropout);
        z_rec *= &mr;
        z_pre *= &mp;
        mask_rec = Some(mr);
        mask_pre = Some(mp);
    }

    Ok(Forward {
        experts,
        alpha_rec,
        alpha_pre,
        z_rec,
        z_pre,
        x,
        mask_rec,
        mask_pre,
        mask_shared,
        mask_task,
    })
}

/// Pull loss gradients on Z^rec / Z^pre back to every parameter tensor:
/// dropout → fusion → gate softmax → gate linear map → one propagation
/// adjoint per expert (the operator is symmetric, so the adjoint is the
/// propagation itself).
pub fn backward(
    params: &ModelParams,
    ctx: &TrainContext,
    cfg: &TrainConfig,
    fwd: &Forward,
    mut d_z_rec: Array2<f64>,
    mut d_z_pre: Array2<f64>,
    d_h_rec: Array1<f64>,
    d_h_pre: Array1<f64>,
) -> Result<Gradients> {
    if let Some(m) = &fwd.mask_rec {
        d_z_rec *= m;
    }
    if let Some(m) = &fwd.mask_pre {
        d_z_pre *= m;
    }

    let rec_experts = select_experts(&fwd.experts, Task::Rec);
    let pre_experts = select_experts(&fwd.experts, Task::Pre);
    let (d_rec_experts, d_alpha_rec) = fuse_backward(&d_z_rec, &rec_experts, &fwd.alpha_rec);
    let (d_pre_experts, d_alpha_pre) = fuse_backward(&d_z_pre, &pre_experts, &fwd.alpha_pre);

    let d_logits_rec = softmax_backward(&fwd.alpha_rec, &d_alpha_rec);
    let d_logits_pre = softmax_backward(&fwd.alpha_pre, &d_alpha_pre);
    let (d_w_rec, d_x_rec) = gate_backward(&params.w_rec, &fwd.x, &d_logits_rec);
    let (d_w_pre, d_x_pre) = gate_backward(&params.w_pre, &fwd.x, &d_logits_pre);

    let [d_t_ui, mut d_s_ui, mut d_s_phi] = d_rec_experts;
    let [d_t_phi, d_s_ui_pre, d_s_phi_pre] = d_pre_experts;
    d_s_ui += &d_s_ui_pre;
    d_s_phi += &d_s_phi_pre;

    let mut d_e_shared = ctx.prop_ui.backprop(&d_s_ui)?;
    d_e_shared += &ctx.prop_phi.backprop(&d_s_phi)?;
    let mut d_e_task = ctx.prop_ui.backprop(&d_t_ui)?;
    d_e_task += &ctx.prop_phi.backprop(&d_t_phi)?;

    let d_x = d_x_rec + d_x_pre;
    match cfg.gate_input {
        GateInput::Shared => d_e_shared += &d_x,
        GateInput::Task => d_e_task += &d_x,
    }

    if let Some(m) = &fwd.mask_shared {
        d_e_shared *= m;
    }
    if let Some(m) = &fwd.mask_task {
        d_e_task *= m;
    }

    Ok(Gradients { d_e_shared, d_e_task, d_w_rec, d_w_pre, d_h_rec, d_h_pre })
}

/// Per-batch component losses (unweighted) and the weighted total.
#[derive(Clone, Copy, Debug, Default)]
pub struct BatchLosses {
    pub total: f64,
    pub rec: f64,
    pub pre: f64,
    pub con: f64,
}

/// Evaluate the joint objective on one user batch and return its gradients
/// for every parameter tensor. Pure in the parameters — the finite-difference
/// harness drives this directly.
pub fn batch_loss_and_grads(
    params: &ModelParams,
    ctx: &TrainContext,
    cfg: &TrainConfig,
    fwd: &Forward,
    batch: &[usize],
    pairs: &ContrastivePairs,
) -> Result<(BatchLosses, Gradients)> {
    let h_rec = params.h_rec.as_slice().expect("contiguous");
    let h_pre = params.h_pre.as_slice().expect("contiguous");
    let rec = loss_rec(&fwd.z_rec, h_rec, batch, &ctx.train, &cfg.weights)?;
    let pre = loss_pre(&fwd.z_pre, h_pre, batch, &ctx.link, &cfg.weights)?;
    let con = loss_con(&fwd.z_rec, &fwd.z_pre, pairs, cfg.weights.tau)?;
    let total = loss_total(rec, pre, con, &cfg.weights);
    let losses =
        BatchLosses { total: total.value, rec: total.rec, pre: total.pre, con: total.con };
    if !losses.total.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite batch loss: rec {} pre {} con {}",
            losses.rec, losses.pre, losses.con
        )));
    }
    let grads = backward(
        params,
        ctx,
        cfg,
        fwd,
        total.d_z_rec,
        total.d_z_pre,
        total.d_h_rec,
        total.d_h_pre,
    )?;
    Ok((losses, grads))
}

/// Mean per-batch losses of one epoch.
#[derive(Clone, Copy, Debug, Default)]
pub struct EpochStats {
    pub loss_rec: f64,
    pub loss_pre: f64,
    pub loss_con: f64,
    pub loss_total: f64,
    pub batches: usize,
    pub skipped_anchors: usize,
}

/// One pass over all users in shuffled batches, with one optimizer step per
/// batch. All randomness (shuffle, negatives, dropout) derives from the
/// config seed and the epoch index.
pub fn train_epoch(
    params: &mut ModelParams,
    opt: &mut Adam,
    ctx: &TrainContext,
    cfg: &TrainConfig,
    epoch: u64,
) -> Result<EpochStats> {
    let mut order: Vec<usize> = (0..ctx.n_users).collect();
    order.shuffle(&mut derive_indexed(cfg.seed, Stream::Shuffle, epoch, 0));
    let mut stats = EpochStats::default();
    for (b_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
        let diag = |e: Error| {
            Error::Numeric(format!(
                "epoch {epoch} batch {b_idx} (users {:?}{}): {e}",
                &batch[..batch.len().min(8)],
                if batch.len() > 8 { ", …" } else { "" }
            ))
        };
        let pairs = build_pairs(
            &ctx.link,
            &ctx.link_t,
            &ctx.train,
            batch,
            cfg.n_neg,
            cfg.weights.theta_neg,
            derive_seed(cfg.seed, Stream::Negatives, epoch, b_idx as u64),
        )
        .map_err(&diag)?;
        let mut drop_rng = derive_indexed(cfg.seed, Stream::Dropout, epoch, b_idx as u64);
        let fwd = forward(params, ctx, cfg, Some(&mut drop_rng)).map_err(&diag)?;
        let (losses, grads) =
            batch_loss_and_grads(params, ctx, cfg, &fwd, batch, &pairs).map_err(&diag)?;
        opt.step(&mut params.flat_mut(), &grads.flat());
        stats.loss_rec += losses.rec;
        stats.loss_pre += losses.pre;
        stats.loss_con += losses.con;
        stats.loss_total += losses.total;
        stats.batches += 1;
        stats.skipped_anchors += pairs.skipped;
    }
    params.assert_finite().map_err(|e| {
        Error::Numeric(format!("epoch {epoch}: parameters diverged after update: {e}"))
    })?;
    let n = stats.batches.max(1) as f64;
    stats.loss_rec /= n;
    stats.loss_pre /= n;
    stats.loss_con /= n;
    stats.loss_total /= n;
    Ok(stats)
}

/// Validation Recall@K and NDCG@K on the current parameters.
pub fn validation_metrics(
    params: &ModelParams,
    ctx: &TrainContext,
    cfg: &TrainConfig,
    split: &InteractionSplit,
) -> Result<(f64, f64)> {
    let fwd = forward(params, ctx, cfg, None)?;
    let h_rec = params.h_rec.as_slice().expect("contiguous");
    let r = rank_for_split(&fwd.z_rec, h_rec, split, EvalSplit::Validation, cfg.eval_k)?;
    Ok((recall_at_k(&r, cfg.eval_k)?, ndcg_at_k(&r, cfg.eval_k)?))
}

/// Strict-improvement early stopping: stop once the metric has failed to
/// improve for `patience` consecutive epochs (at least one).
#[derive(Clone, Copy, Debug)]
pub struct EarlyStopper {
    best: f64,
    since_best: usize,
    patience: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> EarlyStopper {
        EarlyStopper { best: f64::NEG_INFINITY, since_best: 0, patience }
    }

    /// Feed one epoch's metric; returns whether it improved on the best.
    pub fn observe(&mut self, metric: f64) -> bool {
        if metric > self.best {
            self.best = metric;
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_best >= self.patience.max(1)
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

/// One row of the training history.
#[derive(Clone, Copy, Debug)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss_rec: f64,
    pub loss_pre: f64,
    pub loss_con: f64,
    pub val_recall: f64,
    pub val_ndcg: f64,
}

pub struct FitResult {
    /// The best-validation snapshot, not the final state.
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_recall: f64,
}

/// Train until validation Recall@K stops improving for `patience` epochs or
/// `max_epochs` is reached; returns the best-validation snapshot.
/// `start_epoch` continues the epoch numbering of a resumed run.
pub fn fit(
    mut params: ModelParams,
    ctx: &TrainContext,
    split: &InteractionSplit,
    cfg: &TrainConfig,
    start_epoch: usize,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<FitResult> {
    cfg.validate()?;
    if split.valid.is_empty() {
        return Err(Error::Empty("validation split is empty; cannot early-stop".into()));
    }
    let mut opt = Adam::new(cfg.learning_rate, &params.flat_lens());
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best = params.clone();
    let mut best_epoch = start_epoch;
    let mut history = Vec::new();
    for epoch in start_epoch..cfg.max_epochs {
        let stats = train_epoch(&mut params, &mut opt, ctx, cfg, epoch as u64)?;
        let (val_recall, val_ndcg) = validation_metrics(&params, ctx, cfg, split)?;
        let record = EpochRecord {
            epoch,
            loss_rec: stats.loss_rec,
            loss_pre: stats.loss_pre,
            loss_con: stats.loss_con,
            val_recall,
            val_ndcg,
        };
        on_epoch(&record);
        history.push(record);
        if stopper.observe(val_recall) {
            best = params.clone();
            best_epoch = epoch;
        } else if stopper.should_stop() {
            break;
        }
    }
    Ok(FitResult { params: best, history, best_epoch, best_recall: stopper.best() })
}

/// Ablation variants: the full objective, the objective without the
/// contrastive task, and the recommendation loss alone (the contrastive
/// task builds on the predictive one, so removing the predictive task
/// removes both).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Full,
    NoContrastive,
    RecOnly,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::NoContrastive, Variant::RecOnly];

    pub fn apply(&self, w: &LossWeights) -> LossWeights {
        match self {
            Variant::Full => *w,
            Variant::NoContrastive => LossWeights { lambda_con: 0.0, ..*w },
            Variant::RecOnly => LossWeights { lambda_pre: 0.0, lambda_con: 0.0, ..*w },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoContrastive => "no-contrastive",
            Variant::RecOnly => "rec-only",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Variant> {
        match s {
            "full" => Ok(Variant::Full),
            "no-contrastive" => Ok(Variant::NoContrastive),
            "rec-only" => Ok(Variant::RecOnly),
            other => Err(Error::Config(format!("unknown ablation variant '{other}'"))),
        }
    }
}

/// Fit one ablation variant from a fresh seed-identical initialization, so
/// variants differ only in their loss weights.
pub fn run_ablation(
    ctx: &TrainContext,
    split: &InteractionSplit,
    cfg: &TrainConfig,
    variant: Variant,
) -> Result<FitResult> {
    let mut vcfg = cfg.clone();
    vcfg.weights = variant.apply(&cfg.weights);
    let params = init_params(&vcfg, ctx.n_nodes())?;
    fit(params, ctx, split, &vcfg, 0, |_| {})
}
