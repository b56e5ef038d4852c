//! The three training objectives and their exact analytic gradients.
//!
//! Recommendation: a non-sampling weighted squared loss over a user batch ×
//! the full item catalog, rearranged so the all-pairs negative term collapses
//! into a d×d product of Gram matrices instead of an O(|B|·n·d) sweep.
//!
//! Prediction: squared error between scored link-scores M̂ and the stored M,
//! decomposed the same way (the all-pairs Σ M̂² term reuses the Gram trick).
//!
//! Contrastive: per-anchor InfoNCE over cosine similarities between the two
//! task views, with positives taken from link-score-1 pairs and negatives
//! sampled from low-link-score pairs. The denominator holds negatives only,
//! so the loss may legitimately go negative.

use crate::dense::{dot, hadamard_into, norm};
use crate::error::Error;
use crate::metapath::LinkScoreMatrix;
use crate::rng::{derive_indexed, Stream};
use crate::sparse::SparseMatrix;
use crate::Result;
use ndarray::{s, Array1, Array2};
use rand::Rng;

/// Loss weighting knobs, fixed per dataset.
#[derive(Clone, Copy, Debug)]
pub struct LossWeights {
    /// Weight of observed (positive) interactions.
    pub c_plus: f64,
    /// Weight of unobserved pairs treated as negatives.
    pub c_minus: f64,
    /// Weight of the predictive task in the total loss.
    pub lambda_pre: f64,
    /// Weight of the contrastive task in the total loss.
    pub lambda_con: f64,
    /// Contrastive temperature.
    pub tau: f64,
    /// Link-score ceiling for contrastive negative eligibility.
    pub theta_neg: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            c_plus: 1.0,
            c_minus: 0.15,
            lambda_pre: 0.3,
            lambda_con: 5e-4,
            tau: 0.2,
            theta_neg: 0.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.c_plus < 0.0 || self.c_minus < 0.0 {
            return Err(Error::Config("interaction weights must be non-negative".into()));
        }
        if self.lambda_pre < 0.0 || self.lambda_con < 0.0 {
            return Err(Error::Config("loss weights must be non-negative".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.tau)));
        }
        if !(0.0..1.0).contains(&self.theta_neg) {
            return Err(Error::Config(format!(
                "negative threshold {} outside [0, 1)",
                self.theta_neg
            )));
        }
        Ok(())
    }
}

fn check_score_args(
    z: &Array2<f64>,
    h: &[f64],
    n_users: usize,
    u: usize,
    v: usize,
) -> Result<()> {
    let (rows, d) = z.dim();
    if h.len() != d {
        return Err(Error::Shape(format!("head has {} entries for d={d}", h.len())));
    }
    if u >= n_users {
        return Err(Error::Index(format!("user {u} >= {n_users}")));
    }
    if n_users + v >= rows {
        return Err(Error::Index(format!("item {v} >= {}", rows - n_users)));
    }
    Ok(())
}

fn score_at(z: &Array2<f64>, h: &[f64], row_p: usize, row_q: usize, scratch: &mut [f64]) -> f64 {
    let d = z.ncols();
    let zs = z.as_slice().expect("row-major");
    hadamard_into(scratch, h, &zs[row_p * d..(row_p + 1) * d]);
    dot(scratch, &zs[row_q * d..(row_q + 1) * d])
}

/// R̂_uv = hᵀ(p_u ⊙ q_v) on the recommendation representation. Uses the same
/// kernel as the batched evaluation scorer, so per-pair scores and ranking
/// scores agree bitwise.
pub fn score_rec(z_rec: &Array2<f64>, h_rec: &[f64], n_users: usize, u: usize, v: usize) -> Result<f64> {
    check_score_args(z_rec, h_rec, n_users, u, v)?;
    let mut scratch = vec![0.0; z_rec.ncols()];
    Ok(score_at(z_rec, h_rec, u, n_users + v, &mut scratch))
}

/// M̂_uv = hᵀ(p_u ⊙ q_v) on the prediction representation.
pub fn score_pre(z_pre: &Array2<f64>, h_pre: &[f64], n_users: usize, u: usize, v: usize) -> Result<f64> {
    check_score_args(z_pre, h_pre, n_users, u, v)?;
    let mut scratch = vec![0.0; z_pre.ncols()];
    Ok(score_at(z_pre, h_pre, u, n_users + v, &mut scratch))
}

/// Loss value with gradients for the task representation and its head.
#[derive(Clone, Debug)]
pub struct LossGrad {
    pub value: f64,
    /// Gradient w.r.t. the full (m+n)×d task representation; rows outside the
    /// batch users / touched items are zero.
    pub d_z: Array2<f64>,
    pub d_h: Array1<f64>,
}

fn check_loss_args(z: &Array2<f64>, h: &[f64], batch: &[usize], labels: &SparseMatrix) -> Result<()> {
    let (rows, d) = z.dim();
    let (m, n) = (labels.n_rows(), labels.n_cols());
    if rows != m + n {
        return Err(Error::Shape(format!(
            "representation has {rows} rows for {m} users + {n} items"
        )));
    }
    if h.len() != d {
        return Err(Error::Shape(format!("head has {} entries for d={d}", h.len())));
    }
    if batch.is_empty() {
        return Err(Error::Empty("empty user batch".into()));
    }
    if let Some(&u) = batch.iter().find(|&&u| u >= m) {
        return Err(Error::Index(format!("batch user {u} >= {m}")));
    }
    Ok(())
}

/// Non-sampling recommendation loss over a user batch and the whole catalog:
///
///   Σ_{u∈B} Σ_{v∈I⁺_u} ((c⁺−c⁻)R̂² − 2c⁺R̂)  +  Σ_ij A_ij B_ij h_i h_j
///
/// with A = P_Bᵀ P_B and B = c⁻ Qᵀ Q, equal to the naive all-pairs weighted
/// squared loss minus the constant Σ_pos c⁺.
pub fn loss_rec(
    z_rec: &Array2<f64>,
    h_rec: &[f64],
    batch: &[usize],
    r: &SparseMatrix,
    w: &LossWeights,
) -> Result<LossGrad> {
    check_loss_args(z_rec, h_rec, batch, r)?;
    weighted_square_loss(z_rec, h_rec, batch, r, w.c_plus, w.c_minus, Mode::Interactions)
}

/// Predictive loss Σ_{u∈B} Σ_{v∈I} (M_uv − M̂_uv)², decomposed as
/// Σ_all M̂² (Gram trick, weight 1) + Σ_stored (M² − 2·M·M̂).
pub fn loss_pre(
    z_pre: &Array2<f64>,
    h_pre: &[f64],
    batch: &[usize],
    m: &LinkScoreMatrix,
    w: &LossWeights,
) -> Result<LossGrad> {
    let _ = w;
    check_loss_args(z_pre, h_pre, batch, &m.scores)?;
    weighted_square_loss(z_pre, h_pre, batch, &m.scores, 1.0, 1.0, Mode::LinkScores)
}

enum Mode {
    /// Binary labels, weight c⁺ on stored pairs, c⁻ elsewhere; the constant
    /// Σ_pos c⁺ is dropped (non-sampling form).
    Interactions,
    /// Real labels, uniform weight; the constant Σ M² is kept, so the value
    /// is the exact squared error.
    LinkScores,
}

/// Shared core of the two squared objectives. Both are
///   Σ_{u∈B} Σ_{v∈I} c_v (label_uv − ŷ_uv)²   (+/− a constant)
/// with labels sparse, evaluated as a sparse correction plus the all-pairs
/// c⁻ŷ² term computed through d×d Grams.
fn weighted_square_loss(
    z: &Array2<f64>,
    h: &[f64],
    batch: &[usize],
    labels: &SparseMatrix,
    c_plus: f64,
    c_minus: f64,
    mode: Mode,
) -> Result<LossGrad> {
    let (rows, d) = z.dim();
    let n_users = labels.n_rows();
    let zs = z.as_slice().expect("row-major");

    // Gather the batch rows P and view the item block Q.
    let mut p = Array2::<f64>::zeros((batch.len(), d));
    for (bi, &u) in batch.iter().enumerate() {
        p.row_mut(bi).assign(&z.row(u));
    }
    let q = z.slice(s![n_users.., ..]);

    let a_gram = p.t().dot(&p);
    let q_gram = q.t().dot(&q);

    // All-pairs term c⁻ Σ_ij A_ij Q_ij h_i h_j plus the Gram-side gradients.
    let mut g_p = Array2::<f64>::zeros((d, d)); // q_gram ⊙ hhᵀ
    let mut g_q = Array2::<f64>::zeros((d, d)); // a_gram ⊙ hhᵀ
    let mut d_h = Array1::<f64>::zeros(d);
    let mut all_pairs = 0.0;
    for i in 0..d {
        let hi = h[i];
        let mut dh_i = 0.0;
        for j in 0..d {
            let hh = hi * h[j];
            g_p[[i, j]] = q_gram[[i, j]] * hh;
            g_q[[i, j]] = a_gram[[i, j]] * hh;
            let aq = a_gram[[i, j]] * q_gram[[i, j]];
            all_pairs += aq * hh;
            dh_i += aq * h[j];
        }
        d_h[i] = 2.0 * c_minus * dh_i;
    }
    all_pairs *= c_minus;

    let mut d_p = p.dot(&g_p);
    d_p *= 2.0 * c_minus;
    let mut d_q = q.dot(&g_q);
    d_q *= 2.0 * c_minus;

    // Sparse correction over stored labels of the batch rows.
    let mut stored = 0.0;
    let mut hp = vec![0.0; d];
    {
        let d_ps = d_p.as_slice_mut().unwrap();
        let d_qs = d_q.as_slice_mut().unwrap();
        let ps = p.as_slice().unwrap();
        for (bi, &u) in batch.iter().enumerate() {
            let p_row = &ps[bi * d..(bi + 1) * d];
            hadamard_into(&mut hp, h, p_row);
            let (cols, vals) = labels.row(u);
            for (&v, &label) in cols.iter().zip(vals) {
                let q_row = &zs[(n_users + v) * d..(n_users + v + 1) * d];
                let y = dot(&hp, q_row);
                let coef = match mode {
                    // d/dŷ of (c⁺−c⁻)ŷ² − 2c⁺ŷ
                    Mode::Interactions => {
                        stored += (c_plus - c_minus) * y * y - 2.0 * c_plus * y;
                        2.0 * (c_plus - c_minus) * y - 2.0 * c_plus
                    }
                    // d/dŷ of label² − 2·label·ŷ
                    Mode::LinkScores => {
                        stored += label * (label - 2.0 * y);
                        -2.0 * label
                    }
                };
                let d_p_row = &mut d_ps[bi * d..(bi + 1) * d];
                let d_q_row = &mut d_qs[v * d..(v + 1) * d];
                for i in 0..d {
                    d_p_row[i] += coef * h[i] * q_row[i];
                    d_q_row[i] += coef * hp[i];
                    d_h[i] += coef * p_row[i] * q_row[i];
                }
            }
        }
    }

    let value = all_pairs + stored;
    if !value.is_finite() {
        return Err(Error::Numeric(format!("squared loss diverged to {value}")));
    }

    let mut d_z = Array2::<f64>::zeros((rows, d));
    for (bi, &u) in batch.iter().enumerate() {
        let mut row = d_z.row_mut(u);
        row += &d_p.row(bi);
    }
    {
        let mut item_block = d_z.slice_mut(s![n_users.., ..]);
        item_block += &d_q;
    }
    Ok(LossGrad { value, d_z, d_h })
}

/// Naive all-pairs oracle for the recommendation loss:
/// Σ_{u∈B} Σ_{v∈I} c_v (r_uv − R̂_uv)² with c_v = c⁺ on positives, c⁻ else.
pub fn loss_rec_naive(
    z_rec: &Array2<f64>,
    h_rec: &[f64],
    batch: &[usize],
    r: &SparseMatrix,
    w: &LossWeights,
) -> Result<f64> {
    check_loss_args(z_rec, h_rec, batch, r)?;
    let n_users = r.n_rows();
    let mut scratch = vec![0.0; z_rec.ncols()];
    let mut total = 0.0;
    for &u in batch {
        for v in 0..r.n_cols() {
            let y = score_at(z_rec, h_rec, u, n_users + v, &mut scratch);
            let (label, c) =
                if r.get(u, v) != 0.0 { (1.0, w.c_plus) } else { (0.0, w.c_minus) };
            total += c * (label - y) * (label - y);
        }
    }
    Ok(total)
}

/// Naive all-pairs oracle for the predictive loss: Σ_{u∈B} Σ_{v∈I} (M−M̂)².
pub fn loss_pre_naive(
    z_pre: &Array2<f64>,
    h_pre: &[f64],
    batch: &[usize],
    m: &LinkScoreMatrix,
) -> Result<f64> {
    check_loss_args(z_pre, h_pre, batch, &m.scores)?;
    let n_users = m.scores.n_rows();
    let mut scratch = vec![0.0; z_pre.ncols()];
    let mut total = 0.0;
    for &u in batch {
        for v in 0..m.scores.n_cols() {
            let y = score_at(z_pre, h_pre, u, n_users + v, &mut scratch);
            let label = m.scores.get(u, v);
            total += (label - y) * (label - y);
        }
    }
    Ok(total)
}

/// One contrastive anchor: a row of Z^rec with partner rows in Z^pre.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Anchor {
    pub row: usize,
    /// Partner rows; always starts with the anchor's own cross-view row.
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct ContrastivePairs {
    pub anchors: Vec<Anchor>,
    /// Anchors dropped because they had no eligible negatives.
    pub skipped: usize,
}

/// Assembles the contrastive pair sets for one batch: anchors are the batch
/// users plus every item incident to a batch user's train interaction;
/// positives are the anchor's own cross-view row plus cross-type rows with
/// link-score exactly 1; negatives are `n_neg` cross-type rows with
/// link-score ≤ θ, sampled uniformly without replacement.
pub fn build_pairs(
    m: &LinkScoreMatrix,
    m_t: &SparseMatrix,
    r_train: &SparseMatrix,
    batch: &[usize],
    n_neg: usize,
    theta_neg: f64,
    seed: u64,
) -> Result<ContrastivePairs> {
    if n_neg == 0 {
        return Err(Error::Config("need at least one contrastive negative".into()));
    }
    let scores = &m.scores;
    let (n_users, n_items) = (scores.n_rows(), scores.n_cols());
    if m_t.n_rows() != n_items || m_t.n_cols() != n_users {
        return Err(Error::Shape("link-score transpose has wrong shape".into()));
    }
    let mut rng = derive_indexed(seed, Stream::Negatives, 0, 0);
    let mut out = ContrastivePairs::default();

    let mut item_anchors: Vec<usize> = Vec::new();
    for &u in batch {
        let (items, _) = r_train.row(u);
        item_anchors.extend_from_slice(items);
    }
    item_anchors.sort_unstable();
    item_anchors.dedup();

    // (anchor row, its link-score row, partner row offset, partner count)
    let user_side = batch.iter().map(|&u| (u, u, n_users, n_items, scores));
    let item_side = item_anchors.iter().map(|&v| (n_users + v, v, 0, n_users, m_t));
    for (row, score_row, partner_offset, n_partners, mat) in user_side.chain(item_side) {
        let (cols, vals) = mat.row(score_row);
        let over: usize = vals.iter().filter(|&&s| s > theta_neg).count();
        let eligible = n_partners - over;
        if eligible == 0 {
            out.skipped += 1;
            continue;
        }
        let mut positives = vec![row];
        positives.extend(
            cols.iter().zip(vals).filter(|&(_, &s)| s == 1.0).map(|(&c, _)| partner_offset + c),
        );
        let mut negatives = Vec::with_capacity(n_neg.min(eligible));
        if eligible <= n_neg {
            // take every eligible partner, ascending
            for c in 0..n_partners {
                if mat.get(score_row, c) <= theta_neg {
                    negatives.push(partner_offset + c);
                }
            }
        } else {
            while negatives.len() < n_neg {
                let c = rng.random_range(0..n_partners);
                if mat.get(score_row, c) > theta_neg {
                    continue;
                }
                let candidate = partner_offset + c;
                if !negatives.contains(&candidate) {
                    negatives.push(candidate);
                }
            }
        }
        out.anchors.push(Anchor { row, positives, negatives });
    }
    Ok(out)
}

/// Contrastive loss value with gradients for both task representations.
#[derive(Clone, Debug)]
pub struct ConGrad {
    pub value: f64,
    pub d_z_rec: Array2<f64>,
    pub d_z_pre: Array2<f64>,
}

/// Per-anchor InfoNCE with cosine similarity:
/// Σ_anchors Σ_pos [ −s(a, p)/τ + log Σ_neg exp(s(a, ñ)/τ) ].
/// Zero-norm rows participate with similarity 0 and contribute no gradient.
pub fn loss_con(
    z_rec: &Array2<f64>,
    z_pre: &Array2<f64>,
    pairs: &ContrastivePairs,
    tau: f64,
) -> Result<ConGrad> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!("temperature must be positive, got {tau}")));
    }
    if z_rec.dim() != z_pre.dim() {
        return Err(Error::Shape(format!(
            "view shapes differ: {:?} vs {:?}",
            z_rec.dim(),
            z_pre.dim()
        )));
    }
    let (rows, d) = z_rec.dim();
    let a_s = z_rec.as_slice().expect("row-major");
    let b_s = z_pre.as_slice().expect("row-major");
    let mut d_a = Array2::<f64>::zeros((rows, d));
    let mut d_b = Array2::<f64>::zeros((rows, d));
    let d_a_s = d_a.as_slice_mut().unwrap();
    let d_b_s = d_b.as_slice_mut().unwrap();
    let mut value = 0.0;

    fn row<'a>(s: &'a [f64], d: usize, i: usize) -> &'a [f64] {
        &s[i * d..(i + 1) * d]
    }
    // cosine similarity plus the pieces its gradient needs
    let cosine = |a: &[f64], b: &[f64], na: f64, nb: f64| -> f64 {
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot(a, b) / (na * nb)
        }
    };

    for anchor in &pairs.anchors {
        if anchor.negatives.is_empty() {
            continue;
        }
        let a = row(a_s, d, anchor.row);
        let na = norm(a);

        let mut neg_sims = Vec::with_capacity(anchor.negatives.len());
        let mut max_logit = f64::NEG_INFINITY;
        for &nrow in &anchor.negatives {
            let b = row(b_s, d, nrow);
            let s = cosine(a, b, na, norm(b));
            max_logit = max_logit.max(s / tau);
            neg_sims.push(s);
        }
        let mut exp_sum = 0.0;
        for &s in &neg_sims {
            exp_sum += (s / tau - max_logit).exp();
        }
        let lse = max_logit + exp_sum.ln();
        let n_pos = anchor.positives.len() as f64;

        // accumulate gradient through one cosine pair
        let mut pair_grad = |prow: usize, s: f64, coef: f64| {
            let b = row(b_s, d, prow);
            let nb = norm(b);
            if na == 0.0 || nb == 0.0 {
                return;
            }
            let inv = 1.0 / (na * nb);
            let da = &mut d_a_s[anchor.row * d..(anchor.row + 1) * d];
            for i in 0..d {
                da[i] += coef * (b[i] * inv - s * a[i] / (na * na));
            }
            let db = &mut d_b_s[prow * d..(prow + 1) * d];
            for i in 0..d {
                db[i] += coef * (a[i] * inv - s * b[i] / (nb * nb));
            }
        };

        for &prow in &anchor.positives {
            let s = cosine(a, row(b_s, d, prow), na, norm(row(b_s, d, prow)));
            value += lse - s / tau;
            pair_grad(prow, s, -1.0 / tau);
        }
        for (&nrow, &s) in anchor.negatives.iter().zip(&neg_sims) {
            let softmax = (s / tau - max_logit).exp() / exp_sum;
            pair_grad(nrow, s, n_pos * softmax / tau);
        }
    }
    if !value.is_finite() {
        return Err(Error::Numeric(format!("contrastive loss diverged to {value}")));
    }
    Ok(ConGrad { value, d_z_rec: d_a, d_z_pre: d_b })
}

/// Weighted total with merged gradients:
/// L = L_rec + λ_pre·L_pre + λ_con·L_con.
#[derive(Clone, Debug)]
pub struct TotalLoss {
    pub value: f64,
    pub rec: f64,
    pub pre: f64,
    pub con: f64,
    pub d_z_rec: Array2<f64>,
    pub d_z_pre: Array2<f64>,
    pub d_h_rec: Array1<f64>,
    pub d_h_pre: Array1<f64>,
}

pub fn loss_total(rec: LossGrad, pre: LossGrad, con: ConGrad, w: &LossWeights) -> TotalLoss {
    let value = rec.value + w.lambda_pre * pre.value + w.lambda_con * con.value;
    let mut d_z_rec = rec.d_z;
    d_z_rec.scaled_add(w.lambda_con, &con.d_z_rec);
    let mut d_z_pre = con.d_z_pre;
    d_z_pre *= w.lambda_con;
    d_z_pre.scaled_add(w.lambda_pre, &pre.d_z);
    let mut d_h_pre = pre.d_h;
    d_h_pre *= w.lambda_pre;
    TotalLoss {
        value,
        rec: rec.value,
        pre: pre.value,
        con: con.value,
        d_z_rec,
        d_z_pre,
        d_h_rec: rec.d_h,
        d_h_pre,
    }
}
