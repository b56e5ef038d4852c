//! Gated expert fusion: each task combines one task-specific expert with the
//! two shared experts through a per-node softmax gate.
//!
//! Forward: α = softmax(x·Wᵀ) rowwise, z_i = Σ_k α_ik · expert_k[i].
//! Every backward helper here is the exact adjoint of its forward twin.

use crate::dense::dot;
use crate::error::Error;
use crate::par::chunked_mut;
use crate::Result;
use ndarray::{Array2, Axis};

/// Number of experts each gate mixes: one task-specific plus two shared.
pub const N_EXPERTS: usize = 3;

/// The four propagated expert outputs, all (m+n)×d.
#[derive(Clone, Debug)]
pub struct ExpertOutputs {
    /// Shared embedding over the interaction graph.
    pub s_ui: Array2<f64>,
    /// Shared embedding over the meta-path graph.
    pub s_path: Array2<f64>,
    /// Task embedding over the interaction graph (recommendation expert).
    pub t_ui: Array2<f64>,
    /// Task embedding over the meta-path graph (prediction expert).
    pub t_path: Array2<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    /// Recommendation head.
    Rec,
    /// Link-score prediction head.
    Pre,
}

/// Expert list for a task: the task-specific expert first, then the shared
/// pair. The rec task never sees the Φ-graph task expert and vice versa.
pub fn select_experts(experts: &ExpertOutputs, task: Task) -> [&Array2<f64>; N_EXPERTS] {
    match task {
        Task::Rec => [&experts.t_ui, &experts.s_ui, &experts.s_path],
        Task::Pre => [&experts.t_path, &experts.s_ui, &experts.s_path],
    }
}

/// Per-node gate weights: softmax over the N_EXPERTS logits W·x_i.
/// `w` is N_EXPERTS×d, `x` is rows×d; output rows×N_EXPERTS, rows sum to 1.
pub fn gate_weights(w: &Array2<f64>, x: &Array2<f64>) -> Result<Array2<f64>> {
    if w.nrows() != N_EXPERTS || w.ncols() != x.ncols() {
        return Err(Error::Shape(format!(
            "gate matrix is {}x{}, expected {}x{}",
            w.nrows(),
            w.ncols(),
            N_EXPERTS,
            x.ncols()
        )));
    }
    let mut logits = x.dot(&w.t());
    for mut row in logits.axis_iter_mut(Axis(0)) {
        let max = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        if !max.is_finite() {
            return Err(Error::Numeric("non-finite gate logit".into()));
        }
        let mut sum = 0.0;
        for l in row.iter_mut() {
            *l = (*l - max).exp();
            sum += *l;
        }
        for l in row.iter_mut() {
            *l /= sum;
        }
    }
    Ok(logits)
}

/// z_i = Σ_k α_ik · expert_k[i].
pub fn fuse(experts: &[&Array2<f64>; N_EXPERTS], alpha: &Array2<f64>) -> Array2<f64> {
    let (rows, d) = experts[0].dim();
    debug_assert!(experts.iter().all(|e| e.dim() == (rows, d)));
    debug_assert_eq!(alpha.dim(), (rows, N_EXPERTS));
    let expert_slices: [&[f64]; N_EXPERTS] =
        std::array::from_fn(|k| experts[k].as_slice().expect("row-major"));
    let alpha_s = alpha.as_slice().expect("row-major");
    let mut out = Array2::<f64>::zeros((rows, d));
    {
        let out_flat = out.as_slice_mut().unwrap();
        let mut out_rows: Vec<&mut [f64]> = out_flat.chunks_mut(d.max(1)).collect();
        chunked_mut(&mut out_rows, |start, chunk| {
            for (i, out_row) in chunk.iter_mut().enumerate() {
                let r = start + i;
                for k in 0..N_EXPERTS {
                    let a = alpha_s[r * N_EXPERTS + k];
                    let er = &expert_slices[k][r * d..(r + 1) * d];
                    for (o, &e) in out_row.iter_mut().zip(er) {
                        *o += a * e;
                    }
                }
            }
        });
    }
    out
}

/// Adjoint of `fuse`: gradients for each expert and for the gate weights.
pub fn fuse_backward(
    d_out: &Array2<f64>,
    experts: &[&Array2<f64>; N_EXPERTS],
    alpha: &Array2<f64>,
) -> ([Array2<f64>; N_EXPERTS], Array2<f64>) {
    let (rows, d) = d_out.dim();
    let mut d_experts: [Array2<f64>; N_EXPERTS] =
        std::array::from_fn(|_| Array2::zeros((rows, d)));
    let mut d_alpha = Array2::<f64>::zeros((rows, N_EXPERTS));
    let d_out_s = d_out.as_slice().expect("row-major");
    let alpha_s = alpha.as_slice().expect("row-major");
    for k in 0..N_EXPERTS {
        let ek = experts[k].as_slice().expect("row-major");
        let dk = d_experts[k].as_slice_mut().unwrap();
        let da = d_alpha.as_slice_mut().unwrap();
        let mut rows_buf: Vec<(&mut [f64], &mut f64)> = dk
            .chunks_mut(d.max(1))
            .zip(da.chunks_mut(N_EXPERTS).map(|c| &mut c[k]))
            .map(|(a, b)| (a, b))
            .collect();
        chunked_mut(&mut rows_buf, |start, chunk| {
            for (i, (dk_row, da_rk)) in chunk.iter_mut().enumerate() {
                let r = start + i;
                let a = alpha_s[r * N_EXPERTS + k];
                let g = &d_out_s[r * d..(r + 1) * d];
                let e = &ek[r * d..(r + 1) * d];
                for (o, &gi) in dk_row.iter_mut().zip(g) {
                    *o = a * gi;
                }
                **da_rk = dot(g, e);
            }
        });
    }
    (d_experts, d_alpha)
}

/// Adjoint of the rowwise softmax: given α and ∂L/∂α, returns ∂L/∂logits.
pub fn softmax_backward(alpha: &Array2<f64>, d_alpha: &Array2<f64>) -> Array2<f64> {
    let mut d_logits = Array2::<f64>::zeros(alpha.dim());
    for ((mut out, a), da) in d_logits
        .axis_iter_mut(Axis(0))
        .zip(alpha.axis_iter(Axis(0)))
        .zip(d_alpha.axis_iter(Axis(0)))
    {
        let s: f64 = a.iter().zip(da.iter()).map(|(&x, &y)| x * y).sum();
        for k in 0..a.len() {
            out[k] = a[k] * (da[k] - s);
        }
    }
    d_logits
}

/// Adjoint of the gate's linear layer logits = x·Wᵀ:
/// returns (∂L/∂W, ∂L/∂x).
pub fn gate_backward(
    w: &Array2<f64>,
    x: &Array2<f64>,
    d_logits: &Array2<f64>,
) -> (Array2<f64>, Array2<f64>) {
    (d_logits.t().dot(x), d_logits.dot(w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive, Stream};
    use rand::Rng;

    fn rnd(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = derive(seed, Stream::Gates);
        Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
    }

    fn experts_fixture(rows: usize, d: usize) -> ExpertOutputs {
        ExpertOutputs {
            s_ui: rnd(rows, d, 1),
            s_path: rnd(rows, d, 2),
            t_ui: rnd(rows, d, 3),
            t_path: rnd(rows, d, 4),
        }
    }

    #[test]
    fn zero_gate_gives_uniform_weights() {
        let x = rnd(4, 3, 9);
        let alpha = gate_weights(&Array2::zeros((N_EXPERTS, 3)), &x).unwrap();
        for v in alpha.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gate_rows_sum_to_one() {
        let alpha = gate_weights(&rnd(N_EXPERTS, 5, 6), &rnd(7, 5, 7)).unwrap();
        for row in alpha.axis_iter(Axis(0)) {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }

    #[test]
    fn dominant_logit_takes_all() {
        // logits (50, 0, 0) → weight of expert 0 ≈ 1
        let mut w = Array2::zeros((N_EXPERTS, 1));
        w[[0, 0]] = 50.0;
        let x = Array2::from_elem((1, 1), 1.0);
        let alpha = gate_weights(&w, &x).unwrap();
        assert!(alpha[[0, 0]] > 1.0 - 1e-15);
    }

    #[test]
    fn non_finite_input_rejected() {
        let mut x = rnd(2, 3, 8);
        x[[1, 1]] = f64::NAN;
        assert!(matches!(
            gate_weights(&rnd(N_EXPERTS, 3, 9), &x),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn softmax_matches_direct_computation() {
        let w = rnd(N_EXPERTS, 4, 10);
        let x = rnd(6, 4, 11);
        let alpha = gate_weights(&w, &x).unwrap();
        let logits = x.dot(&w.t());
        for i in 0..6 {
            let denom: f64 = (0..N_EXPERTS).map(|k| logits[[i, k]].exp()).sum();
            for k in 0..N_EXPERTS {
                let direct = logits[[i, k]].exp() / denom;
                assert!((alpha[[i, k]] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_weights_average_experts() {
        let e = experts_fixture(5, 3);
        let sel = select_experts(&e, Task::Rec);
        let alpha = Array2::from_elem((5, N_EXPERTS), 1.0 / 3.0);
        let z = fuse(&sel, &alpha);
        let mean = (&e.t_ui + &e.s_ui + &e.s_path) / 3.0;
        let max_diff = z.iter().zip(mean.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max_diff < 1e-12);
    }

    #[test]
    fn one_hot_weights_select_single_expert() {
        let e = experts_fixture(4, 3);
        let sel = select_experts(&e, Task::Pre);
        let mut alpha = Array2::zeros((4, N_EXPERTS));
        for i in 0..4 {
            alpha[[i, 0]] = 1.0;
        }
        assert_eq!(fuse(&sel, &alpha), e.t_path);
    }

    #[test]
    fn fused_rows_stay_inside_expert_envelope() {
        let e = experts_fixture(6, 4);
        let sel = select_experts(&e, Task::Rec);
        let alpha = gate_weights(&rnd(N_EXPERTS, 4, 12), &rnd(6, 4, 13)).unwrap();
        let z = fuse(&sel, &alpha);
        for i in 0..6 {
            let zmax = (0..4).map(|j| z[[i, j]].abs()).fold(0.0, f64::max);
            let emax = sel
                .iter()
                .map(|ex| (0..4).map(|j| ex[[i, j]].abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            assert!(zmax <= emax + 1e-12);
        }
    }

    #[test]
    fn task_selection_isolates_task_experts() {
        let e = experts_fixture(3, 2);
        let rec = select_experts(&e, Task::Rec);
        assert!(std::ptr::eq(rec[0], &e.t_ui));
        assert!(rec.iter().all(|z| !std::ptr::eq(*z, &e.t_path)));
        let pre = select_experts(&e, Task::Pre);
        assert!(std::ptr::eq(pre[0], &e.t_path));
        assert!(pre.iter().all(|z| !std::ptr::eq(*z, &e.t_ui)));
        // shared pair is common to both
        assert!(std::ptr::eq(rec[1], pre[1]) && std::ptr::eq(rec[2], pre[2]));
    }

    #[test]
    fn gradients_match_finite_differences() {
        // loss = Σ G ⊙ fuse(experts, softmax(x·Wᵀ))
        let rows = 5;
        let d = 3;
        let e = experts_fixture(rows, d);
        let sel = select_experts(&e, Task::Rec);
        let g = rnd(rows, d, 20);
        let mut w = rnd(N_EXPERTS, d, 21);
        let mut x = rnd(rows, d, 22);

        let loss = |w: &Array2<f64>, x: &Array2<f64>, sel: &[&Array2<f64>; N_EXPERTS]| -> f64 {
            let alpha = gate_weights(w, x).unwrap();
            (&fuse(sel, &alpha) * &g).sum()
        };

        let alpha = gate_weights(&w, &x).unwrap();
        let (d_experts, d_alpha) = fuse_backward(&g, &sel, &alpha);
        let d_logits = softmax_backward(&alpha, &d_alpha);
        let (d_w, d_x) = gate_backward(&w, &x, &d_logits);

        let h = 1e-6;
        let check = |analytic: f64, fd: f64, what: &str| {
            let rel = (analytic - fd).abs() / fd.abs().max(1e-9);
            assert!(rel < 1e-5, "{what}: analytic {analytic}, fd {fd}, rel {rel}");
        };
        for idx in [(0usize, 0usize), (1, 2), (2, 1)] {
            let orig = w[idx];
            w[idx] = orig + h;
            let up = loss(&w, &x, &sel);
            w[idx] = orig - h;
            let down = loss(&w, &x, &sel);
            w[idx] = orig;
            check(d_w[idx], (up - down) / (2.0 * h), "dW");
        }
        for idx in [(0usize, 0usize), (3, 2), (4, 1)] {
            let orig = x[idx];
            x[idx] = orig + h;
            let up = loss(&w, &x, &sel);
            x[idx] = orig - h;
            let down = loss(&w, &x, &sel);
            x[idx] = orig;
            check(d_x[idx], (up - down) / (2.0 * h), "dx");
        }
        // expert gradient: perturb one entry of the task expert
        let mut e2 = e.clone();
        let idx = (2usize, 1usize);
        let orig = e2.t_ui[idx];
        e2.t_ui[idx] = orig + h;
        let up = loss(&w, &x, &select_experts(&e2, Task::Rec));
        e2.t_ui[idx] = orig - h;
        let down = loss(&w, &x, &select_experts(&e2, Task::Rec));
        check(d_experts[0][idx], (up - down) / (2.0 * h), "dExpert");
    }
}
