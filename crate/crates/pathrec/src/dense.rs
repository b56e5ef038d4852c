//! Fixed-order dense kernels.
//!
//! Accumulation runs over eight lanes combined in a fixed tree, so a dot
//! product over the same slices gives bitwise-identical results everywhere
//! it is called — the evaluation scorer relies on matching the training-time
//! scoring head exactly.

/// Dot product with a fixed 8-lane accumulation order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot: length mismatch");
    let mut lanes = [0.0f64; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let off = c * 8;
        for l in 0..8 {
            lanes[l] += a[off + l] * b[off + l];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    let s01 = lanes[0] + lanes[1];
    let s23 = lanes[2] + lanes[3];
    let s45 = lanes[4] + lanes[5];
    let s67 = lanes[6] + lanes[7];
    ((s01 + s23) + (s45 + s67)) + tail
}

/// y += alpha * x, elementwise.
pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    assert_eq!(y.len(), x.len(), "axpy: length mismatch");
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// out = a ⊙ b, elementwise product.
pub fn hadamard_into(out: &mut [f64], a: &[f64], b: &[f64]) {
    assert_eq!(out.len(), a.len());
    assert_eq!(a.len(), b.len());
    for i in 0..out.len() {
        out[i] = a[i] * b[i];
    }
}

/// Euclidean norm with the same fixed accumulation order as `dot`.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_reference() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64) * 0.25 - 3.0).collect();
        let b: Vec<f64> = (0..37).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let reference: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - reference).abs() < 1e-12);
    }

    #[test]
    fn dot_is_reproducible() {
        let a = vec![0.1; 1000];
        let b = vec![0.3; 1000];
        assert_eq!(dot(&a, &b).to_bits(), dot(&a, &b).to_bits());
    }

    #[test]
    fn axpy_accumulates() {
        let mut y = vec![1.0, 2.0];
        axpy(&mut y, 0.5, &[4.0, -2.0]);
        assert_eq!(y, vec![3.0, 1.0]);
    }
}
