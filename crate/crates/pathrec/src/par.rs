//! Internal parallel helpers.
//!
//! Work is always split into disjoint index ranges whose results land at
//! fixed positions, so output is identical at any thread count; thread count
//! only changes how the ranges are interleaved in time.

/// Caps the process-wide worker pool at `n` threads. Call once, before any
/// parallel work; later calls (or calls after the pool has already started)
/// keep the existing pool. Without the `parallel` feature everything runs on
/// one thread and `n` is ignored.
pub fn configure_threads(n: usize) -> crate::Result<()> {
    if n == 0 {
        return Err(crate::error::Error::Config(
            "thread count must be at least 1".into(),
        ));
    }
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs `f(start_index, chunk)` over disjoint chunks of `items`.
#[cfg(feature = "parallel")]
pub(crate) fn chunked_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    use rayon::prelude::*;
    let len = items.len();
    if len == 0 {
        return;
    }
    let threads = rayon::current_num_threads().max(1);
    let chunk = len.div_ceil(threads);
    items
        .par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(ci, slice)| f(ci * chunk, slice));
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn chunked_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    if !items.is_empty() {
        f(0, items);
    }
}
