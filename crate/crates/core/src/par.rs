//! Data-parallel primitives with a sequential fallback.
//!
//! Reductions split work into chunks of a fixed size that does not depend on
//! the number of threads and combine partial results in chunk order; scatters
//! apply contributions in item order.
//! Results are therefore bit-identical whether the `parallel` feature is on
//! or off and for any thread-pool size.

/// Items per work chunk for reductions and scatters.
pub const CHUNK: usize = 4096;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `out[i] = f(i)` for `i in 0..n`.
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Deterministic sum of `f(i)` over `0..n`.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = |c: usize| {
        let end = ((c + 1) * CHUNK).min(n);
        let mut acc = 0.0;
        for i in c * CHUNK..end {
            acc += f(i);
        }
        acc
    };
    map(chunks, partial).into_iter().sum()
}

/// Deterministic scatter-add: every item `i in 0..n_items` pushes
/// `(index, value)` contributions into an output buffer of length `n_out`.
///
/// Contributions are always added in item order, exactly as a sequential
/// loop would. In parallel, chunks of items record their contributions and
/// the records are then applied chunk by chunk.
pub fn scatter<F>(n_out: usize, n_items: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut dyn FnMut(usize, f64)) + Sync + Send,
{
    let mut out = vec![0.0; n_out];
    #[cfg(feature = "parallel")]
    if n_items > CHUNK && rayon::current_num_threads() > 1 {
        let records: Vec<Vec<(usize, f64)>> = map(n_items.div_ceil(CHUNK), |c| {
            let mut rec = Vec::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_items) {
                f(i, &mut |k, v| rec.push((k, v)));
            }
            rec
        });
        for rec in records {
            for (k, v) in rec {
                out[k] += v;
            }
        }
        return out;
    }
    for i in 0..n_items {
        f(i, &mut |k, v| out[k] += v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_matches_sequential_order() {
        let n_items = 3 * CHUNK + 17;
        let f = |i: usize, push: &mut dyn FnMut(usize, f64)| {
            push(i % 10, (i as f64).sin());
            push((i * 7) % 10, 0.5);
        };
        let mut seq = vec![0.0; 10];
        for i in 0..n_items {
            f(i, &mut |k, v| seq[k] += v);
        }
        assert_eq!(scatter(10, n_items, f), seq);
    }

    #[test]
    fn sum_is_chunk_ordered() {
        let n = 2 * CHUNK + 5;
        let s = sum(n, |i| 1.0 / (1.0 + i as f64));
        let mut expect = 0.0;
        for c in 0..n.div_ceil(CHUNK) {
            let mut acc = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc += 1.0 / (1.0 + i as f64);
            }
            expect += acc;
        }
        assert_eq!(s, expect);
    }
}
