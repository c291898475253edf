//! Hard truncation to the largest-magnitude entries.

use std::cmp::Ordering;

use crate::C64;

/// Keeps the `k` entries of largest magnitude and zeroes the rest. Ties at the cut-off
/// magnitude keep the lowest indices.
pub fn sparsify(v: &[C64], k: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for i in top_k_indices(v, k) {
        out[i] = v[i];
    }
    out
}

/// Indices of the `k` largest magnitudes, ordering ties by index. Unsorted.
pub fn top_k_indices(v: &[C64], k: usize) -> Vec<usize> {
    let k = k.min(v.len());
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..v.len()).collect();
    if k < v.len() {
        let by_magnitude = |&a: &usize, &b: &usize| -> Ordering {
            v[b].norm_sqr().total_cmp(&v[a].norm_sqr()).then(a.cmp(&b))
        };
        idx.select_nth_unstable_by(k - 1, by_magnitude);
        idx.truncate(k);
    }
    idx
}
