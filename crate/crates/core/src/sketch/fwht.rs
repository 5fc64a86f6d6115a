use crate::error::{Error, Result};

/// In-place fast Walsh-Hadamard transform.
///
/// Replaces `v` by `H v`, where `H` is the unnormalised Sylvester-ordered
/// Hadamard matrix of order `v.len()` (entries ±1). Runs in `O(m log m)`.
/// Applying it twice multiplies the input by `m`.
pub fn fwht_inplace(v: &mut [f64]) -> Result<()> {
    let m = v.len();
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::Contract(format!("FWHT length {m} is not a power of two")));
    }
    let mut h = 1;
    while h < m {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// Entry `(row, col)` of the Sylvester Hadamard matrix: `(-1)^popcount(row & col)`.
#[inline]
pub(crate) fn hadamard_entry(row: usize, col: usize) -> f64 {
    if (row & col).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}
