//! Low-discrepancy start points.

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// Halton point `index` in the unit cube of dimension `shift.len()`, rotated
/// by `shift` modulo 1.
pub fn halton_point(index: u64, shift: &[f64]) -> Vec<f64> {
    assert!(shift.len() <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
    shift
        .iter()
        .zip(PRIMES)
        .map(|(s, b)| (radical_inverse(index, b) + s).fract())
        .collect()
}
