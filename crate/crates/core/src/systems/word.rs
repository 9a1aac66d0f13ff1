//! Shared machinery for subshifts with the metric `2^(-min{|n| : x_n ≠ y_n})`.

use rayon::prelude::*;

/// Disagreements farther out than this contribute less than the smallest
/// positive `f64`, so stopping here loses nothing after rounding.
pub(crate) const SYMBOLIC_DEPTH: i64 = 1075;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn hash2(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

pub(crate) fn hash_bytes(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = splitmix64(seed ^ bytes.len() as u64);
    for chunk in bytes.chunks(8) {
        let mut w = 0u64;
        for (i, b) in chunk.iter().enumerate() {
            w |= (*b as u64) << (8 * i);
        }
        h = hash2(h, w);
    }
    h
}

/// `2^(-k)` exactly, including the subnormal range; `0` beyond it.
pub(crate) fn pow2_neg(k: i64) -> f64 {
    if k <= 0 {
        1.0
    } else if k <= 1022 {
        f64::from_bits(((1023 - k) as u64) << 52)
    } else if k <= 1074 {
        f64::from_bits(1u64 << (1074 - k))
    } else {
        0.0
    }
}

/// Distance between two symbol sequences.
pub(crate) fn symbolic_distance(a: impl Fn(i64) -> u8, b: impl Fn(i64) -> u8) -> f64 {
    if a(0) != b(0) {
        return 1.0;
    }
    for k in 1..=SYMBOLIC_DEPTH {
        if a(k) != b(k) || a(-k) != b(-k) {
            return pow2_neg(k);
        }
    }
    0.0
}

/// `diam(g.S)` for `g ∈ [lo, hi]` given a routine that writes the symbols of
/// point `i` on `[start, start + out.len())` into `out`.
///
/// The diameter of a shifted set is `2^(-dist(g, C))`, where `C` is the set of
/// columns on which the points do not all agree.
pub(crate) fn symbolic_profile(count: usize, fill: impl Fn(usize, i64, &mut [u8]) + Sync, lo: i64, hi: i64) -> Vec<f64> {
    if hi < lo {
        return Vec::new();
    }
    let len = (hi - lo + 1) as usize;
    if count <= 1 {
        return vec![0.0; len];
    }
    let start = lo - SYMBOLIC_DEPTH;
    let width = len + 2 * SYMBOLIC_DEPTH as usize;
    const CHUNK: usize = 4096;
    let chunks: Vec<Vec<bool>> = (0..width.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let s = c * CHUNK;
            let w = CHUNK.min(width - s);
            let mut first = vec![0u8; w];
            fill(0, start + s as i64, &mut first);
            let mut mixed = vec![false; w];
            let mut buf = vec![0u8; w];
            for i in 1..count {
                fill(i, start + s as i64, &mut buf);
                for j in 0..w {
                    mixed[j] |= buf[j] != first[j];
                }
            }
            mixed
        })
        .collect();
    let mixed: Vec<bool> = chunks.concat();
    let far = i64::MAX / 4;
    let mut left = vec![far; width];
    let mut last = None;
    for j in 0..width {
        if mixed[j] {
            last = Some(j);
        }
        if let Some(l) = last {
            left[j] = (j - l) as i64;
        }
    }
    let mut right = far;
    let mut out = vec![0.0; len];
    let off = SYMBOLIC_DEPTH as usize;
    for j in (0..width).rev() {
        if mixed[j] {
            right = 0;
        } else if right < far {
            right += 1;
        }
        if j >= off && j < off + len {
            let d = left[j].min(right);
            out[j - off] = if d >= far { 0.0 } else { pow2_neg(d) };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powers_of_two() {
        assert_eq!(pow2_neg(0), 1.0);
        assert_eq!(pow2_neg(3), 0.125);
        assert_eq!(pow2_neg(1074), f64::from_bits(1));
        assert_eq!(pow2_neg(1075), 0.0);
        for k in 0..1080 {
            let mut x = 1.0f64;
            for _ in 0..k {
                x /= 2.0;
            }
            assert_eq!(pow2_neg(k), x, "k = {k}");
        }
    }

    #[test]
    fn distance_examples() {
        let base = |n: i64| (n.rem_euclid(3) == 0) as u8;
        assert_eq!(symbolic_distance(base, base), 0.0);
        let flip0 = |n: i64| if n == 0 { 1 - base(n) } else { base(n) };
        assert_eq!(symbolic_distance(base, flip0), 1.0);
        let flip3 = |n: i64| if n == -3 { 1 - base(n) } else { base(n) };
        assert_eq!(symbolic_distance(base, flip3), 0.125);
    }

    #[test]
    fn profile_matches_pairwise() {
        let words: Vec<Vec<u8>> = (0..5u64).map(|s| (0..400).map(|i| (hash2(s, i / 7) & 1) as u8).collect()).collect();
        let sym = |i: usize, n: i64| -> u8 {
            let w = &words[i];
            w[(n.rem_euclid(400)) as usize]
        };
        let prof = symbolic_profile(5, |i, s, out: &mut [u8]| {
            for (k, o) in out.iter_mut().enumerate() {
                *o = sym(i, s + k as i64);
            }
        }, -20, 20);
        for (idx, g) in (-20..=20).enumerate() {
            let mut best = 0.0f64;
            for a in 0..5 {
                for b in 0..5 {
                    best = best.max(symbolic_distance(|n| sym(a, n + g), |n| sym(b, n + g)));
                }
            }
            assert_eq!(prof[idx], best);
        }
    }
}
