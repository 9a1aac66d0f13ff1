use std::sync::Arc;

use super::word::{hash2, hash_bytes, symbolic_distance, symbolic_profile};
use super::{dedup_points, dyadic_depth, within, NetSet, Point, System, MAX_NET_POINTS};
use crate::error::{Error, Result};
use crate::group::GroupElement;

/// An eventually periodic bi-infinite word: `left` repeats to the left of
/// the core, `right` to its right. Symbol `n` of the word is symbol
/// `n + offset` of the underlying pattern, so shifting only moves `offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Word {
    offset: i64,
    core_start: i64,
    core: Arc<[u8]>,
    left: Arc<[u8]>,
    right: Arc<[u8]>,
}

impl Word {
    pub fn new(core_start: i64, core: Vec<u8>, left: Vec<u8>, right: Vec<u8>) -> Result<Word> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidParameter { name: "period", reason: "periodic tails must be nonempty".into() });
        }
        Ok(Word { offset: 0, core_start, core: core.into(), left: left.into(), right: right.into() })
    }

    /// A word with the given core whose tails are pseudo-random periodic
    /// patterns derived from `seed`, so that distinct seeds disagree at
    /// positions of positive density on both sides.
    pub fn with_scrambled_tails(core_start: i64, core: Vec<u8>, alphabet: u8, seed: u64) -> Word {
        let h = hash_bytes(seed, &core);
        let l_len = 61 + (h % 17) as usize;
        let r_len = 67 + ((h >> 8) % 19) as usize;
        let sym = |salt: u64, i: usize| (hash2(h ^ salt, i as u64) % alphabet as u64) as u8;
        let left = (0..l_len).map(|i| sym(0x5a5a, i)).collect::<Vec<_>>();
        let right = (0..r_len).map(|i| sym(0xa5a5, i)).collect::<Vec<_>>();
        Word { offset: 0, core_start, core: core.into(), left: left.into(), right: right.into() }
    }

    pub fn symbol(&self, n: i64) -> u8 {
        let a = n + self.offset;
        let rel = a - self.core_start;
        if rel < 0 {
            self.left[a.rem_euclid(self.left.len() as i64) as usize]
        } else if (rel as usize) < self.core.len() {
            self.core[rel as usize]
        } else {
            self.right[a.rem_euclid(self.right.len() as i64) as usize]
        }
    }

    pub fn window(&self, lo: i64, hi: i64) -> Vec<u8> {
        (lo..=hi).map(|n| self.symbol(n)).collect()
    }

    pub fn shifted(&self, g: i64) -> Word {
        let mut w = self.clone();
        w.offset += g;
        w
    }

    fn max_symbol(&self) -> u8 {
        self.core.iter().chain(self.left.iter()).chain(self.right.iter()).copied().max().unwrap_or(0)
    }
}

/// The full shift over `{0, …, k−1}`.
#[derive(Clone, Debug)]
pub struct FullShift {
    k: u8,
    label: String,
}

impl FullShift {
    pub fn new(k: usize) -> Result<FullShift> {
        if k < 2 {
            return Err(Error::AlphabetTooSmall(k));
        }
        if k > 255 {
            return Err(Error::InvalidParameter { name: "k", reason: "alphabets are limited to 255 symbols".into() });
        }
        Ok(FullShift { k: k as u8, label: format!("full_shift({k})") })
    }

    pub fn alphabet(&self) -> usize {
        self.k as usize
    }

    /// All words that carry `fixed` on `[-(fixed.len()-1)/2, …]` centered,
    /// free on the remaining positions of `[-m, m]`.
    fn enumerate(&self, m: i64, fixed_radius: Option<(i64, &Word)>) -> Result<Vec<Point>> {
        let width = (2 * m + 1) as usize;
        let free: Vec<usize> = (0..width)
            .filter(|&i| {
                let n = i as i64 - m;
                match fixed_radius {
                    Some((r, _)) => n.abs() > r,
                    None => true,
                }
            })
            .collect();
        let count = (self.k as f64).powi(free.len() as i32);
        if count > MAX_NET_POINTS as f64 {
            return Err(Error::RegionTooLarge(count as u128));
        }
        let mut base = vec![0u8; width];
        if let Some((r, x)) = fixed_radius {
            for n in -r.min(m)..=r.min(m) {
                base[(n + m) as usize] = x.symbol(n);
            }
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut digits = vec![0u8; free.len()];
        loop {
            let mut core = base.clone();
            for (d, &i) in digits.iter().zip(&free) {
                core[i] = *d;
            }
            out.push(Point::Word(Word::with_scrambled_tails(-m, core, self.k, 0)));
            let mut i = 0;
            loop {
                if i == digits.len() {
                    return Ok(out);
                }
                digits[i] += 1;
                if digits[i] < self.k {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }
}

fn word_of(p: &Point) -> &Word {
    match p {
        Point::Word(w) => w,
        other => panic!("full shift expects a word, got {other:?}"),
    }
}

impl System for FullShift {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        1
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Point {
        Point::Word(word_of(p).shifted(g.first()))
    }

    fn metric(&self, a: &Point, b: &Point) -> f64 {
        let (a, b) = (word_of(a), word_of(b));
        if a == b {
            return 0.0;
        }
        symbolic_distance(|n| a.symbol(n), |n| b.symbol(n))
    }

    /// Words on `[-m, m]` with `2^(-m) ≤ mesh`; every word agrees with one of
    /// them on `[-m, m]`, hence lies within `2^(-m-1)`.
    fn net(&self, mesh: f64) -> Result<NetSet> {
        let m = dyadic_depth(mesh)? as i64;
        let pts = self.enumerate(m, None)?;
        Ok(NetSet::from_parts(&self.label, pts, mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        1.0
    }

    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Word(w) if w.max_symbol() < self.k)
    }

    fn local_variants(&self, x: &Point, mesh: f64) -> Vec<Point> {
        let Ok(m) = dyadic_depth(mesh) else { return Vec::new() };
        let m = m as i64;
        let x = word_of(x);
        let core = x.window(-m, m);
        (1..=3).map(|s| Point::Word(Word::with_scrambled_tails(-m, core.clone(), self.k, s))).collect()
    }

    /// Enumerates the ball directly: the center is pinned where the ball
    /// forces agreement, every other position of `[-m, m]` ranges freely.
    fn ball_net(&self, x: &Point, delta: f64, mesh: f64) -> Result<NetSet> {
        let j = dyadic_depth(delta)? as i64;
        let m = (dyadic_depth(mesh)? as i64).max(j - 1);
        let mut pts = vec![x.clone()];
        pts.extend(self.local_variants(x, mesh));
        for p in self.enumerate(m, Some((j - 1, word_of(x))))? {
            if within(self.metric(x, &p), delta) {
                pts.push(p);
            }
        }
        Ok(NetSet::from_parts(&self.label, dedup_points(pts), mesh, true))
    }

    fn diam_profile(&self, points: &[Point], lo: i64, hi: i64) -> Vec<f64> {
        let words: Vec<&Word> = points.iter().map(word_of).collect();
        symbolic_profile(
            words.len(),
            |i, start, out: &mut [u8]| {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = words[i].symbol(start + k as i64);
                }
            },
            lo,
            hi,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let s = FullShift::new(2).unwrap();
        let x = Word::with_scrambled_tails(-5, vec![0; 11], 2, 0);
        let mut core = vec![0; 11];
        core[5] = 1;
        let y0 = Word::new(-5, core.clone(), x.left.to_vec(), x.right.to_vec()).unwrap();
        assert_eq!(s.metric(&Point::Word(x.clone()), &Point::Word(y0)), 1.0);
        core[5] = 0;
        core[2] = 1;
        let y3 = Word::new(-5, core, x.left.to_vec(), x.right.to_vec()).unwrap();
        assert_eq!(s.metric(&Point::Word(x.clone()), &Point::Word(y3)), 0.125);
        assert!(matches!(FullShift::new(1), Err(Error::AlphabetTooSmall(1))));
    }

    #[test]
    fn net_sizes() {
        let s = FullShift::new(2).unwrap();
        assert_eq!(s.net(0.25).unwrap().len(), 32);
        assert_eq!(FullShift::new(3).unwrap().net(0.5).unwrap().len(), 27);
    }

    #[test]
    fn ball_is_cylinder() {
        let s = FullShift::new(2).unwrap();
        let x = s.net(0.25).unwrap().points()[5].clone();
        let ball = s.ball_net(&x, 0.125, 2f64.powi(-5)).unwrap();
        for p in ball.points() {
            let d = s.metric(&x, p);
            assert!(d <= 0.125);
        }
        // positions 3..=5 on each side are free
        assert!(ball.len() >= 64);
    }

    #[test]
    fn shifted_sets_reach_diameter_one() {
        let s = FullShift::new(2).unwrap();
        let x = s.net(0.25).unwrap().points()[0].clone();
        let ball = s.ball_net(&x, 2f64.powi(-8), 2f64.powi(-10)).unwrap();
        let prof = s.diam_profile(ball.points(), -2000, 2000);
        let ones = prof.iter().filter(|&&v| v == 1.0).count();
        assert!(ones >= 4000 - 20, "{ones}");
    }
}
