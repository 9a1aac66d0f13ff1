//! Orbit values over a box of group elements with O(2^d) window sums.

use rayon::prelude::*;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::group::{GroupElement, Window};

/// Largest region an estimator will tabulate.
pub const MAX_REGION_CELLS: u128 = 50_000_000;

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Values `φ(g)` for `g` in a box region, with a summed-area table.
#[derive(Clone, Debug)]
pub struct OrbitTable {
    region: Window,
    values: Vec<f64>,
    /// `prefix[i₁…i_d]` is the sum over cells with coordinate offsets `< i`,
    /// kept as an unevaluated pair `hi + lo`.
    prefix: Vec<f64>,
    prefix_lo: Vec<f64>,
    strides: Vec<usize>,
}

impl OrbitTable {
    pub fn new(region: Window, values: Vec<f64>) -> Result<OrbitTable> {
        let cells = region.measure();
        if cells > MAX_REGION_CELLS {
            return Err(Error::RegionTooLarge(cells));
        }
        if values.len() as u128 != cells {
            return Err(Error::InvalidParameter { name: "values", reason: format!("expected {cells} values, got {}", values.len()) });
        }
        let ext: Vec<usize> = region.extent().iter().map(|&e| e as usize + 1).collect();
        let d = ext.len();
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * ext[i + 1];
        }
        let total: usize = ext.iter().product();
        let mut prefix = vec![0.0f64; total];
        let mut prefix_lo = vec![0.0f64; total];
        // scatter values to offsets shifted by one in every coordinate
        let mut idx = vec![0usize; d];
        for v in &values {
            let pos: usize = idx.iter().zip(&strides).map(|(i, s)| (i + 1) * s).sum();
            prefix[pos] = *v;
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < region.extent()[k] as usize {
                    break;
                }
                idx[k] = 0;
            }
        }
        // cumulative sums along each axis in turn
        for axis in 0..d {
            let stride = strides[axis];
            let len = ext[axis];
            for pos in 0..total {
                if (pos / stride) % len != 0 {
                    let (s, e) = two_sum(prefix[pos], prefix[pos - stride]);
                    prefix[pos] = s;
                    prefix_lo[pos] += prefix_lo[pos - stride] + e;
                }
            }
        }
        Ok(OrbitTable { region, values, prefix, prefix_lo, strides })
    }

    pub fn region(&self) -> &Window {
        &self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, g: &GroupElement) -> Option<f64> {
        self.region.offset_of(g).map(|i| self.values[i])
    }

    /// Applies `f` to every tabulated value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<OrbitTable> {
        OrbitTable::new(self.region.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// `Σ_{g ∈ w} φ(g)`; `w` must lie inside the region.
    pub fn window_sum(&self, w: &Window) -> f64 {
        let zero: SmallVec<[i64; 4]> = SmallVec::from_elem(0, w.dim());
        self.shifted_sum(w, &zero)
    }

    /// `Σ_{g ∈ w + shift} φ(g)` without building the translated window.
    pub fn shifted_sum(&self, w: &Window, shift: &[i64]) -> f64 {
        let d = self.strides.len();
        debug_assert_eq!(w.dim(), d);
        let lo: SmallVec<[usize; 4]> =
            (0..d).map(|k| (w.origin().coords()[k] + shift[k] - self.region.origin().coords()[k]) as usize).collect();
        debug_assert!((0..d).all(|k| lo[k] + w.extent()[k] as usize <= self.region.extent()[k] as usize), "window outside table region");
        let (mut total, mut low) = (0.0, 0.0);
        for corner in 0..(1usize << d) {
            let mut pos = 0usize;
            let mut sign = 1.0;
            for k in 0..d {
                if corner >> k & 1 == 1 {
                    pos += (lo[k] + w.extent()[k] as usize) * self.strides[k];
                } else {
                    pos += lo[k] * self.strides[k];
                    sign = -sign;
                }
            }
            let (s, e) = two_sum(total, sign * self.prefix[pos]);
            total = s;
            low += e + sign * self.prefix_lo[pos];
        }
        total + low
    }

    /// `Σ_{g ∈ w + h}` for every `|h|∞ ≤ radius`, translates in row-major
    /// order of `h + radius`.
    pub fn translate_sums(&self, w: &Window, radius: u64) -> Vec<f64> {
        let dim = w.dim();
        let side = 2 * radius as usize + 1;
        if dim == 1 {
            let base = (w.origin().first() - radius as i64 - self.region.origin().first()) as usize;
            let len = w.extent()[0] as usize;
            debug_assert!(base + side - 1 + len <= self.region.extent()[0] as usize, "window outside table region");
            return (0..side)
                .map(|h| {
                    let (a, b) = (base + h, base + h + len);
                    let (s, e) = two_sum(self.prefix[b], -self.prefix[a]);
                    s + (e + self.prefix_lo[b] - self.prefix_lo[a])
                })
                .collect();
        }
        let count = side.pow(dim as u32);
        (0..count)
            .into_par_iter()
            .with_min_len(1024)
            .map(|i| {
                let mut shift: SmallVec<[i64; 8]> = SmallVec::from_elem(0, dim);
                let mut j = i;
                for k in (0..dim).rev() {
                    shift[k] = (j % side) as i64 - radius as i64;
                    j /= side;
                }
                self.shifted_sum(w, &shift)
            })
            .collect()
    }

    pub fn window_average(&self, w: &Window) -> f64 {
        self.window_sum(w) / w.measure() as f64
    }

    pub fn contains_window(&self, w: &Window) -> bool {
        self.region.intersection(w).is_some_and(|i| i == *w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_sums() {
        let region = Window::interval(-5, 11).unwrap();
        let values: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let t = OrbitTable::new(region, values).unwrap();
        assert_eq!(t.window_sum(&Window::interval(-5, 11).unwrap()), 55.0);
        assert_eq!(t.window_sum(&Window::interval(-3, 3).unwrap()), 2.0 + 3.0 + 4.0);
        assert_eq!(t.window_sum(&Window::interval(5, 1).unwrap()), 10.0);
    }

    #[test]
    fn two_dimensional_sums_match_brute_force() {
        let region = Window::new(GroupElement::new([-3, 2]), [7, 5]).unwrap();
        let values: Vec<f64> = region.cells().map(|g| (g.coords()[0] * 10 + g.coords()[1]) as f64).collect();
        let t = OrbitTable::new(region.clone(), values).unwrap();
        for ox in -3..3 {
            for oy in 2..6 {
                for ex in 1..=(3 - ox + 1) as u64 {
                    for ey in 1..=(6 - oy + 1) as u64 {
                        let w = Window::new(GroupElement::new([ox, oy]), [ex, ey]).unwrap();
                        if !t.contains_window(&w) {
                            continue;
                        }
                        let brute: f64 = w.cells().map(|g| (g.coords()[0] * 10 + g.coords()[1]) as f64).sum();
                        assert_eq!(t.window_sum(&w), brute, "{w}");
                    }
                }
            }
        }
    }

    #[test]
    fn constant_averages_are_exact() {
        let region = Window::interval(-30_000, 60_001).unwrap();
        let c = 0.1;
        let t = OrbitTable::new(region, vec![c; 60_001]).unwrap();
        for (start, len) in [(-1, 2u64), (17, 1001), (-29_000, 9_999)] {
            assert_eq!(t.window_average(&Window::interval(start, len).unwrap()), c);
        }
    }

    #[test]
    fn three_dimensional_total() {
        let region = Window::cube(3, 0, 4).unwrap();
        let t = OrbitTable::new(region.clone(), vec![1.0; 64]).unwrap();
        assert_eq!(t.window_sum(&region), 64.0);
        assert_eq!(t.window_sum(&Window::cube(3, 1, 3).unwrap()), 8.0);
    }
}
