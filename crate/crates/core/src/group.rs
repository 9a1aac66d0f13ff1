//! The acting group ℤ^d with counting measure.
//!
//! Windows are axis-aligned boxes; their measure is their cardinality, so every
//! Haar integral in the averaging code is a finite sum. Følner sequences are
//! parametric box families indexed by `n`.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// An element of ℤ^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(SmallVec<[i64; 2]>);

impl GroupElement {
    pub fn new(coords: impl IntoIterator<Item = i64>) -> Self {
        GroupElement(coords.into_iter().collect())
    }

    pub fn zero(dim: usize) -> Self {
        GroupElement(SmallVec::from_elem(0, dim))
    }

    /// The element `n` of ℤ¹.
    pub fn scalar(n: i64) -> Self {
        GroupElement(smallvec::smallvec![n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Sup norm |g|_∞.
    pub fn norm_inf(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    /// First coordinate; the catalog's one-dimensional systems read only this.
    pub fn first(&self) -> i64 {
        self.0.first().copied().unwrap_or(0)
    }

    pub fn scale(&self, k: i64) -> Self {
        GroupElement(self.0.iter().map(|c| c * k).collect())
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl Add for &GroupElement {
    type Output = GroupElement;
    fn add(self, rhs: &GroupElement) -> GroupElement {
        debug_assert_eq!(self.dim(), rhs.dim());
        GroupElement(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &GroupElement {
    type Output = GroupElement;
    fn sub(self, rhs: &GroupElement) -> GroupElement {
        debug_assert_eq!(self.dim(), rhs.dim());
        GroupElement(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &GroupElement {
    type Output = GroupElement;
    fn neg(self) -> GroupElement {
        GroupElement(self.0.iter().map(|c| -c).collect())
    }
}

#[derive(Deserialize)]
struct WindowSpec {
    origin: Vec<i64>,
    extent: Vec<u64>,
}

impl TryFrom<WindowSpec> for Window {
    type Error = Error;
    fn try_from(spec: WindowSpec) -> Result<Self> {
        Window::new(GroupElement::new(spec.origin), spec.extent)
    }
}

/// A finite box `origin + [0, extent_1) × … × [0, extent_d)` in ℤ^d.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "WindowSpec")]
pub struct Window {
    origin: GroupElement,
    extent: SmallVec<[u64; 2]>,
}

impl Window {
    pub fn new(origin: GroupElement, extent: impl IntoIterator<Item = u64>) -> Result<Self> {
        let extent: SmallVec<[u64; 2]> = extent.into_iter().collect();
        if extent.is_empty() {
            return Err(Error::ZeroDimension(0));
        }
        if extent.len() != origin.dim() {
            return Err(Error::DimensionMismatch { expected: origin.dim(), got: extent.len() });
        }
        if extent.iter().any(|&e| e == 0) {
            return Err(Error::EmptyWindow);
        }
        Ok(Window { origin, extent })
    }

    /// The one-dimensional interval `[start, start + len)`.
    pub fn interval(start: i64, len: u64) -> Result<Self> {
        Window::new(GroupElement::scalar(start), [len])
    }

    /// The box `[lo, hi)^d`.
    pub fn cube(dim: usize, lo: i64, hi: i64) -> Result<Self> {
        if hi <= lo {
            return Err(Error::EmptyWindow);
        }
        Window::new(GroupElement::new(std::iter::repeat(lo).take(dim)), std::iter::repeat((hi - lo) as u64).take(dim))
    }

    /// The single cell `{g}`.
    pub fn cell(g: GroupElement) -> Self {
        let d = g.dim();
        Window { origin: g, extent: SmallVec::from_elem(1, d) }
    }

    pub fn dim(&self) -> usize {
        self.extent.len()
    }

    pub fn origin(&self) -> &GroupElement {
        &self.origin
    }

    pub fn extent(&self) -> &[u64] {
        &self.extent
    }

    /// Inclusive upper corner.
    pub fn last(&self) -> GroupElement {
        GroupElement(self.origin.0.iter().zip(self.extent.iter()).map(|(o, e)| o + *e as i64 - 1).collect())
    }

    pub fn measure(&self) -> u128 {
        self.extent.iter().map(|&e| e as u128).product()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        g.dim() == self.dim()
            && g.0.iter().zip(self.origin.0.iter()).zip(self.extent.iter()).all(|((c, o), e)| *c >= *o && *c < o + *e as i64)
    }

    pub fn translate(&self, g: &GroupElement) -> Window {
        Window { origin: &self.origin + g, extent: self.extent.clone() }
    }

    /// `{-k : k ∈ K}`.
    pub fn reflect(&self) -> Window {
        Window { origin: -&self.last(), extent: self.extent.clone() }
    }

    /// Minkowski sum `{k + k'}`; a box again.
    pub fn minkowski_sum(&self, other: &Window) -> Window {
        Window {
            origin: &self.origin + &other.origin,
            extent: self.extent.iter().zip(other.extent.iter()).map(|(a, b)| a + b - 1).collect(),
        }
    }

    pub fn intersection(&self, other: &Window) -> Option<Window> {
        let mut origin = SmallVec::<[i64; 2]>::new();
        let mut extent = SmallVec::<[u64; 2]>::new();
        for i in 0..self.dim() {
            let lo = self.origin.0[i].max(other.origin.0[i]);
            let hi = (self.origin.0[i] + self.extent[i] as i64).min(other.origin.0[i] + other.extent[i] as i64);
            if hi <= lo {
                return None;
            }
            origin.push(lo);
            extent.push((hi - lo) as u64);
        }
        Some(Window { origin: GroupElement(origin), extent })
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &Window) -> Window {
        let mut origin = SmallVec::<[i64; 2]>::new();
        let mut extent = SmallVec::<[u64; 2]>::new();
        for i in 0..self.dim() {
            let lo = self.origin.0[i].min(other.origin.0[i]);
            let hi = (self.origin.0[i] + self.extent[i] as i64).max(other.origin.0[i] + other.extent[i] as i64);
            origin.push(lo);
            extent.push((hi - lo) as u64);
        }
        Window { origin: GroupElement(origin), extent }
    }

    /// Cells in row-major order (last coordinate fastest).
    pub fn cells(&self) -> Cells<'_> {
        Cells { window: self, next: Some(self.origin.clone()) }
    }

    /// Row-major offset of a contained cell.
    pub fn offset_of(&self, g: &GroupElement) -> Option<usize> {
        if !self.contains(g) {
            return None;
        }
        let mut idx = 0usize;
        for i in 0..self.dim() {
            idx = idx * self.extent[i] as usize + (g.0[i] - self.origin.0[i]) as usize;
        }
        Some(idx)
    }
}

impl fmt::Debug for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, "×")?;
            }
            let lo = self.origin.0[i];
            write!(f, "[{},{})", lo, lo + self.extent[i] as i64)?;
        }
        Ok(())
    }
}

pub struct Cells<'a> {
    window: &'a Window,
    next: Option<GroupElement>,
}

impl Iterator for Cells<'_> {
    type Item = GroupElement;

    fn next(&mut self) -> Option<GroupElement> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let w = self.window;
        let mut i = w.dim();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ.0[i] += 1;
            if succ.0[i] < w.origin.0[i] + w.extent[i] as i64 {
                self.next = Some(succ);
                break;
            }
            succ.0[i] = w.origin.0[i];
        }
        Some(current)
    }
}

/// θ(K) for counting measure.
pub fn window_measure(k: &Window) -> u128 {
    k.measure()
}

/// The difference set `K⁻¹K' = {-k + k'}`, which for boxes is again a box.
pub fn inv_product(k: &Window, k_prime: &Window) -> Window {
    k.reflect().minkowski_sum(k_prime)
}

/// `|F Δ (K + F)| / |F|`, computed exactly.
pub fn folner_defect(f: &Window, k: &Window) -> Ratio<u128> {
    let kf = k.minkowski_sum(f);
    let common = f.intersection(&kf).map(|w| w.measure()).unwrap_or(0);
    let sym = f.measure() + kf.measure() - 2 * common;
    Ratio::new(sym, f.measure())
}

/// Translate schedule `n ↦ g_n` for translated Følner families.
#[derive(Clone)]
pub enum TranslateSchedule {
    /// `g_n = offset + n · step`.
    Linear { offset: GroupElement, step: GroupElement },
    Custom(Arc<dyn Fn(u64) -> GroupElement + Send + Sync>),
}

impl TranslateSchedule {
    pub fn at(&self, n: u64) -> GroupElement {
        match self {
            TranslateSchedule::Linear { offset, step } => offset + &step.scale(n as i64),
            TranslateSchedule::Custom(f) => f(n),
        }
    }
}

impl fmt::Debug for TranslateSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranslateSchedule::Linear { offset, step } => write!(f, "Linear({offset}+n·{step})"),
            TranslateSchedule::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum FolnerStyle {
    /// `{0,…,n}^d`
    Forward,
    /// `{-n,…,0}^d`
    Backward,
    /// `{-n,…,n}^d`
    Centered,
    /// `{0,…,n}^d + g_n`
    Translated(TranslateSchedule),
}

impl FolnerStyle {
    pub fn name(&self) -> &'static str {
        match self {
            FolnerStyle::Forward => "forward",
            FolnerStyle::Backward => "backward",
            FolnerStyle::Centered => "centered",
            FolnerStyle::Translated(_) => "translated",
        }
    }
}

/// A box family `n ↦ F_n`. The Følner property is not assumed; check it with
/// [`folner_defect`].
#[derive(Clone, Debug)]
pub struct FolnerSequence {
    dim: usize,
    style: FolnerStyle,
    label: String,
}

impl FolnerSequence {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn style(&self) -> &FolnerStyle {
        &self.style
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn window(&self, n: u64) -> Window {
        let d = self.dim;
        let ext = std::iter::repeat(n + 1).take(d);
        let n = n as i64;
        let w = match &self.style {
            FolnerStyle::Forward => Window::new(GroupElement::zero(d), ext),
            FolnerStyle::Backward => Window::new(GroupElement::new(std::iter::repeat(-n).take(d)), ext),
            FolnerStyle::Centered => Window::new(
                GroupElement::new(std::iter::repeat(-n).take(d)),
                std::iter::repeat(2 * n as u64 + 1).take(d),
            ),
            FolnerStyle::Translated(s) => Window::new(s.at(n as u64), ext),
        };
        w.expect("box family windows are nonempty")
    }
}

pub fn standard_folner(d: usize, style: FolnerStyle) -> Result<FolnerSequence> {
    if d == 0 {
        return Err(Error::ZeroDimension(d));
    }
    if let FolnerStyle::Translated(s) = &style {
        let g = s.at(0);
        if g.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: g.dim() });
        }
    }
    let label = style.name().to_string();
    Ok(FolnerSequence { dim: d, style, label })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn brute_set(w: &Window) -> BTreeSet<GroupElement> {
        w.cells().collect()
    }

    #[test]
    fn measures() {
        assert_eq!(window_measure(&Window::interval(0, 10).unwrap()), 10);
        assert_eq!(window_measure(&Window::cell(GroupElement::scalar(4))), 1);
        assert_eq!(window_measure(&Window::cube(2, -3, 3).unwrap()), 36);
    }

    #[test]
    fn inv_product_examples() {
        let k = Window::interval(0, 2).unwrap();
        let got: Vec<i64> = inv_product(&k, &k).cells().map(|g| g.first()).collect();
        assert_eq!(got, vec![-1, 0, 1]);

        let kp = Window::interval(-4, 7).unwrap();
        let zero = Window::cell(GroupElement::scalar(0));
        assert_eq!(inv_product(&zero, &kp), kp);

        let k = Window::interval(0, 3).unwrap();
        let kp = Window::interval(5, 2).unwrap();
        let mut brute = BTreeSet::new();
        for a in k.cells() {
            for b in kp.cells() {
                brute.insert(&b - &a);
            }
        }
        let got = brute_set(&inv_product(&k, &kp));
        assert_eq!(got, brute);
        assert_eq!(got.iter().map(|g| g.first()).collect::<Vec<_>>(), vec![3, 4, 5, 6]);
    }

    #[test]
    fn defect_examples() {
        let f = Window::interval(0, 100).unwrap();
        let k = Window::interval(0, 2).unwrap();
        assert_eq!(folner_defect(&f, &k), Ratio::new(1, 100));
        let zero = Window::cell(GroupElement::scalar(0));
        assert_eq!(folner_defect(&f, &zero), Ratio::new(0, 1));

        let f2 = Window::cube(2, 0, 10).unwrap();
        let k2 = Window::new(GroupElement::zero(2), [2, 1]).unwrap();
        assert_eq!(folner_defect(&f2, &k2), Ratio::new(10, 100));
    }

    #[test]
    fn defect_matches_set_arithmetic() {
        let f = Window::new(GroupElement::new([-2, 1]), [5, 4]).unwrap();
        let k = Window::new(GroupElement::new([1, -1]), [2, 3]).unwrap();
        let fs = brute_set(&f);
        let mut kf = BTreeSet::new();
        for a in k.cells() {
            for b in f.cells() {
                kf.insert(&a + &b);
            }
        }
        let sym = fs.symmetric_difference(&kf).count() as u128;
        assert_eq!(folner_defect(&f, &k), Ratio::new(sym, fs.len() as u128));
    }

    #[test]
    fn standard_families() {
        let fwd = standard_folner(1, FolnerStyle::Forward).unwrap();
        assert_eq!(fwd.window(5), Window::interval(0, 6).unwrap());
        let bwd = standard_folner(1, FolnerStyle::Backward).unwrap();
        assert_eq!(bwd.window(5), Window::interval(-5, 6).unwrap());
        let cen = standard_folner(2, FolnerStyle::Centered).unwrap();
        assert_eq!(cen.window(3), Window::cube(2, -3, 4).unwrap());
        let tr = standard_folner(
            1,
            FolnerStyle::Translated(TranslateSchedule::Linear {
                offset: GroupElement::scalar(7),
                step: GroupElement::scalar(-2),
            }),
        )
        .unwrap();
        assert_eq!(tr.window(3), Window::interval(1, 4).unwrap());
        assert_eq!(standard_folner(0, FolnerStyle::Forward).unwrap_err(), Error::ZeroDimension(0));
    }

    #[test]
    fn defect_decays_along_families() {
        let k = Window::new(GroupElement::new([-3, 0]), [7, 5]).unwrap();
        for style in [FolnerStyle::Forward, FolnerStyle::Backward, FolnerStyle::Centered] {
            let fs = standard_folner(2, style).unwrap();
            let defect = folner_defect(&fs.window(10_000), &k);
            let bound = Ratio::new(10 * k.measure(), 10_000u128);
            assert!(defect < bound, "{defect} vs {bound}");
        }
    }

    #[test]
    fn cells_order_and_offsets() {
        let w = Window::new(GroupElement::new([1, -1]), [2, 3]).unwrap();
        let cells: Vec<_> = w.cells().collect();
        assert_eq!(cells.len(), 6);
        for (i, c) in cells.iter().enumerate() {
            assert_eq!(w.offset_of(c), Some(i));
        }
        assert_eq!(cells[1], GroupElement::new([1, 0]));
    }

    #[test]
    fn window_serde_shape() {
        let w: Window = toml::from_str("origin = [1, 2]\nextent = [3, 4]").unwrap();
        assert_eq!(w.measure(), 12);
        assert!(toml::from_str::<Window>("origin = [1]\nextent = [0]").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn window_1d() -> impl Strategy<Value = Window> {
            (-500i64..500, 1u64..=1000).prop_map(|(o, e)| Window::interval(o, e).unwrap())
        }

        proptest! {
            #[test]
            fn measure_is_translation_invariant(w in window_1d(), g in -10_000i64..10_000) {
                prop_assert_eq!(w.translate(&GroupElement::scalar(g)).measure(), w.measure());
            }

            #[test]
            fn inv_product_identities(w in window_1d()) {
                let zero = Window::cell(GroupElement::scalar(0));
                prop_assert_eq!(brute_set(&inv_product(&zero, &w)), brute_set(&w));
                let neg: BTreeSet<_> = w.cells().map(|g| -&g).collect();
                prop_assert_eq!(brute_set(&inv_product(&w, &zero)), neg);
            }
        }
    }
}
