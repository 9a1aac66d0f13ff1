use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::word::{hash2, hash_bytes, pow2_neg, symbolic_distance, symbolic_profile};
use super::{dyadic_depth, NetSet, Point, System, MAX_NET_POINTS};
use crate::error::{Error, Result};
use crate::group::GroupElement;

const HOLE: u8 = u8::MAX;

/// Unfilled density at the last level above which a structure is flagged
/// non-regular.
pub const REGULARITY_THRESHOLD: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub period: u64,
    /// `(residue, symbol)` pairs filled at this level.
    pub fills: Vec<(u64, u8)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    Regular,
    NonRegular,
}

/// A finite Toeplitz construction `p₁ | p₂ | … | p_K`: level `k` assigns
/// symbols to residues mod `p_k` that are still holes after the lower levels.
/// Positions left open after the last level are holes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodStructure {
    levels: Vec<Level>,
    #[serde(skip)]
    skeleton: Arc<[u8]>,
    unfilled: Vec<f64>,
}

impl PeriodStructure {
    pub fn new(levels: Vec<Level>) -> Result<PeriodStructure> {
        if levels.is_empty() {
            return Err(Error::InconsistentPeriods("no levels".into()));
        }
        let mut prev = 1u64;
        for (k, lvl) in levels.iter().enumerate() {
            if lvl.period <= prev || lvl.period % prev != 0 {
                return Err(Error::InconsistentPeriods(format!("period {} at level {} does not extend {}", lvl.period, k + 1, prev)));
            }
            prev = lvl.period;
        }
        let top = prev;
        if top as usize > MAX_NET_POINTS {
            return Err(Error::InconsistentPeriods(format!("top period {top} is too large")));
        }
        let mut skeleton = vec![HOLE; top as usize];
        let mut unfilled = Vec::with_capacity(levels.len());
        for (k, lvl) in levels.iter().enumerate() {
            for &(r, s) in &lvl.fills {
                if r >= lvl.period {
                    return Err(Error::InconsistentPeriods(format!("residue {r} out of range at level {}", k + 1)));
                }
                if s == HOLE {
                    return Err(Error::InconsistentPeriods(format!("symbol {s} is reserved")));
                }
                let mut pos = r;
                while pos < top {
                    let cell = &mut skeleton[pos as usize];
                    if *cell != HOLE {
                        return Err(Error::InconsistentPeriods(format!(
                            "residue {r} mod {} is already filled below level {}",
                            lvl.period,
                            k + 1
                        )));
                    }
                    *cell = s;
                    pos += lvl.period;
                }
            }
            let holes = (0..lvl.period).filter(|&r| skeleton[r as usize] == HOLE).count();
            unfilled.push(holes as f64 / lvl.period as f64);
        }
        Ok(PeriodStructure { levels, skeleton: skeleton.into(), unfilled })
    }

    /// `p_k = 2^k`, level `k` fills residue `2^(k−1) − 1` with `(k−1) mod 2`.
    /// Filled density at level `k` is `1 − 2^(−k)`.
    pub fn period_doubling(levels: u32) -> Result<PeriodStructure> {
        let lv = (1..=levels)
            .map(|k| Level { period: 1 << k, fills: vec![((1u64 << (k - 1)) - 1, ((k - 1) % 2) as u8)] })
            .collect();
        PeriodStructure::new(lv)
    }

    /// `p_k = 2^(k+1)`: level 1 fills residues 0 and 2 mod 4, every later
    /// level fills a single hole. The unfilled density is `¼ + 2^(−k−1)` at
    /// level `k`, so it never drops below `¼`.
    pub fn non_regular(levels: u32) -> Result<PeriodStructure> {
        let mut lv = vec![Level { period: 4, fills: vec![(0, 0), (2, 1)] }];
        let mut holes: Vec<u64> = vec![1, 3];
        for k in 2..=levels {
            let p = 1u64 << (k + 1);
            let prev = p / 2;
            let mut lifted: Vec<u64> = holes.iter().flat_map(|&h| [h, h + prev]).collect();
            lifted.sort_by_key(|&r| {
                let c = if r > p / 2 { r as i64 - p as i64 } else { r as i64 };
                (c.unsigned_abs(), r)
            });
            let chosen = lifted.remove(0);
            lv.push(Level { period: p, fills: vec![(chosen, (k % 2) as u8)] });
            lifted.sort();
            holes = lifted;
        }
        PeriodStructure::new(lv)
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn periods(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.period).collect()
    }

    pub fn top_period(&self) -> u64 {
        self.levels.last().map(|l| l.period).unwrap_or(1)
    }

    pub fn filled_density(&self, level: usize) -> f64 {
        1.0 - self.unfilled[level - 1]
    }

    pub fn unfilled_density(&self, level: usize) -> f64 {
        self.unfilled[level - 1]
    }

    pub fn regularity(&self) -> Regularity {
        if *self.unfilled.last().unwrap() > REGULARITY_THRESHOLD {
            Regularity::NonRegular
        } else {
            Regularity::Regular
        }
    }

    /// Skeleton symbol at absolute position `a`, `None` on holes.
    pub fn skeleton_symbol(&self, a: i64) -> Option<u8> {
        let s = self.skeleton[a.rem_euclid(self.skeleton.len() as i64) as usize];
        (s != HOLE).then_some(s)
    }
}

/// Explicit hole symbols on `[start, start + bits.len())`.
#[derive(Clone, Debug, PartialEq)]
pub struct FillWindow {
    pub start: i64,
    pub bits: Vec<u8>,
}

/// How the holes of a skeleton are filled: a pseudo-random bit per absolute
/// position derived from `seed`, optionally complemented, with an optional
/// explicit window taking precedence.
#[derive(Clone, Debug, PartialEq)]
pub struct HoleFill {
    pub seed: u64,
    pub flip: bool,
    pub window: Option<Arc<FillWindow>>,
}

impl HoleFill {
    pub fn seeded(seed: u64, flip: bool) -> HoleFill {
        HoleFill { seed, flip, window: None }
    }

    fn bit(&self, a: i64) -> u8 {
        if let Some(w) = &self.window {
            let rel = a - w.start;
            if rel >= 0 && (rel as usize) < w.bits.len() {
                return w.bits[rel as usize];
            }
        }
        ((hash2(self.seed, a as u64) & 1) as u8) ^ self.flip as u8
    }
}

/// A point of the skeleton subshift: symbol `n` is the skeleton symbol at
/// absolute position `n + pos`, or the fill bit there on holes.
#[derive(Clone, Debug, PartialEq)]
pub struct ToeplitzPoint {
    pub pos: i64,
    pub fill: HoleFill,
}

/// The Toeplitz system of a period structure over `{0, 1}`. Holes that the
/// finite structure leaves open are free symbols, standing in for the
/// levels beyond the last one.
#[derive(Debug)]
pub struct Toeplitz {
    ps: PeriodStructure,
    label: String,
    scan: i64,
    cache: Mutex<BTreeMap<u32, Arc<Vec<Point>>>>,
}

impl Toeplitz {
    pub fn new(ps: PeriodStructure) -> Result<Toeplitz> {
        if ps.levels.iter().flat_map(|l| &l.fills).any(|&(_, s)| s > 1) {
            return Err(Error::InconsistentPeriods("symbols must be 0 or 1".into()));
        }
        let label = format!("toeplitz({})", ps.periods().iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","));
        let scan = (4 * ps.top_period() as i64).max(4096);
        Ok(Toeplitz { ps, label, scan, cache: Mutex::new(BTreeMap::new()) })
    }

    pub fn structure(&self) -> &PeriodStructure {
        &self.ps
    }

    /// The base word shifted to absolute position `pos`, holes from seed 0.
    pub fn base_point(&self, pos: i64) -> Point {
        Point::Toeplitz(ToeplitzPoint { pos, fill: HoleFill::seeded(0, false) })
    }

    pub fn symbol(&self, p: &ToeplitzPoint, n: i64) -> u8 {
        let a = n + p.pos;
        self.ps.skeleton_symbol(a).unwrap_or_else(|| p.fill.bit(a))
    }

    /// Points of phase `pos` with holes filled by seeds `0..pairs`, each with
    /// its complement: every hole column carries both symbols.
    pub fn phase_points(&self, pos: i64, pairs: u64) -> Vec<Point> {
        (0..pairs)
            .flat_map(|s| [false, true].map(|flip| Point::Toeplitz(ToeplitzPoint { pos, fill: HoleFill::seeded(s, flip) })))
            .collect()
    }

    fn net_points(&self, m: u32) -> Result<Arc<Vec<Point>>> {
        if let Some(v) = self.cache.lock().unwrap().get(&m) {
            return Ok(v.clone());
        }
        let mi = m as i64;
        let mut seen: BTreeMap<(u64, u64), ()> = BTreeMap::new();
        let mut pts = Vec::new();
        let mut buf = Vec::with_capacity((2 * mi + 1) as usize);
        for step in 0..=2 * self.scan {
            let j = if step % 2 == 0 { step / 2 } else { -(step + 1) / 2 };
            let p = ToeplitzPoint { pos: j, fill: HoleFill::seeded(0, false) };
            buf.clear();
            buf.extend((-mi..=mi).map(|n| self.symbol(&p, n)));
            let key = (hash_bytes(1, &buf), hash_bytes(2, &buf));
            if seen.insert(key, ()).is_none() {
                pts.push(Point::Toeplitz(p));
            }
        }
        let pts = Arc::new(pts);
        self.cache.lock().unwrap().insert(m, pts.clone());
        Ok(pts)
    }
}

fn toeplitz_of(p: &Point) -> &ToeplitzPoint {
    match p {
        Point::Toeplitz(t) => t,
        other => panic!("toeplitz system expects a toeplitz point, got {other:?}"),
    }
}

impl System for Toeplitz {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        1
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Point {
        let t = toeplitz_of(p);
        Point::Toeplitz(ToeplitzPoint { pos: t.pos + g.first(), fill: t.fill.clone() })
    }

    fn metric(&self, a: &Point, b: &Point) -> f64 {
        let (a, b) = (toeplitz_of(a), toeplitz_of(b));
        if a == b {
            return 0.0;
        }
        symbolic_distance(|n| self.symbol(a, n), |n| self.symbol(b, n))
    }

    /// Distinct words on `[-m, m]` seen along the base word over a window of
    /// several top periods, each represented by the shifted base word.
    fn net(&self, mesh: f64) -> Result<NetSet> {
        let m = dyadic_depth(mesh)?;
        let pts = self.net_points(m)?;
        Ok(NetSet::from_parts(&self.label, pts.as_ref().clone(), mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        1.0
    }

    fn contains(&self, p: &Point) -> bool {
        match p {
            Point::Toeplitz(t) => t.fill.window.as_ref().is_none_or(|w| w.bits.iter().all(|&b| b <= 1)),
            _ => false,
        }
    }

    /// Same symbols on `[-m, m]`, holes elsewhere refilled from new seeds.
    fn local_variants(&self, x: &Point, mesh: f64) -> Vec<Point> {
        let Ok(m) = dyadic_depth(mesh) else { return Vec::new() };
        let m = m as i64;
        let t = toeplitz_of(x);
        let bits: Vec<u8> = (-m..=m).map(|n| t.fill.bit(n + t.pos)).collect();
        let window = Arc::new(FillWindow { start: t.pos - m, bits });
        (1..=3u64)
            .map(|s| {
                Point::Toeplitz(ToeplitzPoint {
                    pos: t.pos,
                    fill: HoleFill { seed: hash2(t.fill.seed, s), flip: false, window: Some(window.clone()) },
                })
            })
            .collect()
    }

    fn diam_profile(&self, points: &[Point], lo: i64, hi: i64) -> Vec<f64> {
        let pts: Vec<&ToeplitzPoint> = points.iter().map(toeplitz_of).collect();
        symbolic_profile(
            pts.len(),
            |i, start, out: &mut [u8]| {
                for (k, o) in out.iter_mut().enumerate() {
                    *o = self.symbol(pts[i], start + k as i64);
                }
            },
            lo,
            hi,
        )
    }
}

/// The truncated odometer `ℤ/p_Kℤ` with metric `2^(−k)` for the largest
/// level `k` at which two residues agree.
#[derive(Clone, Debug)]
pub struct Odometer {
    periods: Vec<u64>,
    label: String,
}

impl Odometer {
    pub fn new(periods: Vec<u64>) -> Result<Odometer> {
        let mut prev = 1;
        for &p in &periods {
            if p <= prev || p % prev != 0 {
                return Err(Error::InconsistentPeriods(format!("period {p} does not extend {prev}")));
            }
            prev = p;
        }
        if periods.is_empty() {
            return Err(Error::InconsistentPeriods("no levels".into()));
        }
        let label = format!("odometer({})", periods.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(","));
        Ok(Odometer { periods, label })
    }

    pub fn top(&self) -> u64 {
        *self.periods.last().unwrap()
    }

    pub fn point(&self, z: i64) -> Point {
        Point::Odometer(z.rem_euclid(self.top() as i64) as u64)
    }
}

fn residue_of(p: &Point) -> u64 {
    match p {
        Point::Odometer(z) => *z,
        other => panic!("odometer expects a residue, got {other:?}"),
    }
}

impl System for Odometer {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        1
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Point {
        let top = self.top() as i128;
        Point::Odometer((residue_of(p) as i128 + g.first() as i128).rem_euclid(top) as u64)
    }

    fn metric(&self, a: &Point, b: &Point) -> f64 {
        let (a, b) = (residue_of(a), residue_of(b));
        if a == b {
            return 0.0;
        }
        let k = self.periods.iter().take_while(|&&p| a % p == b % p).count();
        pow2_neg(k as i64)
    }

    fn net(&self, mesh: f64) -> Result<NetSet> {
        let m = dyadic_depth(mesh)? as usize;
        let count = if m == 0 { 1 } else { self.periods[(m - 1).min(self.periods.len() - 1)] };
        if count as usize > MAX_NET_POINTS {
            return Err(Error::RegionTooLarge(count as u128));
        }
        Ok(NetSet::from_parts(&self.label, (0..count).map(Point::Odometer).collect(), mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        1.0
    }

    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Odometer(z) if *z < self.top())
    }

    fn is_isometric(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_doubling_densities() {
        let ps = PeriodStructure::period_doubling(10).unwrap();
        for k in 1..=10 {
            assert_eq!(ps.filled_density(k), 1.0 - 2f64.powi(-(k as i32)));
        }
        assert_eq!(ps.regularity(), Regularity::Regular);
        // brute-force count at level 3
        let p = 8;
        let filled = (0..p).filter(|&r| ps.levels()[..3].iter().any(|l| l.fills.iter().any(|&(res, _)| r % l.period == res))).count();
        assert_eq!(filled, 7);
    }

    #[test]
    fn non_regular_stays_at_a_quarter() {
        let ps = PeriodStructure::non_regular(8).unwrap();
        for k in 1..=8 {
            assert!(ps.unfilled_density(k) >= 0.25);
        }
        assert!((ps.unfilled_density(8) - (0.25 + 2f64.powi(-9))).abs() < 1e-12);
        assert_eq!(ps.regularity(), Regularity::NonRegular);
    }

    #[test]
    fn inconsistent_fills_rejected() {
        let bad = vec![Level { period: 2, fills: vec![(0, 0)] }, Level { period: 4, fills: vec![(2, 1)] }];
        assert!(matches!(PeriodStructure::new(bad), Err(Error::InconsistentPeriods(_))));
        let bad = vec![Level { period: 2, fills: vec![] }, Level { period: 3, fills: vec![] }];
        assert!(PeriodStructure::new(bad).is_err());
        let bad = vec![Level { period: 2, fills: vec![(2, 0)] }];
        assert!(PeriodStructure::new(bad).is_err());
    }

    #[test]
    fn odometer_factor_of_shift() {
        let ps = PeriodStructure::period_doubling(6).unwrap();
        let t = Toeplitz::new(ps.clone()).unwrap();
        let o = Odometer::new(ps.periods()).unwrap();
        let x = t.base_point(0);
        let g = GroupElement::scalar(77);
        let Point::Toeplitz(tx) = t.act(&g, &x) else { unreachable!() };
        assert_eq!(o.point(tx.pos), o.act(&g, &o.point(0)));
    }

    #[test]
    fn odometer_metric() {
        let o = Odometer::new(vec![2, 4, 8]).unwrap();
        assert_eq!(o.metric(&Point::Odometer(1), &Point::Odometer(5)), 0.25);
        assert_eq!(o.metric(&Point::Odometer(0), &Point::Odometer(1)), 1.0);
        assert_eq!(o.metric(&Point::Odometer(3), &Point::Odometer(3)), 0.0);
        assert_eq!(o.net(0.25).unwrap().len(), 4);
        assert_eq!(o.net(1e-9).unwrap().len(), 8);
    }

    #[test]
    fn phase_points_disagree_exactly_on_holes() {
        let ps = PeriodStructure::period_doubling(5).unwrap();
        let t = Toeplitz::new(ps.clone()).unwrap();
        let pts = t.phase_points(3, 2);
        let prof = t.diam_profile(&pts, -40, 40);
        for (i, g) in (-40i64..=40).enumerate() {
            let d = (0..200i64).find(|&k| ps.skeleton_symbol(g + k + 3).is_none() || ps.skeleton_symbol(g - k + 3).is_none()).unwrap();
            assert_eq!(prof[i], pow2_neg(d));
        }
    }

    #[test]
    fn local_variants_stay_close() {
        let t = Toeplitz::new(PeriodStructure::period_doubling(6).unwrap()).unwrap();
        let x = t.base_point(11);
        for v in t.local_variants(&x, 2f64.powi(-6)) {
            assert!(t.metric(&x, &v) <= 2f64.powi(-7));
            assert_ne!(v, x);
        }
    }
}
