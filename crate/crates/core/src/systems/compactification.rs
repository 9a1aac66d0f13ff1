use super::frac::Q;
use super::{NetSet, Point, System, MAX_NET_POINTS};
use crate::error::{Error, Result};
use crate::group::GroupElement;

/// An element of ℤ ∪ {−∞, +∞}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExtInt {
    NegInf,
    Fin(i64),
    PosInf,
}

/// `f(m) = m/(1+|m|)`, `f(±∞) = ±1`.
fn f(x: ExtInt) -> Q {
    match x {
        ExtInt::NegInf => Q::int(-1),
        ExtInt::PosInf => Q::int(1),
        ExtInt::Fin(m) => Q::new(m as i128, 1 + (m as i128).abs()),
    }
}

/// `1/(1+|m|)`: the distance from `m` to the point at infinity.
fn r(m: i64) -> Q {
    Q::new(1, 1 + (m as i128).abs())
}

fn shift(x: ExtInt, g: i64) -> ExtInt {
    match x {
        ExtInt::Fin(m) => ExtInt::Fin(m + g),
        inf => inf,
    }
}

fn ext_of(p: &Point) -> ExtInt {
    match p {
        Point::Ext(x) => *x,
        other => panic!("compactification expects an extended integer, got {other:?}"),
    }
}

fn net_radius(mesh: f64) -> Result<i64> {
    if !(mesh > 0.0 && mesh.is_finite()) {
        return Err(Error::BadMesh(mesh));
    }
    let m = (1.0 / mesh - 1e-9).ceil().max(0.0);
    if 2.0 * m + 3.0 > MAX_NET_POINTS as f64 {
        return Err(Error::RegionTooLarge(m as u128));
    }
    Ok(m as i64)
}

/// ℤ ∪ {−∞, +∞} with `g.m = g + m`, both infinities fixed, and metric
/// `|f(x) − f(y)|`.
#[derive(Clone, Debug, Default)]
pub struct TwoPointCompactification;

impl TwoPointCompactification {
    pub fn new() -> Self {
        TwoPointCompactification
    }
}

impl System for TwoPointCompactification {
    fn label(&self) -> &str {
        "two_point_compactification"
    }

    fn dim(&self) -> usize {
        1
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Point {
        Point::Ext(shift(ext_of(p), g.first()))
    }

    fn metric(&self, a: &Point, b: &Point) -> f64 {
        f(ext_of(a)).sub(f(ext_of(b))).abs().to_f64()
    }

    /// `{|m| ≤ ⌈1/mesh⌉} ∪ {±∞}`; beyond that radius `d(m, ±∞) < mesh`.
    fn net(&self, mesh: f64) -> Result<NetSet> {
        let m = net_radius(mesh)?;
        let mut pts: Vec<Point> = (-m..=m).map(|k| Point::Ext(ExtInt::Fin(k))).collect();
        pts.push(Point::Ext(ExtInt::NegInf));
        pts.push(Point::Ext(ExtInt::PosInf));
        Ok(NetSet::from_parts(self.label(), pts, mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        2.0
    }

    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Ext(_))
    }

    /// The action preserves order and `f` is monotone, so the diameter is
    /// attained by the extreme points.
    fn diam_profile(&self, points: &[Point], lo: i64, hi: i64) -> Vec<f64> {
        let xs: Vec<ExtInt> = points.iter().map(ext_of).collect();
        let (Some(&min), Some(&max)) = (xs.iter().min(), xs.iter().max()) else {
            return vec![0.0; (hi - lo + 1).max(0) as usize];
        };
        (lo..=hi).map(|g| f(shift(max, g)).sub(f(shift(min, g))).abs().to_f64()).collect()
    }
}

/// `d_Y(m, n) = min(|f(m) − f(n)|, 2 − |f(m) − f(n)|)` with `f(∞) = 1`: the
/// arc distance on a circle of length 2 where `±1` are identified.
fn one_point_q(a: ExtInt, b: ExtInt) -> Q {
    let d = f(a).sub(f(b)).abs();
    d.min(Q::int(2).sub(d))
}

/// ℤ ∪ {∞} with `g.m = g + m`, `∞` fixed. Points are `Ext(Fin(m))` and
/// `Ext(PosInf)` for `∞`; `d(m, ∞) = 1/(1+|m|)`.
#[derive(Clone, Debug, Default)]
pub struct OnePointCompactification;

impl OnePointCompactification {
    pub fn new() -> Self {
        OnePointCompactification
    }

    pub fn infinity() -> Point {
        Point::Ext(ExtInt::PosInf)
    }
}

impl System for OnePointCompactification {
    fn label(&self) -> &str {
        "one_point_compactification"
    }

    fn dim(&self) -> usize {
        1
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Point {
        Point::Ext(shift(ext_of(p), g.first()))
    }

    fn metric(&self, a: &Point, b: &Point) -> f64 {
        one_point_q(ext_of(a), ext_of(b)).to_f64()
    }

    fn net(&self, mesh: f64) -> Result<NetSet> {
        let m = net_radius(mesh)?;
        let mut pts: Vec<Point> = (-m..=m).map(|k| Point::Ext(ExtInt::Fin(k))).collect();
        pts.push(Self::infinity());
        Ok(NetSet::from_parts(self.label(), pts, mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        1.0
    }

    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Ext(ExtInt::Fin(_) | ExtInt::PosInf))
    }

    /// Positions on the circle keep their cyclic order under the action, so
    /// a two-pointer sweep towards the antipode finds the diameter in linear
    /// time per group element.
    fn diam_profile(&self, points: &[Point], lo: i64, hi: i64) -> Vec<f64> {
        let mut xs: Vec<ExtInt> = points.iter().map(ext_of).collect();
        xs.sort();
        xs.dedup();
        let k = xs.len();
        (lo..=hi)
            .map(|g| {
                if k < 2 {
                    return 0.0;
                }
                let moved: Vec<ExtInt> = xs.iter().map(|&x| shift(x, g)).collect();
                let pos: Vec<f64> = moved.iter().map(|&x| f(x).to_f64()).collect();
                let mut best = Q::int(0);
                let mut j = 0usize;
                for i in 0..k {
                    let ahead = |j: usize| pos[j % k] - pos[i] + if j >= k { 2.0 } else { 0.0 };
                    if j < i {
                        j = i;
                    }
                    while j + 1 < i + k && ahead(j + 1) <= 1.0 {
                        j += 1;
                    }
                    for c in [j, j + 1] {
                        if c > i && c < i + k {
                            let d = one_point_q(moved[i], moved[c % k]);
                            if d.cmp_q(&best) == std::cmp::Ordering::Greater {
                                best = d;
                            }
                        }
                    }
                }
                best.to_f64()
            })
            .collect()
    }
}

/// A point of two copies of ℤ ∪ {∞} glued along `∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Glued {
    Hat(i64),
    Check(i64),
    Infinity,
}

impl Glued {
    /// The copy-independent coordinate.
    pub fn base(&self) -> ExtInt {
        match self {
            Glued::Hat(n) | Glued::Check(n) => ExtInt::Fin(*n),
            Glued::Infinity => ExtInt::PosInf,
        }
    }
}

fn glued_of(p: &Point) -> Glued {
    match p {
        Point::Glued(x) => *x,
        other => panic!("glued compactification expects a glued point, got {other:?}"),
    }
}

/// Two copies `n̂`, `ň` of the one-point compactification glued at `∞`.
///
/// Within a copy the metric is that of the one-point compactification.
/// Across copies `d(n̂, m̌) = min(d_Y(n, m) + min(r_n, r_m), r_n + r_m)` with
/// `r_n = 1/(1+|n|)`: the separation `min(r_n, r_m)` vanishes at `∞`, and the
/// second term is the route through `∞`, which keeps the triangle
/// inequality. In particular `d(n̂, ň) = r_n`.
#[derive(Clone, Debug, Default)]
pub struct GluedCompactification;

impl GluedCompactification {
    pub fn new() -> Self {
        GluedCompactification
    }

    /// `{n̂ : |n| ≤ m} ∪ {∞}`.
    pub fn hat_copy(m: i64) -> Vec<Point> {
        (-m..=m).map(|n| Point::Glued(Glued::Hat(n))).chain([Point::Glued(Glued::Infinity)]).collect()
    }

    /// `{ň : |n| ≤ m} ∪ {∞}`.
    pub fn check_copy(m: i64) -> Vec<Point> {
        (-m..=m).map(|n| Point::Glued(Glued::Check(n))).chain([Point::Glued(Glued::Infinity)]).collect()
    }

    fn q(a: Glued, b: Glued) -> Q {
        match (a, b) {
            (Glued::Hat(n), Glued::Check(m)) | (Glued::Check(n), Glued::Hat(m)) => {
                let through = r(n).add(r(m));
                let direct = one_point_q(ExtInt::Fin(n), ExtInt::Fin(m)).add(r(n).min(r(m)));
                direct.min(through)
            }
            _ => one_point_q(a.base(), b.base()),
        }
    }
}

impl System for GluedCompactification {
    fn label(&self) -> &str {
        "glued_compactification"
    }

    fn dim(&self) -> usize {
        1
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Point {
        let k = g.first();
        Point::Glued(match glued_of(p) {
            Glued::Hat(n) => Glued::Hat(n + k),
            Glued::Check(n) => Glued::Check(n + k),
            Glued::Infinity => Glued::Infinity,
        })
    }

    fn metric(&self, a: &Point, b: &Point) -> f64 {
        Self::q(glued_of(a), glued_of(b)).to_f64()
    }

    fn net(&self, mesh: f64) -> Result<NetSet> {
        let m = net_radius(mesh)?;
        let mut pts = Self::hat_copy(m);
        pts.pop();
        pts.extend(Self::check_copy(m));
        Ok(NetSet::from_parts(self.label(), pts, mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        2.0
    }

    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Glued(_))
    }
}
