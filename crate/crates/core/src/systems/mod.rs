//! Compact metric ℤ^d-systems and the finite machinery over them.
//!
//! Every system exposes an exact action on its [`Point`] payloads, a metric,
//! and ε-net generation. [`NetSet`] is the finite stand-in for a compact
//! subset; [`diam_set`], [`hausdorff`] and [`act_set`] are exact over the
//! listed points.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::GroupElement;

mod angle;
mod compactification;
mod frac;
mod full_shift;
mod hyper;
mod product;
mod sturmian;
mod toeplitz;
mod trivial;
pub(crate) mod word;

pub use angle::{golden_mean_approximant, rational_approximant, Angle, Rotation};
pub use compactification::{ExtInt, Glued, GluedCompactification, OnePointCompactification, TwoPointCompactification};
pub use full_shift::{FullShift, Word};
pub use hyper::{HyperSystem, MeshPolicy, SetFamily};
pub use product::{ProductMetric, ProductSystem};
pub use sturmian::{Sturmian, SturmianPoint, MIN_STURMIAN_DEN};
pub use toeplitz::{FillWindow, HoleFill, Level, Odometer, PeriodStructure, Regularity, Toeplitz, ToeplitzPoint, REGULARITY_THRESHOLD};
pub use trivial::TrivialSystem;

/// Upper bound on the number of points any constructed net may hold.
pub const MAX_NET_POINTS: usize = 1 << 20;

/// Shared handle to a system.
pub type SystemRef = Arc<dyn System>;

/// A point of one of the catalog systems.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    /// A point of the circle ℝ/ℤ.
    Angle(Angle),
    /// An eventually periodic bi-infinite word (full shift).
    Word(Word),
    /// A Sturmian coding of an angle.
    Sturmian(SturmianPoint),
    /// A point of a Toeplitz skeleton subshift.
    Toeplitz(ToeplitzPoint),
    /// A residue in the truncated odometer.
    Odometer(u64),
    /// ℤ ∪ {±∞}.
    Ext(ExtInt),
    /// The glued double copy of the one-point compactification.
    Glued(Glued),
    /// The single point of the trivial system.
    Unit,
    /// A point of a finite product.
    Tuple(Arc<[Point]>),
    /// A point of a hyperspace.
    Set(Arc<NetSet>),
}

impl Point {
    pub fn tuple(parts: impl IntoIterator<Item = Point>) -> Point {
        Point::Tuple(parts.into_iter().collect::<Vec<_>>().into())
    }

    pub fn set(set: NetSet) -> Point {
        Point::Set(Arc::new(set))
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Angle(a) => write!(f, "{a}"),
            Point::Word(w) => write!(f, "w[{}]", w.window(-4, 4).iter().map(|s| s.to_string()).collect::<String>()),
            Point::Sturmian(s) => write!(f, "st({}{})", s.angle(), if s.upper() { "+" } else { "" }),
            Point::Toeplitz(t) => write!(f, "tp({};{}{})", t.pos, t.fill.seed, if t.fill.flip { "'" } else { "" }),
            Point::Odometer(z) => write!(f, "z{z}"),
            Point::Ext(ExtInt::Fin(n)) => write!(f, "{n}"),
            Point::Ext(ExtInt::PosInf) => f.write_str("+inf"),
            Point::Ext(ExtInt::NegInf) => f.write_str("-inf"),
            Point::Glued(Glued::Hat(n)) => write!(f, "{n}^"),
            Point::Glued(Glued::Check(n)) => write!(f, "{n}v"),
            Point::Glued(Glued::Infinity) => f.write_str("inf"),
            Point::Unit => f.write_str("pt"),
            Point::Tuple(xs) => {
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
            Point::Set(s) => write!(f, "set[{}]", s.len()),
        }
    }
}

/// A finite point list standing for a compact subset, with the mesh it was
/// built at. `certified` is false once the set has been moved by the action,
/// because the image of a net is a net of the image only up to the modulus
/// of continuity of the group element.
#[derive(Clone, Debug)]
pub struct NetSet {
    system: Arc<str>,
    points: Vec<Point>,
    mesh: f64,
    certified: bool,
}

/// Sets compare by system and listed points; mesh and certification are
/// metadata.
impl PartialEq for NetSet {
    fn eq(&self, other: &Self) -> bool {
        self.system == other.system && self.points == other.points
    }
}

impl NetSet {
    pub fn new(system: &dyn System, points: Vec<Point>, mesh: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter { name: "points", reason: "a net set is nonempty".into() });
        }
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(Error::BadMesh(mesh));
        }
        if points.iter().any(|p| !system.contains(p)) {
            return Err(Error::ForeignPoint(system.label().to_string()));
        }
        Ok(NetSet { system: Arc::from(system.label()), points, mesh, certified: true })
    }

    pub(crate) fn from_parts(system: &str, points: Vec<Point>, mesh: f64, certified: bool) -> Self {
        debug_assert!(!points.is_empty());
        NetSet { system: Arc::from(system), points, mesh, certified }
    }

    pub fn singleton(system: &dyn System, p: Point, mesh: f64) -> Result<Self> {
        NetSet::new(system, vec![p], mesh)
    }

    pub fn system_label(&self) -> &str {
        &self.system
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn certified(&self) -> bool {
        self.certified
    }

    pub(crate) fn check(&self, system: &dyn System) -> Result<()> {
        if &*self.system != system.label() {
            return Err(Error::SystemMismatch { expected: system.label().to_string(), found: self.system.to_string() });
        }
        Ok(())
    }
}

/// A compact metric space with a ℤ^d action.
pub trait System: Send + Sync + fmt::Debug {
    fn label(&self) -> &str;

    fn dim(&self) -> usize;

    /// `g.p`. Exact: `act(g, act(h, p)) == act(g + h, p)`.
    fn act(&self, g: &GroupElement, p: &Point) -> Point;

    fn metric(&self, a: &Point, b: &Point) -> f64;

    /// A finite set such that every point of the space lies within `mesh` of
    /// some listed point.
    fn net(&self, mesh: f64) -> Result<NetSet>;

    fn diameter_bound(&self) -> f64;

    /// Whether points belong to this system's payload type.
    fn contains(&self, p: &Point) -> bool;

    /// True when metric values are exact rationals rounded once.
    fn is_exact(&self) -> bool {
        true
    }

    /// True when every group element acts as an isometry.
    fn is_isometric(&self) -> bool {
        false
    }

    /// Extra points within `mesh` of `x` that differ from it far from the
    /// origin. Symbolic systems use these so that small balls keep witnesses
    /// of far-away disagreement; the default is none.
    fn local_variants(&self, _x: &Point, _mesh: f64) -> Vec<Point> {
        Vec::new()
    }

    /// The points of `net(mesh)` within `delta` of `x`, plus `x` and its
    /// local variants.
    fn ball_net(&self, x: &Point, delta: f64, mesh: f64) -> Result<NetSet> {
        let net = self.net(mesh)?;
        let mut pts = vec![x.clone()];
        pts.extend(self.local_variants(x, mesh));
        for p in net.points {
            if within(self.metric(x, &p), delta) && !pts.contains(&p) {
                pts.push(p);
            }
        }
        Ok(NetSet::from_parts(self.label(), pts, mesh, true))
    }

    /// `diam(g.S)` for `g = lo, lo+1, …, hi` along the first coordinate.
    fn diam_profile(&self, points: &[Point], lo: i64, hi: i64) -> Vec<f64> {
        generic_diam_profile(self, points, lo, hi)
    }
}

/// `d ≤ delta`, allowing for one rounding of an exact rational.
pub(crate) fn within(d: f64, delta: f64) -> bool {
    d <= delta * (1.0 + 1e-12) + 1e-300
}

pub(crate) fn unit_vector(dim: usize, n: i64) -> GroupElement {
    let mut coords = vec![0; dim];
    if dim > 0 {
        coords[0] = n;
    }
    GroupElement::new(coords)
}

pub(crate) fn generic_diam_profile<S: System + ?Sized>(sys: &S, points: &[Point], lo: i64, hi: i64) -> Vec<f64> {
    if hi < lo {
        return Vec::new();
    }
    if sys.is_isometric() {
        return vec![diam_points(sys, points); (hi - lo + 1) as usize];
    }
    let dim = sys.dim();
    (lo..=hi)
        .into_par_iter()
        .map(|n| {
            let g = unit_vector(dim, n);
            let moved: Vec<Point> = points.iter().map(|p| sys.act(&g, p)).collect();
            diam_points(sys, &moved)
        })
        .collect()
}

/// Max pairwise distance.
pub fn diam_points<S: System + ?Sized>(sys: &S, pts: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            best = best.max(sys.metric(&pts[i], &pts[j]));
        }
    }
    best
}

/// Directed Hausdorff distance `max_a min_b d(a, b)` with the early-break
/// scan: once some `b` is closer than the running maximum, `a` cannot raise it.
pub fn directed_hausdorff<S: System + ?Sized>(sys: &S, a: &[Point], b: &[Point]) -> f64 {
    let mut cmax = 0.0f64;
    for p in a {
        let mut cmin = f64::INFINITY;
        for q in b {
            let d = sys.metric(p, q);
            if d < cmax {
                cmin = d;
                break;
            }
            cmin = cmin.min(d);
        }
        if cmin > cmax {
            cmax = cmin;
        }
    }
    cmax
}

pub fn hausdorff_points<S: System + ?Sized>(sys: &S, a: &[Point], b: &[Point]) -> f64 {
    directed_hausdorff(sys, a, b).max(directed_hausdorff(sys, b, a))
}

pub fn diam_set(sys: &dyn System, a: &NetSet) -> Result<f64> {
    a.check(sys)?;
    Ok(diam_points(sys, &a.points))
}

pub fn hausdorff(sys: &dyn System, a: &NetSet, b: &NetSet) -> Result<f64> {
    a.check(sys)?;
    b.check(sys)?;
    Ok(hausdorff_points(sys, &a.points, &b.points))
}

/// Pointwise image `g.A`; the result is tagged uncertified.
pub fn act_set(sys: &dyn System, g: &GroupElement, a: &NetSet) -> Result<NetSet> {
    a.check(sys)?;
    if g.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: g.dim() });
    }
    let points = a.points.iter().map(|p| sys.act(g, p)).collect();
    Ok(NetSet { system: a.system.clone(), points, mesh: a.mesh, certified: false })
}

/// Closed ball `{x' : d(x, x') ≤ delta}` realized over `net(mesh)`.
pub fn ball_net(sys: &dyn System, x: &Point, delta: f64, mesh: f64) -> Result<NetSet> {
    if !(mesh > 0.0 && mesh.is_finite()) {
        return Err(Error::BadMesh(mesh));
    }
    if !(delta >= mesh) {
        return Err(Error::InvalidParameter { name: "delta", reason: format!("mesh {mesh} exceeds delta {delta}") });
    }
    if !sys.contains(x) {
        return Err(Error::ForeignPoint(sys.label().to_string()));
    }
    sys.ball_net(x, delta, mesh)
}

/// Index of the listed point nearest to `y` (first on ties).
pub fn nearest(sys: &dyn System, set: &NetSet, y: &Point) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in set.points.iter().enumerate() {
        let d = sys.metric(p, y);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Removes exact duplicates keeping first occurrences.
pub(crate) fn dedup_points(pts: Vec<Point>) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Mesh to depth: smallest `m ≥ 0` with `2^-m ≤ mesh`.
pub(crate) fn dyadic_depth(mesh: f64) -> Result<u32> {
    if !(mesh > 0.0 && mesh.is_finite()) {
        return Err(Error::BadMesh(mesh));
    }
    let mut m = 0u32;
    while 2f64.powi(-(m as i32)) > mesh * (1.0 + 1e-12) {
        m += 1;
        if m > 1000 {
            return Err(Error::BadMesh(mesh));
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_diam(sys: &dyn System, pts: &[Point]) -> f64 {
        let mut best = 0.0f64;
        for a in pts {
            for b in pts {
                best = best.max(sys.metric(a, b));
            }
        }
        best
    }

    fn brute_hausdorff(sys: &dyn System, a: &[Point], b: &[Point]) -> f64 {
        let dir = |x: &[Point], y: &[Point]| {
            x.iter().map(|p| y.iter().map(|q| sys.metric(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
        };
        dir(a, b).max(dir(b, a))
    }

    #[test]
    fn circle_hausdorff_example() {
        let rot = Rotation::new(1, 4).unwrap();
        let a = NetSet::new(&rot, vec![Point::Angle(Angle::new(0, 1)), Point::Angle(Angle::new(1, 4))], 0.25).unwrap();
        let b = NetSet::new(&rot, vec![Point::Angle(Angle::new(0, 1)), Point::Angle(Angle::new(1, 2))], 0.25).unwrap();
        assert_eq!(hausdorff(&rot, &a, &b).unwrap(), 0.25);
        assert_eq!(hausdorff(&rot, &a, &a).unwrap(), 0.0);
        let single = NetSet::singleton(&rot, Point::Angle(Angle::new(1, 3)), 0.1).unwrap();
        assert_eq!(diam_set(&rot, &single).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_systems_rejected() {
        let r1 = Rotation::new(1, 4).unwrap();
        let r2 = Rotation::new(1, 3).unwrap();
        let a = r1.net(0.25).unwrap();
        assert!(matches!(diam_set(&r2, &a), Err(Error::SystemMismatch { .. })));
        assert!(matches!(act_set(&r2, &GroupElement::scalar(1), &a), Err(Error::SystemMismatch { .. })));
    }

    #[test]
    fn ball_net_counts() {
        let rot = Rotation::new(1, 7).unwrap();
        let x = Point::Angle(Angle::new(0, 1));
        let ball = ball_net(&rot, &x, 0.1, 0.01).unwrap();
        assert_eq!(ball.len(), 21);
        let whole = ball_net(&rot, &x, 0.5, 0.01).unwrap();
        assert_eq!(whole.len(), rot.net(0.01).unwrap().len());
        // at delta = mesh only x and its grid neighbours remain
        let tiny = ball_net(&rot, &Point::Angle(Angle::new(1, 30000)), 1e-4, 1e-4).unwrap();
        assert_eq!(tiny.points()[0], Point::Angle(Angle::new(1, 30000)));
        assert_eq!(tiny.len(), 3);
        assert!(ball_net(&rot, &x, 0.01, 0.1).is_err());
    }

    #[test]
    fn diam_and_hausdorff_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let systems: Vec<SystemRef> = vec![
            Arc::new(Rotation::new(13, 1_000_003).unwrap()),
            Arc::new(TwoPointCompactification::new()),
            Arc::new(GluedCompactification::new()),
            Arc::new(FullShift::new(2).unwrap()),
        ];
        for sys in &systems {
            let pool = sys.net(2f64.powi(-3)).unwrap().points().to_vec();
            for _ in 0..8 {
                let na = rng.gen_range(1..=pool.len().min(200));
                let nb = rng.gen_range(1..=pool.len().min(200));
                let a: Vec<Point> = (0..na).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
                let b: Vec<Point> = (0..nb).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
                assert_eq!(diam_points(sys.as_ref(), &a), brute_diam(sys.as_ref(), &a));
                assert_eq!(hausdorff_points(sys.as_ref(), &a, &b), brute_hausdorff(sys.as_ref(), &a, &b));
            }
        }
    }

    #[test]
    fn dyadic_depths() {
        assert_eq!(dyadic_depth(1.0).unwrap(), 0);
        assert_eq!(dyadic_depth(0.25).unwrap(), 2);
        assert_eq!(dyadic_depth(0.2).unwrap(), 3);
        assert!(dyadic_depth(0.0).is_err());
    }
}
