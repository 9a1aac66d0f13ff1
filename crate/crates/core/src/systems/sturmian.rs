use super::angle::Angle;
use super::word::{symbolic_distance, symbolic_profile};
use super::{dyadic_depth, NetSet, Point, System};
use crate::error::{Error, Result};
use crate::group::GroupElement;

/// A Sturmian word given by the angle it codes. The lower coding uses the
/// half-open interval `[1−α, 1)`, the upper coding `(1−α, 1]`; they differ
/// only when the orbit of the angle hits `0` or `1−α`, i.e. when the angle
/// is a multiple of `1/q`. Elsewhere `upper` is normalized to `false`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SturmianPoint {
    angle: Angle,
    upper: bool,
}

impl SturmianPoint {
    pub fn angle(&self) -> Angle {
        self.angle
    }

    pub fn upper(&self) -> bool {
        self.upper
    }
}

/// The Sturmian subshift of a rotation number `a/q` with `q ≥ 10⁶`.
#[derive(Clone, Debug)]
pub struct Sturmian {
    alpha: Angle,
    label: String,
}

/// Smallest admissible denominator of the rotation-number proxy.
pub const MIN_STURMIAN_DEN: i64 = 1_000_000;

impl Sturmian {
    pub fn new(alpha: Angle) -> Result<Sturmian> {
        if alpha.den() < MIN_STURMIAN_DEN {
            return Err(Error::DegenerateRotation {
                num: alpha.num(),
                den: alpha.den(),
                reason: "denominator below 10^6 makes the coding periodic at desk scale",
            });
        }
        Ok(Sturmian { alpha, label: format!("sturmian({alpha})") })
    }

    pub fn alpha(&self) -> Angle {
        self.alpha
    }

    pub fn point(&self, angle: Angle, upper: bool) -> SturmianPoint {
        let upper = upper && self.alpha.den() % angle.den() == 0;
        SturmianPoint { angle, upper }
    }

    /// Symbol `n` of the coding.
    pub fn symbol(&self, p: &SturmianPoint, n: i64) -> u8 {
        let (b, e) = (p.angle.num() as i128, p.angle.den() as i128);
        let (a, q) = (self.alpha.num() as i128, self.alpha.den() as i128);
        let modulus = e * q;
        let r = (b * q + n as i128 * a * e).rem_euclid(modulus);
        let threshold = (q - a) * e;
        let bit = if p.upper { r > threshold || r == 0 } else { r >= threshold };
        bit as u8
    }

    fn fill(&self, p: &SturmianPoint, start: i64, out: &mut [u8]) {
        let (b, e) = (p.angle.num() as i128, p.angle.den() as i128);
        let (a, q) = (self.alpha.num() as i128, self.alpha.den() as i128);
        let modulus = e * q;
        let step = a * e;
        let threshold = (q - a) * e;
        let mut r = (b * q + start as i128 * step).rem_euclid(modulus);
        for o in out.iter_mut() {
            let bit = if p.upper { r > threshold || r == 0 } else { r >= threshold };
            *o = bit as u8;
            r += step;
            if r >= modulus {
                r -= modulus;
            }
        }
    }

    /// The two codings of an angle (one if they coincide).
    pub fn codings(&self, angle: Angle) -> Vec<Point> {
        let lower = self.point(angle, false);
        let upper = self.point(angle, true);
        if upper.upper {
            vec![Point::Sturmian(lower), Point::Sturmian(upper)]
        } else {
            vec![Point::Sturmian(lower)]
        }
    }
}

fn sturmian_of(p: &Point) -> &SturmianPoint {
    match p {
        Point::Sturmian(s) => s,
        other => panic!("sturmian system expects a coding, got {other:?}"),
    }
}

impl System for Sturmian {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        1
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Point {
        let s = sturmian_of(p);
        Point::Sturmian(SturmianPoint { angle: s.angle.add(&self.alpha.mul_int(g.first())), upper: s.upper })
    }

    fn metric(&self, a: &Point, b: &Point) -> f64 {
        let (a, b) = (sturmian_of(a), sturmian_of(b));
        if a == b {
            return 0.0;
        }
        symbolic_distance(|n| self.symbol(a, n), |n| self.symbol(b, n))
    }

    /// Both codings at each cut point `-jα`, `j ∈ [-m, m+1]`. On the arcs
    /// between consecutive cut points the words on `[-m, m]` are constant,
    /// so these codings realize every cylinder of that length.
    fn net(&self, mesh: f64) -> Result<NetSet> {
        let m = dyadic_depth(mesh)? as i64;
        let mut cuts: Vec<Angle> = (-m..=m + 1).map(|j| self.alpha.mul_int(-j)).collect();
        cuts.sort();
        cuts.dedup();
        let pts = cuts.into_iter().flat_map(|c| self.codings(c)).collect();
        Ok(NetSet::from_parts(&self.label, pts, mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        1.0
    }

    fn contains(&self, p: &Point) -> bool {
        match p {
            Point::Sturmian(s) => !s.upper || self.alpha.den() % s.angle.den() == 0,
            _ => false,
        }
    }

    fn diam_profile(&self, points: &[Point], lo: i64, hi: i64) -> Vec<f64> {
        let pts: Vec<&SturmianPoint> = points.iter().map(sturmian_of).collect();
        symbolic_profile(pts.len(), |i, start, out: &mut [u8]| self.fill(pts[i], start, out), lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::super::golden_mean_approximant;
    use super::*;

    fn golden() -> Sturmian {
        Sturmian::new(golden_mean_approximant(MIN_STURMIAN_DEN)).unwrap()
    }

    #[test]
    fn fibonacci_prefix() {
        let s = golden();
        let x = s.point(Angle::new(0, 1), false);
        let w: Vec<u8> = (0..5).map(|n| s.symbol(&x, n)).collect();
        assert_eq!(w, vec![0, 1, 0, 1, 1]);
        let w: Vec<u8> = (1..6).map(|n| s.symbol(&x, n)).collect();
        assert_eq!(w, vec![1, 0, 1, 1, 0]);
    }

    #[test]
    fn codings_differ_at_hit_times() {
        let s = golden();
        let q = s.alpha().den();
        let pts = s.codings(Angle::new(0, 1));
        assert_eq!(pts.len(), 2);
        let (Point::Sturmian(lo), Point::Sturmian(up)) = (&pts[0], &pts[1]) else { unreachable!() };
        // the orbit of 0 hits 0 at multiples of q and 1−α one step earlier
        let hits: Vec<i64> = (-3000..3000).filter(|&n| s.symbol(lo, n) != s.symbol(up, n)).collect();
        assert_eq!(hits, vec![-1, 0]);
        assert_eq!(s.metric(&pts[0], &pts[1]), 1.0);
        let shifted: Vec<Point> = pts.iter().map(|p| s.act(&GroupElement::scalar(5), p)).collect();
        assert_eq!(s.metric(&shifted[0], &shifted[1]), 2f64.powi(-5));
        assert!(q > 1_000_000);
        assert_eq!(s.codings(Angle::new(1, 3)).len(), 1);
    }

    #[test]
    fn fill_matches_symbol() {
        let s = golden();
        let p = s.point(Angle::new(17, 101), false);
        let mut out = vec![0u8; 500];
        s.fill(&p, -250, &mut out);
        for (k, v) in out.iter().enumerate() {
            assert_eq!(*v, s.symbol(&p, -250 + k as i64));
        }
    }

    #[test]
    fn net_realizes_cylinders() {
        let s = golden();
        let net = s.net(2f64.powi(-4)).unwrap();
        let y = s.point(Angle::new(3, 11), false);
        let y = Point::Sturmian(y);
        assert!(net.points().iter().any(|p| s.metric(p, &y) <= 2f64.powi(-4)));
    }

    #[test]
    fn rejects_small_denominators() {
        assert!(Sturmian::new(Angle::new(1, 3)).is_err());
    }
}
