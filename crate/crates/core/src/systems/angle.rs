use std::fmt;

use super::frac::gcd;
use super::{NetSet, Point, System};
use crate::error::{Error, Result};
use crate::group::GroupElement;

/// An exact point `num/den` of ℝ/ℤ, kept reduced with `0 ≤ num < den`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Angle {
    num: i64,
    den: i64,
}

impl Angle {
    /// Panics on a zero denominator.
    pub fn new(num: i64, den: i64) -> Angle {
        assert!(den != 0, "angle denominator must be nonzero");
        Angle::from_i128(num as i128, den as i128)
    }

    pub(crate) fn from_i128(num: i128, den: i128) -> Angle {
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        let num = num.rem_euclid(den);
        let g = gcd(num, den).max(1);
        let (num, den) = (num / g, den / g);
        Angle { num: i64::try_from(num).expect("angle numerator overflow"), den: i64::try_from(den).expect("angle denominator overflow") }
    }

    /// The closest rational with denominator at most 10⁹ within 10⁻¹² of `x`.
    /// Intended for literal inputs such as `0.1`.
    pub fn from_f64(x: f64) -> Result<Angle> {
        if !x.is_finite() {
            return Err(Error::InvalidParameter { name: "angle", reason: format!("{x} is not finite") });
        }
        let frac = x.rem_euclid(1.0);
        let (p, q) = continued_fraction(frac, |p, q| ((p as f64 / q as f64) - frac).abs() <= 1e-12 || q > 1_000_000_000);
        Ok(Angle::from_i128(p as i128, q as i128))
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn add(&self, other: &Angle) -> Angle {
        let (a, b) = (self.num as i128, self.den as i128);
        let (c, d) = (other.num as i128, other.den as i128);
        Angle::from_i128(a * d + c * b, b * d)
    }

    pub fn mul_int(&self, k: i64) -> Angle {
        Angle::from_i128(self.num as i128 * k as i128, self.den as i128)
    }

    /// Circle distance `min(|x−y|, 1−|x−y|)`, rounded once.
    pub fn distance(&self, other: &Angle) -> f64 {
        let (a, b) = (self.num as i128, self.den as i128);
        let (c, d) = (other.num as i128, other.den as i128);
        let den = b * d;
        let diff = (a * d - c * b).rem_euclid(den);
        let num = diff.min(den - diff);
        let g = gcd(num, den).max(1);
        (num / g) as f64 / (den / g) as f64
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Runs the continued fraction expansion of `x ∈ [0,1)` until `stop(p, q)`
/// accepts a convergent.
fn continued_fraction(x: f64, stop: impl Fn(i64, i64) -> bool) -> (i64, i64) {
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    loop {
        let a = r.floor();
        let a_i = a as i64;
        let p2 = a_i.saturating_mul(p1).saturating_add(p0);
        let q2 = a_i.saturating_mul(q1).saturating_add(q0);
        if q2 > 0 && stop(p2, q2) {
            return (p2, q2);
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let f = r - a;
        if f < 1e-15 {
            return (p1, q1.max(1));
        }
        r = 1.0 / f;
    }
}

/// A convergent of `x` whose denominator is at least `min_den`.
pub fn rational_approximant(x: f64, min_den: i64) -> Result<Angle> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter { name: "alpha", reason: format!("{x} is not finite") });
    }
    let frac = x.rem_euclid(1.0);
    let (p, q) = continued_fraction(frac, |_, q| q >= min_den);
    if q < min_den {
        return Err(Error::DegenerateRotation { num: p, den: q, reason: "value is rational with a small denominator" });
    }
    Ok(Angle::from_i128(p as i128, q as i128))
}

/// `F_{k-1}/F_k` for the first Fibonacci denominator `F_k ≥ min_den`, a
/// convergent of the golden mean conjugate (√5−1)/2.
pub fn golden_mean_approximant(min_den: i64) -> Angle {
    let (mut a, mut b) = (1i64, 1i64);
    while b < min_den.max(2) {
        let c = a + b;
        a = b;
        b = c;
    }
    Angle::new(a, b)
}

/// Rotation of the circle ℝ/ℤ by `x ↦ x + Σ g_i α_i`.
#[derive(Clone, Debug)]
pub struct Rotation {
    alphas: Vec<Angle>,
    label: String,
}

impl Rotation {
    /// The ℤ-rotation by `num/den`.
    pub fn new(num: i64, den: i64) -> Result<Rotation> {
        if den == 0 {
            return Err(Error::DegenerateRotation { num, den, reason: "zero denominator" });
        }
        Rotation::with_alphas(vec![Angle::new(num, den)])
    }

    pub fn from_f64(alpha: f64) -> Result<Rotation> {
        Rotation::with_alphas(vec![Angle::from_f64(alpha)?])
    }

    /// A ℤ^d rotation, one angle per generator.
    pub fn with_alphas(alphas: Vec<Angle>) -> Result<Rotation> {
        if alphas.is_empty() {
            return Err(Error::ZeroDimension(0));
        }
        let label = format!("rotation({})", alphas.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","));
        Ok(Rotation { alphas, label })
    }

    pub fn alphas(&self) -> &[Angle] {
        &self.alphas
    }

    pub fn alpha(&self) -> Angle {
        self.alphas[0]
    }

    /// The uniform grid `{k/N}` with `N = ⌈1/mesh⌉`.
    pub fn grid_size(mesh: f64) -> Result<i64> {
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(Error::BadMesh(mesh));
        }
        let n = (1.0 / mesh - 1e-9).ceil().max(1.0);
        if n > super::MAX_NET_POINTS as f64 {
            return Err(Error::RegionTooLarge(n as u128));
        }
        Ok(n as i64)
    }

    /// Angles of an arc `[start, start + length]` sampled on the grid of
    /// spacing `1/n`.
    pub fn arc(&self, start: Angle, steps: i64, n: i64) -> Result<NetSet> {
        let step = Angle::new(1, n);
        let pts = (0..=steps).map(|k| Point::Angle(start.add(&step.mul_int(k)))).collect();
        NetSet::new(self, pts, 1.0 / (2 * n) as f64)
    }
}

fn angle_of(p: &Point) -> &Angle {
    match p {
        Point::Angle(a) => a,
        other => panic!("rotation expects an angle, got {other:?}"),
    }
}

impl System for Rotation {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.alphas.len()
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Point {
        assert_eq!(g.dim(), self.alphas.len(), "group element dimension");
        let mut x = *angle_of(p);
        for (gi, a) in g.coords().iter().zip(&self.alphas) {
            if *gi != 0 {
                x = x.add(&a.mul_int(*gi));
            }
        }
        Point::Angle(x)
    }

    fn metric(&self, a: &Point, b: &Point) -> f64 {
        angle_of(a).distance(angle_of(b))
    }

    fn net(&self, mesh: f64) -> Result<NetSet> {
        let n = Rotation::grid_size(mesh)?;
        let pts = (0..n).map(|k| Point::Angle(Angle::new(k, n))).collect();
        Ok(NetSet::from_parts(&self.label, pts, mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        0.5
    }

    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Angle(_))
    }

    fn is_isometric(&self) -> bool {
        true
    }

    /// Below grid meshes of `2^-16` the ball is listed as 33 equally spaced
    /// points of the arc, and the recorded mesh is that spacing.
    fn ball_net(&self, x: &Point, delta: f64, mesh: f64) -> Result<NetSet> {
        let n = Rotation::grid_size(mesh.max(f64::MIN_POSITIVE)).unwrap_or(i64::MAX);
        let mut pts = vec![*angle_of(x)];
        if n <= 1 << 16 {
            for k in 0..n {
                let p = Angle::new(k, n);
                if super::within(angle_of(x).distance(&p), delta) && !pts.contains(&p) {
                    pts.push(p);
                }
            }
            return Ok(NetSet::from_parts(&self.label, pts.into_iter().map(Point::Angle).collect(), mesh, true));
        }
        const D: i64 = 1 << 40;
        let r = (delta.min(0.5) * D as f64).floor() as i64;
        for j in -16..=16i64 {
            let p = angle_of(x).add(&Angle::new(j * (r / 16), D));
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
        let spacing = (r / 16) as f64 / D as f64;
        Ok(NetSet::from_parts(&self.label, pts.into_iter().map(Point::Angle).collect(), mesh.max(spacing), true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_and_metric_examples() {
        let r = Rotation::from_f64(0.2).unwrap();
        let x = Point::Angle(Angle::from_f64(0.1).unwrap());
        assert_eq!(r.act(&GroupElement::scalar(3), &x), Point::Angle(Angle::new(7, 10)));
        assert_eq!(r.act(&GroupElement::scalar(0), &x), x);
        let a = Point::Angle(Angle::new(1, 10));
        let b = Point::Angle(Angle::new(9, 10));
        assert_eq!(r.metric(&a, &b), 0.2);
    }

    #[test]
    fn approximants() {
        let g = golden_mean_approximant(1_000_000);
        assert_eq!((g.num(), g.den()), (832040, 1346269));
        let c = rational_approximant((5f64.sqrt() - 1.0) / 2.0, 1_000_000).unwrap();
        assert!(c.den() >= 1_000_000);
        assert!((c.to_f64() - 0.6180339887).abs() < 1e-9);
        assert!(rational_approximant(0.25, 1_000_000).is_err());
        assert_eq!(Angle::from_f64(0.375).unwrap(), Angle::new(3, 8));
    }

    #[test]
    fn net_covers_circle() {
        let r = Rotation::new(1, 3).unwrap();
        let net = r.net(0.01).unwrap();
        assert_eq!(net.len(), 100);
        for k in 0..1000 {
            let y = Point::Angle(Angle::new(k, 1000));
            assert!(net.points().iter().any(|p| r.metric(p, &y) <= 0.01));
        }
    }

    #[test]
    fn isometry_is_bit_exact() {
        let r = Rotation::new(832040, 1346269).unwrap();
        let x = Point::Angle(Angle::new(1, 7));
        let y = Point::Angle(Angle::new(2, 9));
        let d = r.metric(&x, &y);
        for g in [-1000i64, -3, 1, 77, 999] {
            let g = GroupElement::scalar(g);
            assert_eq!(r.metric(&r.act(&g, &x), &r.act(&g, &y)), d);
        }
    }

    #[test]
    fn zd_rotation() {
        let r = Rotation::with_alphas(vec![Angle::new(1, 5), Angle::new(1, 3)]).unwrap();
        let x = Point::Angle(Angle::new(0, 1));
        assert_eq!(r.act(&GroupElement::new([1, 1]), &x), Point::Angle(Angle::new(8, 15)));
        assert_eq!(r.dim(), 2);
    }
}
