//! Factor maps, finite fiber approximations, and the constructions that
//! build new factor maps from old ones: products, compositions, hyperspace
//! lifts and the single-fiber hyperspace `H_π(X)`.

mod regularity;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::GroupElement;
use crate::systems::{
    dedup_points, HyperSystem, MeshPolicy, NetSet, Point, ProductSystem, SetFamily, SystemRef, TrivialSystem,
};

pub use regularity::{
    diam_mean_proximal_test, f_diam_mean_proximal_test, sample_targets, FiberSummary, RegularityParams, RegularityReport,
    RegularityRow,
};

pub type PointMap = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// Closed-form fiber `(y, mesh) ↦ π⁻¹(y)` as a finite set.
pub type FiberHint = Arc<dyn Fn(&Point, f64) -> Result<NetSet> + Send + Sync>;

/// A factor map `π: X → Y`.
#[derive(Clone)]
pub struct FactorMap {
    label: String,
    source: SystemRef,
    target: SystemRef,
    map: PointMap,
    fiber_hint: Option<FiberHint>,
    distinguished: Vec<Point>,
}

impl fmt::Debug for FactorMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FactorMap({}: {} → {})", self.label, self.source.label(), self.target.label())
    }
}

impl FactorMap {
    pub fn new(label: impl Into<String>, source: SystemRef, target: SystemRef, map: PointMap) -> Result<FactorMap> {
        if source.dim() != target.dim() {
            return Err(Error::DimensionMismatch { expected: source.dim(), got: target.dim() });
        }
        Ok(FactorMap { label: label.into(), source, target, map, fiber_hint: None, distinguished: Vec::new() })
    }

    pub fn with_fiber_hint(mut self, hint: FiberHint) -> FactorMap {
        self.fiber_hint = Some(hint);
        self
    }

    /// Target points every fiber sample should include.
    pub fn with_distinguished(mut self, points: Vec<Point>) -> FactorMap {
        self.distinguished = points;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn source(&self) -> &SystemRef {
        &self.source
    }

    pub fn target(&self) -> &SystemRef {
        &self.target
    }

    pub fn distinguished(&self) -> &[Point] {
        &self.distinguished
    }

    pub fn has_fiber_hint(&self) -> bool {
        self.fiber_hint.is_some()
    }

    pub fn apply(&self, x: &Point) -> Point {
        (self.map)(x)
    }

    /// `π(g.x) == g.π(x)` on every sample.
    pub fn is_equivariant_on(&self, samples: &[(GroupElement, Point)]) -> bool {
        samples.iter().all(|(g, x)| self.apply(&self.source.act(g, x)) == self.target.act(g, &self.apply(x)))
    }
}

/// A finite stand-in for `π⁻¹(y)`.
#[derive(Clone, Debug)]
pub struct FiberApprox {
    pub y: Point,
    pub points: NetSet,
    /// The `η` of the filter `d_Y(π(x), y) ≤ η`; zero for closed-form fibers.
    pub slack: f64,
    /// False when the filter came up empty and the nearest candidate was
    /// used instead, or the point count never settled.
    pub reliable: bool,
    pub from_hint: bool,
}

/// The fiber over `y`: the closed-form hint when there is one, otherwise the
/// points of `source.net(mesh)` whose image lies within `η` of `y`. Without
/// an explicit slack, `η` starts at twice the mesh and is halved until the
/// point count is the same across two halvings.
pub fn fiber(pi: &FactorMap, y: &Point, mesh: f64, slack: Option<f64>) -> Result<FiberApprox> {
    if !pi.target.contains(y) {
        return Err(Error::ForeignPoint(pi.target.label().to_string()));
    }
    if let Some(hint) = &pi.fiber_hint {
        return Ok(FiberApprox { y: y.clone(), points: hint(y, mesh)?, slack: 0.0, reliable: true, from_hint: true });
    }
    let net = pi.source.net(mesh)?;
    let dists: Vec<f64> = net.points().iter().map(|x| pi.target.metric(&pi.apply(x), y)).collect();
    let count = |eta: f64| dists.iter().filter(|&&d| d <= eta).count();
    let pick = |eta: f64| -> Vec<Point> {
        net.points().iter().zip(&dists).filter(|(_, &d)| d <= eta).map(|(x, _)| x.clone()).collect()
    };
    let (eta, reliable) = match slack {
        Some(eta) => (eta, true),
        None => {
            let eta0 = 2.0 * mesh;
            let counts: Vec<usize> = (0..12).map(|k| count(eta0 / f64::powi(2.0, k))).collect();
            match (0..counts.len() - 2).find(|&k| counts[k] > 0 && counts[k] == counts[k + 1] && counts[k] == counts[k + 2]) {
                Some(k) => (eta0 / f64::powi(2.0, k as i32), true),
                None => (eta0, false),
            }
        }
    };
    let pts = pick(eta);
    if pts.is_empty() {
        let idx = dists.iter().enumerate().fold(0, |b, (i, d)| if *d < dists[b] { i } else { b });
        let p = net.points()[idx].clone();
        return Ok(FiberApprox {
            y: y.clone(),
            points: NetSet::new(pi.source.as_ref(), vec![p], mesh)?,
            slack: dists[idx],
            reliable: false,
            from_hint: false,
        });
    }
    Ok(FiberApprox { y: y.clone(), points: NetSet::new(pi.source.as_ref(), pts, mesh)?, slack: eta, reliable, from_hint: false })
}

/// `id: X → X`.
pub fn identity(system: SystemRef) -> FactorMap {
    let label = format!("id({})", system.label());
    let sys = system.clone();
    FactorMap::new(label, system.clone(), system, Arc::new(|x: &Point| x.clone()))
        .expect("same dimension")
        .with_fiber_hint(Arc::new(move |y: &Point, mesh| NetSet::singleton(sys.as_ref(), y.clone(), mesh)))
}

/// Coarsest mesh at which fibers of a collapse to a point are listed; the
/// listed points witness a lower bound on the fiber's mean diameter.
pub const COLLAPSE_FIBER_MESH: f64 = 0.125;

/// `X → {pt}`. The fiber is all of `X`, listed at mesh at most
/// [`COLLAPSE_FIBER_MESH`].
pub fn to_point(system: SystemRef) -> Result<FactorMap> {
    let target: SystemRef = Arc::new(TrivialSystem::new(system.dim())?);
    let sys = system.clone();
    Ok(FactorMap::new(format!("{}→pt", system.label()), system, target.clone(), Arc::new(|_: &Point| Point::Unit))?
        .with_fiber_hint(Arc::new(move |_: &Point, mesh: f64| sys.net(mesh.max(COLLAPSE_FIBER_MESH))))
        .with_distinguished(vec![Point::Unit]))
}

fn tuple_parts(p: &Point, n: usize) -> Result<&[Point]> {
    match p {
        Point::Tuple(xs) if xs.len() == n => Ok(xs),
        _ => Err(Error::ForeignPoint(format!("product of {n}"))),
    }
}

/// `∏ π_i: ∏ X_i → ∏ Y_i` under the sup metric. Fibers are products of the
/// part fibers.
pub fn product_factor(pis: &[FactorMap]) -> Result<FactorMap> {
    if pis.is_empty() {
        return Err(Error::EmptyProduct);
    }
    let source: SystemRef = Arc::new(ProductSystem::new(pis.iter().map(|p| p.source.clone()).collect())?);
    let target: SystemRef = Arc::new(ProductSystem::new(pis.iter().map(|p| p.target.clone()).collect())?);
    let parts: Vec<FactorMap> = pis.to_vec();
    let n = parts.len();
    let mapper = parts.clone();
    let map: PointMap = Arc::new(move |x: &Point| match x {
        Point::Tuple(xs) => Point::tuple(xs.iter().zip(&mapper).map(|(xi, p)| p.apply(xi))),
        other => panic!("product factor expects a tuple, got {other:?}"),
    });
    let label = format!("product({})", pis.iter().map(|p| p.label.clone()).collect::<Vec<_>>().join(","));
    let mut out = FactorMap::new(label, source.clone(), target, map)?;
    if parts.iter().all(|p| p.has_fiber_hint()) {
        let src = source.clone();
        let hinted = parts.clone();
        out = out.with_fiber_hint(Arc::new(move |y: &Point, mesh: f64| {
            let ys = tuple_parts(y, n)?;
            let mut combos: Vec<Vec<Point>> = vec![Vec::new()];
            let mut part_mesh = mesh;
            for (p, yi) in hinted.iter().zip(ys) {
                let f = fiber(p, yi, mesh, None)?;
                part_mesh = part_mesh.max(f.points.mesh());
                let mut next = Vec::with_capacity(combos.len() * f.points.len());
                for c in &combos {
                    for x in f.points.points() {
                        let mut v = c.clone();
                        v.push(x.clone());
                        next.push(v);
                    }
                }
                combos = next;
            }
            NetSet::new(src.as_ref(), combos.into_iter().map(Point::tuple).collect(), part_mesh)
        }));
    }
    let dist: Vec<Vec<Point>> = parts.iter().map(|p| p.distinguished.clone()).collect();
    if dist.iter().all(|d| !d.is_empty()) {
        out.distinguished = vec![Point::tuple(dist.iter().map(|d| d[0].clone()))];
    }
    Ok(out)
}

/// `ψ ∘ φ` for `φ: X → Y` and `ψ: Y → Z`. The fiber over `z` is the union of
/// the `φ`-fibers over the points of the `ψ`-fiber.
pub fn compose_factor(phi: &FactorMap, psi: &FactorMap) -> Result<FactorMap> {
    if phi.target.label() != psi.source.label() {
        return Err(Error::NotComposable(format!("{} ends in {}, {} starts at {}", phi.label, phi.target.label(), psi.label, psi.source.label())));
    }
    let (a, b) = (phi.clone(), psi.clone());
    let map: PointMap = Arc::new(move |x: &Point| b.apply(&a.apply(x)));
    let label = format!("{}∘{}", psi.label, phi.label);
    let mut out = FactorMap::new(label, phi.source.clone(), psi.target.clone(), map)?;
    if phi.has_fiber_hint() && psi.has_fiber_hint() {
        let (a, b) = (phi.clone(), psi.clone());
        out = out.with_fiber_hint(Arc::new(move |z: &Point, mesh: f64| {
            let ys = fiber(&b, z, mesh, None)?;
            let mut pts = Vec::new();
            let mut m = mesh;
            for y in ys.points.points() {
                let f = fiber(&a, y, mesh, None)?;
                m = m.max(f.points.mesh());
                pts.extend(f.points.points().iter().cloned());
            }
            NetSet::new(a.source.as_ref(), dedup_points(pts), m)
        }));
    }
    out.distinguished = psi.distinguished.clone();
    Ok(out)
}

fn set_points(p: &Point) -> &NetSet {
    match p {
        Point::Set(s) => s,
        other => panic!("hyperspace expects a set, got {other:?}"),
    }
}

/// `H(π): H(X) → H(Y)`, `A ↦ π(A)` pointwise.
///
/// The fiber over a set `B` is listed as the union `U` of the base fibers over
/// the points of `B` together with the sections `S_i` that pick the `i`-th
/// point of each base fiber (cyclically). Every listed set maps onto `B`.
pub fn hyper_lift(pi: &FactorMap, policy_x: MeshPolicy, policy_y: MeshPolicy) -> Result<FactorMap> {
    let source = Arc::new(HyperSystem::new(pi.source.clone(), policy_x));
    let target = Arc::new(HyperSystem::new(pi.target.clone(), policy_y));
    let base = pi.clone();
    let map: PointMap = Arc::new(move |a: &Point| {
        let s = set_points(a);
        let img = dedup_points(s.points().iter().map(|x| base.apply(x)).collect());
        Point::set(NetSet::new(base.target.as_ref(), img, s.mesh()).expect("images of a nonempty set"))
    });
    let source_ref: SystemRef = source.clone();
    let mut out = FactorMap::new(format!("H({})", pi.label), source_ref, target, map)?;
    if pi.has_fiber_hint() {
        let base = pi.clone();
        let src = source.clone();
        out = out.with_fiber_hint(Arc::new(move |b: &Point, mesh: f64| {
            let bs = set_points(b);
            let fibers = bs.points().iter().map(|y| fiber(&base, y, mesh, None)).collect::<Result<Vec<_>>>()?;
            let widest = fibers.iter().map(|f| f.points.len()).max().unwrap_or(1);
            let m = fibers.iter().map(|f| f.points.mesh()).fold(mesh, f64::max);
            let mut sets = Vec::new();
            let union = dedup_points(fibers.iter().flat_map(|f| f.points.points().iter().cloned()).collect());
            sets.push(Point::set(NetSet::new(base.source.as_ref(), union, m)?));
            for i in 0..widest.min(8) {
                let section = dedup_points(fibers.iter().map(|f| f.points.points()[i % f.points.len()].clone()).collect());
                let p = Point::set(NetSet::new(base.source.as_ref(), section, m)?);
                if !sets.contains(&p) {
                    sets.push(p);
                }
            }
            NetSet::new(src.as_ref(), sets, m)
        }));
    }
    Ok(out)
}

/// `H_π(X)`, the sets lying in a single fiber, with `π_H: A ↦ y`.
pub fn build_h_pi(pi: &FactorMap) -> Result<(Arc<HyperSystem>, FactorMap)> {
    let fam_pi = pi.clone();
    let family: SetFamily = Arc::new(move |mesh: f64| {
        let ys = fam_pi.target.net(mesh)?;
        ys.points().iter().map(|y| fiber(&fam_pi, y, mesh, None).map(|f| f.points)).collect()
    });
    let h = Arc::new(HyperSystem::new(pi.source.clone(), MeshPolicy::Within { label: pi.label.clone(), family }));
    let base = pi.clone();
    let map: PointMap = Arc::new(move |a: &Point| base.apply(&set_points(a).points()[0]));
    let h_ref: SystemRef = h.clone();
    let mut out = FactorMap::new(format!("{}_H", pi.label), h_ref, pi.target.clone(), map)?;
    if pi.has_fiber_hint() {
        let base = pi.clone();
        let hs = h.clone();
        out = out.with_fiber_hint(Arc::new(move |y: &Point, mesh: f64| {
            let f = fiber(&base, y, mesh, None)?;
            let pts = f.points.points();
            let n = pts.len().min(12);
            let mut sets = Vec::new();
            for mask in 1u32..(1 << n) {
                let s: Vec<Point> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| pts[i].clone()).collect();
                sets.push(Point::set(NetSet::new(base.source.as_ref(), s, f.points.mesh())?));
            }
            NetSet::new(hs.as_ref(), sets, f.points.mesh())
        }));
    }
    out.distinguished = pi.distinguished.clone();
    Ok((h, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{Angle, Rotation};

    #[test]
    fn identity_fiber_is_the_point() {
        let r: SystemRef = Arc::new(Rotation::new(1, 7).unwrap());
        let id = identity(r.clone());
        let y = Point::Angle(Angle::new(2, 9));
        let f = fiber(&id, &y, 0.1, None).unwrap();
        assert_eq!(f.points.points(), &[y.clone()]);
        let g = GroupElement::scalar(5);
        assert!(id.is_equivariant_on(&[(g, y)]));
    }

    #[test]
    fn filtered_fiber_without_hint() {
        let r: SystemRef = Arc::new(Rotation::new(1, 7).unwrap());
        let map: PointMap = Arc::new(|x: &Point| x.clone());
        let plain = FactorMap::new("plain", r.clone(), r.clone(), map).unwrap();
        let y = Point::Angle(Angle::new(3, 10));
        let f = fiber(&plain, &y, 0.1, None).unwrap();
        assert!(f.reliable);
        assert_eq!(f.points.points(), &[y.clone()]);
        let off = Point::Angle(Angle::new(1, 40));
        let f = fiber(&plain, &off, 0.1, Some(1e-6)).unwrap();
        assert!(!f.reliable);
        assert_eq!(f.points.len(), 1);
    }

    #[test]
    fn products_of_identities() {
        let a: SystemRef = Arc::new(Rotation::new(1, 7).unwrap());
        let b: SystemRef = Arc::new(Rotation::new(2, 9).unwrap());
        let p = product_factor(&[identity(a), identity(b)]).unwrap();
        let x = Point::tuple([Point::Angle(Angle::new(1, 3)), Point::Angle(Angle::new(1, 5))]);
        assert_eq!(p.apply(&x), x);
        let f = fiber(&p, &x, 0.1, None).unwrap();
        assert_eq!(f.points.points(), &[x]);
    }

    #[test]
    fn compose_requires_matching_systems() {
        let a: SystemRef = Arc::new(Rotation::new(1, 7).unwrap());
        let b: SystemRef = Arc::new(Rotation::new(2, 9).unwrap());
        assert!(matches!(compose_factor(&identity(a.clone()), &identity(b)), Err(Error::NotComposable(_))));
        let c = compose_factor(&identity(a.clone()), &to_point(a).unwrap()).unwrap();
        assert_eq!(c.apply(&Point::Angle(Angle::new(1, 2))), Point::Unit);
    }
}
