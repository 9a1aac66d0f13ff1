use std::fmt;
use std::sync::Arc;

use super::{hausdorff_points, NetSet, Point, System, SystemRef, MAX_NET_POINTS};
use crate::error::{Error, Result};
use crate::group::GroupElement;

/// Produces the finite family of base sets a hyperspace net is built from.
pub type SetFamily = Arc<dyn Fn(f64) -> Result<Vec<NetSet>> + Send + Sync>;

/// Which sets a hyperspace net enumerates.
#[derive(Clone)]
pub enum MeshPolicy {
    /// Singletons of the base net: the subsystem `𝔉₁(X)`.
    Singletons,
    /// Every nonempty subset of the base net, when it has at most
    /// `max_points` points.
    AllSubsets { max_points: usize },
    /// Nonempty subsets of each set in a family, e.g. the fibers of a factor
    /// map for `H_π(X)`.
    Within { label: String, family: SetFamily },
}

impl fmt::Debug for MeshPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshPolicy::Singletons => write!(f, "Singletons"),
            MeshPolicy::AllSubsets { max_points } => write!(f, "AllSubsets({max_points})"),
            MeshPolicy::Within { label, .. } => write!(f, "Within({label})"),
        }
    }
}

/// The hyperspace of a system: points are finite sets of base points, the
/// metric is the Hausdorff distance and the action is pointwise.
#[derive(Clone, Debug)]
pub struct HyperSystem {
    base: SystemRef,
    policy: MeshPolicy,
    label: String,
}

fn subsets(points: &[Point], system: &str, mesh: f64, out: &mut Vec<Point>) -> Result<()> {
    if points.len() > 16 || out.len() + (1usize << points.len()) > MAX_NET_POINTS {
        return Err(Error::RegionTooLarge(1u128 << points.len().min(127)));
    }
    for mask in 1u32..(1u32 << points.len()) {
        let pts = points.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, p)| p.clone()).collect();
        out.push(Point::set(NetSet::from_parts(system, pts, mesh, true)));
    }
    Ok(())
}

impl HyperSystem {
    pub fn new(base: SystemRef, policy: MeshPolicy) -> HyperSystem {
        let tag = match &policy {
            MeshPolicy::Singletons => "F1".to_string(),
            MeshPolicy::AllSubsets { .. } => "H".to_string(),
            MeshPolicy::Within { label, .. } => format!("H[{label}]"),
        };
        let label = format!("{tag}({})", base.label());
        HyperSystem { base, policy, label }
    }

    pub fn base(&self) -> &SystemRef {
        &self.base
    }

    pub fn policy(&self) -> &MeshPolicy {
        &self.policy
    }

    /// Wraps a base set as a hyperspace point, checking it belongs to the base.
    pub fn point(&self, set: NetSet) -> Result<Point> {
        if set.system_label() != self.base.label() {
            return Err(Error::SystemMismatch { expected: self.base.label().to_string(), found: set.system_label().to_string() });
        }
        Ok(Point::set(set))
    }
}

fn set_of(p: &Point) -> &NetSet {
    match p {
        Point::Set(s) => s,
        other => panic!("hyperspace expects a set, got {other:?}"),
    }
}

impl System for HyperSystem {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Point {
        let s = set_of(p);
        if g.is_zero() {
            return p.clone();
        }
        let pts = s.points().iter().map(|x| self.base.act(g, x)).collect();
        Point::set(NetSet::from_parts(s.system_label(), pts, s.mesh(), false))
    }

    fn metric(&self, a: &Point, b: &Point) -> f64 {
        let (a, b) = (set_of(a), set_of(b));
        if a == b {
            return 0.0;
        }
        hausdorff_points(self.base.as_ref(), a.points(), b.points())
    }

    fn net(&self, mesh: f64) -> Result<NetSet> {
        let mut pts = Vec::new();
        match &self.policy {
            MeshPolicy::Singletons => {
                for p in self.base.net(mesh)?.points() {
                    pts.push(Point::set(NetSet::from_parts(self.base.label(), vec![p.clone()], mesh, true)));
                }
            }
            MeshPolicy::AllSubsets { max_points } => {
                let base = self.base.net(mesh)?;
                if base.len() > *max_points {
                    return Err(Error::RegionTooLarge(base.len() as u128));
                }
                subsets(base.points(), self.base.label(), mesh, &mut pts)?;
            }
            MeshPolicy::Within { family, .. } => {
                for set in family(mesh)? {
                    subsets(set.points(), self.base.label(), mesh, &mut pts)?;
                }
            }
        }
        Ok(NetSet::from_parts(&self.label, pts, mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        self.base.diameter_bound()
    }

    fn contains(&self, p: &Point) -> bool {
        match p {
            Point::Set(s) => s.system_label() == self.base.label() && s.points().iter().all(|x| self.base.contains(x)),
            _ => false,
        }
    }

    fn is_exact(&self) -> bool {
        self.base.is_exact()
    }

    fn is_isometric(&self) -> bool {
        self.base.is_isometric()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Angle, GluedCompactification, Rotation};
    use super::*;

    #[test]
    fn singletons_embed_isometrically() {
        let r: SystemRef = Arc::new(Rotation::new(1, 7).unwrap());
        let h = HyperSystem::new(r.clone(), MeshPolicy::Singletons);
        let x = Point::Angle(Angle::new(1, 10));
        let y = Point::Angle(Angle::new(4, 10));
        let sx = h.point(NetSet::singleton(r.as_ref(), x.clone(), 0.1).unwrap()).unwrap();
        let sy = h.point(NetSet::singleton(r.as_ref(), y.clone(), 0.1).unwrap()).unwrap();
        assert_eq!(h.metric(&sx, &sy), r.metric(&x, &y));
        let g = GroupElement::scalar(3);
        let Point::Set(moved) = h.act(&g, &sx) else { unreachable!() };
        assert_eq!(moved.points(), &[r.act(&g, &x)]);
        assert!(!moved.certified());
        assert_eq!(h.net(0.1).unwrap().len(), 10);
    }

    #[test]
    fn glued_copies_are_fixed() {
        let x: SystemRef = Arc::new(GluedCompactification::new());
        let h = HyperSystem::new(x.clone(), MeshPolicy::Singletons);
        let m = 300;
        let a = h.point(NetSet::new(x.as_ref(), GluedCompactification::hat_copy(m), 1.0 / m as f64).unwrap()).unwrap();
        let b = h.point(NetSet::new(x.as_ref(), GluedCompactification::check_copy(m), 1.0 / m as f64).unwrap()).unwrap();
        assert_eq!(h.metric(&a, &b), 1.0);
        for g in [-100i64, -1, 1, 100] {
            let g = GroupElement::scalar(g);
            let ga = h.act(&g, &a);
            let gb = h.act(&g, &b);
            // truncation moves the ends by |g|; the copies stay distance 1 apart
            assert_eq!(h.metric(&ga, &gb), 1.0);
            assert!(h.metric(&ga, &a) <= 1.0 / (1.0 + (m - 100) as f64) + 1e-12);
        }
    }

    #[test]
    fn all_subsets_count() {
        let r: SystemRef = Arc::new(Rotation::new(1, 7).unwrap());
        let h = HyperSystem::new(r, MeshPolicy::AllSubsets { max_points: 8 });
        assert_eq!(h.net(0.25).unwrap().len(), 15);
    }
}
