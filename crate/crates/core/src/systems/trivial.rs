use super::{NetSet, Point, System};
use crate::error::{Error, Result};
use crate::group::GroupElement;

/// The one-point system, target of the constant factor map.
#[derive(Clone, Debug)]
pub struct TrivialSystem {
    dim: usize,
    label: String,
}

impl TrivialSystem {
    pub fn new(dim: usize) -> Result<TrivialSystem> {
        if dim == 0 {
            return Err(Error::ZeroDimension(dim));
        }
        Ok(TrivialSystem { dim, label: format!("point(d={dim})") })
    }
}

impl System for TrivialSystem {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn act(&self, _g: &GroupElement, p: &Point) -> Point {
        p.clone()
    }

    fn metric(&self, _a: &Point, _b: &Point) -> f64 {
        0.0
    }

    fn net(&self, mesh: f64) -> Result<NetSet> {
        if !(mesh > 0.0 && mesh.is_finite()) {
            return Err(Error::BadMesh(mesh));
        }
        Ok(NetSet::from_parts(&self.label, vec![Point::Unit], mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        0.0
    }

    fn contains(&self, p: &Point) -> bool {
        matches!(p, Point::Unit)
    }

    fn is_isometric(&self) -> bool {
        true
    }
}
