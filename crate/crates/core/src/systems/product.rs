use super::{dedup_points, generic_diam_profile, NetSet, Point, System, SystemRef, MAX_NET_POINTS};
use crate::error::{Error, Result};
use crate::group::GroupElement;

/// Metric on a finite product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProductMetric {
    /// `max_i d_i`.
    Sup,
    /// `Σ_i 2^(−i) d_i / bound_i`, the truncation of the countable product
    /// metric.
    Weighted,
}

/// A finite product with the diagonal action.
#[derive(Clone, Debug)]
pub struct ProductSystem {
    parts: Vec<SystemRef>,
    metric: ProductMetric,
    label: String,
}

impl ProductSystem {
    pub fn new(parts: Vec<SystemRef>) -> Result<ProductSystem> {
        ProductSystem::with_metric(parts, ProductMetric::Sup)
    }

    pub fn with_metric(parts: Vec<SystemRef>, metric: ProductMetric) -> Result<ProductSystem> {
        let first = parts.first().ok_or(Error::EmptyProduct)?;
        let d = first.dim();
        if let Some(p) = parts.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
        let tag = match metric {
            ProductMetric::Sup => "",
            ProductMetric::Weighted => "weighted:",
        };
        let label = format!("product({tag}{})", parts.iter().map(|p| p.label().to_string()).collect::<Vec<_>>().join(","));
        Ok(ProductSystem { parts, metric, label })
    }

    pub fn parts(&self) -> &[SystemRef] {
        &self.parts
    }

    fn components<'a>(&self, p: &'a Point) -> &'a [Point] {
        match p {
            Point::Tuple(xs) if xs.len() == self.parts.len() => xs,
            other => panic!("product of {} expects a tuple, got {other:?}", self.parts.len()),
        }
    }

    fn part_mesh(&self, i: usize, mesh: f64) -> f64 {
        match self.metric {
            ProductMetric::Sup => mesh,
            ProductMetric::Weighted => mesh * self.parts[i].diameter_bound().max(f64::MIN_POSITIVE) / 2.0,
        }
    }

    fn combine(&self, sets: Vec<Vec<Point>>) -> Result<Vec<Point>> {
        let total = sets.iter().map(|s| s.len() as f64).product::<f64>();
        if total > MAX_NET_POINTS as f64 {
            return Err(Error::RegionTooLarge(total as u128));
        }
        let mut out: Vec<Vec<Point>> = vec![Vec::new()];
        for s in sets {
            let mut next = Vec::with_capacity(out.len() * s.len());
            for prefix in &out {
                for p in &s {
                    let mut v = prefix.clone();
                    v.push(p.clone());
                    next.push(v);
                }
            }
            out = next;
        }
        Ok(out.into_iter().map(Point::tuple).collect())
    }
}

impl System for ProductSystem {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn act(&self, g: &GroupElement, p: &Point) -> Point {
        Point::tuple(self.components(p).iter().zip(&self.parts).map(|(x, s)| s.act(g, x)))
    }

    fn metric(&self, a: &Point, b: &Point) -> f64 {
        let (xs, ys) = (self.components(a), self.components(b));
        match self.metric {
            ProductMetric::Sup => xs.iter().zip(ys).zip(&self.parts).map(|((x, y), s)| s.metric(x, y)).fold(0.0, f64::max),
            ProductMetric::Weighted => {
                let mut w = 1.0;
                let mut acc = 0.0;
                for ((x, y), s) in xs.iter().zip(ys).zip(&self.parts) {
                    acc += w * s.metric(x, y) / s.diameter_bound().max(f64::MIN_POSITIVE);
                    w /= 2.0;
                }
                acc
            }
        }
    }

    fn net(&self, mesh: f64) -> Result<NetSet> {
        let sets = self
            .parts
            .iter()
            .enumerate()
            .map(|(i, s)| s.net(self.part_mesh(i, mesh)).map(|n| n.points().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(NetSet::from_parts(&self.label, self.combine(sets)?, mesh, true))
    }

    fn diameter_bound(&self) -> f64 {
        match self.metric {
            ProductMetric::Sup => self.parts.iter().map(|p| p.diameter_bound()).fold(0.0, f64::max),
            ProductMetric::Weighted => (0..self.parts.len()).map(|i| 0.5f64.powi(i as i32)).sum(),
        }
    }

    fn contains(&self, p: &Point) -> bool {
        match p {
            Point::Tuple(xs) => xs.len() == self.parts.len() && xs.iter().zip(&self.parts).all(|(x, s)| s.contains(x)),
            _ => false,
        }
    }

    fn is_exact(&self) -> bool {
        self.metric == ProductMetric::Sup && self.parts.iter().all(|p| p.is_exact())
    }

    fn is_isometric(&self) -> bool {
        self.parts.iter().all(|p| p.is_isometric())
    }

    fn local_variants(&self, x: &Point, mesh: f64) -> Vec<Point> {
        let xs = self.components(x);
        let mut out = Vec::new();
        for (i, s) in self.parts.iter().enumerate() {
            for v in s.local_variants(&xs[i], self.part_mesh(i, mesh)) {
                let mut c = xs.to_vec();
                c[i] = v;
                out.push(Point::tuple(c));
            }
        }
        out
    }

    /// Under the sup metric the ball is the product of the factor balls.
    fn ball_net(&self, x: &Point, delta: f64, mesh: f64) -> Result<NetSet> {
        if self.metric == ProductMetric::Weighted {
            let net = self.net(mesh)?;
            let mut pts = vec![x.clone()];
            pts.extend(net.points().iter().filter(|p| super::within(self.metric(x, p), delta)).cloned());
            return Ok(NetSet::from_parts(&self.label, dedup_points(pts), mesh, true));
        }
        let xs = self.components(x);
        let sets = self
            .parts
            .iter()
            .zip(xs)
            .map(|(s, xi)| s.ball_net(xi, delta, mesh).map(|n| n.points().to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let mut pts = vec![x.clone()];
        pts.extend(self.combine(sets)?);
        Ok(NetSet::from_parts(&self.label, dedup_points(pts), mesh, true))
    }

    /// Under the sup metric, `diam(g.S)` is the largest diameter among the
    /// projections of `g.S`.
    fn diam_profile(&self, points: &[Point], lo: i64, hi: i64) -> Vec<f64> {
        if self.metric == ProductMetric::Weighted {
            return generic_diam_profile(self, points, lo, hi);
        }
        let mut out = vec![0.0f64; (hi - lo + 1).max(0) as usize];
        for (i, s) in self.parts.iter().enumerate() {
            let proj = dedup_points(points.iter().map(|p| self.components(p)[i].clone()).collect());
            let prof = s.diam_profile(&proj, lo, hi);
            for (o, v) in out.iter_mut().zip(prof) {
                *o = o.max(v);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::{Angle, Rotation};
    use super::*;

    #[test]
    fn rotations_product() {
        let a: SystemRef = Arc::new(Rotation::new(1, 5).unwrap());
        let b: SystemRef = Arc::new(Rotation::new(1, 3).unwrap());
        let p = ProductSystem::new(vec![a.clone(), b.clone()]).unwrap();
        let x = Point::tuple([Point::Angle(Angle::new(0, 1)), Point::Angle(Angle::new(0, 1))]);
        let y = p.act(&GroupElement::scalar(2), &x);
        assert_eq!(y, Point::tuple([Point::Angle(Angle::new(2, 5)), Point::Angle(Angle::new(2, 3))]));
        assert_eq!(p.metric(&x, &y), 0.4f64.max(1.0 / 3.0));
        assert_eq!(p.net(0.1).unwrap().len(), a.net(0.1).unwrap().len() * b.net(0.1).unwrap().len());
    }

    #[test]
    fn empty_and_mismatched() {
        assert!(matches!(ProductSystem::new(vec![]), Err(Error::EmptyProduct)));
        let a: SystemRef = Arc::new(Rotation::new(1, 5).unwrap());
        let b: SystemRef = Arc::new(Rotation::with_alphas(vec![Angle::new(1, 2), Angle::new(1, 3)]).unwrap());
        assert!(matches!(ProductSystem::new(vec![a, b]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn profile_matches_generic() {
        let a: SystemRef = Arc::new(Rotation::new(2, 7).unwrap());
        let b: SystemRef = Arc::new(super::super::FullShift::new(2).unwrap());
        let p = ProductSystem::new(vec![a, b]).unwrap();
        let net = p.net(0.5).unwrap();
        let pts: Vec<Point> = net.points().iter().take(9).cloned().collect();
        assert_eq!(p.diam_profile(&pts, -30, 30), generic_diam_profile(&p, &pts, -30, 30));
    }
}
