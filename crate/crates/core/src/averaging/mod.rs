//! Følner averages `K*f`, the limsup proxy `A_F`, the translate-sup `A`, and
//! the quantities built from them: mean diameters, Weyl and Besicovitch
//! pseudometrics, and asymptotic and Banach densities.
//!
//! Every estimator tabulates an orbit function `g ↦ φ(g)` over one box that
//! contains all windows it will average, then reads window sums off a
//! summed-area table.

mod checks;
mod estimators;
mod table;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupElement, Window};
use crate::systems::{diam_points, Point, System};
use crate::verdict::Outcome;

pub use checks::{
    check_density_estimates, check_density_estimates_orbit, check_majorizing_observables, check_majorizing_transfer,
    check_s_property, sum_functional, MajorizingReport,
};
pub use estimators::{
    along_table, banach_mean, banach_table, besicovitch_distance, density_along, density_report, diam_gap,
    estimate_orbit, evaluation_region, folner_selection, mean_along, mean_diameter, mean_diameter_along, tabulate, upper_banach_density,
    weyl_distance, window_average, SelectionRow,
};
pub use table::{OrbitTable, MAX_REGION_CELLS};

/// A bounded real function on a system's points.
#[derive(Clone)]
pub struct Observable {
    label: String,
    bound: f64,
    positive: bool,
    f: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Observable({}, bound={})", self.label, self.bound)
    }
}

impl Observable {
    /// A positive observable with `0 ≤ f ≤ bound`.
    pub fn new(label: impl Into<String>, bound: f64, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Observable {
        Observable { label: label.into(), bound, positive: true, f: Arc::new(f) }
    }

    /// An observable of either sign with `|f| ≤ bound`.
    pub fn signed(label: impl Into<String>, bound: f64, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Observable {
        Observable { label: label.into(), bound, positive: false, f: Arc::new(f) }
    }

    pub fn constant(c: f64) -> Observable {
        Observable { label: format!("const({c})"), bound: c.abs(), positive: c >= 0.0, f: Arc::new(move |_: &Point| c) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn evaluate(&self, p: &Point) -> f64 {
        (self.f)(p)
    }

    pub fn sum(&self, other: &Observable) -> Observable {
        let (a, b) = (self.f.clone(), other.f.clone());
        Observable {
            label: format!("{}+{}", self.label, other.label),
            bound: self.bound + other.bound,
            positive: self.positive && other.positive,
            f: Arc::new(move |p| a(p) + b(p)),
        }
    }

    pub fn offset(&self, lambda: f64) -> Observable {
        let a = self.f.clone();
        Observable {
            label: format!("{}+{lambda}", self.label),
            bound: self.bound + lambda.abs(),
            positive: self.positive && lambda >= 0.0,
            f: Arc::new(move |p| a(p) + lambda),
        }
    }

    pub fn scaled(&self, c: f64) -> Observable {
        let a = self.f.clone();
        Observable {
            label: format!("{c}·{}", self.label),
            bound: self.bound * c.abs(),
            positive: self.positive && c >= 0.0,
            f: Arc::new(move |p| c * a(p)),
        }
    }

    /// Spot-checks the declared range on the given points.
    pub fn check_range(&self, points: &[Point]) -> Result<()> {
        for p in points {
            let v = self.evaluate(p);
            let lo = if self.positive { 0.0 } else { -self.bound };
            if !(v >= lo - 1e-12 && v <= self.bound + 1e-12) {
                return Err(Error::InvalidParameter {
                    name: "observable",
                    reason: format!("{} takes value {v} outside [{lo}, {}]", self.label, self.bound),
                });
            }
        }
        Ok(())
    }
}

/// Which aggregation of window averages an estimate reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Tail maximum of `F_n* φ` along the family: the proxy for `A_F`.
    AlongFolner,
    /// `sup_{|h| ≤ R} (F_n + h)* φ` at the last `n`: the proxy for `A`.
    BanachSup,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::AlongFolner => "along_folner",
            Mode::BanachSup => "banach_sup",
        }
    }
}

/// One evaluated window size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub n: u64,
    pub window_volume: u128,
    pub value: f64,
    /// The translate attaining the sup (Banach mode only).
    pub sup_translate: Option<GroupElement>,
}

/// An estimator result with its convergence trail.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub label: String,
    pub mode: Mode,
    pub value: f64,
    pub trace: Vec<TracePoint>,
    /// Index into `trace` where the tail begins.
    pub tail_start: usize,
    pub search_radius: u64,
    pub stabilized: bool,
    pub tolerance: f64,
    /// Allowance for uncertified nets: the true value may exceed `value` by
    /// up to this much.
    pub gap: f64,
}

impl Estimate {
    pub fn tail(&self) -> &[TracePoint] {
        &self.trace[self.tail_start..]
    }

    pub fn tail_max(&self) -> f64 {
        self.tail().iter().map(|t| t.value).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn tail_min(&self) -> f64 {
        self.tail().iter().map(|t| t.value).fold(f64::INFINITY, f64::min)
    }

    pub fn last(&self) -> &TracePoint {
        self.trace.last().expect("estimates have a nonempty trace")
    }

    /// Evidence that the quantity is at most `eps`.
    pub fn decisively_below(&self, eps: f64) -> bool {
        self.value + self.gap <= eps + self.tolerance && (self.mode == Mode::AlongFolner || self.stabilized)
    }

    /// Evidence that the quantity exceeds `eps`.
    pub fn decisively_above(&self, eps: f64) -> bool {
        self.value > eps + self.tolerance && (self.stabilized || self.tail().iter().all(|t| t.value > eps))
    }

    /// Three-valued `quantity ≤ eps`.
    pub fn outcome_le(&self, eps: f64) -> Outcome {
        if self.decisively_below(eps) {
            Outcome::Holds
        } else if self.decisively_above(eps) {
            Outcome::Fails
        } else {
            Outcome::Inconclusive
        }
    }
}

/// Estimator scale: the `n` grid, tail, search radius and tolerances.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorParams {
    pub n_max: u64,
    /// The tail is `n ≥ (1 − tail_frac)·n_max`.
    pub tail_frac: f64,
    pub grid_ratio: f64,
    pub radius: u64,
    pub stabilization_tol: f64,
    /// Comparison tolerance; `None` picks 1e-9 for exact systems and 1e-6
    /// otherwise.
    pub tolerance: Option<f64>,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        EstimatorParams { n_max: 10_000, tail_frac: 0.5, grid_ratio: 1.3, radius: 10_000, stabilization_tol: 0.02, tolerance: None }
    }
}

impl EstimatorParams {
    pub fn with_scale(n_max: u64, radius: u64) -> Self {
        EstimatorParams { n_max, radius, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: &str| Err(Error::InvalidParameter { name, reason: reason.to_string() });
        if self.n_max < 10 {
            return bad("n_max", "must be at least 10");
        }
        if !(self.tail_frac > 0.0 && self.tail_frac < 1.0) {
            return bad("tail_frac", "must lie in (0, 1)");
        }
        if !(self.grid_ratio > 1.0 && self.grid_ratio.is_finite()) {
            return bad("grid_ratio", "must exceed 1");
        }
        if !(self.stabilization_tol > 0.0) {
            return bad("stabilization_tol", "must be positive");
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return bad("tolerance", "must be nonnegative");
            }
        }
        Ok(())
    }

    /// Geometric grid `1, ⌈1·r⌉, …` up to and including `n_max`.
    pub fn n_grid(&self) -> Vec<u64> {
        let mut out = vec![1u64.min(self.n_max)];
        let mut x = 1.0f64;
        loop {
            x *= self.grid_ratio;
            let last = *out.last().unwrap();
            let next = (x.ceil() as u64).max(last + 1);
            if next >= self.n_max {
                break;
            }
            out.push(next);
            x = x.max(next as f64);
        }
        if *out.last().unwrap() != self.n_max {
            out.push(self.n_max);
        }
        out
    }

    pub fn tail_start(&self, grid: &[u64]) -> usize {
        let cut = (1.0 - self.tail_frac) * self.n_max as f64;
        grid.iter().position(|&n| n as f64 >= cut).unwrap_or(grid.len() - 1)
    }

    pub fn tolerance_for(&self, exact: bool) -> f64 {
        self.tolerance.unwrap_or(if exact { 1e-9 } else { 1e-6 })
    }
}

/// Upper and lower asymptotic densities along a family and the upper Banach
/// density of one set.
#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub set_label: String,
    pub upper_along: Estimate,
    pub lower_along: Estimate,
    pub upper_banach: Estimate,
}

impl DensityReport {
    /// `lower ≤ upper ≤ upper_banach` at matched truncation: the along tail
    /// maximum is compared with the translate-sups over the same tail.
    pub fn consistent(&self) -> bool {
        let tol = self.upper_banach.tolerance;
        self.lower_along.value <= self.upper_along.value + tol && self.upper_along.value <= self.upper_banach.tail_max() + tol
    }
}

/// `g ↦ φ(g)` on ℤ^d, tabulated over boxes.
pub trait OrbitFunction: Send + Sync {
    fn label(&self) -> String;

    fn dim(&self) -> usize;

    /// Values over `region.cells()` in row-major order.
    fn values(&self, region: &Window) -> Result<Vec<f64>>;

    /// How far the true orbit function may exceed the computed one.
    fn gap(&self) -> f64 {
        0.0
    }

    /// Whether the values are exact rationals rounded once.
    fn is_exact(&self) -> bool {
        true
    }
}

fn check_region(dim: usize, region: &Window) -> Result<()> {
    if region.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: region.dim() });
    }
    if region.measure() > MAX_REGION_CELLS {
        return Err(Error::RegionTooLarge(region.measure()));
    }
    Ok(())
}

fn par_cells(region: &Window, f: impl Fn(&GroupElement) -> f64 + Send + Sync) -> Vec<f64> {
    let cells: Vec<GroupElement> = region.cells().collect();
    cells.par_iter().map(f).collect()
}

/// `g ↦ f(g.x)`.
pub struct ObservableOrbit<'a> {
    pub system: &'a dyn System,
    pub observable: &'a Observable,
    pub x: &'a Point,
}

impl OrbitFunction for ObservableOrbit<'_> {
    fn label(&self) -> String {
        format!("{}∘orbit", self.observable.label())
    }

    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn values(&self, region: &Window) -> Result<Vec<f64>> {
        check_region(self.dim(), region)?;
        Ok(par_cells(region, |g| self.observable.evaluate(&self.system.act(g, self.x))))
    }

    fn is_exact(&self) -> bool {
        self.system.is_exact()
    }
}

/// `g ↦ diam(g.S)` for a finite set `S`.
pub struct DiamOrbit<'a> {
    pub system: &'a dyn System,
    pub points: &'a [Point],
    pub gap: f64,
}

impl OrbitFunction for DiamOrbit<'_> {
    fn label(&self) -> String {
        format!("diam∘orbit[{}]", self.points.len())
    }

    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn values(&self, region: &Window) -> Result<Vec<f64>> {
        check_region(self.dim(), region)?;
        if self.points.len() < 2 {
            return Ok(vec![0.0; region.measure() as usize]);
        }
        if self.system.is_isometric() {
            return Ok(vec![diam_points(self.system, self.points); region.measure() as usize]);
        }
        if self.dim() == 1 {
            let lo = region.origin().first();
            let hi = lo + region.extent()[0] as i64 - 1;
            return Ok(self.system.diam_profile(self.points, lo, hi));
        }
        Ok(par_cells(region, |g| {
            let moved: Vec<Point> = self.points.iter().map(|p| self.system.act(g, p)).collect();
            diam_points(self.system, &moved)
        }))
    }

    fn gap(&self) -> f64 {
        self.gap
    }

    fn is_exact(&self) -> bool {
        self.system.is_exact()
    }
}

/// A function of the group element alone, e.g. an indicator of a subset.
#[derive(Clone)]
pub struct FnOrbit {
    label: String,
    dim: usize,
    f: Arc<dyn Fn(&GroupElement) -> f64 + Send + Sync>,
}

impl FnOrbit {
    pub fn new(label: impl Into<String>, dim: usize, f: impl Fn(&GroupElement) -> f64 + Send + Sync + 'static) -> FnOrbit {
        FnOrbit { label: label.into(), dim, f: Arc::new(f) }
    }

    pub fn indicator(label: impl Into<String>, dim: usize, pred: impl Fn(&GroupElement) -> bool + Send + Sync + 'static) -> FnOrbit {
        FnOrbit::new(label, dim, move |g| if pred(g) { 1.0 } else { 0.0 })
    }

    pub fn eval(&self, g: &GroupElement) -> f64 {
        (self.f)(g)
    }
}

impl OrbitFunction for FnOrbit {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn values(&self, region: &Window) -> Result<Vec<f64>> {
        check_region(self.dim, region)?;
        Ok(par_cells(region, |g| (self.f)(g)))
    }
}

/// Pointwise transform of another orbit function.
pub struct MappedOrbit<'a> {
    pub inner: &'a dyn OrbitFunction,
    pub label: String,
    pub f: fn(f64, f64) -> f64,
    /// Second argument passed to `f`.
    pub param: f64,
}

impl OrbitFunction for MappedOrbit<'_> {
    fn label(&self) -> String {
        format!("{}({})", self.label, self.inner.label())
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn values(&self, region: &Window) -> Result<Vec<f64>> {
        Ok(self.inner.values(region)?.into_iter().map(|v| (self.f)(v, self.param)).collect())
    }

    fn is_exact(&self) -> bool {
        self.inner.is_exact()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let p = EstimatorParams::default();
        let g = p.n_grid();
        assert_eq!(g[0], 1);
        assert_eq!(*g.last().unwrap(), 10_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        let t = p.tail_start(&g);
        assert!(g[t] >= 5_000 && (t == 0 || g[t - 1] < 5_000));
        let small = EstimatorParams::with_scale(10, 10);
        assert_eq!(*small.n_grid().last().unwrap(), 10);
    }

    #[test]
    fn params_validation() {
        assert!(EstimatorParams::with_scale(5, 10).validate().is_err());
        let p = EstimatorParams { tail_frac: 1.0, ..Default::default() };
        assert!(p.validate().is_err());
        assert!(EstimatorParams::default().validate().is_ok());
    }

    #[test]
    fn observable_algebra() {
        let f = Observable::new("f", 1.0, |p| match p {
            Point::Unit => 0.25,
            _ => 0.0,
        });
        let g = f.sum(&Observable::constant(0.5)).offset(0.125).scaled(2.0);
        assert_eq!(g.evaluate(&Point::Unit), 1.75);
        assert_eq!(g.bound(), 3.25);
        assert!(g.check_range(&[Point::Unit]).is_ok());
        assert!(Observable::new("bad", 0.1, |_| 0.5).check_range(&[Point::Unit]).is_err());
    }
}
