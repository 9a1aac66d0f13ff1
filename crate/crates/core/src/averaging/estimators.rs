use serde::Serialize;

use super::{
    DensityReport, DiamOrbit, Estimate, EstimatorParams, FnOrbit, Mode, Observable, ObservableOrbit, OrbitFunction,
    OrbitTable, TracePoint,
};
use crate::error::{Error, Result};
use crate::group::{FolnerSequence, GroupElement, Window};
use crate::systems::{NetSet, Point, System};

/// `(1/|K|) Σ_{g ∈ K} f(g.x)`.
pub fn window_average(system: &dyn System, k: &Window, f: &Observable, x: &Point) -> f64 {
    let sum: f64 = k.cells().map(|g| f.evaluate(&system.act(&g, x))).sum();
    sum / k.measure() as f64
}

/// The box containing every window an estimator reads: the hull of the given
/// windows, widened by `radius` in every direction.
pub fn evaluation_region(windows: &[Window], radius: u64) -> Result<Window> {
    let first = windows.first().ok_or(Error::EmptyWindow)?;
    let hull = windows.iter().skip(1).fold(first.clone(), |acc, w| acc.hull(w));
    if radius == 0 {
        return Ok(hull);
    }
    let r = radius as i64;
    let ball = Window::cube(hull.dim(), -r, r + 1)?;
    Ok(hull.minkowski_sum(&ball))
}

fn family_windows(f: &FolnerSequence, params: &EstimatorParams) -> (Vec<u64>, Vec<Window>) {
    let grid = params.n_grid();
    let windows = grid.iter().map(|&n| f.window(n)).collect();
    (grid, windows)
}

/// Tabulates `orbit` over the region needed for `f` in the given mode.
pub fn tabulate(orbit: &dyn OrbitFunction, f: &FolnerSequence, params: &EstimatorParams, mode: Mode) -> Result<OrbitTable> {
    params.validate()?;
    if orbit.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: orbit.dim(), got: f.dim() });
    }
    let (_, windows) = family_windows(f, params);
    let radius = match mode {
        Mode::AlongFolner => 0,
        Mode::BanachSup => params.radius,
    };
    let region = evaluation_region(&windows, radius)?;
    if region.measure() > super::MAX_REGION_CELLS {
        return Err(Error::RegionTooLarge(region.measure()));
    }
    OrbitTable::new(region.clone(), orbit.values(&region)?)
}

fn along_trace(table: &OrbitTable, f: &FolnerSequence, params: &EstimatorParams) -> Vec<TracePoint> {
    params
        .n_grid()
        .into_iter()
        .map(|n| {
            let w = f.window(n);
            TracePoint { n, window_volume: w.measure(), value: table.window_average(&w), sup_translate: None }
        })
        .collect()
}

fn from_trace(label: String, trace: Vec<TracePoint>, params: &EstimatorParams, tolerance: f64, lower: bool) -> Estimate {
    let grid: Vec<u64> = trace.iter().map(|t| t.n).collect();
    let tail_start = params.tail_start(&grid);
    let tail = &trace[tail_start..];
    let hi = tail.iter().map(|t| t.value).fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().map(|t| t.value).fold(f64::INFINITY, f64::min);
    Estimate {
        label,
        mode: Mode::AlongFolner,
        value: if lower { lo } else { hi },
        tail_start,
        search_radius: 0,
        stabilized: hi - lo < params.stabilization_tol,
        tolerance,
        gap: 0.0,
        trace,
    }
}

/// Tail maximum of `F_n* φ` over a tabulated orbit function.
pub fn along_table(table: &OrbitTable, f: &FolnerSequence, params: &EstimatorParams, label: &str, tolerance: f64) -> Estimate {
    from_trace(label.to_string(), along_trace(table, f, params), params, tolerance, false)
}

fn translate_at(index: usize, dim: usize, radius: u64) -> GroupElement {
    let side = 2 * radius as usize + 1;
    let mut coords = vec![0i64; dim];
    let mut i = index;
    for k in (0..dim).rev() {
        coords[k] = (i % side) as i64 - radius as i64;
        i /= side;
    }
    GroupElement::new(coords)
}

fn norm_at(index: usize, dim: usize, radius: u64) -> u64 {
    let side = 2 * radius as usize + 1;
    let mut i = index;
    let mut norm = 0;
    for _ in 0..dim {
        norm = norm.max(((i % side) as i64 - radius as i64).unsigned_abs());
        i /= side;
    }
    norm
}

/// `sup_{|h|∞ ≤ R} (W + h)* φ` together with the smallest-norm translate whose
/// average is within `tie` of the sup.
fn sup_over_translates(table: &OrbitTable, w: &Window, radius: u64, tie: f64) -> (f64, GroupElement) {
    let dim = w.dim();
    let volume = w.measure() as f64;
    let avgs: Vec<f64> = table.translate_sums(w, radius).into_iter().map(|s| s / volume).collect();
    let best = avgs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (_, idx) = avgs
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= best - tie)
        .map(|(i, _)| (norm_at(i, dim, radius), i))
        .min()
        .expect("the maximizer itself qualifies");
    (best, translate_at(idx, dim, radius))
}

/// Translate-sup estimate at every grid `n`; the value is the last one.
pub fn banach_table(table: &OrbitTable, f: &FolnerSequence, params: &EstimatorParams, label: &str, tolerance: f64) -> Estimate {
    let grid = params.n_grid();
    let trace: Vec<TracePoint> = grid
        .iter()
        .map(|&n| {
            let w = f.window(n);
            let (value, h) = sup_over_translates(table, &w, params.radius, params.stabilization_tol);
            TracePoint { n, window_volume: w.measure(), value, sup_translate: Some(h) }
        })
        .collect();
    let last = trace.last().expect("grid is nonempty");
    let interior = last.sup_translate.as_ref().is_some_and(|h| h.norm_inf() < params.radius);
    Estimate {
        label: label.to_string(),
        mode: Mode::BanachSup,
        value: last.value,
        tail_start: params.tail_start(&grid),
        search_radius: params.radius,
        stabilized: interior,
        tolerance,
        gap: 0.0,
        trace,
    }
}

/// Runs an orbit function through the estimator of the given mode.
pub fn estimate_orbit(orbit: &dyn OrbitFunction, f: &FolnerSequence, params: &EstimatorParams, mode: Mode) -> Result<Estimate> {
    let table = tabulate(orbit, f, params, mode)?;
    let label = format!("{}@{}", orbit.label(), f.label());
    let tol = params.tolerance_for(orbit.is_exact());
    let mut est = match mode {
        Mode::AlongFolner => along_table(&table, f, params, &label, tol),
        Mode::BanachSup => banach_table(&table, f, params, &label, tol),
    };
    est.gap = orbit.gap();
    Ok(est)
}

/// `A_F f(x)`: the tail max of `F_n* f(x)`.
pub fn mean_along(system: &dyn System, f: &FolnerSequence, obs: &Observable, x: &Point, params: &EstimatorParams) -> Result<Estimate> {
    estimate_orbit(&ObservableOrbit { system, observable: obs, x }, f, params, Mode::AlongFolner)
}

/// `A f(x)` via translate-sups of `F_n* f(x)`.
pub fn banach_mean(system: &dyn System, f: &FolnerSequence, obs: &Observable, x: &Point, params: &EstimatorParams) -> Result<Estimate> {
    estimate_orbit(&ObservableOrbit { system, observable: obs, x }, f, params, Mode::BanachSup)
}

/// How far `diam(g.A)` of the true set may exceed the diameter over listed
/// points. Certified nets are taken at face value; the images of an isometry
/// keep their mesh; otherwise the modulus of continuity is probed on a few
/// points and group elements.
pub fn diam_gap(system: &dyn System, a: &NetSet) -> f64 {
    if a.certified() {
        return 0.0;
    }
    let mesh = a.mesh();
    if system.is_isometric() {
        return 2.0 * mesh;
    }
    let probes: Vec<GroupElement> = (0..12)
        .flat_map(|k| [1i64 << k, -(1i64 << k)])
        .map(|n| crate::systems::unit_vector(system.dim(), n))
        .collect();
    let mut worst = 0.0f64;
    for p in a.points().iter().take(8) {
        let mut near = system.local_variants(p, mesh);
        if near.is_empty() {
            match system.ball_net(p, mesh, mesh) {
                Ok(b) => near.extend(b.points().iter().take(16).cloned()),
                Err(_) => return system.diameter_bound(),
            }
        }
        for g in &probes {
            let gp = system.act(g, p);
            for q in &near {
                worst = worst.max(system.metric(&gp, &system.act(g, q)));
            }
        }
    }
    2.0 * worst
}

/// `Diam_F(A)`: tail max of the window averages of `diam(g.A)`.
pub fn mean_diameter_along(system: &dyn System, f: &FolnerSequence, a: &NetSet, params: &EstimatorParams) -> Result<Estimate> {
    a.check(system)?;
    let orbit = DiamOrbit { system, points: a.points(), gap: diam_gap(system, a) };
    estimate_orbit(&orbit, f, params, Mode::AlongFolner)
}

/// `Diam(A)` via translate-sups of the window averages of `diam(g.A)`.
pub fn mean_diameter(system: &dyn System, f: &FolnerSequence, a: &NetSet, params: &EstimatorParams) -> Result<Estimate> {
    a.check(system)?;
    let orbit = DiamOrbit { system, points: a.points(), gap: diam_gap(system, a) };
    estimate_orbit(&orbit, f, params, Mode::BanachSup)
}

fn pair(system: &dyn System, x: &Point, y: &Point) -> Result<[Point; 2]> {
    if !system.contains(x) || !system.contains(y) {
        return Err(Error::ForeignPoint(system.label().to_string()));
    }
    Ok([x.clone(), y.clone()])
}

/// The Weyl pseudometric `D(x, x') = A(d(·x, ·x'))`.
pub fn weyl_distance(system: &dyn System, x: &Point, y: &Point, f: &FolnerSequence, params: &EstimatorParams) -> Result<Estimate> {
    let pts = pair(system, x, y)?;
    estimate_orbit(&DiamOrbit { system, points: &pts, gap: 0.0 }, f, params, Mode::BanachSup)
}

/// The Besicovitch pseudometric `A_F(d(·x, ·x'))`.
pub fn besicovitch_distance(
    system: &dyn System,
    x: &Point,
    y: &Point,
    f: &FolnerSequence,
    params: &EstimatorParams,
) -> Result<Estimate> {
    let pts = pair(system, x, y)?;
    estimate_orbit(&DiamOrbit { system, points: &pts, gap: 0.0 }, f, params, Mode::AlongFolner)
}

/// Upper and lower asymptotic density of `{g : pred(g)}` along `f`.
pub fn density_along(f: &FolnerSequence, pred: &FnOrbit, params: &EstimatorParams) -> Result<(Estimate, Estimate)> {
    let table = tabulate(pred, f, params, Mode::AlongFolner)?;
    let trace = along_trace(&table, f, params);
    let tol = params.tolerance_for(true);
    let upper = from_trace(format!("ua-dens[{}]@{}", pred.label(), f.label()), trace.clone(), params, tol, false);
    let lower = from_trace(format!("la-dens[{}]@{}", pred.label(), f.label()), trace, params, tol, true);
    Ok((upper, lower))
}

/// Upper Banach density of `{g : pred(g)}` via translate-sups.
pub fn upper_banach_density(f: &FolnerSequence, pred: &FnOrbit, params: &EstimatorParams) -> Result<Estimate> {
    let mut est = estimate_orbit(pred, f, params, Mode::BanachSup)?;
    est.label = format!("ub-dens[{}]@{}", pred.label(), f.label());
    Ok(est)
}

pub fn density_report(f: &FolnerSequence, pred: &FnOrbit, params: &EstimatorParams) -> Result<DensityReport> {
    let (upper_along, lower_along) = density_along(f, pred, params)?;
    let upper_banach = upper_banach_density(f, pred, params)?;
    Ok(DensityReport { set_label: pred.label(), upper_along, lower_along, upper_banach })
}

/// Which family attains the largest window average at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionRow {
    pub n: u64,
    pub leader: String,
    pub values: Vec<f64>,
}

/// Across several families, reports at each grid `n` which one attains the
/// running maximum of `F_n* φ`. Diagnostic only: it does not build a
/// sequence attaining the sup.
pub fn folner_selection(families: &[FolnerSequence], orbit: &dyn OrbitFunction, params: &EstimatorParams) -> Result<Vec<SelectionRow>> {
    params.validate()?;
    if families.is_empty() {
        return Err(Error::InvalidParameter { name: "families", reason: "need at least one family".into() });
    }
    let grid = params.n_grid();
    let windows: Vec<Window> = families.iter().flat_map(|f| grid.iter().map(move |&n| f.window(n))).collect();
    let region = evaluation_region(&windows, 0)?;
    let table = OrbitTable::new(region.clone(), orbit.values(&region)?)?;
    Ok(grid
        .iter()
        .map(|&n| {
            let values: Vec<f64> = families.iter().map(|f| table.window_average(&f.window(n))).collect();
            let mut lead = 0;
            for (i, v) in values.iter().enumerate() {
                if *v > values[lead] {
                    lead = i;
                }
            }
            SelectionRow { n, leader: families[lead].label().to_string(), values }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{standard_folner, FolnerStyle};
    use crate::systems::{Angle, ExtInt, Rotation, TwoPointCompactification};

    fn forward() -> FolnerSequence {
        standard_folner(1, FolnerStyle::Forward).unwrap()
    }

    fn backward() -> FolnerSequence {
        standard_folner(1, FolnerStyle::Backward).unwrap()
    }

    #[test]
    fn window_average_quarter_rotation() {
        let r = Rotation::new(1, 4).unwrap();
        let f = Observable::new("x", 1.0, |p| match p {
            Point::Angle(a) => a.to_f64(),
            _ => 0.0,
        });
        let k = Window::interval(0, 4).unwrap();
        assert_eq!(window_average(&r, &k, &f, &Point::Angle(Angle::new(0, 1))), 0.375);
    }

    #[test]
    fn constants_are_exact() {
        let r = Rotation::from_f64(0.5f64.sqrt()).unwrap();
        let c = Observable::constant(0.3);
        let x = Point::Angle(Angle::new(1, 7));
        let p = EstimatorParams::with_scale(1000, 500);
        let a = mean_along(&r, &forward(), &c, &x, &p).unwrap();
        assert_eq!(a.value, 0.3);
        assert!(a.stabilized);
        let b = banach_mean(&r, &forward(), &c, &x, &p).unwrap();
        assert_eq!(b.value, 0.3);
        assert!(b.stabilized);
        assert_eq!(b.last().sup_translate.as_ref().unwrap().norm_inf(), 0);
    }

    #[test]
    fn evens_and_naturals() {
        let p = EstimatorParams::with_scale(10_000, 10_000);
        let evens = FnOrbit::indicator("2Z", 1, |g| g.first().rem_euclid(2) == 0);
        let rep = density_report(&forward(), &evens, &p).unwrap();
        assert!((rep.upper_along.value - 0.5).abs() <= 1e-3);
        assert!((rep.lower_along.value - 0.5).abs() <= 1e-3);
        assert!((rep.upper_banach.value - 0.5).abs() <= 1e-3);
        assert!(rep.consistent());

        let nat = FnOrbit::indicator("N", 1, |g| g.first() >= 0);
        let (fu, _) = density_along(&forward(), &nat, &p).unwrap();
        let (bu, _) = density_along(&backward(), &nat, &p).unwrap();
        assert_eq!(fu.value, 1.0);
        assert!(bu.value <= 1e-3);
        assert_eq!(upper_banach_density(&backward(), &nat, &p).unwrap().value, 1.0);

        let empty = FnOrbit::indicator("∅", 1, |_| false);
        let rep = density_report(&forward(), &empty, &p).unwrap();
        assert_eq!((rep.upper_along.value, rep.lower_along.value, rep.upper_banach.value), (0.0, 0.0, 0.0));
    }

    #[test]
    fn evens_on_the_compactification_orbit() {
        let x = TwoPointCompactification::new();
        let parity = Observable::new("even", 1.0, |p| match p {
            Point::Ext(ExtInt::Fin(m)) if m.rem_euclid(2) == 0 => 1.0,
            _ => 0.0,
        });
        let p = EstimatorParams::with_scale(1000, 1000);
        let e = mean_along(&x, &forward(), &parity, &Point::Ext(ExtInt::Fin(0)), &p).unwrap();
        assert!((e.value - 0.5).abs() <= 1.0 / 500.0);
        let nonneg = Observable::new("≥0", 1.0, |p| match p {
            Point::Ext(ExtInt::Fin(m)) if *m >= 0 => 1.0,
            Point::Ext(ExtInt::PosInf) => 1.0,
            _ => 0.0,
        });
        let b = banach_mean(&x, &backward(), &nonneg, &Point::Ext(ExtInt::Fin(0)), &p).unwrap();
        assert_eq!(b.value, 1.0);
    }

    #[test]
    fn rotation_arc_diameter_is_invariant() {
        let r = Rotation::from_f64(0.5f64.sqrt()).unwrap();
        let arc = r.arc(Angle::new(3, 17), 10, 100).unwrap();
        let p = EstimatorParams::with_scale(1000, 1000);
        let d = mean_diameter(&r, &forward(), &arc, &p).unwrap();
        assert!((d.value - 0.1).abs() <= 1e-12, "{}", d.value);
        assert!(d.stabilized);
        let single = NetSet::singleton(&r, Point::Angle(Angle::new(1, 3)), 0.1).unwrap();
        assert_eq!(mean_diameter_along(&r, &forward(), &single, &p).unwrap().value, 0.0);
    }

    #[test]
    fn weyl_on_rotation_is_the_metric() {
        let r = Rotation::from_f64(0.5f64.sqrt()).unwrap();
        let (x, y) = (Point::Angle(Angle::new(1, 10)), Point::Angle(Angle::new(3, 10)));
        let p = EstimatorParams::with_scale(200, 200);
        let w = weyl_distance(&r, &x, &y, &forward(), &p).unwrap();
        assert!((w.value - r.metric(&x, &y)).abs() <= 1e-12);
        assert_eq!(weyl_distance(&r, &x, &x, &forward(), &p).unwrap().value, 0.0);
        let b = besicovitch_distance(&r, &x, &y, &forward(), &p).unwrap();
        assert!(b.value <= w.value + 1e-12);
    }

    #[test]
    fn selection_reports_leaders() {
        let nat = FnOrbit::indicator("N", 1, |g| g.first() >= 0);
        let rows = folner_selection(&[forward(), backward()], &nat, &EstimatorParams::with_scale(100, 0)).unwrap();
        assert!(rows.iter().all(|r| r.leader == "forward"));
    }

    #[test]
    fn region_guard() {
        let f = standard_folner(2, FolnerStyle::Forward).unwrap();
        let big = FnOrbit::new("one", 2, |_| 1.0);
        let p = EstimatorParams::with_scale(10_000, 10_000);
        assert!(matches!(estimate_orbit(&big, &f, &p, Mode::BanachSup), Err(Error::RegionTooLarge(_))));
    }
}
