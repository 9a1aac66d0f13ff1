//! Diam-mean equicontinuity of points and systems, mean equicontinuity via
//! the Weyl pseudometric, and the battery tying both to regularity of the
//! maximal equicontinuous factor.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::averaging::{along_table, banach_table, tabulate, DiamOrbit, Estimate, EstimatorParams, Mode, OrbitTable};
use crate::catalog::{self, CatalogPair};
use crate::error::{Error, Result};
use crate::factors::{diam_mean_proximal_test, sample_targets, RegularityParams, RegularityReport};
use crate::group::FolnerSequence;
use crate::systems::{NetSet, Point, ProductSystem, System, SystemRef};
use crate::verdict::{Outcome, Verdict};

/// Scale of an equicontinuity run.
#[derive(Clone, Debug, Serialize)]
pub struct DmeParams {
    pub estimator: EstimatorParams,
    pub eps_schedule: Vec<f64>,
    /// Decreasing radii; empty means the default grid for `mesh`.
    pub delta_grid: Vec<f64>,
    /// Mesh at which balls are listed.
    pub mesh: f64,
    /// Base points sampled for global tests.
    pub samples: usize,
    pub seed: u64,
    /// Partners `x'` per base point in the Weyl sweep.
    pub weyl_partners: usize,
}

impl Default for DmeParams {
    fn default() -> Self {
        DmeParams {
            estimator: EstimatorParams::default(),
            eps_schedule: vec![0.2, 0.1, 0.05],
            delta_grid: Vec::new(),
            mesh: 1.0 / 1024.0,
            samples: 6,
            seed: 0,
            weyl_partners: 8,
        }
    }
}

/// `0.5, 0.25, …` down to `4·mesh`.
pub fn default_delta_grid(mesh: f64) -> Vec<f64> {
    let mut out = vec![0.5];
    while out.last().unwrap() / 2.0 >= 4.0 * mesh {
        out.push(out.last().unwrap() / 2.0);
    }
    out
}

impl DmeParams {
    pub fn deltas(&self) -> Vec<f64> {
        if self.delta_grid.is_empty() {
            default_delta_grid(self.mesh)
        } else {
            self.delta_grid.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if self.eps_schedule.is_empty() || self.eps_schedule.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidParameter { name: "eps_schedule", reason: "entries must be positive".into() });
        }
        let d = self.deltas();
        if d.iter().any(|x| !(*x > 0.0)) || d.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter { name: "delta_grid", reason: "must be positive and strictly decreasing".into() });
        }
        if !(self.mesh > 0.0 && self.mesh.is_finite()) {
            return Err(Error::BadMesh(self.mesh));
        }
        Ok(())
    }
}

/// One `(point, ε, δ)` cell.
#[derive(Clone, Debug, Serialize)]
pub struct DmeRow {
    pub point: String,
    pub eps: f64,
    pub delta: f64,
    pub estimate: f64,
    pub stabilized: bool,
    /// The density of `{g : diam(g.B) > ε}` in the same mode.
    pub density: f64,
    pub verdict: Outcome,
}

#[derive(Clone, Debug, Serialize)]
pub struct DmeReport {
    pub check: String,
    pub system: String,
    /// A point label, or `global`.
    pub point: String,
    pub mode: Mode,
    pub folner: String,
    pub eps_schedule: Vec<f64>,
    pub rows: Vec<DmeRow>,
    /// The density criterion's verdict, run over the same tables.
    pub density_outcome: Outcome,
    pub verdict: Verdict,
    /// Estimates behind the chosen rows, for plotting.
    #[serde(skip)]
    pub estimates: Vec<Estimate>,
}

impl DmeReport {
    pub fn outcome(&self) -> Outcome {
        self.verdict.outcome
    }

    /// Whether the mean-diameter and density criteria agree.
    pub fn criteria_agree(&self) -> bool {
        self.density_outcome == self.verdict.outcome
    }
}

struct Cell {
    estimate: Estimate,
    density: Estimate,
}

#[derive(Clone, Copy)]
enum Criterion {
    Diam,
    Density,
}

impl Cell {
    fn outcome(&self, which: Criterion, eps: f64) -> Outcome {
        match which {
            Criterion::Diam => self.estimate.outcome_le(eps),
            Criterion::Density => self.density.outcome_le(eps),
        }
    }
}

fn run_mode(table: &OrbitTable, family: &FolnerSequence, params: &EstimatorParams, mode: Mode, tol: f64, label: &str) -> Estimate {
    match mode {
        Mode::AlongFolner => along_table(table, family, params, label, tol),
        Mode::BanachSup => banach_table(table, family, params, label, tol),
    }
}

/// Mean-diameter cells of `B_δ(x)` per δ index, point and `ε`, built on
/// first use.
struct BallCells<'a> {
    system: &'a dyn System,
    family: &'a FolnerSequence,
    params: &'a DmeParams,
    points: &'a [Point],
    deltas: Vec<f64>,
    mode: Mode,
    tol: f64,
    cells: Vec<Option<Vec<Vec<Cell>>>>,
}

impl<'a> BallCells<'a> {
    fn new(system: &'a dyn System, family: &'a FolnerSequence, params: &'a DmeParams, points: &'a [Point], mode: Mode) -> Self {
        let deltas = params.deltas();
        let cells = (0..deltas.len()).map(|_| None).collect();
        let tol = params.estimator.tolerance_for(system.is_exact());
        BallCells { system, family, params, points, deltas, mode, tol, cells }
    }

    fn ensure(&mut self, i: usize) -> Result<&Vec<Vec<Cell>>> {
        if self.cells[i].is_none() {
            let delta = self.deltas[i];
            let per_point = self
                .points
                .par_iter()
                .map(|x| {
                    let ball = self.system.ball_net(x, delta, self.params.mesh)?;
                    let orbit = DiamOrbit { system: self.system, points: ball.points(), gap: 0.0 };
                    let table = tabulate(&orbit, self.family, &self.params.estimator, Mode::BanachSup)?;
                    let label = format!("diam_ball[{x},{delta:e}]");
                    let estimate = run_mode(&table, self.family, &self.params.estimator, self.mode, self.tol, &label);
                    self.params
                        .eps_schedule
                        .iter()
                        .map(|&eps| {
                            let ind = table.map(|v| if v > eps { 1.0 } else { 0.0 })?;
                            let density =
                                run_mode(&ind, self.family, &self.params.estimator, self.mode, self.tol, &format!("density[{label}]>{eps}"));
                            Ok(Cell { estimate: estimate.clone(), density })
                        })
                        .collect::<Result<Vec<Cell>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            self.cells[i] = Some(per_point);
        }
        Ok(self.cells[i].as_ref().unwrap())
    }

    fn probe(&mut self, i: usize, ei: usize, which: Criterion) -> Result<Outcome> {
        let eps = self.params.eps_schedule[ei];
        Ok(Outcome::all(self.ensure(i)?.iter().map(|c| c[ei].outcome(which, eps))))
    }

    /// The δ-sweep for one `ε`: a failure needs the smallest δ decisively
    /// above `ε`; success is the largest δ decisively below. Balls shrink
    /// with δ, so the grid is bisected rather than scanned.
    fn sweep(&mut self, ei: usize, which: Criterion) -> Result<(Outcome, usize)> {
        let last = self.deltas.len() - 1;
        let at_last = self.probe(last, ei, which)?;
        if at_last != Outcome::Holds {
            return Ok((at_last, last));
        }
        let (mut lo, mut hi) = (0, last);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.probe(mid, ei, which)? == Outcome::Holds {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok((Outcome::Holds, hi))
    }
}

fn scale_label(params: &DmeParams, deltas: &[f64]) -> String {
    format!(
        "n_max={},radius={},mesh={:e},deltas={}..{:e}",
        params.estimator.n_max,
        params.estimator.radius,
        params.mesh,
        deltas[0],
        deltas[deltas.len() - 1]
    )
}

fn ball_test(
    check: &str,
    system: &dyn System,
    points: &[Point],
    point_label: String,
    family: &FolnerSequence,
    params: &DmeParams,
    mode: Mode,
) -> Result<DmeReport> {
    params.validate()?;
    if points.is_empty() {
        return Err(Error::InvalidParameter { name: "points", reason: "need at least one base point".into() });
    }
    if let Some(p) = points.iter().find(|p| !system.contains(p)) {
        return Err(Error::ForeignPoint(format!("{} (point {p})", system.label())));
    }
    let mut cells = BallCells::new(system, family, params, points, mode);
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    let (mut outcomes, mut density_outcomes) = (Vec::new(), Vec::new());
    for (ei, &eps) in params.eps_schedule.iter().enumerate() {
        let (outcome, at) = cells.sweep(ei, Criterion::Diam)?;
        let (dens, _) = cells.sweep(ei, Criterion::Density)?;
        let delta = cells.deltas[at];
        let tested = cells.ensure(at)?;
        let worst = tested
            .iter()
            .max_by(|a, b| a[ei].estimate.value.total_cmp(&b[ei].estimate.value))
            .expect("points are nonempty");
        rows.push(DmeRow {
            point: point_label.clone(),
            eps,
            delta,
            estimate: worst[ei].estimate.value,
            stabilized: tested.iter().all(|c| c[ei].estimate.stabilized),
            density: tested.iter().map(|c| c[ei].density.value).fold(0.0, f64::max),
            verdict: outcome,
        });
        estimates.push(worst[ei].estimate.clone());
        outcomes.push(outcome);
        density_outcomes.push(dens);
    }
    let outcome = Outcome::all(outcomes);
    let density_outcome = Outcome::all(density_outcomes);
    let excess = rows.iter().map(|r| r.estimate - r.eps).fold(f64::NEG_INFINITY, f64::max);
    let mut verdict = Verdict::new(check, scale_label(params, &cells.deltas), outcome, excess, 0.0, cells.tol);
    if density_outcome != outcome {
        verdict = verdict.with_note(format!("density criterion {density_outcome}"));
    }
    Ok(DmeReport {
        check: check.to_string(),
        system: system.label().to_string(),
        point: point_label,
        mode,
        folner: family.label().to_string(),
        eps_schedule: params.eps_schedule.clone(),
        rows,
        density_outcome,
        verdict,
        estimates,
    })
}

/// Whether `x` has neighbourhoods of small mean diameter: for each `ε`, a δ
/// with `Diam(B_δ(x)) ≤ ε` by translate-sups. The density criterion
/// `ub-dens{g : diam(g.B_δ(x)) > ε} ≤ ε` runs over the same tables.
pub fn dme_point_test(system: &dyn System, x: &Point, family: &FolnerSequence, params: &DmeParams) -> Result<DmeReport> {
    ball_test("dme_point", system, std::slice::from_ref(x), x.to_string(), family, params, Mode::BanachSup)
}

/// [`dme_point_test`] along a single Følner family.
pub fn f_dme_point_test(system: &dyn System, x: &Point, family: &FolnerSequence, params: &DmeParams) -> Result<DmeReport> {
    ball_test("f_dme_point", system, std::slice::from_ref(x), x.to_string(), family, params, Mode::AlongFolner)
}

/// One δ working for every sampled point at each `ε`.
pub fn dme_global_test(system: &dyn System, points: &[Point], family: &FolnerSequence, params: &DmeParams) -> Result<DmeReport> {
    ball_test("dme_global", system, points, "global".into(), family, params, Mode::BanachSup)
}

/// Seeded base points from a coarse net of the system.
pub fn sample_points(system: &dyn System, count: usize, seed: u64) -> Result<Vec<Point>> {
    let net = system.net(1.0 / 64.0)?;
    let mut pts: Vec<Point> = net.points().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pts.shuffle(&mut rng);
    pts.truncate(count.max(1));
    Ok(pts)
}

/// Up to `k` points of the ball other than its center, evenly spread over
/// the listing.
fn partners(ball: &NetSet, x: &Point, k: usize) -> Vec<Point> {
    let others: Vec<&Point> = ball.points().iter().filter(|p| *p != x).collect();
    if others.len() <= k {
        return others.into_iter().cloned().collect();
    }
    (0..k).map(|j| others[j * others.len() / k].clone()).collect()
}

/// Mean equicontinuity by the Weyl pseudometric: for each `ε`, one δ with
/// `D(x, x') ≤ ε` for the sampled `x` and partners `x' ∈ B_δ(x)`.
pub fn mean_equicontinuity_test(system: &dyn System, points: &[Point], family: &FolnerSequence, params: &DmeParams) -> Result<DmeReport> {
    params.validate()?;
    if points.is_empty() {
        return Err(Error::InvalidParameter { name: "points", reason: "need at least one base point".into() });
    }
    let deltas = params.deltas();
    let tol = params.estimator.tolerance_for(system.is_exact());
    let mut cache: Vec<Option<Vec<Estimate>>> = (0..deltas.len()).map(|_| None).collect();
    let mut ensure = |i: usize| -> Result<Vec<Estimate>> {
        if cache[i].is_none() {
            let pairs: Vec<(Point, Point)> = points
                .iter()
                .map(|x| system.ball_net(x, deltas[i], params.mesh).map(|b| (x, b)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flat_map(|(x, b)| partners(&b, x, params.weyl_partners).into_iter().map(move |y| (x.clone(), y)))
                .collect();
            let ests = pairs
                .par_iter()
                .map(|(x, y)| {
                    let pts = [x.clone(), y.clone()];
                    let table = tabulate(&DiamOrbit { system, points: &pts, gap: 0.0 }, family, &params.estimator, Mode::BanachSup)?;
                    Ok(banach_table(&table, family, &params.estimator, &format!("weyl[{x},{y}]"), tol))
                })
                .collect::<Result<Vec<_>>>()?;
            cache[i] = Some(ests);
        }
        Ok(cache[i].clone().unwrap())
    };
    let judge = |ests: &[Estimate], eps: f64| Outcome::all(ests.iter().map(|e| e.outcome_le(eps)));
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    let mut outcomes = Vec::new();
    let last = deltas.len() - 1;
    for &eps in &params.eps_schedule {
        let at_last = judge(&ensure(last)?, eps);
        let (outcome, at) = if at_last == Outcome::Fails {
            (Outcome::Fails, last)
        } else {
            let mut found = (at_last, last);
            for i in 0..last {
                if judge(&ensure(i)?, eps) == Outcome::Holds {
                    found = (Outcome::Holds, i);
                    break;
                }
            }
            found
        };
        let ests = ensure(at)?;
        let worst = ests.iter().max_by(|a, b| a.value.total_cmp(&b.value)).cloned();
        rows.push(DmeRow {
            point: "global".into(),
            eps,
            delta: deltas[at],
            estimate: worst.as_ref().map_or(0.0, |e| e.value),
            stabilized: ests.iter().all(|e| e.stabilized),
            density: f64::NAN,
            verdict: outcome,
        });
        estimates.extend(worst);
        outcomes.push(outcome);
    }
    let outcome = Outcome::all(outcomes);
    let excess = rows.iter().map(|r| r.estimate - r.eps).fold(f64::NEG_INFINITY, f64::max);
    Ok(DmeReport {
        check: "mean_equicontinuity".into(),
        system: system.label().to_string(),
        point: "global".into(),
        mode: Mode::BanachSup,
        folner: family.label().to_string(),
        eps_schedule: params.eps_schedule.clone(),
        rows,
        density_outcome: outcome,
        verdict: Verdict::new("mean_equicontinuity", scale_label(params, &deltas), outcome, excess, 0.0, tol),
        estimates,
    })
}

/// Outcome of the consistency battery on one catalog pair.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub pair: String,
    pub expected: Outcome,
    pub dme: DmeReport,
    pub regularity: RegularityReport,
    /// Both verdicts equal.
    pub agreement: Verdict,
    /// Fiber mean diameters against mean diameters of δ-balls, one per δ;
    /// empty when the factor is not expected to be regular.
    pub fiber_vs_balls: Vec<Verdict>,
}

/// Radii of the fiber-versus-ball comparison.
pub const LEMMA_DELTAS: [f64; 3] = [0.2, 0.1, 0.05];

/// `max_y Diam(π⁻¹(y)) ≤ max_x Diam(B_δ(x)) + tol` at each δ.
pub fn fiber_vs_balls(
    system: &dyn System,
    regularity: &RegularityReport,
    points: &[Point],
    family: &FolnerSequence,
    params: &DmeParams,
    deltas: &[f64],
) -> Result<Vec<Verdict>> {
    let fiber_max = regularity.fibers.iter().map(|f| f.diam.value).fold(0.0, f64::max);
    let tol = params.estimator.tolerance_for(system.is_exact());
    deltas
        .iter()
        .map(|&delta| {
            let balls = points
                .par_iter()
                .map(|x| {
                    let ball = system.ball_net(x, delta, params.mesh)?;
                    let orbit = DiamOrbit { system, points: ball.points(), gap: 0.0 };
                    let table = tabulate(&orbit, family, &params.estimator, Mode::BanachSup)?;
                    Ok(banach_table(&table, family, &params.estimator, "ball", tol).value)
                })
                .collect::<Result<Vec<f64>>>()?;
            let ball_max = balls.into_iter().fold(0.0, f64::max);
            Ok(Verdict::le("fiber_vs_balls", format!("delta={delta}"), fiber_max, ball_max, tol))
        })
        .collect()
}

/// Runs dme on the source of the catalog pair's factor and regularity on the
/// factor itself, and cross-checks them.
pub fn theorem_suite(pair: &CatalogPair, family: &FolnerSequence, dme: &DmeParams, reg: &RegularityParams) -> Result<SuiteReport> {
    let pi = &pair.factor;
    let system = pi.source().as_ref();
    let mut dme = dme.clone();
    dme.mesh = pair.dme_mesh;
    let points = sample_points(system, dme.samples, dme.seed)?;
    let dme_report = dme_global_test(system, &points, family, &dme)?;
    let ys = sample_targets(pi, reg)?;
    let regularity = diam_mean_proximal_test(pi, &ys, family, reg)?;
    let (a, b) = (dme_report.outcome(), regularity.outcome());
    let mut agreement = Verdict::new(
        "dme_vs_regularity",
        format!("{}:{}", pair.name, pi.label()),
        Outcome::from_bool(a == b),
        f64::NAN,
        f64::NAN,
        0.0,
    )
    .with_note(format!("dme {a}, regularity {b}"));
    if a != b {
        agreement = agreement.with_note("red flag: verdicts disagree");
    }
    let fiber_vs = if pair.expected == Outcome::Holds {
        fiber_vs_balls(system, &regularity, &points, family, &dme, &LEMMA_DELTAS)?
    } else {
        Vec::new()
    };
    Ok(SuiteReport { pair: pair.name.to_string(), expected: pair.expected, dme: dme_report, regularity, agreement, fiber_vs_balls: fiber_vs })
}

/// Diam-mean equicontinuity of `rotation × regular Toeplitz`: a product of
/// systems that pass, which should pass as well.
pub fn product_dme_check(family: &FolnerSequence, dme: &DmeParams) -> Result<DmeReport> {
    let parts: Vec<SystemRef> = vec![catalog::system("rotation")?, catalog::system("regular_toeplitz")?];
    let product = ProductSystem::new(parts)?;
    let mut params = dme.clone();
    params.mesh = catalog::pair("regular_toeplitz_odometer")?.dme_mesh;
    let points = sample_points(&product, params.samples, params.seed)?;
    dme_global_test(&product, &points, family, &params)
}
