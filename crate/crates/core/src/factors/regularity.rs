use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{fiber, FactorMap};
use crate::averaging::{
    along_table, banach_table, diam_gap, tabulate, DiamOrbit, Estimate, EstimatorParams, Mode, OrbitFunction, OrbitTable,
};
use crate::error::{Error, Result};
use crate::group::{FolnerSequence, GroupElement};
use crate::systems::{diam_points, Point};
use crate::verdict::{Outcome, Verdict};

/// Scale of a regularity run.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityParams {
    pub estimator: EstimatorParams,
    /// Increasing or decreasing; the smallest entry is the floor that fiber
    /// mean diameters are compared with.
    pub eps_schedule: Vec<f64>,
    /// Mesh of the source net fibers are drawn from.
    pub mesh: f64,
    /// Mesh of the target net the sampled `y` come from.
    pub target_mesh: f64,
    pub samples: usize,
    pub seed: u64,
    /// Group elements per fiber at which `fiber(g.y)` is compared with `g.fiber(y)`.
    pub cross_checks: usize,
}

impl Default for RegularityParams {
    fn default() -> Self {
        RegularityParams {
            estimator: EstimatorParams::default(),
            eps_schedule: vec![0.2, 0.1, 0.05],
            mesh: 1.0 / 1024.0,
            target_mesh: 0.01,
            samples: 10,
            seed: 0,
            cross_checks: 8,
        }
    }
}

impl RegularityParams {
    pub fn floor(&self) -> f64 {
        self.eps_schedule.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if self.eps_schedule.is_empty() || self.eps_schedule.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::InvalidParameter { name: "eps_schedule", reason: "entries must lie in (0, 1)".into() });
        }
        if !(self.mesh > 0.0 && self.target_mesh > 0.0) {
            return Err(Error::BadMesh(self.mesh.min(self.target_mesh)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter { name: "samples", reason: "need at least one target point".into() });
        }
        Ok(())
    }
}

/// One `(fiber, ε)` cell.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityRow {
    pub fiber_y: String,
    pub eps: f64,
    pub diam_estimate: f64,
    pub density_estimate: f64,
    pub stabilized: bool,
    pub verdict: Outcome,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberSummary {
    pub y: String,
    pub points: usize,
    pub slack: f64,
    pub reliable: bool,
    pub diam: Estimate,
    /// The fiber-diameter criterion at the schedule floor.
    pub diam_outcome: Outcome,
    /// The density criterion across the schedule.
    pub density_outcome: Outcome,
    pub density: Vec<Estimate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub factor: String,
    pub mode: Mode,
    pub folner: String,
    pub fibers: Vec<FiberSummary>,
    pub rows: Vec<RegularityRow>,
    /// Fiber mean diameters against the floor, over all sampled fibers.
    pub diam_criterion: Outcome,
    /// Densities of `{g : diam π⁻¹(g.y) > ε}` against `ε`, over all fibers.
    pub density_criterion: Outcome,
    pub cross_check: Verdict,
    pub overall: Verdict,
}

impl RegularityReport {
    pub fn outcome(&self) -> Outcome {
        self.overall.outcome
    }
}

/// Target points to test: the distinguished points of `pi` followed by a
/// seeded sample of `target.net(target_mesh)`.
pub fn sample_targets(pi: &FactorMap, params: &RegularityParams) -> Result<Vec<Point>> {
    let mut ys: Vec<Point> = pi.distinguished().iter().take(params.samples).cloned().collect();
    let net = pi.target().net(params.target_mesh)?;
    let mut pool: Vec<&Point> = net.points().iter().filter(|p| !ys.contains(p)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    pool.shuffle(&mut rng);
    let room = params.samples - ys.len();
    ys.extend(pool.into_iter().take(room).cloned());
    Ok(ys)
}

struct FiberRun {
    summary: FiberSummary,
    rows: Vec<RegularityRow>,
    cross: (usize, usize, f64),
}

#[allow(clippy::too_many_arguments)]
fn cross_check(pi: &FactorMap, y: &Point, table: &OrbitTable, gap: f64, tol: f64, count: usize, params: &RegularityParams, salt: u64) -> Result<(usize, usize, f64)> {
    let region = table.region();
    let dim = region.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut worst = 0.0f64;
    let mut bad = 0;
    for _ in 0..count {
        let coords: Vec<i64> = (0..dim)
            .map(|k| {
                let lo = region.origin().coords()[k];
                lo + rng.gen_range(0..region.extent()[k] as i64)
            })
            .collect();
        let g = GroupElement::new(coords);
        let moved = pi.target().act(&g, y);
        let f = fiber(pi, &moved, params.mesh, None)?;
        let direct = diam_points(pi.source().as_ref(), f.points.points());
        let tabulated = table.value(&g).expect("sampled inside the region");
        let diff = (direct - tabulated).abs();
        worst = worst.max(diff);
        if diff > gap + tol {
            bad += 1;
        }
    }
    Ok((count, bad, worst))
}

fn run_fiber(pi: &FactorMap, y: &Point, index: usize, family: &FolnerSequence, params: &RegularityParams, mode: Mode) -> Result<FiberRun> {
    let est_params = &params.estimator;
    let f = fiber(pi, y, params.mesh, None)?;
    let source = pi.source().as_ref();
    let gap = if f.from_hint { 0.0 } else { diam_gap(source, &f.points) };
    let orbit = DiamOrbit { system: source, points: f.points.points(), gap };
    let tol = est_params.tolerance_for(orbit.is_exact());
    let table = tabulate(&orbit, family, est_params, Mode::BanachSup)?;
    let estimate = |t: &OrbitTable, label: &str| {
        match mode {
            Mode::AlongFolner => along_table(t, family, est_params, label, tol),
            Mode::BanachSup => banach_table(t, family, est_params, label, tol),
        }
    };
    let y_label = y.to_string();
    let mut diam = estimate(&table, &format!("diam_fiber[{y_label}]"));
    diam.gap = gap;
    let mut diam_outcome = diam.outcome_le(params.floor());
    let mut rows = Vec::new();
    let mut density = Vec::new();
    let mut density_outcome = Outcome::Holds;
    for &eps in &params.eps_schedule {
        // a listed diameter may undershoot the true one by `gap`
        let ind = table.map(|v| if v + gap > eps { 1.0 } else { 0.0 })?;
        let dens = estimate(&ind, &format!("density_fiber[{y_label}]>{eps}"));
        let dens_outcome = dens.outcome_le(eps);
        density_outcome = density_outcome.and(dens_outcome);
        let mut cell = diam.outcome_le(eps).and(dens_outcome);
        if !f.reliable && cell == Outcome::Holds {
            cell = Outcome::Inconclusive;
        }
        rows.push(RegularityRow {
            fiber_y: y_label.clone(),
            eps,
            diam_estimate: diam.value,
            density_estimate: dens.value,
            stabilized: diam.stabilized && dens.stabilized,
            verdict: cell,
        });
        density.push(dens);
    }
    if !f.reliable {
        if diam_outcome == Outcome::Holds {
            diam_outcome = Outcome::Inconclusive;
        }
        if density_outcome == Outcome::Holds {
            density_outcome = Outcome::Inconclusive;
        }
    }
    let cross = cross_check(pi, y, &table, gap, tol, params.cross_checks, params, index as u64 + 1)?;
    Ok(FiberRun {
        summary: FiberSummary {
            y: y_label,
            points: f.points.len(),
            slack: f.slack,
            reliable: f.reliable,
            diam,
            diam_outcome,
            density_outcome,
            density,
        },
        rows,
        cross,
    })
}

fn regularity_test(pi: &FactorMap, ys: &[Point], family: &FolnerSequence, params: &RegularityParams, mode: Mode) -> Result<RegularityReport> {
    params.validate()?;
    if ys.is_empty() {
        return Err(Error::InvalidParameter { name: "ys", reason: "need at least one target point".into() });
    }
    if family.dim() != pi.source().dim() {
        return Err(Error::DimensionMismatch { expected: pi.source().dim(), got: family.dim() });
    }
    let runs: Vec<FiberRun> =
        ys.par_iter().enumerate().map(|(i, y)| run_fiber(pi, y, i, family, params, mode)).collect::<Result<_>>()?;
    let diam_criterion = Outcome::all(runs.iter().map(|r| r.summary.diam_outcome));
    let density_criterion = Outcome::all(runs.iter().map(|r| r.summary.density_outcome));
    let (checked, bad, worst) = runs.iter().fold((0, 0, 0.0f64), |acc, r| (acc.0 + r.cross.0, acc.1 + r.cross.1, acc.2.max(r.cross.2)));
    let tol = params.estimator.tolerance_for(pi.source().is_exact());
    let scale = format!(
        "n_max={},radius={},mesh={},eps={:?},samples={}",
        params.estimator.n_max,
        params.estimator.radius,
        params.mesh,
        params.eps_schedule,
        ys.len()
    );
    let cross_check = Verdict::new("fiber_equivariance", scale.clone(), Outcome::from_bool(bad == 0), worst, 0.0, tol)
        .with_note(format!("{bad} of {checked} translates disagree"));
    let check = match mode {
        Mode::BanachSup => "diam_mean_proximal",
        Mode::AlongFolner => "f_diam_mean_proximal",
    };
    let worst_diam = runs.iter().map(|r| r.summary.diam.value).fold(0.0, f64::max);
    let mut outcome = if diam_criterion == density_criterion { diam_criterion } else { Outcome::Inconclusive };
    let mut overall = Verdict::new(check, scale, Outcome::Holds, worst_diam, params.floor(), tol);
    if diam_criterion != density_criterion {
        overall = overall.with_note(format!(
            "red flag: diameter criterion {diam_criterion} but density criterion {density_criterion}"
        ));
    }
    if bad > 0 {
        overall = overall.with_note("red flag: fiber over g.y differs from g applied to the fiber over y");
        if outcome == Outcome::Holds {
            outcome = Outcome::Inconclusive;
        }
    }
    let unreliable = runs.iter().filter(|r| !r.summary.reliable).count();
    if unreliable > 0 {
        overall = overall.with_note(format!("{unreliable} fiber approximations unreliable"));
    }
    overall.outcome = outcome;
    overall.gap = runs.iter().map(|r| r.summary.diam.gap).fold(0.0, f64::max);
    let rows = runs.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    Ok(RegularityReport {
        factor: pi.label().to_string(),
        mode,
        folner: family.label().to_string(),
        fibers: runs.into_iter().map(|r| r.summary).collect(),
        rows,
        diam_criterion,
        density_criterion,
        cross_check,
        overall,
    })
}

/// Diam-mean proximality of `pi` on the fibers over `ys`, by translate-sups:
/// each fiber's mean diameter against the floor of the ε-schedule, and the
/// upper Banach density of `{g : diam π⁻¹(g.y) > ε}` against each `ε`.
pub fn diam_mean_proximal_test(pi: &FactorMap, ys: &[Point], family: &FolnerSequence, params: &RegularityParams) -> Result<RegularityReport> {
    regularity_test(pi, ys, family, params, Mode::BanachSup)
}

/// [`diam_mean_proximal_test`] along a single Følner family.
pub fn f_diam_mean_proximal_test(pi: &FactorMap, ys: &[Point], family: &FolnerSequence, params: &RegularityParams) -> Result<RegularityReport> {
    regularity_test(pi, ys, family, params, Mode::AlongFolner)
}
