//! Config-driven experiments writing CSV tables and SVG plots.
//!
//! Each command reads an [`ExperimentConfig`], runs the matching library
//! routines and writes `estimates.csv`, `verdicts.csv` and one plot per
//! estimate into the output directory. Output depends only on the config and
//! seed.

mod config;
mod output;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{
    parse_angle, CommandKind, DensitySetSpec, DensitySpec, DiamSpec, DmeSpec, EstimatorSpec, ExperimentConfig, FolnerSpec, ModeChoice,
    RegularitySpec, SetSpec, SuiteSpec, SystemSpec,
};
pub use output::{
    plot_svg, slug, write_csv, EstimateRow, Outputs, SummaryRow, VerdictRow, DME_HEADER, ESTIMATE_HEADER, REGULARITY_HEADER,
    SUMMARY_HEADER, VERDICT_HEADER,
};

use crate::averaging::{density_report, mean_diameter, mean_diameter_along, Estimate, EstimatorParams, FnOrbit, Mode};
use crate::catalog;
use crate::equicontinuity::{dme_global_test, f_dme_point_test, product_dme_check, sample_points, theorem_suite, DmeParams, DmeReport};
use crate::error::{Error, Result};
use crate::factors::{diam_mean_proximal_test, f_diam_mean_proximal_test, sample_targets, FactorMap, RegularityParams, RegularityReport};
use crate::group::FolnerSequence;
use crate::systems::{NetSet, Point, Rotation, System, SystemRef};
use crate::verdict::{Outcome, Verdict};

/// What a command produced.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub command: CommandKind,
    /// Holds unless some headline check failed.
    pub outcome: Outcome,
    pub files: Vec<PathBuf>,
    /// Human-readable summary block.
    pub summary: String,
}

/// Runs the command the config names and writes its files under `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport> {
    let (outputs, outcome, summary) = match cfg.command {
        CommandKind::Diam => cmd_diam(cfg)?,
        CommandKind::Density => cmd_density(cfg)?,
        CommandKind::Regularity => cmd_regularity(cfg)?,
        CommandKind::Dme => cmd_dme(cfg)?,
        CommandKind::Suite => cmd_suite(cfg)?,
    };
    let files = outputs.write(out)?;
    Ok(RunReport { command: cfg.command, outcome, files, summary })
}

type Produced = (Outputs, Outcome, String);

fn scale(p: &EstimatorParams) -> String {
    format!("n_max={};radius={};tail_frac={};grid_ratio={}", p.n_max, p.radius, p.tail_frac, p.grid_ratio)
}

fn system_of(cfg: &ExperimentConfig) -> Result<SystemRef> {
    cfg.build_system()?.ok_or_else(|| Error::Config(format!("`{}` needs a [system] table", cfg.command.as_str())))
}

/// Resolves a point literal; `sample:k` is the `k`-th point of the seeded
/// net sample.
pub fn resolve_point(cfg: &ExperimentConfig, system: &dyn System, s: &str) -> Result<Point> {
    match s.strip_prefix("sample:") {
        Some(k) => {
            let k: usize = k.parse().map_err(|_| Error::Config(format!("bad sample index in `{s}`")))?;
            let pts = sample_points(system, k + 1, cfg.seed)?;
            pts.get(k).cloned().ok_or_else(|| Error::Config(format!("net has fewer than {} points", k + 1)))
        }
        None => cfg.system.as_ref().expect("points need a system").parse_point(s),
    }
}

/// The net set a [`SetSpec`] describes, with a label for it.
pub fn build_set(cfg: &ExperimentConfig, system: &SystemRef, set: &SetSpec) -> Result<(String, NetSet)> {
    let mesh = cfg.estimator.mesh;
    match set {
        SetSpec::Arc { start, length } => {
            let rot = catalog_rotation(cfg)?;
            let (a, len) = (parse_angle(start).expect("validated"), parse_angle(length).expect("validated"));
            // A grid fine enough for the mesh on which the arc's endpoints lie.
            let n0 = Rotation::grid_size(mesh)?;
            let q = len.den();
            let n = (n0 + q - 1) / q * q;
            let steps = len.num() * (n / q);
            let label = format!("arc({start},{length})");
            let pts: Vec<Point> = rot.arc(a, steps, n)?.points().to_vec();
            Ok((label, NetSet::new(system.as_ref(), pts, 1.0 / (2 * n) as f64)?))
        }
        SetSpec::Ball { point, delta } => {
            let x = resolve_point(cfg, system.as_ref(), point)?;
            Ok((format!("ball({point},{delta})"), system.ball_net(&x, *delta, mesh)?))
        }
        SetSpec::Singleton { point } => {
            let x = resolve_point(cfg, system.as_ref(), point)?;
            Ok((format!("point({point})"), NetSet::singleton(system.as_ref(), x, mesh)?))
        }
    }
}

fn catalog_rotation(cfg: &ExperimentConfig) -> Result<Rotation> {
    match &cfg.system {
        Some(SystemSpec::Rotation { alpha_num, alpha_den }) => match (alpha_num, alpha_den) {
            (Some(n), Some(d)) => Rotation::new(*n, *d),
            _ => catalog::rotation(),
        },
        _ => Err(Error::Config("arcs live on rotations".into())),
    }
}

/// Mean diameters of the configured sets, per family and mode.
pub fn cmd_diam(cfg: &ExperimentConfig) -> Result<Produced> {
    let spec = cfg.diam.clone().ok_or_else(|| Error::Config("`diam` needs a [diam] table".into()))?;
    let system = system_of(cfg)?;
    let params = cfg.estimator.params();
    let families = cfg.families(system.dim())?;
    let mut out = Outputs::default();
    let mut outcomes = Vec::new();
    let mut text = String::new();
    let _ = writeln!(text, "diam on {}", system.label());
    for set in &spec.sets {
        let (label, a) = build_set(cfg, &system, set)?;
        for f in &families {
            let mut ests: Vec<Estimate> = Vec::new();
            if spec.mode != ModeChoice::Along {
                let mut e = mean_diameter(system.as_ref(), f, &a, &params)?;
                e.label = format!("diam[{label}]@{}", f.label());
                ests.push(e);
            }
            if spec.mode != ModeChoice::Banach {
                let mut e = mean_diameter_along(system.as_ref(), f, &a, &params)?;
                e.label = format!("diam_f[{label}]@{}", f.label());
                ests.push(e);
            }
            if let [b, al] = &ests[..] {
                let v = Verdict::le("diam_f_le_diam", format!("{label}@{};{}", f.label(), scale(&params)), al.value, b.tail_max(), b.tolerance);
                outcomes.push(v.outcome);
                out.verdict(&v);
            }
            for e in &ests {
                for &eps in &spec.eps {
                    let o = e.outcome_le(eps);
                    outcomes.push(o);
                    out.verdict(&Verdict::new("diam_le_eps", format!("{};eps={eps};{}", e.label, scale(&params)), o, e.value, eps, e.tolerance));
                }
                let _ = writeln!(text, "  {:<48} {:.6} stabilized={}", e.label, e.value, e.stabilized);
                out.estimate(if e.mode == Mode::BanachSup { "diam" } else { "diam_f" }, system.label(), e);
            }
        }
    }
    Ok((out, Outcome::all(outcomes), text))
}

fn density_predicate(cfg: &ExperimentConfig, set: &DensitySetSpec, dim: usize) -> Result<FnOrbit> {
    match set {
        DensitySetSpec::Residue { modulus, residue } => {
            if *modulus == 0 || residue >= modulus {
                return Err(Error::Config(format!("need 0 ≤ residue < modulus, got {residue} mod {modulus}")));
            }
            let (m, r) = (*modulus as i64, *residue as i64);
            Ok(FnOrbit::indicator(format!("{m}Z+{r}"), dim, move |g| g.first().rem_euclid(m) == r))
        }
        DensitySetSpec::Return { point, delta } => {
            let system = system_of(cfg)?;
            let x = resolve_point(cfg, system.as_ref(), point)?;
            let d = *delta;
            let label = format!("return({point},{d})");
            Ok(FnOrbit::indicator(label, system.dim(), move |g| system.metric(&system.act(g, &x), &x) <= d))
        }
    }
}

/// Asymptotic and Banach densities of the configured sets.
pub fn cmd_density(cfg: &ExperimentConfig) -> Result<Produced> {
    let spec = cfg.density.clone().ok_or_else(|| Error::Config("`density` needs a [density] table".into()))?;
    let dim = cfg.build_system()?.map(|s| s.dim()).unwrap_or(1);
    let params = cfg.estimator.params();
    let mut out = Outputs::default();
    let mut outcomes = Vec::new();
    let mut text = String::from("density\n");
    let system_label = cfg.system.as_ref().map(|s| s.name()).unwrap_or("z");
    for set in &spec.sets {
        let pred = density_predicate(cfg, set, dim)?;
        for f in cfg.families(dim)? {
            let r = density_report(&f, &pred, &params)?;
            let consistent = r.consistent();
            let v = Verdict::new(
                "density_consistency",
                format!("{}@{};{}", r.set_label, f.label(), scale(&params)),
                Outcome::from_bool(consistent),
                r.upper_along.value,
                r.upper_banach.tail_max(),
                r.upper_banach.tolerance,
            );
            outcomes.push(v.outcome);
            out.verdict(&v);
            for &eps in &spec.eps {
                let o = r.upper_banach.outcome_le(eps);
                outcomes.push(o);
                out.verdict(&Verdict::new(
                    "banach_density_le_eps",
                    format!("{};eps={eps};{}", r.upper_banach.label, scale(&params)),
                    o,
                    r.upper_banach.value,
                    eps,
                    r.upper_banach.tolerance,
                ));
            }
            for e in [&r.upper_along, &r.lower_along, &r.upper_banach] {
                let _ = writeln!(text, "  {:<48} {:.6}", e.label, e.value);
                out.estimate("density", system_label, e);
            }
        }
    }
    Ok((out, Outcome::all(outcomes), text))
}

fn factor_by_name(name: &str) -> Result<FactorMap> {
    if name == "glued" {
        catalog::glued_factor()
    } else {
        Ok(catalog::pair(name)?.factor)
    }
}

fn regularity_params(cfg: &ExperimentConfig, samples: usize, target_mesh: f64, cross_checks: usize) -> RegularityParams {
    RegularityParams {
        estimator: cfg.estimator.params(),
        eps_schedule: cfg.estimator.eps.clone(),
        mesh: cfg.estimator.mesh,
        target_mesh,
        samples,
        seed: cfg.seed,
        cross_checks,
    }
}

fn record_regularity(out: &mut Outputs, text: &mut String, name: &str, r: &RegularityReport, params: &RegularityParams) {
    let check = match r.mode {
        Mode::BanachSup => "diam_mean_proximal",
        Mode::AlongFolner => "f_diam_mean_proximal",
    };
    for f in &r.fibers {
        out.estimate(check, name, &f.diam);
    }
    out.verdict(&r.cross_check);
    out.verdict(&r.overall);
    out.regularity.push((format!("{name}_{}", r.mode.as_str()), r.rows.clone()));
    let _ = writeln!(
        text,
        "  {check:<22} {:<12} (ii) {:<12} (ii') {:<12} cross-check {:<12} fibers {} [{}]",
        r.overall.outcome.as_str(),
        r.diam_criterion.as_str(),
        r.density_criterion.as_str(),
        r.cross_check.outcome.as_str(),
        r.fibers.len(),
        scale(&params.estimator)
    );
    for f in &r.fibers {
        let _ = writeln!(text, "    y={:<24} points={:<4} diam={:.6} {}", f.y, f.points, f.diam.value, f.diam_outcome.as_str());
    }
}

/// Regularity of a catalog factor map, in either or both modes.
pub fn cmd_regularity(cfg: &ExperimentConfig) -> Result<Produced> {
    let spec = cfg.regularity.clone().ok_or_else(|| Error::Config("`regularity` needs a [regularity] table".into()))?;
    let pi = factor_by_name(&spec.factor)?;
    let params = regularity_params(cfg, spec.samples, spec.target_mesh, spec.cross_checks);
    let ys = sample_targets(&pi, &params)?;
    let mut out = Outputs::default();
    let mut outcomes = Vec::new();
    let mut text = format!("regularity of {}\n", pi.label());
    for f in cfg.families(pi.source().dim())? {
        let mut reports = Vec::new();
        if spec.mode != ModeChoice::Along {
            reports.push(diam_mean_proximal_test(&pi, &ys, &f, &params)?);
        }
        if spec.mode != ModeChoice::Banach {
            reports.push(f_diam_mean_proximal_test(&pi, &ys, &f, &params)?);
        }
        for r in &reports {
            outcomes.push(r.outcome());
            record_regularity(&mut out, &mut text, &spec.factor, r, &params);
        }
    }
    Ok((out, Outcome::all(outcomes), text))
}

fn dme_params(cfg: &ExperimentConfig, samples: usize) -> DmeParams {
    DmeParams {
        estimator: cfg.estimator.params(),
        eps_schedule: cfg.estimator.eps.clone(),
        delta_grid: cfg.estimator.deltas.clone(),
        mesh: cfg.estimator.mesh,
        samples,
        seed: cfg.seed,
        ..DmeParams::default()
    }
}

fn record_dme(out: &mut Outputs, text: &mut String, name: &str, r: &DmeReport) {
    for e in &r.estimates {
        out.estimate(&r.check, name, e);
    }
    out.verdict(&r.verdict);
    out.dme.push((format!("{name}_{}_{}", r.check, slug(&r.point)), r.rows.clone()));
    let _ = writeln!(text, "  {:<12} {:<12} {} density criterion {}", r.check, r.point, r.outcome().as_str(), r.density_outcome.as_str());
    for row in &r.rows {
        let _ = writeln!(text, "    eps={:<6} delta={:<12e} diam={:.6} {}", row.eps, row.delta, row.estimate, row.verdict.as_str());
    }
}

/// Diam-mean equicontinuity at the configured points, or jointly over
/// sampled points.
pub fn cmd_dme(cfg: &ExperimentConfig) -> Result<Produced> {
    let spec = cfg.dme.clone().unwrap_or_default();
    let system = system_of(cfg)?;
    let params = dme_params(cfg, spec.samples);
    let points: Vec<Point> = if spec.points.is_empty() {
        sample_points(system.as_ref(), spec.samples, cfg.seed)?
    } else {
        spec.points.iter().map(|p| resolve_point(cfg, system.as_ref(), p)).collect::<Result<_>>()?
    };
    let mut out = Outputs::default();
    let mut outcomes = Vec::new();
    let mut text = format!("dme on {}\n", system.label());
    let name = cfg.system.as_ref().map(|s| s.name()).unwrap_or("system");
    for f in cfg.families(system.dim())? {
        let mut reports = Vec::new();
        if spec.mode != ModeChoice::Along {
            reports.push(dme_global_test(system.as_ref(), &points, &f, &params)?);
        }
        if spec.mode != ModeChoice::Banach {
            for x in &points {
                reports.push(f_dme_point_test(system.as_ref(), x, &f, &params)?);
            }
        }
        for r in &reports {
            outcomes.push(r.outcome());
            record_dme(&mut out, &mut text, name, r);
        }
    }
    Ok((out, Outcome::all(outcomes), text))
}

/// The catalog pairs: diam-mean equicontinuity of the system against
/// regularity of its maximal equicontinuous factor.
pub fn cmd_suite(cfg: &ExperimentConfig) -> Result<Produced> {
    let spec = cfg.suite.clone().unwrap_or_default();
    let dme = dme_params(cfg, spec.dme_samples);
    let reg = regularity_params(cfg, spec.regularity_samples, RegularitySpec::default().target_mesh, RegularitySpec::default().cross_checks);
    let mut out = Outputs::default();
    let mut outcomes = Vec::new();
    let mut text = String::from("suite\n");
    for name in &spec.pairs {
        let pair = catalog::pair(name)?;
        let family: FolnerSequence = cfg.families(pair.factor.source().dim())?.remove(0);
        let s = theorem_suite(&pair, &family, &dme, &reg)?;
        let dme_scale = format!("{};mesh={:e};samples={}", scale(&dme.estimator), pair.dme_mesh, dme.samples);
        let reg_scale = format!("{};mesh={:e};samples={}", scale(&reg.estimator), reg.mesh, reg.samples);
        let expected = Verdict::new(
            "expected_verdict",
            format!("{name}:expected={}", pair.expected.as_str()),
            Outcome::from_bool(s.dme.outcome() == pair.expected && s.regularity.outcome() == pair.expected),
            f64::NAN,
            f64::NAN,
            0.0,
        );
        let _ = writeln!(
            text,
            "  {name:<30} dme {:<12} regularity {:<12} agree {:<6} expected {}",
            s.dme.outcome().as_str(),
            s.regularity.outcome().as_str(),
            s.agreement.outcome.as_str(),
            pair.expected.as_str()
        );
        record_dme(&mut out, &mut String::new(), name, &s.dme);
        record_regularity(&mut out, &mut String::new(), name, &s.regularity, &reg);
        out.verdict(&s.agreement);
        out.verdict(&expected);
        out.summary.push(SummaryRow { system: name.clone(), check: s.dme.check.clone(), verdict: s.dme.outcome(), scale_params: dme_scale.clone() });
        out.summary.push(SummaryRow {
            system: name.clone(),
            check: "diam_mean_proximal".into(),
            verdict: s.regularity.outcome(),
            scale_params: reg_scale.clone(),
        });
        out.summary.push(SummaryRow { system: name.clone(), check: "agreement".into(), verdict: s.agreement.outcome, scale_params: dme_scale.clone() });
        outcomes.push(s.agreement.outcome);
        outcomes.push(expected.outcome);
        if !s.fiber_vs_balls.is_empty() {
            for v in &s.fiber_vs_balls {
                out.verdict(v);
            }
            let o = Outcome::all(s.fiber_vs_balls.iter().map(|v| v.outcome));
            out.summary.push(SummaryRow { system: name.clone(), check: "fiber_vs_balls".into(), verdict: o, scale_params: dme_scale });
            outcomes.push(o);
        }
    }
    if spec.product {
        let family = cfg.families(1)?.remove(0);
        let r = product_dme_check(&family, &dme)?;
        let name = "rotation_x_regular_toeplitz";
        let _ = writeln!(text, "  {name:<30} dme {:<12} expected holds", r.outcome().as_str());
        record_dme(&mut out, &mut String::new(), name, &r);
        out.summary.push(SummaryRow { system: name.into(), check: "product_dme".into(), verdict: r.outcome(), scale_params: r.verdict.params.clone() });
        outcomes.push(r.outcome());
    }
    Ok((out, Outcome::all(outcomes), text))
}

/// Parses, runs and writes; the output directory is `out` if given, else the
/// config's, else `out`.
pub fn run_config_file(path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<RunReport> {
    let mut cfg = ExperimentConfig::from_path(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out.map(Path::to_path_buf).or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    run(&cfg, &dir)
}
