//! Experiment configuration: a TOML file naming a command, a system, Følner
//! families and estimator scale.

use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use crate::averaging::EstimatorParams;
use crate::catalog;
use crate::error::{Error, Result};
use crate::group::{standard_folner, FolnerSequence, FolnerStyle, GroupElement, TranslateSchedule};
use crate::systems::{
    Angle, ExtInt, FullShift, Glued, GluedCompactification, Level, Odometer, OnePointCompactification, PeriodStructure, Point,
    Rotation, Sturmian, SystemRef, Toeplitz, TwoPointCompactification,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Diam,
    Density,
    Regularity,
    Dme,
    Suite,
}

impl CommandKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandKind::Diam => "diam",
            CommandKind::Density => "density",
            CommandKind::Regularity => "regularity",
            CommandKind::Dme => "dme",
            CommandKind::Suite => "suite",
        }
    }
}

/// Which estimator aggregation a command reports.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    #[default]
    Banach,
    Along,
    Both,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// Defaults to the golden-mean approximant.
    Rotation { alpha_num: Option<i64>, alpha_den: Option<i64> },
    Sturmian { alpha_num: Option<i64>, alpha_den: Option<i64> },
    /// Either explicit `periods` with one fill list per level, or a `preset`
    /// (`period_doubling` or `non_regular`) with `levels`.
    Toeplitz { periods: Option<Vec<u64>>, fills: Option<Vec<Vec<(u64, u8)>>>, preset: Option<String>, levels: Option<u32> },
    Odometer { periods: Vec<u64> },
    FullShift { alphabet: Option<usize> },
    OnePointCompactification {},
    #[serde(alias = "extended_integers")]
    TwoPointCompactification {},
    GluedCompactification {},
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemRef> {
        let golden = catalog::golden_angle();
        let angle = |num: &Option<i64>, den: &Option<i64>| match (num, den) {
            (Some(n), Some(d)) => Ok((*n, *d)),
            (None, None) => Ok((golden.num(), golden.den())),
            _ => Err(Error::Config("alpha_num and alpha_den go together".into())),
        };
        Ok(match self {
            SystemSpec::Rotation { alpha_num, alpha_den } => {
                let (n, d) = angle(alpha_num, alpha_den)?;
                Arc::new(Rotation::new(n, d)?)
            }
            SystemSpec::Sturmian { alpha_num, alpha_den } => {
                let (n, d) = angle(alpha_num, alpha_den)?;
                if d == 0 {
                    return Err(Error::Config("alpha_den must be nonzero".into()));
                }
                Arc::new(Sturmian::new(Angle::new(n, d))?)
            }
            SystemSpec::Toeplitz { periods, fills, preset, levels } => Arc::new(Toeplitz::new(period_structure(periods, fills, preset, levels)?)?),
            SystemSpec::Odometer { periods } => Arc::new(Odometer::new(periods.clone())?),
            SystemSpec::FullShift { alphabet } => Arc::new(FullShift::new(alphabet.unwrap_or(2))?),
            SystemSpec::OnePointCompactification {} => Arc::new(OnePointCompactification::new()),
            SystemSpec::TwoPointCompactification {} => Arc::new(TwoPointCompactification::new()),
            SystemSpec::GluedCompactification {} => Arc::new(GluedCompactification::new()),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SystemSpec::Rotation { .. } => "rotation",
            SystemSpec::Sturmian { .. } => "sturmian",
            SystemSpec::Toeplitz { .. } => "toeplitz",
            SystemSpec::Odometer { .. } => "odometer",
            SystemSpec::FullShift { .. } => "full_shift",
            SystemSpec::OnePointCompactification {} => "one_point_compactification",
            SystemSpec::TwoPointCompactification {} => "two_point_compactification",
            SystemSpec::GluedCompactification {} => "glued_compactification",
        }
    }

    /// Parses a point literal for this system. `sample:k` picks the `k`-th
    /// sampled net point and is resolved by the caller.
    pub fn parse_point(&self, s: &str) -> Result<Point> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot read `{s}` as a point of {}", self.name()));
        match self {
            SystemSpec::Rotation { .. } => parse_angle(s).map(Point::Angle).ok_or_else(bad),
            SystemSpec::OnePointCompactification {} | SystemSpec::TwoPointCompactification {} => {
                let e = match s {
                    "inf" | "+inf" => ExtInt::PosInf,
                    "-inf" => ExtInt::NegInf,
                    n => ExtInt::Fin(n.parse().map_err(|_| bad())?),
                };
                if matches!(self, SystemSpec::OnePointCompactification {}) && e == ExtInt::NegInf {
                    return Err(bad());
                }
                Ok(Point::Ext(e))
            }
            SystemSpec::GluedCompactification {} => {
                if s == "inf" {
                    return Ok(Point::Glued(Glued::Infinity));
                }
                let (n, copy) = s.split_at(s.len().saturating_sub(1));
                let n: i64 = n.parse().map_err(|_| bad())?;
                match copy {
                    "^" => Ok(Point::Glued(Glued::Hat(n))),
                    "v" => Ok(Point::Glued(Glued::Check(n))),
                    _ => Err(bad()),
                }
            }
            _ => Err(Error::Config(format!("{} points are given as `sample:k`", self.name()))),
        }
    }
}

fn period_structure(
    periods: &Option<Vec<u64>>,
    fills: &Option<Vec<Vec<(u64, u8)>>>,
    preset: &Option<String>,
    levels: &Option<u32>,
) -> Result<PeriodStructure> {
    match (periods, fills, preset) {
        (Some(p), Some(f), None) => {
            if p.len() != f.len() {
                return Err(Error::Config(format!("{} periods but {} fill lists", p.len(), f.len())));
            }
            PeriodStructure::new(p.iter().zip(f).map(|(&period, fills)| Level { period, fills: fills.clone() }).collect())
        }
        (None, None, Some(name)) => {
            let k = levels.unwrap_or(catalog::TOEPLITZ_LEVELS);
            match name.as_str() {
                "period_doubling" => PeriodStructure::period_doubling(k),
                "non_regular" => PeriodStructure::non_regular(k),
                other => Err(Error::Config(format!("unknown toeplitz preset `{other}`"))),
            }
        }
        _ => Err(Error::Config("toeplitz needs `periods` and `fills`, or a `preset`".into())),
    }
}

/// `p/q` or a decimal literal.
pub fn parse_angle(s: &str) -> Option<Angle> {
    if let Some((p, q)) = s.split_once('/') {
        let (p, q): (i64, i64) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
        return (q != 0).then(|| Angle::new(p, q));
    }
    Angle::from_f64(s.parse().ok()?).ok()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FolnerSpec {
    pub style: String,
    /// Translated families: `g_n = offset + n·step`.
    pub offset: Option<Vec<i64>>,
    pub step: Option<Vec<i64>>,
}

impl FolnerSpec {
    pub fn build(&self, dim: usize) -> Result<FolnerSequence> {
        let style = match self.style.as_str() {
            "forward" => FolnerStyle::Forward,
            "backward" => FolnerStyle::Backward,
            "centered" => FolnerStyle::Centered,
            "translated" => {
                let offset = self.offset.clone().unwrap_or_else(|| vec![0; dim]);
                let step = self.step.clone().ok_or_else(|| Error::Config("translated families need `step`".into()))?;
                FolnerStyle::Translated(TranslateSchedule::Linear { offset: GroupElement::new(offset), step: GroupElement::new(step) })
            }
            other => return Err(Error::Config(format!("unknown Følner style `{other}`"))),
        };
        standard_folner(dim, style).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSpec {
    pub n_max: u64,
    pub radius: u64,
    pub tail_frac: f64,
    pub grid_ratio: f64,
    pub stabilization_tol: f64,
    pub tolerance: Option<f64>,
    pub mesh: f64,
    pub eps: Vec<f64>,
    /// Empty means the default halving grid for `mesh`.
    pub deltas: Vec<f64>,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        let e = EstimatorParams::default();
        EstimatorSpec {
            n_max: e.n_max,
            radius: e.radius,
            tail_frac: e.tail_frac,
            grid_ratio: e.grid_ratio,
            stabilization_tol: e.stabilization_tol,
            tolerance: e.tolerance,
            mesh: 1.0 / 1024.0,
            eps: vec![0.2, 0.1, 0.05],
            deltas: Vec::new(),
        }
    }
}

impl EstimatorSpec {
    pub fn params(&self) -> EstimatorParams {
        EstimatorParams {
            n_max: self.n_max,
            tail_frac: self.tail_frac,
            grid_ratio: self.grid_ratio,
            radius: self.radius,
            stabilization_tol: self.stabilization_tol,
            tolerance: self.tolerance,
        }
    }

    /// `(key, problem)` for the first invalid field.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.n_max == 0 {
            return Err(("n_max", "must be positive".into()));
        }
        if self.radius == 0 {
            return Err(("radius", "must be positive".into()));
        }
        if !(self.mesh > 0.0 && self.mesh.is_finite()) {
            return Err(("mesh", "must be positive".into()));
        }
        for (key, list) in [("eps", &self.eps), ("deltas", &self.deltas)] {
            if list.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err((key, "entries must be positive".into()));
            }
            if list.windows(2).any(|w| w[1] >= w[0]) {
                return Err((key, "must be strictly decreasing".into()));
            }
        }
        if self.eps.is_empty() {
            return Err(("eps", "needs at least one entry".into()));
        }
        self.params().validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => (name, reason),
            other => ("n_max", other.to_string()),
        })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    /// `[start, start + length]` on a rotation, sampled at the mesh.
    Arc { start: String, length: String },
    Ball { point: String, delta: f64 },
    Singleton { point: String },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiamSpec {
    pub sets: Vec<SetSpec>,
    pub mode: ModeChoice,
    /// Thresholds the estimates are compared with; none by default.
    pub eps: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySetSpec {
    /// `{g : g₁ ≡ residue mod modulus}`.
    Residue { modulus: u64, residue: u64 },
    /// `{g : d(g.x, x) ≤ delta}`.
    Return { point: String, delta: f64 },
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DensitySpec {
    pub sets: Vec<DensitySetSpec>,
    pub eps: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegularitySpec {
    /// A catalog pair name or `glued`.
    pub factor: String,
    pub samples: usize,
    pub target_mesh: f64,
    pub cross_checks: usize,
    pub mode: ModeChoice,
}

impl Default for RegularitySpec {
    fn default() -> Self {
        RegularitySpec { factor: String::new(), samples: 10, target_mesh: 0.01, cross_checks: 8, mode: ModeChoice::Both }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmeSpec {
    /// Base points; empty means `samples` sampled net points, tested jointly.
    pub points: Vec<String>,
    pub samples: usize,
    pub mode: ModeChoice,
}

impl Default for DmeSpec {
    fn default() -> Self {
        DmeSpec { points: Vec::new(), samples: 6, mode: ModeChoice::Banach }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteSpec {
    pub pairs: Vec<String>,
    pub dme_samples: usize,
    pub regularity_samples: usize,
    /// Also test a product of two passing systems.
    pub product: bool,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec { pairs: catalog::PAIR_NAMES.iter().map(|s| s.to_string()).collect(), dme_samples: 6, regularity_samples: 10, product: true }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub system: Option<SystemSpec>,
    #[serde(default = "default_families")]
    pub folner: Vec<FolnerSpec>,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    pub diam: Option<DiamSpec>,
    pub density: Option<DensitySpec>,
    pub regularity: Option<RegularitySpec>,
    pub dme: Option<DmeSpec>,
    pub suite: Option<SuiteSpec>,
}

fn default_families() -> Vec<FolnerSpec> {
    vec![FolnerSpec { style: "forward".into(), offset: None, step: None }]
}

/// 1-based line of byte offset `at`.
fn line_at(src: &str, at: usize) -> usize {
    src[..at.min(src.len())].matches('\n').count() + 1
}

/// Line of `key` inside `[section]` (or at top level when `section` is
/// empty); the section header, or line 1, when the key is absent.
fn line_of(src: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    let mut header = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if current == section && header.is_none() {
                header = Some(i + 1);
            }
            continue;
        }
        if current == section {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return i + 1;
                }
            }
        }
    }
    header.unwrap_or(1)
}

fn at_line(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<ExperimentConfig> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::parse(&src)
    }

    /// Parses and validates; every error names the offending line.
    pub fn parse(src: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| line_at(src, s.start)).unwrap_or(1);
            at_line(line, e.message().trim())
        })?;
        cfg.validate(src)?;
        Ok(cfg)
    }

    fn validate(&self, src: &str) -> Result<()> {
        self.estimator.check().map_err(|(key, msg)| at_line(line_of(src, "estimator", key), format!("`{key}` {msg}")))?;
        let needs_system = matches!(self.command, CommandKind::Diam | CommandKind::Dme)
            || (self.command == CommandKind::Density
                && self.density.as_ref().is_some_and(|d| d.sets.iter().any(|s| matches!(s, DensitySetSpec::Return { .. }))));
        let system = match &self.system {
            Some(s) => Some(s.build().map_err(|e| at_line(line_of(src, "system", "name"), e))?),
            None if needs_system => return Err(at_line(line_of(src, "", "command"), format!("`{}` needs a [system] table", self.command.as_str()))),
            None => None,
        };
        let dim = system.as_ref().map(|s| s.dim()).unwrap_or(1);
        for f in &self.folner {
            f.build(dim).map_err(|e| at_line(line_of(src, "folner", "style"), e))?;
        }
        if self.folner.is_empty() {
            return Err(at_line(line_of(src, "folner", "style"), "at least one Følner family is needed"));
        }
        let section = |name: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(at_line(line_of(src, "", "command"), format!("`{}` needs a [{name}] table", self.command.as_str())))
            }
        };
        match self.command {
            CommandKind::Diam => {
                section("diam", self.diam.as_ref().is_some_and(|d| !d.sets.is_empty()))?;
                let spec = self.system.as_ref().expect("checked above");
                for s in &self.diam.as_ref().unwrap().sets {
                    self.check_set(spec, s).map_err(|e| at_line(line_of(src, "diam", "sets"), e))?;
                }
            }
            CommandKind::Density => section("density", self.density.as_ref().is_some_and(|d| !d.sets.is_empty()))?,
            CommandKind::Regularity => {
                section("regularity", self.regularity.is_some())?;
                let name = &self.regularity.as_ref().unwrap().factor;
                if name != "glued" {
                    catalog::pair(name).map_err(|e| at_line(line_of(src, "regularity", "factor"), e))?;
                }
            }
            CommandKind::Dme => {
                let dme = self.dme.clone().unwrap_or_default();
                let spec = self.system.as_ref().expect("checked above");
                for p in &dme.points {
                    if !p.starts_with("sample:") {
                        spec.parse_point(p).map_err(|e| at_line(line_of(src, "dme", "points"), e))?;
                    }
                }
            }
            CommandKind::Suite => {
                for p in &self.suite.clone().unwrap_or_default().pairs {
                    catalog::pair(p).map_err(|e| at_line(line_of(src, "suite", "pairs"), e))?;
                }
            }
        }
        Ok(())
    }

    fn check_set(&self, spec: &SystemSpec, s: &SetSpec) -> Result<()> {
        match s {
            SetSpec::Arc { start, length } => {
                if !matches!(spec, SystemSpec::Rotation { .. }) {
                    return Err(Error::Config("arcs live on rotations".into()));
                }
                parse_angle(start).ok_or_else(|| Error::Config(format!("bad arc start `{start}`")))?;
                let len = parse_angle(length).ok_or_else(|| Error::Config(format!("bad arc length `{length}`")))?;
                if len.to_f64() > 0.5 || length.trim().parse::<f64>().is_ok_and(|v| v >= 1.0) {
                    return Err(Error::Config("arc length must be at most 1/2".into()));
                }
                Ok(())
            }
            SetSpec::Ball { point, delta } => {
                if !(*delta > 0.0) {
                    return Err(Error::Config("ball radius must be positive".into()));
                }
                self.check_point(spec, point)
            }
            SetSpec::Singleton { point } => self.check_point(spec, point),
        }
    }

    fn check_point(&self, spec: &SystemSpec, p: &str) -> Result<()> {
        if let Some(k) = p.strip_prefix("sample:") {
            k.parse::<usize>().map(|_| ()).map_err(|_| Error::Config(format!("bad sample index in `{p}`")))
        } else {
            spec.parse_point(p).map(|_| ())
        }
    }

    /// The system, if the config names one.
    pub fn build_system(&self) -> Result<Option<SystemRef>> {
        self.system.as_ref().map(|s| s.build()).transpose()
    }

    pub fn families(&self, dim: usize) -> Result<Vec<FolnerSequence>> {
        self.folner.iter().map(|f| f.build(dim)).collect()
    }
}
