//! Named systems with known maximal equicontinuous factors, and the factor
//! maps between them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::factors::{identity, to_point, FactorMap, PointMap};
use crate::systems::{
    golden_mean_approximant, Angle, FullShift, Glued, GluedCompactification, NetSet, Odometer, OnePointCompactification,
    PeriodStructure, Point, Rotation, Sturmian, System, SystemRef, Toeplitz, TwoPointCompactification, MIN_STURMIAN_DEN,
};
use crate::verdict::Outcome;

/// Hole-fill seeds per fiber of a Toeplitz factor; each comes with its
/// complement.
pub const TOEPLITZ_FIBER_PAIRS: u64 = 3;

/// Levels of the shipped Toeplitz structures.
pub const TOEPLITZ_LEVELS: u32 = 12;

/// The golden-mean rotation proxy used throughout the catalog.
pub fn golden_angle() -> Angle {
    golden_mean_approximant(MIN_STURMIAN_DEN)
}

pub fn rotation() -> Result<Rotation> {
    let a = golden_angle();
    Rotation::new(a.num(), a.den())
}

/// `π: X_α → 𝕋`, a coding to the angle it codes.
pub fn sturmian_factor(alpha: Angle) -> Result<FactorMap> {
    let st = Arc::new(Sturmian::new(alpha)?);
    let rot: SystemRef = Arc::new(Rotation::new(alpha.num(), alpha.den())?);
    let map: PointMap = Arc::new(|x: &Point| match x {
        Point::Sturmian(s) => Point::Angle(s.angle()),
        other => panic!("sturmian factor expects a coding, got {other:?}"),
    });
    let src: SystemRef = st.clone();
    Ok(FactorMap::new(format!("{}→rotation", st_label(&alpha)), src, rot, map)?
        .with_fiber_hint(Arc::new(move |y: &Point, mesh: f64| {
            let Point::Angle(a) = y else {
                return Err(Error::ForeignPoint("rotation".into()));
            };
            NetSet::new(st.as_ref(), st.codings(*a), mesh)
        }))
        .with_distinguished(vec![Point::Angle(Angle::new(0, 1))]))
}

fn st_label(alpha: &Angle) -> String {
    format!("sturmian({alpha})")
}

/// `π: X_T → Ω`, a Toeplitz point to its phase in the odometer.
pub fn toeplitz_factor(structure: PeriodStructure) -> Result<FactorMap> {
    let periods = structure.periods();
    let tp = Arc::new(Toeplitz::new(structure)?);
    let od = Arc::new(Odometer::new(periods)?);
    let top = od.top() as i64;
    let map: PointMap = Arc::new(move |x: &Point| match x {
        Point::Toeplitz(t) => Point::Odometer(t.pos.rem_euclid(top) as u64),
        other => panic!("toeplitz factor expects a toeplitz point, got {other:?}"),
    });
    let (src, tgt): (SystemRef, SystemRef) = (tp.clone(), od.clone());
    let label = format!("{}→odometer", tp.label());
    Ok(FactorMap::new(label, src, tgt, map)?
        .with_fiber_hint(Arc::new(move |y: &Point, mesh: f64| {
            let Point::Odometer(z) = y else {
                return Err(Error::ForeignPoint("odometer".into()));
            };
            NetSet::new(tp.as_ref(), tp.phase_points(*z as i64, TOEPLITZ_FIBER_PAIRS), mesh)
        }))
        .with_distinguished(vec![Point::Odometer(0)]))
}

pub fn regular_toeplitz_factor() -> Result<FactorMap> {
    toeplitz_factor(PeriodStructure::period_doubling(TOEPLITZ_LEVELS)?)
}

pub fn non_regular_toeplitz_factor() -> Result<FactorMap> {
    toeplitz_factor(PeriodStructure::non_regular(TOEPLITZ_LEVELS)?)
}

pub fn full_shift_factor(alphabet: usize) -> Result<FactorMap> {
    to_point(Arc::new(FullShift::new(alphabet)?))
}

pub fn rotation_identity() -> Result<FactorMap> {
    Ok(identity(Arc::new(rotation()?)).with_distinguished(vec![Point::Angle(Angle::new(0, 1))]))
}

/// Two copies of ℤ ∪ {∞} glued at `∞`, mapped onto one: `n̂, ň ↦ n`.
pub fn glued_factor() -> Result<FactorMap> {
    let src = Arc::new(GluedCompactification::new());
    let tgt: SystemRef = Arc::new(OnePointCompactification::new());
    let map: PointMap = Arc::new(|x: &Point| match x {
        Point::Glued(g) => Point::Ext(g.base()),
        other => panic!("glued factor expects a glued point, got {other:?}"),
    });
    let s: SystemRef = src.clone();
    Ok(FactorMap::new("glued→one_point", s, tgt, map)?
        .with_fiber_hint(Arc::new(move |y: &Point, mesh: f64| {
            let pts = match y {
                Point::Ext(crate::systems::ExtInt::Fin(n)) => vec![Point::Glued(Glued::Hat(*n)), Point::Glued(Glued::Check(*n))],
                Point::Ext(_) => vec![Point::Glued(Glued::Infinity)],
                _ => return Err(Error::ForeignPoint("one_point_compactification".into())),
            };
            NetSet::new(src.as_ref(), pts, mesh)
        }))
        .with_distinguished(vec![OnePointCompactification::infinity()]))
}

/// The ℤ ∪ {±∞} system.
pub fn extended_integers() -> TwoPointCompactification {
    TwoPointCompactification::new()
}

/// A catalog system with its maximal equicontinuous factor and the verdict
/// both diam-mean equicontinuity and regularity of that factor should reach.
#[derive(Clone, Debug)]
pub struct CatalogPair {
    pub name: &'static str,
    pub factor: FactorMap,
    pub expected: Outcome,
    /// Mesh at which δ-balls are listed for equicontinuity tests. Symbolic
    /// codings need very fine meshes: a ball must pin a long central block.
    pub dme_mesh: f64,
}

pub const PAIR_NAMES: [&str; 5] = ["rotation_identity", "sturmian_rotation", "regular_toeplitz_odometer", "nonregular_toeplitz_odometer", "full_shift_point"];

pub fn pair(name: &str) -> Result<CatalogPair> {
    let (factor, expected, dme_mesh) = match name {
        "rotation_identity" => (rotation_identity()?, Outcome::Holds, 1.0 / 512.0),
        "sturmian_rotation" => (sturmian_factor(golden_angle())?, Outcome::Holds, f64::powi(2.0, -160)),
        "regular_toeplitz_odometer" => (regular_toeplitz_factor()?, Outcome::Holds, f64::powi(2.0, -160)),
        "nonregular_toeplitz_odometer" => (non_regular_toeplitz_factor()?, Outcome::Fails, f64::powi(2.0, -160)),
        "full_shift_point" => (full_shift_factor(2)?, Outcome::Fails, 1.0 / 256.0),
        other => return Err(Error::Config(format!("unknown catalog pair `{other}`"))),
    };
    let name = PAIR_NAMES.iter().find(|n| **n == name).copied().unwrap_or("glued");
    Ok(CatalogPair { name, factor, expected, dme_mesh })
}

/// The five catalog pairs in a fixed order.
pub fn pairs() -> Result<Vec<CatalogPair>> {
    PAIR_NAMES.iter().map(|n| pair(n)).collect()
}

/// A catalog system by name.
pub fn system(name: &str) -> Result<SystemRef> {
    Ok(match name {
        "rotation" => Arc::new(rotation()?),
        "sturmian" => Arc::new(Sturmian::new(golden_angle())?),
        "regular_toeplitz" => Arc::new(Toeplitz::new(PeriodStructure::period_doubling(TOEPLITZ_LEVELS)?)?),
        "nonregular_toeplitz" => Arc::new(Toeplitz::new(PeriodStructure::non_regular(TOEPLITZ_LEVELS)?)?),
        "odometer" => Arc::new(Odometer::new(PeriodStructure::period_doubling(TOEPLITZ_LEVELS)?.periods())?),
        "full_shift" => Arc::new(FullShift::new(2)?),
        "one_point" => Arc::new(OnePointCompactification::new()),
        "extended_integers" => Arc::new(extended_integers()),
        "glued" => Arc::new(GluedCompactification::new()),
        other => return Err(Error::Config(format!("unknown system `{other}`"))),
    })
}
