use serde::Serialize;

use super::{along_table, banach_table, tabulate, EstimatorParams, Mode, Observable, ObservableOrbit, OrbitFunction, OrbitTable};
use crate::error::{Error, Result};
use crate::group::{inv_product, FolnerSequence, GroupElement, Window};
use crate::systems::{NetSet, Point, System};
use crate::verdict::{Outcome, Verdict};

/// `K ↦ Σ_{g ∈ K} f(g)`.
pub fn sum_functional(f: impl Fn(&GroupElement) -> f64) -> impl Fn(&Window) -> f64 {
    move |k| k.cells().map(|g| f(&g)).sum()
}

/// Property (𝔖) for one pair of windows:
/// `H(K') ≤ (1/|K|) Σ_{g ∈ K⁻¹K'} H(K + g)`.
pub fn check_s_property(h: &dyn Fn(&Window) -> f64, k: &Window, k_prime: &Window, tolerance: f64) -> Result<Verdict> {
    if k.dim() != k_prime.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: k_prime.dim() });
    }
    let lhs = h(k_prime);
    let domain = inv_product(k, k_prime);
    let total: f64 = domain.cells().map(|g| h(&k.translate(&g))).sum();
    let rhs = total / k.measure() as f64;
    Ok(Verdict::le("s_property", format!("K={k},K'={k_prime}"), lhs, rhs, tolerance))
}

/// Outcome of the majorizing transfer check: the hypothesis on `f, h` and the
/// conclusion on their averages, reported separately.
#[derive(Clone, Debug, Serialize)]
pub struct MajorizingReport {
    pub precondition: Verdict,
    pub conclusion: Verdict,
    /// The `δ = εδ'/(4·max(‖h‖, 1))` the conclusion was tested at.
    pub delta: f64,
}

/// For each `(f∘orbit(x), h∘orbit(x))` pair: checks that `f` is
/// `ε/2`-`δ'`-majorizing for `h` on the tabulated orbit, then that `A_F f(x) ≤ δ`
/// forces `A_F h(x) ≤ ε`, and the same for the translate-sup `A`.
pub fn check_majorizing_transfer(
    pairs: &[(&dyn OrbitFunction, &dyn OrbitFunction)],
    h_bound: f64,
    eps: f64,
    delta_prime: f64,
    family: &FolnerSequence,
    params: &EstimatorParams,
) -> Result<MajorizingReport> {
    if !(eps > 0.0 && delta_prime > 0.0) {
        return Err(Error::InvalidParameter { name: "eps", reason: "ε and δ' must be positive".into() });
    }
    let delta = eps * delta_prime / (4.0 * h_bound.max(1.0));
    let tol = params.tolerance_for(pairs.iter().all(|(f, h)| f.is_exact() && h.is_exact()));
    let label = format!("eps={eps},delta'={delta_prime},delta={delta}");
    let (mut pre_lhs, mut concl_lhs) = (0.0f64, f64::NEG_INFINITY);
    let mut triggered = 0usize;
    for (f, h) in pairs {
        let ft = tabulate(*f, family, params, Mode::BanachSup)?;
        let ht = tabulate(*h, family, params, Mode::BanachSup)?;
        for (fv, hv) in ft.values().iter().zip(ht.values()) {
            if *fv <= delta_prime {
                pre_lhs = pre_lhs.max(*hv);
            }
        }
        let af = along_table(&ft, family, params, "f", tol);
        let ah = along_table(&ht, family, params, "h", tol);
        if af.value <= delta {
            triggered += 1;
            concl_lhs = concl_lhs.max(ah.value);
        }
        let bf = banach_table(&ft, family, params, "f", tol);
        let bh = banach_table(&ht, family, params, "h", tol);
        if bf.value <= delta {
            triggered += 1;
            concl_lhs = concl_lhs.max(bh.value);
        }
    }
    let precondition = Verdict::le("majorizing_precondition", label.clone(), pre_lhs, eps / 2.0, tol);
    let conclusion = if triggered == 0 {
        Verdict::new("majorizing_transfer", label, Outcome::Holds, 0.0, eps, tol).with_note("vacuous: no average fell below δ")
    } else {
        let mut v = Verdict::le("majorizing_transfer", label, concl_lhs, eps, tol);
        if !precondition.holds() && !v.holds() {
            v.outcome = Outcome::Inconclusive;
            v = v.with_note("precondition failed");
        }
        v.with_note(format!("{triggered} averages at or below δ"))
    };
    Ok(MajorizingReport { precondition, conclusion, delta })
}

/// [`check_majorizing_transfer`] for observables on the orbits of sampled
/// points.
#[allow(clippy::too_many_arguments)]
pub fn check_majorizing_observables(
    system: &dyn System,
    f: &Observable,
    h: &Observable,
    eps: f64,
    delta_prime: f64,
    points: &NetSet,
    family: &FolnerSequence,
    params: &EstimatorParams,
) -> Result<MajorizingReport> {
    points.check(system)?;
    let fo: Vec<ObservableOrbit> = points.points().iter().map(|x| ObservableOrbit { system, observable: f, x }).collect();
    let ho: Vec<ObservableOrbit> = points.points().iter().map(|x| ObservableOrbit { system, observable: h, x }).collect();
    let pairs: Vec<(&dyn OrbitFunction, &dyn OrbitFunction)> =
        fo.iter().zip(&ho).map(|(a, b)| (a as &dyn OrbitFunction, b as &dyn OrbitFunction)).collect();
    check_majorizing_transfer(&pairs, h.bound(), eps, delta_prime, family, params)
}

struct Implication {
    name: &'static str,
    premise: bool,
    lhs: f64,
    rhs: f64,
}

/// The four density implications for `G_ε = {g : φ(g) > ε}`:
/// (i) `A_F φ ≤ ε² ⇒ ua-dens_F(G_ε) ≤ ε`,
/// (ii) `ua-dens_F(G_ε) ≤ ε ⇒ A_F φ ≤ (‖φ‖+1)ε`,
/// and (iii), (iv) the same with `A` and `ub-dens`.
///
/// Each holds window by window, so at estimator scale they are exact and a
/// failure is reported as such even when estimates have not stabilized.
pub fn check_density_estimates_orbit(
    orbit: &dyn OrbitFunction,
    bound: f64,
    eps: f64,
    family: &FolnerSequence,
    params: &EstimatorParams,
) -> Result<Verdict> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter { name: "eps", reason: "must be positive".into() });
    }
    let tol = params.tolerance_for(orbit.is_exact());
    let table = tabulate(orbit, family, params, Mode::BanachSup)?;
    let ind: OrbitTable = table.map(|v| if v > eps { 1.0 } else { 0.0 })?;
    let af = along_table(&table, family, params, "f", tol).value;
    let a = banach_table(&table, family, params, "f", tol).value;
    let uad = along_table(&ind, family, params, "G", tol).value;
    let ubd = banach_table(&ind, family, params, "G", tol).value;
    let k = (bound + 1.0) * eps;
    let imps = [
        Implication { name: "i", premise: af <= eps * eps, lhs: uad, rhs: eps },
        Implication { name: "ii", premise: uad <= eps, lhs: af, rhs: k },
        Implication { name: "iii", premise: a <= eps * eps, lhs: ubd, rhs: eps },
        Implication { name: "iv", premise: ubd <= eps, lhs: a, rhs: k },
    ];
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
    let mut notes = Vec::new();
    let mut ok = true;
    for imp in &imps {
        if !imp.premise {
            notes.push(format!("{}: vacuous", imp.name));
            continue;
        }
        notes.push(format!("{}: {} ≤ {}", imp.name, imp.lhs, imp.rhs));
        ok &= imp.lhs <= imp.rhs + tol;
        if imp.lhs - imp.rhs > worst.0 {
            worst = (imp.lhs - imp.rhs, imp.lhs, imp.rhs);
        }
    }
    let (lhs, rhs) = if worst.0.is_finite() { (worst.1, worst.2) } else { (0.0, 0.0) };
    let mut v = Verdict::new(
        "density_estimates",
        format!("eps={eps},bound={bound},n_max={},radius={}", params.n_max, params.radius),
        Outcome::from_bool(ok),
        lhs,
        rhs,
        tol,
    );
    v.notes = notes;
    Ok(v)
}

/// [`check_density_estimates_orbit`] for `g ↦ f(g.x)`.
pub fn check_density_estimates(
    system: &dyn System,
    f: &Observable,
    x: &Point,
    eps: f64,
    family: &FolnerSequence,
    params: &EstimatorParams,
) -> Result<Verdict> {
    if !f.is_positive() {
        return Err(Error::InvalidParameter { name: "f", reason: "density estimates need a positive observable".into() });
    }
    check_density_estimates_orbit(&ObservableOrbit { system, observable: f, x }, f.bound(), eps, family, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::FnOrbit;
    use crate::group::{standard_folner, FolnerStyle};
    use crate::systems::Rotation;

    #[test]
    fn s_property_volumes() {
        let one = sum_functional(|_| 1.0);
        let k = Window::interval(0, 3).unwrap();
        let kp = Window::interval(5, 4).unwrap();
        let v = check_s_property(&one, &k, &kp, 1e-9).unwrap();
        assert!(v.holds());
        assert_eq!(v.lhs, 4.0);
        assert_eq!(v.rhs, inv_product(&k, &kp).measure() as f64);
        let cell = Window::cell(GroupElement::scalar(0));
        let v = check_s_property(&one, &cell, &kp, 1e-9).unwrap();
        assert_eq!(v.lhs, v.rhs);
    }

    #[test]
    fn density_estimates_trivial_cases() {
        let fam = standard_folner(1, FolnerStyle::Forward).unwrap();
        let p = EstimatorParams::with_scale(200, 200);
        let zero = FnOrbit::new("0", 1, |_| 0.0);
        let v = check_density_estimates_orbit(&zero, 1.0, 0.1, &fam, &p).unwrap();
        assert!(v.holds(), "{v:?}");
        let full = FnOrbit::new("1", 1, |_| 1.0);
        let v = check_density_estimates_orbit(&full, 1.0, 0.5, &fam, &p).unwrap();
        assert!(v.holds());
        assert!(v.notes.iter().any(|n| n == "i: vacuous"));
    }

    #[test]
    fn majorizing_identity_and_failure() {
        let r = Rotation::new(1, 7).unwrap();
        let fam = standard_folner(1, FolnerStyle::Forward).unwrap();
        let p = EstimatorParams::with_scale(50, 50);
        let pts = r.net(0.2).unwrap();
        let f = Observable::new("x", 1.0, |p| match p {
            Point::Angle(a) => a.to_f64(),
            _ => 0.0,
        });
        let eps = 0.4;
        let rep = check_majorizing_observables(&r, &f, &f, eps, eps / 2.0, &pts, &fam, &p).unwrap();
        assert!(rep.precondition.holds() && rep.conclusion.holds());
        let zero = Observable::constant(0.0);
        let lifted = Observable::constant(eps);
        let rep = check_majorizing_observables(&r, &zero, &lifted, eps, 0.1, &pts, &fam, &p).unwrap();
        assert!(!rep.precondition.holds());
    }
}
